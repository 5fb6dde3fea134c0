#include "bacnet/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "bacnet/error.hpp"

namespace bacnet::nn {

std::size_t numel(const Shape& shape) noexcept {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t acc, int d) { return acc * static_cast<std::size_t>(d); });
}

std::string to_string(const Shape& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

Tensor::Tensor(Shape shape, real fill) : shape_(std::move(shape)), data_(numel(shape_), fill) {
    if (std::any_of(shape_.begin(), shape_.end(), [](int d) { return d < 0; })) {
        throw Error(Errc::ShapeMismatch, "negative dimension in " + to_string(shape_));
    }
}

Tensor::Tensor(Shape shape, std::vector<real> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != numel(shape_)) {
        throw Error(Errc::ShapeMismatch, std::to_string(data_.size()) + " values for shape " + to_string(shape_));
    }
}

void Tensor::fill(real v) noexcept { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::reshaped(Shape shape) const {
    if (numel(shape) != data_.size()) {
        throw Error(Errc::ShapeMismatch, "cannot view " + to_string(shape_) + " as " + to_string(shape));
    }
    return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](real v) { return std::isfinite(v); });
}

}  // namespace bacnet::nn
