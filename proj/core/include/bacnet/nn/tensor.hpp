#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace bacnet::nn {

#ifdef BACNET_REAL_FLOAT32
using real = float;
#else
using real = double;
#endif

using Shape = std::vector<int>;

std::size_t numel(const Shape& shape) noexcept;
std::string to_string(const Shape& shape);

/// Dense row-major array. Activations are NCHW; weights use the layout of the
/// layer that owns them (OIHW for convolutions, out x in for linear layers).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, real fill = real(0));
    Tensor(Shape shape, std::vector<real> data);

    const Shape& shape() const noexcept { return shape_; }
    int dim(std::size_t i) const noexcept { return shape_[i]; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    real* data() noexcept { return data_.data(); }
    const real* data() const noexcept { return data_.data(); }
    std::span<real> values() noexcept { return data_; }
    std::span<const real> values() const noexcept { return data_; }

    real& operator[](std::size_t i) noexcept { return data_[i]; }
    real operator[](std::size_t i) const noexcept { return data_[i]; }

    /// NCHW element access; only meaningful for rank-4 tensors.
    real& at(int n, int c, int h, int w) noexcept { return data_[offset4(n, c, h, w)]; }
    real at(int n, int c, int h, int w) const noexcept { return data_[offset4(n, c, h, w)]; }

    void fill(real v) noexcept;
    /// Same data, new shape with equal element count; throws ShapeMismatch otherwise.
    Tensor reshaped(Shape shape) const;
    bool all_finite() const noexcept;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::size_t offset4(int n, int c, int h, int w) const noexcept {
        return ((static_cast<std::size_t>(n) * shape_[1] + static_cast<std::size_t>(c)) * shape_[2] +
                static_cast<std::size_t>(h)) *
                   shape_[3] +
               static_cast<std::size_t>(w);
    }

    Shape shape_;
    std::vector<real> data_;
};

}  // namespace bacnet::nn
