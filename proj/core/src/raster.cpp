#include "bacnet/raster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>

#include "bacnet/error.hpp"

namespace bacnet::raster {

RasterImage::RasterImage(int width, int height, float fill)
    : width_(width),
      height_(height),
      pixels_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * kChannels, fill) {
    if (width <= 0 || height <= 0) {
        throw Error(Errc::InvalidTarget, "image dimensions must be positive");
    }
}

RasterImage::RasterImage(int width, int height, std::vector<float> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width <= 0 || height <= 0 ||
        pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * kChannels) {
        throw Error(Errc::ShapeMismatch, "pixel buffer does not match " + std::to_string(width) + "x" +
                                             std::to_string(height) + "x3");
    }
}

bool RasterImage::valid() const noexcept {
    return std::all_of(pixels_.begin(), pixels_.end(),
                       [](float v) { return std::isfinite(v) && v >= 0.0f && v <= 1.0f; });
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(Errc::IoError, "read failed: " + path.string());
    return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot create " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::IoError, "write failed: " + path.string());
}

RasterImage read_image(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    try {
        return decode_image(bytes);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

void write_png(const std::filesystem::path& path, const RasterImage& img) { write_file(path, encode_png(img)); }

RasterImage crop(const RasterImage& img, const CropRect& rect) {
    if (!rect.fits(img.width(), img.height())) {
        throw Error(Errc::OutOfBounds, "crop (" + std::to_string(rect.x) + "," + std::to_string(rect.y) + "," +
                                           std::to_string(rect.side) + ") exceeds " + std::to_string(img.width()) +
                                           "x" + std::to_string(img.height()));
    }
    RasterImage out(rect.side, rect.side);
    const auto row = static_cast<std::size_t>(rect.side) * RasterImage::kChannels;
    for (int i = 0; i < rect.side; ++i) {
        const auto src = img.pixels().subspan(
            (static_cast<std::size_t>(rect.y + i) * img.width() + rect.x) * RasterImage::kChannels, row);
        std::copy(src.begin(), src.end(), out.pixels().begin() + static_cast<std::ptrdiff_t>(i * row));
    }
    return out;
}

double lanczos_kernel(double x, int a) noexcept {
    x = std::abs(x);
    if (x >= a) return 0.0;
    if (x < 1e-12) return 1.0;
    const double px = std::numbers::pi * x;
    return a * std::sin(px) * std::sin(px / a) / (px * px);
}

namespace {

// Contribution list for one output coordinate: taps [first, first + weights.size()).
struct Taps {
    int first = 0;
    std::vector<double> weights;
};

std::vector<Taps> plan_axis(int in_size, int out_size) {
    const double scale = static_cast<double>(in_size) / out_size;
    const double stretch = std::max(1.0, scale);
    const double radius = kLanczosSupport * stretch;
    std::vector<Taps> plan(static_cast<std::size_t>(out_size));
    for (int o = 0; o < out_size; ++o) {
        const double center = (o + 0.5) * scale - 0.5;
        const int lo = std::max(0, static_cast<int>(std::floor(center - radius)) + 1);
        const int hi = std::min(in_size - 1, static_cast<int>(std::ceil(center + radius)) - 1);
        Taps& t = plan[static_cast<std::size_t>(o)];
        t.first = lo;
        double total = 0.0;
        for (int i = lo; i <= hi; ++i) {
            const double w = lanczos_kernel((i - center) / stretch);
            t.weights.push_back(w);
            total += w;
        }
        // total > 0 always: the nearest tap sits within half a pixel of center
        for (double& w : t.weights) w /= total;
    }
    return plan;
}

float clamp_unit(double v) noexcept { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

}  // namespace

RasterImage lanczos_resize(const RasterImage& img, int target_width, int target_height) {
    if (target_width <= 0 || target_height <= 0) {
        throw Error(Errc::InvalidTarget,
                    "target " + std::to_string(target_width) + "x" + std::to_string(target_height));
    }
    if (img.empty()) throw Error(Errc::InvalidTarget, "empty source image");

    const int in_w = img.width();
    const int in_h = img.height();
    const auto row_len = static_cast<std::size_t>(target_width) * 3;

    // Horizontal pass into an unclamped buffer; clamping happens once at the end.
    std::vector<double> mid(static_cast<std::size_t>(in_h) * row_len);
    if (target_width == in_w) {
        std::copy(img.pixels().begin(), img.pixels().end(), mid.begin());
    } else {
        const auto plan = plan_axis(in_w, target_width);
        for (int y = 0; y < in_h; ++y) {
            double* dst = &mid[static_cast<std::size_t>(y) * row_len];
            for (int x = 0; x < target_width; ++x) {
                const Taps& t = plan[static_cast<std::size_t>(x)];
                double acc[3] = {0.0, 0.0, 0.0};
                for (std::size_t k = 0; k < t.weights.size(); ++k) {
                    const int sx = t.first + static_cast<int>(k);
                    for (int c = 0; c < 3; ++c) acc[c] += t.weights[k] * img.at(y, sx, c);
                }
                for (int c = 0; c < 3; ++c) dst[static_cast<std::size_t>(x) * 3 + c] = acc[c];
            }
        }
    }

    RasterImage out(target_width, target_height);
    if (target_height == in_h) {
        std::transform(mid.begin(), mid.end(), out.pixels().begin(), clamp_unit);
        return out;
    }
    const auto plan = plan_axis(in_h, target_height);
    std::vector<double> acc(row_len);
    for (int y = 0; y < target_height; ++y) {
        const Taps& t = plan[static_cast<std::size_t>(y)];
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t k = 0; k < t.weights.size(); ++k) {
            const double* src = &mid[static_cast<std::size_t>(t.first + static_cast<int>(k)) * row_len];
            const double wk = t.weights[k];
            for (std::size_t i = 0; i < row_len; ++i) acc[i] += wk * src[i];
        }
        std::transform(acc.begin(), acc.end(), &out.at(y, 0, 0), clamp_unit);
    }
    return out;
}

}  // namespace bacnet::raster
