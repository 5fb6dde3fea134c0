#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace bacnet::raster {

/// Decoded RGB image. Samples are interleaved row-major (y, x, channel) and
/// normalized to [0, 1]; quantization to 8 bits happens only on encode.
class RasterImage {
public:
    static constexpr int kChannels = 3;

    RasterImage() = default;
    RasterImage(int width, int height, float fill = 0.0f);
    RasterImage(int width, int height, std::vector<float> pixels);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return kChannels; }
    bool empty() const noexcept { return pixels_.empty(); }

    float& at(int y, int x, int c) noexcept { return pixels_[index(y, x, c)]; }
    float at(int y, int x, int c) const noexcept { return pixels_[index(y, x, c)]; }

    std::span<float> pixels() noexcept { return pixels_; }
    std::span<const float> pixels() const noexcept { return pixels_; }

    /// True when every sample is finite and inside [0, 1].
    bool valid() const noexcept;

    friend bool operator==(const RasterImage&, const RasterImage&) = default;

private:
    std::size_t index(int y, int x, int c) const noexcept {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) *
                   kChannels +
               static_cast<std::size_t>(c);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<float> pixels_;
};

/// Square crop anchored at (x, y).
struct CropRect {
    int x = 0;
    int y = 0;
    int side = 0;

    bool fits(int width, int height) const noexcept {
        return side > 0 && x >= 0 && y >= 0 && x + side <= width && y + side <= height;
    }

    friend bool operator==(const CropRect&, const CropRect&) = default;
};

enum class ImageFormat { Png, Tiff, Unknown };

ImageFormat sniff_format(std::span<const std::uint8_t> bytes) noexcept;

/// Decodes PNG or TIFF. Grayscale is replicated to three channels and alpha is
/// dropped. Throws Error{UnsupportedFormat | CorruptFile}.
RasterImage decode_image(std::span<const std::uint8_t> bytes);

/// 8-bit RGB PNG with fixed compression settings, so equal images give equal bytes.
std::vector<std::uint8_t> encode_png(const RasterImage& img);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

RasterImage read_image(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RasterImage& img);

/// Throws Error{OutOfBounds} unless rect fits inside img.
RasterImage crop(const RasterImage& img, const CropRect& rect);

inline constexpr int kLanczosSupport = 3;

/// Lanczos window sinc(x) * sinc(x / a) for |x| < a, else 0.
double lanczos_kernel(double x, int a = kLanczosSupport) noexcept;

/// Separable Lanczos-3 resampling. When shrinking, the kernel is stretched by
/// the scale factor. Taps are restricted to the image and their weights are
/// renormalized per output pixel; results are clamped to [0, 1]. An axis whose
/// size is unchanged is copied verbatim. Throws Error{InvalidTarget}.
RasterImage lanczos_resize(const RasterImage& img, int target_width, int target_height);

}  // namespace bacnet::raster
