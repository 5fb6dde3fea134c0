// PNG (libpng) and TIFF (libtiff) codecs for RasterImage.
#include <png.h>
#include <tiffio.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <string>

#include "bacnet/error.hpp"
#include "bacnet/raster.hpp"

namespace bacnet::raster {

ImageFormat sniff_format(std::span<const std::uint8_t> bytes) noexcept {
    static constexpr std::uint8_t kPng[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPng, 8) == 0) return ImageFormat::Png;
    if (bytes.size() >= 4 && ((bytes[0] == 'I' && bytes[1] == 'I' && bytes[2] == 42 && bytes[3] == 0) ||
                              (bytes[0] == 'M' && bytes[1] == 'M' && bytes[2] == 0 && bytes[3] == 42))) {
        return ImageFormat::Tiff;
    }
    return ImageFormat::Unknown;
}

namespace {

// ---------------------------------------------------------------------------
// PNG

struct PngReadSource {
    std::span<const std::uint8_t> bytes;
    std::size_t offset = 0;
};

void png_read_from_span(png_structp png, png_bytep out, png_size_t length) {
    auto* src = static_cast<PngReadSource*>(png_get_io_ptr(png));
    if (src->offset + length > src->bytes.size()) png_error(png, "unexpected end of stream");
    std::memcpy(out, src->bytes.data() + src->offset, length);
    src->offset += length;
}

void png_error_to_longjmp(png_structp png, png_const_charp msg) {
    auto* text = static_cast<std::string*>(png_get_error_ptr(png));
    if (text != nullptr) *text = msg;
    png_longjmp(png, 1);
}

void png_warning_ignore(png_structp, png_const_charp) {}

// Decodes into `samples` (16-bit expanded rows). Kept free of non-trivial
// locals across setjmp; returns false with `message` set on failure.
bool png_decode_raw(std::span<const std::uint8_t> bytes, std::vector<std::uint16_t>& samples, int& width, int& height,
                    bool& sixteen, std::string& message) {
    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_error_to_longjmp, png_warning_ignore);
    if (png == nullptr) {
        message = "png_create_read_struct failed";
        return false;
    }
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        message = "png_create_info_struct failed";
        return false;
    }
    PngReadSource source{bytes, 0};
    std::vector<png_bytep>* rows = nullptr;
    std::vector<std::uint8_t>* buffer = nullptr;
    if (setjmp(png_jmpbuf(png))) {
        delete rows;
        delete buffer;
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    png_set_read_fn(png, &source, png_read_from_span);
    png_read_info(png, info);

    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    if (depth == 16) png_set_swap(png);  // host little-endian 16-bit samples
    png_read_update_info(png, info);

    width = static_cast<int>(png_get_image_width(png, info));
    height = static_cast<int>(png_get_image_height(png, info));
    const int out_depth = png_get_bit_depth(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    if (png_get_channels(png, info) != 3) png_error(png, "unexpected channel layout");

    buffer = new std::vector<std::uint8_t>(rowbytes * static_cast<std::size_t>(height));
    rows = new std::vector<png_bytep>(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) (*rows)[static_cast<std::size_t>(y)] = buffer->data() + rowbytes * y;
    png_read_image(png, rows->data());
    png_read_end(png, nullptr);

    const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3;
    samples.resize(count);
    sixteen = out_depth == 16;
    if (sixteen) {
        std::memcpy(samples.data(), buffer->data(), count * 2);
    } else {
        for (std::size_t i = 0; i < count; ++i) samples[i] = (*buffer)[i];
    }
    delete rows;
    delete buffer;
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

RasterImage decode_png(std::span<const std::uint8_t> bytes) {
    std::vector<std::uint16_t> samples;
    int width = 0;
    int height = 0;
    bool sixteen = false;
    std::string message;
    if (!png_decode_raw(bytes, samples, width, height, sixteen, message)) {
        throw Error(Errc::CorruptFile, "png: " + message);
    }
    const float maxv = sixteen ? 65535.0f : 255.0f;
    std::vector<float> pixels(samples.size());
    std::transform(samples.begin(), samples.end(), pixels.begin(),
                   [maxv](std::uint16_t v) { return static_cast<float>(v) / maxv; });
    return RasterImage(width, height, std::move(pixels));
}

struct PngWriteSink {
    std::vector<std::uint8_t>* out;
};

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
    auto* sink = static_cast<PngWriteSink*>(png_get_io_ptr(png));
    sink->out->insert(sink->out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

bool png_encode_raw(const std::uint8_t* rgb, int width, int height, std::vector<std::uint8_t>& out,
                    std::string& message) {
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_error_to_longjmp, png_warning_ignore);
    if (png == nullptr) return false;
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_write_struct(&png, nullptr);
        return false;
    }
    PngWriteSink sink{&out};
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_set_write_fn(png, &sink, png_write_to_vector, png_flush_noop);
    png_set_compression_level(png, 6);
    png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_SUB);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(width) * 3;
    for (int y = 0; y < height; ++y) {
        png_write_row(png, const_cast<png_bytep>(rgb + stride * static_cast<std::size_t>(y)));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

// ---------------------------------------------------------------------------
// TIFF

struct TiffMemory {
    std::span<const std::uint8_t> bytes;
    toff_t offset = 0;
};

tsize_t tiff_read(thandle_t handle, tdata_t buf, tsize_t size) {
    auto* mem = static_cast<TiffMemory*>(handle);
    if (mem->offset >= mem->bytes.size()) return 0;
    const auto n = std::min<toff_t>(static_cast<toff_t>(size), mem->bytes.size() - mem->offset);
    std::memcpy(buf, mem->bytes.data() + mem->offset, n);
    mem->offset += n;
    return static_cast<tsize_t>(n);
}

tsize_t tiff_write(thandle_t, tdata_t, tsize_t) { return 0; }

toff_t tiff_seek(thandle_t handle, toff_t off, int whence) {
    auto* mem = static_cast<TiffMemory*>(handle);
    switch (whence) {
        case SEEK_SET: mem->offset = off; break;
        case SEEK_CUR: mem->offset += off; break;
        case SEEK_END: mem->offset = mem->bytes.size() + off; break;
        default: return static_cast<toff_t>(-1);
    }
    return mem->offset;
}

int tiff_close(thandle_t) { return 0; }
toff_t tiff_size(thandle_t handle) { return static_cast<TiffMemory*>(handle)->bytes.size(); }
int tiff_map(thandle_t, tdata_t*, toff_t*) { return 0; }
void tiff_unmap(thandle_t, tdata_t, toff_t) {}

struct TiffCloser {
    void operator()(TIFF* t) const noexcept { TIFFClose(t); }
};

RasterImage decode_tiff(std::span<const std::uint8_t> bytes) {
    TIFFSetErrorHandler(nullptr);
    TIFFSetWarningHandler(nullptr);
    TiffMemory mem{bytes, 0};
    std::unique_ptr<TIFF, TiffCloser> tif(TIFFClientOpen("memory", "rm", &mem, tiff_read, tiff_write, tiff_seek,
                                                         tiff_close, tiff_size, tiff_map, tiff_unmap));
    if (!tif) throw Error(Errc::CorruptFile, "tiff: cannot parse header");

    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint16_t spp = 1;
    std::uint16_t bps = 8;
    std::uint16_t photometric = PHOTOMETRIC_RGB;
    std::uint16_t planar = PLANARCONFIG_CONTIG;
    if (!TIFFGetField(tif.get(), TIFFTAG_IMAGEWIDTH, &width) || !TIFFGetField(tif.get(), TIFFTAG_IMAGELENGTH, &height) ||
        width == 0 || height == 0) {
        throw Error(Errc::CorruptFile, "tiff: missing image dimensions");
    }
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLESPERPIXEL, &spp);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_BITSPERSAMPLE, &bps);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_PLANARCONFIG, &planar);
    if (!TIFFGetField(tif.get(), TIFFTAG_PHOTOMETRIC, &photometric)) {
        photometric = spp >= 3 ? PHOTOMETRIC_RGB : PHOTOMETRIC_MINISBLACK;
    }

    const auto w = static_cast<int>(width);
    const auto h = static_cast<int>(height);
    RasterImage img(w, h);

    const bool direct = planar == PLANARCONFIG_CONTIG && (bps == 8 || bps == 16) &&
                        ((photometric == PHOTOMETRIC_RGB && spp >= 3) ||
                         (photometric == PHOTOMETRIC_MINISBLACK && spp >= 1) ||
                         (photometric == PHOTOMETRIC_MINISWHITE && spp >= 1));
    if (direct) {
        std::vector<std::uint8_t> line(static_cast<std::size_t>(TIFFScanlineSize(tif.get())));
        const float maxv = bps == 16 ? 65535.0f : 255.0f;
        for (int y = 0; y < h; ++y) {
            if (TIFFReadScanline(tif.get(), line.data(), static_cast<std::uint32_t>(y), 0) < 0) {
                throw Error(Errc::CorruptFile, "tiff: scanline " + std::to_string(y) + " unreadable");
            }
            for (int x = 0; x < w; ++x) {
                for (int c = 0; c < 3; ++c) {
                    const int src_c = photometric == PHOTOMETRIC_RGB ? c : 0;
                    const std::size_t idx = static_cast<std::size_t>(x) * spp + static_cast<std::size_t>(src_c);
                    float v = 0.0f;
                    if (bps == 16) {
                        std::uint16_t s = 0;
                        std::memcpy(&s, line.data() + idx * 2, 2);
                        v = static_cast<float>(s) / maxv;
                    } else {
                        v = static_cast<float>(line[idx]) / maxv;
                    }
                    if (photometric == PHOTOMETRIC_MINISWHITE) v = 1.0f - v;
                    img.at(y, x, c) = v;
                }
            }
        }
        return img;
    }

    // Everything else (palette, YCbCr, separate planes, odd depths) via the RGBA path.
    std::vector<std::uint32_t> raster(static_cast<std::size_t>(width) * height);
    if (!TIFFReadRGBAImageOriented(tif.get(), width, height, raster.data(), ORIENTATION_TOPLEFT, 0)) {
        throw Error(Errc::CorruptFile, "tiff: unsupported or damaged image data");
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::uint32_t p = raster[static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x)];
            img.at(y, x, 0) = static_cast<float>(TIFFGetR(p)) / 255.0f;
            img.at(y, x, 1) = static_cast<float>(TIFFGetG(p)) / 255.0f;
            img.at(y, x, 2) = static_cast<float>(TIFFGetB(p)) / 255.0f;
        }
    }
    return img;
}

}  // namespace

RasterImage decode_image(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) throw Error(Errc::CorruptFile, "empty stream");
    switch (sniff_format(bytes)) {
        case ImageFormat::Png: return decode_png(bytes);
        case ImageFormat::Tiff: return decode_tiff(bytes);
        case ImageFormat::Unknown: break;
    }
    throw Error(Errc::UnsupportedFormat, "not a PNG or TIFF stream");
}

std::vector<std::uint8_t> encode_png(const RasterImage& img) {
    if (img.empty()) throw Error(Errc::InvalidTarget, "cannot encode an empty image");
    std::vector<std::uint8_t> rgb(img.pixels().size());
    std::transform(img.pixels().begin(), img.pixels().end(), rgb.begin(), [](float v) {
        const float c = std::clamp(v, 0.0f, 1.0f);
        return static_cast<std::uint8_t>(std::lround(c * 255.0f));
    });
    std::vector<std::uint8_t> out;
    std::string message;
    if (!png_encode_raw(rgb.data(), img.width(), img.height(), out, message)) {
        throw Error(Errc::IoError, "png encode failed: " + message);
    }
    return out;
}

}  // namespace bacnet::raster
