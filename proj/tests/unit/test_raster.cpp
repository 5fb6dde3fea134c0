#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "bacnet/error.hpp"
#include "bacnet/raster.hpp"
#include "bacnet/rng.hpp"
#include "support/image_fixtures.hpp"

using namespace bacnet::raster;
using bacnet::Errc;

namespace {

float u8(int v) { return static_cast<float>(v) / 255.0f; }

void check_rgb(const RasterImage& img, int y, int x, int r, int g, int b) {
    CHECK(img.at(y, x, 0) == doctest::Approx(u8(r)).epsilon(1e-6));
    CHECK(img.at(y, x, 1) == doctest::Approx(u8(g)).epsilon(1e-6));
    CHECK(img.at(y, x, 2) == doctest::Approx(u8(b)).epsilon(1e-6));
}

Errc code_of(auto&& fn) {
    try {
        fn();
    } catch (const bacnet::Error& e) {
        return e.code();
    }
    FAIL("expected bacnet::Error");
    return Errc::IoError;
}

RasterImage noise(int w, int h, std::uint64_t seed) {
    bacnet::CounterRng rng(seed);
    RasterImage img(w, h);
    for (auto& v : img.pixels()) v = static_cast<float>(rng.uniform());
    return img;
}

// Direct two-dimensional evaluation of the separable filter, for comparison.
double naive_axis_weight(int out, int src, int in_size, int out_size) {
    const double scale = static_cast<double>(in_size) / out_size;
    const double support = scale > 1.0 ? kLanczosSupport * scale : kLanczosSupport;
    const double stretch = scale > 1.0 ? scale : 1.0;
    const double center = (out + 0.5) * scale - 0.5;
    if (std::abs(src - center) >= support) return 0.0;
    return lanczos_kernel((src - center) / stretch);
}

RasterImage naive_resize(const RasterImage& img, int tw, int th) {
    RasterImage out(tw, th);
    for (int y = 0; y < th; ++y) {
        for (int x = 0; x < tw; ++x) {
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0, wsum = 0.0;
                for (int sy = 0; sy < img.height(); ++sy) {
                    const double wy = img.height() == th ? (sy == y ? 1.0 : 0.0)
                                                         : naive_axis_weight(y, sy, img.height(), th);
                    if (wy == 0.0) continue;
                    for (int sx = 0; sx < img.width(); ++sx) {
                        const double wx = img.width() == tw ? (sx == x ? 1.0 : 0.0)
                                                            : naive_axis_weight(x, sx, img.width(), tw);
                        acc += wy * wx * img.at(sy, sx, c);
                        wsum += wy * wx;
                    }
                }
                out.at(y, x, c) = static_cast<float>(std::clamp(acc / wsum, 0.0, 1.0));
            }
        }
    }
    return out;
}

}  // namespace

TEST_CASE("png fixtures decode to their source pixels") {
    SUBCASE("rgb") {
        const auto img = decode_image(fixtures::kPngRgb2x2);
        REQUIRE(img.width() == 2);
        REQUIRE(img.height() == 2);
        check_rgb(img, 0, 0, 255, 0, 0);
        check_rgb(img, 0, 1, 0, 255, 0);
        check_rgb(img, 1, 0, 0, 0, 255);
        check_rgb(img, 1, 1, 10, 128, 250);
    }
    SUBCASE("gray is replicated") {
        const auto img = decode_image(fixtures::kPngGray2x2);
        check_rgb(img, 0, 0, 0, 0, 0);
        check_rgb(img, 0, 1, 64, 64, 64);
        check_rgb(img, 1, 0, 128, 128, 128);
        check_rgb(img, 1, 1, 255, 255, 255);
    }
    SUBCASE("16-bit gray keeps its precision") {
        const auto img = decode_image(fixtures::kPngGray16_2x2);
        CHECK(img.at(0, 1, 0) == doctest::Approx(1000.0 / 65535.0).epsilon(1e-6));
        CHECK(img.at(1, 0, 2) == doctest::Approx(40000.0 / 65535.0).epsilon(1e-6));
        CHECK(img.at(1, 1, 1) == doctest::Approx(1.0));
    }
    SUBCASE("alpha is dropped") {
        const auto rgba = decode_image(fixtures::kPngRgba2x2);
        const auto rgb = decode_image(fixtures::kPngRgb2x2);
        CHECK(rgba == rgb);
    }
    SUBCASE("palette expands") { CHECK(decode_image(fixtures::kPngPalette2x2) == decode_image(fixtures::kPngRgb2x2)); }
}

TEST_CASE("tiff fixtures decode like their png twins") {
    const auto rgb = decode_image(fixtures::kPngRgb2x2);
    CHECK(sniff_format(fixtures::kTiffRgb2x2) == ImageFormat::Tiff);
    CHECK(decode_image(fixtures::kTiffRgb2x2) == rgb);
    CHECK(decode_image(fixtures::kTiffRgbLzw2x2) == rgb);
    CHECK(decode_image(fixtures::kTiffGray2x2) == decode_image(fixtures::kPngGray2x2));
}

TEST_CASE("decode errors") {
    const std::vector<std::uint8_t> junk = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    CHECK(sniff_format(junk) == ImageFormat::Unknown);
    CHECK(code_of([&] { decode_image(junk); }) == Errc::UnsupportedFormat);

    auto truncated = fixtures::kPngRgb2x2;
    truncated.resize(40);
    CHECK(code_of([&] { decode_image(truncated); }) == Errc::CorruptFile);

    auto tiff = fixtures::kTiffRgb2x2;
    tiff.resize(30);
    CHECK(code_of([&] { decode_image(tiff); }) == Errc::CorruptFile);
}

TEST_CASE("png round trip is lossless at 8 bits and deterministic") {
    RasterImage img(5, 3);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 5; ++x)
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = u8((y * 50 + x * 17 + c * 80) % 256);
    const auto bytes = encode_png(img);
    CHECK(bytes == encode_png(img));
    CHECK(decode_image(bytes) == img);
}

TEST_CASE("files round trip and missing files raise IoError") {
    const std::filesystem::path dir = BACNET_TEST_TMP "/raster";
    std::filesystem::create_directories(dir);
    const auto img = decode_image(fixtures::kPngRgb2x2);
    write_png(dir / "a.png", img);
    CHECK(read_image(dir / "a.png") == img);
    CHECK(code_of([&] { read_image(dir / "missing.png"); }) == Errc::IoError);
}

TEST_CASE("crop copies the exact region") {
    const auto img = noise(9, 7, 1);
    const auto out = crop(img, {2, 3, 4});
    REQUIRE(out.width() == 4);
    REQUIRE(out.height() == 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x)
            for (int c = 0; c < 3; ++c) CHECK(out.at(y, x, c) == img.at(y + 3, x + 2, c));
    CHECK(crop(img, {0, 0, 7}).height() == 7);
    CHECK(code_of([&] { crop(img, {6, 0, 4}); }) == Errc::OutOfBounds);
    CHECK(code_of([&] { crop(img, {0, 4, 4}); }) == Errc::OutOfBounds);
    CHECK(code_of([&] { crop(img, {-1, 0, 2}); }) == Errc::OutOfBounds);
    CHECK(code_of([&] { crop(img, {0, 0, 0}); }) == Errc::OutOfBounds);
}

TEST_CASE("lanczos kernel values") {
    CHECK(lanczos_kernel(0.0) == 1.0);
    CHECK(lanczos_kernel(1.0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(lanczos_kernel(2.0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(lanczos_kernel(3.0) == 0.0);
    CHECK(lanczos_kernel(-4.5) == 0.0);
    const double pi = 3.14159265358979323846;
    const double x = 0.5;
    CHECK(lanczos_kernel(x) == doctest::Approx(std::sin(pi * x) / (pi * x) * std::sin(pi * x / 3) / (pi * x / 3)));
    CHECK(lanczos_kernel(-1.3) == lanczos_kernel(1.3));
}

TEST_CASE("lanczos resize matches a direct two-dimensional evaluation") {
    const int sizes[][4] = {{13, 11, 5, 7}, {6, 6, 17, 9}, {20, 8, 20, 3}, {4, 9, 11, 9}, {31, 29, 7, 12}};
    for (const auto& s : sizes) {
        CAPTURE(s[0]);
        CAPTURE(s[2]);
        const auto img = noise(s[0], s[1], static_cast<std::uint64_t>(s[0] * 100 + s[2]));
        const auto fast = lanczos_resize(img, s[2], s[3]);
        const auto slow = naive_resize(img, s[2], s[3]);
        double worst = 0.0;
        for (std::size_t i = 0; i < fast.pixels().size(); ++i)
            worst = std::max(worst, static_cast<double>(std::abs(fast.pixels()[i] - slow.pixels()[i])));
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("lanczos resize properties") {
    SUBCASE("identity size is an exact copy") {
        const auto img = noise(10, 8, 3);
        CHECK(lanczos_resize(img, 10, 8) == img);
    }
    SUBCASE("constant images stay constant") {
        RasterImage img(37, 23, 0.4f);
        for (auto [w, h] : {std::pair{224, 224}, std::pair{5, 3}, std::pair{100, 7}}) {
            const auto out = lanczos_resize(img, w, h);
            for (float v : out.pixels()) CHECK(v == doctest::Approx(0.4f).epsilon(1e-6));
        }
    }
    SUBCASE("outputs stay in range") {
        RasterImage img(16, 16);
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x)
                for (int c = 0; c < 3; ++c) img.at(y, x, c) = ((x / 2 + y / 3) % 2) ? 1.0f : 0.0f;
        CHECK(lanczos_resize(img, 45, 37).valid());
        CHECK(lanczos_resize(img, 5, 6).valid());
    }
    SUBCASE("invalid targets") {
        const auto img = noise(4, 4, 5);
        CHECK(code_of([&] { lanczos_resize(img, 0, 4); }) == Errc::InvalidTarget);
        CHECK(code_of([&] { lanczos_resize(img, 4, -2); }) == Errc::InvalidTarget);
        CHECK(code_of([&] { lanczos_resize(RasterImage(), 4, 4); }) == Errc::InvalidTarget);
    }
}
