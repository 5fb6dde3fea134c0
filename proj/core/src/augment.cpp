#include "bacnet/augment.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "bacnet/error.hpp"
#include "bacnet/rng.hpp"

namespace bacnet {

namespace fs = std::filesystem;

void AugmentationConfig::validate() const {
    if (crop_sizes.empty()) throw Error(Errc::InvalidConfig, "crop_sizes is empty");
    for (std::size_t i = 0; i < crop_sizes.size(); ++i) {
        if (crop_sizes[i] <= 0) throw Error(Errc::InvalidConfig, "crop sizes must be positive");
        if (i > 0 && crop_sizes[i] <= crop_sizes[i - 1]) {
            throw Error(Errc::InvalidConfig, "crop sizes must be strictly increasing");
        }
    }
    if (crops_per_size < 1) throw Error(Errc::InvalidConfig, "crops_per_size must be >= 1");
    if (output_side <= 0) throw Error(Errc::InvalidConfig, "output_side must be positive");
}

std::vector<raster::CropRect> plan_crops(int img_w, int img_h, const AugmentationConfig& cfg,
                                         std::uint64_t per_image_seed) {
    cfg.validate();
    if (img_w <= 0 || img_h <= 0) throw Error(Errc::InvalidTarget, "image dimensions must be positive");
    CounterRng rng(cfg.seed, per_image_seed);
    std::vector<raster::CropRect> rects;
    const int limit = std::min(img_w, img_h);
    for (int side : cfg.crop_sizes) {
        if (side > limit) continue;
        for (int j = 0; j < cfg.crops_per_size; ++j) {
            const auto x = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(img_w - side + 1)));
            const auto y = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(img_h - side + 1)));
            rects.push_back({x, y, side});
        }
    }
    return rects;
}

std::size_t expected_outputs(int img_w, int img_h, const AugmentationConfig& cfg) {
    const int limit = std::min(img_w, img_h);
    const auto fitting = std::count_if(cfg.crop_sizes.begin(), cfg.crop_sizes.end(), [&](int s) { return s <= limit; });
    return 1 + static_cast<std::size_t>(cfg.crops_per_size) * static_cast<std::size_t>(fitting);
}

std::vector<AugmentedImage> augment_image(const raster::RasterImage& img, const AugmentationConfig& cfg,
                                          std::uint64_t per_image_seed) {
    const auto rects = plan_crops(img.width(), img.height(), cfg, per_image_seed);
    const int side = cfg.output_side;
    std::vector<AugmentedImage> out;
    out.reserve(rects.size() + 1);

    auto record = [&](std::optional<raster::CropRect> crop) {
        SampleRecord r;
        r.crop = crop;
        r.source_width = img.width();
        r.source_height = img.height();
        return r;
    };
    out.push_back({raster::lanczos_resize(img, side, side), record(std::nullopt)});
    for (const auto& rect : rects) {
        out.push_back({raster::lanczos_resize(raster::crop(img, rect), side, side), record(rect)});
    }
    return out;
}

std::uint64_t per_image_seed(const std::string& relative_path) noexcept { return fnv1a64(relative_path); }

std::string augmented_name(const std::string& stem, const std::optional<raster::CropRect>& crop, int index_in_size) {
    if (!crop) return stem + "_orig.png";
    return stem + "_s" + std::to_string(crop->side) + "_c" + std::to_string(index_in_size) + ".png";
}

DatasetManifest augment_dataset(const fs::path& src_root, const fs::path& dst_root, const AugmentationConfig& cfg,
                                int jobs) {
    cfg.validate();
    const auto classes = list_classes(src_root);

    struct Item {
        std::string label;
        fs::path file;
        std::string relative;
    };
    std::vector<Item> items;
    for (const auto& label : classes) {
        for (const auto& file : list_images(src_root / label)) {
            items.push_back({label, file, fs::relative(file, src_root).generic_string()});
        }
    }

    std::error_code ec;
    fs::create_directories(dst_root, ec);
    if (ec) throw Error(Errc::IoError, "cannot create " + dst_root.string() + ": " + ec.message());
    for (const auto& label : classes) fs::create_directories(dst_root / label);

    std::vector<std::vector<SampleRecord>> results(items.size());
    std::vector<std::exception_ptr> errors(items.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < items.size(); i = next++) {
            try {
                const auto& item = items[i];
                const auto img = raster::read_image(item.file);
                auto outputs = augment_image(img, cfg, per_image_seed(item.relative));
                const std::string stem = item.file.stem().string();
                int index_in_size = 0;
                int previous_side = -1;
                for (auto& o : outputs) {
                    if (o.record.crop) {
                        index_in_size = o.record.crop->side == previous_side ? index_in_size + 1 : 0;
                        previous_side = o.record.crop->side;
                    }
                    const std::string rel = item.label + "/" + augmented_name(stem, o.record.crop, index_in_size);
                    raster::write_png(dst_root / rel, o.image);
                    o.record.source_path = item.relative;
                    o.record.class_label = item.label;
                    o.record.output_path = rel;
                    results[i].push_back(std::move(o.record));
                }
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    const int threads = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(items.size(), 1)));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    // Report the first failure in path order so the message does not depend on scheduling.
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    DatasetManifest manifest(classes);
    for (auto& records : results) {
        for (auto& r : records) manifest.add(std::move(r));
    }
    write_manifest(dst_root / kManifestFileName, manifest);
    return manifest;
}

}  // namespace bacnet
