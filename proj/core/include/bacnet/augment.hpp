#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "bacnet/dataset.hpp"
#include "bacnet/raster.hpp"

namespace bacnet {

/// Multi-scale square cropping ("artificial zoom"): crops_per_size random
/// crops at every crop size, plus the whole image, all resized to output_side.
struct AugmentationConfig {
    std::vector<int> crop_sizes = {100, 200, 300, 400, 500, 600, 700};
    int crops_per_size = 5;
    int output_side = 224;
    std::uint64_t seed = kDefaultSeed;

    /// Throws InvalidConfig unless crop_sizes is strictly increasing and
    /// positive, crops_per_size >= 1 and output_side > 0.
    void validate() const;
};

/// Sizes that fit are planned in order, crops_per_size each, with offsets
/// drawn uniformly from a counter-based stream keyed by (cfg.seed,
/// per_image_seed). Sizes larger than min(img_w, img_h) are skipped.
std::vector<raster::CropRect> plan_crops(int img_w, int img_h, const AugmentationConfig& cfg,
                                         std::uint64_t per_image_seed);

/// 1 + crops_per_size * |{s in crop_sizes : s <= min(w, h)}|.
std::size_t expected_outputs(int img_w, int img_h, const AugmentationConfig& cfg);

struct AugmentedImage {
    raster::RasterImage image;
    SampleRecord record;  // crop and source size filled; paths and label left to the caller
};

/// The resized original first, then one output per planned crop.
std::vector<AugmentedImage> augment_image(const raster::RasterImage& img, const AugmentationConfig& cfg,
                                          std::uint64_t per_image_seed);

/// Per-image seed: FNV-1a of the source path relative to the source root.
std::uint64_t per_image_seed(const std::string& relative_path) noexcept;

/// Output file name for one augmented record: "<stem>_orig.png" or
/// "<stem>_s<side>_c<j>.png" with j the crop index within its size.
std::string augmented_name(const std::string& stem, const std::optional<raster::CropRect>& crop, int index_in_size);

/// Augments every image of a class-per-subdirectory tree into dst_root with
/// the same layout and writes dst_root/manifest.jsonl. jobs > 1 processes
/// images concurrently; outputs and manifest are identical for any jobs.
/// Throws IoError, or the decode error prefixed with the offending path.
DatasetManifest augment_dataset(const std::filesystem::path& src_root, const std::filesystem::path& dst_root,
                                const AugmentationConfig& cfg, int jobs = 1);

inline constexpr const char* kManifestFileName = "manifest.jsonl";

}  // namespace bacnet
