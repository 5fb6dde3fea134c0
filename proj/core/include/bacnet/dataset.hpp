#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bacnet/raster.hpp"

namespace bacnet {

/// Default seed shared by every stochastic step unless overridden.
inline constexpr std::uint64_t kDefaultSeed = 42;

/// One labeled image. For augmented data crop names the source region (nullopt
/// marks the resized original); for scanned datasets every record is an
/// original and output_path equals source_path.
struct SampleRecord {
    std::string source_path;  // relative to the source root
    std::string class_label;
    std::optional<raster::CropRect> crop;
    std::string output_path;  // relative to the manifest root
    int source_width = 0;  // 0: unknown
    int source_height = 0;

    friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};
using AugmentedSampleRecord = SampleRecord;

/// Ordered sample inventory; sample_id is the record index. Classes are fixed
/// up front so empty classes survive serialization.
class DatasetManifest {
public:
    DatasetManifest() = default;
    explicit DatasetManifest(std::vector<std::string> classes);

    /// Appends a record; throws InvalidConfig when its class is unknown.
    int add(SampleRecord record);

    const std::vector<std::string>& classes() const noexcept { return classes_; }
    const std::vector<SampleRecord>& records() const noexcept { return records_; }
    const SampleRecord& record(int id) const { return records_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const noexcept { return records_.size(); }
    int num_classes() const noexcept { return static_cast<int>(classes_.size()); }

    /// Class index of a sample.
    int label(int id) const { return labels_.at(static_cast<std::size_t>(id)); }
    const std::vector<int>& labels() const noexcept { return labels_; }
    int class_index(const std::string& label) const;

    /// Concatenates another manifest with the same class list.
    void append(const DatasetManifest& other);

    friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;

private:
    std::vector<std::string> classes_;
    std::vector<SampleRecord> records_;
    std::vector<int> labels_;
};

/// JSON Lines: a header {"format","version","classes"} then one record per line.
std::string to_jsonl(const DatasetManifest& m);
DatasetManifest from_jsonl(const std::string& text);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Manifest of a class-per-subdirectory tree of PNG/TIFF files, sorted by
/// path. Images are not decoded, so source dimensions stay 0. Throws IoError.
DatasetManifest scan_directory(const std::filesystem::path& root);

/// Image files (.png, .tif, .tiff; any case) of one class directory, sorted.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);
/// Class subdirectories of root, sorted by name.
std::vector<std::string> list_classes(const std::filesystem::path& root);

std::vector<std::pair<std::string, std::size_t>> class_distribution(const DatasetManifest& m);

struct FoldAssignment {
    int n_folds = 0;
    std::uint64_t seed = 0;
    bool group_by_source = false;
    std::vector<int> fold_of;  // indexed by sample_id

    std::vector<std::size_t> fold_sizes() const;
    friend bool operator==(const FoldAssignment&, const FoldAssignment&) = default;
};

/// Shuffles sample ids with a permutation drawn from seed and deals them
/// round-robin into n_folds folds. With group_by_source, all crops of one
/// source image are dealt together (balance then holds over source images).
/// Throws InvalidConfig for n_folds < 2, TooFewSamples when there are fewer
/// samples (or groups) than folds.
FoldAssignment kfold_split(const DatasetManifest& m, int n_folds, std::uint64_t seed = kDefaultSeed,
                           bool group_by_source = false);

struct FoldView {
    std::vector<int> train;
    std::vector<int> test;
};

/// test = fold k, train = the rest, both in ascending sample_id order.
/// Throws FoldOutOfRange, or ShapeMismatch when fa does not cover m.
FoldView fold_views(const DatasetManifest& m, const FoldAssignment& fa, int k);

std::string to_json(const FoldAssignment& fa);
FoldAssignment fold_assignment_from_json(const std::string& text);

}  // namespace bacnet
