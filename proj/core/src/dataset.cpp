#include "bacnet/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "bacnet/error.hpp"
#include "bacnet/rng.hpp"
#include "json.hpp"

namespace bacnet {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kManifestFormat = "bacnet-manifest";
constexpr int kManifestVersion = 1;

// Stream key that separates the fold shuffle from other users of the seed.
constexpr std::uint64_t kFoldStream = 0xf01d;

ojson record_json(const SampleRecord& r) {
    ojson j;
    j["source_path"] = r.source_path;
    j["class_label"] = r.class_label;
    if (r.crop) {
        j["crop"] = {{"x", r.crop->x}, {"y", r.crop->y}, {"side", r.crop->side}};
    } else {
        j["crop"] = "original";
    }
    j["output_path"] = r.output_path;
    if (r.source_width > 0) j["source_size"] = {r.source_width, r.source_height};
    return j;
}

SampleRecord record_from_json(const ojson& j) {
    SampleRecord r;
    r.source_path = j.at("source_path").get<std::string>();
    r.class_label = j.at("class_label").get<std::string>();
    r.output_path = j.at("output_path").get<std::string>();
    const auto& crop = j.at("crop");
    if (crop.is_string()) {
        if (crop.get<std::string>() != "original") throw Error(Errc::InvalidConfig, "crop must be an object or \"original\"");
    } else {
        r.crop = raster::CropRect{crop.at("x").get<int>(), crop.at("y").get<int>(), crop.at("side").get<int>()};
    }
    if (j.contains("source_size")) {
        r.source_width = j["source_size"].at(0).get<int>();
        r.source_height = j["source_size"].at(1).get<int>();
        if (r.crop && !r.crop->fits(r.source_width, r.source_height)) {
            throw Error(Errc::OutOfBounds, "crop outside source image " + r.source_path);
        }
    }
    return r;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(Errc::IoError, "write failed: " + path.string());
}

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".tif" || ext == ".tiff";
}

}  // namespace

DatasetManifest::DatasetManifest(std::vector<std::string> classes) : classes_(std::move(classes)) {
    std::vector<std::string> sorted = classes_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw Error(Errc::InvalidConfig, "duplicate class label");
    }
}

int DatasetManifest::class_index(const std::string& label) const {
    const auto it = std::find(classes_.begin(), classes_.end(), label);
    if (it == classes_.end()) throw Error(Errc::InvalidConfig, "unknown class '" + label + "'");
    return static_cast<int>(it - classes_.begin());
}

int DatasetManifest::add(SampleRecord record) {
    labels_.push_back(class_index(record.class_label));
    records_.push_back(std::move(record));
    return static_cast<int>(records_.size()) - 1;
}

void DatasetManifest::append(const DatasetManifest& other) {
    if (other.classes_ != classes_) throw Error(Errc::InvalidConfig, "cannot append manifests with different classes");
    records_.insert(records_.end(), other.records_.begin(), other.records_.end());
    labels_.insert(labels_.end(), other.labels_.begin(), other.labels_.end());
}

std::string to_jsonl(const DatasetManifest& m) {
    ojson header;
    header["format"] = kManifestFormat;
    header["version"] = kManifestVersion;
    header["classes"] = m.classes();
    std::string out = header.dump() + "\n";
    for (std::size_t i = 0; i < m.size(); ++i) {
        ojson j;
        j["sample_id"] = i;
        const ojson fields = record_json(m.records()[i]);
        for (const auto& [k, v] : fields.items()) j[k] = v;
        out += j.dump() + "\n";
    }
    return out;
}

DatasetManifest from_jsonl(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::optional<DatasetManifest> m;
    try {
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            const auto j = ojson::parse(line);
            if (!m) {
                if (j.value("format", "") != kManifestFormat) throw Error(Errc::InvalidConfig, "not a manifest header");
                if (j.at("version").get<int>() != kManifestVersion) throw Error(Errc::InvalidConfig, "unsupported version");
                m.emplace(j.at("classes").get<std::vector<std::string>>());
                continue;
            }
            if (j.contains("sample_id") && j["sample_id"].get<std::size_t>() != m->size()) {
                throw Error(Errc::InvalidConfig, "sample_id out of sequence");
            }
            m->add(record_from_json(j));
        }
    } catch (const ojson::exception& e) {
        throw Error(Errc::InvalidConfig, "manifest line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
        throw Error(e.code(), "manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!m) throw Error(Errc::InvalidConfig, "manifest is empty");
    return std::move(*m);
}

void write_manifest(const fs::path& path, const DatasetManifest& m) { write_text(path, to_jsonl(m)); }

DatasetManifest read_manifest(const fs::path& path) {
    try {
        return from_jsonl(read_text(path));
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

std::vector<std::string> list_classes(const fs::path& root) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) throw Error(Errc::IoError, "not a directory: " + root.string());
    std::vector<std::string> classes;
    for (const auto& entry : fs::directory_iterator(root, ec)) {
        if (entry.is_directory()) classes.push_back(entry.path().filename().string());
    }
    if (ec) throw Error(Errc::IoError, "cannot list " + root.string() + ": " + ec.message());
    std::sort(classes.begin(), classes.end());
    return classes;
}

std::vector<fs::path> list_images(const fs::path& dir) {
    std::error_code ec;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
    }
    if (ec) throw Error(Errc::IoError, "cannot list " + dir.string() + ": " + ec.message());
    std::sort(files.begin(), files.end());
    return files;
}

DatasetManifest scan_directory(const fs::path& root) {
    const auto classes = list_classes(root);
    DatasetManifest m(classes);
    for (const auto& label : classes) {
        for (const auto& file : list_images(root / label)) {
            SampleRecord r;
            r.source_path = fs::relative(file, root).generic_string();
            r.class_label = label;
            r.output_path = r.source_path;
            m.add(std::move(r));
        }
    }
    return m;
}

std::vector<std::pair<std::string, std::size_t>> class_distribution(const DatasetManifest& m) {
    std::vector<std::size_t> counts(m.classes().size(), 0);
    for (int label : m.labels()) ++counts[static_cast<std::size_t>(label)];
    std::vector<std::pair<std::string, std::size_t>> out;
    for (std::size_t c = 0; c < counts.size(); ++c) out.emplace_back(m.classes()[c], counts[c]);
    return out;
}

std::vector<std::size_t> FoldAssignment::fold_sizes() const {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(std::max(n_folds, 0)), 0);
    for (int f : fold_of) ++sizes.at(static_cast<std::size_t>(f));
    return sizes;
}

FoldAssignment kfold_split(const DatasetManifest& m, int n_folds, std::uint64_t seed, bool group_by_source) {
    if (n_folds < 2) throw Error(Errc::InvalidConfig, "n_folds must be >= 2, got " + std::to_string(n_folds));

    // Units dealt into folds: single samples, or all samples sharing a source image.
    std::vector<std::vector<int>> units;
    if (group_by_source) {
        std::map<std::pair<std::string, std::string>, std::size_t> index;
        for (std::size_t i = 0; i < m.size(); ++i) {
            const auto& r = m.records()[i];
            const auto [it, inserted] = index.try_emplace({r.class_label, r.source_path}, units.size());
            if (inserted) units.emplace_back();
            units[it->second].push_back(static_cast<int>(i));
        }
    } else {
        units.resize(m.size());
        for (std::size_t i = 0; i < m.size(); ++i) units[i] = {static_cast<int>(i)};
    }
    if (units.size() < static_cast<std::size_t>(n_folds)) {
        throw Error(Errc::TooFewSamples, std::to_string(units.size()) + (group_by_source ? " source images" : " samples") +
                                             " for " + std::to_string(n_folds) + " folds");
    }

    CounterRng rng(seed, kFoldStream);
    const auto order = permutation(units.size(), rng);
    FoldAssignment fa{n_folds, seed, group_by_source, std::vector<int>(m.size(), -1)};
    for (std::size_t i = 0; i < order.size(); ++i) {
        const int fold = static_cast<int>(i % static_cast<std::size_t>(n_folds));
        for (int id : units[order[i]]) fa.fold_of[static_cast<std::size_t>(id)] = fold;
    }
    return fa;
}

FoldView fold_views(const DatasetManifest& m, const FoldAssignment& fa, int k) {
    if (k < 0 || k >= fa.n_folds) {
        throw Error(Errc::FoldOutOfRange, "fold " + std::to_string(k) + " of " + std::to_string(fa.n_folds));
    }
    if (fa.fold_of.size() != m.size()) {
        throw Error(Errc::ShapeMismatch, "fold assignment covers " + std::to_string(fa.fold_of.size()) +
                                             " samples, manifest has " + std::to_string(m.size()));
    }
    FoldView view;
    for (std::size_t i = 0; i < fa.fold_of.size(); ++i) {
        (fa.fold_of[i] == k ? view.test : view.train).push_back(static_cast<int>(i));
    }
    return view;
}

std::string to_json(const FoldAssignment& fa) {
    ojson j;
    j["n_folds"] = fa.n_folds;
    j["seed"] = fa.seed;
    j["group_by_source"] = fa.group_by_source;
    j["fold_of"] = fa.fold_of;
    return j.dump() + "\n";
}

FoldAssignment fold_assignment_from_json(const std::string& text) {
    try {
        const auto j = ojson::parse(text);
        FoldAssignment fa;
        fa.n_folds = j.at("n_folds").get<int>();
        fa.seed = j.at("seed").get<std::uint64_t>();
        fa.group_by_source = j.value("group_by_source", false);
        fa.fold_of = j.at("fold_of").get<std::vector<int>>();
        if (fa.n_folds < 2) throw Error(Errc::InvalidConfig, "n_folds must be >= 2");
        for (int f : fa.fold_of) {
            if (f < 0 || f >= fa.n_folds) throw Error(Errc::FoldOutOfRange, "fold index " + std::to_string(f));
        }
        return fa;
    } catch (const ojson::exception& e) {
        throw Error(Errc::InvalidConfig, std::string("fold assignment: ") + e.what());
    }
}

}  // namespace bacnet
