#include "cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bacnet/augment.hpp"
#include "bacnet/dataset.hpp"
#include "bacnet/error.hpp"
#include "bacnet/metrics.hpp"
#include "bacnet/nn/architectures.hpp"
#include "bacnet/train.hpp"
#include "bacnet/weights.hpp"

namespace bacnet::cli {

namespace fs = std::filesystem;

namespace {

struct AugmentArgs {
    std::string src;
    std::string dst;
    AugmentationConfig cfg;
    int jobs = 1;
};

struct SplitArgs {
    std::string manifest;
    std::string out;
    int folds = 10;
    std::uint64_t seed = kDefaultSeed;
    bool group_by_source = false;
};

struct ParamsArgs {
    std::string arch;
    int num_classes = 32;
    double width_mult = 1.0;
};

struct EvalArgs {
    std::string arch;
    std::string manifest;
    std::string data_root;
    std::string out;
    std::string folds_file;
    std::string weights;
    std::string label;
    std::string dataset = "original";
    int folds = 10;
    std::uint64_t split_seed = kDefaultSeed;
    bool group_by_source = false;
    int input_size = 224;
    double width_mult = 1.0;
    int jobs = 1;
    bool cache = false;
    TrainConfig train;
};

struct ReportArgs {
    std::vector<std::string> runs;
    std::string mode = "results";
    std::string csv;
    std::string per_fold;
};

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
}

std::string millions(std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f M", static_cast<double>(n) / 1e6);
    return buf;
}

std::vector<std::string> architecture_names() {
    return {nn::kArchitectureNames.begin(), nn::kArchitectureNames.end()};
}

int cmd_augment(const AugmentArgs& a, std::ostream& out) {
    const auto manifest = augment_dataset(a.src, a.dst, a.cfg, a.jobs);
    for (const auto& [label, count] : class_distribution(manifest)) out << label << "\t" << count << "\n";
    out << "total\t" << manifest.size() << "\n";
    out << "manifest\t" << (fs::path(a.dst) / kManifestFileName).string() << "\n";
    return kExitOk;
}

int cmd_split(const SplitArgs& a, std::ostream& out) {
    const auto manifest = read_manifest(a.manifest);
    const auto fa = kfold_split(manifest, a.folds, a.seed, a.group_by_source);
    write_text(a.out, to_json(fa));
    const auto sizes = fa.fold_sizes();
    for (std::size_t k = 0; k < sizes.size(); ++k) out << "fold " << k << "\t" << sizes[k] << "\n";
    out << "total\t" << manifest.size() << "\n";
    return kExitOk;
}

int cmd_params(const ParamsArgs& a, std::ostream& out) {
    const auto names = a.arch.empty() ? architecture_names() : std::vector<std::string>{a.arch};
    for (const auto& name : names) {
        const auto graph = nn::build_architecture({name, a.num_classes, a.width_mult});
        out << name << "\t" << graph.param_count() << "\t" << millions(graph.param_count()) << "\n";
    }
    return kExitOk;
}

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
    a.train.validate();
    nn::validate(nn::ArchitectureSpec{a.arch, 2, a.width_mult});
    const auto manifest = read_manifest(a.manifest);
    const fs::path root = a.data_root.empty() ? fs::path(a.manifest).parent_path() : fs::path(a.data_root);
    const auto fa = a.folds_file.empty() ? kfold_split(manifest, a.folds, a.split_seed, a.group_by_source)
                                         : fold_assignment_from_json(read_text(a.folds_file));

    std::optional<WeightFile> weights;
    if (!a.weights.empty()) {
        weights = read_weights(a.weights);
        build_from_weights(a.arch, *weights, a.width_mult);  // fail before any training
    }
    const int num_classes = manifest.num_classes();
    const ModelFactory factory = [&](int) {
        if (weights) return build_from_weights(a.arch, *weights, a.width_mult);
        return nn::build_architecture({a.arch, num_classes, a.width_mult}, a.train.seed);
    };

    ImageFolderSource source(manifest, root, a.input_size, a.cache);
    CrossValidationOptions options;
    options.method = a.label.empty() ? a.arch : a.label;
    options.dataset = a.dataset;
    options.jobs = a.jobs;
    options.out_dir = fs::path(a.out);
    options.log = [&](const std::string& line) { err << line << "\n"; };
    const auto report = run_cross_validation(factory, source, fa, a.train, options);

    const fs::path dir(a.out);
    write_text(dir / "report.json", to_json(report));
    write_text(dir / "folds.json", to_json(fa));
    const auto table = render_report({report}, ReportMode::Results);
    write_text(dir / "results.csv", table.csv);
    write_text(dir / "per_fold.csv", per_fold_csv({report}));
    out << table.text;
    return kExitOk;
}

int cmd_report(const ReportArgs& a, std::ostream& out) {
    std::vector<MetricReport> reports;
    for (const auto& run : a.runs) {
        const fs::path p = fs::is_directory(run) ? fs::path(run) / "report.json" : fs::path(run);
        reports.push_back(metric_report_from_json(read_text(p)));
    }
    const auto mode = a.mode == "improvement" ? ReportMode::Improvement : ReportMode::Results;
    const auto table = render_report(reports, mode);
    out << table.text;
    if (!a.csv.empty()) write_text(a.csv, table.csv);
    if (!a.per_fold.empty()) write_text(a.per_fold, per_fold_csv(reports));
    return kExitOk;
}

int exit_code_for(Errc code) {
    switch (code) {
        case Errc::InvalidConfig:
        case Errc::UnknownArchitecture:
        case Errc::InvalidK:
        case Errc::FoldOutOfRange:
            return kExitUsage;
        default:
            return kExitData;
    }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bacterial-image classification experiments: augmentation, cross-validation, metrics.", "bacnet"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML file of option values; command-line flags take precedence");
    app.footer("Every seed defaults to " + std::to_string(kDefaultSeed) +
               " so runs are reproducible. Exit codes: 0 ok, 2 usage, 3 data error, 4 internal error.");

    AugmentArgs aug;
    auto* augment = app.add_subcommand("augment", "Crop every image at several sizes and resize to a fixed side");
    augment->add_option("--src", aug.src, "Source tree, one subdirectory per class")->required()->check(CLI::ExistingDirectory);
    augment->add_option("--dst", aug.dst, "Output tree; manifest.jsonl is written here")->required();
    augment->add_option("--crop-sizes", aug.cfg.crop_sizes, "Crop sides in pixels, strictly increasing")
        ->delimiter(',')
        ->capture_default_str();
    augment->add_option("--crops-per-size", aug.cfg.crops_per_size, "Random crops per size")->capture_default_str();
    augment->add_option("--output-side", aug.cfg.output_side, "Side of every output image")->capture_default_str();
    augment->add_option("--seed", aug.cfg.seed, "Seed of the crop-position generator")->capture_default_str();
    augment->add_option("--jobs", aug.jobs, "Images processed concurrently (output is identical for any value)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    SplitArgs split;
    auto* split_cmd = app.add_subcommand("split", "Assign manifest samples to cross-validation folds");
    split_cmd->add_option("--manifest", split.manifest, "Manifest (JSON Lines)")->required()->check(CLI::ExistingFile);
    split_cmd->add_option("--out", split.out, "Fold assignment JSON to write")->required();
    split_cmd->add_option("--folds", split.folds, "Number of folds")->capture_default_str()->check(CLI::Range(2, 1 << 20));
    split_cmd->add_option("--seed", split.seed, "Seed of the sample permutation")->capture_default_str();
    split_cmd->add_flag("--group-by-source", split.group_by_source, "Keep all crops of one source image in one fold");

    ParamsArgs params;
    auto* params_cmd = app.add_subcommand("params", "Print trainable parameter counts");
    params_cmd->add_option("--arch", params.arch, "Architecture (all twelve when omitted)")
        ->check(CLI::IsMember(architecture_names()));
    params_cmd->add_option("--num-classes", params.num_classes, "Classifier outputs")
        ->capture_default_str()
        ->check(CLI::Range(2, 1 << 20));
    params_cmd->add_option("--width-mult", params.width_mult, "Channel multiplier (MobileNet families)")->capture_default_str();

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "Run k-fold cross-validation of one architecture");
    eval->add_option("--arch", ev.arch, "Architecture")->required()->check(CLI::IsMember(architecture_names()));
    eval->add_option("--manifest", ev.manifest, "Manifest (JSON Lines)")->required()->check(CLI::ExistingFile);
    eval->add_option("--out", ev.out, "Run directory for report, CSVs, loss traces and predictions")->required();
    eval->add_option("--data-root", ev.data_root, "Image root (default: the manifest's directory)")
        ->check(CLI::ExistingDirectory);
    eval->add_option("--folds-file", ev.folds_file, "Fold assignment from 'split' (default: split here)")
        ->check(CLI::ExistingFile);
    eval->add_option("--folds", ev.folds, "Folds when splitting here")->capture_default_str()->check(CLI::Range(2, 1 << 20));
    eval->add_option("--split-seed", ev.split_seed, "Seed of the fold permutation")->capture_default_str();
    eval->add_flag("--group-by-source", ev.group_by_source, "Keep all crops of one source image in one fold");
    eval->add_option("--weights", ev.weights, "STRW weight file for transfer learning")->check(CLI::ExistingFile);
    eval->add_option("--label", ev.label, "Method name in reports (default: --arch)");
    eval->add_option("--dataset", ev.dataset, "Dataset tag used to pair reports")
        ->capture_default_str()
        ->check(CLI::IsMember({"original", "augmented"}));
    eval->add_option("--input-size", ev.input_size, "Network input side in pixels")->capture_default_str()->check(CLI::PositiveNumber);
    eval->add_option("--width-mult", ev.width_mult, "Channel multiplier (MobileNet families)")->capture_default_str();
    eval->add_option("--epochs", ev.train.epochs_per_fold, "Epochs per fold")->capture_default_str();
    eval->add_option("--batch-size", ev.train.batch_size, "Mini-batch size")->capture_default_str();
    eval->add_option("--lr", ev.train.learning_rate, "AdamW learning rate")->capture_default_str();
    eval->add_option("--weight-decay", ev.train.weight_decay, "Decoupled weight decay")->capture_default_str();
    eval->add_option("--beta1", ev.train.beta1, "First-moment decay")->capture_default_str();
    eval->add_option("--beta2", ev.train.beta2, "Second-moment decay")->capture_default_str();
    eval->add_option("--eps", ev.train.epsilon, "Adam epsilon")->capture_default_str();
    eval->add_option("--seed", ev.train.seed, "Seed of initialization, batch order and dropout")->capture_default_str();
    eval->add_option("--jobs", ev.jobs, "Folds trained concurrently (results are identical for any value)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    eval->add_flag("--cache", ev.cache, "Keep decoded inputs in memory");

    ReportArgs rep;
    auto* report = app.add_subcommand("report", "Render results or relative-improvement tables from run directories");
    report->add_option("runs", rep.runs, "Run directories or report.json files")->required()->check(CLI::ExistingPath);
    report->add_option("--mode", rep.mode, "results or improvement")
        ->capture_default_str()
        ->check(CLI::IsMember({"results", "improvement"}));
    report->add_option("--csv", rep.csv, "Write the table as CSV");
    report->add_option("--per-fold", rep.per_fold, "Write the long per-fold CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*augment) return cmd_augment(aug, out);
        if (*split_cmd) return cmd_split(split, out);
        if (*params_cmd) return cmd_params(params, out);
        if (*eval) return cmd_eval(ev, out, err);
        if (*report) return cmd_report(rep, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitUsage;
}

}  // namespace bacnet::cli
