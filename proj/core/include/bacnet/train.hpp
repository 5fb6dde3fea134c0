#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bacnet/dataset.hpp"
#include "bacnet/metrics.hpp"
#include "bacnet/nn/graph.hpp"

namespace bacnet {

struct TrainConfig {
    double learning_rate = 1e-3;
    double weight_decay = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int epochs_per_fold = 10;
    int batch_size = 32;
    std::uint64_t seed = kDefaultSeed;

    /// Throws InvalidConfig on out-of-range values.
    void validate() const;
};

struct LossResult {
    double loss = 0.0;
    nn::Tensor grad;  // dloss/dlogits, (softmax - onehot) / N
};

/// Batch-mean negative log softmax of the target logits, computed with max
/// subtraction. Throws TargetOutOfRange, ShapeMismatch or EmptyInput.
LossResult cross_entropy(const nn::Tensor& logits, std::span<const int> targets);

struct OptimizerState {
    std::vector<nn::Tensor> m;
    std::vector<nn::Tensor> v;
    std::int64_t step = 0;
};

/// One AdamW step over params using their accumulated grad: decoupled decay
/// p <- p (1 - lr wd), then the bias-corrected Adam update. State is sized on
/// first use; a later shape disagreement throws ShapeMismatch.
void adamw_step(std::span<nn::Parameter> params, OptimizerState& state, const TrainConfig& cfg);

/// Supplies input tensors (C, H, W) and labels by sample id. load() must be
/// safe to call concurrently.
class SampleSource {
public:
    virtual ~SampleSource() = default;
    virtual std::size_t size() const = 0;
    virtual int num_classes() const = 0;
    virtual nn::Shape sample_shape() const = 0;
    virtual int label(int id) const = 0;
    virtual void load(int id, std::span<nn::real> dst) const = 0;
};

class InMemorySource : public SampleSource {
public:
    /// Every image must share one (C, H, W) shape; labels in [0, num_classes).
    InMemorySource(std::vector<nn::Tensor> images, std::vector<int> labels, int num_classes);

    std::size_t size() const override { return images_.size(); }
    int num_classes() const override { return num_classes_; }
    nn::Shape sample_shape() const override { return images_.front().shape(); }
    int label(int id) const override { return labels_.at(static_cast<std::size_t>(id)); }
    void load(int id, std::span<nn::real> dst) const override;

private:
    std::vector<nn::Tensor> images_;
    std::vector<int> labels_;
    int num_classes_;
};

/// ImageNet channel statistics applied after scaling pixels to [0, 1].
inline constexpr double kImageNetMean[3] = {0.485, 0.456, 0.406};
inline constexpr double kImageNetStd[3] = {0.229, 0.224, 0.225};

/// Manifest-backed images under root, Lanczos-resized to input_size when
/// needed and normalized with the ImageNet statistics. With cache enabled
/// decoded tensors are kept in memory after first use.
class ImageFolderSource : public SampleSource {
public:
    ImageFolderSource(DatasetManifest manifest, std::filesystem::path root, int input_size = 224, bool cache = false);

    std::size_t size() const override { return manifest_.size(); }
    int num_classes() const override { return manifest_.num_classes(); }
    nn::Shape sample_shape() const override { return {3, input_size_, input_size_}; }
    int label(int id) const override { return manifest_.label(id); }
    void load(int id, std::span<nn::real> dst) const override;

    const DatasetManifest& manifest() const noexcept { return manifest_; }

private:
    DatasetManifest manifest_;
    std::filesystem::path root_;
    int input_size_;
    bool cache_;
    mutable std::mutex mutex_;
    mutable std::map<int, std::shared_ptr<const std::vector<nn::real>>> cached_;
};

/// Stacks samples into an (N, C, H, W) batch.
nn::Tensor make_batch(const SampleSource& source, std::span<const int> ids);

struct TrainResult {
    std::vector<double> epoch_loss;  // sample-weighted mean loss per epoch
    std::vector<double> epoch_accuracy;  // running training top-1 per epoch
};

/// Mini-batch AdamW training of every parameter (nothing frozen). Each epoch
/// visits train_ids in a seeded shuffle; batch norm runs on batch statistics
/// and dropout masks come from a seeded stream, so a run is a pure function
/// of (graph, data, cfg).
TrainResult train_fold(nn::LayerGraph& graph, std::span<const int> train_ids, const SampleSource& source,
                       const TrainConfig& cfg, const std::function<void(int epoch, double loss)>& on_epoch = {});

/// Evaluation-mode logits, (ids.size(), K), computed in batches.
nn::Tensor predict_ids(const nn::LayerGraph& graph, std::span<const int> ids, const SampleSource& source,
                       int batch_size = 32);

/// Shape-checked evaluation-mode forward of an (N, C, H, W) batch.
nn::Tensor predict(const nn::LayerGraph& graph, const nn::Tensor& batch);

std::string loss_trace_csv(const TrainResult& result);

struct CrossValidationOptions {
    std::string method;  // report label
    std::string dataset;  // "original" / "augmented"
    int jobs = 1;  // folds trained concurrently
    /// When set, per-fold loss traces and prediction dumps are written here.
    std::optional<std::filesystem::path> out_dir;
    std::function<void(const std::string&)> log;
};

/// Builds the model for one fold; called once per fold.
using ModelFactory = std::function<nn::LayerGraph(int fold)>;

/// For every fold: a fresh model from factory, finetune_head to the source's
/// class count, training on the train view, scoring on the test view. The
/// report holds per-fold scores and their means and does not depend on jobs.
MetricReport run_cross_validation(const ModelFactory& factory, const SampleSource& source,
                                  const FoldAssignment& fa, const TrainConfig& cfg,
                                  const CrossValidationOptions& options);

/// Prediction dump columns: sample_id, fold, label, logit_0..logit_{K-1}.
std::string prediction_dump_csv(std::span<const int> ids, int fold, const SampleSource& source,
                                const nn::Tensor& logits);

}  // namespace bacnet
