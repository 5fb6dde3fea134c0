#include "bacnet/train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <thread>

#include "bacnet/error.hpp"
#include "bacnet/raster.hpp"
#include "bacnet/rng.hpp"

namespace bacnet {

namespace fs = std::filesystem;
using nn::real;
using nn::Tensor;

namespace {

// Stream keys that keep the shuffle, dropout and head draws independent.
constexpr std::uint64_t kShuffleStream = 0x5f1e;
constexpr std::uint64_t kDropoutStream = 0xd40f;
constexpr std::uint64_t kHeadStream = 0x4ead;

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
    out << text;
}

}  // namespace

void TrainConfig::validate() const {
    auto fail = [](const std::string& what) { throw Error(Errc::InvalidConfig, what); };
    if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
    if (!(weight_decay >= 0.0)) fail("weight_decay must be non-negative");
    if (!(beta1 > 0.0 && beta1 < 1.0)) fail("beta1 must be in (0, 1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) fail("beta2 must be in (0, 1)");
    if (!(epsilon > 0.0)) fail("epsilon must be positive");
    if (epochs_per_fold < 0) fail("epochs_per_fold must be >= 0");
    if (batch_size < 1) fail("batch_size must be >= 1");
}

LossResult cross_entropy(const Tensor& logits, std::span<const int> targets) {
    if (logits.rank() != 2) throw Error(Errc::ShapeMismatch, "logits must be (N, K), got " + nn::to_string(logits.shape()));
    const int n = logits.dim(0);
    const int k = logits.dim(1);
    if (static_cast<std::size_t>(n) != targets.size()) {
        throw Error(Errc::ShapeMismatch, std::to_string(targets.size()) + " targets for " + std::to_string(n) + " rows");
    }
    if (n == 0) throw Error(Errc::EmptyInput, "empty batch");

    LossResult out{0.0, Tensor(logits.shape())};
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const int t = targets[static_cast<std::size_t>(i)];
        if (t < 0 || t >= k) {
            throw Error(Errc::TargetOutOfRange, "target " + std::to_string(t) + " with K = " + std::to_string(k));
        }
        const real* row = logits.data() + static_cast<std::size_t>(i) * k;
        real* g = out.grad.data() + static_cast<std::size_t>(i) * k;
        const double mx = *std::max_element(row, row + k);
        double sum = 0.0;
        for (int c = 0; c < k; ++c) sum += std::exp(static_cast<double>(row[c]) - mx);
        const double log_sum = std::log(sum);
        total += log_sum - (static_cast<double>(row[t]) - mx);
        for (int c = 0; c < k; ++c) {
            const double p = std::exp(static_cast<double>(row[c]) - mx - log_sum);
            g[c] = static_cast<real>((p - (c == t ? 1.0 : 0.0)) / n);
        }
    }
    out.loss = total / n;
    return out;
}

void adamw_step(std::span<nn::Parameter> params, OptimizerState& state, const TrainConfig& cfg) {
    if (state.m.empty() && state.step == 0) {
        for (const auto& p : params) {
            state.m.emplace_back(p.value.shape());
            state.v.emplace_back(p.value.shape());
        }
    }
    if (state.m.size() != params.size()) throw Error(Errc::ShapeMismatch, "optimizer state does not match parameters");
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2_sqrt = std::sqrt(1.0 - std::pow(cfg.beta2, t));
    const double step_size = cfg.learning_rate / bc1;
    const real decay = static_cast<real>(1.0 - cfg.learning_rate * cfg.weight_decay);

    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        if (m.shape() != p.value.shape() || v.shape() != p.value.shape()) {
            throw Error(Errc::ShapeMismatch, "optimizer state for '" + p.name + "'");
        }
        const bool has_grad = !p.grad.empty();
        if (has_grad && p.grad.shape() != p.value.shape()) {
            throw Error(Errc::ShapeMismatch, "gradient for '" + p.name + "' is " + nn::to_string(p.grad.shape()));
        }
        for (std::size_t j = 0; j < p.value.size(); ++j) {
            p.value[j] *= decay;
            const double g = has_grad ? static_cast<double>(p.grad[j]) : 0.0;
            const double mj = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
            const double vj = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
            m[j] = static_cast<real>(mj);
            v[j] = static_cast<real>(vj);
            const double denom = std::sqrt(vj) / bc2_sqrt + cfg.epsilon;
            p.value[j] = static_cast<real>(p.value[j] - step_size * mj / denom);
        }
    }
}

InMemorySource::InMemorySource(std::vector<Tensor> images, std::vector<int> labels, int num_classes)
    : images_(std::move(images)), labels_(std::move(labels)), num_classes_(num_classes) {
    if (images_.empty()) throw Error(Errc::EmptyInput, "no images");
    if (images_.size() != labels_.size()) throw Error(Errc::ShapeMismatch, "one label per image required");
    for (const auto& img : images_) {
        if (img.shape() != images_.front().shape() || img.rank() != 3) {
            throw Error(Errc::ShapeMismatch, "images must share one (C, H, W) shape");
        }
    }
    for (int l : labels_) {
        if (l < 0 || l >= num_classes_) throw Error(Errc::TargetOutOfRange, "label " + std::to_string(l));
    }
}

void InMemorySource::load(int id, std::span<real> dst) const {
    const auto& img = images_.at(static_cast<std::size_t>(id));
    std::copy(img.values().begin(), img.values().end(), dst.begin());
}

ImageFolderSource::ImageFolderSource(DatasetManifest manifest, fs::path root, int input_size, bool cache)
    : manifest_(std::move(manifest)), root_(std::move(root)), input_size_(input_size), cache_(cache) {
    if (input_size_ <= 0) throw Error(Errc::InvalidConfig, "input_size must be positive");
}

void ImageFolderSource::load(int id, std::span<real> dst) const {
    if (cache_) {
        std::lock_guard lock(mutex_);
        if (const auto it = cached_.find(id); it != cached_.end()) {
            std::copy(it->second->begin(), it->second->end(), dst.begin());
            return;
        }
    }
    const auto& record = manifest_.record(id);
    auto img = raster::read_image(root_ / record.output_path);
    if (img.width() != input_size_ || img.height() != input_size_) {
        img = raster::lanczos_resize(img, input_size_, input_size_);
    }
    const auto plane = static_cast<std::size_t>(input_size_) * static_cast<std::size_t>(input_size_);
    const auto px = img.pixels();
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < plane; ++i) {
            dst[c * plane + i] = static_cast<real>((px[i * 3 + c] - kImageNetMean[c]) / kImageNetStd[c]);
        }
    }
    if (cache_) {
        auto copy = std::make_shared<const std::vector<real>>(dst.begin(), dst.begin() + static_cast<std::ptrdiff_t>(3 * plane));
        std::lock_guard lock(mutex_);
        cached_.emplace(id, std::move(copy));
    }
}

Tensor make_batch(const SampleSource& source, std::span<const int> ids) {
    nn::Shape shape = source.sample_shape();
    const std::size_t per = nn::numel(shape);
    shape.insert(shape.begin(), static_cast<int>(ids.size()));
    Tensor batch(shape);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        source.load(ids[i], batch.values().subspan(i * per, per));
    }
    return batch;
}

TrainResult train_fold(nn::LayerGraph& graph, std::span<const int> train_ids, const SampleSource& source,
                       const TrainConfig& cfg, const std::function<void(int, double)>& on_epoch) {
    cfg.validate();
    TrainResult result;
    if (cfg.epochs_per_fold == 0 || train_ids.empty()) return result;

    OptimizerState state;
    std::vector<int> order(train_ids.begin(), train_ids.end());
    CounterRng dropout_rng(cfg.seed, kDropoutStream);
    nn::ForwardCache cache;
    std::vector<int> targets;

    for (int epoch = 0; epoch < cfg.epochs_per_fold; ++epoch) {
        CounterRng shuffle_rng(cfg.seed, mix64(kShuffleStream + static_cast<std::uint64_t>(epoch)));
        shuffle(std::span<int>(order), shuffle_rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const auto count = std::min(static_cast<std::size_t>(cfg.batch_size), order.size() - start);
            const auto ids = std::span<const int>(order).subspan(start, count);
            const Tensor x = make_batch(source, ids);
            targets.resize(count);
            for (std::size_t i = 0; i < count; ++i) targets[i] = source.label(ids[i]);

            const Tensor logits = graph.forward(x, nn::Mode::Train, cache, &dropout_rng);
            const auto loss = cross_entropy(logits, targets);
            const int k = logits.dim(1);
            for (std::size_t i = 0; i < count; ++i) {
                const real* row = logits.data() + i * static_cast<std::size_t>(k);
                if (std::max_element(row, row + k) - row == targets[i]) ++correct;
            }
            loss_sum += loss.loss * static_cast<double>(count);

            graph.zero_grad();
            graph.backward(cache, loss.grad);
            adamw_step(graph.parameters(), state, cfg);
        }
        const double mean_loss = loss_sum / static_cast<double>(order.size());
        result.epoch_loss.push_back(mean_loss);
        result.epoch_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(order.size()));
        if (on_epoch) on_epoch(epoch, mean_loss);
    }
    return result;
}

Tensor predict(const nn::LayerGraph& graph, const Tensor& batch) {
    if (batch.rank() != 4) throw Error(Errc::ShapeMismatch, "batch must be (N, C, H, W), got " + nn::to_string(batch.shape()));
    return graph.infer(batch);
}

Tensor predict_ids(const nn::LayerGraph& graph, std::span<const int> ids, const SampleSource& source, int batch_size) {
    if (batch_size < 1) throw Error(Errc::InvalidConfig, "batch_size must be >= 1");
    const int k = graph.num_classes();
    Tensor out({static_cast<int>(ids.size()), k});
    for (std::size_t start = 0; start < ids.size(); start += static_cast<std::size_t>(batch_size)) {
        const auto count = std::min(static_cast<std::size_t>(batch_size), ids.size() - start);
        const Tensor logits = predict(graph, make_batch(source, ids.subspan(start, count)));
        std::copy(logits.values().begin(), logits.values().end(),
                  out.values().begin() + static_cast<std::ptrdiff_t>(start * static_cast<std::size_t>(k)));
    }
    return out;
}

std::string loss_trace_csv(const TrainResult& result) {
    std::string out = "epoch,mean_loss\n";
    char buf[64];
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
        std::snprintf(buf, sizeof buf, "%zu,%.10g\n", e, result.epoch_loss[e]);
        out += buf;
    }
    return out;
}

std::string prediction_dump_csv(std::span<const int> ids, int fold, const SampleSource& source, const Tensor& logits) {
    const int k = logits.dim(1);
    std::string out = "sample_id,fold,label";
    for (int c = 0; c < k; ++c) out += ",logit_" + std::to_string(c);
    out += "\n";
    char buf[64];
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out += std::to_string(ids[i]) + "," + std::to_string(fold) + "," + std::to_string(source.label(ids[i]));
        for (int c = 0; c < k; ++c) {
            std::snprintf(buf, sizeof buf, ",%.17g", static_cast<double>(logits[i * static_cast<std::size_t>(k) + c]));
            out += buf;
        }
        out += "\n";
    }
    return out;
}

MetricReport run_cross_validation(const ModelFactory& factory, const SampleSource& source, const FoldAssignment& fa,
                                  const TrainConfig& cfg, const CrossValidationOptions& options) {
    cfg.validate();
    if (fa.fold_of.size() != source.size()) {
        throw Error(Errc::ShapeMismatch, "fold assignment covers " + std::to_string(fa.fold_of.size()) +
                                             " samples, source has " + std::to_string(source.size()));
    }
    if (options.out_dir) fs::create_directories(*options.out_dir);

    const int folds = fa.n_folds;
    std::vector<FoldScores> scores(static_cast<std::size_t>(folds));
    std::vector<std::size_t> params(static_cast<std::size_t>(folds), 0);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(folds));
    std::mutex log_mutex;
    auto log = [&](const std::string& msg) {
        if (!options.log) return;
        std::lock_guard lock(log_mutex);
        options.log(msg);
    };

    auto run_fold = [&](int k) {
        std::vector<int> train, test;
        for (std::size_t i = 0; i < fa.fold_of.size(); ++i) {
            (fa.fold_of[i] == k ? test : train).push_back(static_cast<int>(i));
        }
        if (test.empty()) throw Error(Errc::TooFewSamples, "fold " + std::to_string(k) + " has no test samples");
        nn::LayerGraph graph = factory(k);
        nn::finetune_head(graph, source.num_classes(), mix64(cfg.seed ^ kHeadStream));
        const auto trace = train_fold(graph, train, source, cfg, [&](int epoch, double loss) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "fold %d epoch %d loss %.6f", k, epoch, loss);
            log(buf);
        });
        const Tensor logits = predict_ids(graph, test, source, cfg.batch_size);
        std::vector<int> labels;
        for (int id : test) labels.push_back(source.label(id));
        const std::vector<double> flat(logits.values().begin(), logits.values().end());
        const auto preds = PredictionSet::from_scores(logits.dim(1), std::move(labels), flat);
        scores[static_cast<std::size_t>(k)] = score(preds);
        params[static_cast<std::size_t>(k)] = graph.param_count();
        if (options.out_dir) {
            const std::string tag = "fold" + std::to_string(k);
            write_text(*options.out_dir / (tag + "_loss.csv"), loss_trace_csv(trace));
            write_text(*options.out_dir / (tag + "_predictions.csv"), prediction_dump_csv(test, k, source, logits));
        }
        char buf[96];
        std::snprintf(buf, sizeof buf, "fold %d top1 %.4f", k, scores[static_cast<std::size_t>(k)].top1);
        log(buf);
    };

    std::atomic<int> next{0};
    auto worker = [&] {
        for (int k = next++; k < folds; k = next++) {
            try {
                run_fold(k);
            } catch (const Error& e) {
                errors[static_cast<std::size_t>(k)] =
                    std::make_exception_ptr(Error(e.code(), "fold " + std::to_string(k) + ": " + e.what()));
            } catch (...) {
                errors[static_cast<std::size_t>(k)] = std::current_exception();
            }
        }
    };
    const int threads = std::clamp(options.jobs, 1, folds);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    MetricReport report;
    report.method = options.method;
    report.dataset = options.dataset;
    report.params = params.front();
    report.total_samples = source.size();
    report.epochs = cfg.epochs_per_fold;
    report.per_fold = std::move(scores);
    report.finalize();
    return report;
}

}  // namespace bacnet
