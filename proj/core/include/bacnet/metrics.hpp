#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bacnet {

/// True labels plus, per sample, all K classes ordered by descending score.
class PredictionSet {
public:
    PredictionSet() = default;
    /// rankings is N x K row-major; throws InvalidConfig unless each row is a
    /// permutation of 0..K-1 and every label is in [0, K).
    PredictionSet(int num_classes, std::vector<int> true_labels, std::vector<int> rankings);

    /// Ranks each score row (N x K) in descending order; ties keep the lower class first.
    static PredictionSet from_scores(int num_classes, std::vector<int> true_labels, std::span<const double> scores);

    std::size_t size() const noexcept { return labels_.size(); }
    int num_classes() const noexcept { return k_; }
    int label(std::size_t i) const noexcept { return labels_[i]; }
    std::span<const int> ranking(std::size_t i) const noexcept {
        return {rankings_.data() + i * static_cast<std::size_t>(k_), static_cast<std::size_t>(k_)};
    }
    int top1(std::size_t i) const noexcept { return rankings_[i * static_cast<std::size_t>(k_)]; }
    const std::vector<int>& labels() const noexcept { return labels_; }
    const std::vector<int>& rankings() const noexcept { return rankings_; }

    /// Concatenation, e.g. of the test folds of one cross-validation run.
    void append(const PredictionSet& other);

private:
    int k_ = 0;
    std::vector<int> labels_;
    std::vector<int> rankings_;
};

/// Fraction of samples whose label is among the first k ranked classes.
/// Throws InvalidK unless 1 <= k <= K, EmptyInput when there are no samples.
double top_k_accuracy(const PredictionSet& p, int k);

struct WeightedPRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Support-weighted precision/recall/F1 of the rank-1 predictions. A class
/// with no predictions has precision 0 and a class with p + r = 0 has F1 0.
/// Recall is evaluated as sum(tp) / N, which is the support-weighted mean
/// of per-class recall and makes it identical to top-1 accuracy.
/// Throws EmptyInput.
WeightedPRF weighted_prf(const PredictionSet& p);

struct FoldScores {
    double top1 = 0.0;
    double top5 = 0.0;
    double precision_w = 0.0;
    double recall_w = 0.0;
    double f1_w = 0.0;

    friend bool operator==(const FoldScores&, const FoldScores&) = default;
};

inline constexpr const char* kMetricNames[5] = {"top1", "top5", "precision_w", "recall_w", "f1_w"};
double metric_value(const FoldScores& s, int index);

/// All five metrics; top-5 uses k = min(5, K).
FoldScores score(const PredictionSet& p);

/// Arithmetic mean per metric. Throws EmptyInput.
FoldScores mean_scores(std::span<const FoldScores> folds);

struct MetricReport {
    std::string method;
    std::string dataset;  // e.g. "original" or "augmented"; pairs reports in improvement mode
    std::size_t params = 0;
    std::size_t total_samples = 0;
    int folds = 0;
    int epochs = 0;
    std::vector<FoldScores> per_fold;
    FoldScores average;  // mean of per_fold, or a fixture value when per_fold is empty

    /// Sets average from per_fold.
    void finalize();
};

std::string to_json(const MetricReport& r);
MetricReport metric_report_from_json(const std::string& text);

/// Percent change from the original-data score to the augmented-data score.
/// Throws ZeroBaseline unless score_orig > 0.
double relative_improvement(double score_orig, double score_aug);

/// Truncation toward zero to one decimal, with a 1e-9 guard so values such
/// as 5.4 computed as 5.3999999999 still display as 5.4.
double truncate_one_decimal(double percent) noexcept;

enum class ReportMode { Results, Improvement };

struct RenderedTable {
    std::string text;
    std::string csv;
};

/// Results: one row per report, sorted by parameter count, scores to four
/// decimals. Improvement: reports are paired by method across the
/// "original" and "augmented" datasets and each metric becomes a one-decimal
/// truncated relative improvement. Throws UnpairedReports when a method
/// lacks its counterpart or appears twice in one dataset.
RenderedTable render_report(const std::vector<MetricReport>& reports, ReportMode mode);

/// Long format: method, dataset, fold, metric, value (fold "mean" for averages).
std::string per_fold_csv(const std::vector<MetricReport>& reports);

}  // namespace bacnet
