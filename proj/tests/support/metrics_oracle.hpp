#pragma once

// Brute-force metric definitions written from the confusion matrix, kept
// separate from the library so the two can be compared.

#include <cstddef>
#include <vector>

namespace oracle {

struct Scores {
    double top1 = 0.0;
    double top5 = 0.0;
    double precision_w = 0.0;
    double recall_w = 0.0;
    double f1_w = 0.0;
};

/// Ranking of one score row: repeatedly take the highest remaining score,
/// lowest class index first on ties.
inline std::vector<int> rank_scores(const std::vector<double>& row) {
    std::vector<int> order;
    std::vector<bool> used(row.size(), false);
    for (std::size_t r = 0; r < row.size(); ++r) {
        int best = -1;
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (used[c]) continue;
            if (best < 0 || row[c] > row[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
        }
        used[static_cast<std::size_t>(best)] = true;
        order.push_back(best);
    }
    return order;
}

/// rankings[i] is the full class ranking of sample i.
inline Scores evaluate(int num_classes, const std::vector<int>& labels, const std::vector<std::vector<int>>& rankings) {
    const std::size_t n = labels.size();
    const std::size_t k = static_cast<std::size_t>(num_classes);
    const std::size_t top = k < 5 ? k : 5;
    std::vector<std::vector<long>> confusion(k, std::vector<long>(k, 0));  // [true][predicted]
    long hit1 = 0, hit5 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        confusion[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(rankings[i][0])] += 1;
        for (std::size_t r = 0; r < top; ++r) {
            if (rankings[i][r] == labels[i]) {
                ++hit5;
                if (r == 0) ++hit1;
            }
        }
    }
    // Weighted means in the np.average form sum(support * x) / sum(support).
    // For recall, support * (tp / support) is accumulated as the integer tp.
    Scores s;
    s.top1 = static_cast<double>(hit1) / static_cast<double>(n);
    s.top5 = static_cast<double>(hit5) / static_cast<double>(n);
    long recalled = 0;
    for (std::size_t c = 0; c < k; ++c) {
        long tp = confusion[c][c], support = 0, predicted = 0;
        for (std::size_t j = 0; j < k; ++j) {
            support += confusion[c][j];
            predicted += confusion[j][c];
        }
        if (support == 0) continue;
        const double p = predicted == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(predicted);
        const double r = static_cast<double>(tp) / static_cast<double>(support);
        const double f = p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
        s.precision_w += static_cast<double>(support) * p;
        s.f1_w += static_cast<double>(support) * f;
        recalled += tp;
    }
    s.precision_w /= static_cast<double>(n);
    s.f1_w /= static_cast<double>(n);
    s.recall_w = static_cast<double>(recalled) / static_cast<double>(n);
    return s;
}

}  // namespace oracle
