#include "bacnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "bacnet/error.hpp"
#include "json.hpp"

namespace bacnet {

using ojson = nlohmann::ordered_json;

PredictionSet::PredictionSet(int num_classes, std::vector<int> true_labels, std::vector<int> rankings)
    : k_(num_classes), labels_(std::move(true_labels)), rankings_(std::move(rankings)) {
    if (k_ < 1) throw Error(Errc::InvalidConfig, "num_classes must be >= 1");
    if (rankings_.size() != labels_.size() * static_cast<std::size_t>(k_)) {
        throw Error(Errc::InvalidConfig, "rankings must hold N x K entries");
    }
    std::vector<char> seen(static_cast<std::size_t>(k_));
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] < 0 || labels_[i] >= k_) throw Error(Errc::InvalidConfig, "label out of range");
        std::fill(seen.begin(), seen.end(), 0);
        for (int c : ranking(i)) {
            if (c < 0 || c >= k_ || seen[static_cast<std::size_t>(c)]) {
                throw Error(Errc::InvalidConfig, "ranking " + std::to_string(i) + " is not a permutation");
            }
            seen[static_cast<std::size_t>(c)] = 1;
        }
    }
}

PredictionSet PredictionSet::from_scores(int num_classes, std::vector<int> true_labels, std::span<const double> scores) {
    const auto k = static_cast<std::size_t>(num_classes);
    if (num_classes < 1 || scores.size() != true_labels.size() * k) {
        throw Error(Errc::InvalidConfig, "scores must hold N x K entries");
    }
    std::vector<int> rankings(scores.size());
    for (std::size_t i = 0; i < true_labels.size(); ++i) {
        auto row = std::span(rankings).subspan(i * k, k);
        std::iota(row.begin(), row.end(), 0);
        const auto s = scores.subspan(i * k, k);
        std::stable_sort(row.begin(), row.end(), [&](int a, int b) {
            return s[static_cast<std::size_t>(a)] > s[static_cast<std::size_t>(b)];
        });
    }
    return PredictionSet(num_classes, std::move(true_labels), std::move(rankings));
}

void PredictionSet::append(const PredictionSet& other) {
    if (labels_.empty() && k_ == 0) {
        *this = other;
        return;
    }
    if (other.k_ != k_) throw Error(Errc::InvalidConfig, "cannot append prediction sets with different K");
    labels_.insert(labels_.end(), other.labels_.begin(), other.labels_.end());
    rankings_.insert(rankings_.end(), other.rankings_.begin(), other.rankings_.end());
}

double top_k_accuracy(const PredictionSet& p, int k) {
    if (k < 1 || k > p.num_classes()) {
        throw Error(Errc::InvalidK, "k = " + std::to_string(k) + " with K = " + std::to_string(p.num_classes()));
    }
    if (p.size() == 0) throw Error(Errc::EmptyInput, "no predictions");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto r = p.ranking(i).first(static_cast<std::size_t>(k));
        if (std::find(r.begin(), r.end(), p.label(i)) != r.end()) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(p.size());
}

WeightedPRF weighted_prf(const PredictionSet& p) {
    if (p.size() == 0) throw Error(Errc::EmptyInput, "no predictions");
    const auto k = static_cast<std::size_t>(p.num_classes());
    std::vector<std::size_t> tp(k, 0), predicted(k, 0), support(k, 0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto truth = static_cast<std::size_t>(p.label(i));
        const auto guess = static_cast<std::size_t>(p.top1(i));
        ++support[truth];
        ++predicted[guess];
        if (truth == guess) ++tp[truth];
    }
    const auto n = static_cast<double>(p.size());
    double precision_sum = 0.0;
    double f1_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t c = 0; c < k; ++c) {
        correct += tp[c];
        if (support[c] == 0) continue;
        const double precision = predicted[c] ? static_cast<double>(tp[c]) / static_cast<double>(predicted[c]) : 0.0;
        const double recall = static_cast<double>(tp[c]) / static_cast<double>(support[c]);
        const double f1 = precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        precision_sum += precision * static_cast<double>(support[c]);
        f1_sum += f1 * static_cast<double>(support[c]);
    }
    return {precision_sum / n, static_cast<double>(correct) / n, f1_sum / n};
}

double metric_value(const FoldScores& s, int index) {
    switch (index) {
        case 0: return s.top1;
        case 1: return s.top5;
        case 2: return s.precision_w;
        case 3: return s.recall_w;
        case 4: return s.f1_w;
        default: throw Error(Errc::InvalidConfig, "metric index " + std::to_string(index));
    }
}

namespace {

double& metric_ref(FoldScores& s, int index) {
    switch (index) {
        case 0: return s.top1;
        case 1: return s.top5;
        case 2: return s.precision_w;
        case 3: return s.recall_w;
        default: return s.f1_w;
    }
}

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string millions(std::size_t params) { return fixed(static_cast<double>(params) / 1e6, 3) + " M"; }

std::string pad(const std::string& s, std::size_t width, bool left = true) {
    if (s.size() >= width) return s;
    return left ? s + std::string(width - s.size(), ' ') : std::string(width - s.size(), ' ') + s;
}

std::string render_text(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        width[c] = header[c].size();
        for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
    }
    auto line = [&](const std::vector<std::string>& cells) {
        std::string out;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c) out += "  ";
            out += pad(cells[c], width[c], c == 0);
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        return out + "\n";
    };
    std::string out = line(header);
    std::size_t total = 0;
    for (auto w : width) total += w;
    out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
    for (const auto& row : rows) out += line(row);
    return out;
}

std::string csv_line(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        if (c) out += ",";
        const bool quote = cells[c].find_first_of(",\"\n") != std::string::npos;
        if (quote) {
            out += '"';
            for (char ch : cells[c]) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
            out += '"';
        } else {
            out += cells[c];
        }
    }
    return out + "\n";
}

std::vector<const MetricReport*> sorted_by_params(const std::vector<const MetricReport*>& reports) {
    auto out = reports;
    std::stable_sort(out.begin(), out.end(), [](const MetricReport* a, const MetricReport* b) { return a->params < b->params; });
    return out;
}

ojson scores_json(const FoldScores& s) {
    ojson j;
    for (int m = 0; m < 5; ++m) j[kMetricNames[m]] = metric_value(s, m);
    return j;
}

FoldScores scores_from_json(const ojson& j) {
    FoldScores s;
    for (int m = 0; m < 5; ++m) metric_ref(s, m) = j.at(kMetricNames[m]).get<double>();
    return s;
}

}  // namespace

FoldScores score(const PredictionSet& p) {
    const auto prf = weighted_prf(p);
    return {top_k_accuracy(p, 1), top_k_accuracy(p, std::min(5, p.num_classes())), prf.precision, prf.recall, prf.f1};
}

FoldScores mean_scores(std::span<const FoldScores> folds) {
    if (folds.empty()) throw Error(Errc::EmptyInput, "no folds to average");
    FoldScores mean;
    for (int m = 0; m < 5; ++m) {
        double sum = 0.0;
        for (const auto& f : folds) sum += metric_value(f, m);
        metric_ref(mean, m) = sum / static_cast<double>(folds.size());
    }
    return mean;
}

void MetricReport::finalize() {
    average = mean_scores(per_fold);
    folds = static_cast<int>(per_fold.size());
}

std::string to_json(const MetricReport& r) {
    ojson j;
    j["method"] = r.method;
    j["dataset"] = r.dataset;
    j["params"] = r.params;
    j["total_samples"] = r.total_samples;
    j["folds"] = r.folds;
    j["epochs"] = r.epochs;
    j["per_fold"] = ojson::array();
    for (const auto& f : r.per_fold) j["per_fold"].push_back(scores_json(f));
    j["average"] = scores_json(r.average);
    return j.dump(2) + "\n";
}

MetricReport metric_report_from_json(const std::string& text) {
    try {
        const auto j = ojson::parse(text);
        MetricReport r;
        r.method = j.at("method").get<std::string>();
        r.dataset = j.value("dataset", "");
        r.params = j.at("params").get<std::size_t>();
        r.total_samples = j.at("total_samples").get<std::size_t>();
        r.folds = j.at("folds").get<int>();
        r.epochs = j.at("epochs").get<int>();
        for (const auto& f : j.at("per_fold")) r.per_fold.push_back(scores_from_json(f));
        r.average = scores_from_json(j.at("average"));
        return r;
    } catch (const ojson::exception& e) {
        throw Error(Errc::InvalidConfig, std::string("metric report: ") + e.what());
    }
}

double relative_improvement(double score_orig, double score_aug) {
    if (!(score_orig > 0.0)) throw Error(Errc::ZeroBaseline, "original score must be positive");
    return (score_aug - score_orig) / score_orig * 100.0;
}

double truncate_one_decimal(double percent) noexcept {
    const double scaled = percent * 10.0;
    const double guard = 1e-9 * std::max(1.0, std::abs(scaled));
    const double t = scaled >= 0 ? std::floor(scaled + guard) : std::ceil(scaled - guard);
    return t / 10.0 + 0.0;  // + 0.0 turns -0 into 0
}

RenderedTable render_report(const std::vector<MetricReport>& reports, ReportMode mode) {
    RenderedTable out;
    if (mode == ReportMode::Results) {
        std::vector<const MetricReport*> ptrs;
        for (const auto& r : reports) ptrs.push_back(&r);
        const std::vector<std::string> header = {"method", "params", "total_samples", "folds", "epochs",
                                                 "top1", "top5", "precision_w", "recall_w", "f1_w"};
        std::vector<std::vector<std::string>> text_rows;
        out.csv = csv_line(header);
        for (const auto* r : sorted_by_params(ptrs)) {
            std::vector<std::string> tail = {std::to_string(r->total_samples), std::to_string(r->folds),
                                             std::to_string(r->epochs)};
            for (int m = 0; m < 5; ++m) tail.push_back(fixed(metric_value(r->average, m), 4));
            std::vector<std::string> csv_row = {r->method, std::to_string(r->params)};
            std::vector<std::string> text_row = {r->method, millions(r->params)};
            csv_row.insert(csv_row.end(), tail.begin(), tail.end());
            text_row.insert(text_row.end(), tail.begin(), tail.end());
            out.csv += csv_line(csv_row);
            text_rows.push_back(std::move(text_row));
        }
        out.text = render_text(header, text_rows);
        return out;
    }

    std::map<std::string, const MetricReport*> orig, aug;
    for (const auto& r : reports) {
        if (r.dataset != "original" && r.dataset != "augmented") {
            throw Error(Errc::UnpairedReports, r.method + ": dataset must be 'original' or 'augmented', got '" +
                                                   r.dataset + "'");
        }
        auto& side = r.dataset == "original" ? orig : aug;
        if (!side.emplace(r.method, &r).second) {
            throw Error(Errc::UnpairedReports, r.method + " appears twice in the " + r.dataset + " reports");
        }
    }
    for (const auto& [method, _] : orig) {
        if (!aug.contains(method)) throw Error(Errc::UnpairedReports, method + " has no augmented counterpart");
    }
    for (const auto& [method, _] : aug) {
        if (!orig.contains(method)) throw Error(Errc::UnpairedReports, method + " has no original counterpart");
    }

    std::vector<const MetricReport*> ptrs;
    for (const auto& [_, r] : orig) ptrs.push_back(r);
    const std::vector<std::string> header = {"method", "top1", "top5", "precision_w", "recall_w", "f1_w"};
    std::vector<std::vector<std::string>> rows;
    out.csv = csv_line(header);
    for (const auto* o : sorted_by_params(ptrs)) {
        const auto* a = aug.at(o->method);
        std::vector<std::string> row = {o->method};
        for (int m = 0; m < 5; ++m) {
            const double r = relative_improvement(metric_value(o->average, m), metric_value(a->average, m));
            row.push_back(fixed(truncate_one_decimal(r), 1));
        }
        out.csv += csv_line(row);
        rows.push_back(std::move(row));
    }
    out.text = render_text(header, rows);
    return out;
}

std::string per_fold_csv(const std::vector<MetricReport>& reports) {
    std::string out = csv_line({"method", "dataset", "fold", "metric", "value"});
    for (const auto& r : reports) {
        for (std::size_t f = 0; f < r.per_fold.size(); ++f) {
            for (int m = 0; m < 5; ++m) {
                out += csv_line({r.method, r.dataset, std::to_string(f), kMetricNames[m],
                                 fixed(metric_value(r.per_fold[f], m), 6)});
            }
        }
        for (int m = 0; m < 5; ++m) {
            out += csv_line({r.method, r.dataset, "mean", kMetricNames[m], fixed(metric_value(r.average, m), 6)});
        }
    }
    return out;
}

}  // namespace bacnet
