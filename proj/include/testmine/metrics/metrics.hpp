#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace testmine::metrics {

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const noexcept { return tp + fp + tn + fn; }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Throws Error(validation) when the lists differ in length.
ConfusionCounts confusion(const std::vector<bool>& predicted, const std::vector<bool>& truth);

// A zero denominator yields 0 with `degenerate` set.
struct Score {
    double value = 0;
    bool degenerate = false;
};

Score precision(const ConfusionCounts& c);
Score recall(const ConfusionCounts& c);
/// (1 + b^2) P R / (b^2 P + R); 0 (degenerate) when P = R = 0.
Score f_beta(double precision, double recall, double beta);
/// 0 (degenerate) when any marginal is empty.
Score mcc(const ConfusionCounts& c);

struct MetricsReport {
    ConfusionCounts counts;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    double beta = 0.5;
    double f_beta = 0;
    double mcc = 0;
    std::vector<std::string> degenerate;  // names of metrics with a zero denominator
};

MetricsReport evaluate(const ConfusionCounts& counts, double beta = 0.5);

/// Half-up (away from zero) rounding to `decimals` places.
double round_half_up(double value, int decimals = 2);

struct KappaResult {
    double kappa = 0;
    double observed = 0;  // p_o
    double expected = 0;  // p_e
    std::size_t n = 0;
    bool degenerate = false;  // p_e == 1 or no items; kappa reported as 0
};

/// Cohen's kappa over two aligned binary verdict lists.
KappaResult cohen_kappa(const std::vector<bool>& a, const std::vector<bool>& b);

struct OverlapReport {
    std::size_t shared = 0;
    std::size_t only_a = 0;
    std::size_t only_b = 0;
    double jaccard = 0;
    double union_recall = 0;
    double intersection_recall = 0;
};

/// Positives of two classifiers against the true positives.
OverlapReport overlap_analysis(const std::set<std::string>& positives_a, const std::set<std::string>& positives_b,
                               const std::set<std::string>& truth_positives);

nlohmann::ordered_json to_json(const MetricsReport& r);
nlohmann::ordered_json to_json(const KappaResult& k);
nlohmann::ordered_json to_json(const OverlapReport& o);

/// Aligned text table, columns Pr Re F1 F0.5 MCC TP FP, values at two decimals.
std::string format_table(const std::vector<std::pair<std::string, MetricsReport>>& rows);

}  // namespace testmine::metrics
