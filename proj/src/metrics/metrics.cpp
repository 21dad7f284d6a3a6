#include "testmine/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "testmine/error.hpp"

namespace testmine::metrics {

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
    return static_cast<double>(num) / static_cast<double>(den);
}

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", round_half_up(v, 2));
    return buf;
}

}  // namespace

ConfusionCounts confusion(const std::vector<bool>& predicted, const std::vector<bool>& truth) {
    if (predicted.size() != truth.size()) {
        throw Error(ErrorCode::validation, "predictions and truth differ in length (" +
                                               std::to_string(predicted.size()) + " vs " +
                                               std::to_string(truth.size()) + ")");
    }
    ConfusionCounts c;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i]) {
            truth[i] ? ++c.tp : ++c.fp;
        } else {
            truth[i] ? ++c.fn : ++c.tn;
        }
    }
    return c;
}

Score precision(const ConfusionCounts& c) {
    if (c.tp + c.fp == 0) return {0, true};
    return {ratio(c.tp, c.tp + c.fp), false};
}

Score recall(const ConfusionCounts& c) {
    if (c.tp + c.fn == 0) return {0, true};
    return {ratio(c.tp, c.tp + c.fn), false};
}

Score f_beta(double p, double r, double beta) {
    if (!(beta > 0)) throw Error(ErrorCode::validation, "beta must be positive");
    double b2 = beta * beta;
    double den = b2 * p + r;
    if (den == 0) return {0, true};
    return {(1 + b2) * p * r / den, false};
}

Score mcc(const ConfusionCounts& c) {
    double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
    double tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
    double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    if (den == 0) return {0, true};
    return {(tp * tn - fp * fn) / std::sqrt(den), false};
}

MetricsReport evaluate(const ConfusionCounts& counts, double beta) {
    MetricsReport r;
    r.counts = counts;
    r.beta = beta;
    auto p = precision(counts);
    auto re = recall(counts);
    auto f1 = f_beta(p.value, re.value, 1.0);
    auto fb = f_beta(p.value, re.value, beta);
    auto m = mcc(counts);
    r.precision = p.value;
    r.recall = re.value;
    r.f1 = f1.value;
    r.f_beta = fb.value;
    r.mcc = m.value;
    if (p.degenerate) r.degenerate.push_back("precision");
    if (re.degenerate) r.degenerate.push_back("recall");
    if (f1.degenerate) r.degenerate.push_back("f1");
    if (fb.degenerate) r.degenerate.push_back("f_beta");
    if (m.degenerate) r.degenerate.push_back("mcc");
    return r;
}

double round_half_up(double value, int decimals) {
    double scale = std::pow(10.0, decimals);
    double scaled = std::fabs(value) * scale;
    // Tolerate representation error: 0.125 * 100 may land at 12.4999999.
    double rounded = std::floor(scaled + 0.5 + 1e-9) / scale;
    return std::copysign(rounded, value);
}

KappaResult cohen_kappa(const std::vector<bool>& a, const std::vector<bool>& b) {
    if (a.size() != b.size()) throw Error(ErrorCode::validation, "verdict lists differ in length");
    KappaResult k;
    k.n = a.size();
    if (k.n == 0) {
        k.degenerate = true;
        return k;
    }
    std::size_t both_yes = 0, both_no = 0, a_yes = 0, b_yes = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i]) ++a_yes;
        if (b[i]) ++b_yes;
        if (a[i] && b[i]) ++both_yes;
        if (!a[i] && !b[i]) ++both_no;
    }
    double n = static_cast<double>(k.n);
    k.observed = static_cast<double>(both_yes + both_no) / n;
    double pa = static_cast<double>(a_yes) / n, pb = static_cast<double>(b_yes) / n;
    k.expected = pa * pb + (1 - pa) * (1 - pb);
    if (std::fabs(1 - k.expected) < 1e-15) {
        k.degenerate = true;
        k.kappa = 0;
        return k;
    }
    k.kappa = (k.observed - k.expected) / (1 - k.expected);
    return k;
}

OverlapReport overlap_analysis(const std::set<std::string>& a, const std::set<std::string>& b,
                               const std::set<std::string>& truth) {
    OverlapReport o;
    std::set<std::string> uni, inter;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::inserter(uni, uni.end()));
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(inter, inter.end()));
    o.shared = inter.size();
    o.only_a = a.size() - inter.size();
    o.only_b = b.size() - inter.size();
    o.jaccard = uni.empty() ? 0.0 : ratio(inter.size(), uni.size());
    if (!truth.empty()) {
        auto hits = [&](const std::set<std::string>& s) {
            return static_cast<std::uint64_t>(std::count_if(s.begin(), s.end(), [&](const std::string& x) {
                return truth.count(x) > 0;
            }));
        };
        o.union_recall = ratio(hits(uni), truth.size());
        o.intersection_recall = ratio(hits(inter), truth.size());
    }
    return o;
}

nlohmann::ordered_json to_json(const MetricsReport& r) {
    nlohmann::ordered_json j;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["beta"] = r.beta;
    j["f_beta"] = r.f_beta;
    j["mcc"] = r.mcc;
    j["tp"] = r.counts.tp;
    j["fp"] = r.counts.fp;
    j["tn"] = r.counts.tn;
    j["fn"] = r.counts.fn;
    j["degenerate"] = r.degenerate;
    return j;
}

nlohmann::ordered_json to_json(const KappaResult& k) {
    nlohmann::ordered_json j;
    j["kappa"] = k.kappa;
    j["observed"] = k.observed;
    j["expected"] = k.expected;
    j["n"] = k.n;
    j["degenerate"] = k.degenerate;
    return j;
}

nlohmann::ordered_json to_json(const OverlapReport& o) {
    nlohmann::ordered_json j;
    j["shared"] = o.shared;
    j["only_a"] = o.only_a;
    j["only_b"] = o.only_b;
    j["jaccard"] = o.jaccard;
    j["union_recall"] = o.union_recall;
    j["intersection_recall"] = o.intersection_recall;
    return j;
}

std::string format_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
    std::size_t name_w = 10;
    for (const auto& [name, r] : rows) name_w = std::max(name_w, name.size());
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-*s %6s %6s %6s %6s %6s %6s %6s\n", static_cast<int>(name_w), "classifier",
                  "Pr", "Re", "F1", "F0.5", "MCC", "TP", "FP");
    out += line;
    for (const auto& [name, r] : rows) {
        std::snprintf(line, sizeof line, "%-*s %6s %6s %6s %6s %6s %6llu %6llu\n", static_cast<int>(name_w),
                      name.c_str(), fmt2(r.precision).c_str(), fmt2(r.recall).c_str(), fmt2(r.f1).c_str(),
                      fmt2(r.f_beta).c_str(), fmt2(r.mcc).c_str(), static_cast<unsigned long long>(r.counts.tp),
                      static_cast<unsigned long long>(r.counts.fp));
        out += line;
    }
    return out;
}

}  // namespace testmine::metrics
