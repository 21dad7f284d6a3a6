#include "testmine/corpus/corpus.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

#include "testmine/error.hpp"
#include "testmine/util/io.hpp"

namespace testmine::corpus {

std::string_view to_string(Kind k) noexcept { return k == Kind::kFinding ? "finding" : "matching"; }

std::string_view to_string(Split s) noexcept {
    switch (s) {
        case Split::kNone: return "none";
        case Split::kTrain: return "train";
        case Split::kDev: return "dev";
        case Split::kTest: return "test";
    }
    return "none";
}

Kind kind_from_string(std::string_view s) {
    if (s == "finding") return Kind::kFinding;
    if (s == "matching") return Kind::kMatching;
    throw Error(ErrorCode::validation, "unknown kind '" + std::string(s) + "'");
}

Split split_from_string(std::string_view s) {
    for (auto v : {Split::kNone, Split::kTrain, Split::kDev, Split::kTest}) {
        if (to_string(v) == s) return v;
    }
    throw Error(ErrorCode::validation, "unknown split '" + std::string(s) + "'");
}

nlohmann::ordered_json to_json(const LabeledExample& e) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(e.kind);
    j["repo_id"] = e.repo_id;
    j["hash"] = e.hash;
    j["cve"] = e.cve_id ? nlohmann::ordered_json(*e.cve_id) : nlohmann::ordered_json(nullptr);
    j["label"] = e.label ? 1 : 0;
    j["split"] = e.split == Split::kNone ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(to_string(e.split));
    return j;
}

LabeledExample labeled_example_from_json(const nlohmann::json& j) {
    LabeledExample e;
    try {
        e.kind = kind_from_string(j.at("kind").get<std::string>());
        e.repo_id = j.at("repo_id").get<std::string>();
        e.hash = j.at("hash").get<std::string>();
        if (j.contains("cve") && j["cve"].is_string()) e.cve_id = j["cve"].get<std::string>();
        const auto& label = j.at("label");
        e.label = label.is_boolean() ? label.get<bool>() : label.get<int>() != 0;
        if (j.contains("split") && j["split"].is_string()) e.split = split_from_string(j["split"].get<std::string>());
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::parse, std::string("bad dataset row: ") + ex.what());
    }
    if (e.kind == Kind::kMatching && !e.cve_id) throw Error(ErrorCode::dataset, "matching example without cve");
    if (e.kind == Kind::kFinding && e.cve_id) throw Error(ErrorCode::dataset, "finding example with a cve");
    return e;
}

void export_dataset(const std::vector<LabeledExample>& examples, const std::filesystem::path& path) {
    std::string text;
    for (const auto& e : examples) {
        text += to_json(e).dump();
        text += '\n';
    }
    util::write_file_atomic(path, text);
}

std::vector<LabeledExample> import_dataset(const std::filesystem::path& path) {
    std::vector<LabeledExample> out;
    for (const auto& row : util::read_jsonl(path)) out.push_back(labeled_example_from_json(row));
    return out;
}

std::vector<LabeledExample> build_finding_examples(const std::vector<java::TestMethod>& tests,
                                                   const std::set<std::string>& positive_hashes) {
    std::vector<LabeledExample> out;
    out.reserve(tests.size());
    for (const auto& t : tests) {
        out.push_back({Kind::kFinding, t.repo_id, t.content_hash, std::nullopt,
                       positive_hashes.count(t.content_hash) > 0, Split::kNone});
    }
    return out;
}

std::vector<LabeledExample> build_matching_pairs(const std::map<std::string, std::vector<java::TestMethod>>& tests,
                                                 const std::map<std::string, std::vector<std::string>>& vulns,
                                                 const std::set<Link>& links) {
    std::vector<LabeledExample> out;
    for (const auto& [project, project_tests] : tests) {
        auto it = vulns.find(project);
        if (it == vulns.end()) continue;
        for (const auto& t : project_tests) {
            for (const auto& cve : it->second) {
                out.push_back({Kind::kMatching, project, t.content_hash, cve,
                               links.count({t.content_hash, cve}) > 0, Split::kNone});
            }
        }
    }
    return out;
}

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0) throw Error(ErrorCode::validation, "empty range");
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        std::uint64_t r = engine_();
        if (r >= threshold) return r % bound;
    }
}

std::array<std::size_t, 3> allocate_counts(std::size_t n, const SplitRatios& ratios) {
    const std::array<double, 3> r = {ratios.train, ratios.dev, ratios.test};
    double sum = r[0] + r[1] + r[2];
    if (std::fabs(sum - 1.0) > 1e-9 || r[0] < 0 || r[1] < 0 || r[2] < 0) {
        throw Error(ErrorCode::validation, "split ratios must be non-negative and sum to 1");
    }
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> rem{};
    std::size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        double exact = static_cast<double>(n) * r[i];
        // Snap values within rounding noise of an integer.
        double snapped = std::fabs(exact - std::round(exact)) < 1e-9 ? std::round(exact) : exact;
        counts[i] = static_cast<std::size_t>(std::floor(snapped));
        rem[i] = snapped - std::floor(snapped);
        assigned += counts[i];
    }
    std::array<int, 3> order = {0, 1, 2};
    // 0.7 * 39542 and 0.2 * 39542 both leave .4, but not bit-for-bit; treat as a tie.
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b] + 1e-9; });
    for (std::size_t left = n - assigned, i = 0; left > 0; --left, ++i) ++counts[order[i % 3]];
    return counts;
}

DatasetSplit stratified_split(const std::vector<LabeledExample>& examples, const SplitRatios& ratios,
                              std::uint64_t seed) {
    DatasetSplit out;
    out.ratios = ratios;
    out.seed = seed;
    Rng rng(seed);
    std::vector<Split> assignment(examples.size(), Split::kNone);
    // Negatives first, then positives, each from the same RNG stream.
    for (bool label : {false, true}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < examples.size(); ++i) {
            if (examples[i].label == label) idx.push_back(i);
        }
        auto counts = allocate_counts(idx.size(), ratios);
        rng.shuffle(idx);
        for (std::size_t j = 0; j < idx.size(); ++j) {
            assignment[idx[j]] = j < counts[0] ? Split::kTrain : j < counts[0] + counts[1] ? Split::kDev : Split::kTest;
        }
    }
    for (std::size_t i = 0; i < examples.size(); ++i) {
        auto e = examples[i];
        e.split = assignment[i];
        switch (assignment[i]) {
            case Split::kTrain: out.train.push_back(std::move(e)); break;
            case Split::kDev: out.dev.push_back(std::move(e)); break;
            default: out.test.push_back(std::move(e)); break;
        }
    }
    return out;
}

std::size_t oversample_target(std::size_t minority, std::size_t majority, double ratio) {
    if (!(ratio > 0.0 && ratio <= 0.5)) throw Error(ErrorCode::validation, "target ratio must be in (0, 0.5]");
    auto meets = [&](std::size_t m) {
        // m / (m + M) >= r  <=>  m * (1 - r) >= r * M, with a little slack
        // so exact ratios like 30/120 are not lost to rounding.
        return static_cast<double>(m) * (1.0 - ratio) + 1e-9 >= ratio * static_cast<double>(majority);
    };
    if (meets(minority)) return minority;
    auto m = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(majority) / (1.0 - ratio) - 1e-9));
    m = std::max(m, minority);
    while (!meets(m)) ++m;
    while (m > minority && meets(m - 1)) --m;
    return m;
}

std::vector<LabeledExample> bootstrap_oversample(const std::vector<LabeledExample>& train,
                                                 const OversampleConfig& config) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < train.size(); ++i) (train[i].label ? pos : neg).push_back(i);
    const auto& minority = pos.size() <= neg.size() ? pos : neg;
    const auto& majority = pos.size() <= neg.size() ? neg : pos;
    if (minority.empty()) throw Error(ErrorCode::dataset, "no minority-class examples to oversample");
    auto target = oversample_target(minority.size(), majority.size(), config.target_ratio);
    std::vector<LabeledExample> out = train;
    Rng rng(config.seed);
    for (std::size_t i = minority.size(); i < target; ++i) {
        out.push_back(train[minority[rng.below(minority.size())]]);
    }
    spdlog::debug("oversampled minority {} -> {} against majority {}", minority.size(), target, majority.size());
    return out;
}

CampaignResult filter_campaign(const kb::Catalog& catalog, const std::set<std::string>& training_ids,
                               const std::set<std::string>& excluded_urls, const CampaignProbes& probes) {
    CampaignResult out;
    out.report.input = catalog.size();
    std::map<std::string, bool> reachable_cache;
    std::map<std::string, std::size_t> tests_cache;
    std::set<std::string> projects;
    for (const auto& [id, r] : catalog.records) {
        if (training_ids.count(id)) {
            ++out.report.training;
            continue;
        }
        if (util::trim(r.description).empty()) {
            ++out.report.no_description;
            continue;
        }
        if (!r.project_url || r.project_url->empty()) {
            ++out.report.unreachable_url;
            continue;
        }
        const auto& url = *r.project_url;
        auto rit = reachable_cache.find(url);
        if (rit == reachable_cache.end()) {
            rit = reachable_cache.emplace(url, probes.reachable ? probes.reachable(url) : true).first;
        }
        if (!rit->second) {
            ++out.report.unreachable_url;
            continue;
        }
        if (excluded_urls.count(url)) {
            ++out.report.excluded;
            continue;
        }
        auto tit = tests_cache.find(url);
        if (tit == tests_cache.end()) {
            tit = tests_cache.emplace(url, probes.count_tests ? probes.count_tests(url) : 0).first;
        }
        if (tit->second == 0) {
            ++out.report.no_tests;
            continue;
        }
        out.kept.push_back(r);
        projects.insert(url);
    }
    out.projects.assign(projects.begin(), projects.end());
    return out;
}

nlohmann::ordered_json to_json(const CampaignReport& r) {
    nlohmann::ordered_json j;
    j["input"] = r.input;
    j["training"] = r.training;
    j["no_description"] = r.no_description;
    j["unreachable_url"] = r.unreachable_url;
    j["excluded"] = r.excluded;
    j["no_tests"] = r.no_tests;
    j["kept"] = r.input - r.dropped();
    return j;
}

std::vector<LeakageViolation> leakage_check(const std::vector<LabeledExample>& pretrain,
                                            const std::vector<LabeledExample>& test) {
    std::set<std::string> hashes, cves;
    for (const auto& e : pretrain) {
        hashes.insert(e.hash);
        if (e.cve_id) cves.insert(*e.cve_id);
    }
    std::set<std::string> bad_hashes, bad_cves;
    for (const auto& e : test) {
        if (hashes.count(e.hash)) bad_hashes.insert(e.hash);
        if (e.cve_id && cves.count(*e.cve_id)) bad_cves.insert(*e.cve_id);
    }
    std::vector<LeakageViolation> out;
    for (const auto& c : bad_cves) out.push_back({"cve", c});
    for (const auto& h : bad_hashes) out.push_back({"hash", h});
    return out;
}

}  // namespace testmine::corpus
