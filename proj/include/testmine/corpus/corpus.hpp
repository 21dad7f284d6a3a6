#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "testmine/java/test_extractor.hpp"
#include "testmine/kb/vuln_kb.hpp"

namespace testmine::corpus {

enum class Kind { kFinding, kMatching };
enum class Split { kNone, kTrain, kDev, kTest };

std::string_view to_string(Kind k) noexcept;
std::string_view to_string(Split s) noexcept;
Kind kind_from_string(std::string_view s);
Split split_from_string(std::string_view s);

struct LabeledExample {
    Kind kind = Kind::kFinding;
    std::string repo_id;
    std::string hash;                   // content_hash of the test
    std::optional<std::string> cve_id;  // matching only
    bool label = false;                 // true = positive class
    Split split = Split::kNone;

    friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

nlohmann::ordered_json to_json(const LabeledExample& e);
LabeledExample labeled_example_from_json(const nlohmann::json& j);

void export_dataset(const std::vector<LabeledExample>& examples, const std::filesystem::path& path);
std::vector<LabeledExample> import_dataset(const std::filesystem::path& path);

/// Positive iff the hash is in `positive_hashes`.
std::vector<LabeledExample> build_finding_examples(const std::vector<java::TestMethod>& tests,
                                                   const std::set<std::string>& positive_hashes);

/// (content_hash, cve_id)
using Link = std::pair<std::string, std::string>;

/// Cartesian product of tests and vulnerabilities within each project;
/// pairs in `links` are positive, all others negative. Cross-project pairs
/// are never produced. Output order: project, test, vulnerability.
std::vector<LabeledExample> build_matching_pairs(const std::map<std::string, std::vector<java::TestMethod>>& tests,
                                                 const std::map<std::string, std::vector<std::string>>& vulns,
                                                 const std::set<Link>& links);

/// Deterministic, platform-independent RNG helpers. The standard
/// distributions are implementation-defined, so shuffling and sampling go
/// through these instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    /// Uniform integer in [0, bound), bound > 0, by rejection sampling.
    std::uint64_t below(std::uint64_t bound);
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

struct SplitRatios {
    double train = 0.70;
    double dev = 0.10;
    double test = 0.20;
};

/// Per-class counts for the three parts by largest remainder. Ties in the
/// remainder go to train, then dev, then test.
std::array<std::size_t, 3> allocate_counts(std::size_t n, const SplitRatios& ratios);

struct DatasetSplit {
    std::vector<LabeledExample> train;
    std::vector<LabeledExample> dev;
    std::vector<LabeledExample> test;
    SplitRatios ratios;
    std::uint64_t seed = 0;
};

/// Stratified by label. Each part keeps input order; examples carry their
/// part in `split`.
DatasetSplit stratified_split(const std::vector<LabeledExample>& examples, const SplitRatios& ratios,
                              std::uint64_t seed);

struct OversampleConfig {
    double target_ratio = 0.25;
    std::uint64_t seed = 0;
};

/// Smallest m' >= m with m' / (m' + majority) >= ratio.
std::size_t oversample_target(std::size_t minority, std::size_t majority, double ratio);

/// Appends exact copies of minority examples, drawn uniformly with
/// replacement, until the target ratio is met. Throws Error(dataset) when
/// the minority class is empty.
std::vector<LabeledExample> bootstrap_oversample(const std::vector<LabeledExample>& train,
                                                 const OversampleConfig& config);

struct CampaignReport {
    std::size_t input = 0;
    std::size_t training = 0;
    std::size_t no_description = 0;
    std::size_t unreachable_url = 0;
    std::size_t excluded = 0;  // manual exclusion list
    std::size_t no_tests = 0;

    std::size_t dropped() const noexcept {
        return training + no_description + unreachable_url + excluded + no_tests;
    }
};

struct CampaignResult {
    std::vector<kb::VulnRecord> kept;
    std::vector<std::string> projects;  // distinct project URLs of `kept`, sorted
    CampaignReport report;
};

struct CampaignProbes {
    /// True when the project URL can be cloned/reached.
    std::function<bool(const std::string& url)> reachable;
    /// Number of test methods extracted from the project.
    std::function<std::size_t(const std::string& url)> count_tests;
};

/// Filters, in order: training CVEs, empty descriptions, missing or
/// unreachable project URLs, manually excluded projects, projects without
/// tests. Each project is probed at most once.
CampaignResult filter_campaign(const kb::Catalog& catalog, const std::set<std::string>& training_ids,
                               const std::set<std::string>& excluded_urls, const CampaignProbes& probes);

nlohmann::ordered_json to_json(const CampaignReport& r);

struct LeakageViolation {
    std::string kind;  // "hash" or "cve"
    std::string value;
    friend bool operator==(const LeakageViolation&, const LeakageViolation&) = default;
};

/// Every test hash and CVE id shared between the pre-training data and the
/// test set, sorted and without repeats.
std::vector<LeakageViolation> leakage_check(const std::vector<LabeledExample>& pretrain,
                                            const std::vector<LabeledExample>& test);

}  // namespace testmine::corpus
