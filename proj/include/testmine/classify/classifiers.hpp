#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "testmine/java/test_extractor.hpp"
#include "testmine/kb/vuln_kb.hpp"

namespace testmine::classify {

enum class FindingLabel { kSecurity, kUnclear };
enum class MatchLabel { kMatched, kNotMatched };

std::string_view to_string(FindingLabel l) noexcept;
std::string_view to_string(MatchLabel l) noexcept;

struct FindingVerdict {
    FindingLabel label = FindingLabel::kUnclear;
    std::optional<double> score;
    std::string classifier_id;
    std::vector<std::string> evidence;
    bool unresolved = false;  // model answer without a usable digit
    std::vector<std::string> warnings;

    bool positive() const noexcept { return label == FindingLabel::kSecurity; }
};

struct MatchVerdict {
    MatchLabel label = MatchLabel::kNotMatched;
    std::optional<double> score;
    std::string classifier_id;
    std::vector<std::string> evidence;
    bool unresolved = false;
    std::vector<std::string> warnings;

    bool positive() const noexcept { return label == MatchLabel::kMatched; }
};

/// Inclusive arithmetic grid lo, lo+step, ..., hi.
struct ParamGrid {
    double lo = 0;
    double hi = 0;
    double step = 1;

    std::vector<double> values() const;
    bool contains(double v) const;
};

// Documented search ranges.
ParamGrid min_hits_grid();
ParamGrid vocab_n_grid();
ParamGrid yake_k_grid();
/// Similarity-threshold grid for a provider: "yake", "codebert", "codet5p"
/// or "unixcoder". Throws Error(validation) for other names.
ParamGrid threshold_grid(std::string_view provider);

struct ClassifierConfig {
    int min_hits = 1;
    int n = 1;
    int k = 5;
    double t = 0.01;
    std::string t_provider = "yake";
    std::filesystem::path keyword_list_path;  // empty = bundled list

    /// Throws Error(validation) naming the first field outside its grid.
    void validate() const;

    static ClassifierConfig from_json(const nlohmann::json& j);
};

/// The bundled security keyword list (resources/security_keywords.txt).
const std::vector<std::string>& default_security_keywords();
std::vector<std::string> load_keywords(const ClassifierConfig& config);

/// Security iff at least `min_hits` distinct keywords occur as
/// case-insensitive substrings of the body.
FindingVerdict grep_find(const java::TestMethod& test, const std::vector<std::string>& keywords, int min_hits);

enum class VocabMode { kYake, kIdentifiers };

struct Vocabulary {
    std::set<std::string> terms;
    VocabMode mode = VocabMode::kIdentifiers;
    std::size_t k = 0;               // yake mode
    bool split_identifiers = false;  // identifiers mode

    /// Terms of one test under this vocabulary's mode and parameters.
    std::set<std::string> terms_of(const java::TestMethod& test) const;
};

/// Union of the per-test term sets. Throws Error(fitting) when `train` is empty.
Vocabulary fit_vocab(const std::vector<java::TestMethod>& train, VocabMode mode, std::size_t k = 0,
                     bool split_identifiers = true);

/// Security iff |terms(test) ∩ vocab| >= n.
FindingVerdict vocab_find(const java::TestMethod& test, const Vocabulary& vocab, int n);

/// Stopword-free description tokens found as whole tokens of the body;
/// Matched iff at least `min_hits` distinct ones occur.
MatchVerdict grep_match(const java::TestMethod& test, const kb::VulnRecord& vuln, int min_hits);

/// Matched iff Jaccard(top-K YAKE terms of body, of description) >= t.
MatchVerdict sim_match_yake(const java::TestMethod& test, const kb::VulnRecord& vuln, std::size_t k, double t);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::string id() const = 0;
    /// Throws on failure; any exception is reported as classification-unavailable.
    virtual std::vector<double> embed(const std::string& text) = 0;
};

/// Matched iff cosine(embed(normalized body), embed(description)) >= t.
MatchVerdict sim_match_embed(const java::TestMethod& test, const kb::VulnRecord& vuln,
                             EmbeddingProvider& embedder, double t);

struct FixCommitPair {
    java::TestMethod test;
    std::string cve_id;
    std::string fix_commit;
};

struct FixCommitsResult {
    std::vector<FixCommitPair> pairs;
    std::vector<std::string> warnings;
};

/// For each fix commit, compares the test methods at the commit and at its
/// first parent; tests whose identity is new, or whose content hash
/// changed, are paired with the vulnerability. Unknown commits are skipped
/// with a warning; if every commit is unknown the heuristic is unavailable.
FixCommitsResult fix_commits_match(const std::filesystem::path& repo_path, const kb::VulnRecord& vuln,
                                   const java::ExtractOptions& options = {});

nlohmann::ordered_json to_json(const FindingVerdict& v);
nlohmann::ordered_json to_json(const MatchVerdict& v);

}  // namespace testmine::classify
