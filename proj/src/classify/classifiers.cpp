#include "testmine/classify/classifiers.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "testmine/error.hpp"
#include "testmine/text/normalize.hpp"
#include "testmine/text/similarity.hpp"
#include "testmine/text/yake.hpp"
#include "testmine/util/git.hpp"
#include "testmine/util/io.hpp"

namespace testmine::classify {

extern const char* const kSecurityKeywordsResource;

namespace {

constexpr double kGridEps = 1e-9;

std::set<std::string> yake_terms(std::string_view text, std::size_t k) {
    return text::yake_keywords(text, k).term_set();
}

std::vector<std::string> intersection(const std::set<std::string>& a, const std::set<std::string>& b) {
    std::vector<std::string> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

void require_positive(int v, const char* what) {
    if (v < 1) throw Error(ErrorCode::validation, std::string(what) + " must be >= 1");
}

}  // namespace

std::string_view to_string(FindingLabel l) noexcept {
    return l == FindingLabel::kSecurity ? "Security" : "Unclear";
}

std::string_view to_string(MatchLabel l) noexcept {
    return l == MatchLabel::kMatched ? "Matched" : "NotMatched";
}

std::vector<double> ParamGrid::values() const {
    std::vector<double> out;
    auto n = static_cast<long>(std::floor((hi - lo) / step + kGridEps));
    for (long i = 0; i <= n; ++i) {
        // Round to the step's precision so 0.3 + 3 * 0.05 prints as 0.45.
        out.push_back(std::round((lo + static_cast<double>(i) * step) * 1e6) / 1e6);
    }
    return out;
}

bool ParamGrid::contains(double v) const {
    if (v < lo - kGridEps || v > hi + kGridEps) return false;
    double q = (v - lo) / step;
    return std::fabs(q - std::round(q)) < 1e-6;
}

ParamGrid min_hits_grid() { return {1, 5, 1}; }
ParamGrid vocab_n_grid() { return {1, 10, 1}; }
ParamGrid yake_k_grid() { return {5, 30, 5}; }

ParamGrid threshold_grid(std::string_view provider) {
    if (provider == "yake") return {0.01, 0.05, 0.01};
    if (provider == "codebert") return {0.91, 0.95, 0.01};
    if (provider == "codet5p") return {0.70, 0.90, 0.05};
    if (provider == "unixcoder") return {0.30, 0.50, 0.05};
    throw Error(ErrorCode::validation, "no threshold grid for provider '" + std::string(provider) + "'");
}

void ClassifierConfig::validate() const {
    auto check = [](double v, const ParamGrid& g, const char* name) {
        if (!g.contains(v)) {
            throw Error(ErrorCode::validation, std::string(name) + "=" + fixed3(v) + " is outside [" + fixed3(g.lo) +
                                                   ", " + fixed3(g.hi) + "] step " + fixed3(g.step));
        }
    };
    check(min_hits, min_hits_grid(), "min_hits");
    check(n, vocab_n_grid(), "N");
    check(k, yake_k_grid(), "K");
    check(t, threshold_grid(t_provider), "T");
}

ClassifierConfig ClassifierConfig::from_json(const nlohmann::json& j) {
    ClassifierConfig c;
    c.min_hits = j.value("min_hits", c.min_hits);
    c.n = j.value("N", c.n);
    c.k = j.value("K", c.k);
    c.t_provider = j.value("T_provider", c.t_provider);
    c.t = j.value("T", threshold_grid(c.t_provider).lo);
    if (j.contains("keyword_list_path")) c.keyword_list_path = j["keyword_list_path"].get<std::string>();
    return c;
}

const std::vector<std::string>& default_security_keywords() {
    static const std::vector<std::string> list = util::parse_term_list(kSecurityKeywordsResource);
    return list;
}

std::vector<std::string> load_keywords(const ClassifierConfig& config) {
    if (config.keyword_list_path.empty()) return default_security_keywords();
    return util::load_term_list(config.keyword_list_path);
}

FindingVerdict grep_find(const java::TestMethod& test, const std::vector<std::string>& keywords, int min_hits) {
    require_positive(min_hits, "min_hits");
    FindingVerdict v;
    v.classifier_id = "grep-find";
    const auto body = util::to_lower(test.body_source);
    std::set<std::string> hits;
    for (const auto& kw : keywords) {
        auto k = util::to_lower(kw);
        if (!k.empty() && body.find(k) != std::string::npos) hits.insert(k);
    }
    v.evidence.assign(hits.begin(), hits.end());
    v.score = static_cast<double>(hits.size());
    v.label = static_cast<int>(hits.size()) >= min_hits ? FindingLabel::kSecurity : FindingLabel::kUnclear;
    return v;
}

std::set<std::string> Vocabulary::terms_of(const java::TestMethod& test) const {
    if (mode == VocabMode::kYake) return yake_terms(test.body_source, k);
    return text::extract_identifiers(test.body_source, split_identifiers);
}

Vocabulary fit_vocab(const std::vector<java::TestMethod>& train, VocabMode mode, std::size_t k,
                     bool split_identifiers) {
    if (train.empty()) throw Error(ErrorCode::fitting, "cannot fit a vocabulary on an empty training set");
    if (mode == VocabMode::kYake && k == 0) throw Error(ErrorCode::validation, "K must be >= 1");
    Vocabulary v;
    v.mode = mode;
    v.k = k;
    v.split_identifiers = split_identifiers;
    for (const auto& t : train) {
        auto terms = v.terms_of(t);
        v.terms.insert(terms.begin(), terms.end());
    }
    return v;
}

FindingVerdict vocab_find(const java::TestMethod& test, const Vocabulary& vocab, int n) {
    require_positive(n, "N");
    FindingVerdict v;
    v.classifier_id = vocab.mode == VocabMode::kYake ? "vocab-find-yake" : "vocab-find-iden";
    v.evidence = intersection(vocab.terms_of(test), vocab.terms);
    v.score = static_cast<double>(v.evidence.size());
    v.label = static_cast<int>(v.evidence.size()) >= n ? FindingLabel::kSecurity : FindingLabel::kUnclear;
    return v;
}

MatchVerdict grep_match(const java::TestMethod& test, const kb::VulnRecord& vuln, int min_hits) {
    require_positive(min_hits, "min_hits");
    MatchVerdict v;
    v.classifier_id = "grep-match";
    auto desc_tokens = text::remove_stopwords(text::tokenize_words(vuln.description), text::english_stopwords());
    if (desc_tokens.empty()) {
        v.warnings.push_back(vuln.cve_id + ": description has no terms");
        v.score = 0.0;
        return v;
    }
    std::set<std::string> desc(desc_tokens.begin(), desc_tokens.end());
    auto body_tokens = text::tokenize_words(test.body_source);
    std::set<std::string> body(body_tokens.begin(), body_tokens.end());
    v.evidence = intersection(desc, body);
    v.score = static_cast<double>(v.evidence.size());
    v.label = static_cast<int>(v.evidence.size()) >= min_hits ? MatchLabel::kMatched : MatchLabel::kNotMatched;
    return v;
}

MatchVerdict sim_match_yake(const java::TestMethod& test, const kb::VulnRecord& vuln, std::size_t k, double t) {
    MatchVerdict v;
    v.classifier_id = "sim-match-yake";
    auto a = yake_terms(test.body_source, k);
    auto b = yake_terms(vuln.description, k);
    if (b.empty()) v.warnings.push_back(vuln.cve_id + ": description has no keywords");
    double s = text::jaccard(a, b);
    v.score = s;
    v.evidence = intersection(a, b);
    if (v.evidence.empty()) v.evidence.push_back("jaccard=" + fixed3(s));
    v.label = s >= t ? MatchLabel::kMatched : MatchLabel::kNotMatched;
    return v;
}

MatchVerdict sim_match_embed(const java::TestMethod& test, const kb::VulnRecord& vuln,
                             EmbeddingProvider& embedder, double t) {
    MatchVerdict v;
    v.classifier_id = "sim-match-" + embedder.id();
    std::vector<double> a, b;
    try {
        a = embedder.embed(text::normalize_code(test.body_source));
        b = embedder.embed(vuln.description);
    } catch (const std::exception& e) {
        throw Error(ErrorCode::classification_unavailable,
                    embedder.id() + " embedding failed for " + vuln.cve_id + ": " + e.what());
    }
    double s = text::cosine(a, b);
    v.score = s;
    v.evidence.push_back("cosine=" + fixed3(s));
    v.label = s >= t ? MatchLabel::kMatched : MatchLabel::kNotMatched;
    return v;
}

FixCommitsResult fix_commits_match(const std::filesystem::path& repo_path, const kb::VulnRecord& vuln,
                                   const java::ExtractOptions& options) {
    FixCommitsResult out;
    if (vuln.fix_commits.empty()) {
        throw Error(ErrorCode::heuristic_unavailable, vuln.cve_id + ": no fix commits");
    }
    git::Repository repo(repo_path);
    std::size_t usable = 0;
    std::set<std::string> seen;  // identity@commit, to avoid duplicate pairs
    for (const auto& fix : vuln.fix_commits) {
        auto commit = repo.resolve_commit(fix);
        if (!commit) {
            out.warnings.push_back(vuln.cve_id + ": fix commit " + fix + " not found, skipped");
            spdlog::warn("{}", out.warnings.back());
            continue;
        }
        ++usable;
        auto parent = repo.first_parent(*commit);
        auto changed = repo.changed_files(parent.value_or(""), *commit);
        std::set<std::string> changed_java;
        for (const auto& p : changed) {
            if (p.size() > 5 && p.compare(p.size() - 5, 5, ".java") == 0) changed_java.insert(p);
        }
        if (changed_java.empty()) continue;

        auto after = java::extract_test_methods(repo_path, *commit, options).tests;
        std::map<std::string, std::string> before_hash;
        if (parent) {
            for (const auto& t : java::extract_test_methods(repo_path, *parent, options).tests) {
                before_hash.emplace(t.identity(), t.content_hash);
            }
        }
        for (auto& t : after) {
            if (!changed_java.count(t.file_path)) continue;
            auto it = before_hash.find(t.identity());
            if (it != before_hash.end() && it->second == t.content_hash) continue;
            if (!seen.insert(t.identity() + "@" + *commit).second) continue;
            out.pairs.push_back({std::move(t), vuln.cve_id, *commit});
        }
    }
    if (usable == 0) {
        throw Error(ErrorCode::heuristic_unavailable, vuln.cve_id + ": none of the fix commits exist in " +
                                                          repo_path.string());
    }
    return out;
}

nlohmann::ordered_json to_json(const FindingVerdict& v) {
    nlohmann::ordered_json j;
    j["label"] = to_string(v.label);
    j["score"] = v.score ? nlohmann::ordered_json(*v.score) : nlohmann::ordered_json(nullptr);
    j["classifier"] = v.classifier_id;
    j["evidence"] = v.evidence;
    if (v.unresolved) j["unresolved"] = true;
    if (!v.warnings.empty()) j["warnings"] = v.warnings;
    return j;
}

nlohmann::ordered_json to_json(const MatchVerdict& v) {
    nlohmann::ordered_json j;
    j["label"] = to_string(v.label);
    j["score"] = v.score ? nlohmann::ordered_json(*v.score) : nlohmann::ordered_json(nullptr);
    j["classifier"] = v.classifier_id;
    j["evidence"] = v.evidence;
    if (v.unresolved) j["unresolved"] = true;
    if (!v.warnings.empty()) j["warnings"] = v.warnings;
    return j;
}

}  // namespace testmine::classify
