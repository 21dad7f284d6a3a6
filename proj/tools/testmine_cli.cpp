// testmine command-line front end. Every verb reads and writes files (or
// stdin/stdout); nothing is kept between invocations.

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "testmine/classify/classifiers.hpp"
#include "testmine/corpus/corpus.hpp"
#include "testmine/error.hpp"
#include "testmine/gateway/gateway.hpp"
#include "testmine/java/test_extractor.hpp"
#include "testmine/kb/vuln_kb.hpp"
#include "testmine/metrics/metrics.hpp"
#include "testmine/review/review.hpp"
#include "testmine/util/git.hpp"
#include "testmine/util/io.hpp"

namespace fs = std::filesystem;
using namespace testmine;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
        std::cout.flush();
    } else {
        util::write_file_atomic(out_path, text);
    }
}

std::vector<java::TestMethod> read_tests(const std::string& path) {
    std::vector<java::TestMethod> out;
    std::vector<json> rows;
    if (path == "-") {
        std::string text((std::istreambuf_iterator<char>(std::cin)), std::istreambuf_iterator<char>());
        rows = util::parse_jsonl(text);
    } else {
        rows = util::read_jsonl(path);
    }
    for (const auto& r : rows) out.push_back(java::test_method_from_json(r));
    return out;
}

std::array<std::string, 2> parse_reviewers(const std::string& s) {
    auto comma = s.find(',');
    if (comma == std::string::npos) throw Error(ErrorCode::validation, "--reviewers takes two ids: a,b");
    return {util::trim(s.substr(0, comma)), util::trim(s.substr(comma + 1))};
}

// Config file: JSON with optional sections "classifier", "endpoint", "kb",
// "seed" and "workers". Command-line flags win over it.
struct Settings {
    json doc = json::object();
    classify::ClassifierConfig classifier;
    gateway::EndpointConfig endpoint;
    kb::RemoteConfig remote;
    std::string kb_path;
    std::uint64_t seed = 0;
    std::size_t workers = 0;

    void load(const std::string& path) {
        if (!path.empty()) {
            try {
                doc = json::parse(util::read_file(path));
            } catch (const json::exception& e) {
                throw Error(ErrorCode::parse, path + ": " + e.what());
            }
        }
        if (doc.contains("classifier")) classifier = classify::ClassifierConfig::from_json(doc["classifier"]);
        if (doc.contains("endpoint")) {
            const auto& e = doc["endpoint"];
            endpoint.base_url = e.value("base_url", "");
            endpoint.model_id = e.value("model_id", "");
            endpoint.max_input_tokens = e.value("max_input_tokens", endpoint.max_input_tokens);
            endpoint.max_in_flight = e.value("max_in_flight", endpoint.max_in_flight);
            endpoint.timeout = std::chrono::milliseconds(e.value("timeout_ms", 60000));
            endpoint.request_log = e.value("request_log", "");
        }
        if (doc.contains("kb")) {
            const auto& k = doc["kb"];
            kb_path = k.value("path", "");
            remote.endpoint = k.value("remote_endpoint", "");
            remote.timeout = std::chrono::milliseconds(k.value("timeout_ms", 10000));
        }
        seed = doc.value("seed", seed);
        workers = doc.value("workers", workers);
        endpoint.apply_env();
        if (const char* v = std::getenv("TESTMINE_KB_ENDPOINT"); v && *v) remote.endpoint = v;
    }
};

// Per-verdict provenance so later stages (eval, review) can join on it.
ojson verdict_row(const java::TestMethod& t, const std::optional<std::string>& cve, ojson verdict) {
    ojson row;
    row["repo_id"] = t.repo_id;
    row["hash"] = t.content_hash;
    row["cve"] = cve ? ojson(*cve) : ojson(nullptr);
    row["positive"] = verdict["label"] == "Security" || verdict["label"] == "Matched";
    row["verdict"] = std::move(verdict);
    row["test"] = java::to_json(t);
    return row;
}

// ---- extract --------------------------------------------------------------

struct ExtractArgs {
    std::string repo;
    std::string revision = "HEAD";
    std::string repo_id;
    std::string out;
    std::string workdir;
    bool dedupe = false;
};

int cmd_extract(const ExtractArgs& a, const Settings& s) {
    fs::path path = a.repo;
    if (git::is_remote_url(a.repo)) {
        fs::path base = a.workdir.empty() ? fs::temp_directory_path() / "testmine-clones" : fs::path(a.workdir);
        auto name = util::sha256_hex(a.repo).substr(0, 12);
        path = base / name;
        auto t0 = Clock::now();
        git::clone_at(a.repo, path, a.revision, false);
        spdlog::info("cloned {} in {:.2f}s", a.repo, seconds_since(t0));
    }
    java::ExtractOptions opts;
    opts.repo_id = a.repo_id.empty() ? a.repo : a.repo_id;
    opts.workers = s.workers;
    auto t0 = Clock::now();
    auto result = java::extract_test_methods(path, git::is_remote_url(a.repo) ? "HEAD" : a.revision, opts);
    double secs = seconds_since(t0);
    for (const auto& e : result.errors) spdlog::warn("{}: {}", e.path, e.message);
    auto tests = a.dedupe ? java::dedupe_tests(result.tests) : result.tests;
    spdlog::info("extract: {} tests ({} file errors) in {:.3f}s, {:.0f} tests/s", tests.size(),
                 result.errors.size(), secs, secs > 0 ? static_cast<double>(tests.size()) / secs : 0.0);
    std::string text;
    for (const auto& t : tests) text += java::to_json(t).dump() + "\n";
    emit(a.out, text);
    return 0;
}

// ---- kb ---------------------------------------------------------------------

int cmd_kb_merge(const std::string& sources_path, const std::string& out) {
    // [{"path": "...", "adapter": {"source": "projectkb", ...}}, ...]
    auto doc = json::parse(util::read_file(sources_path));
    fs::path base = fs::path(sources_path).parent_path();
    std::vector<kb::SourceBatch> batches;
    for (const auto& entry : doc) {
        fs::path p = entry.at("path").get<std::string>();
        if (p.is_relative()) p = base / p;
        batches.push_back(kb::load_source(p, kb::SourceAdapter::from_json(entry.at("adapter"))));
        spdlog::info("{}: {} records", p.string(), batches.back().records.size());
    }
    auto catalog = kb::merge_sources(batches);
    for (const auto& n : catalog.notes) spdlog::warn("{}", n);
    kb::save_catalog(catalog, out);
    std::cout << kb::to_json(kb::stats(catalog)).dump() << "\n";
    return 0;
}

int cmd_kb_lookup(const std::string& catalog_path, const std::string& cve, bool remote, const Settings& s) {
    kb::Fetcher fetch;
    if (remote) fetch = [cfg = s.remote](const std::string& id) { return kb::fetch_remote(id, cfg); };
    kb::KnowledgeBase base(kb::load_catalog(catalog_path), fetch);
    std::cout << kb::to_json(base.lookup(cve, remote)).dump() << "\n";
    return 0;
}

int cmd_kb_stats(const std::string& catalog_path) {
    std::cout << kb::to_json(kb::stats(kb::load_catalog(catalog_path))).dump(2) << "\n";
    return 0;
}

// ---- find -------------------------------------------------------------------

struct FindArgs {
    std::string tests;
    std::string classifier = "grep";
    std::string train;
    std::string out;
    bool split_identifiers = true;
};

int cmd_find(const FindArgs& a, const Settings& s) {
    const auto& cfg = s.classifier;
    cfg.validate();
    auto tests = read_tests(a.tests);
    std::string text;
    auto t0 = Clock::now();
    if (a.classifier == "grep") {
        auto keywords = classify::load_keywords(cfg);
        for (const auto& t : tests) {
            text += verdict_row(t, std::nullopt, classify::to_json(classify::grep_find(t, keywords, cfg.min_hits))).dump() + "\n";
        }
    } else if (a.classifier == "vocab-yake" || a.classifier == "vocab-iden") {
        if (a.train.empty()) throw Error(ErrorCode::validation, "--train is required for " + a.classifier);
        auto mode = a.classifier == "vocab-yake" ? classify::VocabMode::kYake : classify::VocabMode::kIdentifiers;
        auto vocab = classify::fit_vocab(read_tests(a.train), mode, static_cast<std::size_t>(cfg.k), a.split_identifiers);
        spdlog::info("vocabulary: {} terms", vocab.terms.size());
        for (const auto& t : tests) {
            text += verdict_row(t, std::nullopt, classify::to_json(classify::vocab_find(t, vocab, cfg.n))).dump() + "\n";
        }
    } else if (a.classifier == "llm") {
        gateway::InferenceClient client(s.endpoint);
        std::size_t unresolved = 0;
        for (const auto& t : tests) {
            auto env = gateway::build_finding_prompt(t, s.endpoint.max_input_tokens);
            auto v = gateway::parse_finding_response(gateway::classify_remote(env, client), "llm-" + s.endpoint.model_id);
            if (v.unresolved) ++unresolved;
            text += verdict_row(t, std::nullopt, classify::to_json(v)).dump() + "\n";
        }
        if (unresolved) spdlog::warn("{} unresolved model answers counted as Unclear", unresolved);
    } else {
        throw Error(ErrorCode::validation, "unknown finding classifier '" + a.classifier + "'");
    }
    spdlog::info("find: {} tests in {:.3f}s", tests.size(), seconds_since(t0));
    emit(a.out, text);
    return 0;
}

// ---- match ------------------------------------------------------------------

struct MatchArgs {
    std::string tests;
    std::string catalog;
    std::vector<std::string> cves;
    std::string classifier = "grep";
    std::string repo;  // fix-commits
    std::string out;
};

int cmd_match(const MatchArgs& a, const Settings& s) {
    const auto& cfg = s.classifier;
    cfg.validate();
    auto catalog = kb::load_catalog(a.catalog.empty() ? s.kb_path : a.catalog);
    std::vector<kb::VulnRecord> vulns;
    if (a.cves.empty()) {
        for (const auto& [id, r] : catalog.records) vulns.push_back(r);
    } else {
        kb::Fetcher fetch;
        if (!s.remote.endpoint.empty()) {
            fetch = [cfg = s.remote](const std::string& id) { return kb::fetch_remote(id, cfg); };
        }
        kb::KnowledgeBase base(std::move(catalog), fetch);
        for (const auto& id : a.cves) vulns.push_back(base.lookup(id, static_cast<bool>(fetch)));
    }
    std::string text;
    auto t0 = Clock::now();
    if (a.classifier == "fix-commits") {
        if (a.repo.empty()) throw Error(ErrorCode::validation, "--repo is required for fix-commits");
        // Pairs not flagged are implicitly negative; only positives are listed.
        for (const auto& v : vulns) {
            auto r = classify::fix_commits_match(a.repo, v, {a.repo, s.workers});
            for (const auto& w : r.warnings) spdlog::warn("{}", w);
            for (const auto& p : r.pairs) {
                classify::MatchVerdict mv;
                mv.label = classify::MatchLabel::kMatched;
                mv.classifier_id = "fix-commits";
                mv.evidence = {p.fix_commit};
                text += verdict_row(p.test, v.cve_id, classify::to_json(mv)).dump() + "\n";
            }
        }
        emit(a.out, text);
        return 0;
    }

    auto tests = read_tests(a.tests);
    std::unique_ptr<gateway::InferenceClient> client;
    std::unique_ptr<gateway::RemoteEmbeddingProvider> embedder;
    if (a.classifier == "llm" || a.classifier == "sim-embed") {
        client = std::make_unique<gateway::InferenceClient>(s.endpoint);
        embedder = std::make_unique<gateway::RemoteEmbeddingProvider>(*client);
    }
    std::size_t skipped = 0;
    for (const auto& t : tests) {
        for (const auto& v : vulns) {
            classify::MatchVerdict mv;
            if (a.classifier == "grep") {
                mv = classify::grep_match(t, v, cfg.min_hits);
            } else if (a.classifier == "sim-yake") {
                mv = classify::sim_match_yake(t, v, static_cast<std::size_t>(cfg.k), cfg.t);
            } else if (a.classifier == "sim-embed") {
                try {
                    mv = classify::sim_match_embed(t, v, *embedder, cfg.t);
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::classification_unavailable) throw;
                    spdlog::warn("{}", e.what());
                    ++skipped;
                    continue;
                }
            } else if (a.classifier == "llm") {
                auto env = gateway::build_matching_prompt(t, v, s.endpoint.max_input_tokens);
                mv = gateway::parse_matching_response(gateway::classify_remote(env, *client),
                                                      "llm-" + s.endpoint.model_id);
            } else {
                throw Error(ErrorCode::validation, "unknown matching classifier '" + a.classifier + "'");
            }
            text += verdict_row(t, v.cve_id, classify::to_json(mv)).dump() + "\n";
        }
    }
    spdlog::info("match: {} pairs ({} skipped) in {:.3f}s", tests.size() * vulns.size(), skipped, seconds_since(t0));
    emit(a.out, text);
    return 0;
}

// ---- eval -------------------------------------------------------------------

int cmd_eval(const std::string& verdicts_path, const std::string& truth_path, double beta, const std::string& split,
             bool table) {
    // Truth is a dataset file; verdicts join on (hash, cve).
    std::map<std::pair<std::string, std::string>, bool> predicted;
    for (const auto& row : util::read_jsonl(verdicts_path)) {
        std::string cve = row.contains("cve") && row["cve"].is_string() ? row["cve"].get<std::string>() : "";
        predicted[{row.at("hash").get<std::string>(), cve}] = row.at("positive").get<bool>();
    }
    std::vector<bool> pred, truth;
    std::size_t missing = 0;
    for (const auto& e : corpus::import_dataset(truth_path)) {
        if (!split.empty() && corpus::to_string(e.split) != split) continue;
        auto it = predicted.find({e.hash, e.cve_id.value_or("")});
        // Absent verdicts are negatives (e.g. FixCommits lists positives only).
        if (it == predicted.end()) ++missing;
        pred.push_back(it != predicted.end() && it->second);
        truth.push_back(e.label);
    }
    if (missing) spdlog::info("{} examples without a verdict counted as negative", missing);
    auto report = metrics::evaluate(metrics::confusion(pred, truth), beta);
    if (table) {
        std::cout << metrics::format_table({{fs::path(verdicts_path).stem().string(), report}});
    } else {
        std::cout << metrics::to_json(report).dump(2) << "\n";
    }
    return 0;
}

// ---- dataset ------------------------------------------------------------------

int cmd_dataset_build(const std::string& kind, const std::string& tests_path, const std::string& positives,
                      const std::string& project_vulns, const std::string& out) {
    auto tests = read_tests(tests_path);
    std::vector<corpus::LabeledExample> examples;
    if (kind == "finding") {
        // positives: one content hash per line
        auto lines = positives.empty() ? std::vector<std::string>{} : util::load_term_list(positives);
        examples = corpus::build_finding_examples(tests, {lines.begin(), lines.end()});
    } else if (kind == "matching") {
        // project_vulns: {"repo_id": ["CVE-..", ...]}; positives: "hash cve" per line
        auto doc = json::parse(util::read_file(project_vulns));
        std::map<std::string, std::vector<std::string>> vulns;
        for (auto it = doc.begin(); it != doc.end(); ++it) vulns[it.key()] = it.value().get<std::vector<std::string>>();
        std::map<std::string, std::vector<java::TestMethod>> by_project;
        for (auto& t : tests) by_project[t.repo_id].push_back(t);
        std::set<corpus::Link> links;
        if (!positives.empty()) {
            for (const auto& line : util::load_term_list(positives)) {
                auto sp = line.find_first_of(" \t");
                if (sp == std::string::npos) throw Error(ErrorCode::parse, "link line needs 'hash cve': " + line);
                links.insert({line.substr(0, sp), util::trim(line.substr(sp + 1))});
            }
        }
        examples = corpus::build_matching_pairs(by_project, vulns, links);
    } else {
        throw Error(ErrorCode::validation, "--kind must be finding or matching");
    }
    corpus::export_dataset(examples, out);
    spdlog::info("dataset: {} examples", examples.size());
    return 0;
}

ojson split_summary(const corpus::DatasetSplit& s) {
    ojson j;
    for (auto [name, part] : {std::pair{"train", &s.train}, {"dev", &s.dev}, {"test", &s.test}}) {
        std::size_t pos = 0;
        for (const auto& e : *part) pos += e.label;
        j[name] = {{"total", part->size()}, {"positive", pos}};
    }
    j["seed"] = s.seed;
    return j;
}

int cmd_dataset_split(const std::string& in, const std::string& out, std::uint64_t seed) {
    auto split = corpus::stratified_split(corpus::import_dataset(in), {}, seed);
    std::vector<corpus::LabeledExample> all;
    for (auto* part : {&split.train, &split.dev, &split.test}) all.insert(all.end(), part->begin(), part->end());
    corpus::export_dataset(all, out);
    std::cout << split_summary(split).dump() << "\n";
    return 0;
}

int cmd_dataset_oversample(const std::string& in, const std::string& out, double ratio, std::uint64_t seed) {
    auto examples = corpus::import_dataset(in);
    std::vector<corpus::LabeledExample> train, rest;
    for (auto& e : examples) (e.split == corpus::Split::kTrain || e.split == corpus::Split::kNone ? train : rest).push_back(e);
    auto augmented = corpus::bootstrap_oversample(train, {ratio, seed});
    spdlog::info("oversample: train {} -> {}", train.size(), augmented.size());
    augmented.insert(augmented.end(), rest.begin(), rest.end());
    corpus::export_dataset(augmented, out);
    return 0;
}

int cmd_dataset_check(const std::string& pretrain, const std::string& test) {
    auto test_examples = corpus::import_dataset(test);
    std::vector<corpus::LabeledExample> test_part;
    for (auto& e : test_examples) {
        if (e.split == corpus::Split::kTest || e.split == corpus::Split::kNone) test_part.push_back(e);
    }
    auto violations = corpus::leakage_check(corpus::import_dataset(pretrain), test_part);
    ojson j = ojson::array();
    for (const auto& v : violations) j.push_back({{"kind", v.kind}, {"value", v.value}});
    std::cout << j.dump() << "\n";
    return violations.empty() ? 0 : 3;
}

// ---- review -------------------------------------------------------------------

int cmd_review_enqueue(const std::string& log, const std::string& reviewers, const std::string& verdicts,
                       const std::string& catalog_path, const std::string& exclude) {
    review::ReviewService service(log, parse_reviewers(reviewers));
    kb::Catalog catalog;
    if (!catalog_path.empty()) catalog = kb::load_catalog(catalog_path);
    std::set<std::string> excluded;
    if (!exclude.empty()) {
        auto lines = util::load_term_list(exclude);
        excluded.insert(lines.begin(), lines.end());
    }
    std::vector<review::Candidate> candidates;
    for (const auto& row : util::read_jsonl(verdicts)) {
        if (!row.at("positive").get<bool>()) continue;
        review::Candidate c;
        c.test = java::test_method_from_json(row.at("test"));
        c.classifier_id = row["verdict"].value("classifier", "");
        c.evidence = row["verdict"].value("evidence", std::vector<std::string>{});
        if (row.contains("cve") && row["cve"].is_string()) {
            c.kind = corpus::Kind::kMatching;
            const auto* v = catalog.find(row["cve"].get<std::string>());
            if (!v) throw Error(ErrorCode::not_found, row["cve"].get<std::string>() + " not in --catalog");
            c.vuln = *v;
        }
        candidates.push_back(std::move(c));
    }
    auto added = service.enqueue(candidates, excluded);
    spdlog::info("enqueued {} of {} flagged candidates", added.size(), candidates.size());
    return 0;
}

int cmd_review_serve(const std::string& log, const std::string& reviewers, const review::ServerOptions& opts) {
    review::ReviewService service(log, parse_reviewers(reviewers));
    review::serve(service, opts);
    return 0;
}

int cmd_export(const std::string& log, const std::string& reviewers, const std::string& out, bool report) {
    review::ReviewService service(log, parse_reviewers(reviewers));
    if (report) {
        ojson j;
        j["finding"] = review::to_json(service.agreement_report(corpus::Kind::kFinding));
        j["matching"] = review::to_json(service.agreement_report(corpus::Kind::kMatching));
        std::cerr << j.dump() << "\n";
    }
    service.export_test4vul(out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    auto logger = spdlog::stderr_color_mt("testmine");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");

    CLI::App app{"Mine JUnit tests from Java repositories and classify them for security relevance."};
    app.require_subcommand(1);
    std::string config_path;
    bool verbose = false, quiet = false;
    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_flag("-v,--verbose", verbose, "debug logging");
    app.add_flag("-q,--quiet", quiet, "warnings and errors only");

    Settings settings;
    // Classifier overrides, shared by find and match.
    std::optional<int> min_hits, n, k;
    std::optional<double> t;
    std::optional<std::string> t_provider, keywords, endpoint, model;
    std::optional<std::uint64_t> seed;
    auto add_classifier_opts = [&](CLI::App* sub) {
        sub->add_option("--min-hits", min_hits, "GrepFind/GrepMatch hit threshold (1-5)");
        sub->add_option("--k", k, "YAKE keyword count (5-30, step 5)");
        sub->add_option("--t", t, "similarity threshold");
        sub->add_option("--t-provider", t_provider, "threshold grid: yake, codebert, codet5p, unixcoder");
        sub->add_option("--keywords", keywords, "keyword list file")->check(CLI::ExistingFile);
        sub->add_option("--endpoint", endpoint, "inference service base URL");
        sub->add_option("--model", model, "model id sent to the inference service");
    };

    ExtractArgs ea;
    auto* extract = app.add_subcommand("extract", "extract JUnit test methods as JSON Lines");
    extract->add_option("repo", ea.repo, "repository path or URL")->required();
    extract->add_option("--revision", ea.revision, "commit or ref");
    extract->add_option("--repo-id", ea.repo_id, "identifier written to each record");
    extract->add_option("-o,--out", ea.out, "output file (default stdout)");
    extract->add_option("--workdir", ea.workdir, "clone directory for remote repositories");
    extract->add_flag("--dedupe", ea.dedupe, "drop methods with duplicate normalized bodies");

    auto* kbcmd = app.add_subcommand("kb", "vulnerability knowledge base");
    kbcmd->require_subcommand(1);
    std::string kb_sources, kb_out, kb_catalog, kb_cve;
    bool kb_remote = false;
    auto* kb_merge = kbcmd->add_subcommand("merge", "merge upstream datasets into a catalog");
    kb_merge->add_option("sources", kb_sources, "JSON list of {path, adapter}")->required()->check(CLI::ExistingFile);
    kb_merge->add_option("-o,--out", kb_out, "catalog file")->required();
    auto* kb_lookup = kbcmd->add_subcommand("lookup", "look up one CVE");
    kb_lookup->add_option("cve", kb_cve)->required();
    kb_lookup->add_option("--catalog", kb_catalog, "catalog file");
    kb_lookup->add_flag("--remote", kb_remote, "fetch and store misses from the remote service");
    kb_lookup->add_option("--kb-endpoint", settings.remote.endpoint, "remote lookup base URL");
    auto* kb_stats = kbcmd->add_subcommand("stats", "catalog statistics");
    kb_stats->add_option("--catalog", kb_catalog, "catalog file");

    FindArgs fa;
    auto* find = app.add_subcommand("find", "classify tests as Security or Unclear");
    find->add_option("tests", fa.tests, "tests JSONL ('-' for stdin)")->required();
    find->add_option("-c,--classifier", fa.classifier, "grep, vocab-yake, vocab-iden or llm");
    find->add_option("--train", fa.train, "Security-labeled training tests (vocab classifiers)");
    find->add_option("--n", n, "VocabFind threshold (1-10)");
    find->add_flag("!--no-split", fa.split_identifiers, "keep identifiers whole (vocab-iden)");
    find->add_option("-o,--out", fa.out, "output file (default stdout)");
    add_classifier_opts(find);

    MatchArgs ma;
    auto* match = app.add_subcommand("match", "classify (test, vulnerability) pairs");
    match->add_option("tests", ma.tests, "tests JSONL");
    match->add_option("--catalog", ma.catalog, "catalog file");
    match->add_option("--cve", ma.cves, "restrict to these CVEs (repeatable)");
    match->add_option("-c,--classifier", ma.classifier, "grep, sim-yake, sim-embed, llm or fix-commits");
    match->add_option("--repo", ma.repo, "repository with history (fix-commits)");
    match->add_option("-o,--out", ma.out, "output file (default stdout)");
    add_classifier_opts(match);

    std::string ev_verdicts, ev_truth, ev_split;
    double ev_beta = 0.5;
    bool ev_table = false;
    auto* eval = app.add_subcommand("eval", "metrics of a verdict file against a labeled dataset");
    eval->add_option("verdicts", ev_verdicts)->required()->check(CLI::ExistingFile);
    eval->add_option("--truth", ev_truth, "dataset JSONL")->required()->check(CLI::ExistingFile);
    eval->add_option("--split", ev_split, "only examples of this split");
    eval->add_option("--beta", ev_beta, "F-beta weight");
    eval->add_flag("--table", ev_table, "aligned text table instead of JSON");

    auto* dataset = app.add_subcommand("dataset", "build, split, oversample and check datasets");
    dataset->require_subcommand(1);
    std::string ds_kind = "finding", ds_tests, ds_pos, ds_vulns, ds_in, ds_out, ds_pretrain;
    double ds_ratio = 0.25;
    auto* ds_build = dataset->add_subcommand("build", "label tests or test/vulnerability pairs");
    ds_build->add_option("--kind", ds_kind, "finding or matching");
    ds_build->add_option("--tests", ds_tests)->required();
    ds_build->add_option("--positives", ds_pos, "positive hashes (finding) or 'hash cve' links (matching)");
    ds_build->add_option("--project-vulns", ds_vulns, "JSON map repo_id -> CVE ids (matching)");
    ds_build->add_option("-o,--out", ds_out)->required();
    auto* ds_split = dataset->add_subcommand("split", "stratified 70/10/20 split");
    ds_split->add_option("in", ds_in)->required();
    ds_split->add_option("-o,--out", ds_out)->required();
    ds_split->add_option("--seed", seed);
    auto* ds_over = dataset->add_subcommand("oversample", "bootstrap the minority class of the training part");
    ds_over->add_option("in", ds_in)->required();
    ds_over->add_option("-o,--out", ds_out)->required();
    ds_over->add_option("--ratio", ds_ratio, "target minority ratio");
    ds_over->add_option("--seed", seed);
    auto* ds_check = dataset->add_subcommand("check", "leakage between pre-training data and the test set");
    ds_check->add_option("--pretrain", ds_pretrain)->required();
    ds_check->add_option("--test", ds_in)->required();

    auto* rev = app.add_subcommand("review", "two-reviewer validation campaign");
    rev->require_subcommand(1);
    std::string rv_log, rv_reviewers, rv_verdicts, rv_catalog, rv_exclude;
    review::ServerOptions server_opts;
    std::string static_dir;
    auto* rv_enqueue = rev->add_subcommand("enqueue", "queue the positive verdicts of a find/match run");
    rv_enqueue->add_option("verdicts", rv_verdicts)->required()->check(CLI::ExistingFile);
    rv_enqueue->add_option("--catalog", rv_catalog, "catalog for matching candidates");
    rv_enqueue->add_option("--exclude", rv_exclude, "test hashes to skip, one per line");
    auto* rv_serve = rev->add_subcommand("serve", "HTTP API for the triage frontend");
    rv_serve->add_option("--host", server_opts.host);
    rv_serve->add_option("--port", server_opts.port);
    rv_serve->add_option("--static", static_dir, "frontend assets mounted at /");
    rv_serve->add_option("--token", server_opts.token, "shared bearer token");
    for (auto* sub : {rv_enqueue, rv_serve}) {
        sub->add_option("--log", rv_log, "event log")->required();
        sub->add_option("--reviewers", rv_reviewers, "the two reviewer ids, a,b")->required();
    }

    std::string ex_out;
    bool ex_report = false;
    auto* exp = app.add_subcommand("export", "write the validated dataset");
    exp->add_option("--log", rv_log, "event log")->required()->check(CLI::ExistingFile);
    exp->add_option("--reviewers", rv_reviewers, "the two reviewer ids, a,b")->required();
    exp->add_option("-o,--out", ex_out)->required();
    exp->add_flag("--report", ex_report, "print agreement reports to stderr");

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);

    try {
        std::string remote_override = settings.remote.endpoint;
        settings.load(config_path);
        if (!remote_override.empty()) settings.remote.endpoint = remote_override;
        auto& c = settings.classifier;
        if (min_hits) c.min_hits = *min_hits;
        if (n) c.n = *n;
        if (k) c.k = *k;
        if (t_provider) {
            c.t_provider = *t_provider;
            if (!t) c.t = classify::threshold_grid(c.t_provider).lo;
        }
        if (t) c.t = *t;
        if (keywords) c.keyword_list_path = *keywords;
        if (endpoint) settings.endpoint.base_url = *endpoint;
        if (model) settings.endpoint.model_id = *model;
        if (seed) settings.seed = *seed;
        if (kb_catalog.empty()) kb_catalog = settings.kb_path;
        if (!static_dir.empty()) server_opts.static_dir = static_dir;

        if (*extract) return cmd_extract(ea, settings);
        if (*kb_merge) return cmd_kb_merge(kb_sources, kb_out);
        if (*kb_lookup) return cmd_kb_lookup(kb_catalog, kb_cve, kb_remote, settings);
        if (*kb_stats) return cmd_kb_stats(kb_catalog);
        if (*find) return cmd_find(fa, settings);
        if (*match) return cmd_match(ma, settings);
        if (*eval) return cmd_eval(ev_verdicts, ev_truth, ev_beta, ev_split, ev_table);
        if (*ds_build) return cmd_dataset_build(ds_kind, ds_tests, ds_pos, ds_vulns, ds_out);
        if (*ds_split) return cmd_dataset_split(ds_in, ds_out, settings.seed);
        if (*ds_over) return cmd_dataset_oversample(ds_in, ds_out, ds_ratio, settings.seed);
        if (*ds_check) return cmd_dataset_check(ds_pretrain, ds_in);
        if (*rv_enqueue) return cmd_review_enqueue(rv_log, rv_reviewers, rv_verdicts, rv_catalog, rv_exclude);
        if (*rv_serve) return cmd_review_serve(rv_log, rv_reviewers, server_opts);
        if (*exp) return cmd_export(rv_log, rv_reviewers, ex_out, ex_report);
    } catch (const Error& e) {
        std::cerr << ojson{{"error", to_string(e.code())}, {"message", e.what()}}.dump() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << ojson{{"error", "fatal"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    }
    return 0;
}
