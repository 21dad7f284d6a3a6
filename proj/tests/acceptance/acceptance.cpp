// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>

#include "git_fixture.hpp"
#include "oracles.hpp"
#include "stub_server.hpp"
#include "testmine/classify/classifiers.hpp"
#include "testmine/corpus/corpus.hpp"
#include "testmine/error.hpp"
#include "testmine/gateway/gateway.hpp"
#include "testmine/java/test_extractor.hpp"
#include "testmine/metrics/metrics.hpp"
#include "testmine/review/review.hpp"
#include "testmine/util/io.hpp"

using namespace testmine;

namespace {

const std::string kFixtures = TESTMINE_FIXTURES;

// Collects failed expectations for one criterion.
class Checks {
public:
    void expect(bool ok, const std::string& what) {
        ++n_;
        if (!ok && failures_.size() < 5) failures_.push_back(what);
        if (!ok) ++failed_;
    }
    void near(double got, double want, double tol, const std::string& what) {
        std::ostringstream s;
        s << what << ": got " << got << ", want " << want << " +- " << tol;
        expect(std::fabs(got - want) <= tol, s.str());
    }
    bool ok() const { return failed_ == 0; }
    std::size_t count() const { return n_; }
    std::string summary() const {
        std::string s = std::to_string(failed_) + " of " + std::to_string(n_) + " checks failed";
        for (const auto& f : failures_) s += "; " + f;
        return s;
    }

private:
    std::size_t n_ = 0, failed_ = 0;
    std::vector<std::string> failures_;
};

// ---- metrics ---------------------------------------------------------------

void metric_rows(Checks& c) {
    using metrics::evaluate;
    auto ds = evaluate({9, 3, 7905, 12});
    c.near(ds.precision, 0.75, 0.01, "deepseek precision");
    c.near(ds.recall, 0.43, 0.01, "deepseek recall");
    c.near(ds.f1, 0.55, 0.01, "deepseek F1");
    c.near(ds.f_beta, 0.65, 0.01, "deepseek F0.5");
    // Independent closed forms.
    c.near(ds.f_beta, 1.25 * 0.75 * (9.0 / 21) / (0.25 * 0.75 + 9.0 / 21), 1e-12, "deepseek F0.5 closed form");

    auto qw = evaluate({7, 1, 7907, 14});
    c.near(qw.precision, 0.88, 0.01, "qwen precision");
    c.near(qw.recall, 0.33, 0.01, "qwen recall");
    c.near(qw.f_beta, 0.66, 0.01, "qwen F0.5");
    c.near(qw.mcc, 0.54, 0.01, "qwen MCC");
    double mcc = (7.0 * 7907 - 1.0 * 14) / std::sqrt(8.0 * 21 * 7908 * 7921);
    c.near(qw.mcc, mcc, 1e-12, "qwen MCC closed form");

    auto ux = evaluate({10, 2, 7906, 11});
    c.near(ux.mcc, 0.63, 0.01, "unixcoder MCC");
    // Printed as 0.73; the closed form is 0.7246 (rounding caveat).
    c.near(ux.f_beta, 0.73, 0.01, "unixcoder F0.5");
}

void overlap(Checks& c) {
    std::set<std::string> a, b, truth;
    for (int i = 0; i < 5; ++i) a.insert("s" + std::to_string(i)), b.insert("s" + std::to_string(i));
    for (int i = 0; i < 7; ++i) a.insert("a" + std::to_string(i));
    for (int i = 0; i < 4; ++i) b.insert("b" + std::to_string(i));
    truth.insert(a.begin(), a.end());
    truth.insert(b.begin(), b.end());
    for (int i = 0; i < 5; ++i) truth.insert("m" + std::to_string(i));
    auto o = metrics::overlap_analysis(a, b, truth);
    c.expect(o.shared == 5 && o.only_a == 7 && o.only_b == 4, "overlap counts");
    c.expect(metrics::round_half_up(o.jaccard) == 0.31, "jaccard 0.31");
    c.expect(metrics::round_half_up(o.union_recall) == 0.76, "union recall 0.76");
    c.expect(metrics::round_half_up(o.intersection_recall) == 0.24, "intersection recall 0.24");
}

// ---- review precision --------------------------------------------------------

java::TestMethod numbered_test(int i) {
    java::TestMethod t;
    t.repo_id = "repo" + std::to_string(i % 9);
    t.revision = "0123456789abcdef0123456789abcdef01234567";
    t.file_path = "src/test/java/a/T" + std::to_string(i % 5) + "Test.java";
    t.class_qualified_name = "a.T" + std::to_string(i % 5) + "Test";
    t.method_name = "case" + std::to_string(i);
    t.signature = "void " + t.method_name + "()";
    t.body_source = "@Test void " + t.method_name + "() { run(" + std::to_string(i) + "); }";
    t.content_hash = java::content_hash(t.body_source);
    return t;
}

void review_precision(Checks& c) {
    using namespace review;
    testing::TempDir dir("acceptance-review");
    ReviewService svc(dir.path() / "log.jsonl", {"r1", "r2"});
    std::vector<Candidate> cands;
    for (int i = 0; i < 316; ++i) cands.push_back({Kind::kFinding, numbered_test(i), std::nullopt, "llm", {}});
    for (int i = 0; i < 96; ++i) {
        kb::VulnRecord v;
        v.cve_id = "CVE-2022-" + std::to_string(20000 + i);
        v.description = "d";
        v.sources = {kb::Source::kReef};
        cands.push_back({Kind::kMatching, numbered_test(1000 + i), v, "llm", {}});
    }
    auto ids = svc.enqueue(cands);
    c.expect(ids.size() == 412, "412 items queued");
    auto verdict = [](bool ok) { return ok ? Verdict::kCorrect : Verdict::kIncorrect; };
    for (std::size_t i = 0; i < ids.size(); ++i) {
        bool ok = i < 316 ? i < 224 : i - 316 < 45;
        bool disputed = i % 7 == 3;
        svc.submit_judgment({ids[i], "r1", verdict(ok), "", ""});
        svc.submit_judgment({ids[i], "r2", verdict(disputed ? !ok : ok), "", ""});
        if (disputed) svc.resolve_dispute(ids[i], verdict(ok), "consensus");
    }
    auto f = svc.agreement_report(Kind::kFinding);
    c.expect(f.n_final == 316 && f.n_correct == 224, "finding counts 224/316");
    c.near(f.precision, 224.0 / 316, 1e-12, "finding precision");
    c.expect(std::floor(f.precision * 100) / 100 == 0.70, "finding precision truncates to 0.70");
    c.near(f.precision, 0.70, 0.01, "finding precision vs 0.70");
    auto m = svc.agreement_report(Kind::kMatching);
    c.expect(m.n_final == 96 && m.n_correct == 45, "matching counts 45/96");
    c.expect(metrics::round_half_up(m.precision) == 0.47, "matching precision 0.47");
}

// ---- extraction ----------------------------------------------------------------

void extraction(Checks& c) {
    testing::TempDir dir("acceptance-golden");
    testing::commit_fixture(kFixtures + "/golden_repo", dir.path());
    auto t0 = std::chrono::steady_clock::now();
    auto result = java::extract_test_methods(dir.path(), "HEAD", {"golden"});
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string text;
    for (const auto& t : result.tests) text += java::to_json(t).dump() + "\n";
    c.expect(text == util::read_file(kFixtures + "/golden_repo.expected.jsonl"), "golden JSONL byte-equal");
    c.expect(result.errors.empty(), "no file errors");
    c.expect(secs < 1.0, "extraction under 1 s (" + std::to_string(secs) + " s)");
}

// ---- classifiers ---------------------------------------------------------------

java::TestMethod body_test(std::string body, int i) {
    java::TestMethod t;
    t.repo_id = "r";
    t.class_qualified_name = "a.FooTest";
    t.method_name = "case" + std::to_string(i);
    t.signature = "void " + t.method_name + "()";
    t.body_source = std::move(body);
    t.content_hash = java::content_hash(t.body_source);
    return t;
}

void classifier_oracles(Checks& c) {
    using namespace classify;
    oracle::CorpusGen gen(20250521);
    std::vector<java::TestMethod> tests;
    std::vector<kb::VulnRecord> vulns;
    for (int i = 0; i < 200; ++i) {
        tests.push_back(body_test(gen.body(), i));
        kb::VulnRecord v;
        v.cve_id = "CVE-2024-" + std::to_string(10000 + i);
        v.description = gen.description();
        v.sources = {kb::Source::kProjectKb};
        vulns.push_back(v);
    }
    const auto& keywords = default_security_keywords();
    for (double mh : min_hits_grid().values()) {
        int h = static_cast<int>(mh);
        for (std::size_t i = 0; i < tests.size(); ++i) {
            c.expect(grep_find(tests[i], keywords, h).positive() == oracle::grep_find(tests[i].body_source, keywords, h),
                     "grep_find #" + std::to_string(i));
            c.expect(grep_match(tests[i], vulns[i], h).positive() ==
                         oracle::grep_match(tests[i].body_source, vulns[i].description, h),
                     "grep_match #" + std::to_string(i));
        }
    }
    std::vector<java::TestMethod> train(tests.begin(), tests.begin() + 20);
    for (double kd : yake_k_grid().values()) {
        auto k = static_cast<std::size_t>(kd);
        std::vector<std::set<std::string>> body_terms, desc_terms;
        for (std::size_t i = 0; i < tests.size(); ++i) {
            body_terms.push_back(oracle::yake_set(tests[i].body_source, k));
            desc_terms.push_back(oracle::yake_set(vulns[i].description, k));
        }
        for (double t : threshold_grid("yake").values()) {
            for (std::size_t i = 0; i < tests.size(); ++i) {
                c.expect(sim_match_yake(tests[i], vulns[i], k, t).positive() ==
                             (oracle::jaccard(body_terms[i], desc_terms[i]) >= t),
                         "sim_match_yake #" + std::to_string(i));
            }
        }
        auto vocab = fit_vocab(train, VocabMode::kYake, k);
        std::set<std::string> oracle_vocab;
        for (std::size_t i = 0; i < train.size(); ++i) oracle_vocab.insert(body_terms[i].begin(), body_terms[i].end());
        c.expect(vocab.terms == oracle_vocab, "YAKE vocabulary");
        for (double n : vocab_n_grid().values()) {
            for (std::size_t i = 0; i < tests.size(); ++i) {
                c.expect(vocab_find(tests[i], vocab, static_cast<int>(n)).positive() ==
                             oracle::vocab_find(body_terms[i], oracle_vocab, static_cast<int>(n)),
                         "vocab_find yake #" + std::to_string(i));
            }
        }
    }
    for (bool split : {true, false}) {
        auto vocab = fit_vocab(train, VocabMode::kIdentifiers, 0, split);
        std::set<std::string> oracle_vocab;
        for (const auto& t : train) {
            auto terms = oracle::identifier_terms(t.body_source, split);
            oracle_vocab.insert(terms.begin(), terms.end());
        }
        c.expect(vocab.terms == oracle_vocab, "identifier vocabulary");
        for (double n : vocab_n_grid().values()) {
            for (const auto& t : tests) {
                c.expect(vocab_find(t, vocab, static_cast<int>(n)).positive() ==
                             oracle::vocab_find(oracle::identifier_terms(t.body_source, split), oracle_vocab,
                                                static_cast<int>(n)),
                         "vocab_find identifiers " + t.method_name);
            }
        }
    }
}

// ---- FixCommits -----------------------------------------------------------------

void fix_commits(Checks& c) {
    testing::TempDir dir("acceptance-fix");
    auto repo = dir.path();
    testing::init_repo(repo);
    const std::string test_path = "src/test/java/a/FooTest.java";
    const std::string main_path = "src/main/java/a/Foo.java";
    auto test_file = [](const std::string& methods) {
        return "package a;\nimport org.junit.Test;\npublic class FooTest {\n" + methods + "}\n";
    };
    testing::write_text(repo / main_path, "package a;\npublic class Foo { int f() { return 1; } }\n");
    testing::write_text(repo / test_path, test_file("    @Test public void keeps() { new Foo().f(); }\n"
                                                    "    @Test public void changes() { assert new Foo().f() == 1; }\n"));
    testing::commit_all(repo, "initial");
    testing::write_text(repo / main_path, "package a;\npublic class Foo { int f() { return 2; } }\n");
    testing::write_text(repo / test_path, test_file("    @Test public void keeps() { new Foo().f(); }\n"
                                                    "    @Test public void changes() { assert new Foo().f() == 2; }\n"
                                                    "    @Test public void added() { assert new Foo().f() > 0; }\n"));
    auto fix1 = testing::commit_all(repo, "fix one");
    testing::write_text(repo / main_path, "package a;\npublic class Foo { int f() { return 3; } }\n");
    auto fix2 = testing::commit_all(repo, "fix two");

    kb::VulnRecord v;
    v.cve_id = "CVE-2024-0001";
    v.description = "Foo returns the wrong value.";
    v.sources = {kb::Source::kProjectKb};
    v.fix_commits = {fix1, fix2};
    auto result = classify::fix_commits_match(repo, v, {"r", 1});
    std::set<std::pair<std::string, std::string>> got;
    for (const auto& p : result.pairs) got.insert({p.test.method_name, p.fix_commit});
    c.expect(result.pairs.size() == 2, "exactly two pairs");
    c.expect(got == std::set<std::pair<std::string, std::string>>{{"added", fix1}, {"changes", fix1}},
             "pairs are the added and the modified test");

    v.cve_id = "CVE-2010-0684";
    v.fix_commits = {fix2};
    c.expect(classify::fix_commits_match(repo, v, {"r", 1}).pairs.empty(), "no-test fix yields nothing");
}

// ---- datasets --------------------------------------------------------------------

void datasets(Checks& c) {
    using namespace corpus;
    std::vector<LabeledExample> data;
    for (std::size_t i = 0; i < 108 + 39542; ++i) {
        LabeledExample e;
        e.repo_id = "repo" + std::to_string(i % 17);
        e.hash = "h" + std::to_string(i);
        e.label = i % 367 == 0 && i / 367 < 108;
        data.push_back(e);
    }
    auto count_pos = [](const std::vector<LabeledExample>& v) {
        return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](const auto& e) { return e.label; }));
    };
    c.expect(count_pos(data) == 108, "108 positives generated");
    auto s = stratified_split(data, {}, 42);
    c.expect(count_pos(s.test) == 21, "21 test positives");
    std::set<std::string> seen;
    bool disjoint = true;
    for (auto* part : {&s.train, &s.dev, &s.test}) {
        for (const auto& e : *part) disjoint &= seen.insert(e.hash).second;
    }
    c.expect(disjoint, "parts disjoint");
    c.expect(seen.size() == data.size(), "parts exhaustive");
    const double shares[3] = {0.7, 0.1, 0.2};
    const std::vector<LabeledExample>* parts[3] = {&s.train, &s.dev, &s.test};
    for (int i = 0; i < 3; ++i) {
        double pos = static_cast<double>(count_pos(*parts[i]));
        double neg = static_cast<double>(parts[i]->size()) - pos;
        c.expect(std::fabs(pos - 108 * shares[i]) <= 1.0, "positive deviation part " + std::to_string(i));
        c.expect(std::fabs(neg - 39542 * shares[i]) <= 1.0, "negative deviation part " + std::to_string(i));
    }

    std::vector<LabeledExample> small;
    for (int i = 0; i < 100; ++i) {
        LabeledExample e;
        e.hash = "s" + std::to_string(i);
        e.label = i < 10;
        small.push_back(e);
    }
    auto over = bootstrap_oversample(small, {0.25, 7});
    c.expect(count_pos(over) == 30, "oversampled minority is 30");
    c.expect(over.size() == 120, "majority untouched");

    std::vector<LabeledExample> pre, test;
    for (int i = 0; i < 40; ++i) {
        pre.push_back({Kind::kFinding, "r", "p" + std::to_string(i), std::nullopt, false, Split::kTrain});
        test.push_back({Kind::kFinding, "r", "t" + std::to_string(i), std::nullopt, false, Split::kTest});
    }
    c.expect(leakage_check(pre, test).empty(), "no false alarms on disjoint inputs");
    test.push_back({Kind::kFinding, "r", "p3", std::nullopt, true, Split::kTest});
    test.push_back({Kind::kFinding, "r", "p17", std::nullopt, false, Split::kTest});
    auto v = leakage_check(pre, test);
    c.expect(v == std::vector<LeakageViolation>{{"hash", "p17"}, {"hash", "p3"}}, "planted overlaps flagged");
}

// ---- prompts ----------------------------------------------------------------------

void prompts(Checks& c) {
    using namespace gateway;
    java::TestMethod golden;
    for (const auto& row : util::read_jsonl(kFixtures + "/golden_repo.expected.jsonl")) {
        if (row["method"] == "rejectsTraversal") golden = java::test_method_from_json(row);
    }
    kb::VulnRecord v;
    v.cve_id = "CVE-2019-0225";
    v.description = util::read_file(kFixtures + "/prompts/description.txt");
    v.sources = {kb::Source::kReef};
    c.expect(render_chat(build_matching_prompt(golden, v)) ==
                 util::read_file(kFixtures + "/prompts/matching_cve_2019_0225.txt"),
             "matching prompt byte-equal");

    const std::pair<const char*, Resolution> table[] = {
        {"1", Resolution::kPositive},  {"prefix 0.", Resolution::kNegative},   {"0", Resolution::kNegative},
        {"0.", Resolution::kNegative}, {"no digit", Resolution::kUnresolved}, {"", Resolution::kUnresolved},
    };
    for (const auto& [raw, want] : table) {
        c.expect(parse_digit(raw) == want, std::string("parse '") + raw + "'");
        auto mv = parse_matching_response(raw, "llm");
        c.expect(mv.positive() == (want == Resolution::kPositive), std::string("verdict '") + raw + "'");
        c.expect(mv.unresolved == (want == Resolution::kUnresolved), std::string("unresolved '") + raw + "'");
    }

    const std::vector<std::pair<std::string, bool>> script = {
        {"1", true}, {"0.", false}, {"The answer is 1", true}, {"none", false}, {"0", false}, {"1\n", true}};
    testing::StubServer stub;
    std::mutex mu;
    std::size_t next = 0;
    stub.http().Post("/generate", [&](const httplib::Request&, httplib::Response& res) {
        std::lock_guard lock(mu);
        res.set_content(nlohmann::json{{"text", script[next++].first}}.dump(), "application/json");
    });
    stub.start();
    EndpointConfig cfg;
    cfg.base_url = stub.url();
    cfg.model_id = "stub";
    InferenceClient client(cfg);
    std::vector<bool> got, want;
    for (std::size_t i = 0; i < script.size(); ++i) {
        got.push_back(parse_matching_response(classify_remote(build_matching_prompt(golden, v), client), "llm").positive());
        want.push_back(script[i].second);
    }
    c.expect(got == want, "verdict stream equals the script");
}

// ---- kappa ------------------------------------------------------------------------

void kappa(Checks& c) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<bool> v;
        for (int i = 0; i < 500; ++i) v.push_back(rng() % 2);
        c.near(metrics::cohen_kappa(v, v).kappa, 1.0, 1e-12, "identical vectors");
    }
    std::vector<bool> a, b;
    for (int i = 0; i < 10000; ++i) {
        a.push_back(rng() % 2);
        b.push_back(rng() % 2);
    }
    c.near(metrics::cohen_kappa(a, b).kappa, 0.0, 0.05, "independent vectors");

    // 12 both yes, 2 first only, 1 second only, 5 both no.
    std::vector<bool> x, y;
    auto add = [&](int n, bool p, bool q) {
        for (int i = 0; i < n; ++i) x.push_back(p), y.push_back(q);
    };
    add(12, true, true);
    add(2, true, false);
    add(1, false, true);
    add(5, false, false);
    double po = 17.0 / 20, pe = (14.0 * 13 + 6.0 * 7) / 400;
    double want = (po - pe) / (1 - pe);
    double got = metrics::cohen_kappa(x, y).kappa;
    c.expect(std::round(got * 10000) == std::round(want * 10000), "fixture table to 4 decimals");
    c.expect(std::round(got * 10000) / 10000 == 0.6591, "fixture kappa 0.6591");
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Checks&)>>> criteria = {
        {"metric arithmetic vs published rows", metric_rows},
        {"overlap analysis", overlap},
        {"validation precision (synthetic substitute)", review_precision},
        {"extraction golden file", extraction},
        {"classifier oracles", classifier_oracles},
        {"fix-commit matching", fix_commits},
        {"dataset properties", datasets},
        {"prompt golden, parsing and stub round trip", prompts},
        {"kappa properties", kappa},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Checks c;
        std::string error;
        try {
            fn(c);
        } catch (const std::exception& e) {
            error = e.what();
        }
        bool ok = error.empty() && c.ok() && c.count() > 0;
        failed += !ok;
        std::cout << (ok ? "PASS " : "FAIL ") << name << " (" << c.count() << " checks)";
        if (!error.empty()) std::cout << ": exception: " << error;
        if (!c.ok()) std::cout << ": " << c.summary();
        std::cout << "\n";
    }
    return failed == 0 ? 0 : 1;
}
