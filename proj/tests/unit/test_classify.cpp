#include <doctest.h>

#include "git_fixture.hpp"
#include "oracles.hpp"
#include "testmine/classify/classifiers.hpp"
#include "testmine/error.hpp"
#include "testmine/text/normalize.hpp"

using namespace testmine;
using namespace testmine::classify;

namespace {

java::TestMethod make_test(std::string body, std::string name = "t") {
    java::TestMethod t;
    t.repo_id = "r";
    t.class_qualified_name = "a.FooTest";
    t.method_name = std::move(name);
    t.signature = "void " + t.method_name + "()";
    t.body_source = std::move(body);
    t.content_hash = java::content_hash(t.body_source);
    return t;
}

kb::VulnRecord make_vuln(std::string id, std::string desc) {
    kb::VulnRecord v;
    v.cve_id = std::move(id);
    v.description = std::move(desc);
    v.sources = {kb::Source::kProjectKb};
    return v;
}

struct Corpus {
    std::vector<java::TestMethod> tests;
    std::vector<kb::VulnRecord> vulns;  // vulns[i] pairs with tests[i]
};

Corpus random_corpus(std::size_t n, std::uint64_t seed) {
    oracle::CorpusGen gen(seed);
    Corpus c;
    for (std::size_t i = 0; i < n; ++i) {
        c.tests.push_back(make_test(gen.body(), "case" + std::to_string(i)));
        c.vulns.push_back(make_vuln("CVE-2024-" + std::to_string(10000 + i), gen.description()));
    }
    return c;
}

// Deterministic bag-of-letters embedding: good enough to give varied cosines.
class LetterEmbedder : public EmbeddingProvider {
public:
    std::string id() const override { return "letters"; }
    std::vector<double> embed(const std::string& text) override {
        std::vector<double> v(26, 0.0);
        for (char c : text) {
            if (c >= 'a' && c <= 'z') v[c - 'a'] += 1;
            if (c >= 'A' && c <= 'Z') v[c - 'A'] += 1;
        }
        seen.push_back(text);
        return v;
    }
    std::vector<std::string> seen;
};

class BrokenEmbedder : public EmbeddingProvider {
public:
    std::string id() const override { return "broken"; }
    std::vector<double> embed(const std::string&) override { throw std::runtime_error("connection refused"); }
};

}  // namespace

TEST_CASE("parameter grids") {
    CHECK(min_hits_grid().values() == std::vector<double>{1, 2, 3, 4, 5});
    CHECK(vocab_n_grid().values().size() == 10);
    CHECK(yake_k_grid().values() == std::vector<double>{5, 10, 15, 20, 25, 30});
    CHECK(threshold_grid("yake").values() == std::vector<double>{0.01, 0.02, 0.03, 0.04, 0.05});
    CHECK(threshold_grid("codebert").values() == std::vector<double>{0.91, 0.92, 0.93, 0.94, 0.95});
    CHECK(threshold_grid("codet5p").values() == std::vector<double>{0.70, 0.75, 0.80, 0.85, 0.90});
    CHECK(threshold_grid("unixcoder").values() == std::vector<double>{0.30, 0.35, 0.40, 0.45, 0.50});
    CHECK_THROWS_AS(threshold_grid("word2vec"), Error);
    CHECK(threshold_grid("codet5p").contains(0.85));
    CHECK_FALSE(threshold_grid("codet5p").contains(0.86));
}

TEST_CASE("config validation names the offending field") {
    ClassifierConfig c;
    CHECK_NOTHROW(c.validate());
    auto expect_invalid = [](ClassifierConfig cfg, const char* field) {
        try {
            cfg.validate();
            FAIL("expected validation error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::validation);
            CHECK(std::string(e.what()).find(field) != std::string::npos);
        }
    };
    auto bad = c;
    bad.min_hits = 6;
    expect_invalid(bad, "min_hits");
    bad = c;
    bad.n = 0;
    expect_invalid(bad, "N");
    bad = c;
    bad.k = 12;
    expect_invalid(bad, "K");
    bad = c;
    bad.t_provider = "unixcoder";
    bad.t = 0.9;
    expect_invalid(bad, "T");

    auto j = nlohmann::json::parse(R"({"min_hits": 3, "N": 4, "K": 20, "T_provider": "codebert"})");
    auto parsed = ClassifierConfig::from_json(j);
    CHECK(parsed.min_hits == 3);
    CHECK(parsed.n == 4);
    CHECK(parsed.k == 20);
    CHECK(parsed.t == doctest::Approx(0.91));
    CHECK_NOTHROW(parsed.validate());
}

TEST_CASE("grep_find") {
    std::vector<std::string> kws = {"password", "XSS", "inject"};
    auto t = make_test("void t() { login(PASSWORD); xssFilter.apply(); injector.run(); }");
    auto v = grep_find(t, kws, 3);
    CHECK(v.positive());
    CHECK(v.evidence == std::vector<std::string>{"inject", "password", "xss"});
    CHECK(v.score == 3.0);
    CHECK_FALSE(grep_find(make_test("void t() { assertEquals(1, 1); }"), kws, 1).positive());
    CHECK_THROWS_AS(grep_find(t, kws, 0), Error);
    CHECK(default_security_keywords().size() > 20);
}

TEST_CASE("grep_match uses whole tokens and ignores stopwords") {
    auto t = make_test("void t() { resolver.resolve(\"../../etc/passwd\"); assertThrows(Traversal.class); }");
    auto v = make_vuln("CVE-2019-0225", "The resolver allows path traversal to read passwd.");
    auto m = grep_match(t, v, 1);
    CHECK(m.evidence == std::vector<std::string>{"passwd", "resolver", "traversal"});
    CHECK(grep_match(t, v, 3).positive());
    CHECK_FALSE(grep_match(t, v, 4).positive());
    // "to" and "the" are in the body as substrings only, and are stopwords anyway.
    auto empty = grep_match(t, make_vuln("CVE-2019-0001", "the of and"), 1);
    CHECK_FALSE(empty.positive());
    CHECK(empty.warnings.size() == 1);
}

TEST_CASE("sim_match_yake") {
    auto t = make_test("void t() { PathResolver resolver = new PathResolver(root); resolver.traversal(); }");
    auto v = make_vuln("CVE-2019-0225", "Path traversal in the PathResolver lets attackers escape the root.");
    auto m = sim_match_yake(t, v, 10, 0.01);
    REQUIRE(m.score);
    CHECK(*m.score == oracle::jaccard(oracle::yake_set(t.body_source, 10), oracle::yake_set(v.description, 10)));
    CHECK(m.positive());
    auto none = sim_match_yake(make_test("void t() { assertTrue(flag); }"), v, 5, 0.01);
    CHECK_FALSE(none.positive());
    CHECK(none.evidence == std::vector<std::string>{"jaccard=0.000"});
}

TEST_CASE("classifiers agree with brute-force oracles over the search ranges") {
    auto corpus = random_corpus(200, 20250521);
    const auto& keywords = default_security_keywords();

    SUBCASE("grep_find, min_hits 1-5") {
        for (double mh : min_hits_grid().values()) {
            for (const auto& t : corpus.tests) {
                CHECK(grep_find(t, keywords, static_cast<int>(mh)).positive() ==
                      oracle::grep_find(t.body_source, keywords, static_cast<int>(mh)));
            }
        }
    }
    SUBCASE("grep_match, min_hits 1-5") {
        for (double mh : min_hits_grid().values()) {
            for (std::size_t i = 0; i < corpus.tests.size(); ++i) {
                CHECK(grep_match(corpus.tests[i], corpus.vulns[i], static_cast<int>(mh)).positive() ==
                      oracle::grep_match(corpus.tests[i].body_source, corpus.vulns[i].description,
                                         static_cast<int>(mh)));
            }
        }
    }
    SUBCASE("sim_match_yake, K 5-30, T 0.01-0.05") {
        for (double k : yake_k_grid().values()) {
            std::vector<std::set<std::string>> body_terms, desc_terms;
            for (std::size_t i = 0; i < corpus.tests.size(); ++i) {
                body_terms.push_back(oracle::yake_set(corpus.tests[i].body_source, static_cast<std::size_t>(k)));
                desc_terms.push_back(oracle::yake_set(corpus.vulns[i].description, static_cast<std::size_t>(k)));
            }
            for (double t : threshold_grid("yake").values()) {
                for (std::size_t i = 0; i < corpus.tests.size(); ++i) {
                    CHECK(sim_match_yake(corpus.tests[i], corpus.vulns[i], static_cast<std::size_t>(k), t).positive() ==
                          (oracle::jaccard(body_terms[i], desc_terms[i]) >= t));
                }
            }
        }
    }
    SUBCASE("vocab_find (identifiers), N 1-10") {
        std::vector<java::TestMethod> train(corpus.tests.begin(), corpus.tests.begin() + 20);
        for (bool split : {true, false}) {
            auto vocab = fit_vocab(train, VocabMode::kIdentifiers, 0, split);
            std::set<std::string> oracle_vocab;
            for (const auto& t : train) {
                auto terms = oracle::identifier_terms(t.body_source, split);
                oracle_vocab.insert(terms.begin(), terms.end());
            }
            REQUIRE(vocab.terms == oracle_vocab);
            for (double n : vocab_n_grid().values()) {
                for (const auto& t : corpus.tests) {
                    CHECK(vocab_find(t, vocab, static_cast<int>(n)).positive() ==
                          oracle::vocab_find(oracle::identifier_terms(t.body_source, split), oracle_vocab,
                                             static_cast<int>(n)));
                }
            }
        }
    }
    SUBCASE("vocab_find (YAKE), K 5-30, N 1-10") {
        std::vector<java::TestMethod> train(corpus.tests.begin(), corpus.tests.begin() + 20);
        for (double k : yake_k_grid().values()) {
            auto kk = static_cast<std::size_t>(k);
            auto vocab = fit_vocab(train, VocabMode::kYake, kk);
            std::set<std::string> oracle_vocab;
            for (const auto& t : train) {
                auto terms = oracle::yake_set(t.body_source, kk);
                oracle_vocab.insert(terms.begin(), terms.end());
            }
            REQUIRE(vocab.terms == oracle_vocab);
            std::vector<std::set<std::string>> test_terms;
            for (const auto& t : corpus.tests) test_terms.push_back(oracle::yake_set(t.body_source, kk));
            for (double n : vocab_n_grid().values()) {
                for (std::size_t i = 0; i < corpus.tests.size(); ++i) {
                    CHECK(vocab_find(corpus.tests[i], vocab, static_cast<int>(n)).positive() ==
                          oracle::vocab_find(test_terms[i], oracle_vocab, static_cast<int>(n)));
                }
            }
        }
    }
    SUBCASE("sim_match_embed over every embedding threshold grid") {
        LetterEmbedder emb;
        for (const char* provider : {"codebert", "codet5p", "unixcoder"}) {
            for (double t : threshold_grid(provider).values()) {
                for (std::size_t i = 0; i < corpus.tests.size(); ++i) {
                    double cos = oracle::cosine(emb.embed(text::normalize_code(corpus.tests[i].body_source)),
                                                emb.embed(corpus.vulns[i].description));
                    CHECK(sim_match_embed(corpus.tests[i], corpus.vulns[i], emb, t).positive() == (cos >= t));
                }
            }
        }
    }
}

TEST_CASE("thresholds are monotone") {
    auto corpus = random_corpus(60, 7);
    auto count = [&](auto&& positive) {
        std::size_t n = 0;
        for (std::size_t i = 0; i < corpus.tests.size(); ++i) n += positive(i);
        return n;
    };
    std::size_t prev = SIZE_MAX;
    for (double mh : min_hits_grid().values()) {
        auto c = count([&](std::size_t i) {
            return grep_find(corpus.tests[i], default_security_keywords(), static_cast<int>(mh)).positive();
        });
        CHECK(c <= prev);
        prev = c;
    }
    prev = SIZE_MAX;
    for (double t : threshold_grid("yake").values()) {
        auto c = count([&](std::size_t i) { return sim_match_yake(corpus.tests[i], corpus.vulns[i], 15, t).positive(); });
        CHECK(c <= prev);
        prev = c;
    }
    auto vocab = fit_vocab({corpus.tests.begin(), corpus.tests.begin() + 10}, VocabMode::kIdentifiers);
    prev = SIZE_MAX;
    for (double n : vocab_n_grid().values()) {
        auto c = count([&](std::size_t i) { return vocab_find(corpus.tests[i], vocab, static_cast<int>(n)).positive(); });
        CHECK(c <= prev);
        prev = c;
    }
}

TEST_CASE("fit_vocab on a five-test training set") {
    std::vector<java::TestMethod> train = {
        make_test("void a() { csrfToken.verify(); }", "a"),
        make_test("void b() { sanitizePath(input); }", "b"),
        make_test("void c() { // comment words are not identifiers\n escapeHtml(\"<b>\"); }", "c"),
        make_test("void d() { HTTPServer server = new HTTPServer(); }", "d"),
        make_test("void e() { String password = null; }", "e"),
    };
    auto split = fit_vocab(train, VocabMode::kIdentifiers, 0, true);
    CHECK(split.terms == std::set<std::string>{"a", "b", "c", "csrf", "d", "e", "escape", "html", "http", "input",
                                               "password", "path", "sanitize", "server", "string", "token",
                                               "verify"});
    auto whole = fit_vocab(train, VocabMode::kIdentifiers, 0, false);
    CHECK(whole.terms == std::set<std::string>{"a", "b", "c", "csrftoken", "d", "e", "escapehtml", "httpserver",
                                               "input", "password", "sanitizepath", "server", "string", "verify"});

    auto probe = make_test("void p() { csrfToken.check(password); }");
    auto v = vocab_find(probe, split, 3);
    CHECK(v.evidence == std::vector<std::string>{"csrf", "password", "token"});
    CHECK(v.positive());
    CHECK_FALSE(vocab_find(probe, split, 4).positive());
    CHECK(v.classifier_id == "vocab-find-iden");

    try {
        fit_vocab({}, VocabMode::kIdentifiers);
        FAIL("expected fitting error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::fitting);
    }
}

TEST_CASE("sim_match_embed embeds the normalized body and reports failures") {
    LetterEmbedder emb;
    auto t = make_test("void t()  {\n\n   run();\n}");
    auto v = make_vuln("CVE-2020-0001", "run");
    auto m = sim_match_embed(t, v, emb, 0.5);
    REQUIRE(emb.seen.size() == 2);
    CHECK(emb.seen[0] == "void t() { run(); }");
    CHECK(m.classifier_id == "sim-match-letters");

    BrokenEmbedder broken;
    try {
        sim_match_embed(t, v, broken, 0.5);
        FAIL("expected classification_unavailable");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::classification_unavailable);
    }
}

TEST_CASE("fix_commits_match on a constructed history") {
    testing::TempDir dir("fixcommits");
    auto repo = dir.path();
    testing::init_repo(repo);
    const std::string test_path = "src/test/java/a/FooTest.java";
    const std::string main_path = "src/main/java/a/Foo.java";
    testing::write_text(repo / main_path, "package a;\npublic class Foo { int f() { return 1; } }\n");
    testing::write_text(repo / "src/test/java/a/OtherTest.java",
                        "package a;\nimport org.junit.Test;\npublic class OtherTest {\n"
                        "    @Test public void untouched() { }\n}\n");
    testing::write_text(repo / test_path,
                        "package a;\nimport org.junit.Test;\npublic class FooTest {\n"
                        "    @Test public void keeps() { new Foo().f(); }\n"
                        "    @Test public void changes() { assert new Foo().f() == 1; }\n}\n");
    testing::commit_all(repo, "initial");

    // Fix 1: one test added, one modified, one untouched.
    testing::write_text(repo / main_path, "package a;\npublic class Foo { int f() { return 2; } }\n");
    testing::write_text(repo / test_path,
                        "package a;\nimport org.junit.Test;\npublic class FooTest {\n"
                        "    @Test public void keeps() { new Foo().f(); }\n"
                        "    @Test public void changes() { assert new Foo().f() == 2; }\n"
                        "    @Test public void added() { assert new Foo().f() > 0; }\n}\n");
    auto fix1 = testing::commit_all(repo, "fix one");

    // Fix 2: production code only.
    testing::write_text(repo / main_path, "package a;\npublic class Foo { int f() { return 3; } }\n");
    auto fix2 = testing::commit_all(repo, "fix two");

    // Docs only: no Java file changes at all.
    testing::write_text(repo / "NOTES.md", "release notes\n");
    auto docs = testing::commit_all(repo, "docs");

    auto vuln = make_vuln("CVE-2024-0001", "Foo returns the wrong value.");
    vuln.fix_commits = {fix1, fix2};
    auto result = fix_commits_match(repo, vuln, {"r", 1});
    REQUIRE(result.pairs.size() == 2);
    std::set<std::string> names;
    for (const auto& p : result.pairs) {
        names.insert(p.test.method_name);
        CHECK(p.fix_commit == fix1);
        CHECK(p.cve_id == "CVE-2024-0001");
        CHECK(p.test.revision == fix1);
    }
    CHECK(names == std::set<std::string>{"added", "changes"});
    CHECK(result.warnings.empty());

    auto no_tests = make_vuln("CVE-2010-0684", "Production-only fix.");
    no_tests.fix_commits = {fix2};
    CHECK(fix_commits_match(repo, no_tests, {"r", 1}).pairs.empty());
    no_tests.fix_commits = {docs};
    CHECK(fix_commits_match(repo, no_tests, {"r", 1}).pairs.empty());

    // Abbreviated hashes resolve; unknown ones are skipped with a warning.
    auto partial = make_vuln("CVE-2024-0002", "x");
    partial.fix_commits = {fix1.substr(0, 10), "deadbeefdeadbeefdeadbeefdeadbeefdeadbeef"};
    auto pr = fix_commits_match(repo, partial, {"r", 1});
    CHECK(pr.pairs.size() == 2);
    CHECK(pr.warnings.size() == 1);

    auto missing = make_vuln("CVE-2024-0003", "x");
    missing.fix_commits = {"deadbeefdeadbeefdeadbeefdeadbeefdeadbeef"};
    try {
        fix_commits_match(repo, missing, {"r", 1});
        FAIL("expected heuristic_unavailable");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::heuristic_unavailable);
    }
    missing.fix_commits.clear();
    CHECK_THROWS_AS(fix_commits_match(repo, missing, {"r", 1}), Error);
}

TEST_CASE("the first commit of a repository counts every test as added") {
    testing::TempDir dir("fixcommits-root");
    testing::init_repo(dir.path());
    testing::write_text(dir.path() / "src/test/java/a/RootTest.java",
                        "package a;\nimport org.junit.Test;\npublic class RootTest {\n"
                        "    @Test public void first() { }\n}\n");
    auto root = testing::commit_all(dir.path(), "root");
    auto v = make_vuln("CVE-2024-0004", "x");
    v.fix_commits = {root};
    CHECK(fix_commits_match(dir.path(), v, {"r", 1}).pairs.size() == 1);
}

TEST_CASE("verdict JSON") {
    FindingVerdict f;
    f.label = FindingLabel::kSecurity;
    f.classifier_id = "grep-find";
    f.evidence = {"xss"};
    f.score = 1.0;
    CHECK(to_json(f).dump() == R"({"label":"Security","score":1.0,"classifier":"grep-find","evidence":["xss"]})");
    MatchVerdict m;
    m.unresolved = true;
    m.warnings = {"w"};
    CHECK(to_json(m).dump() ==
          R"({"label":"NotMatched","score":null,"classifier":"","evidence":[],"unresolved":true,"warnings":["w"]})");
}

TEST_CASE("the random corpus exercises both labels") {
    auto corpus = random_corpus(200, 20250521);
    std::size_t grep = 0, gm = 0, sim = 0, voc = 0;
    auto vocab = fit_vocab({corpus.tests.begin(), corpus.tests.begin() + 20}, VocabMode::kYake, 10);
    for (std::size_t i = 0; i < corpus.tests.size(); ++i) {
        grep += grep_find(corpus.tests[i], default_security_keywords(), 3).positive();
        gm += grep_match(corpus.tests[i], corpus.vulns[i], 2).positive();
        sim += sim_match_yake(corpus.tests[i], corpus.vulns[i], 10, 0.03).positive();
        voc += vocab_find(corpus.tests[i], vocab, 5).positive();
    }
    MESSAGE("positives: grep_find ", grep, ", grep_match ", gm, ", sim_match_yake ", sim, ", vocab_find ", voc);
    for (auto c : {grep, gm, sim, voc}) {
        CHECK(c > 0);
        CHECK(c < corpus.tests.size());
    }
}
