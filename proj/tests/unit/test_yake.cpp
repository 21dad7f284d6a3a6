#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include "oracles.hpp"
#include "testmine/error.hpp"
#include "testmine/text/yake.hpp"

using namespace testmine;
using namespace testmine::text;

namespace {

const char* kParagraph =
    "Apache JSPWiki resolves attachment paths relative to the ROOT directory. "
    "A crafted attachment URL containing dot segments escapes the ROOT directory and reads arbitrary files. "
    "The path traversal affects JSPWiki releases before the fixed version. "
    "Attackers can read configuration files and user databases through the traversal. "
    "Upgrading JSPWiki and normalizing every attachment path prevents the path traversal.";

std::vector<std::string> terms_of(const KeywordSet& ks) {
    std::vector<std::string> out;
    for (const auto& t : ks.terms) out.push_back(t.term);
    return out;
}

}  // namespace

TEST_CASE("single repeated word is the only keyword") {
    auto ks = yake_keywords("injection injection injection", 5);
    REQUIRE(ks.terms.size() == 1);
    CHECK(ks.terms[0].term == "injection");
}

TEST_CASE("empty or stopword-only text gives no keywords") {
    CHECK(yake_keywords("", 5).empty());
    CHECK(yake_keywords("   \n ", 5).empty());
    CHECK(yake_keywords("the of and is", 5).empty());
}

TEST_CASE("K must be positive") {
    CHECK_THROWS_AS(yake_keywords("text", 0), Error);
}

TEST_CASE("five-sentence paragraph matches the independent oracle") {
    auto expected = oracle::keywords(kParagraph, 5);
    auto actual = yake_keywords(kParagraph, 5);
    REQUIRE(actual.terms.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        CAPTURE(i);
        CHECK(actual.terms[i].term == expected[i].first);
        CHECK(actual.terms[i].score == doctest::Approx(expected[i].second).epsilon(1e-12));
    }
    // Frozen from the oracle run.
    CHECK(terms_of(actual) == std::vector<std::string>{"root", "jspwiki", "attachment", "directory", "path"});
}

TEST_CASE("oracle agreement on code-like inputs and all K in the search range") {
    const std::vector<std::string> inputs = {
        "@Test\npublic void testPathTraversal() {\n  File f = resolver.resolve(\"../../etc/passwd\");\n"
        "  assertThrows(SecurityException.class, () -> resolver.resolve(f));\n}\n",
        "XML external entity (XXE) vulnerability in the SAX parser of Apache Foo 1.2 allows remote attackers to "
        "read arbitrary files via a crafted DTD. The parser resolves external entities by default.",
        "Deserialization of untrusted data in the RMI registry allows remote code execution. "
        "Affected versions deserialize arbitrary classes. Deserialization filters mitigate the issue!",
    };
    for (const auto& text : inputs) {
        for (std::size_t k = 5; k <= 30; k += 5) {
            auto expected = oracle::keywords(text, k);
            auto actual = yake_keywords(text, k);
            REQUIRE(actual.terms.size() == expected.size());
            for (std::size_t i = 0; i < expected.size(); ++i) {
                CHECK(actual.terms[i].term == expected[i].first);
                CHECK(actual.terms[i].score == doctest::Approx(expected[i].second).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("keyword set invariants") {
    auto ks = yake_keywords(kParagraph, 7);
    CHECK(ks.terms.size() <= 7);
    CHECK(std::is_sorted(ks.terms.begin(), ks.terms.end(), [](const ScoredTerm& a, const ScoredTerm& b) {
        return a.score != b.score ? a.score < b.score : a.term < b.term;
    }));
    for (const auto& t : ks.terms) {
        CHECK(t.score >= 0.0);
        CHECK(std::none_of(t.term.begin(), t.term.end(), [](unsigned char c) { return std::isupper(c); }));
        CHECK_FALSE(english_stopwords().count(t.term));
    }
}

TEST_CASE("trailing whitespace does not change keywords") {
    auto base = yake_keywords(kParagraph, 10);
    for (const char* tail : {" ", "\n", "\n\n\t  ", "   \n"}) {
        auto other = yake_keywords(std::string(kParagraph) + tail, 10);
        CHECK(other.terms == base.terms);
    }
}

TEST_CASE("deterministic") {
    CHECK(yake_keywords(kParagraph, 10).terms == yake_keywords(kParagraph, 10).terms);
}
