#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "testmine/text/normalize.hpp"

namespace testmine::text {

struct ScoredTerm {
    std::string term;  // lowercase
    double score = 0;  // lower is more relevant

    friend bool operator==(const ScoredTerm&, const ScoredTerm&) = default;
};

/// Top-K terms, ascending by score, ties broken lexicographically.
struct KeywordSet {
    std::vector<ScoredTerm> terms;
    std::size_t k = 0;

    std::set<std::string> term_set() const;
    bool empty() const noexcept { return terms.empty(); }
};

struct YakeOptions {
    std::size_t window = 1;  // co-occurrence window, in tokens, to the left
    const StopwordSet* stopwords = nullptr;  // defaults to english_stopwords()
};

/// Unigram YAKE. Each lowercase term gets the statistical score
///
///   H = (Pos * Rel) / (Case + Freq / Rel + Spread / Rel)
///
///   Case   = max(TF_acronym, TF_capitalized) / (1 + ln TF)
///   Pos    = ln(ln(3 + median sentence index of the term))
///   Freq   = TF / (mean TF + stddev TF)       over non-stopword terms
///   Rel    = 1 + (DL + DR) * TF / max TF      DL/DR = distinct/total neighbours
///   Spread = sentences containing the term / sentences
///
/// and a candidate keyword scores H / (TF * (1 + H)). Stopwords, terms
/// shorter than 3 characters, numbers and mixed letter-digit tokens are
/// never candidates. Sentences end at newlines and at '.', '!' or '?'
/// followed by whitespace; other punctuation breaks co-occurrence.
KeywordSet yake_keywords(std::string_view text, std::size_t k, const YakeOptions& options = {});

}  // namespace testmine::text
