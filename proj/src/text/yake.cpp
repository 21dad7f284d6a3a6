#include "testmine/text/yake.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "testmine/error.hpp"
#include "testmine/util/io.hpp"

namespace testmine::text {

namespace {

enum class Tag { kDigit, kUnusual, kAcronym, kCapitalized, kPlain };

struct Occurrence {
    std::string surface;
    std::size_t sentence = 0;
    std::size_t block = 0;
    std::size_t index_in_sentence = 0;
};

struct TermStats {
    std::size_t tf = 0;
    std::size_t tf_acronym = 0;
    std::size_t tf_capitalized = 0;
    std::set<std::size_t> sentences;
    std::map<std::string, std::size_t> left;   // neighbour -> count
    std::map<std::string, std::size_t> right;
    bool stopword = false;
    bool numeric_or_mixed = false;
};

Tag tag_of(const std::string& w, std::size_t index_in_sentence) {
    std::size_t digits = 0, upper = 0;
    for (unsigned char c : w) {
        if (std::isdigit(c)) ++digits;
        if (std::isupper(c)) ++upper;
    }
    if (digits == w.size()) return Tag::kDigit;
    if (digits > 0) return Tag::kUnusual;
    if (upper == w.size()) return Tag::kAcronym;
    if (w.size() > 1 && std::isupper(static_cast<unsigned char>(w[0])) && index_in_sentence > 0) {
        return Tag::kCapitalized;
    }
    return Tag::kPlain;
}

std::vector<Occurrence> segment(std::string_view text, std::size_t& sentence_count) {
    std::vector<Occurrence> out;
    std::string cur;
    std::size_t sentence = 0, block = 0, in_sentence = 0;

    auto flush_word = [&] {
        if (cur.empty()) return;
        out.push_back({cur, sentence, block, in_sentence++});
        cur.clear();
    };
    auto end_block = [&] {
        flush_word();
        ++block;
    };
    auto end_sentence = [&] {
        end_block();
        if (in_sentence > 0) ++sentence;
        in_sentence = 0;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        auto c = static_cast<unsigned char>(text[i]);
        if (std::isalnum(c) || c >= 0x80) {
            cur.push_back(static_cast<char>(c));
        } else if (c == '\n') {
            end_sentence();
        } else if (std::isspace(c)) {
            flush_word();
        } else if ((c == '.' || c == '!' || c == '?') &&
                   (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])))) {
            end_sentence();
        } else {
            end_block();
        }
    }
    end_sentence();
    sentence_count = sentence;
    return out;
}

double median(const std::set<std::size_t>& values) {
    std::vector<std::size_t> v(values.begin(), values.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return static_cast<double>(v[n / 2]);
    return (static_cast<double>(v[n / 2 - 1]) + static_cast<double>(v[n / 2])) / 2.0;
}

double distinct_ratio(const std::map<std::string, std::size_t>& edges) {
    std::size_t total = 0;
    for (const auto& [_, w] : edges) total += w;
    return total == 0 ? 0.0 : static_cast<double>(edges.size()) / static_cast<double>(total);
}

}  // namespace

std::set<std::string> KeywordSet::term_set() const {
    std::set<std::string> out;
    for (const auto& t : terms) out.insert(t.term);
    return out;
}

KeywordSet yake_keywords(std::string_view text, std::size_t k, const YakeOptions& options) {
    if (k == 0) throw Error(ErrorCode::validation, "YAKE keyword count K must be >= 1");
    const StopwordSet& stopwords = options.stopwords ? *options.stopwords : english_stopwords();

    KeywordSet result;
    result.k = k;
    std::size_t n_sentences = 0;
    auto occurrences = segment(text, n_sentences);
    if (occurrences.empty()) return result;

    std::map<std::string, TermStats> terms;
    std::vector<std::pair<std::string, bool>> lowered;  // (term, usable in co-occurrence)
    lowered.reserve(occurrences.size());
    for (const auto& occ : occurrences) {
        std::string term = util::to_lower(occ.surface);
        Tag tag = tag_of(occ.surface, occ.index_in_sentence);
        auto& st = terms[term];
        ++st.tf;
        if (tag == Tag::kAcronym) ++st.tf_acronym;
        if (tag == Tag::kCapitalized) ++st.tf_capitalized;
        st.sentences.insert(occ.sentence);
        st.stopword = stopwords.count(term) > 0 || term.size() < 3;
        st.numeric_or_mixed = tag == Tag::kDigit || tag == Tag::kUnusual;
        lowered.emplace_back(term, !st.numeric_or_mixed);
    }

    for (std::size_t j = 0; j < occurrences.size(); ++j) {
        if (!lowered[j].second) continue;
        for (std::size_t back = 1; back <= options.window && back <= j; ++back) {
            std::size_t i = j - back;
            if (occurrences[i].block != occurrences[j].block) break;
            if (!lowered[i].second) continue;
            ++terms[lowered[j].first].left[lowered[i].first];
            ++terms[lowered[i].first].right[lowered[j].first];
        }
    }

    std::vector<double> valid_tfs;
    std::size_t max_tf = 0;
    for (const auto& [_, st] : terms) {
        max_tf = std::max(max_tf, st.tf);
        if (!st.stopword) valid_tfs.push_back(static_cast<double>(st.tf));
    }
    if (valid_tfs.empty()) return result;
    double mean = 0;
    for (double v : valid_tfs) mean += v;
    mean /= static_cast<double>(valid_tfs.size());
    double var = 0;
    for (double v : valid_tfs) var += (v - mean) * (v - mean);
    const double stddev = std::sqrt(var / static_cast<double>(valid_tfs.size()));

    for (const auto& [term, st] : terms) {
        if (st.stopword || st.numeric_or_mixed) continue;
        const double tf = static_cast<double>(st.tf);
        const double rel = 1.0 + (distinct_ratio(st.left) + distinct_ratio(st.right)) * tf / static_cast<double>(max_tf);
        const double freq = tf / (mean + stddev);
        const double spread = static_cast<double>(st.sentences.size()) / static_cast<double>(n_sentences);
        const double casing = static_cast<double>(std::max(st.tf_acronym, st.tf_capitalized)) / (1.0 + std::log(tf));
        const double pos = std::log(std::log(3.0 + median(st.sentences)));
        const double h = (pos * rel) / (casing + freq / rel + spread / rel);
        result.terms.push_back({term, h / (tf * (1.0 + h))});
    }

    std::sort(result.terms.begin(), result.terms.end(), [](const ScoredTerm& a, const ScoredTerm& b) {
        if (a.score != b.score) return a.score < b.score;
        return a.term < b.term;
    });
    if (result.terms.size() > k) result.terms.resize(k);
    return result;
}

}  // namespace testmine::text
