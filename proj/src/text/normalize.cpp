#include "testmine/text/normalize.hpp"

#include <cctype>

#include "testmine/java/java_parser.hpp"
#include "testmine/util/io.hpp"

namespace testmine::text {

// Generated from resources/stopwords_en.txt at configure time.
extern const char* const kEnglishStopwordsResource;

namespace {

bool word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

}  // namespace

std::string normalize_code(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending = !out.empty();
            continue;
        }
        if (pending) out.push_back(' ');
        pending = false;
        out.push_back(c);
    }
    return out;
}

std::vector<std::string> tokenize_words(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : text) {
        if (word_byte(static_cast<unsigned char>(c))) {
            cur.push_back(lower(c));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens, const StopwordSet& stopwords) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
        if (!stopwords.count(t)) out.push_back(t);
    }
    return out;
}

const StopwordSet& english_stopwords() {
    static const StopwordSet set = [] {
        auto terms = util::parse_term_list(kEnglishStopwordsResource);
        return StopwordSet(terms.begin(), terms.end());
    }();
    return set;
}

std::size_t english_stopword_count() { return english_stopwords().size(); }

std::vector<std::string> split_identifier(std::string_view id) {
    enum class Cls { kLower, kUpper, kDigit, kOther, kSep };
    auto cls = [](unsigned char c) {
        if (std::islower(c) || c >= 0x80) return Cls::kLower;
        if (std::isupper(c)) return Cls::kUpper;
        if (std::isdigit(c)) return Cls::kDigit;
        if (c == '_' || c == '$') return Cls::kSep;
        return Cls::kOther;
    };
    std::vector<std::string> words;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) words.push_back(util::to_lower(cur));
        cur.clear();
    };
    for (std::size_t i = 0; i < id.size(); ++i) {
        auto c = static_cast<unsigned char>(id[i]);
        Cls k = cls(c);
        if (k == Cls::kSep || k == Cls::kOther) {
            flush();
            continue;
        }
        if (!cur.empty()) {
            Cls prev = cls(static_cast<unsigned char>(cur.back()));
            bool boundary = (prev == Cls::kDigit) != (k == Cls::kDigit);
            if (prev == Cls::kLower && k == Cls::kUpper) boundary = true;
            // "HTTPServer": the last capital of a run starts the next word.
            if (prev == Cls::kUpper && k == Cls::kUpper && i + 1 < id.size() &&
                cls(static_cast<unsigned char>(id[i + 1])) == Cls::kLower) {
                boundary = true;
            }
            if (boundary) flush();
        }
        cur.push_back(static_cast<char>(c));
    }
    flush();
    return words;
}

std::set<std::string> extract_identifiers(std::string_view code, bool split) {
    std::set<std::string> terms;
    for (const auto& id : java::lex_identifiers(code)) {
        if (split) {
            for (auto& w : split_identifier(id)) terms.insert(std::move(w));
        } else {
            terms.insert(util::to_lower(id));
        }
    }
    return terms;
}

std::set<std::string> extract_identifiers(const java::JavaMethodDecl& method, bool split) {
    return extract_identifiers(method.body_source, split);
}

}  // namespace testmine::text
