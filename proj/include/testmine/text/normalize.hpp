#pragma once

#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace testmine::java {
struct JavaMethodDecl;
}

namespace testmine::text {

/// Flattens code to one line: whitespace runs become a single space and
/// the ends are trimmed.
std::string normalize_code(std::string_view text);

/// Maximal runs of letters/digits, lowercased. Bytes >= 0x80 count as
/// letters so UTF-8 words stay whole.
std::vector<std::string> tokenize_words(std::string_view text);

using StopwordSet = std::unordered_set<std::string>;

std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens, const StopwordSet& stopwords);

/// The bundled English list (resources/stopwords_en.txt).
const StopwordSet& english_stopwords();
std::size_t english_stopword_count();

/// Splits camelCase, PascalCase, snake_case and digit runs into lowercase words:
/// "getHTTPResponse2xx" -> {get, http, response, 2, xx}.
std::vector<std::string> split_identifier(std::string_view identifier);

/// Identifiers (variable, method and type names) in Java code, keywords,
/// comments and literals excluded. With `split` each identifier is broken
/// into its words; otherwise it is lowercased whole.
std::set<std::string> extract_identifiers(std::string_view code, bool split);
std::set<std::string> extract_identifiers(const java::JavaMethodDecl& method, bool split);

}  // namespace testmine::text
