#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace testmine::util {

using ordered_json = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

void append_line(const std::filesystem::path& path, std::string_view line);

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
std::vector<nlohmann::json> parse_jsonl(std::string_view text);

template <class Rows>
std::string to_jsonl(const Rows& rows) {
    std::string out;
    for (const auto& row : rows) {
        out += row.dump();
        out += '\n';
    }
    return out;
}

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Reads a plain-text term list: one term per line, blank lines and
/// '#' comments ignored, surrounding whitespace trimmed.
std::vector<std::string> parse_term_list(std::string_view text);
std::vector<std::string> load_term_list(const std::filesystem::path& path);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

}  // namespace testmine::util
