#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace testmine {

enum class ErrorCode {
    validation,
    parse,
    not_found,
    lookup_failed,
    fitting,
    prompt_construction,
    classification_unavailable,
    heuristic_unavailable,
    undefined_similarity,
    dataset,
    review,
    io,
    fatal,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure surfaced by the library carries a machine-readable code so
// the CLI can emit `{"error": <code>, "message": ...}` on stderr.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace testmine
