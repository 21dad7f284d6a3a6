#include "testmine/error.hpp"

namespace testmine {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::validation: return "validation";
        case ErrorCode::parse: return "parse";
        case ErrorCode::not_found: return "not-found";
        case ErrorCode::lookup_failed: return "lookup-failed";
        case ErrorCode::fitting: return "fitting";
        case ErrorCode::prompt_construction: return "prompt-construction";
        case ErrorCode::classification_unavailable: return "classification-unavailable";
        case ErrorCode::heuristic_unavailable: return "heuristic-unavailable";
        case ErrorCode::undefined_similarity: return "undefined-similarity";
        case ErrorCode::dataset: return "dataset";
        case ErrorCode::review: return "review";
        case ErrorCode::io: return "io";
        case ErrorCode::fatal: return "fatal";
    }
    return "unknown";
}

}  // namespace testmine
