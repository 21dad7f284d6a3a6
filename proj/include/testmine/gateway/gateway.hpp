#pragma once

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "testmine/classify/classifiers.hpp"
#include "testmine/java/test_extractor.hpp"
#include "testmine/kb/vuln_kb.hpp"

namespace testmine::gateway {

enum class Task { kFinding, kMatching };

std::string_view to_string(Task t) noexcept;

struct PromptEnvelope {
    std::string system;
    std::string user;
    std::string assistant;  // empty at inference
    Task task = Task::kMatching;
};

extern const std::string_view kMatchingSystemPrompt;
extern const std::string_view kFindingSystemPrompt;

inline constexpr std::size_t kDefaultTokenBudget = 4096;

/// Whitespace-delimited tokens times 1.3, rounded up.
std::size_t estimate_tokens(std::string_view text);

/// Longest prefix of `text`, cut at a token end, whose estimate is at most
/// `budget`. Short inputs come back unchanged.
std::string truncate_to_budget(std::string_view text, std::size_t budget);

/// The test body is used verbatim and truncated from the end when the
/// rendered prompt would exceed `budget`. Empty descriptions, or a
/// template plus description that alone exceed the budget, raise
/// Error(prompt_construction).
PromptEnvelope build_matching_prompt(const java::TestMethod& test, const kb::VulnRecord& vuln,
                                     std::size_t budget = kDefaultTokenBudget);
PromptEnvelope build_finding_prompt(const java::TestMethod& test, std::size_t budget = kDefaultTokenBudget);

/// system + "\n### Instruction:\n" + user + "\n### Response:\n" + assistant
std::string render_chat(const PromptEnvelope& envelope);

enum class Resolution { kPositive, kNegative, kUnresolved };

/// First digit of `raw`: '1' positive, '0' negative, anything else (or no
/// digit at all) unresolved.
Resolution parse_digit(std::string_view raw);

/// Unresolved answers become the negative label with `unresolved` set.
classify::FindingVerdict parse_finding_response(std::string_view raw, const std::string& classifier_id);
classify::MatchVerdict parse_matching_response(std::string_view raw, const std::string& classifier_id);

struct EndpointConfig {
    std::string base_url;  // scheme://host[:port][/prefix]
    std::string model_id;
    std::size_t max_input_tokens = kDefaultTokenBudget;
    std::size_t max_new_tokens = 4;
    std::chrono::milliseconds timeout{60000};
    std::string auth_token;
    std::size_t max_in_flight = 4;
    std::filesystem::path request_log;  // JSON Lines; empty disables logging

    /// TESTMINE_ENDPOINT, TESTMINE_MODEL and TESTMINE_TOKEN override the
    /// corresponding fields when set.
    void apply_env();
};

/// HTTP client for the inference service. Thread-safe; at most
/// max_in_flight requests are outstanding at once.
class InferenceClient {
public:
    explicit InferenceClient(EndpointConfig config);

    /// POST {base}/generate with greedy decoding; returns the completion text.
    std::string generate(const std::string& prompt);
    /// POST {base}/embed.
    std::vector<double> embed(const std::string& text);

    const EndpointConfig& config() const noexcept { return config_; }

private:
    nlohmann::json post(const std::string& route, const nlohmann::json& body);
    void log(const nlohmann::ordered_json& entry);

    EndpointConfig config_;
    std::mutex slots_mutex_;
    std::condition_variable slots_cv_;
    std::size_t in_flight_ = 0;
    std::mutex log_mutex_;
};

/// Renders the envelope and returns the model's raw answer. Transport or
/// HTTP failures raise Error(classification_unavailable).
std::string classify_remote(const PromptEnvelope& envelope, InferenceClient& client);
std::string classify_remote(const PromptEnvelope& envelope, const EndpointConfig& config);

std::vector<double> embed_remote(const std::string& text, InferenceClient& client);

class RemoteEmbeddingProvider : public classify::EmbeddingProvider {
public:
    explicit RemoteEmbeddingProvider(InferenceClient& client) : client_(client) {}
    std::string id() const override { return client_.config().model_id; }
    std::vector<double> embed(const std::string& text) override { return embed_remote(text, client_); }

private:
    InferenceClient& client_;
};

}  // namespace testmine::gateway
