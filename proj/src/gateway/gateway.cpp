#include "testmine/gateway/gateway.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <cctype>
#include <cstdlib>
#include <regex>

#include "testmine/error.hpp"
#include "testmine/util/io.hpp"

namespace testmine::gateway {

const std::string_view kMatchingSystemPrompt =
    "You are an expert in unit testing and security testing. Given the following vulnerability description and "
    "JUnit test method (it might be truncated if too long), answer with 1 if the test case is likely to identify the "
    "described vulnerability in the code under test, or 0 if it is not. Answer with only the number, with no "
    "explanation.";

// Same template with the description dropped from the central clause.
const std::string_view kFindingSystemPrompt =
    "You are an expert in unit testing and security testing. Given the following JUnit test method (it might be "
    "truncated if too long), answer with 1 if the test case is likely to identify a vulnerability in the code under "
    "test, or 0 if it is not. Answer with only the number, with no explanation.";

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::size_t count_tokens(std::string_view text) {
    std::size_t n = 0;
    bool in = false;
    for (char c : text) {
        if (is_space(c)) {
            in = false;
        } else if (!in) {
            in = true;
            ++n;
        }
    }
    return n;
}

// Largest whitespace-token count whose estimate fits the budget.
std::size_t tokens_for_budget(std::size_t budget) { return budget * 10 / 13; }

std::string keep_tokens(std::string_view text, std::size_t n) {
    std::size_t seen = 0;
    bool in = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (is_space(text[i])) {
            if (in && seen == n) return std::string(text.substr(0, i));
            in = false;
        } else if (!in) {
            in = true;
            ++seen;
            if (seen > n) return std::string(text.substr(0, i));
        }
    }
    return std::string(text);
}

// Fits `body` into whatever the rest of the envelope leaves over.
void fit_body(PromptEnvelope& env, const std::string& body, std::size_t budget) {
    auto allowed = tokens_for_budget(budget);
    auto overhead = count_tokens(render_chat(env));
    if (overhead >= allowed) {
        throw Error(ErrorCode::prompt_construction,
                    "prompt template and description alone exceed the " + std::to_string(budget) + "-token budget");
    }
    auto room = allowed - overhead;
    if (count_tokens(body) > room) {
        spdlog::debug("test body truncated to {} tokens", room);
        env.user += keep_tokens(body, room);
    } else {
        env.user += body;
    }
}

struct BaseUrl {
    std::string host;    // scheme://host[:port]
    std::string prefix;  // path prefix without trailing '/'
};

BaseUrl split_base_url(const std::string& url) {
    static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, re)) {
        throw Error(ErrorCode::validation, "endpoint base_url '" + url + "' is not an http(s) URL");
    }
    BaseUrl b{m[1].str(), m[2].matched ? m[2].str() : ""};
    while (!b.prefix.empty() && b.prefix.back() == '/') b.prefix.pop_back();
    return b;
}

}  // namespace

std::string_view to_string(Task t) noexcept { return t == Task::kFinding ? "finding" : "matching"; }

std::size_t estimate_tokens(std::string_view text) { return (count_tokens(text) * 13 + 9) / 10; }

std::string truncate_to_budget(std::string_view text, std::size_t budget) {
    if (estimate_tokens(text) <= budget) return std::string(text);
    return keep_tokens(text, tokens_for_budget(budget));
}

PromptEnvelope build_matching_prompt(const java::TestMethod& test, const kb::VulnRecord& vuln, std::size_t budget) {
    if (util::trim(vuln.description).empty()) {
        throw Error(ErrorCode::prompt_construction, vuln.cve_id + ": empty vulnerability description");
    }
    if (util::trim(test.body_source).empty()) {
        throw Error(ErrorCode::prompt_construction, "empty test method body");
    }
    PromptEnvelope env;
    env.task = Task::kMatching;
    env.system = std::string(kMatchingSystemPrompt);
    env.user = "Vulnerability Description:\n" + vuln.description + "\nJUnit Test Method:\n";
    fit_body(env, test.body_source, budget);
    return env;
}

PromptEnvelope build_finding_prompt(const java::TestMethod& test, std::size_t budget) {
    if (util::trim(test.body_source).empty()) {
        throw Error(ErrorCode::prompt_construction, "empty test method body");
    }
    PromptEnvelope env;
    env.task = Task::kFinding;
    env.system = std::string(kFindingSystemPrompt);
    env.user = "JUnit Test Method:\n";
    fit_body(env, test.body_source, budget);
    return env;
}

std::string render_chat(const PromptEnvelope& e) {
    return e.system + "\n### Instruction:\n" + e.user + "\n### Response:\n" + e.assistant;
}

Resolution parse_digit(std::string_view raw) {
    for (char c : raw) {
        if (c >= '0' && c <= '9') {
            if (c == '1') return Resolution::kPositive;
            if (c == '0') return Resolution::kNegative;
            return Resolution::kUnresolved;
        }
    }
    return Resolution::kUnresolved;
}

classify::FindingVerdict parse_finding_response(std::string_view raw, const std::string& classifier_id) {
    classify::FindingVerdict v;
    v.classifier_id = classifier_id;
    auto r = parse_digit(raw);
    v.label = r == Resolution::kPositive ? classify::FindingLabel::kSecurity : classify::FindingLabel::kUnclear;
    v.evidence.push_back("answer=" + std::string(raw.substr(0, 32)));
    if (r == Resolution::kUnresolved) {
        v.unresolved = true;
        v.warnings.push_back("unresolved model answer counted as negative");
    }
    return v;
}

classify::MatchVerdict parse_matching_response(std::string_view raw, const std::string& classifier_id) {
    classify::MatchVerdict v;
    v.classifier_id = classifier_id;
    auto r = parse_digit(raw);
    v.label = r == Resolution::kPositive ? classify::MatchLabel::kMatched : classify::MatchLabel::kNotMatched;
    v.evidence.push_back("answer=" + std::string(raw.substr(0, 32)));
    if (r == Resolution::kUnresolved) {
        v.unresolved = true;
        v.warnings.push_back("unresolved model answer counted as negative");
    }
    return v;
}

void EndpointConfig::apply_env() {
    if (const char* v = std::getenv("TESTMINE_ENDPOINT"); v && *v) base_url = v;
    if (const char* v = std::getenv("TESTMINE_MODEL"); v && *v) model_id = v;
    if (const char* v = std::getenv("TESTMINE_TOKEN"); v && *v) auth_token = v;
}

InferenceClient::InferenceClient(EndpointConfig config) : config_(std::move(config)) {
    if (config_.max_in_flight == 0) config_.max_in_flight = 1;
    split_base_url(config_.base_url);  // validate early
}

nlohmann::json InferenceClient::post(const std::string& route, const nlohmann::json& body) {
    {
        std::unique_lock lock(slots_mutex_);
        slots_cv_.wait(lock, [&] { return in_flight_ < config_.max_in_flight; });
        ++in_flight_;
    }
    struct Release {
        InferenceClient* self;
        ~Release() {
            {
                std::lock_guard lock(self->slots_mutex_);
                --self->in_flight_;
            }
            self->slots_cv_.notify_one();
        }
    } release{this};

    auto base = split_base_url(config_.base_url);
    httplib::Client client(base.host);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!config_.auth_token.empty()) headers.emplace("Authorization", "Bearer " + config_.auth_token);

    auto started = std::chrono::steady_clock::now();
    auto res = client.Post(base.prefix + route, headers, body.dump(), "application/json");
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);

    nlohmann::ordered_json entry;
    entry["route"] = route;
    entry["model"] = config_.model_id;
    entry["request"] = body;
    entry["elapsed_ms"] = elapsed.count();

    std::string failure;
    nlohmann::json parsed;
    if (!res) {
        failure = "transport error: " + httplib::to_string(res.error());
    } else if (res->status < 200 || res->status >= 300) {
        failure = "HTTP " + std::to_string(res->status);
    } else {
        try {
            parsed = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            failure = std::string("response is not JSON: ") + e.what();
        }
    }
    if (failure.empty()) {
        entry["response"] = parsed;
    } else {
        entry["error"] = failure;
    }
    log(entry);
    if (!failure.empty()) {
        throw Error(ErrorCode::classification_unavailable, config_.base_url + route + ": " + failure);
    }
    return parsed;
}

void InferenceClient::log(const nlohmann::ordered_json& entry) {
    if (config_.request_log.empty()) return;
    std::lock_guard lock(log_mutex_);
    util::append_line(config_.request_log, entry.dump());
}

std::string InferenceClient::generate(const std::string& prompt) {
    nlohmann::json body = {{"model", config_.model_id},
                           {"prompt", prompt},
                           {"max_new_tokens", config_.max_new_tokens},
                           {"greedy", true}};
    auto r = post("/generate", body);
    if (r.is_object() && r.contains("text") && r["text"].is_string()) return r["text"].get<std::string>();
    if (r.is_object() && r.contains("generated_text") && r["generated_text"].is_string()) {
        return r["generated_text"].get<std::string>();
    }
    throw Error(ErrorCode::classification_unavailable, "generate response carries no text field");
}

std::vector<double> InferenceClient::embed(const std::string& text) {
    nlohmann::json body = {{"model", config_.model_id}, {"text", text}};
    auto r = post("/embed", body);
    try {
        if (r.is_object() && r.contains("embedding")) return r["embedding"].get<std::vector<double>>();
        if (r.is_array()) return r.get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::classification_unavailable, std::string("malformed embedding: ") + e.what());
    }
    throw Error(ErrorCode::classification_unavailable, "embed response carries no embedding field");
}

std::string classify_remote(const PromptEnvelope& envelope, InferenceClient& client) {
    return client.generate(render_chat(envelope));
}

std::string classify_remote(const PromptEnvelope& envelope, const EndpointConfig& config) {
    InferenceClient client(config);
    return classify_remote(envelope, client);
}

std::vector<double> embed_remote(const std::string& text, InferenceClient& client) {
    auto v = client.embed(text);
    if (v.empty()) throw Error(ErrorCode::classification_unavailable, "empty embedding vector");
    return v;
}

}  // namespace testmine::gateway
