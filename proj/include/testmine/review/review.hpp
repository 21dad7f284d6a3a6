#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "testmine/corpus/corpus.hpp"
#include "testmine/java/test_extractor.hpp"
#include "testmine/kb/vuln_kb.hpp"
#include "testmine/metrics/metrics.hpp"

namespace httplib {
class Server;
}

namespace testmine::review {

using corpus::Kind;

enum class Status { kPending, kJudged, kDisputed, kResolved };
enum class Verdict { kCorrect, kIncorrect };

std::string_view to_string(Status s) noexcept;
std::string_view to_string(Verdict v) noexcept;
Status status_from_string(std::string_view s);
Verdict verdict_from_string(std::string_view s);

struct Judgment {
    std::string item_id;
    std::string reviewer_id;
    Verdict verdict = Verdict::kCorrect;
    std::string note;
    std::string timestamp;  // ISO-8601; filled in by the service when empty
};

struct Candidate {
    Kind kind = Kind::kFinding;
    java::TestMethod test;
    std::optional<kb::VulnRecord> vuln;  // required for matching
    std::string classifier_id;
    std::vector<std::string> evidence;
};

struct ReviewItem {
    std::string item_id;
    Kind kind = Kind::kFinding;
    java::TestMethod test;
    std::optional<kb::VulnRecord> vuln;
    std::string classifier_id;
    std::vector<std::string> evidence;
    Status status = Status::kPending;
    std::map<std::string, Judgment> judgments;  // by reviewer
    std::optional<Verdict> consensus;
    std::string consensus_note;

    /// Agreed verdict for judged items, consensus for resolved ones.
    std::optional<Verdict> final_verdict() const;
};

/// Stable id derived from kind, test hash, CVE and classifier.
std::string make_item_id(const Candidate& c);

struct AgreementReport {
    std::size_t n_items = 0;   // items of the requested kind
    std::size_t n_judged = 0;  // items with both judgments
    std::size_t n_agreed = 0;
    std::size_t n_disputed = 0;  // fully judged items whose reviewers disagreed
    std::size_t n_final = 0;     // items with a final verdict
    std::size_t n_correct = 0;   // final verdict "correct"
    metrics::KappaResult kappa;
    double precision = 0;  // n_correct / n_final; 0 when n_final == 0
};

struct ExportRecord {
    std::string repo_id;
    std::string revision;
    std::string file_path;
    std::string class_name;
    std::string method;
    std::string body;
    Kind kind = Kind::kFinding;
    std::optional<std::string> cve_id;
    std::string final_verdict;
    bool reviewer_agreement = false;

    friend bool operator==(const ExportRecord&, const ExportRecord&) = default;
};

nlohmann::ordered_json to_json(const ExportRecord& r);
ExportRecord export_record_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const AgreementReport& r);

/// Two-reviewer validation campaign. State is a fold over an append-only
/// JSON Lines event log; every mutation is appended before it is applied.
class ReviewService {
public:
    /// Opens (or starts) the campaign stored at `log_path`. A new log
    /// records the two reviewer ids; an existing one must name the same pair.
    ReviewService(std::filesystem::path log_path, std::array<std::string, 2> reviewers);

    const std::array<std::string, 2>& reviewers() const noexcept { return reviewers_; }

    /// Adds one item per new candidate. Candidates whose test hash is in
    /// `excluded_hashes` (known training witnesses) and already-queued ones
    /// are skipped. Returns the ids that were added.
    std::vector<std::string> enqueue(const std::vector<Candidate>& candidates,
                                     const std::set<std::string>& excluded_hashes = {});

    /// Throws Error(review) for unknown items or reviewers and for a second
    /// judgment by the same reviewer.
    Status submit_judgment(Judgment judgment);

    /// Only disputed items can be resolved.
    ReviewItem resolve_dispute(const std::string& item_id, Verdict consensus, const std::string& note);

    AgreementReport agreement_report(std::optional<Kind> kind = std::nullopt) const;

    std::vector<ReviewItem> queue(std::optional<Kind> kind = std::nullopt,
                                  std::optional<Status> status = std::nullopt) const;
    std::optional<ReviewItem> item(const std::string& item_id) const;

    /// Items with final verdict "correct", sorted by (repo_id, file_path, method).
    std::vector<ExportRecord> export_records() const;
    void export_test4vul(const std::filesystem::path& path) const;

    /// JSON view of an item as `viewer` may see it: the other reviewer's
    /// verdict stays hidden until both have judged. An empty viewer sees
    /// no verdicts on unfinished items.
    nlohmann::ordered_json item_view(const ReviewItem& item, const std::string& viewer) const;

private:
    void apply(const nlohmann::json& event);
    void append(const nlohmann::ordered_json& event);

    std::filesystem::path log_path_;
    std::array<std::string, 2> reviewers_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, ReviewItem> items_;
    std::vector<std::string> order_;  // enqueue order
};

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::filesystem::path static_dir;  // mounted at / when set
    std::string token;  // shared bearer token; empty disables the check
};

/// Registers the HTTP API on `server`:
///   GET  /queue?kind=&status=&reviewer=
///   GET  /item/{id}?reviewer=
///   POST /item/{id}/judgment    {reviewer, verdict, note}
///   POST /item/{id}/resolution  {verdict, note}
///   GET  /report?kind=
///   GET  /export
void register_routes(httplib::Server& server, ReviewService& service, const ServerOptions& options);

/// Blocks serving until the process is stopped.
void serve(ReviewService& service, const ServerOptions& options);

}  // namespace testmine::review
