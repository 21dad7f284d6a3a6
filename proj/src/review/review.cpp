#include "testmine/review/review.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <mutex>
#include <tuple>

#include "testmine/error.hpp"
#include "testmine/util/io.hpp"

namespace testmine::review {

namespace {

std::string utc_now() {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::review, msg); }

bool both_judged(const ReviewItem& item) { return item.judgments.size() == 2; }

}  // namespace

std::string_view to_string(Status s) noexcept {
    switch (s) {
        case Status::kPending: return "pending";
        case Status::kJudged: return "judged";
        case Status::kDisputed: return "disputed";
        case Status::kResolved: return "resolved";
    }
    return "pending";
}

std::string_view to_string(Verdict v) noexcept { return v == Verdict::kCorrect ? "correct" : "incorrect"; }

Status status_from_string(std::string_view s) {
    for (auto v : {Status::kPending, Status::kJudged, Status::kDisputed, Status::kResolved}) {
        if (to_string(v) == s) return v;
    }
    throw Error(ErrorCode::validation, "unknown status '" + std::string(s) + "'");
}

Verdict verdict_from_string(std::string_view s) {
    if (s == "correct") return Verdict::kCorrect;
    if (s == "incorrect") return Verdict::kIncorrect;
    throw Error(ErrorCode::validation, "verdict must be 'correct' or 'incorrect', got '" + std::string(s) + "'");
}

std::optional<Verdict> ReviewItem::final_verdict() const {
    if (status == Status::kResolved) return consensus;
    if (status == Status::kJudged) return judgments.begin()->second.verdict;
    return std::nullopt;
}

std::string make_item_id(const Candidate& c) {
    std::string key = std::string(corpus::to_string(c.kind)) + "|" + c.test.content_hash + "|" +
                      (c.vuln ? c.vuln->cve_id : "") + "|" + c.classifier_id + "|" + c.test.repo_id + "|" +
                      c.test.identity();
    return std::string(c.kind == Kind::kFinding ? "F-" : "M-") + util::sha256_hex(key).substr(0, 12);
}

nlohmann::ordered_json to_json(const ExportRecord& r) {
    nlohmann::ordered_json j;
    j["repo_id"] = r.repo_id;
    j["revision"] = r.revision;
    j["file_path"] = r.file_path;
    j["class"] = r.class_name;
    j["method"] = r.method;
    j["body"] = r.body;
    j["kind"] = corpus::to_string(r.kind);
    j["cve_id"] = r.cve_id ? nlohmann::ordered_json(*r.cve_id) : nlohmann::ordered_json(nullptr);
    j["final_verdict"] = r.final_verdict;
    j["reviewer_agreement"] = r.reviewer_agreement;
    return j;
}

ExportRecord export_record_from_json(const nlohmann::json& j) {
    ExportRecord r;
    try {
        r.repo_id = j.at("repo_id").get<std::string>();
        r.revision = j.at("revision").get<std::string>();
        r.file_path = j.at("file_path").get<std::string>();
        r.class_name = j.at("class").get<std::string>();
        r.method = j.at("method").get<std::string>();
        r.body = j.at("body").get<std::string>();
        r.kind = corpus::kind_from_string(j.at("kind").get<std::string>());
        if (j.at("cve_id").is_string()) r.cve_id = j["cve_id"].get<std::string>();
        r.final_verdict = j.at("final_verdict").get<std::string>();
        r.reviewer_agreement = j.at("reviewer_agreement").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::parse, std::string("bad export row: ") + e.what());
    }
    return r;
}

nlohmann::ordered_json to_json(const AgreementReport& r) {
    nlohmann::ordered_json j;
    j["n_items"] = r.n_items;
    j["n_judged"] = r.n_judged;
    j["n_agreed"] = r.n_agreed;
    j["n_disputed"] = r.n_disputed;
    j["n_final"] = r.n_final;
    j["n_correct"] = r.n_correct;
    j["kappa"] = r.kappa.kappa;
    j["kappa_degenerate"] = r.kappa.degenerate;
    j["precision"] = r.precision;
    return j;
}

ReviewService::ReviewService(std::filesystem::path log_path, std::array<std::string, 2> reviewers)
    : log_path_(std::move(log_path)), reviewers_(std::move(reviewers)) {
    if (reviewers_[0].empty() || reviewers_[1].empty() || reviewers_[0] == reviewers_[1]) {
        fail("a campaign needs two distinct, non-empty reviewer ids");
    }
    bool has_log = std::filesystem::exists(log_path_) && std::filesystem::file_size(log_path_) > 0;
    if (!has_log) {
        nlohmann::ordered_json ev;
        ev["event"] = "campaign";
        ev["reviewers"] = reviewers_;
        append(ev);
        return;
    }
    auto events = util::read_jsonl(log_path_);
    if (events.empty() || events[0].value("event", "") != "campaign") fail(log_path_.string() + ": missing campaign header");
    auto logged = events[0].at("reviewers").get<std::vector<std::string>>();
    if (logged.size() != 2 || logged[0] != reviewers_[0] || logged[1] != reviewers_[1]) {
        fail(log_path_.string() + ": campaign reviewers are " + events[0]["reviewers"].dump());
    }
    for (std::size_t i = 1; i < events.size(); ++i) apply(events[i]);
}

void ReviewService::append(const nlohmann::ordered_json& event) { util::append_line(log_path_, event.dump()); }

void ReviewService::apply(const nlohmann::json& ev) {
    const auto type = ev.at("event").get<std::string>();
    if (type == "enqueue") {
        const auto& j = ev.at("item");
        ReviewItem item;
        item.item_id = j.at("item_id").get<std::string>();
        item.kind = corpus::kind_from_string(j.at("kind").get<std::string>());
        item.test = java::test_method_from_json(j.at("test"));
        if (j.contains("vuln") && !j["vuln"].is_null()) item.vuln = kb::vuln_record_from_json(j["vuln"]);
        item.classifier_id = j.value("classifier", "");
        item.evidence = j.value("evidence", std::vector<std::string>{});
        if (items_.emplace(item.item_id, item).second) order_.push_back(item.item_id);
    } else if (type == "judgment") {
        Judgment jd{ev.at("item_id").get<std::string>(), ev.at("reviewer").get<std::string>(),
                    verdict_from_string(ev.at("verdict").get<std::string>()), ev.value("note", ""),
                    ev.value("timestamp", "")};
        auto it = items_.find(jd.item_id);
        if (it == items_.end()) fail("log references unknown item " + jd.item_id);
        auto& item = it->second;
        item.judgments.emplace(jd.reviewer_id, jd);
        if (both_judged(item)) {
            auto a = item.judgments.begin()->second.verdict;
            auto b = std::next(item.judgments.begin())->second.verdict;
            item.status = a == b ? Status::kJudged : Status::kDisputed;
        }
    } else if (type == "resolution") {
        auto it = items_.find(ev.at("item_id").get<std::string>());
        if (it == items_.end()) fail("log references unknown item");
        it->second.consensus = verdict_from_string(ev.at("verdict").get<std::string>());
        it->second.consensus_note = ev.value("note", "");
        it->second.status = Status::kResolved;
    } else {
        fail("unknown event type '" + type + "'");
    }
}

std::vector<std::string> ReviewService::enqueue(const std::vector<Candidate>& candidates,
                                                const std::set<std::string>& excluded_hashes) {
    std::unique_lock lock(mutex_);
    std::vector<std::string> added;
    for (const auto& c : candidates) {
        if (c.kind == Kind::kMatching && !c.vuln) fail("matching candidate without a vulnerability");
        if (excluded_hashes.count(c.test.content_hash)) continue;
        auto id = make_item_id(c);
        if (items_.count(id)) continue;
        nlohmann::ordered_json item;
        item["item_id"] = id;
        item["kind"] = corpus::to_string(c.kind);
        item["test"] = java::to_json(c.test);
        item["vuln"] = c.vuln ? kb::to_json(*c.vuln) : nlohmann::ordered_json(nullptr);
        item["classifier"] = c.classifier_id;
        item["evidence"] = c.evidence;
        nlohmann::ordered_json ev;
        ev["event"] = "enqueue";
        ev["item"] = item;
        append(ev);
        apply(nlohmann::json::parse(ev.dump()));
        added.push_back(id);
    }
    return added;
}

Status ReviewService::submit_judgment(Judgment j) {
    std::unique_lock lock(mutex_);
    auto it = items_.find(j.item_id);
    if (it == items_.end()) fail("unknown item " + j.item_id);
    if (j.reviewer_id != reviewers_[0] && j.reviewer_id != reviewers_[1]) {
        fail("'" + j.reviewer_id + "' is not a reviewer of this campaign");
    }
    if (it->second.judgments.count(j.reviewer_id)) {
        fail(j.reviewer_id + " already judged " + j.item_id);
    }
    if (j.timestamp.empty()) j.timestamp = utc_now();
    nlohmann::ordered_json ev;
    ev["event"] = "judgment";
    ev["item_id"] = j.item_id;
    ev["reviewer"] = j.reviewer_id;
    ev["verdict"] = to_string(j.verdict);
    ev["note"] = j.note;
    ev["timestamp"] = j.timestamp;
    append(ev);
    apply(nlohmann::json::parse(ev.dump()));
    return it->second.status;
}

ReviewItem ReviewService::resolve_dispute(const std::string& item_id, Verdict consensus, const std::string& note) {
    std::unique_lock lock(mutex_);
    auto it = items_.find(item_id);
    if (it == items_.end()) fail("unknown item " + item_id);
    if (it->second.status != Status::kDisputed) {
        fail(item_id + " is " + std::string(to_string(it->second.status)) + ", not disputed");
    }
    nlohmann::ordered_json ev;
    ev["event"] = "resolution";
    ev["item_id"] = item_id;
    ev["verdict"] = to_string(consensus);
    ev["note"] = note;
    ev["timestamp"] = utc_now();
    append(ev);
    apply(nlohmann::json::parse(ev.dump()));
    return it->second;
}

AgreementReport ReviewService::agreement_report(std::optional<Kind> kind) const {
    std::shared_lock lock(mutex_);
    AgreementReport r;
    std::vector<bool> a, b;
    for (const auto& id : order_) {
        const auto& item = items_.at(id);
        if (kind && item.kind != *kind) continue;
        ++r.n_items;
        if (both_judged(item)) {
            ++r.n_judged;
            bool va = item.judgments.at(reviewers_[0]).verdict == Verdict::kCorrect;
            bool vb = item.judgments.at(reviewers_[1]).verdict == Verdict::kCorrect;
            a.push_back(va);
            b.push_back(vb);
            if (va == vb) ++r.n_agreed;
            else ++r.n_disputed;
        }
        if (auto v = item.final_verdict()) {
            ++r.n_final;
            if (*v == Verdict::kCorrect) ++r.n_correct;
        }
    }
    r.kappa = metrics::cohen_kappa(a, b);
    r.precision = r.n_final == 0 ? 0.0 : static_cast<double>(r.n_correct) / static_cast<double>(r.n_final);
    return r;
}

std::vector<ReviewItem> ReviewService::queue(std::optional<Kind> kind, std::optional<Status> status) const {
    std::shared_lock lock(mutex_);
    std::vector<ReviewItem> out;
    for (const auto& id : order_) {
        const auto& item = items_.at(id);
        if (kind && item.kind != *kind) continue;
        if (status && item.status != *status) continue;
        out.push_back(item);
    }
    return out;
}

std::optional<ReviewItem> ReviewService::item(const std::string& item_id) const {
    std::shared_lock lock(mutex_);
    auto it = items_.find(item_id);
    if (it == items_.end()) return std::nullopt;
    return it->second;
}

std::vector<ExportRecord> ReviewService::export_records() const {
    std::shared_lock lock(mutex_);
    std::vector<ExportRecord> out;
    for (const auto& [id, item] : items_) {
        auto v = item.final_verdict();
        if (!v || *v != Verdict::kCorrect) continue;
        ExportRecord r;
        r.repo_id = item.test.repo_id;
        r.revision = item.test.revision;
        r.file_path = item.test.file_path;
        r.class_name = item.test.class_qualified_name;
        r.method = item.test.method_name;
        r.body = item.test.body_source;
        r.kind = item.kind;
        if (item.vuln) r.cve_id = item.vuln->cve_id;
        r.final_verdict = std::string(to_string(*v));
        r.reviewer_agreement = item.status == Status::kJudged;
        out.push_back(std::move(r));
    }
    auto key = [](const ExportRecord& r) {
        return std::tie(r.repo_id, r.file_path, r.method, r.class_name, r.kind, r.cve_id, r.body);
    };
    std::sort(out.begin(), out.end(), [&](const ExportRecord& x, const ExportRecord& y) { return key(x) < key(y); });
    return out;
}

void ReviewService::export_test4vul(const std::filesystem::path& path) const {
    std::string text;
    for (const auto& r : export_records()) {
        text += to_json(r).dump();
        text += '\n';
    }
    util::write_file_atomic(path, text);
}

nlohmann::ordered_json ReviewService::item_view(const ReviewItem& item, const std::string& viewer) const {
    nlohmann::ordered_json j;
    j["item_id"] = item.item_id;
    j["kind"] = corpus::to_string(item.kind);
    j["status"] = to_string(item.status);
    j["classifier"] = item.classifier_id;
    j["evidence"] = item.evidence;
    j["test"] = java::to_json(item.test);
    j["vuln"] = item.vuln ? kb::to_json(*item.vuln) : nlohmann::ordered_json(nullptr);
    bool reveal = both_judged(item);
    auto judgments = nlohmann::ordered_json::array();
    for (const auto& [reviewer, jd] : item.judgments) {
        if (!reveal && reviewer != viewer) continue;
        nlohmann::ordered_json e;
        e["reviewer"] = reviewer;
        e["verdict"] = to_string(jd.verdict);
        e["note"] = jd.note;
        e["timestamp"] = jd.timestamp;
        judgments.push_back(e);
    }
    j["judgments"] = judgments;
    j["judged_by_viewer"] = !viewer.empty() && item.judgments.count(viewer) > 0;
    j["judgment_count"] = item.judgments.size();
    if (item.consensus) {
        j["consensus"] = to_string(*item.consensus);
        j["consensus_note"] = item.consensus_note;
    }
    if (auto v = item.final_verdict()) j["final_verdict"] = to_string(*v);
    return j;
}

}  // namespace testmine::review
