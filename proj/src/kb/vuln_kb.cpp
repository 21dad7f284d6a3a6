#include "testmine/kb/vuln_kb.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <mutex>
#include <regex>

#include "testmine/error.hpp"
#include "testmine/util/io.hpp"

namespace testmine::kb {

namespace {

const std::regex& cve_pattern() {
    static const std::regex re(R"(CVE-\d{4}-\d{4,})");
    return re;
}

const std::regex& commit_url_pattern() {
    static const std::regex re(R"(/commits?/([0-9a-fA-F]{7,40})(?:[^0-9a-fA-F]|$))");
    return re;
}

// Field values arrive as a string, an array of strings, or a
// comma/whitespace separated string.
std::vector<std::string> as_strings(const nlohmann::json& v) {
    std::vector<std::string> out;
    if (v.is_array()) {
        for (const auto& e : v) {
            auto sub = as_strings(e);
            out.insert(out.end(), sub.begin(), sub.end());
        }
    } else if (v.is_string()) {
        std::string cur;
        for (char c : v.get<std::string>()) {
            if (c == ',' || c == ';' || std::isspace(static_cast<unsigned char>(c))) {
                if (!cur.empty()) out.push_back(std::move(cur));
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        if (!cur.empty()) out.push_back(std::move(cur));
    } else if (v.is_number_integer()) {
        out.push_back(std::to_string(v.get<long long>()));
    }
    return out;
}

std::optional<std::string> commit_from(const std::string& s) {
    if (is_commit_hash(s)) return util::to_lower(s);
    std::smatch m;
    if (std::regex_search(s, m, commit_url_pattern())) return util::to_lower(m[1].str());
    return std::nullopt;
}

std::string normalize_cwe(std::string s) {
    s = util::trim(s);
    if (s.empty()) return s;
    if (std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); })) return "CWE-" + s;
    std::string upper = s;
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    if (upper.rfind("CWE-", 0) == 0) return upper;
    return {};
}

const nlohmann::json* field(const nlohmann::json& row, const std::string& path) {
    const nlohmann::json* cur = &row;
    std::size_t start = 0;
    while (start <= path.size()) {
        auto dot = path.find('.', start);
        auto key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!cur->is_object() || !cur->contains(key)) return nullptr;
        cur = &(*cur)[key];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    return cur;
}

}  // namespace

std::string_view to_string(Source s) noexcept {
    switch (s) {
        case Source::kProjectKb: return "projectkb";
        case Source::kReef: return "reef";
        case Source::kReposVul: return "reposvul";
        case Source::kRemoteLookup: return "remote-lookup";
    }
    return "unknown";
}

Source source_from_string(std::string_view s) {
    for (auto src : {Source::kProjectKb, Source::kReef, Source::kReposVul, Source::kRemoteLookup}) {
        if (to_string(src) == s) return src;
    }
    throw Error(ErrorCode::validation, "unknown source tag '" + std::string(s) + "'");
}

bool is_valid_cve_id(std::string_view id) {
    return std::regex_match(id.begin(), id.end(), cve_pattern());
}

void require_cve_id(std::string_view id) {
    if (!is_valid_cve_id(id)) {
        throw Error(ErrorCode::validation, "malformed CVE id '" + std::string(id) + "'");
    }
}

bool is_commit_hash(std::string_view s) {
    return s.size() >= 7 && s.size() <= 40 &&
           std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isxdigit(c); });
}

nlohmann::ordered_json to_json(const VulnRecord& r) {
    nlohmann::ordered_json j;
    j["cve_id"] = r.cve_id;
    j["description"] = r.description;
    j["cwe_ids"] = r.cwe_ids;
    j["fix_commits"] = r.fix_commits;
    j["project_url"] = r.project_url ? nlohmann::ordered_json(*r.project_url) : nlohmann::ordered_json(nullptr);
    auto sources = nlohmann::ordered_json::array();
    for (auto s : r.sources) sources.push_back(to_string(s));
    j["sources"] = sources;
    return j;
}

VulnRecord vuln_record_from_json(const nlohmann::json& j) {
    VulnRecord r;
    try {
        r.cve_id = j.at("cve_id").get<std::string>();
        r.description = j.value("description", "");
        if (j.contains("cwe_ids")) r.cwe_ids = j["cwe_ids"].get<std::set<std::string>>();
        if (j.contains("fix_commits")) r.fix_commits = j["fix_commits"].get<std::set<std::string>>();
        if (j.contains("project_url") && j["project_url"].is_string()) r.project_url = j["project_url"].get<std::string>();
        for (const auto& s : j.at("sources")) r.sources.insert(source_from_string(s.get<std::string>()));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::parse, std::string("bad vulnerability record: ") + e.what());
    }
    require_cve_id(r.cve_id);
    if (r.sources.empty()) throw Error(ErrorCode::parse, r.cve_id + ": record without sources");
    return r;
}

const VulnRecord* Catalog::find(const std::string& cve_id) const {
    auto it = records.find(cve_id);
    return it == records.end() ? nullptr : &it->second;
}

Catalog merge_sources(const std::vector<SourceBatch>& batches) {
    Catalog out;
    // cve -> (source priority, url) candidates
    std::map<std::string, std::set<std::pair<Source, std::string>>> urls;
    for (const auto& batch : batches) {
        for (const auto& in : batch.records) {
            require_cve_id(in.cve_id);
            auto& r = out.records[in.cve_id];
            r.cve_id = in.cve_id;
            if (in.description.size() > r.description.size() ||
                (in.description.size() == r.description.size() && in.description < r.description)) {
                r.description = in.description;
            }
            r.cwe_ids.insert(in.cwe_ids.begin(), in.cwe_ids.end());
            r.fix_commits.insert(in.fix_commits.begin(), in.fix_commits.end());
            r.sources.insert(in.sources.begin(), in.sources.end());
            r.sources.insert(batch.source);
            if (in.project_url && !in.project_url->empty()) {
                auto src = in.sources.empty() ? batch.source : std::min(batch.source, *in.sources.begin());
                urls[in.cve_id].insert({src, *in.project_url});
            }
        }
    }
    for (auto& [cve, candidates] : urls) {
        const auto& winner = *candidates.begin();
        out.records[cve].project_url = winner.second;
        for (const auto& [src, url] : candidates) {
            if (url != winner.second) {
                out.notes.push_back(cve + ": project_url '" + url + "' from " + std::string(to_string(src)) +
                                    " conflicts with '" + winner.second + "' from " +
                                    std::string(to_string(winner.first)) + "; kept the latter");
            }
        }
    }
    return out;
}

void save_catalog(const Catalog& catalog, const std::filesystem::path& path) {
    std::string text;
    for (const auto& [id, r] : catalog.records) {
        text += to_json(r).dump();
        text += '\n';
    }
    util::write_file_atomic(path, text);
}

Catalog load_catalog(const std::filesystem::path& path) {
    Catalog c;
    c.storage_path = path;
    if (!std::filesystem::exists(path)) return c;
    for (const auto& row : util::read_jsonl(path)) {
        auto r = vuln_record_from_json(row);
        auto id = r.cve_id;
        if (!c.records.emplace(id, std::move(r)).second) {
            throw Error(ErrorCode::parse, path.string() + ": duplicate record " + id);
        }
    }
    return c;
}

CatalogStats stats(const Catalog& catalog) {
    CatalogStats s;
    s.records = catalog.size();
    for (const auto& [id, r] : catalog.records) {
        if (!r.description.empty()) ++s.with_description;
        if (!r.fix_commits.empty()) ++s.with_fix_commits;
        if (r.project_url) ++s.with_project_url;
        for (auto src : r.sources) ++s.per_source[std::string(to_string(src))];
        for (const auto& cwe : r.cwe_ids) ++s.per_cwe[cwe];
    }
    return s;
}

nlohmann::ordered_json to_json(const CatalogStats& s) {
    nlohmann::ordered_json j;
    j["records"] = s.records;
    j["with_description"] = s.with_description;
    j["with_fix_commits"] = s.with_fix_commits;
    j["with_project_url"] = s.with_project_url;
    j["per_source"] = s.per_source;
    j["per_cwe"] = s.per_cwe;
    return j;
}

SourceAdapter SourceAdapter::from_json(const nlohmann::json& j) {
    SourceAdapter a;
    a.source = source_from_string(j.at("source").get<std::string>());
    a.cve_id_field = j.value("cve_id", a.cve_id_field);
    a.description_field = j.value("description", a.description_field);
    a.cwe_field = j.value("cwe_ids", a.cwe_field);
    a.fix_commits_field = j.value("fix_commits", a.fix_commits_field);
    a.project_url_field = j.value("project_url", a.project_url_field);
    return a;
}

SourceBatch load_source(const std::filesystem::path& path, const SourceAdapter& adapter) {
    auto text = util::read_file(path);
    std::vector<nlohmann::json> rows;
    auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '[') {
        try {
            for (auto& row : nlohmann::json::parse(text)) rows.push_back(std::move(row));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::parse, path.string() + ": " + e.what());
        }
    } else {
        rows = util::parse_jsonl(text);
    }

    SourceBatch batch{adapter.source, {}};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        const auto* id = field(row, adapter.cve_id_field);
        if (!id || !id->is_string() || !is_valid_cve_id(util::trim(id->get<std::string>()))) {
            spdlog::warn("{}: row {} has no valid CVE id, skipped", path.string(), i + 1);
            continue;
        }
        VulnRecord r;
        r.cve_id = util::trim(id->get<std::string>());
        r.sources = {adapter.source};
        if (const auto* d = field(row, adapter.description_field); d && d->is_string()) {
            r.description = util::trim(d->get<std::string>());
        }
        if (const auto* c = field(row, adapter.cwe_field)) {
            for (auto& cwe : as_strings(*c)) {
                if (auto n = normalize_cwe(cwe); !n.empty()) r.cwe_ids.insert(n);
            }
        }
        if (const auto* f = field(row, adapter.fix_commits_field)) {
            for (const auto& s : as_strings(*f)) {
                if (auto h = commit_from(s)) r.fix_commits.insert(*h);
            }
        }
        if (const auto* u = field(row, adapter.project_url_field); u && u->is_string() && !u->get<std::string>().empty()) {
            r.project_url = util::trim(u->get<std::string>());
        }
        batch.records.push_back(std::move(r));
    }
    return batch;
}

VulnRecord parse_remote_document(const std::string& cve_id, const nlohmann::json& doc,
                                 std::vector<std::string>* warnings) {
    VulnRecord r;
    r.cve_id = cve_id;
    r.sources = {Source::kRemoteLookup};
    std::vector<std::string> refs;

    if (const auto* cna = field(doc, "containers.cna")) {
        // CVE JSON 5
        if (const auto* descs = field(*cna, "descriptions"); descs && descs->is_array()) {
            for (const auto& d : *descs) {
                auto lang = d.value("lang", "");
                if (lang.rfind("en", 0) == 0 && r.description.empty()) r.description = d.value("value", "");
            }
        }
        if (const auto* pts = field(*cna, "problemTypes"); pts && pts->is_array()) {
            for (const auto& pt : *pts) {
                for (const auto& d : pt.value("descriptions", nlohmann::json::array())) {
                    if (auto n = normalize_cwe(d.value("cweId", "")); !n.empty()) r.cwe_ids.insert(n);
                }
            }
        }
        if (const auto* rs = field(*cna, "references"); rs && rs->is_array()) {
            for (const auto& ref : *rs) refs.push_back(ref.value("url", ""));
        }
    } else {
        // cve-search style
        if (doc.contains("summary") && doc["summary"].is_string()) {
            r.description = doc["summary"].get<std::string>();
        } else if (doc.contains("description") && doc["description"].is_string()) {
            r.description = doc["description"].get<std::string>();
        }
        for (const char* key : {"cwe", "cwe_ids", "cwes"}) {
            if (doc.contains(key)) {
                for (auto& c : as_strings(doc[key])) {
                    if (auto n = normalize_cwe(c); !n.empty()) r.cwe_ids.insert(n);
                }
            }
        }
        if (doc.contains("references")) {
            for (const auto& ref : doc["references"]) {
                if (ref.is_string()) refs.push_back(ref.get<std::string>());
                else if (ref.is_object()) refs.push_back(ref.value("url", ""));
            }
        }
    }
    for (const auto& url : refs) {
        if (url.find("/commit") == std::string::npos) continue;
        if (auto h = commit_from(url)) {
            r.fix_commits.insert(*h);
            if (!r.project_url) {
                auto pos = url.find("/commit");
                r.project_url = url.substr(0, pos);
            }
        }
    }
    r.description = util::trim(r.description);
    if (r.description.empty()) {
        std::string w = cve_id + ": remote document has no description";
        spdlog::warn("{}", w);
        if (warnings) warnings->push_back(w);
    }
    return r;
}

VulnRecord fetch_remote(const std::string& cve_id, const RemoteConfig& config) {
    require_cve_id(cve_id);
    if (config.endpoint.empty()) throw Error(ErrorCode::lookup_failed, "no remote endpoint configured");
    httplib::Client client(config.endpoint);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_follow_location(true);

    const std::string path = "/api/vulnerability/" + cve_id;
    auto res = client.Get(path);
    if (!res) {
        spdlog::warn("{}: {} failed ({}), retrying once", cve_id, path, httplib::to_string(res.error()));
        res = client.Get(path);
    }
    if (!res) {
        throw Error(ErrorCode::lookup_failed,
                    cve_id + ": transport error: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw Error(ErrorCode::lookup_failed, cve_id + ": HTTP " + std::to_string(res->status));
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::lookup_failed, cve_id + ": response is not JSON: " + e.what());
    }
    if (doc.is_null()) throw Error(ErrorCode::lookup_failed, cve_id + ": unknown to the remote service");
    return parse_remote_document(cve_id, doc);
}

KnowledgeBase::KnowledgeBase(Catalog catalog, Fetcher fetcher)
    : catalog_(std::move(catalog)), fetcher_(std::move(fetcher)) {}

VulnRecord KnowledgeBase::lookup(const std::string& cve_id, bool allow_remote) {
    require_cve_id(cve_id);
    {
        std::shared_lock lock(mutex_);
        if (const auto* r = catalog_.find(cve_id)) return *r;
    }
    if (!allow_remote) throw Error(ErrorCode::not_found, cve_id + " is not in the catalog");
    if (!fetcher_) throw Error(ErrorCode::lookup_failed, cve_id + ": no remote lookup configured");

    std::unique_lock lock(mutex_);
    if (const auto* r = catalog_.find(cve_id)) return *r;
    auto record = fetcher_(cve_id);
    record.cve_id = cve_id;
    record.sources.insert(Source::kRemoteLookup);
    catalog_.records[cve_id] = record;
    if (!catalog_.storage_path.empty()) save_catalog(catalog_, catalog_.storage_path);
    spdlog::info("{} fetched remotely; catalog now holds {} records", cve_id, catalog_.size());
    return record;
}

Catalog KnowledgeBase::snapshot() const {
    std::shared_lock lock(mutex_);
    return catalog_;
}

std::size_t KnowledgeBase::size() const {
    std::shared_lock lock(mutex_);
    return catalog_.size();
}

}  // namespace testmine::kb
