#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

namespace testmine::kb {

// Declaration order is merge priority for project_url.
enum class Source { kProjectKb, kReef, kReposVul, kRemoteLookup };

std::string_view to_string(Source s) noexcept;
Source source_from_string(std::string_view s);

struct VulnRecord {
    std::string cve_id;
    std::string description;
    std::set<std::string> cwe_ids;
    std::set<std::string> fix_commits;
    std::optional<std::string> project_url;
    std::set<Source> sources;

    friend bool operator==(const VulnRecord&, const VulnRecord&) = default;
};

bool is_valid_cve_id(std::string_view id);
/// Throws Error(validation) unless `id` looks like CVE-YYYY-NNNN[N...].
void require_cve_id(std::string_view id);
bool is_commit_hash(std::string_view s);

nlohmann::ordered_json to_json(const VulnRecord& r);
VulnRecord vuln_record_from_json(const nlohmann::json& j);

struct Catalog {
    std::map<std::string, VulnRecord> records;
    std::filesystem::path storage_path;
    std::vector<std::string> notes;  // merge conflicts

    std::size_t size() const noexcept { return records.size(); }
    const VulnRecord* find(const std::string& cve_id) const;
};

struct SourceBatch {
    Source source;
    std::vector<VulnRecord> records;
};

/// One record per CVE. Descriptions: longest wins. CWE ids, fix commits
/// and sources: union. project_url: highest-priority source wins and any
/// disagreement is written to Catalog::notes. The batch tag is added to
/// each record's sources.
Catalog merge_sources(const std::vector<SourceBatch>& batches);

/// JSON Lines, one record per line, sorted by cve_id. Written atomically.
void save_catalog(const Catalog& catalog, const std::filesystem::path& path);
/// A missing file loads as an empty catalog bound to `path`.
Catalog load_catalog(const std::filesystem::path& path);

struct CatalogStats {
    std::size_t records = 0;
    std::size_t with_description = 0;
    std::size_t with_fix_commits = 0;
    std::size_t with_project_url = 0;
    std::map<std::string, std::size_t> per_source;
    std::map<std::string, std::size_t> per_cwe;
};
CatalogStats stats(const Catalog& catalog);
nlohmann::ordered_json to_json(const CatalogStats& s);

// Upstream dataset schemas differ, so each source is read through a field
// mapping. Values may be strings or arrays; commit fields also accept
// ".../commit/<hash>" URLs.
struct SourceAdapter {
    Source source = Source::kProjectKb;
    std::string cve_id_field = "cve_id";
    std::string description_field = "description";
    std::string cwe_field = "cwe_ids";
    std::string fix_commits_field = "fix_commits";
    std::string project_url_field = "project_url";

    static SourceAdapter from_json(const nlohmann::json& j);
};

/// Reads a JSON array or JSON Lines file of upstream records. Rows without
/// a valid CVE id are skipped with a warning.
SourceBatch load_source(const std::filesystem::path& path, const SourceAdapter& adapter);

struct RemoteConfig {
    std::string endpoint;  // scheme://host[:port]
    std::chrono::milliseconds timeout{10000};
};

/// Maps a vulnerability-lookup document to a record. Understands the
/// cve-search layout (summary/cwe/references) and CVE JSON 5
/// (containers.cna.descriptions/problemTypes/references).
VulnRecord parse_remote_document(const std::string& cve_id, const nlohmann::json& doc,
                                 std::vector<std::string>* warnings = nullptr);

/// GET {endpoint}/api/vulnerability/{cve_id}. One retry on transport
/// failure; any failure ends in Error(lookup_failed).
VulnRecord fetch_remote(const std::string& cve_id, const RemoteConfig& config);

using Fetcher = std::function<VulnRecord(const std::string& cve_id)>;

/// A catalog with single-writer insertion of remote hits. Readers run
/// concurrently; a miss takes the write lock, fetches, inserts and
/// persists to the catalog's storage_path (when set).
class KnowledgeBase {
public:
    explicit KnowledgeBase(Catalog catalog, Fetcher fetcher = {});

    /// Local hit: returned as is. Miss: Error(not_found) unless
    /// `allow_remote`, in which case the fetched record is stored.
    VulnRecord lookup(const std::string& cve_id, bool allow_remote);

    Catalog snapshot() const;
    std::size_t size() const;

private:
    mutable std::shared_mutex mutex_;
    Catalog catalog_;
    Fetcher fetcher_;
};

}  // namespace testmine::kb
