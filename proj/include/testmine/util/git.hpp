#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace testmine::git {

// Thin wrapper over the `git` executable. All reads go through the object
// database, so a revision can be inspected without checking it out.
class Repository {
public:
    explicit Repository(std::filesystem::path path);

    const std::filesystem::path& path() const noexcept { return path_; }

    /// Full commit hash for `rev`, or nullopt when it does not name a commit.
    std::optional<std::string> resolve_commit(const std::string& rev) const;

    std::optional<std::string> first_parent(const std::string& commit) const;

    /// Paths of all blobs in the commit's tree, sorted.
    std::vector<std::string> list_files(const std::string& commit) const;

    /// Paths whose content differs between `from` and `to`. An empty `from`
    /// compares against the empty tree.
    std::vector<std::string> changed_files(const std::string& from, const std::string& to) const;

    /// Contents of `paths` at `commit`, in the same order.
    std::vector<std::string> read_files(const std::string& commit,
                                        const std::vector<std::string>& paths) const;

private:
    std::filesystem::path path_;
};

/// Clone `url` into `dest` positioned at `revision`. Tries a depth-1 fetch
/// first unless `full_history` is requested.
void clone_at(const std::string& url, const std::filesystem::path& dest,
              const std::string& revision, bool full_history);

bool is_remote_url(const std::string& location);

}  // namespace testmine::git
