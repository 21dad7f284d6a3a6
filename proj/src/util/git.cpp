#include "testmine/util/git.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>

#include "testmine/error.hpp"
#include "testmine/util/process.hpp"

namespace testmine::git {

namespace fs = std::filesystem;

namespace {

constexpr const char* kEmptyTree = "4b825dc642cb6eb9a060e54bf8d69288fbee4904";

std::vector<std::string> split_nul(const std::string& s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        auto end = s.find('\0', pos);
        if (end == std::string::npos) end = s.size();
        if (end > pos) out.emplace_back(s.substr(pos, end - pos));
        pos = end + 1;
    }
    return out;
}

util::ProcessResult git(const fs::path& repo, std::vector<std::string> args,
                        std::string_view input = {}) {
    args.insert(args.begin(), {"git", "-c", "core.quotepath=off"});
    return util::run_process(args, repo, input);
}

util::ProcessResult git_checked(const fs::path& repo, std::vector<std::string> args,
                                std::string_view input = {}) {
    auto r = git(repo, args, input);
    if (r.exit_code != 0) {
        std::string cmd;
        for (const auto& a : args) cmd += a + " ";
        throw Error(ErrorCode::io, "git " + cmd + "failed: " + r.err);
    }
    return r;
}

}  // namespace

Repository::Repository(fs::path path) : path_(std::move(path)) {
    if (!fs::exists(path_)) {
        throw Error(ErrorCode::not_found, "repository path does not exist: " + path_.string());
    }
}

std::optional<std::string> Repository::resolve_commit(const std::string& rev) const {
    auto r = git(path_, {"rev-parse", "--verify", "--quiet", rev + "^{commit}"});
    if (r.exit_code != 0) return std::nullopt;
    auto out = r.out;
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
    return out;
}

std::optional<std::string> Repository::first_parent(const std::string& commit) const {
    return resolve_commit(commit + "^1");
}

std::vector<std::string> Repository::list_files(const std::string& commit) const {
    auto r = git_checked(path_, {"ls-tree", "-r", "-z", "--name-only", commit});
    auto files = split_nul(r.out);
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<std::string> Repository::changed_files(const std::string& from,
                                                   const std::string& to) const {
    auto r = git_checked(path_, {"diff", "--no-renames", "--name-only", "-z",
                                 from.empty() ? kEmptyTree : from, to});
    auto files = split_nul(r.out);
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<std::string> Repository::read_files(const std::string& commit,
                                                const std::vector<std::string>& paths) const {
    if (paths.empty()) return {};
    std::string request;
    for (const auto& p : paths) {
        request += commit + ":" + p + "\n";
    }
    auto r = git_checked(path_, {"cat-file", "--batch"}, request);

    // Each answer: "<oid> <type> <size>\n<content>\n" or "<name> missing\n".
    std::vector<std::string> contents;
    contents.reserve(paths.size());
    std::size_t pos = 0;
    for (const auto& p : paths) {
        auto eol = r.out.find('\n', pos);
        if (eol == std::string::npos) {
            throw Error(ErrorCode::io, "truncated git cat-file output for " + p);
        }
        std::string header = r.out.substr(pos, eol - pos);
        pos = eol + 1;
        if (header.size() >= 8 && header.compare(header.size() - 8, 8, " missing") == 0) {
            throw Error(ErrorCode::not_found, "path " + p + " not found at " + commit);
        }
        auto last_space = header.rfind(' ');
        std::size_t size = std::stoull(header.substr(last_space + 1));
        contents.emplace_back(r.out.substr(pos, size));
        pos += size + 1;
    }
    return contents;
}

void clone_at(const std::string& url, const fs::path& dest, const std::string& revision,
              bool full_history) {
    fs::create_directories(dest);
    git_checked(dest, {"init", "-q"});
    git(dest, {"remote", "remove", "origin"});
    git_checked(dest, {"remote", "add", "origin", url});
    const std::string rev = revision.empty() ? "HEAD" : revision;
    bool fetched = false;
    if (!full_history) {
        auto shallow = git(dest, {"fetch", "-q", "--depth", "1", "origin", rev});
        fetched = shallow.exit_code == 0;
        if (!fetched) {
            spdlog::info("shallow fetch of {} at {} failed, falling back to full clone", url, rev);
        }
    }
    if (!fetched) {
        git_checked(dest, {"fetch", "-q", "origin", "+refs/heads/*:refs/remotes/origin/*"});
        auto by_name = git(dest, {"fetch", "-q", "origin", rev});
        if (by_name.exit_code != 0 && rev != "HEAD") {
            git_checked(dest, {"checkout", "-q", "--detach", rev});
            return;
        }
    }
    git_checked(dest, {"checkout", "-q", "--detach", "FETCH_HEAD"});
}

bool is_remote_url(const std::string& location) {
    return location.find("://") != std::string::npos || location.rfind("git@", 0) == 0;
}

}  // namespace testmine::git
