#include "testmine/util/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>

#include "testmine/error.hpp"

extern char** environ;

namespace testmine::util {

namespace {

struct Pipe {
    int fds[2] = {-1, -1};
    Pipe() {
        if (::pipe2(fds, O_CLOEXEC) != 0) {
            throw Error(ErrorCode::io, std::string("pipe: ") + std::strerror(errno));
        }
    }
    ~Pipe() {
        close_read();
        close_write();
    }
    Pipe(const Pipe&) = delete;
    Pipe& operator=(const Pipe&) = delete;
    void close_read() {
        if (fds[0] >= 0) ::close(fds[0]);
        fds[0] = -1;
    }
    void close_write() {
        if (fds[1] >= 0) ::close(fds[1]);
        fds[1] = -1;
    }
};

class SpawnActions {
public:
    SpawnActions() { posix_spawn_file_actions_init(&actions_); }
    ~SpawnActions() { posix_spawn_file_actions_destroy(&actions_); }
    SpawnActions(const SpawnActions&) = delete;
    SpawnActions& operator=(const SpawnActions&) = delete;
    posix_spawn_file_actions_t* get() { return &actions_; }

private:
    posix_spawn_file_actions_t actions_;
};

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv,
                          const std::optional<std::filesystem::path>& cwd,
                          std::string_view input) {
    if (argv.empty()) {
        throw Error(ErrorCode::validation, "run_process: empty argv");
    }
    static const bool sigpipe_ignored = [] {
        ::signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)sigpipe_ignored;
    Pipe in_pipe;
    Pipe out_pipe;
    Pipe err_pipe;
    SpawnActions actions;
    posix_spawn_file_actions_adddup2(actions.get(), in_pipe.fds[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(actions.get(), out_pipe.fds[1], STDOUT_FILENO);
    posix_spawn_file_actions_adddup2(actions.get(), err_pipe.fds[1], STDERR_FILENO);

    // posix_spawn_file_actions_addchdir_np is glibc-only; route through `env -C`.
    std::vector<std::string> full;
    if (cwd) {
        full = {"env", "-C", cwd->string()};
    }
    full.insert(full.end(), argv.begin(), argv.end());

    std::vector<char*> cargv;
    cargv.reserve(full.size() + 1);
    for (auto& a : full) cargv.push_back(a.data());
    cargv.push_back(nullptr);

    pid_t pid = 0;
    int rc = posix_spawnp(&pid, cargv[0], actions.get(), nullptr, cargv.data(), environ);
    if (rc != 0) {
        throw Error(ErrorCode::io, "spawn " + argv[0] + ": " + std::strerror(rc));
    }
    in_pipe.close_read();
    out_pipe.close_write();
    err_pipe.close_write();
    if (input.empty()) {
        in_pipe.close_write();
    } else {
        ::fcntl(in_pipe.fds[1], F_SETFL, O_NONBLOCK);
    }

    ProcessResult result;
    std::array<pollfd, 3> pfds{{{out_pipe.fds[0], POLLIN, 0},
                                {err_pipe.fds[0], POLLIN, 0},
                                {in_pipe.fds[1], POLLOUT, 0}}};
    std::array<std::string*, 2> sinks{&result.out, &result.err};
    int open_count = 2;
    std::size_t written = 0;
    std::array<char, 65536> buf{};
    while (open_count > 0) {
        if (::poll(pfds.data(), pfds.size(), -1) < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (pfds[2].fd >= 0 && pfds[2].revents != 0) {
            ssize_t n = ::write(pfds[2].fd, input.data() + written, input.size() - written);
            if (n > 0) written += static_cast<std::size_t>(n);
            if ((n < 0 && errno != EAGAIN && errno != EINTR) || written == input.size()) {
                in_pipe.close_write();
                pfds[2].fd = -1;
            }
        }
        for (std::size_t i = 0; i < 2; ++i) {
            if (pfds[i].fd < 0 || pfds[i].revents == 0) continue;
            ssize_t n = ::read(pfds[i].fd, buf.data(), buf.size());
            if (n > 0) {
                sinks[i]->append(buf.data(), static_cast<std::size_t>(n));
            } else if (n == 0 || errno != EINTR) {
                pfds[i].fd = -1;
                --open_count;
            }
        }
    }

    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

}  // namespace testmine::util
