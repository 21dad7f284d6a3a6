#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace testmine::util {

struct ProcessResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

// Runs argv[0] (searched on PATH) without a shell. `input` is fed on stdin;
// stdout and stderr are captured in full.
ProcessResult run_process(const std::vector<std::string>& argv,
                          const std::optional<std::filesystem::path>& cwd = std::nullopt,
                          std::string_view input = {});

}  // namespace testmine::util
