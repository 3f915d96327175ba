#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace flor {

// Variables to set (value) or remove (nullopt) on top of the inherited environment.
using EnvOverrides = std::vector<std::pair<std::string, std::optional<std::string>>>;

struct CaptureResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

// Runs argv (PATH lookup) in cwd and captures both output streams.
CaptureResult run_capture(const std::vector<std::string>& argv, const std::filesystem::path& cwd,
                          const EnvOverrides& env = {}, const std::string& input = {});

struct ShellOptions {
    std::filesystem::path cwd;
    EnvOverrides env;
    // When set, stdout and stderr are appended here instead of inherited.
    std::optional<std::filesystem::path> output_log;
};

// `/bin/sh -c command`; returns the exit status (128 + signal when killed).
int run_shell(const std::string& command, const ShellOptions& options);

} // namespace flor
