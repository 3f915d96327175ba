#pragma once

#include "flor/buildspec.hpp"
#include "flor/events.hpp"
#include "flor/process.hpp"
#include "flor/project.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace flor {

struct ExecutedStep {
    std::string target;
    std::string filename;
    int exit_code = 0;
    double duration = 0; // seconds
    Timestamp tstamp = 0;
    std::string vid;
    IngestStats stats;
};

struct RunReport {
    std::string projid;
    Timestamp tstamp = 0; // start of the interval this run created
    std::vector<ExecutedStep> executed;
    std::size_t records_ingested = 0;
    std::string vid;
    std::optional<std::string> failed_target;
    bool ok() const { return !failed_target; }
};

struct RunOptions {
    std::map<std::string, std::string> overrides;
    CheckpointPolicy policy = checkpoint_policy;
    // Step stdout/stderr go here when set; otherwise they are inherited.
    std::optional<std::filesystem::path> step_log;
};

// The program a target's recipe launches: the first recipe token naming an
// existing file with an extension, else the target name.
std::string step_filename(const BuildGraph& graph, const BuildTarget& target,
                          const std::function<bool(const std::string&)>& file_exists);

// Environment handed to one step.
struct StepEnvironment {
    std::filesystem::path events_file;
    std::filesystem::path ckpt_dir;
    std::map<std::string, std::string> args;
    bool replay = false;
};
EnvOverrides step_env(const StepEnvironment& env);

// Runs every recipe line of target in cwd, stopping at the first failure.
int run_recipe(const BuildGraph& graph, const BuildTarget& target, const std::filesystem::path& cwd,
               const EnvOverrides& env, const std::optional<std::filesystem::path>& step_log);

// Executes the stale targets of goal (default target when empty) in topo
// order, committing each step. The last commit carries `run::status`.
RunReport run(Project& project, const std::string& goal, const RunOptions& options = {});

// Records one value at the given loop coordinates under a fresh commit that
// extends the most recent interval.
CommitResult record_feedback(Project& project, const std::string& name,
                             const std::vector<std::pair<std::string, std::string>>& dims,
                             const std::string& value);

inline constexpr const char* kFeedbackFilename = "feedback";

} // namespace flor
