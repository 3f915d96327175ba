#pragma once

#include "flor/diff.hpp"
#include "flor/project.hpp"
#include "flor/runner.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace flor {

// True when line calls log/arg (optionally as flor.log/flor.arg) with name as
// its first, literal argument.
bool logs_name(std::string_view line, const std::string& name);
bool is_logging_statement(std::string_view line);

// Drops every line that logs one of names.
std::string strip_logging(std::string_view source, const std::vector<std::string>& names);

struct LoggingDiff {
    std::string filename;
    std::vector<DiffHunk> hunks;
    std::vector<std::string> warnings; // added lines that are not logging statements
    std::string text;                  // unified diff
    bool empty() const { return hunks.empty(); }
};

// Head version vs working tree, ignoring whitespace. Throws NotFound for an
// untracked file.
LoggingDiff logging_diff(const Project& project, const std::string& filename);

enum class ReplayMode { Full, Resume };
std::string_view replay_mode_name(ReplayMode mode);

struct CheckpointRef {
    std::string loop;
    std::int64_t iteration = 0;
    std::string name;
    std::string hash;
};

struct WorkItem {
    std::string vid;
    Timestamp tstamp = 0;
    std::string target;
    std::string filename;
    ReplayMode mode = ReplayMode::Full;
    CtxId resume_ctx = 0;
    std::string resume_loop;
    std::int64_t resume_iteration = 0;
    std::vector<CheckpointRef> checkpoints;
    std::vector<std::string> prerequisites; // uncached upstream targets run first
    std::string merged_source;
};

enum class SkipReason { Cached, AlreadyPresent, NotApplicable };
std::string_view skip_reason_name(SkipReason reason);

struct SkippedItem {
    std::string vid;
    std::string target;
    SkipReason reason = SkipReason::AlreadyPresent;
    Timestamp tstamp = 0;
    std::string filename;
};

struct PlanConflict {
    std::string vid;
    std::string filename;
    Timestamp tstamp = 0;
    std::vector<ConflictHunk> hunks;
};

struct ReplayPlan {
    std::vector<std::string> requested;
    std::vector<WorkItem> work;
    std::vector<SkippedItem> skipped;
    std::vector<PlanConflict> conflicts;
    std::vector<std::string> warnings;
};

struct ReplayScope {
    std::optional<Timestamp> since;
    std::optional<Timestamp> until;
};

ReplayPlan plan(Project& project, const std::vector<std::string>& names, const ReplayScope& scope = {});

std::string format_plan(const ReplayPlan& plan);

struct ItemReport {
    WorkItem item;
    bool ok = false;
    int exit_code = 0;
    std::string error;
    std::size_t records_added = 0;
    std::size_t events = 0;
    std::size_t iterations_total = 0;    // iter_begin events at any depth
    std::size_t iterations_executed = 0; // outermost iterations actually recomputed
};

struct ReplayReport {
    std::vector<ItemReport> items;
    std::size_t records_added = 0;
    std::string vid; // commit holding the backfill files; empty when nothing was added
    bool ok() const;
};

struct ReplayOptions {
    std::optional<std::filesystem::path> step_log;
    bool keep_workspace = false;
};

ReplayReport execute(Project& project, const ReplayPlan& plan, const ReplayOptions& options = {});

std::string format_report(const ReplayReport& report);

} // namespace flor
