#pragma once

#include "flor/buildspec.hpp"
#include "flor/store.hpp"
#include "flor/types.hpp"
#include "flor/vcs.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace flor {

enum class ClockMode { Wall, Logical };

std::string_view clock_mode_name(ClockMode mode);
ClockMode parse_clock_mode(std::string_view text);

struct ProjectConfig {
    std::string projid;
    std::string makefile_path = "Makefile";
    ClockMode clock = ClockMode::Wall;
};

struct InitOptions {
    std::optional<std::string> projid;
    ClockMode clock = ClockMode::Wall;
};

struct CommitResult {
    Timestamp tstamp = 0;
    std::string vid;
    bool committed = false; // false when nothing was pending and the tree was clean
};

// Exclusive advisory lock on .flor/lock, released on destruction.
class ProjectLock {
  public:
    explicit ProjectLock(const std::filesystem::path& path);
    ~ProjectLock();
    ProjectLock(const ProjectLock&) = delete;
    ProjectLock& operator=(const ProjectLock&) = delete;

  private:
    int fd_ = -1;
};

class Project {
  public:
    static constexpr const char* kDirName = ".flor";

    // Requires a parseable Makefile; creates the git repository if missing.
    static Project init(const std::filesystem::path& root, const InitOptions& options = {});
    // Searches root and its parents for .flor; rebuilds a stale index.
    static Project open(const std::filesystem::path& start);

    const std::filesystem::path& root() const noexcept { return root_; }
    std::filesystem::path flor_dir() const { return root_ / kDirName; }
    const ProjectConfig& config() const noexcept { return config_; }
    // FLOR_PROJID overrides the configured projid.
    const std::string& projid() const noexcept { return projid_; }

    Store& store() noexcept { return *store_; }
    const Store& store() const noexcept { return *store_; }
    Repository& repo() noexcept { return repo_; }
    const Repository& repo() const noexcept { return repo_; }

    ProjectLock lock() const;

    // Strictly greater than every tstamp already used by this projid.
    Timestamp next_tstamp() const;

    // Flushes the writer under a fresh tstamp, snapshots the tree and records
    // the interval [start, tstamp] (start defaults to the new tstamp).
    CommitResult commit(const RunWriter& writer, const std::string& root_target,
                        std::optional<Timestamp> interval_start = std::nullopt);

    BuildGraph current_graph() const;
    BuildGraph graph_at(const std::string& vid) const;

    void rebuild_index();

  private:
    Project(std::filesystem::path root, ProjectConfig config);

    std::filesystem::path root_;
    ProjectConfig config_;
    std::string projid_;
    Repository repo_;
    std::unique_ptr<Store> store_;
};

} // namespace flor
