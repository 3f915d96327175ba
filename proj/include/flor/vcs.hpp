#pragma once

#include "flor/diff.hpp"
#include "flor/types.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace flor {

class Store;

struct VersionedFile {
    std::string vid;
    std::string filename;
    std::string parent_vid; // empty for the initial version
    std::string contents;
};

// Metadata parsed back out of a `flor commit` message.
struct CommitStamp {
    std::string vid;
    std::string projid;
    Timestamp tstamp = 0;
    Timestamp start = 0; // first tstamp of the invocation this commit belongs to
    std::string target;
};

std::string commit_message(const CommitStamp& stamp);
std::optional<CommitStamp> parse_commit_message(const std::string& message);

// Git working tree driven through the git executable.
class Repository {
  public:
    explicit Repository(std::filesystem::path root);

    // Creates the repository if root is not already a work tree.
    static Repository init(const std::filesystem::path& root);
    static bool is_repository(const std::filesystem::path& root);

    const std::filesystem::path& root() const noexcept { return root_; }

    std::optional<std::string> head() const;
    bool is_clean() const;

    // Stages everything (respecting .gitignore) and commits. Returns the current
    // head without committing when nothing is staged.
    std::string snapshot(const std::string& message);
    // Commits only the given paths.
    std::string commit_paths(const std::vector<std::filesystem::path>& paths,
                             const std::string& message);

    bool exists_at(const std::string& vid, const std::string& filename) const;
    // Throws NotFound when the file is absent at vid.
    std::string file_at(const std::string& vid, const std::string& filename) const;
    VersionedFile versioned_file(const std::string& vid, const std::string& filename) const;
    std::optional<std::string> parent_of(const std::string& vid) const;
    std::vector<std::string> files_at(const std::string& vid) const;
    bool is_tracked(const std::string& filename) const;
    bool has_commit(const std::string& vid) const;

    // Writes the tree of vid into dest (created if needed).
    void export_tree(const std::string& vid, const std::filesystem::path& dest) const;

    // Every `flor commit` reachable from head, oldest first.
    std::vector<CommitStamp> flor_commits() const;

  private:
    std::string git(const std::vector<std::string>& args, const std::string& input = {}) const;
    std::vector<std::string> commit_prefix() const;

    std::filesystem::path root_;
};

// Groups flor commits by invocation into ts2vid intervals.
std::vector<VersionInterval> intervals_from_commits(const std::vector<CommitStamp>& commits);

// Throws NotFound when no interval contains t.
VersionInterval resolve(const Store& store, const std::string& projid, Timestamp t);

} // namespace flor
