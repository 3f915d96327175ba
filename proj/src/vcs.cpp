#include "flor/vcs.hpp"

#include "flor/error.hpp"
#include "flor/process.hpp"
#include "flor/store.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;

namespace flor {

namespace {

constexpr const char* kSubject = "flor commit";

std::optional<Timestamp> parse_ts(std::string_view s) {
    Timestamp v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
}

std::string trim_newline(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

// Hermetic process environment for git: no pager, no prompts, no user hooks path changes.
const EnvOverrides& git_env() {
    static const EnvOverrides env = {
        {"GIT_TERMINAL_PROMPT", "0"},
        {"GIT_PAGER", "cat"},
        {"LC_ALL", "C"},
    };
    return env;
}

} // namespace

std::string commit_message(const CommitStamp& stamp) {
    std::ostringstream out;
    out << kSubject << " " << stamp.projid << " @" << stamp.tstamp << "\n\n"
        << "projid: " << stamp.projid << "\n"
        << "tstamp: " << stamp.tstamp << "\n"
        << "start: " << stamp.start << "\n"
        << "target: " << stamp.target << "\n";
    return out.str();
}

std::optional<CommitStamp> parse_commit_message(const std::string& message) {
    if (message.rfind(kSubject, 0) != 0) return std::nullopt;
    CommitStamp stamp;
    bool have_projid = false, have_ts = false, have_start = false;
    std::istringstream in(message);
    std::string line;
    while (std::getline(in, line)) {
        auto colon = line.find(": ");
        if (colon == std::string::npos) continue;
        std::string key = line.substr(0, colon);
        std::string value = line.substr(colon + 2);
        if (key == "projid") {
            stamp.projid = value;
            have_projid = true;
        } else if (key == "tstamp") {
            auto v = parse_ts(value);
            if (!v) return std::nullopt;
            stamp.tstamp = *v;
            have_ts = true;
        } else if (key == "start") {
            auto v = parse_ts(value);
            if (!v) return std::nullopt;
            stamp.start = *v;
            have_start = true;
        } else if (key == "target") {
            stamp.target = value;
        }
    }
    if (!have_projid || !have_ts) return std::nullopt;
    if (!have_start) stamp.start = stamp.tstamp;
    return stamp;
}

Repository::Repository(fs::path root) : root_(std::move(root)) {
    if (!is_repository(root_)) {
        throw RepositoryError("not a git work tree: " + root_.string());
    }
}

bool Repository::is_repository(const fs::path& root) {
    if (!fs::is_directory(root)) return false;
    auto r = run_capture({"git", "rev-parse", "--show-toplevel"}, root, git_env());
    if (r.exit_code != 0) return false;
    std::error_code ec;
    return fs::equivalent(fs::path(trim_newline(r.out)), root, ec);
}

Repository Repository::init(const fs::path& root) {
    fs::create_directories(root);
    if (!is_repository(root)) {
        auto r = run_capture({"git", "init", "-q"}, root, git_env());
        if (r.exit_code != 0) throw RepositoryError("git init failed: " + r.err);
    }
    return Repository(root);
}

std::string Repository::git(const std::vector<std::string>& args, const std::string& input) const {
    std::vector<std::string> argv = {"git"};
    argv.insert(argv.end(), args.begin(), args.end());
    auto r = run_capture(argv, root_, git_env(), input);
    if (r.exit_code != 0) {
        std::string cmd;
        for (const auto& a : args) cmd += " " + a;
        throw RepositoryError("git" + cmd + " failed: " + trim_newline(r.err));
    }
    return r.out;
}

std::vector<std::string> Repository::commit_prefix() const {
    std::vector<std::string> prefix = {"-c", "commit.gpgsign=false"};
    auto has = [&](const char* key) {
        return run_capture({"git", "config", "--get", key}, root_, git_env()).exit_code == 0;
    };
    if (!has("user.name")) {
        prefix.insert(prefix.end(), {"-c", "user.name=flor"});
    }
    if (!has("user.email")) {
        prefix.insert(prefix.end(), {"-c", "user.email=flor@localhost"});
    }
    return prefix;
}

std::optional<std::string> Repository::head() const {
    auto r = run_capture({"git", "rev-parse", "--verify", "-q", "HEAD"}, root_, git_env());
    if (r.exit_code != 0) return std::nullopt;
    return trim_newline(r.out);
}

bool Repository::is_clean() const {
    return git({"status", "--porcelain", "--untracked-files=all"}).empty();
}

std::string Repository::snapshot(const std::string& message) {
    git({"add", "-A"});
    bool has_head = head().has_value();
    if (has_head) {
        auto r = run_capture({"git", "diff", "--cached", "--quiet"}, root_, git_env());
        if (r.exit_code == 0) return *head();
        if (r.exit_code != 1) throw RepositoryError("git diff --cached failed: " + r.err);
    }
    std::vector<std::string> args = commit_prefix();
    args.insert(args.end(), {"commit", "-q", "--no-verify", "--allow-empty", "-F", "-"});
    git(args, message);
    return *head();
}

std::string Repository::commit_paths(const std::vector<fs::path>& paths, const std::string& message) {
    if (paths.empty()) throw UsageError("commit_paths: no paths");
    std::vector<std::string> add = {"add", "--"};
    for (const auto& p : paths) add.push_back(p.string());
    git(add);
    std::vector<std::string> args = commit_prefix();
    args.insert(args.end(), {"commit", "-q", "--no-verify", "-F", "-", "--"});
    for (const auto& p : paths) args.push_back(p.string());
    git(args, message);
    return *head();
}

bool Repository::has_commit(const std::string& vid) const {
    return run_capture({"git", "cat-file", "-e", vid + "^{commit}"}, root_, git_env()).exit_code == 0;
}

bool Repository::exists_at(const std::string& vid, const std::string& filename) const {
    return run_capture({"git", "cat-file", "-e", vid + ":" + filename}, root_, git_env()).exit_code ==
           0;
}

std::string Repository::file_at(const std::string& vid, const std::string& filename) const {
    if (!has_commit(vid)) throw NotFound("unknown version " + vid);
    if (!exists_at(vid, filename)) throw NotFound(filename + " does not exist at " + vid);
    return git({"cat-file", "blob", vid + ":" + filename});
}

VersionedFile Repository::versioned_file(const std::string& vid, const std::string& filename) const {
    VersionedFile f;
    f.vid = vid;
    f.filename = filename;
    f.contents = file_at(vid, filename);
    f.parent_vid = parent_of(vid).value_or("");
    return f;
}

std::optional<std::string> Repository::parent_of(const std::string& vid) const {
    auto r = run_capture({"git", "rev-parse", "--verify", "-q", vid + "^"}, root_, git_env());
    if (r.exit_code != 0) return std::nullopt;
    return trim_newline(r.out);
}

std::vector<std::string> Repository::files_at(const std::string& vid) const {
    std::string out = git({"ls-tree", "-r", "-z", "--name-only", vid});
    std::vector<std::string> files;
    std::size_t start = 0;
    while (start < out.size()) {
        auto end = out.find('\0', start);
        if (end == std::string::npos) end = out.size();
        files.push_back(out.substr(start, end - start));
        start = end + 1;
    }
    return files;
}

bool Repository::is_tracked(const std::string& filename) const {
    return run_capture({"git", "ls-files", "--error-unmatch", "--", filename}, root_, git_env())
               .exit_code == 0;
}

void Repository::export_tree(const std::string& vid, const fs::path& dest) const {
    fs::create_directories(dest);
    for (const auto& f : files_at(vid)) {
        fs::path target = dest / f;
        fs::create_directories(target.parent_path());
        std::string contents = git({"cat-file", "blob", vid + ":" + f});
        std::ofstream out(target, std::ios::binary | std::ios::trunc);
        out << contents;
        if (!out) throw IoError("cannot write " + target.string());
    }
}

std::vector<CommitStamp> Repository::flor_commits() const {
    if (!head()) return {};
    // Records are separated by NUL; the hash precedes the raw message.
    std::string out = git({"log", "--reverse", "-z", "--format=%H%n%B"});
    std::vector<CommitStamp> commits;
    std::size_t start = 0;
    while (start < out.size()) {
        auto end = out.find('\0', start);
        if (end == std::string::npos) end = out.size();
        std::string entry = out.substr(start, end - start);
        start = end + 1;
        auto nl = entry.find('\n');
        if (nl == std::string::npos) continue;
        auto stamp = parse_commit_message(entry.substr(nl + 1));
        if (!stamp) continue;
        stamp->vid = entry.substr(0, nl);
        commits.push_back(std::move(*stamp));
    }
    return commits;
}

std::vector<VersionInterval> intervals_from_commits(const std::vector<CommitStamp>& commits) {
    std::map<std::pair<std::string, Timestamp>, VersionInterval> by_start;
    for (const auto& c : commits) {
        auto key = std::make_pair(c.projid, c.start);
        auto it = by_start.find(key);
        if (it == by_start.end()) {
            by_start.emplace(key, VersionInterval{c.projid, c.start, c.tstamp, c.vid, c.target});
            continue;
        }
        // The latest commit of an invocation defines its end and vid.
        if (c.tstamp >= it->second.ts_end) {
            it->second.ts_end = c.tstamp;
            it->second.vid = c.vid;
        }
    }
    std::vector<VersionInterval> out;
    for (auto& [_, v] : by_start) out.push_back(std::move(v));
    return out;
}

VersionInterval resolve(const Store& store, const std::string& projid, Timestamp t) {
    auto hit = store.resolve(projid, t);
    if (!hit) throw NotFound("no version interval of " + projid + " contains tstamp " + std::to_string(t));
    return *hit;
}

} // namespace flor
