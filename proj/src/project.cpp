#include "flor/project.hpp"

#include "flor/error.hpp"
#include "fsutil.hpp"

#include <json.hpp>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <set>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace flor {

namespace {

const char* const kIgnored[] = {".flor/index.db", ".flor/index.db-*", ".flor/objects/", ".flor/lock",
                                ".flor/tmp/", "__pycache__/"};

void ensure_gitignore(const fs::path& root) {
    fs::path path = root / ".gitignore";
    std::string text = fs::exists(path) ? detail::read_file(path) : std::string();
    std::set<std::string> present;
    std::size_t start = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string::npos) nl = text.size();
        present.insert(text.substr(start, nl - start));
        start = nl + 1;
    }
    std::string add;
    for (const char* entry : kIgnored) {
        if (!present.count(entry)) add += std::string(entry) + "\n";
    }
    if (add.empty()) return;
    if (!text.empty() && text.back() != '\n') text += "\n";
    detail::write_file_atomic(path, text + add);
}

ProjectConfig read_config(const fs::path& flor_dir) {
    fs::path path = flor_dir / "config.json";
    json j;
    try {
        j = json::parse(detail::read_file(path));
    } catch (const json::exception& e) {
        throw IntegrityError("corrupt " + path.string() + ": " + e.what());
    }
    ProjectConfig c;
    c.projid = j.value("projid", "");
    c.makefile_path = j.value("makefile", "Makefile");
    c.clock = parse_clock_mode(j.value("clock", "wall"));
    if (c.projid.empty()) throw IntegrityError("config.json has an empty projid");
    return c;
}

void write_config(const fs::path& flor_dir, const ProjectConfig& c) {
    json j;
    j["projid"] = c.projid;
    j["makefile"] = c.makefile_path;
    j["clock"] = std::string(clock_mode_name(c.clock));
    detail::write_file_atomic(flor_dir / "config.json", j.dump(2) + "\n");
}

} // namespace

std::string_view clock_mode_name(ClockMode mode) {
    return mode == ClockMode::Logical ? "logical" : "wall";
}

ClockMode parse_clock_mode(std::string_view text) {
    if (text == "wall") return ClockMode::Wall;
    if (text == "logical") return ClockMode::Logical;
    throw UsageError("unknown clock mode '" + std::string(text) + "' (expected wall or logical)");
}

ProjectLock::ProjectLock(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw IoError("cannot open lock " + path.string() + ": " + std::strerror(errno));
    if (::flock(fd_, LOCK_EX) != 0) {
        ::close(fd_);
        throw IoError("cannot lock " + path.string() + ": " + std::strerror(errno));
    }
}

ProjectLock::~ProjectLock() {
    if (fd_ >= 0) {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
}

Project::Project(fs::path root, ProjectConfig config)
    : root_(std::move(root)), config_(std::move(config)), repo_(root_) {
    const char* env = std::getenv("FLOR_PROJID");
    projid_ = (env && *env) ? std::string(env) : config_.projid;
    store_ = std::make_unique<Store>(root_ / kDirName);
}

Project Project::init(const fs::path& root_in, const InitOptions& options) {
    fs::path root = fs::absolute(root_in).lexically_normal();
    if (root.has_filename() == false) root = root.parent_path();
    if (fs::exists(root / kDirName / "config.json")) {
        throw Error("project already initialized at " + root.string());
    }
    ProjectConfig config;
    config.projid = options.projid.value_or(root.filename().string());
    if (config.projid.empty()) throw UsageError("projid must be non-empty");
    config.clock = options.clock;
    fs::path makefile = root / config.makefile_path;
    if (!fs::exists(makefile)) throw NotFound("no Makefile at " + makefile.string());
    parse_makefile(detail::read_file(makefile));

    Repository::init(root);
    fs::create_directories(root / kDirName / "records");
    fs::create_directories(root / kDirName / "objects");
    fs::create_directories(root / kDirName / "tmp");
    write_config(root / kDirName, config);
    ensure_gitignore(root);
    return Project(root, config);
}

Project Project::open(const fs::path& start) {
    fs::path dir = fs::absolute(start).lexically_normal();
    while (true) {
        if (fs::exists(dir / kDirName / "config.json")) break;
        if (!dir.has_parent_path() || dir.parent_path() == dir) {
            throw NotFound("not a flor project (no .flor directory above " + start.string() + ")");
        }
        dir = dir.parent_path();
    }
    if (!dir.has_filename()) dir = dir.parent_path();
    Project p(dir, read_config(dir / kDirName));
    fs::create_directories(p.flor_dir() / "tmp");
    if (p.store().index_stale()) p.rebuild_index();
    return p;
}

ProjectLock Project::lock() const { return ProjectLock(flor_dir() / "lock"); }

Timestamp Project::next_tstamp() const {
    Timestamp last = store_->last_tstamp(projid_).value_or(0);
    Timestamp t = last + 1;
    if (config_.clock == ClockMode::Wall) {
        auto now = std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
        t = std::max<Timestamp>(t, now);
    }
    // Run files written without a completed commit still own their tstamp.
    char name[32];
    while (true) {
        std::snprintf(name, sizeof(name), "%012lld.json", static_cast<long long>(t));
        if (!fs::exists(store_->records_dir() / name)) break;
        ++t;
    }
    return t;
}

CommitResult Project::commit(const RunWriter& writer, const std::string& root_target,
                             std::optional<Timestamp> interval_start) {
    if (writer.empty() && repo_.is_clean()) {
        return {store_->last_tstamp(projid_).value_or(0), repo_.head().value_or(""), false};
    }
    Timestamp t = next_tstamp();
    Timestamp start = interval_start.value_or(t);
    if (start > t) throw IntegrityError("interval start after commit tstamp");

    RunFile file = RunFile::from_writer(writer, RunFile::Kind::Commit, t);
    file.projid = projid_;
    fs::path path = store_->write_run_file(file);

    CommitStamp stamp{"", projid_, t, start, root_target};
    std::string vid = repo_.snapshot(commit_message(stamp));

    store_->index_run_file(path);
    store_->upsert_interval({projid_, start, t, vid, root_target});
    try {
        store_->put_build_deps(to_build_deps(graph_at(vid)));
    } catch (const ParseError&) {
        // Makefile at vid is outside the supported dialect; no build_deps rows.
    } catch (const NotFound&) {
    }
    return {t, vid, true};
}

BuildGraph Project::current_graph() const {
    fs::path makefile = root_ / config_.makefile_path;
    if (!fs::exists(makefile)) throw NotFound("no Makefile at " + makefile.string());
    return parse_makefile(detail::read_file(makefile), repo_.head().value_or(""));
}

BuildGraph Project::graph_at(const std::string& vid) const {
    return parse_makefile(repo_.file_at(vid, config_.makefile_path), vid);
}

void Project::rebuild_index() {
    auto intervals = intervals_from_commits(repo_.flor_commits());
    std::vector<BuildDepRow> deps;
    std::set<std::string> seen;
    for (const auto& iv : intervals) {
        if (!seen.insert(iv.vid).second) continue;
        try {
            auto rows = to_build_deps(graph_at(iv.vid));
            deps.insert(deps.end(), rows.begin(), rows.end());
        } catch (const ParseError&) {
        } catch (const NotFound&) {
        }
    }
    store_->rebuild(intervals, deps);
}

} // namespace flor
