#include "flor/runner.hpp"

#include "flor/error.hpp"

#include <json.hpp>

#include <unistd.h>

#include <chrono>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace flor {

namespace {

std::vector<std::string> shell_words(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    char quote = 0;
    bool have = false;
    for (char c : text) {
        if (quote) {
            if (c == quote) {
                quote = 0;
            } else {
                cur += c;
            }
            continue;
        }
        if (c == '\'' || c == '"') {
            quote = c;
            have = true;
        } else if (c == ' ' || c == '\t' || c == ';' || c == '&' || c == '|' || c == '>' || c == '<') {
            if (have) out.push_back(cur);
            cur.clear();
            have = false;
        } else {
            cur += c;
            have = true;
        }
    }
    if (have) out.push_back(cur);
    return out;
}

std::string unique_dir_name(const std::string& prefix) {
    static int counter = 0;
    auto now = std::chrono::steady_clock::now().time_since_epoch().count();
    return prefix + "-" + std::to_string(::getpid()) + "-" + std::to_string(now) + "-" +
           std::to_string(++counter);
}

} // namespace

std::string step_filename(const BuildGraph& graph, const BuildTarget& target,
                          const std::function<bool(const std::string&)>& file_exists) {
    for (const auto& line : target.cmds) {
        for (const auto& word : shell_words(expand_recipe(graph, target, line.text))) {
            fs::path p(word);
            if (p.has_extension() && p.is_relative() && file_exists(p.lexically_normal().string())) {
                return p.lexically_normal().string();
            }
        }
    }
    return target.name;
}

EnvOverrides step_env(const StepEnvironment& env) {
    json args = json::object();
    for (const auto& [k, v] : env.args) args[k] = v;
    EnvOverrides out = {
        {"FLOR_EVENTS", env.events_file.string()},
        {"FLOR_CKPT_DIR", env.ckpt_dir.string()},
        {"FLOR_ARGS", args.dump()},
        {"PYTHONDONTWRITEBYTECODE", "1"},
    };
    if (env.replay) {
        out.emplace_back("FLOR_REPLAY", "1");
    } else {
        out.emplace_back("FLOR_REPLAY", std::nullopt);
    }
    return out;
}

int run_recipe(const BuildGraph& graph, const BuildTarget& target, const fs::path& cwd,
               const EnvOverrides& env, const std::optional<fs::path>& step_log) {
    ShellOptions opts{cwd, env, step_log};
    for (const auto& line : target.cmds) {
        int rc = run_shell(expand_recipe(graph, target, line.text), opts);
        if (rc != 0) return rc;
    }
    return 0;
}

RunReport run(Project& project, const std::string& goal_in, const RunOptions& options) {
    BuildGraph graph = project.current_graph();
    std::string goal = goal_in;
    if (goal.empty()) {
        if (!graph.default_target) throw UsageError("Makefile has no targets");
        goal = *graph.default_target;
    }
    if (!graph.has_target(goal)) throw NotFound("no rule for target '" + goal + "'");

    std::vector<std::string> stale = stale_targets(graph, filesystem_mtimes(project.root()), goal);

    RunReport report;
    report.projid = project.projid();
    std::optional<Timestamp> start;

    auto status_writer = [&](RunWriter& writer, const std::string& status) {
        writer.log(std::string(project.config().makefile_path), 0, std::string(kRunStatusName),
                   status);
    };
    auto commit = [&](RunWriter& writer) {
        CommitResult c = project.commit(writer, goal, start);
        if (!start) start = c.tstamp;
        report.tstamp = *start;
        report.vid = c.vid;
        return c;
    };

    auto file_exists = [&](const std::string& f) { return fs::is_regular_file(project.root() / f); };

    for (std::size_t i = 0; i < stale.size(); ++i) {
        const BuildTarget& target = graph.at(stale[i]);
        bool last = i + 1 == stale.size();

        fs::path scratch = project.flor_dir() / "tmp" / unique_dir_name("run");
        fs::create_directories(scratch / "ckpt");
        StepEnvironment se{scratch / "events.jsonl", scratch / "ckpt", options.overrides, false};

        ExecutedStep step;
        step.target = target.name;
        step.filename = step_filename(graph, target, file_exists);

        auto t0 = std::chrono::steady_clock::now();
        step.exit_code = run_recipe(graph, target, project.root(), step_env(se), options.step_log);
        step.duration = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        RunWriter writer(project.projid(), project.store().blobs());
        IngestOptions io;
        io.overrides = options.overrides;
        io.policy = options.policy;
        EventIngestor ingestor(writer, step.filename, io);
        std::optional<std::string> protocol_failure;
        try {
            for (const auto& ev : read_event_file(se.events_file)) ingestor.ingest(ev);
            ingestor.finish(step.exit_code == 0);
        } catch (const ProtocolError& e) {
            protocol_failure = e.what();
        }
        step.stats = ingestor.stats();
        bool failed = step.exit_code != 0 || protocol_failure.has_value();
        if (failed) {
            report.failed_target = target.name;
            status_writer(writer, "failed:" + target.name);
        } else if (last) {
            status_writer(writer, "ok");
        }
        CommitResult c = commit(writer);
        step.tstamp = c.tstamp;
        step.vid = c.vid;
        report.records_ingested += writer.records().size();
        report.executed.push_back(std::move(step));
        fs::remove_all(scratch);

        if (protocol_failure) {
            throw ProtocolError(0, "step '" + target.name + "': " + *protocol_failure);
        }
        if (failed) return report;
    }

    if (stale.empty()) {
        RunWriter writer(project.projid(), project.store().blobs());
        status_writer(writer, "ok");
        commit(writer);
        report.records_ingested += writer.records().size();
    }
    return report;
}

CommitResult record_feedback(Project& project, const std::string& name,
                             const std::vector<std::pair<std::string, std::string>>& dims,
                             const std::string& value) {
    if (name.empty()) throw UsageError("feedback name must be non-empty");
    RunWriter writer(project.projid(), project.store().blobs());
    CtxId parent = 0;
    CtxId next = 1;
    for (const auto& [loop, v] : dims) {
        LoopIteration it;
        it.filename = kFeedbackFilename;
        it.ctx_id = next++;
        it.parent_ctx_id = parent;
        it.loop_name = loop;
        it.loop_iteration = 0;
        it.iteration_value = v;
        writer.put_loop(it);
        parent = it.ctx_id;
    }
    writer.log(kFeedbackFilename, parent, name, typed_from_text(name, value, std::nullopt));

    auto intervals = project.store().intervals(project.projid());
    if (intervals.empty()) return project.commit(writer, kFeedbackFilename);
    const VersionInterval& latest = intervals.back();
    return project.commit(writer, latest.root_target, latest.ts_start);
}

} // namespace flor
