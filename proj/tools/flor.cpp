#include "flor/error.hpp"
#include "flor/project.hpp"
#include "flor/query.hpp"
#include "flor/replay.hpp"
#include "flor/runner.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

std::map<std::string, std::string> parse_kwargs(const std::vector<std::string>& items) {
    std::map<std::string, std::string> out;
    for (const auto& kv : items) {
        auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw flor::UsageError("--kwargs expects name=value, got '" + kv + "'");
        }
        out[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    return out;
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// feedback NAME [--DIM VALUE]... VALUE
struct FeedbackArgs {
    std::string name;
    std::vector<std::pair<std::string, std::string>> dims;
    std::string value;
};

FeedbackArgs parse_feedback(const std::vector<std::string>& args) {
    FeedbackArgs f;
    std::vector<std::string> positional;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a.rfind("--", 0) == 0 && a.size() > 2) {
            std::string dim = a.substr(2);
            std::string value;
            if (auto eq = dim.find('='); eq != std::string::npos) {
                value = dim.substr(eq + 1);
                dim = dim.substr(0, eq);
            } else {
                if (i + 1 >= args.size()) throw flor::UsageError("--" + dim + " needs a value");
                value = args[++i];
            }
            f.dims.emplace_back(dim, value);
        } else {
            positional.push_back(a);
        }
    }
    if (positional.size() != 2) throw flor::UsageError("usage: flor feedback NAME [--DIM VALUE]... VALUE");
    f.name = positional[0];
    f.value = positional[1];
    return f;
}

void print_run(const flor::RunReport& r) {
    for (const auto& s : r.executed) {
        std::printf("%s\t%s\texit=%d\t%.3fs\ttstamp=%lld\n", s.target.c_str(), s.filename.c_str(), s.exit_code,
                    s.duration, static_cast<long long>(s.tstamp));
    }
    std::printf("projid=%s tstamp=%lld vid=%s records=%zu status=%s\n", r.projid.c_str(),
                static_cast<long long>(r.tstamp), r.vid.c_str(), r.records_ingested,
                r.ok() ? "ok" : ("failed:" + *r.failed_target).c_str());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"flor: versioned metadata for Makefile pipelines"};
    app.require_subcommand(1);
    std::string dir = ".";
    app.add_option("-C,--directory", dir, "Project directory");

    auto* init = app.add_subcommand("init", "Initialize a project in the current directory");
    std::string projid, clock = "wall";
    init->add_option("--projid", projid, "Project id (defaults to the directory name)");
    init->add_option("--clock", clock, "Timestamp clock: wall or logical")->check(CLI::IsMember({"wall", "logical"}));

    auto* run = app.add_subcommand("run", "Build a target and record its runs");
    std::string goal;
    std::vector<std::string> kwargs;
    run->add_option("goal", goal, "Target (default: first rule)");
    run->add_option("--kwargs", kwargs, "Argument overrides name=value")->expected(1, -1);

    auto* query = app.add_subcommand("query", "Pivot logged values into a table");
    std::vector<std::string> names;
    bool csv = false;
    query->add_option("names", names, "Value names")->required();
    query->add_flag("--csv", csv, "RFC-4180 CSV output");

    auto* replay = app.add_subcommand("replay", "Backfill values by replaying past versions");
    std::string replay_names;
    std::optional<long long> since, until;
    bool dry_run = false;
    replay->add_option("--names", replay_names, "Comma-separated value names")->required();
    replay->add_option("--since", since, "First tstamp in scope");
    replay->add_option("--until", until, "Last tstamp in scope");
    replay->add_flag("--dry-run", dry_run, "Print the plan only");

    auto* versions = app.add_subcommand("versions", "List version intervals");

    auto* feedback = app.add_subcommand("feedback", "Record a reviewed value at loop coordinates");
    feedback->allow_extras();
    feedback->prefix_command();

    auto* best = app.add_subcommand("best-checkpoint", "Hash of the best model checkpoint");
    std::string metric, fallback;
    bool minimize = false;
    best->add_option("metric", metric, "Metric name")->required();
    best->add_flag("--min", minimize, "Minimize instead of maximize");
    best->add_option("--fallback", fallback, "Printed when no checkpoint exists");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*init) {
            flor::InitOptions opts;
            if (!projid.empty()) opts.projid = projid;
            opts.clock = flor::parse_clock_mode(clock);
            auto p = flor::Project::init(dir, opts);
            std::printf("initialized %s (projid=%s, clock=%s)\n", p.root().c_str(), p.config().projid.c_str(),
                        std::string(flor::clock_mode_name(p.config().clock)).c_str());
            return 0;
        }
        auto project = flor::Project::open(dir);
        if (*run) {
            auto lock = project.lock();
            flor::RunOptions opts;
            opts.overrides = parse_kwargs(kwargs);
            auto report = flor::run(project, goal, opts);
            print_run(report);
            return report.ok() ? 0 : 1;
        }
        if (*query) {
            auto table = flor::dataframe(project.store().snapshot(project.projid()), names);
            std::cout << (csv ? flor::to_csv(table) : flor::to_aligned(table));
            return 0;
        }
        if (*replay) {
            auto lock = project.lock();
            flor::ReplayScope scope;
            if (since) scope.since = *since;
            if (until) scope.until = *until;
            auto p = flor::plan(project, split_commas(replay_names), scope);
            std::cout << flor::format_plan(p);
            if (dry_run) return 0;
            auto report = flor::execute(project, p);
            std::cout << flor::format_report(report);
            if (!p.conflicts.empty()) {
                std::cerr << "error: " << p.conflicts.size() << " version(s) not replayed due to merge conflicts\n";
            }
            std::size_t failed = 0;
            for (const auto& item : report.items) failed += !item.ok;
            if (failed > 0) std::cerr << "error: " << failed << " replay item(s) failed\n";
            return report.ok() && p.conflicts.empty() ? 0 : 1;
        }
        if (*versions) {
            for (const auto& iv : project.store().intervals(project.projid())) {
                std::printf("%lld\t%lld\t%s\t%s\n", static_cast<long long>(iv.ts_start),
                            static_cast<long long>(iv.ts_end), iv.vid.c_str(), iv.root_target.c_str());
            }
            return 0;
        }
        if (*feedback) {
            auto lock = project.lock();
            auto f = parse_feedback(feedback->remaining());
            auto c = flor::record_feedback(project, f.name, f.dims, f.value);
            std::printf("tstamp=%lld vid=%s\n", static_cast<long long>(c.tstamp), c.vid.c_str());
            return 0;
        }
        if (*best) {
            auto hash = flor::best_checkpoint(project.store().snapshot(project.projid()), metric, !minimize);
            if (hash) {
                std::printf("%s\n", project.store().blobs().path_of(*hash).c_str());
            } else if (!fallback.empty()) {
                std::printf("%s\n", fallback.c_str());
            } else {
                throw flor::NotFound("no checkpoint with metric '" + metric + "'");
            }
            return 0;
        }
    } catch (const flor::UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const flor::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
