#include "flor/replay.hpp"

#include "flor/error.hpp"
#include "fsutil.hpp"

#include <json.hpp>

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <map>
#include <regex>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace flor {

namespace {

std::string regex_escape(const std::string& s) {
    static const std::string special = R"(\^$.|?*+()[]{})";
    std::string out;
    for (char c : s) {
        if (special.find(c) != std::string::npos) out += '\\';
        out += c;
    }
    return out;
}

std::string unique_name(const std::string& prefix) {
    static int counter = 0;
    auto now = std::chrono::steady_clock::now().time_since_epoch().count();
    return prefix + "-" + std::to_string(::getpid()) + "-" + std::to_string(now) + "-" +
           std::to_string(++counter);
}

// Files launched by the current Makefile's recipes that log name.
std::set<std::string> producing_files(const Project& project, const BuildGraph& graph,
                                      const std::string& name) {
    std::set<std::string> out;
    auto exists = [&](const std::string& f) { return fs::is_regular_file(project.root() / f); };
    for (const auto& t : graph.targets) {
        std::string f = step_filename(graph, t, exists);
        if (!exists(f)) continue;
        for (const auto& line : split_lines(detail::read_file(project.root() / f))) {
            if (logs_name(line, name)) {
                out.insert(f);
                break;
            }
        }
    }
    return out;
}

struct Key {
    Timestamp t;
    std::string filename;
    bool operator<(const Key& o) const { return std::tie(t, filename) < std::tie(o.t, o.filename); }
};

} // namespace

namespace {

// The line up to its Python comment, if any.
std::string_view code_part(std::string_view line) {
    char quote = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quote) {
            if (c == '\\') {
                ++i;
            } else if (c == quote) {
                quote = 0;
            }
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '#') {
            return line.substr(0, i);
        }
    }
    return line;
}

} // namespace

bool logs_name(std::string_view line, const std::string& name) {
    std::regex re(R"((^|[^A-Za-z0-9_.])(flor\.)?(log|arg)\(\s*["'])" + regex_escape(name) + R"(["'])");
    std::string_view code = code_part(line);
    return std::regex_search(code.begin(), code.end(), re);
}

bool is_logging_statement(std::string_view line) {
    static const std::regex re(R"((^|[^A-Za-z0-9_.])(flor\.)?(log|arg)\(\s*["'])");
    std::string_view code = code_part(line);
    return std::regex_search(code.begin(), code.end(), re);
}

std::string strip_logging(std::string_view source, const std::vector<std::string>& names) {
    std::string out;
    for (const auto& line : split_lines(source)) {
        bool drop = false;
        for (const auto& n : names) drop = drop || logs_name(line, n);
        if (!drop) out += line;
    }
    return out;
}

LoggingDiff logging_diff(const Project& project, const std::string& filename) {
    if (!project.repo().is_tracked(filename)) throw NotFound(filename + " is not tracked");
    auto head = project.repo().head();
    if (!head) throw NotFound("repository has no commits");
    LoggingDiff d;
    d.filename = filename;
    std::string old_text = project.repo().exists_at(*head, filename)
                               ? project.repo().file_at(*head, filename)
                               : std::string();
    fs::path path = project.root() / filename;
    std::string new_text = fs::exists(path) ? detail::read_file(path) : std::string();
    d.hunks = diff_lines(old_text, new_text, true);
    for (const auto& h : d.hunks) {
        for (const auto& l : h.lines) {
            if (l.empty() || l[0] != '+') continue;
            std::string body = normalize_whitespace(l.substr(1));
            if (body.empty() || body[0] == '#' || is_logging_statement(body)) continue;
            d.warnings.push_back(filename + ": non-logging addition: " + body);
        }
    }
    d.text = format_unified(d.hunks, "a/" + filename, "b/" + filename);
    return d;
}

std::string_view replay_mode_name(ReplayMode mode) {
    return mode == ReplayMode::Resume ? "resume" : "full";
}

std::string_view skip_reason_name(SkipReason reason) {
    switch (reason) {
    case SkipReason::Cached:
        return "cached";
    case SkipReason::NotApplicable:
        return "not-applicable";
    case SkipReason::AlreadyPresent:
        break;
    }
    return "already-present";
}

ReplayPlan plan(Project& project, const std::vector<std::string>& names, const ReplayScope& scope) {
    if (names.empty()) throw UsageError("replay needs at least one name");
    ReplayPlan out;
    out.requested = names;

    BuildGraph current = project.current_graph();
    std::map<std::string, std::vector<std::string>> names_by_file;
    for (const auto& n : names) {
        auto files = producing_files(project, current, n);
        if (files.empty()) throw NotFound("'" + n + "' is not logged by any step file of the Makefile");
        for (const auto& f : files) names_by_file[f].push_back(n);
    }

    Timestamp since = scope.since.value_or(std::numeric_limits<Timestamp>::min());
    Timestamp until = scope.until.value_or(std::numeric_limits<Timestamp>::max());
    if (since > until) return out;

    std::map<Timestamp, std::string> vid_of;
    for (const auto& c : project.repo().flor_commits()) {
        if (c.projid == project.projid()) vid_of[c.tstamp] = c.vid;
    }
    std::map<std::string, BuildGraph> graphs;
    auto graph_at = [&](const std::string& vid) -> const BuildGraph& {
        auto it = graphs.find(vid);
        if (it == graphs.end()) it = graphs.emplace(vid, project.graph_at(vid)).first;
        return it->second;
    };
    auto intervals = project.store().intervals(project.projid());

    for (const auto& [file, file_names] : names_by_file) {
        for (const auto& w : logging_diff(project, file).warnings) out.warnings.push_back(w);
        std::string ours = detail::read_file(project.root() / file);
        std::string base = strip_logging(ours, file_names);

        ScanFilter f;
        f.projid = project.projid();
        f.filename = file;
        auto records = project.store().scan(f);
        auto loops = project.store().loops(f);
        std::set<Timestamp> ran;
        for (const auto& r : records) ran.insert(r.tstamp);
        for (const auto& l : loops) ran.insert(l.tstamp);

        for (const auto& iv : intervals) {
            if (iv.ts_end < since || iv.ts_start > until) continue;
            std::vector<Timestamp> runs;
            for (auto t : ran) {
                if (iv.contains(t) && t >= since && t <= until) runs.push_back(t);
            }
            if (runs.empty()) {
                out.skipped.push_back({iv.vid, iv.root_target, SkipReason::NotApplicable, iv.ts_start, file});
                continue;
            }
            for (Timestamp t : runs) {
                std::string vid = vid_of.count(t) ? vid_of[t] : iv.vid;
                const BuildGraph& graph = graph_at(vid);
                auto exists = [&](const std::string& p) { return project.repo().exists_at(vid, p); };
                const BuildTarget* target = nullptr;
                for (const auto& bt : graph.targets) {
                    if (step_filename(graph, bt, exists) == file) {
                        target = &bt;
                        break;
                    }
                }
                if (!target || !exists(file)) {
                    out.skipped.push_back({vid, target ? target->name : file, SkipReason::NotApplicable, t, file});
                    continue;
                }
                bool present = true;
                for (const auto& n : file_names) {
                    bool any = std::any_of(records.begin(), records.end(), [&](const LogRecord& r) {
                        return r.tstamp == t && r.value_name == n;
                    });
                    present = present && any;
                }
                if (present) {
                    out.skipped.push_back({vid, target->name, SkipReason::AlreadyPresent, t, file});
                    continue;
                }

                MergeResult merged = merge3(base, ours, project.repo().file_at(vid, file));
                if (!merged.clean()) {
                    out.conflicts.push_back({vid, file, t, merged.conflicts});
                    continue;
                }

                WorkItem item;
                item.vid = vid;
                item.tstamp = t;
                item.target = target->name;
                item.filename = file;
                item.merged_source = *merged.merged;

                // Outermost-loop checkpoints of this run.
                std::map<CtxId, const LoopIteration*> outer;
                for (const auto& l : loops) {
                    if (l.tstamp == t && l.parent_ctx_id == 0) outer[l.ctx_id] = &l;
                }
                for (const auto& r : records) {
                    if (r.tstamp != t || r.value_type != ValueType::BlobRef) continue;
                    auto it = outer.find(r.ctx_id);
                    if (it == outer.end()) continue;
                    item.checkpoints.push_back(
                        {it->second->loop_name, it->second->loop_iteration, r.value_name, r.value});
                    if (item.resume_ctx == 0 || it->second->loop_iteration > item.resume_iteration) {
                        item.resume_ctx = r.ctx_id;
                        item.resume_loop = it->second->loop_name;
                        item.resume_iteration = it->second->loop_iteration;
                    }
                }
                item.mode = (target->cached && item.resume_ctx != 0) ? ReplayMode::Resume : ReplayMode::Full;
                if (item.mode == ReplayMode::Full) {
                    item.checkpoints.clear();
                    item.resume_ctx = 0;
                    item.resume_loop.clear();
                    item.resume_iteration = 0;
                }

                for (const auto& up : topo_order(graph, target->name)) {
                    if (up == target->name) continue;
                    if (graph.at(up).cached) {
                        out.skipped.push_back({vid, up, SkipReason::Cached, t, file});
                    } else {
                        item.prerequisites.push_back(up);
                    }
                }
                out.work.push_back(std::move(item));
            }
        }
    }
    std::sort(out.work.begin(), out.work.end(), [](const WorkItem& a, const WorkItem& b) {
        return std::tie(a.tstamp, a.filename) < std::tie(b.tstamp, b.filename);
    });
    return out;
}

std::string format_plan(const ReplayPlan& p) {
    std::ostringstream out;
    out << "requested:";
    for (const auto& n : p.requested) out << " " << n;
    out << "\n";
    for (const auto& w : p.work) {
        out << "work " << w.vid.substr(0, 12) << " tstamp=" << w.tstamp << " target=" << w.target
            << " file=" << w.filename << " mode=" << replay_mode_name(w.mode);
        if (w.mode == ReplayMode::Resume) {
            out << " resume=" << w.resume_loop << ":" << w.resume_iteration << " ctx=" << w.resume_ctx;
        }
        out << "\n";
    }
    for (const auto& s : p.skipped) {
        out << "skip " << s.vid.substr(0, 12) << " tstamp=" << s.tstamp << " target=" << s.target
            << " file=" << s.filename << " reason=" << skip_reason_name(s.reason) << "\n";
    }
    for (const auto& c : p.conflicts) {
        out << "conflict " << c.vid.substr(0, 12) << " tstamp=" << c.tstamp << " file=" << c.filename;
        for (const auto& h : c.hunks) {
            out << " [base " << h.base.begin + 1 << "-" << h.base.end << ", ours " << h.ours.begin + 1
                << "-" << h.ours.end << ", theirs " << h.theirs.begin + 1 << "-" << h.theirs.end << "]";
        }
        out << "\n";
    }
    for (const auto& w : p.warnings) out << "warning " << w << "\n";
    return out.str();
}

bool ReplayReport::ok() const {
    return std::all_of(items.begin(), items.end(), [](const ItemReport& i) { return i.ok; });
}

namespace {

// Adds the requested rows of a replayed step to the store under its historical key.
std::size_t backfill(Project& project, const WorkItem& item, const std::vector<std::string>& requested,
                     const RunWriter& scratch, const std::string& head_vid,
                     std::vector<fs::path>& written) {
    Store& store = project.store();
    ScanFilter f;
    f.projid = project.projid();
    f.tstamp = item.tstamp;
    f.filename = item.filename;
    auto existing_loops = store.loops(f);
    auto existing_records = store.scan(f);

    std::map<std::tuple<CtxId, std::string, std::int64_t>, CtxId> known;
    CtxId max_ctx = 0;
    for (const auto& l : existing_loops) {
        known[{l.parent_ctx_id, l.loop_name, l.loop_iteration}] = l.ctx_id;
        max_ctx = std::max(max_ctx, l.ctx_id);
    }
    std::set<std::pair<CtxId, std::string>> present;
    std::int64_t max_seq = 0;
    for (const auto& r : existing_records) {
        present.insert({r.ctx_id, r.value_name});
        max_seq = std::max(max_seq, r.seq);
    }

    // Map scratch contexts onto historical ones; unseen ones get fresh ids.
    std::map<CtxId, CtxId> ctx_map{{0, 0}};
    std::map<CtxId, LoopIteration> fresh;
    for (const auto& l : scratch.loops()) {
        CtxId parent = ctx_map.at(l.parent_ctx_id);
        auto key = std::make_tuple(parent, l.loop_name, l.loop_iteration);
        auto it = known.find(key);
        if (it != known.end()) {
            ctx_map[l.ctx_id] = it->second;
            continue;
        }
        CtxId id = ++max_ctx;
        known[key] = id;
        ctx_map[l.ctx_id] = id;
        LoopIteration n = l;
        n.ctx_id = id;
        n.parent_ctx_id = parent;
        fresh[id] = n;
    }

    std::set<std::string> wanted(requested.begin(), requested.end());
    std::map<std::pair<CtxId, std::string>, const LogRecord*> additions; // last emission wins
    for (const auto& r : scratch.records()) {
        if (!wanted.count(r.value_name)) continue;
        CtxId ctx = ctx_map.at(r.ctx_id);
        if (present.count({ctx, r.value_name})) continue;
        additions[{ctx, r.value_name}] = &r;
    }
    if (additions.empty()) return 0;

    std::set<CtxId> needed;
    for (const auto& [key, _] : additions) {
        for (CtxId c = key.first; c != 0 && fresh.count(c) && !needed.count(c); c = fresh[c].parent_ctx_id) {
            needed.insert(c);
        }
    }

    RunWriter writer(project.projid(), store.blobs());
    writer.seed_loops(existing_loops);
    writer.seed_sequence(item.filename, max_seq);
    for (CtxId c : needed) writer.put_loop(fresh[c]);

    std::vector<const LogRecord*> ordered;
    for (const auto& [_, r] : additions) ordered.push_back(r);
    std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->seq < b->seq; });
    for (const auto* r : ordered) {
        CtxId ctx = ctx_map.at(r->ctx_id);
        if (r->value_type == ValueType::BlobRef) {
            writer.put_blob_record(item.filename, ctx, r->value_name, store.get_blob(r->value));
        } else {
            LogRecord rec = *r;
            rec.ctx_id = ctx;
            writer.put_record(rec);
        }
    }
    writer.log(item.filename, 0, std::string(kReplayOfName), head_vid);

    RunFile file = RunFile::from_writer(writer, RunFile::Kind::Backfill, item.tstamp);
    fs::path path = store.write_run_file(file);
    store.index_run_file(path);
    written.push_back(path);
    return ordered.size();
}

} // namespace

ReplayReport execute(Project& project, const ReplayPlan& p, const ReplayOptions& options) {
    ReplayReport report;
    if (p.work.empty()) return report;
    std::string head_vid = project.repo().head().value_or("");
    std::vector<fs::path> written;

    for (const auto& item : p.work) {
        ItemReport ir;
        ir.item = item;
        fs::path scratch = project.flor_dir() / "tmp" / unique_name("replay");
        fs::path ws = scratch / "ws";
        fs::path ckpt = scratch / "ckpt";
        try {
            project.repo().export_tree(item.vid, ws);
            detail::write_file_atomic(ws / item.filename, item.merged_source);
            fs::create_directories(ckpt);

            if (item.mode == ReplayMode::Resume) {
                for (const auto& c : item.checkpoints) {
                    fs::path dir = ckpt / c.loop / std::to_string(c.iteration);
                    fs::create_directories(dir);
                    detail::write_file_atomic(dir / c.name, project.store().get_blob(c.hash));
                }
                json resume = {{"loop", item.resume_loop}, {"iteration", item.resume_iteration}};
                detail::write_file_atomic(ckpt / "resume.json", resume.dump());
            }

            BuildGraph graph = parse_makefile(detail::read_file(ws / project.config().makefile_path), item.vid);

            // Upstream steps run for their side effects only.
            for (const auto& up : item.prerequisites) {
                fs::create_directories(scratch / "upstream");
                StepEnvironment se{scratch / "upstream" / "events.jsonl", scratch / "upstream", {}, true};
                int rc = run_recipe(graph, graph.at(up), ws, step_env(se), options.step_log);
                if (rc != 0) throw Error("prerequisite '" + up + "' exited with " + std::to_string(rc));
            }

            std::map<std::string, std::string> args;
            IngestOptions io;
            for (const auto& a : project.store().args(item.tstamp, item.filename, project.projid())) {
                args[a.name] = a.value;
                io.historical[a.name] = a;
            }
            StepEnvironment se{scratch / "events.jsonl", ckpt, args, true};
            ir.exit_code = run_recipe(graph, graph.at(item.target), ws, step_env(se), options.step_log);

            RunWriter scratch_writer(project.projid(), project.store().blobs());
            EventIngestor ingestor(scratch_writer, item.filename, io);
            for (const auto& ev : read_event_file(se.events_file)) ingestor.ingest(ev);
            ingestor.finish(ir.exit_code == 0);
            ir.events = ingestor.stats().events;
            ir.iterations_total = ingestor.stats().iterations;
            for (auto i : ingestor.stats().outer_iterations) {
                if (i >= item.resume_iteration) ++ir.iterations_executed;
            }
            if (ir.exit_code != 0) {
                ir.error = "step exited with " + std::to_string(ir.exit_code);
            } else {
                ir.records_added = backfill(project, item, p.requested, scratch_writer, head_vid, written);
                ir.ok = true;
            }
        } catch (const Error& e) {
            ir.ok = false;
            ir.error = e.what();
        }
        if (!options.keep_workspace) fs::remove_all(scratch);
        report.records_added += ir.records_added;
        report.items.push_back(std::move(ir));
    }

    if (!written.empty()) {
        std::vector<fs::path> rel;
        for (const auto& w : written) rel.push_back(fs::relative(w, project.root()));
        std::string message = "flor replay backfill:";
        for (const auto& n : p.requested) message += " " + n;
        message += "\n\nreplay-of: " + head_vid + "\n";
        report.vid = project.repo().commit_paths(rel, message);
    }
    return report;
}

std::string format_report(const ReplayReport& report) {
    std::ostringstream out;
    for (const auto& i : report.items) {
        out << (i.ok ? "ok" : "failed") << " " << i.item.vid.substr(0, 12) << " tstamp=" << i.item.tstamp
            << " target=" << i.item.target << " mode=" << replay_mode_name(i.item.mode)
            << " added=" << i.records_added << " iterations=" << i.iterations_executed << "/"
            << i.iterations_total;
        if (!i.error.empty()) out << " error=" << i.error;
        out << "\n";
    }
    out << "records added: " << report.records_added << "\n";
    return out.str();
}

} // namespace flor
