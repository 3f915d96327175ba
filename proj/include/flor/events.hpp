#pragma once

#include "flor/store.hpp"
#include "flor/types.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace flor {

enum class EventKind { LoopBegin, IterBegin, IterEnd, LoopEnd, Log, Arg, Ckpt, Flush };

struct Event {
    EventKind kind = EventKind::Log;
    std::string name;
    std::string value;
    std::optional<int> type_hint;
    friend bool operator==(const Event&, const Event&) = default;
};

std::string_view kind_name(EventKind kind);

// One JSON object per line with keys k, n, v and optional integer t.
std::string serialize_event(const Event& ev);
Event parse_event(std::string_view line, std::size_t ordinal);
std::vector<Event> read_event_file(const std::filesystem::path& path);

// Decides whether a checkpoint emitted at the end of an iteration is kept.
// depth is 1 for the outermost loop; iteration is that loop's 0-based counter.
using CheckpointPolicy = std::function<bool(std::size_t depth, std::int64_t iteration)>;

// Keeps every outermost-loop iteration boundary and nothing deeper.
bool checkpoint_policy(std::size_t depth, std::int64_t iteration);

enum class ArgSource { Default, Cli, History };
std::string_view arg_source_name(ArgSource source);

struct ResolvedArg {
    std::string value;
    ArgSource source = ArgSource::Default;
};

// Precedence: historical > override > default.
ResolvedArg resolve_arg(const std::string& name, const std::string& default_value,
                        const std::map<std::string, std::string>& overrides,
                        const std::optional<ArgRecord>& historical);
std::string arg_resolve(const std::string& name, const std::string& default_value,
                        const std::map<std::string, std::string>& overrides,
                        const std::optional<ArgRecord>& historical);

struct IngestOptions {
    std::map<std::string, std::string> overrides;
    std::map<std::string, ArgRecord> historical; // by arg name
    CheckpointPolicy policy = checkpoint_policy;
};

struct IngestStats {
    std::size_t events = 0;
    std::size_t iterations = 0;            // iter_begin events
    std::vector<std::int64_t> outer_iterations; // loop_iteration of each depth-1 iteration
    std::size_t records = 0;
    std::size_t checkpoints_kept = 0;
    std::size_t checkpoints_dropped = 0;
};

// Converts one step's event stream into rows of a RunWriter.
//
// ctx_ids count from 1 in iter_begin order; the parent of an iteration is the
// innermost open iteration (0 at file scope).
class EventIngestor {
  public:
    EventIngestor(RunWriter& writer, std::string filename, IngestOptions options = {});

    void ingest(const Event& ev);
    // Open frames are an error only when the step claims success.
    void finish(bool step_succeeded);

    CtxId current_ctx() const;
    std::size_t depth() const;
    const IngestStats& stats() const noexcept { return stats_; }

  private:
    struct Frame {
        bool is_iteration = false;
        std::string loop_name;
        CtxId ctx = 0;
        std::int64_t next_iteration = 0; // loop frames
        std::int64_t iteration = 0;      // iteration frames
    };

    [[noreturn]] void fail(const std::string& what) const;
    void require_record_scope(const Event& ev) const;

    RunWriter* writer_;
    std::string filename_;
    IngestOptions options_;
    std::vector<Frame> frames_;
    CtxId next_ctx_ = 1;
    std::size_t ordinal_ = 0;
    std::map<std::string, bool> seen_args_;
    IngestStats stats_;
};

} // namespace flor
