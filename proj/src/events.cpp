#include "flor/events.hpp"

#include "flor/error.hpp"
#include "fsutil.hpp"

#include <json.hpp>

#include <array>

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace flor {

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 8> kKinds = {{
    {EventKind::LoopBegin, "loop_begin"},
    {EventKind::IterBegin, "iter_begin"},
    {EventKind::IterEnd, "iter_end"},
    {EventKind::LoopEnd, "loop_end"},
    {EventKind::Log, "log"},
    {EventKind::Arg, "arg"},
    {EventKind::Ckpt, "ckpt"},
    {EventKind::Flush, "flush"},
}};

bool reserved_name(const std::string& name) {
    return name.rfind(kArgPrefix, 0) == 0 || name == kRunStatusName || name == kReplayOfName;
}

} // namespace

std::string_view kind_name(EventKind kind) {
    for (const auto& [k, n] : kKinds) {
        if (k == kind) return n;
    }
    return "?";
}

std::string serialize_event(const Event& ev) {
    ojson j;
    j["k"] = kind_name(ev.kind);
    j["n"] = ev.name;
    j["v"] = ev.value;
    if (ev.type_hint) j["t"] = *ev.type_hint;
    return j.dump();
}

Event parse_event(std::string_view line, std::size_t ordinal) {
    ojson j;
    try {
        j = ojson::parse(line);
    } catch (const ojson::parse_error& e) {
        throw ProtocolError(ordinal, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ProtocolError(ordinal, "event is not a JSON object");
    for (const char* key : {"k", "n", "v"}) {
        if (!j.contains(key) || !j[key].is_string()) {
            throw ProtocolError(ordinal, std::string("missing string key '") + key + "'");
        }
    }
    Event ev;
    std::string k = j["k"].get<std::string>();
    bool known = false;
    for (const auto& [kind, n] : kKinds) {
        if (n == k) {
            ev.kind = kind;
            known = true;
        }
    }
    if (!known) throw ProtocolError(ordinal, "unknown event kind '" + k + "'");
    ev.name = j["n"].get<std::string>();
    ev.value = j["v"].get<std::string>();
    if (j.contains("t")) {
        if (!j["t"].is_number_integer()) throw ProtocolError(ordinal, "type hint must be an integer");
        ev.type_hint = j["t"].get<int>();
        if (!valid_value_type(*ev.type_hint)) {
            throw ProtocolError(ordinal, "unknown type code " + std::to_string(*ev.type_hint));
        }
    }
    return ev;
}

std::vector<Event> read_event_file(const fs::path& path) {
    std::vector<Event> out;
    if (!fs::exists(path)) return out;
    std::string text = detail::read_file(path);
    std::size_t start = 0, ordinal = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string::npos) nl = text.size();
        std::string_view line(text.data() + start, nl - start);
        start = nl + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        out.push_back(parse_event(line, ++ordinal));
    }
    return out;
}

bool checkpoint_policy(std::size_t depth, std::int64_t) { return depth == 1; }

std::string_view arg_source_name(ArgSource source) {
    switch (source) {
    case ArgSource::Cli:
        return "cli";
    case ArgSource::History:
        return "history";
    case ArgSource::Default:
        break;
    }
    return "default";
}

ResolvedArg resolve_arg(const std::string& name, const std::string& default_value,
                        const std::map<std::string, std::string>& overrides,
                        const std::optional<ArgRecord>& historical) {
    if (historical) return {historical->value, ArgSource::History};
    if (auto it = overrides.find(name); it != overrides.end()) return {it->second, ArgSource::Cli};
    return {default_value, ArgSource::Default};
}

std::string arg_resolve(const std::string& name, const std::string& default_value,
                        const std::map<std::string, std::string>& overrides,
                        const std::optional<ArgRecord>& historical) {
    return resolve_arg(name, default_value, overrides, historical).value;
}

EventIngestor::EventIngestor(RunWriter& writer, std::string filename, IngestOptions options)
    : writer_(&writer), filename_(std::move(filename)), options_(std::move(options)) {}

void EventIngestor::fail(const std::string& what) const { throw ProtocolError(ordinal_, what); }

CtxId EventIngestor::current_ctx() const {
    for (auto it = frames_.rbegin(); it != frames_.rend(); ++it) {
        if (it->is_iteration) return it->ctx;
    }
    return 0;
}

std::size_t EventIngestor::depth() const {
    std::size_t d = 0;
    for (const auto& f : frames_) d += f.is_iteration ? 1 : 0;
    return d;
}

void EventIngestor::require_record_scope(const Event& ev) const {
    if (!frames_.empty() && !frames_.back().is_iteration) {
        fail(std::string(kind_name(ev.kind)) + " '" + ev.name + "' inside loop '" +
             frames_.back().loop_name + "' but outside any iteration");
    }
}

void EventIngestor::ingest(const Event& ev) {
    ++ordinal_;
    ++stats_.events;
    switch (ev.kind) {
    case EventKind::LoopBegin: {
        require_record_scope(ev);
        if (ev.name.empty()) fail("loop_begin without a loop name");
        Frame f;
        f.loop_name = ev.name;
        frames_.push_back(f);
        break;
    }
    case EventKind::IterBegin: {
        if (frames_.empty() || frames_.back().is_iteration) fail("iter_begin outside a loop");
        Frame& loop = frames_.back();
        if (ev.name != loop.loop_name) {
            fail("iter_begin '" + ev.name + "' inside loop '" + loop.loop_name + "'");
        }
        Frame f;
        f.is_iteration = true;
        f.loop_name = loop.loop_name;
        f.ctx = next_ctx_++;
        f.iteration = loop.next_iteration++;
        LoopIteration row;
        row.filename = filename_;
        row.ctx_id = f.ctx;
        row.parent_ctx_id = current_ctx();
        row.loop_name = f.loop_name;
        row.loop_iteration = f.iteration;
        row.iteration_value = ev.value;
        writer_->put_loop(std::move(row));
        frames_.push_back(f);
        ++stats_.iterations;
        if (depth() == 1) stats_.outer_iterations.push_back(f.iteration);
        break;
    }
    case EventKind::IterEnd:
        if (frames_.empty() || !frames_.back().is_iteration) fail("iter_end without an open iteration");
        if (ev.name != frames_.back().loop_name) {
            fail("iter_end '" + ev.name + "' closes iteration of '" + frames_.back().loop_name + "'");
        }
        frames_.pop_back();
        break;
    case EventKind::LoopEnd:
        if (frames_.empty() || frames_.back().is_iteration) fail("loop_end with an open iteration or no loop");
        if (ev.name != frames_.back().loop_name) {
            fail("loop_end '" + ev.name + "' closes loop '" + frames_.back().loop_name + "'");
        }
        frames_.pop_back();
        break;
    case EventKind::Log: {
        require_record_scope(ev);
        if (ev.name.empty()) fail("log without a name");
        if (reserved_name(ev.name)) fail("log name '" + ev.name + "' is reserved");
        TypedValue value;
        try {
            value = typed_from_text(ev.name, ev.value, ev.type_hint);
        } catch (const TypeError& e) {
            fail(e.what());
        }
        writer_->log(filename_, current_ctx(), ev.name, value);
        ++stats_.records;
        break;
    }
    case EventKind::Arg: {
        require_record_scope(ev);
        if (ev.name.empty()) fail("arg without a name");
        if (seen_args_[ev.name]) fail("arg '" + ev.name + "' declared twice");
        seen_args_[ev.name] = true;
        std::optional<ArgRecord> hist;
        if (auto it = options_.historical.find(ev.name); it != options_.historical.end()) hist = it->second;
        ResolvedArg r = resolve_arg(ev.name, ev.value, options_.overrides, hist);
        std::string base = std::string(kArgPrefix) + ev.name;
        writer_->log(filename_, current_ctx(), base, r.value);
        writer_->log(filename_, current_ctx(), base + std::string(kArgSourceSuffix),
                     std::string(arg_source_name(r.source)));
        stats_.records += 2;
        break;
    }
    case EventKind::Ckpt: {
        require_record_scope(ev);
        if (ev.name.empty()) fail("ckpt without a name");
        if (reserved_name(ev.name)) fail("ckpt name '" + ev.name + "' is reserved");
        std::int64_t iteration = 0;
        for (auto it = frames_.rbegin(); it != frames_.rend(); ++it) {
            if (it->is_iteration) {
                iteration = it->iteration;
                break;
            }
        }
        if (!options_.policy(depth(), iteration)) {
            ++stats_.checkpoints_dropped;
            break;
        }
        std::string contents;
        try {
            contents = detail::read_file(ev.value);
        } catch (const Error& e) {
            throw IoError("event " + std::to_string(ordinal_) + ": checkpoint '" + ev.name +
                          "' unreadable: " + e.what());
        }
        writer_->put_blob_record(filename_, current_ctx(), ev.name, contents);
        ++stats_.records;
        ++stats_.checkpoints_kept;
        break;
    }
    case EventKind::Flush:
        break;
    }
}

void EventIngestor::finish(bool step_succeeded) {
    if (step_succeeded && !frames_.empty()) {
        ++ordinal_;
        fail("stream ended with " + std::to_string(frames_.size()) + " open frame(s), innermost '" +
             frames_.back().loop_name + "'");
    }
}

} // namespace flor
