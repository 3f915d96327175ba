#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace flor {

using Timestamp = std::int64_t;
using CtxId = std::int64_t;

// Type codes of the logs.value_type column.
enum class ValueType : int { Int = 1, Float = 2, Text = 3, BlobRef = 4 };

bool valid_value_type(int code) noexcept;

// Reserved value_name prefixes.
inline constexpr std::string_view kArgPrefix = "arg::";
inline constexpr std::string_view kArgSourceSuffix = "::source";
inline constexpr std::string_view kRunStatusName = "run::status";
inline constexpr std::string_view kReplayOfName = "replay::of";

struct LogRecord {
    std::string projid;
    Timestamp tstamp = 0;
    std::string filename;
    CtxId ctx_id = 0;
    std::string value_name;
    std::string value;
    ValueType value_type = ValueType::Text;
    std::int64_t seq = 0; // emission order within (projid, tstamp, filename)

    friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

struct LoopIteration {
    std::string projid;
    Timestamp tstamp = 0;
    std::string filename;
    CtxId ctx_id = 0;
    CtxId parent_ctx_id = 0;
    std::string loop_name;
    std::int64_t loop_iteration = 0;
    std::string iteration_value;

    friend bool operator==(const LoopIteration&, const LoopIteration&) = default;
};

// obj_store row; contents live in the blob store under `hash`.
struct BlobEntry {
    std::string projid;
    Timestamp tstamp = 0;
    std::string filename;
    CtxId ctx_id = 0;
    std::string value_name;
    std::string hash;

    friend bool operator==(const BlobEntry&, const BlobEntry&) = default;
};

struct ArgRecord {
    std::string projid;
    Timestamp tstamp = 0;
    std::string filename;
    std::string name;
    std::string value;
    bool was_default = true;

    friend bool operator==(const ArgRecord&, const ArgRecord&) = default;
};

// ts2vid row.
struct VersionInterval {
    std::string projid;
    Timestamp ts_start = 0;
    Timestamp ts_end = 0;
    std::string vid;
    std::string root_target;

    bool contains(Timestamp t) const noexcept { return ts_start <= t && t <= ts_end; }
    friend bool operator==(const VersionInterval&, const VersionInterval&) = default;
};

// Committed state handed to the query layer.
struct StoreSnapshot {
    std::vector<LogRecord> records;
    std::vector<LoopIteration> loops;
    std::vector<VersionInterval> intervals;
};

} // namespace flor
