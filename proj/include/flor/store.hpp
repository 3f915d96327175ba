#pragma once

#include "flor/blob_store.hpp"
#include "flor/types.hpp"
#include "flor/value.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

struct sqlite3;

namespace flor {

// Rows of one pending run, keyed by filename, awaiting a tstamp.
//
// A writer may be seeded with already-committed loops (hindsight backfill) so
// that new records can reference historical contexts.
class RunWriter {
  public:
    explicit RunWriter(std::string projid, BlobStore& blobs);

    // Returns the emission sequence, strictly increasing per filename.
    std::int64_t put_record(LogRecord rec);
    void put_loop(LoopIteration iter);

    // Encodes the value (spilling to the blob store when required) and stores it.
    std::int64_t log(const std::string& filename, CtxId ctx, const std::string& name,
                     const TypedValue& value);
    // Stores contents as a blob and logs the blob reference.
    std::int64_t put_blob_record(const std::string& filename, CtxId ctx, const std::string& name,
                                 std::string_view contents);

    void seed_loops(const std::vector<LoopIteration>& committed);
    void seed_sequence(const std::string& filename, std::int64_t last_seq);

    bool empty() const noexcept { return records_.empty() && loops_.empty(); }
    const std::string& projid() const noexcept { return projid_; }
    const std::vector<LogRecord>& records() const noexcept { return records_; }
    const std::vector<LoopIteration>& loops() const noexcept { return loops_; }
    const std::vector<BlobEntry>& blob_entries() const noexcept { return blob_entries_; }
    bool has_loop(const std::string& filename, CtxId ctx) const;
    BlobStore& blobs() noexcept { return *blobs_; }

  private:
    std::string projid_;
    BlobStore* blobs_;
    std::vector<LogRecord> records_;
    std::vector<LoopIteration> loops_;
    std::vector<BlobEntry> blob_entries_;
    std::map<std::pair<std::string, CtxId>, std::size_t> loop_index_; // -1 marks seeded
    std::map<std::string, std::int64_t> next_seq_;
};

// One file under records/. Commit files own a fresh tstamp; backfill files add
// rows to an existing tstamp.
struct RunFile {
    enum class Kind { Commit, Backfill };
    Kind kind = Kind::Commit;
    std::string projid;
    Timestamp tstamp = 0;
    std::vector<LogRecord> records;
    std::vector<LoopIteration> loops;
    std::vector<BlobEntry> blobs;

    std::string serialize() const;
    static RunFile parse(const std::string& text);
    // Stamps the writer's rows with tstamp.
    static RunFile from_writer(const RunWriter& writer, Kind kind, Timestamp tstamp);
};

struct ScanFilter {
    std::optional<std::string> projid;
    std::optional<Timestamp> tstamp;
    std::optional<std::string> filename;
    std::optional<std::string> value_name;
};

struct BuildDepRow {
    std::string vid;
    std::string target;
    std::vector<std::string> deps;
    std::vector<std::string> cmds;
    bool cached = false;
};

// Durable store rooted at a `.flor` directory: run files, blob objects and
// the relational index rebuilt from them.
class Store {
  public:
    explicit Store(std::filesystem::path flor_dir);
    ~Store();
    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    const std::filesystem::path& dir() const noexcept { return dir_; }
    std::filesystem::path records_dir() const { return dir_ / "records"; }
    BlobStore& blobs() noexcept { return blobs_; }
    const BlobStore& blobs() const noexcept { return blobs_; }

    std::string put_blob(std::string_view contents) { return blobs_.put(contents); }
    std::string get_blob(std::string_view hash) const { return blobs_.get(hash); }

    // Writes records/<name>.json durably and returns its path. Does not index.
    std::filesystem::path write_run_file(const RunFile& file);
    // Adds a written run file to the index.
    void index_run_file(const std::filesystem::path& path);

    // True when records/ holds run files the index has not seen (or the reverse).
    bool index_stale() const;
    // Drops every indexed row and reloads all run files plus the given intervals.
    void rebuild(const std::vector<VersionInterval>& intervals,
                 const std::vector<BuildDepRow>& build_deps);

    void upsert_interval(const VersionInterval& interval);
    std::vector<VersionInterval> intervals(const std::optional<std::string>& projid = {}) const;
    std::optional<VersionInterval> resolve(const std::string& projid, Timestamp t) const;
    std::optional<Timestamp> last_tstamp(const std::string& projid) const;

    void put_build_deps(const std::vector<BuildDepRow>& rows);
    std::vector<BuildDepRow> build_deps(const std::string& vid) const;

    // Ordered by (tstamp, filename, seq).
    std::vector<LogRecord> scan(const ScanFilter& filter = {}) const;
    std::vector<LoopIteration> loops(const ScanFilter& filter = {}) const;
    std::vector<BlobEntry> blob_entries(const ScanFilter& filter = {}) const;
    std::vector<ArgRecord> args(Timestamp tstamp, const std::string& filename,
                                const std::string& projid) const;
    StoreSnapshot snapshot(const std::optional<std::string>& projid = {}) const;

    // Referential-integrity audit; returns one message per violation.
    std::vector<std::string> audit() const;

  private:
    void open_index();
    void create_schema();
    void load_run_file(const RunFile& file, const std::string& name);

    std::filesystem::path dir_;
    BlobStore blobs_;
    sqlite3* db_ = nullptr;
};

// Groups arg::<name> and arg::<name>::source records into ArgRecords.
std::vector<ArgRecord> args_from_records(const std::vector<LogRecord>& records);

} // namespace flor
