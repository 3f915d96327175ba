#include "flor/store.hpp"

#include "flor/error.hpp"

#include "fsutil.hpp"

#include <json.hpp>
#include <sqlite3.h>

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <tuple>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace flor {

// ---------------------------------------------------------------------------
// RunWriter
// ---------------------------------------------------------------------------

namespace {
constexpr std::size_t kSeeded = static_cast<std::size_t>(-1);
}

RunWriter::RunWriter(std::string projid, BlobStore& blobs)
    : projid_(std::move(projid)), blobs_(&blobs) {}

bool RunWriter::has_loop(const std::string& filename, CtxId ctx) const {
    return loop_index_.count({filename, ctx}) > 0;
}

void RunWriter::seed_loops(const std::vector<LoopIteration>& committed) {
    for (const auto& it : committed) {
        loop_index_[{it.filename, it.ctx_id}] = kSeeded;
    }
}

void RunWriter::seed_sequence(const std::string& filename, std::int64_t last_seq) {
    auto& next = next_seq_[filename];
    next = std::max(next, last_seq);
}

std::int64_t RunWriter::put_record(LogRecord rec) {
    if (!valid_value_type(static_cast<int>(rec.value_type))) {
        throw IntegrityError("invalid value_type for '" + rec.value_name + "'");
    }
    if (rec.ctx_id < 0 || (rec.ctx_id > 0 && !has_loop(rec.filename, rec.ctx_id))) {
        throw IntegrityError("record '" + rec.value_name + "' references unknown ctx_id " +
                             std::to_string(rec.ctx_id) + " in " + rec.filename);
    }
    if (rec.value_type == ValueType::BlobRef && !blobs_->contains(rec.value)) {
        throw IntegrityError("record '" + rec.value_name + "' references missing blob " + rec.value);
    }
    rec.projid = projid_;
    rec.seq = ++next_seq_[rec.filename];
    records_.push_back(std::move(rec));
    return records_.back().seq;
}

void RunWriter::put_loop(LoopIteration iter) {
    if (iter.ctx_id <= 0) {
        throw IntegrityError("ctx_id must be positive, got " + std::to_string(iter.ctx_id));
    }
    if (has_loop(iter.filename, iter.ctx_id)) {
        throw IntegrityError("duplicate ctx_id " + std::to_string(iter.ctx_id) + " in " +
                             iter.filename);
    }
    if (iter.parent_ctx_id != 0) {
        if (iter.parent_ctx_id >= iter.ctx_id || !has_loop(iter.filename, iter.parent_ctx_id)) {
            throw IntegrityError("ctx_id " + std::to_string(iter.ctx_id) +
                                 " has dangling parent " + std::to_string(iter.parent_ctx_id));
        }
    }
    iter.projid = projid_;
    loop_index_[{iter.filename, iter.ctx_id}] = loops_.size();
    loops_.push_back(std::move(iter));
}

std::int64_t RunWriter::log(const std::string& filename, CtxId ctx, const std::string& name,
                            const TypedValue& value) {
    EncodedValue enc = encode_value(value, *blobs_);
    LogRecord rec;
    rec.filename = filename;
    rec.ctx_id = ctx;
    rec.value_name = name;
    rec.value = enc.payload;
    rec.value_type = enc.type;
    auto seq = put_record(std::move(rec));
    if (enc.type == ValueType::BlobRef) {
        blob_entries_.push_back({projid_, 0, filename, ctx, name, enc.payload});
    }
    return seq;
}

std::int64_t RunWriter::put_blob_record(const std::string& filename, CtxId ctx,
                                        const std::string& name, std::string_view contents) {
    return log(filename, ctx, name, Bytes{std::string(contents)});
}

// ---------------------------------------------------------------------------
// RunFile
// ---------------------------------------------------------------------------

std::string RunFile::serialize() const {
    json doc;
    doc["format"] = 1;
    doc["kind"] = kind == Kind::Commit ? "commit" : "backfill";
    doc["projid"] = projid;
    doc["tstamp"] = tstamp;
    json loops_json = json::array();
    for (const auto& l : loops) {
        loops_json.push_back({{"filename", l.filename},
                              {"ctx_id", l.ctx_id},
                              {"parent_ctx_id", l.parent_ctx_id},
                              {"loop_name", l.loop_name},
                              {"loop_iteration", l.loop_iteration},
                              {"iteration_value", l.iteration_value}});
    }
    json logs_json = json::array();
    for (const auto& r : records) {
        logs_json.push_back({{"filename", r.filename},
                             {"ctx_id", r.ctx_id},
                             {"value_name", r.value_name},
                             {"value", r.value},
                             {"value_type", static_cast<int>(r.value_type)},
                             {"seq", r.seq}});
    }
    json blobs_json = json::array();
    for (const auto& b : blobs) {
        blobs_json.push_back({{"filename", b.filename},
                              {"ctx_id", b.ctx_id},
                              {"value_name", b.value_name},
                              {"hash", b.hash}});
    }
    doc["loops"] = std::move(loops_json);
    doc["logs"] = std::move(logs_json);
    doc["obj_store"] = std::move(blobs_json);
    return doc.dump(1) + "\n";
}

RunFile RunFile::parse(const std::string& text) {
    RunFile file;
    try {
        json doc = json::parse(text);
        if (doc.at("format").get<int>() != 1) throw DataError("unsupported run file format");
        file.kind = doc.at("kind").get<std::string>() == "commit" ? Kind::Commit : Kind::Backfill;
        file.projid = doc.at("projid").get<std::string>();
        file.tstamp = doc.at("tstamp").get<Timestamp>();
        for (const auto& l : doc.at("loops")) {
            file.loops.push_back({file.projid, file.tstamp, l.at("filename").get<std::string>(),
                                  l.at("ctx_id").get<CtxId>(), l.at("parent_ctx_id").get<CtxId>(),
                                  l.at("loop_name").get<std::string>(),
                                  l.at("loop_iteration").get<std::int64_t>(),
                                  l.at("iteration_value").get<std::string>()});
        }
        for (const auto& r : doc.at("logs")) {
            int code = r.at("value_type").get<int>();
            if (!valid_value_type(code)) throw DataError("invalid value_type in run file");
            file.records.push_back({file.projid, file.tstamp, r.at("filename").get<std::string>(),
                                    r.at("ctx_id").get<CtxId>(),
                                    r.at("value_name").get<std::string>(),
                                    r.at("value").get<std::string>(), static_cast<ValueType>(code),
                                    r.at("seq").get<std::int64_t>()});
        }
        for (const auto& b : doc.at("obj_store")) {
            file.blobs.push_back({file.projid, file.tstamp, b.at("filename").get<std::string>(),
                                  b.at("ctx_id").get<CtxId>(), b.at("value_name").get<std::string>(),
                                  b.at("hash").get<std::string>()});
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed run file: ") + e.what());
    }
    return file;
}

RunFile RunFile::from_writer(const RunWriter& writer, Kind kind, Timestamp tstamp) {
    RunFile file;
    file.kind = kind;
    file.projid = writer.projid();
    file.tstamp = tstamp;
    file.records = writer.records();
    file.loops = writer.loops();
    file.blobs = writer.blob_entries();
    for (auto& r : file.records) r.tstamp = tstamp;
    for (auto& l : file.loops) l.tstamp = tstamp;
    for (auto& b : file.blobs) b.tstamp = tstamp;
    return file;
}

// ---------------------------------------------------------------------------
// SQLite plumbing
// ---------------------------------------------------------------------------

namespace {

class Statement {
  public:
    Statement(sqlite3* db, const char* sql) : db_(db) {
        if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
            throw IoError(std::string("index: ") + sqlite3_errmsg(db));
        }
    }
    ~Statement() { sqlite3_finalize(stmt_); }
    Statement(const Statement&) = delete;
    Statement& operator=(const Statement&) = delete;

    Statement& bind(int idx, std::int64_t v) {
        sqlite3_bind_int64(stmt_, idx, v);
        return *this;
    }
    Statement& bind(int idx, const std::string& v) {
        sqlite3_bind_text(stmt_, idx, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT);
        return *this;
    }
    // Returns true while rows remain.
    bool step() {
        int rc = sqlite3_step(stmt_);
        if (rc == SQLITE_ROW) return true;
        if (rc == SQLITE_DONE) return false;
        throw IoError(std::string("index: ") + sqlite3_errmsg(db_));
    }
    void run() {
        while (step()) {
        }
        sqlite3_reset(stmt_);
        sqlite3_clear_bindings(stmt_);
    }
    std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }
    bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }
    std::string text(int col) const {
        auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, col));
        return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col))) : "";
    }

  private:
    sqlite3* db_;
    sqlite3_stmt* stmt_ = nullptr;
};

void exec(sqlite3* db, const char* sql) {
    char* err = nullptr;
    if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown";
        sqlite3_free(err);
        throw IoError("index: " + msg);
    }
}

class Transaction {
  public:
    explicit Transaction(sqlite3* db) : db_(db) { exec(db_, "BEGIN IMMEDIATE"); }
    ~Transaction() {
        if (!done_) sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
    }
    void commit() {
        exec(db_, "COMMIT");
        done_ = true;
    }

  private:
    sqlite3* db_;
    bool done_ = false;
};

std::string where_clause(const ScanFilter& f) {
    std::string w = " WHERE 1=1";
    if (f.projid) w += " AND projid = :projid";
    if (f.tstamp) w += " AND tstamp = :tstamp";
    if (f.filename) w += " AND filename = :filename";
    return w;
}

void bind_filter(Statement& st, const ScanFilter& f) {
    int idx = 1;
    if (f.projid) st.bind(idx++, *f.projid);
    if (f.tstamp) st.bind(idx++, *f.tstamp);
    if (f.filename) st.bind(idx++, *f.filename);
    if (f.value_name) st.bind(idx++, *f.value_name);
}

std::string json_list(const std::vector<std::string>& items) { return json(items).dump(); }

std::vector<std::string> parse_list(const std::string& text) {
    return json::parse(text).get<std::vector<std::string>>();
}

} // namespace

// ---------------------------------------------------------------------------
// Store
// ---------------------------------------------------------------------------

Store::Store(fs::path flor_dir) : dir_(std::move(flor_dir)), blobs_(dir_ / "objects") {
    fs::create_directories(records_dir());
    open_index();
}

Store::~Store() {
    if (db_) sqlite3_close(db_);
}

void Store::open_index() {
    fs::path path = dir_ / "index.db";
    if (sqlite3_open_v2(path.c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE, nullptr) !=
        SQLITE_OK) {
        std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
        throw IoError("cannot open index " + path.string() + ": " + msg);
    }
    sqlite3_busy_timeout(db_, 10000);
    exec(db_, "PRAGMA journal_mode=WAL");
    exec(db_, "PRAGMA synchronous=NORMAL");
    create_schema();
}

void Store::create_schema() {
    exec(db_, R"sql(
        CREATE TABLE IF NOT EXISTS run_files (name TEXT PRIMARY KEY);
        CREATE TABLE IF NOT EXISTS logs (
            projid TEXT, tstamp INTEGER, filename TEXT, ctx_id INTEGER,
            value_name TEXT, value TEXT, value_type INTEGER, seq INTEGER,
            PRIMARY KEY (projid, tstamp, filename, seq));
        CREATE INDEX IF NOT EXISTS logs_by_name ON logs (value_name);
        CREATE TABLE IF NOT EXISTS loops (
            projid TEXT, tstamp INTEGER, filename TEXT, ctx_id INTEGER,
            parent_ctx_id INTEGER, loop_name TEXT, loop_iteration INTEGER,
            iteration_value TEXT,
            PRIMARY KEY (projid, tstamp, filename, ctx_id));
        CREATE TABLE IF NOT EXISTS obj_store (
            projid TEXT, tstamp INTEGER, filename TEXT, ctx_id INTEGER,
            value_name TEXT, hash TEXT,
            PRIMARY KEY (projid, tstamp, filename, ctx_id, value_name, hash));
        CREATE TABLE IF NOT EXISTS ts2vid (
            projid TEXT, ts_start INTEGER, ts_end INTEGER, vid TEXT, root_target TEXT,
            PRIMARY KEY (projid, ts_start));
        CREATE TABLE IF NOT EXISTS build_deps (
            vid TEXT, target TEXT, deps TEXT, cmds TEXT, cached INTEGER,
            PRIMARY KEY (vid, target));
    )sql");
}

fs::path Store::write_run_file(const RunFile& file) {
    char stamp[32];
    std::snprintf(stamp, sizeof(stamp), "%012lld", static_cast<long long>(file.tstamp));
    fs::path path;
    if (file.kind == RunFile::Kind::Commit) {
        path = records_dir() / (std::string(stamp) + ".json");
        if (fs::exists(path)) {
            throw IntegrityError("run file for tstamp " + std::to_string(file.tstamp) +
                                 " already exists");
        }
    } else {
        for (int n = 1;; ++n) {
            path = records_dir() / (std::string(stamp) + ".backfill-" + std::to_string(n) + ".json");
            if (!fs::exists(path)) break;
        }
    }
    detail::write_file_atomic(path, file.serialize());
    return path;
}

void Store::load_run_file(const RunFile& file, const std::string& name) {
    Statement files(db_, "INSERT OR IGNORE INTO run_files (name) VALUES (?)");
    files.bind(1, name).run();

    Statement loop_ins(db_, "INSERT INTO loops VALUES (?,?,?,?,?,?,?,?)");
    for (const auto& l : file.loops) {
        loop_ins.bind(1, l.projid).bind(2, l.tstamp).bind(3, l.filename).bind(4, l.ctx_id);
        loop_ins.bind(5, l.parent_ctx_id).bind(6, l.loop_name).bind(7, l.loop_iteration);
        loop_ins.bind(8, l.iteration_value).run();
    }
    Statement log_ins(db_, "INSERT INTO logs VALUES (?,?,?,?,?,?,?,?)");
    for (const auto& r : file.records) {
        log_ins.bind(1, r.projid).bind(2, r.tstamp).bind(3, r.filename).bind(4, r.ctx_id);
        log_ins.bind(5, r.value_name).bind(6, r.value);
        log_ins.bind(7, static_cast<std::int64_t>(r.value_type)).bind(8, r.seq).run();
    }
    Statement blob_ins(db_, "INSERT OR IGNORE INTO obj_store VALUES (?,?,?,?,?,?)");
    for (const auto& b : file.blobs) {
        blob_ins.bind(1, b.projid).bind(2, b.tstamp).bind(3, b.filename).bind(4, b.ctx_id);
        blob_ins.bind(5, b.value_name).bind(6, b.hash).run();
    }
}

void Store::index_run_file(const fs::path& path) {
    RunFile file = RunFile::parse(detail::read_file(path));
    Transaction tx(db_);
    load_run_file(file, path.filename().string());
    tx.commit();
}

namespace {

std::set<std::string> run_file_names(const fs::path& dir) {
    std::set<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        auto name = entry.path().filename().string();
        if (entry.is_regular_file() && name.size() > 5 && name.ends_with(".json")) {
            names.insert(name);
        }
    }
    return names;
}

} // namespace

bool Store::index_stale() const {
    std::set<std::string> indexed;
    Statement st(db_, "SELECT name FROM run_files");
    while (st.step()) indexed.insert(st.text(0));
    return indexed != run_file_names(records_dir());
}

void Store::rebuild(const std::vector<VersionInterval>& intervals,
                    const std::vector<BuildDepRow>& build_deps) {
    Transaction tx(db_);
    exec(db_, "DELETE FROM run_files; DELETE FROM logs; DELETE FROM loops; "
              "DELETE FROM obj_store; DELETE FROM ts2vid; DELETE FROM build_deps;");
    for (const auto& name : run_file_names(records_dir())) {
        load_run_file(RunFile::parse(detail::read_file(records_dir() / name)), name);
    }
    Statement ins(db_, "INSERT OR REPLACE INTO ts2vid VALUES (?,?,?,?,?)");
    for (const auto& iv : intervals) {
        ins.bind(1, iv.projid).bind(2, iv.ts_start).bind(3, iv.ts_end).bind(4, iv.vid);
        ins.bind(5, iv.root_target).run();
    }
    Statement deps(db_, "INSERT OR REPLACE INTO build_deps VALUES (?,?,?,?,?)");
    for (const auto& row : build_deps) {
        deps.bind(1, row.vid).bind(2, row.target).bind(3, json_list(row.deps));
        deps.bind(4, json_list(row.cmds)).bind(5, row.cached ? 1 : 0).run();
    }
    tx.commit();
}

void Store::upsert_interval(const VersionInterval& iv) {
    if (iv.ts_start > iv.ts_end) {
        throw IntegrityError("interval start after end");
    }
    for (const auto& other : intervals(iv.projid)) {
        if (other.ts_start == iv.ts_start) continue;
        if (other.ts_start <= iv.ts_end && iv.ts_start <= other.ts_end) {
            throw IntegrityError("interval [" + std::to_string(iv.ts_start) + ", " +
                                 std::to_string(iv.ts_end) + "] overlaps an existing interval");
        }
    }
    Statement ins(db_, "INSERT OR REPLACE INTO ts2vid VALUES (?,?,?,?,?)");
    ins.bind(1, iv.projid).bind(2, iv.ts_start).bind(3, iv.ts_end).bind(4, iv.vid);
    ins.bind(5, iv.root_target).run();
}

std::vector<VersionInterval> Store::intervals(const std::optional<std::string>& projid) const {
    std::vector<VersionInterval> out;
    std::string sql = "SELECT projid, ts_start, ts_end, vid, root_target FROM ts2vid";
    if (projid) sql += " WHERE projid = ?";
    sql += " ORDER BY projid, ts_start";
    Statement st(db_, sql.c_str());
    if (projid) st.bind(1, *projid);
    while (st.step()) {
        out.push_back({st.text(0), st.integer(1), st.integer(2), st.text(3), st.text(4)});
    }
    return out;
}

std::optional<VersionInterval> Store::resolve(const std::string& projid, Timestamp t) const {
    Statement st(db_, "SELECT projid, ts_start, ts_end, vid, root_target FROM ts2vid "
                      "WHERE projid = ? AND ts_start <= ? AND ? <= ts_end");
    st.bind(1, projid).bind(2, t).bind(3, t);
    if (!st.step()) return std::nullopt;
    return VersionInterval{st.text(0), st.integer(1), st.integer(2), st.text(3), st.text(4)};
}

std::optional<Timestamp> Store::last_tstamp(const std::string& projid) const {
    Statement st(db_, "SELECT MAX(t) FROM (SELECT MAX(ts_end) AS t FROM ts2vid WHERE projid = ?1 "
                      "UNION ALL SELECT MAX(tstamp) FROM logs WHERE projid = ?1)");
    st.bind(1, projid);
    if (!st.step() || st.is_null(0)) return std::nullopt;
    return st.integer(0);
}

void Store::put_build_deps(const std::vector<BuildDepRow>& rows) {
    Transaction tx(db_);
    Statement ins(db_, "INSERT OR REPLACE INTO build_deps VALUES (?,?,?,?,?)");
    for (const auto& row : rows) {
        ins.bind(1, row.vid).bind(2, row.target).bind(3, json_list(row.deps));
        ins.bind(4, json_list(row.cmds)).bind(5, row.cached ? 1 : 0).run();
    }
    tx.commit();
}

std::vector<BuildDepRow> Store::build_deps(const std::string& vid) const {
    std::vector<BuildDepRow> out;
    Statement st(db_, "SELECT vid, target, deps, cmds, cached FROM build_deps WHERE vid = ? "
                      "ORDER BY target");
    st.bind(1, vid);
    while (st.step()) {
        out.push_back({st.text(0), st.text(1), parse_list(st.text(2)), parse_list(st.text(3)),
                       st.integer(4) != 0});
    }
    return out;
}

std::vector<LogRecord> Store::scan(const ScanFilter& filter) const {
    std::string sql = "SELECT projid, tstamp, filename, ctx_id, value_name, value, value_type, seq "
                      "FROM logs" +
                      where_clause(filter);
    if (filter.value_name) sql += " AND value_name = :value_name";
    sql += " ORDER BY tstamp, filename, seq, projid";
    Statement st(db_, sql.c_str());
    bind_filter(st, filter);
    std::vector<LogRecord> out;
    while (st.step()) {
        out.push_back({st.text(0), st.integer(1), st.text(2), st.integer(3), st.text(4),
                       st.text(5), static_cast<ValueType>(st.integer(6)), st.integer(7)});
    }
    return out;
}

std::vector<LoopIteration> Store::loops(const ScanFilter& filter) const {
    std::string sql = "SELECT projid, tstamp, filename, ctx_id, parent_ctx_id, loop_name, "
                      "loop_iteration, iteration_value FROM loops" +
                      where_clause(filter) + " ORDER BY tstamp, filename, ctx_id, projid";
    ScanFilter f = filter;
    f.value_name.reset();
    Statement st(db_, sql.c_str());
    bind_filter(st, f);
    std::vector<LoopIteration> out;
    while (st.step()) {
        out.push_back({st.text(0), st.integer(1), st.text(2), st.integer(3), st.integer(4),
                       st.text(5), st.integer(6), st.text(7)});
    }
    return out;
}

std::vector<BlobEntry> Store::blob_entries(const ScanFilter& filter) const {
    std::string sql =
        "SELECT projid, tstamp, filename, ctx_id, value_name, hash FROM obj_store" +
        where_clause(filter);
    if (filter.value_name) sql += " AND value_name = :value_name";
    sql += " ORDER BY tstamp, filename, ctx_id, value_name";
    Statement st(db_, sql.c_str());
    bind_filter(st, filter);
    std::vector<BlobEntry> out;
    while (st.step()) {
        out.push_back(
            {st.text(0), st.integer(1), st.text(2), st.integer(3), st.text(4), st.text(5)});
    }
    return out;
}

std::vector<ArgRecord> Store::args(Timestamp tstamp, const std::string& filename,
                                   const std::string& projid) const {
    ScanFilter f;
    f.projid = projid;
    f.tstamp = tstamp;
    f.filename = filename;
    return args_from_records(scan(f));
}

StoreSnapshot Store::snapshot(const std::optional<std::string>& projid) const {
    ScanFilter f;
    f.projid = projid;
    return {scan(f), loops(f), intervals(projid)};
}

std::vector<std::string> Store::audit() const {
    std::vector<std::string> problems;
    Statement dangling(db_, "SELECT l.projid, l.tstamp, l.filename, l.ctx_id, l.value_name "
                            "FROM logs l LEFT JOIN loops p ON p.projid = l.projid AND "
                            "p.tstamp = l.tstamp AND p.filename = l.filename AND "
                            "p.ctx_id = l.ctx_id WHERE l.ctx_id > 0 AND p.ctx_id IS NULL");
    while (dangling.step()) {
        problems.push_back("log '" + dangling.text(4) + "' at " + dangling.text(2) + "@" +
                           std::to_string(dangling.integer(1)) + " has dangling ctx_id " +
                           std::to_string(dangling.integer(3)));
    }
    Statement parents(db_, "SELECT c.filename, c.tstamp, c.ctx_id, c.parent_ctx_id FROM loops c "
                           "LEFT JOIN loops p ON p.projid = c.projid AND p.tstamp = c.tstamp AND "
                           "p.filename = c.filename AND p.ctx_id = c.parent_ctx_id "
                           "WHERE c.parent_ctx_id <> 0 AND (p.ctx_id IS NULL OR "
                           "c.parent_ctx_id >= c.ctx_id)");
    while (parents.step()) {
        problems.push_back("loop ctx " + std::to_string(parents.integer(2)) + " at " +
                           parents.text(0) + "@" + std::to_string(parents.integer(1)) +
                           " has invalid parent " + std::to_string(parents.integer(3)));
    }
    Statement blobs(db_, "SELECT value, value_name FROM logs WHERE value_type = 4");
    while (blobs.step()) {
        if (!blobs_.contains(blobs.text(0))) {
            problems.push_back("blob " + blobs.text(0) + " of '" + blobs.text(1) + "' is missing");
        }
    }
    return problems;
}

// ---------------------------------------------------------------------------

std::vector<ArgRecord> args_from_records(const std::vector<LogRecord>& records) {
    std::map<std::tuple<std::string, Timestamp, std::string, std::string>, ArgRecord> by_key;
    std::vector<std::tuple<std::string, Timestamp, std::string, std::string>> order;
    for (const auto& r : records) {
        if (!r.value_name.starts_with(kArgPrefix)) continue;
        std::string name = r.value_name.substr(kArgPrefix.size());
        bool is_source = name.ends_with(kArgSourceSuffix);
        if (is_source) name.resize(name.size() - kArgSourceSuffix.size());
        auto key = std::make_tuple(r.projid, r.tstamp, r.filename, name);
        auto [it, inserted] = by_key.try_emplace(key);
        if (inserted) {
            order.push_back(key);
            it->second = {r.projid, r.tstamp, r.filename, name, "", true};
        }
        if (is_source) {
            it->second.was_default = r.value == "default";
        } else {
            it->second.value = r.value;
        }
    }
    std::vector<ArgRecord> out;
    for (const auto& key : order) out.push_back(by_key.at(key));
    return out;
}

} // namespace flor
