#include "flor/error.hpp"
#include "flor/store.hpp"
#include "support/support.hpp"

#include <doctest.h>

#include <random>

using namespace flor;
namespace fs = std::filesystem;

namespace {

RunWriter featurize_writer(BlobStore& blobs) {
    RunWriter w("demo", blobs);
    CtxId next = 1;
    for (const char* doc : {"a.pdf", "b.pdf"}) {
        CtxId d = next++;
        w.put_loop({"", 0, "featurize.py", d, 0, "document", d == 1 ? 0 : 1, doc});
        for (int p = 0; p < 2; ++p) {
            CtxId c = next++;
            w.put_loop({"", 0, "featurize.py", c, d, "page", p, std::to_string(p)});
            w.log("featurize.py", c, "text_src", std::string(p == 0 ? "TXT" : "OCR"));
            w.log("featurize.py", c, "page_numbers", std::int64_t{p + 1});
        }
    }
    return w;
}

} // namespace

TEST_CASE("RunWriter enforces referential integrity") {
    testsupport::TempDir tmp;
    BlobStore blobs(tmp.path() / "objects");
    RunWriter w("p", blobs);
    CHECK_THROWS_AS(w.log("f.py", 3, "x", std::int64_t{1}), IntegrityError);
    w.put_loop({"", 0, "f.py", 1, 0, "epoch", 0, "0"});
    CHECK_THROWS_AS(w.put_loop({"", 0, "f.py", 1, 0, "epoch", 1, "1"}), IntegrityError);
    CHECK_THROWS_AS(w.put_loop({"", 0, "f.py", 2, 7, "step", 0, "0"}), IntegrityError);
    CHECK_THROWS_AS(w.put_loop({"", 0, "f.py", 0, 0, "epoch", 0, "0"}), IntegrityError);
    LogRecord bad;
    bad.filename = "f.py";
    bad.value_name = "m";
    bad.value = std::string(64, 'a');
    bad.value_type = ValueType::BlobRef;
    CHECK_THROWS_AS(w.put_record(bad), IntegrityError);
    // The same ctx id is independent per filename.
    CHECK_NOTHROW(w.put_loop({"", 0, "g.py", 1, 0, "epoch", 0, "0"}));
}

TEST_CASE("sequence numbers increase per filename") {
    testsupport::TempDir tmp;
    BlobStore blobs(tmp.path() / "objects");
    RunWriter w("p", blobs);
    CHECK(w.log("a.py", 0, "x", std::int64_t{1}) == 1);
    CHECK(w.log("b.py", 0, "x", std::int64_t{1}) == 1);
    CHECK(w.log("a.py", 0, "y", std::int64_t{1}) == 2);
    w.seed_sequence("a.py", 10);
    CHECK(w.log("a.py", 0, "z", std::int64_t{1}) == 11);
}

TEST_CASE("run files round trip byte-exactly") {
    testsupport::TempDir tmp;
    BlobStore blobs(tmp.path() / "objects");
    RunWriter w = featurize_writer(blobs);
    w.put_blob_record("featurize.py", 1, "model", "weights");
    RunFile f = RunFile::from_writer(w, RunFile::Kind::Commit, 7);
    CHECK(f.records.size() == 9);
    CHECK(f.blobs.size() == 1);
    for (const auto& r : f.records) CHECK(r.tstamp == 7);
    std::string text = f.serialize();
    RunFile g = RunFile::parse(text);
    CHECK(g.serialize() == text);
    CHECK(g.records == f.records);
    CHECK(g.loops == f.loops);
    CHECK(g.blobs == f.blobs);
    CHECK_THROWS(RunFile::parse("{\"format\": 99}"));
}

TEST_CASE("store indexes run files and rebuilds identically") {
    testsupport::TempDir tmp;
    StoreSnapshot before;
    {
        Store store(tmp.path() / ".flor");
        RunWriter w = featurize_writer(store.blobs());
        auto path = store.write_run_file(RunFile::from_writer(w, RunFile::Kind::Commit, 2));
        CHECK(store.index_stale());
        store.index_run_file(path);
        CHECK_FALSE(store.index_stale());
        store.upsert_interval({"demo", 1, 2, "abc", "run"});

        ScanFilter f;
        f.value_name = "text_src";
        auto rows = store.scan(f);
        REQUIRE(rows.size() == 4);
        CHECK(rows[0].value == "TXT");
        CHECK(store.loops().size() == 6);
        CHECK(store.last_tstamp("demo") == 2);
        CHECK_FALSE(store.last_tstamp("nobody").has_value());
        CHECK(store.audit().empty());
        before = store.snapshot();
    }
    fs::remove(tmp.path() / ".flor" / "index.db");
    Store again(tmp.path() / ".flor");
    CHECK(again.index_stale());
    again.rebuild({{"demo", 1, 2, "abc", "run"}}, {});
    StoreSnapshot after = again.snapshot();
    CHECK(after.records == before.records);
    CHECK(after.loops == before.loops);
    CHECK(after.intervals == before.intervals);
}

TEST_CASE("intervals never overlap and resolve by containment") {
    testsupport::TempDir tmp;
    Store store(tmp.path() / ".flor");
    store.upsert_interval({"p", 1, 3, "v1", "run"});
    store.upsert_interval({"p", 5, 5, "v2", "train"});
    CHECK_THROWS_AS(store.upsert_interval({"p", 3, 4, "v3", "run"}), IntegrityError);
    CHECK_THROWS_AS(store.upsert_interval({"p", 6, 4, "v3", "run"}), IntegrityError);
    // Extending an interval keeps its start.
    store.upsert_interval({"p", 5, 8, "v2b", "train"});
    CHECK(store.intervals("p").size() == 2);
    CHECK(store.resolve("p", 2)->vid == "v1");
    CHECK(store.resolve("p", 7)->vid == "v2b");
    CHECK_FALSE(store.resolve("p", 4).has_value());
    CHECK_FALSE(store.resolve("p", 0).has_value());
    CHECK_FALSE(store.resolve("q", 2).has_value());
}

TEST_CASE("args are grouped with their source") {
    testsupport::TempDir tmp;
    BlobStore blobs(tmp.path());
    RunWriter w("p", blobs);
    w.log("train.py", 0, "arg::hidden", std::string("200"));
    w.log("train.py", 0, "arg::hidden::source", std::string("cli"));
    w.log("train.py", 0, "arg::epochs", std::string("5"));
    w.log("train.py", 0, "arg::epochs::source", std::string("default"));
    w.log("train.py", 0, "loss", 0.5);
    auto args = args_from_records(RunFile::from_writer(w, RunFile::Kind::Commit, 4).records);
    REQUIRE(args.size() == 2);
    std::map<std::string, ArgRecord> by;
    for (const auto& a : args) by[a.name] = a;
    CHECK(by["hidden"].value == "200");
    CHECK_FALSE(by["hidden"].was_default);
    CHECK(by["epochs"].was_default);
    CHECK(by["epochs"].tstamp == 4);
}

TEST_CASE("property: scan returns every written record in emission order") {
    testsupport::TempDir tmp;
    Store store(tmp.path() / ".flor");
    std::mt19937 rng(11);
    std::vector<LogRecord> expected;
    for (Timestamp t = 1; t <= 20; ++t) {
        RunWriter w("p", store.blobs());
        int n = static_cast<int>(rng() % 15);
        for (int i = 0; i < n; ++i) {
            std::string file = rng() % 2 ? "a.py" : "b.py";
            w.log(file, 0, "v" + std::to_string(rng() % 3), static_cast<std::int64_t>(rng() % 100));
        }
        RunFile f = RunFile::from_writer(w, RunFile::Kind::Commit, t);
        store.index_run_file(store.write_run_file(f));
        std::vector<LogRecord> recs = f.records;
        std::stable_sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) {
            return std::tie(a.filename, a.seq) < std::tie(b.filename, b.seq);
        });
        expected.insert(expected.end(), recs.begin(), recs.end());
    }
    CHECK(store.scan() == expected);
}
