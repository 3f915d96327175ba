#include "flor/error.hpp"
#include "flor/events.hpp"
#include "support/support.hpp"

#include <doctest.h>

#include <random>

using namespace flor;
using namespace testsupport;

namespace {

Event ev(EventKind k, std::string n, std::string v = {}) { return Event{k, std::move(n), std::move(v), std::nullopt}; }

// Featurization over 2 documents by 2 pages, four names per page.
std::vector<Event> featurize_stream() {
    std::vector<Event> out;
    out.push_back(ev(EventKind::LoopBegin, "document"));
    for (const char* doc : {"a.pdf", "b.pdf"}) {
        out.push_back(ev(EventKind::IterBegin, "document", doc));
        out.push_back(ev(EventKind::LoopBegin, "page"));
        for (int page = 0; page < 2; ++page) {
            out.push_back(ev(EventKind::IterBegin, "page", std::to_string(page)));
            out.push_back(ev(EventKind::Log, "text_src", page == 1 ? "OCR" : "TXT"));
            out.push_back(ev(EventKind::Log, "page_text", "body"));
            out.push_back(ev(EventKind::Log, "headings", "Intro"));
            out.push_back(ev(EventKind::Log, "page_numbers", std::to_string(page + 1)));
            out.push_back(ev(EventKind::IterEnd, "page"));
        }
        out.push_back(ev(EventKind::LoopEnd, "page"));
        out.push_back(ev(EventKind::IterEnd, "document"));
    }
    out.push_back(ev(EventKind::LoopEnd, "document"));
    return out;
}

struct Harness {
    TempDir tmp;
    BlobStore blobs{tmp.path() / "objects"};
    RunWriter writer{"p", blobs};
    EventIngestor ingestor;
    explicit Harness(IngestOptions opts = {}) : ingestor(writer, "featurize.py", std::move(opts)) {}
    void feed(const std::vector<Event>& events) {
        for (const auto& e : events) ingestor.ingest(e);
        ingestor.finish(true);
    }
};

} // namespace

TEST_CASE("wire format round trip") {
    Event e{EventKind::Log, "acc", "0.75", 2};
    std::string line = serialize_event(e);
    CHECK(line == R"({"k":"log","n":"acc","v":"0.75","t":2})");
    CHECK(parse_event(line, 1) == e);
    CHECK(serialize_event(ev(EventKind::IterBegin, "page", "0")) == R"({"k":"iter_begin","n":"page","v":"0"})");
    CHECK_THROWS_AS(parse_event("{not json", 3), ProtocolError);
    CHECK_THROWS_AS(parse_event(R"({"k":"bogus","n":"x","v":""})", 3), ProtocolError);
    CHECK_THROWS_AS(parse_event(R"({"k":"log","n":"x","v":"1","t":9})", 3), ProtocolError);
}

TEST_CASE("featurization stream yields six contexts and sixteen records") {
    Harness h;
    h.feed(featurize_stream());
    const auto& loops = h.writer.loops();
    REQUIRE(loops.size() == 6);
    CHECK(h.writer.records().size() == 16);

    std::vector<std::pair<std::string, CtxId>> shape;
    for (const auto& l : loops) shape.emplace_back(l.loop_name, l.parent_ctx_id);
    CHECK(shape == std::vector<std::pair<std::string, CtxId>>{
                       {"document", 0}, {"page", 1}, {"page", 1}, {"document", 0}, {"page", 4}, {"page", 4}});
    for (std::size_t i = 0; i < loops.size(); ++i) CHECK(loops[i].ctx_id == static_cast<CtxId>(i + 1));
    CHECK(loops[0].iteration_value == "a.pdf");
    CHECK(loops[5].loop_iteration == 1);

    const auto& first = h.writer.records()[0];
    CHECK(first.value_name == "text_src");
    CHECK(first.ctx_id == 2);
    CHECK(first.seq == 1);
    CHECK(h.writer.records()[4].value == "OCR");
    CHECK(h.writer.records()[4].ctx_id == 3);
    for (std::size_t i = 0; i < h.writer.records().size(); ++i) {
        CHECK(h.writer.records()[i].seq == static_cast<std::int64_t>(i + 1));
    }
    CHECK(h.ingestor.stats().iterations == 6);
    CHECK(h.ingestor.stats().outer_iterations == std::vector<std::int64_t>{0, 1});
}

TEST_CASE("property: ctx assignment is deterministic and follows begin order") {
    std::mt19937 rng(21);
    for (int iter = 0; iter < 100; ++iter) {
        std::vector<Event> events;
        std::size_t begins = 0;
        std::function<void(int)> gen = [&](int depth) {
            std::string name = "L" + std::to_string(depth);
            events.push_back(ev(EventKind::LoopBegin, name));
            std::size_t n = rng() % 3;
            for (std::size_t i = 0; i < n; ++i) {
                events.push_back(ev(EventKind::IterBegin, name, std::to_string(i)));
                ++begins;
                if (rng() % 2) events.push_back(ev(EventKind::Log, "v", std::to_string(rng() % 9)));
                if (depth < 3 && rng() % 2) gen(depth + 1);
                events.push_back(ev(EventKind::IterEnd, name));
            }
            events.push_back(ev(EventKind::LoopEnd, name));
        };
        gen(1);
        Harness a;
        a.feed(events);
        Harness b;
        b.feed(events);
        CHECK(a.writer.loops() == b.writer.loops());
        CHECK(a.writer.records() == b.writer.records());
        REQUIRE(a.writer.loops().size() == begins);
        for (std::size_t i = 0; i < begins; ++i) {
            const auto& l = a.writer.loops()[i];
            CHECK(l.ctx_id == static_cast<CtxId>(i + 1));
            CHECK(l.parent_ctx_id < l.ctx_id);
        }
    }
}

TEST_CASE("file scope and nesting violations") {
    Harness h;
    h.ingestor.ingest(Event{EventKind::Log, "seed", "7", 1});
    CHECK(h.writer.records().back().ctx_id == 0);
    CHECK(h.writer.records().back().value_type == ValueType::Int);

    CHECK_THROWS_AS(h.ingestor.ingest(ev(EventKind::IterEnd, "epoch")), ProtocolError);
    Harness h2;
    h2.ingestor.ingest(ev(EventKind::LoopBegin, "epoch"));
    CHECK_THROWS_AS(h2.ingestor.ingest(ev(EventKind::IterBegin, "step", "0")), ProtocolError);
    Harness h3;
    h3.ingestor.ingest(ev(EventKind::LoopBegin, "epoch"));
    CHECK_THROWS_AS(h3.ingestor.ingest(ev(EventKind::Log, "x", "1")), ProtocolError);
    Harness h4;
    h4.ingestor.ingest(ev(EventKind::LoopBegin, "epoch"));
    h4.ingestor.ingest(ev(EventKind::IterBegin, "epoch", "0"));
    CHECK_NOTHROW(h4.ingestor.finish(false));
    CHECK_THROWS_AS(h4.ingestor.finish(true), ProtocolError);
    Harness h5;
    CHECK_THROWS_AS(h5.ingestor.ingest(ev(EventKind::Log, "run::status", "ok")), ProtocolError);
    h5.ingestor.ingest(ev(EventKind::Arg, "lr", "0.001"));
    CHECK_THROWS_AS(h5.ingestor.ingest(ev(EventKind::Arg, "lr", "0.001")), ProtocolError);
}

TEST_CASE("checkpoint policy") {
    for (std::int64_t i = 0; i < 5; ++i) CHECK(checkpoint_policy(1, i));
    CHECK_FALSE(checkpoint_policy(2, 0));
    CHECK_FALSE(checkpoint_policy(3, 7));
    CHECK_FALSE(checkpoint_policy(0, 0));
}

TEST_CASE("five outer checkpoints are stored, inner ones dropped") {
    Harness h;
    write_text(h.tmp.path() / "ckpt.json", "{\"w\":1}");
    std::string path = (h.tmp.path() / "ckpt.json").string();
    std::vector<Event> events{ev(EventKind::LoopBegin, "epoch")};
    for (int e = 0; e < 5; ++e) {
        events.push_back(ev(EventKind::IterBegin, "epoch", std::to_string(e)));
        events.push_back(ev(EventKind::LoopBegin, "step"));
        events.push_back(ev(EventKind::IterBegin, "step", "0"));
        events.push_back(ev(EventKind::Ckpt, "net", path));
        events.push_back(ev(EventKind::IterEnd, "step"));
        events.push_back(ev(EventKind::LoopEnd, "step"));
        events.push_back(ev(EventKind::Ckpt, "net", path));
        events.push_back(ev(EventKind::IterEnd, "epoch"));
    }
    events.push_back(ev(EventKind::LoopEnd, "epoch"));
    h.feed(events);
    CHECK(h.writer.blob_entries().size() == 5);
    CHECK(h.ingestor.stats().checkpoints_kept == 5);
    CHECK(h.ingestor.stats().checkpoints_dropped == 5);
    CHECK(h.blobs.get(h.writer.blob_entries()[0].hash) == "{\"w\":1}");

    Harness missing;
    missing.ingestor.ingest(ev(EventKind::LoopBegin, "epoch"));
    missing.ingestor.ingest(ev(EventKind::IterBegin, "epoch", "0"));
    CHECK_THROWS_AS(missing.ingestor.ingest(ev(EventKind::Ckpt, "net", (h.tmp.path() / "nope").string())), IoError);
}

TEST_CASE("argument resolution precedence") {
    ArgRecord hist{"p", 1, "train.py", "hidden", "500", true};
    CHECK(arg_resolve("hidden", "500", {}, std::nullopt) == "500");
    CHECK(arg_resolve("hidden", "500", {{"hidden", "200"}}, std::nullopt) == "200");
    CHECK(arg_resolve("hidden", "999", {}, hist) == "500");
    CHECK(arg_resolve("hidden", "999", {{"hidden", "200"}}, hist) == "500");
    CHECK(resolve_arg("hidden", "999", {{"hidden", "200"}}, std::nullopt).source == ArgSource::Cli);
    CHECK(resolve_arg("hidden", "999", {}, hist).source == ArgSource::History);

    IngestOptions opts;
    opts.overrides = {{"epochs", "2"}};
    Harness h(opts);
    h.ingestor.ingest(ev(EventKind::Arg, "epochs", "5"));
    h.ingestor.ingest(ev(EventKind::Arg, "lr", "0.001"));
    auto args = args_from_records(h.writer.records());
    REQUIRE(args.size() == 2);
    CHECK(args[0].name == "epochs");
    CHECK(args[0].value == "2");
    CHECK_FALSE(args[0].was_default);
    CHECK(args[1].was_default);
}
