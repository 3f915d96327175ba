#include "flor/error.hpp"
#include "flor/replay.hpp"
#include "support/scenario.hpp"

#include <doctest.h>

using namespace flor;
using namespace testsupport;

TEST_CASE("recognising logging statements") {
    CHECK(logs_name("    flor.log(\"recall\", recall)", "recall"));
    CHECK(logs_name("flor.log('recall', r)  # note", "recall"));
    CHECK(logs_name("x = flor.arg(\"hidden\", 500)", "hidden"));
    CHECK_FALSE(logs_name("flor.log(\"recall_at_k\", r)", "recall"));
    CHECK_FALSE(logs_name("# flor.log(\"recall\", r)", "recall"));
    CHECK_FALSE(logs_name("print(\"recall\")", "recall"));
    CHECK(logs_name("flor.log(\"recall\", \"#1\")", "recall"));
    CHECK_FALSE(logs_name("x = \"#\"  # flor.log(\"recall\", r)", "recall"));
    CHECK(is_logging_statement("  flor.log(\"acc\", acc)"));
    CHECK_FALSE(is_logging_statement("acc = 1"));
    CHECK(strip_logging("a = 1\nflor.log(\"x\", a)\nflor.log(\"y\", a)\n", {"x"}) == "a = 1\nflor.log(\"y\", a)\n");
}

TEST_CASE("logging diff of the working tree") {
    TempDir tmp;
    fs::path dir = copy_fixture("training", tmp.path() / "proj");
    InitOptions opts;
    opts.projid = "demo";
    Project p = Project::init(dir, opts);
    RunWriter w("demo", p.store().blobs());
    w.log("train.py", 0, "x", TypedValue{std::int64_t{1}});
    p.commit(w, "train");

    CHECK(logging_diff(p, "train.py").empty());
    std::string src = read_text(dir / "train.py");

    std::string spaced = src;
    replace_all(spaced, "STEPS = 2", "STEPS  =  2   ");
    write_text(dir / "train.py", spaced);
    CHECK(logging_diff(p, "train.py").empty());

    std::string added = src;
    replace_all(added, "        flor.log(\"acc\", acc)\n", "        flor.log(\"acc\", acc)\n        flor.log(\"f1\", acc)\n");
    write_text(dir / "train.py", added);
    LoggingDiff d = logging_diff(p, "train.py");
    CHECK(d.hunks.size() == 1);
    CHECK(d.warnings.empty());
    CHECK(d.text.find("+        flor.log(\"f1\", acc)") != std::string::npos);

    write_text(dir / "train.py", added + "print('side effect')\n");
    CHECK(logging_diff(p, "train.py").warnings.size() == 1);

    write_text(dir / "scratch.py", "x\n");
    CHECK_THROWS_AS(logging_diff(p, "scratch.py"), NotFound);
}

TEST_CASE("full replay backfills older versions") {
    ThreeVersions s(false);
    CHECK(s.null_recall_intervals() == 2);
    ReplayPlan pl = plan(*s.project, {"recall"});
    REQUIRE(pl.work.size() == 2);
    CHECK(pl.conflicts.empty());
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(pl.work[i].target == "train");
        CHECK(pl.work[i].filename == "train.py");
        CHECK(pl.work[i].mode == ReplayMode::Full);
        CHECK(pl.work[i].tstamp == s.runs[i].executed.back().tstamp);
        CHECK(pl.work[i].merged_source.find("flor.log(\"recall\", recall)") != std::string::npos);
    }
    CHECK(pl.work[1].merged_source.find("WARMUP") != std::string::npos);
    CHECK(pl.work[0].merged_source.find("WARMUP") == std::string::npos);
    bool v3_skipped = false;
    for (const auto& sk : pl.skipped) {
        v3_skipped = v3_skipped || (sk.reason == SkipReason::AlreadyPresent && sk.tstamp == s.runs[2].executed.back().tstamp);
    }
    CHECK(v3_skipped);
    CHECK(format_plan(pl).find("full") != std::string::npos);

    auto before = s.project->store().scan();
    ReplayOptions o;
    o.step_log = s.tmp.path() / "replay.log";
    ReplayReport rep = execute(*s.project, pl, o);
    REQUIRE(rep.ok());
    CHECK(rep.records_added == 10);
    CHECK(s.null_recall_intervals() == 0);

    // Additions only: every pre-replay record survives unchanged.
    auto after = s.project->store().scan();
    for (const auto& r : before) CHECK(std::find(after.begin(), after.end(), r) != after.end());

    PivotTable df = dataframe(s.project->store().snapshot(), {"acc", "recall"});
    CHECK(df.rows.size() == 15);
    CHECK(df.rows[3][df.column("recall")] == "0.8");

    CHECK(plan(*s.project, {"recall"}).work.empty());
}

TEST_CASE("cached steps resume from the last checkpoint") {
    ThreeVersions s(true);
    ReplayPlan pl = plan(*s.project, {"recall"});
    REQUIRE(pl.work.size() == 2);
    for (const auto& w : pl.work) {
        CHECK(w.mode == ReplayMode::Resume);
        CHECK(w.resume_loop == "epoch");
        CHECK(w.resume_iteration == 4);
        CHECK(w.resume_ctx == 13);
        CHECK_FALSE(w.checkpoints.empty());
    }
    ReplayReport rep = execute(*s.project, pl, {});
    REQUIRE(rep.ok());
    for (const auto& item : rep.items) CHECK(item.iterations_executed == 1);
    // Fast-forwarded epochs re-emit recall from restored state.
    CHECK(rep.records_added == 10);
    CHECK(s.null_recall_intervals() == 0);
}

TEST_CASE("scope limits and conflicts") {
    ThreeVersions s(false);
    ReplayScope empty{Timestamp{100}, Timestamp{50}};
    ReplayPlan none = plan(*s.project, {"recall"}, empty);
    CHECK(none.work.empty());
    ReplayReport rep = execute(*s.project, none, {});
    CHECK(rep.ok());
    CHECK(rep.records_added == 0);
    CHECK(rep.vid.empty());

    ReplayScope first_only{std::nullopt, s.runs[0].executed.back().tstamp};
    CHECK(plan(*s.project, {"recall"}, first_only).work.size() == 1);

    // The line next to the new log statement differs from the historical versions.
    std::string src = read_text(s.dir / "train.py");
    replace_all(src, "flor.log(\"acc\", acc)", "flor.log(\"accuracy\", acc)");
    write_text(s.dir / "train.py", src);
    ReplayPlan conflicted = plan(*s.project, {"recall"});
    CHECK_FALSE(conflicted.conflicts.empty());

    CHECK_THROWS_AS(plan(*s.project, {"nonexistent_name"}), Error);
}
