#include "flor/buildspec.hpp"
#include "flor/error.hpp"
#include "support/support.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace flor;
namespace fs = std::filesystem;
using namespace testsupport;

namespace {

// The training pipeline exactly as drawn, with tab-indented recipes.
const std::string kFigureFour =
    "# Makefile\n\nprep:\n\tpython prep.py\n\ninfer: prep\n\tpython infer.py\n\n"
    "run: infer\n\tflask run\n\ntrain: prep\n\tpython train.py\n";

std::vector<std::string> names(const BuildGraph& g) {
    std::vector<std::string> out;
    for (const auto& t : g.targets) out.push_back(t.name);
    return out;
}

std::vector<std::string> make_dry_run(const fs::path& dir, const std::string& goal) {
    auto r = run_capture({"make", "-n", "--no-print-directory", goal}, dir, {{"MAKEFLAGS", std::nullopt}});
    REQUIRE_MESSAGE(r.exit_code == 0, r.err);
    std::vector<std::string> lines;
    std::istringstream in(r.out);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("make:", 0) == 0 || line.rfind("make[", 0) == 0) continue;
        lines.push_back(line);
    }
    return lines;
}

// The recipe lines flor would execute, expanded as make echoes them.
std::vector<std::string> flor_dry_run(const fs::path& dir, const std::string& goal) {
    BuildGraph g = parse_makefile(read_text(dir / "Makefile"));
    std::vector<std::string> lines;
    for (const auto& name : stale_targets(g, filesystem_mtimes(dir), goal)) {
        const BuildTarget& t = g.at(name);
        for (const auto& c : t.cmds) lines.push_back(expand_recipe(g, t, c.text));
    }
    return lines;
}

std::set<std::string> stale_set(const fs::path& dir, const std::string& goal) {
    BuildGraph g = parse_makefile(read_text(dir / "Makefile"));
    auto v = stale_targets(g, filesystem_mtimes(dir), goal);
    return {v.begin(), v.end()};
}

void set_mtime(const fs::path& p, int seconds_offset) {
    if (!fs::exists(p)) write_text(p, "");
    fs::last_write_time(p, fs::file_time_type::clock::now() - std::chrono::hours(1) +
                               std::chrono::seconds(seconds_offset));
}

} // namespace

TEST_CASE("parses the training pipeline Makefile") {
    BuildGraph g = parse_makefile(kFigureFour, "v1");
    CHECK(g.vid == "v1");
    CHECK(names(g) == std::vector<std::string>{"prep", "infer", "run", "train"});
    CHECK(g.default_target == "prep");
    CHECK(g.at("infer").deps == std::vector<std::string>{"prep"});
    CHECK(g.at("train").deps == std::vector<std::string>{"prep"});
    REQUIRE(g.at("run").cmds.size() == 1);
    CHECK(g.at("run").cmds[0].text == "flask run");
    CHECK_FALSE(g.at("run").cmds[0].silent);
    CHECK(topo_order(g, "run") == std::vector<std::string>{"prep", "infer", "run"});
}

TEST_CASE("variables expand in prerequisites and recipes") {
    std::string text = "PDFS = docs/a.pdf ${EXTRA}\nEXTRA = docs/b.pdf\n"
                       "process: $(PDFS) demux.py\n\t@python3 $< --out $@ $^ $$HOME\n";
    // EXTRA is defined before the rule line, so it is visible when prerequisites expand.
    BuildGraph g = parse_makefile(text);
    const BuildTarget& t = g.at("process");
    CHECK(t.deps == std::vector<std::string>{"docs/a.pdf", "docs/b.pdf", "demux.py"});
    CHECK(t.cmds[0].silent);
    CHECK(expand_recipe(g, t, t.cmds[0].text) ==
          "python3 docs/a.pdf --out process docs/a.pdf docs/b.pdf demux.py $HOME");
}

TEST_CASE("cached directive and build_deps rows") {
    BuildGraph g = parse_makefile("train: prep.py # flor:cached\n\tpython3 train.py\n\t@touch train\n", "v9");
    CHECK(g.at("train").cached);
    auto rows = to_build_deps(g);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].vid == "v9");
    CHECK(rows[0].cached);
    CHECK(rows[0].cmds == std::vector<std::string>{"python3 train.py", "@touch train"});
}

TEST_CASE("unsupported constructs are rejected, not guessed") {
    const char* bad[] = {
        "%.o: %.c\n\tcc $<\n",
        "include other.mk\n",
        "X ?= 1\n",
        "X += 1\n",
        "X := 1\n",
        "X != ls\n",
        "a:: b\n",
        "a: b ; echo hi\n",
        "a: | b\n",
        "a b: c\n",
        ".PHONY: a\n",
        "a:\n\t-rm x\n",
        "a:\n\t+make x\n",
        "a:\n\techo \\\n",
        "a:\n\techo $(shell ls)\n",
        "ifeq (a,b)\nendif\n",
    };
    for (const char* text : bad) {
        INFO(text);
        CHECK_THROWS_AS(parse_makefile(text), UnsupportedConstruct);
    }
}

TEST_CASE("structural errors") {
    CHECK_THROWS_AS(parse_makefile("a:\n\techo 1\na:\n\techo 2\n"), ParseError);
    CHECK_THROWS_AS(parse_makefile("\techo orphan\n"), ParseError);
    CHECK_THROWS_AS(parse_makefile("just words\n"), ParseError);
    try {
        parse_makefile("a: b\nb: a\n");
        FAIL("expected a cycle");
    } catch (const CycleError& e) {
        CHECK(e.cycle() == "a -> b -> a");
    }
}

TEST_CASE("property: print then parse is the identity") {
    std::mt19937 rng(5);
    for (int iter = 0; iter < 100; ++iter) {
        BuildGraph g;
        int n = 1 + static_cast<int>(rng() % 6);
        if (rng() % 2) g.variables.push_back({"SRC", "x.py y.py"});
        for (int i = 0; i < n; ++i) {
            BuildTarget t;
            t.name = "t" + std::to_string(i);
            for (int j = 0; j < i; ++j) {
                if (rng() % 2) t.deps.push_back("t" + std::to_string(j));
            }
            if (rng() % 3 == 0) t.deps.push_back("src" + std::to_string(i) + ".py");
            int ncmd = static_cast<int>(rng() % 3);
            for (int c = 0; c < ncmd; ++c) t.cmds.push_back({"echo " + std::to_string(c) + " $@", rng() % 2 == 0});
            t.cached = rng() % 4 == 0;
            g.targets.push_back(t);
        }
        g.default_target = "t0";
        CHECK(parse_makefile(print_makefile(g)) == g);
    }
}

TEST_CASE("staleness follows make semantics on synthetic mtimes") {
    BuildGraph g = parse_makefile("a: a.py\n\tx\nb: a b.py\n\tx\nc: b\n\tx\n");
    std::map<std::string, int> t = {{"a.py", 1}, {"b.py", 1}, {"a", 2}, {"b", 3}, {"c", 4}};
    auto lookup = [&](const std::string& p) -> std::optional<FileTime> {
        auto it = t.find(p);
        if (it == t.end()) return std::nullopt;
        return FileTime(std::chrono::seconds(it->second));
    };
    CHECK(stale_targets(g, lookup, "c").empty());
    t["b.py"] = 5;
    CHECK(stale_targets(g, lookup, "c") == std::vector<std::string>{"b", "c"});
    t.erase("a");
    CHECK(stale_targets(g, lookup, "c") == std::vector<std::string>{"a", "b", "c"});
    t.erase("a.py");
    CHECK_THROWS_AS(stale_targets(g, lookup, "c"), NotFound);
}

TEST_CASE("make conformance: pipeline fixture cold, unchanged, and after touch") {
    TempDir tmp;
    fs::path dir = copy_fixture("pdf_parser", tmp.path() / "p");
    CHECK(flor_dry_run(dir, "run") == make_dry_run(dir, "run"));
    CHECK(stale_set(dir, "run").size() == 7);

    auto built = run_capture({"make", "run"}, dir, {{"FLOR_EVENTS", std::nullopt}});
    REQUIRE_MESSAGE(built.exit_code == 0, built.err);
    settle();
    CHECK(flor_dry_run(dir, "run").empty());
    CHECK(make_dry_run(dir, "run").empty());

    settle();
    fs::last_write_time(dir / "featurize.py", fs::file_time_type::clock::now());
    CHECK(flor_dry_run(dir, "run") == make_dry_run(dir, "run"));
    CHECK(stale_set(dir, "run") == std::set<std::string>{"featurize", "train", "model.pth", "infer", "run"});
}

TEST_CASE("make conformance: training pipeline as drawn") {
    TempDir tmp;
    write_text(tmp.path() / "Makefile", kFigureFour);
    for (const char* goal : {"prep", "infer", "run", "train"}) {
        CHECK(flor_dry_run(tmp.path(), goal) == make_dry_run(tmp.path(), goal));
    }
    // Markers nobody creates keep every target stale under both engines.
    CHECK(flor_dry_run(tmp.path(), "run") == std::vector<std::string>{"python prep.py", "python infer.py", "flask run"});
}

TEST_CASE("property: make conformance over random file states") {
    TempDir tmp;
    fs::path dir = copy_fixture("pdf_parser", tmp.path() / "p");
    BuildGraph g = parse_makefile(read_text(dir / "Makefile"));
    std::vector<std::string> files;
    for (const auto& t : g.targets) {
        for (const auto& d : t.deps) {
            if (!g.has_target(d)) files.push_back(d);
        }
    }
    std::mt19937 rng(99);
    for (int iter = 0; iter < 25; ++iter) {
        for (const auto& f : files) set_mtime(dir / f, static_cast<int>(rng() % 20));
        for (const auto& t : g.targets) {
            if (rng() % 4 == 0) {
                fs::remove(dir / t.name);
            } else {
                set_mtime(dir / t.name, static_cast<int>(rng() % 20));
            }
        }
        for (const auto& t : g.targets) {
            INFO("iteration " << iter << " goal " << t.name);
            CHECK(flor_dry_run(dir, t.name) == make_dry_run(dir, t.name));
        }
    }
}
