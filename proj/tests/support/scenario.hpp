#pragma once

#include "flor/project.hpp"
#include "flor/query.hpp"
#include "flor/runner.hpp"
#include "support/support.hpp"

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace testsupport {

inline const std::string kRecallLine = "        flor.log(\"recall\", recall)\n";

// Training project with three committed runs of `train`; recall is logged only
// from the third version on. The working tree ends equal to the third version.
struct ThreeVersions {
    TempDir tmp;
    fs::path dir;
    std::optional<flor::Project> project;
    std::vector<flor::RunReport> runs;

    explicit ThreeVersions(bool cached) {
        dir = copy_fixture("training", tmp.path() / "proj");
        std::string makefile = read_text(dir / "Makefile");
        if (!cached) replace_all(makefile, " # flor:cached", "");
        write_text(dir / "Makefile", makefile);
        std::string full = read_text(dir / "train.py");
        std::string without = drop_lines_containing(full, "flor.log(\"recall\"");
        write_text(dir / "train.py", without);

        flor::InitOptions opts;
        opts.projid = "demo";
        opts.clock = flor::ClockMode::Logical;
        project.emplace(flor::Project::init(dir, opts));

        run_once();
        std::string v2 = without;
        replace_all(v2, "STEPS = 2\n", "STEPS = 2\nWARMUP = 0\n");
        write_text(dir / "train.py", v2);
        settle();
        run_once();
        std::string v3 = v2;
        replace_all(v3, "        flor.log(\"acc\", acc)\n", "        flor.log(\"acc\", acc)\n" + kRecallLine);
        write_text(dir / "train.py", v3);
        settle();
        run_once();
    }

    void run_once() {
        flor::RunOptions o;
        o.step_log = tmp.path() / "steps.log";
        runs.push_back(flor::run(*project, "train", o));
        if (!runs.back().ok()) throw std::runtime_error("fixture run failed");
    }

    std::size_t null_recall_intervals() {
        flor::PivotTable df = flor::dataframe(project->store().snapshot(), {"acc", "recall"});
        std::set<std::string> ts;
        std::size_t col = df.column("recall"), tcol = df.column("tstamp");
        for (const auto& row : df.rows) {
            if (!row[col]) ts.insert(*row[tcol]);
        }
        return ts.size();
    }
};

} // namespace testsupport
