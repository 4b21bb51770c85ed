#include "ravenbench/error.hpp"
#include "ravenbench/errstats.hpp"
#include "ravenbench/pipeline.hpp"

#include "pipeline/io.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ravenbench;
using namespace ravenbench::pipeline;
namespace fs = std::filesystem;

namespace {

template <class Fn>
ErrorKind kind_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::stage;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const fs::path& root() {
    static const fs::path r = [] {
        const fs::path d = fs::temp_directory_path() / "rb_pipeline";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return r;
}

fs::path write_config(const std::string& name, const std::string& body) {
    const fs::path p = root() / (name + ".toml");
    std::ofstream(p) << body;
    return p;
}

RunConfig small_config(const std::string& name, const std::string& kind, std::uint64_t seed = 0) {
    return load_run_config(write_config(name, "seed = " + std::to_string(seed) +
                                                  "\nitems = 3\nreps = 2\noutput = \"" + name +
                                                  "\"\n[substrate]\nkind = \"" + kind + "\"\n"));
}

// Shared runs; evaluation is the slow part.
struct Runs {
    RunReport lattice, oracle, other_seed;
};

const Runs& runs() {
    static const Runs r = [] {
        Runs x;
        x.lattice = cmd_evaluate(small_config("lattice", "lattice"));
        x.oracle = cmd_evaluate(small_config("oracle", "oracle"));
        x.other_seed = cmd_evaluate(small_config("seed1", "lattice", 1));
        return x;
    }();
    return r;
}

void write_cohort(const fs::path& path, const RunReport& run) {
    // Controls answer everything right; patients copy the lattice's clean choices.
    errstats::ResponseTable t;
    t.n_items = run.total;
    for (int i = 0; i < 20; ++i) {
        errstats::Participant p;
        p.id = "c" + std::to_string(i);
        p.group = "control";
        p.age = 40 + i;
        p.education_years = 10 + i % 5;
        p.premorbid_score = 100 + i;
        p.sex = i % 2 ? "F" : "M";
        for (const auto& item : run.items) p.responses.push_back(item.answer);
        t.rows.push_back(p);
        p.id = "p" + std::to_string(i);
        p.group = "patient";
        p.responses.clear();
        for (const auto& item : run.items) p.responses.push_back(item.vote.choice);
        t.rows.push_back(p);
    }
    errstats::write_cohort_csv(path, t);
}

}  // namespace

TEST(Config, Defaults) {
    const auto cfg = parse_run_config("output = \"out\"\n", "/base");
    EXPECT_EQ(cfg.items, 12);
    EXPECT_EQ(cfg.reps, 50);
    EXPECT_EQ(cfg.substrate.kind, "lattice");
    EXPECT_EQ(cfg.output, fs::path("/base/out"));
    EXPECT_EQ(cfg.grid.m_count, 121);
}

TEST(Config, SectionsParse) {
    const auto cfg = parse_run_config(R"(
seed = 9
items = 6
reps = 4
workers = 2
output = "/abs/out"
[substrate]
kind = "external"
command = ["python3", "adapter.py"]
timeout_seconds = 30
[perturbation]
sigma_min = 1.0
sigma_max = 5.0
brightness_max = 10
[registration]
enabled = false
min_arc = 9
[metrics]
nmi_bins = 32
[psych]
m_count = 61
performance = 0.6
[stats]
alpha = 0.01
cohort = "cohort.csv"
reference_group = "healthy"
)",
                                      "/base");
    EXPECT_EQ(cfg.seed, 9u);
    EXPECT_EQ(cfg.workers, 2);
    EXPECT_EQ(cfg.output, fs::path("/abs/out"));
    EXPECT_EQ(cfg.substrate.command, (std::vector<std::string>{"python3", "adapter.py"}));
    EXPECT_EQ(cfg.perturbation.brightness_max, 10);
    EXPECT_FALSE(cfg.evaluation.register_enabled);
    EXPECT_EQ(cfg.evaluation.registration.corners.min_arc, 9);
    EXPECT_EQ(cfg.evaluation.metrics.nmi_bins, 32);
    EXPECT_EQ(cfg.grid.m_count, 61);
    EXPECT_DOUBLE_EQ(cfg.performance, 0.6);
    EXPECT_DOUBLE_EQ(cfg.alpha, 0.01);
    EXPECT_EQ(cfg.cohort, fs::path("/base/cohort.csv"));
    EXPECT_EQ(cfg.reference_group, "healthy");
}

TEST(Config, Rejections) {
    const std::vector<std::string> bad{
        "items = 3\n",                                          // no output
        "output = \"o\"\nbogus = 1\n",                          // unknown key
        "output = \"o\"\n[substrate]\nflavour = \"x\"\n",       // unknown key in section
        "output = \"o\"\nitems = 2\n",                          // range
        "output = \"o\"\nreps = 0\n",                           // range
        "output = \"o\"\nitems = \"twelve\"\n",                 // type
        "output = \"o\"\n[substrate]\nkind = \"neural\"\n",     // kind
        "output = \"o\"\n[substrate]\nkind = \"external\"\n",   // missing command
        "output = \"o\"\n[registration]\nmin_arc = 8\n",        // range
        "output = \"o\"\n[psych]\nlambda_hi = 0.9\n",           // range
        "output = \"o\"\nseed = \n",                            // syntax
    };
    for (const auto& text : bad) EXPECT_EQ(kind_of([&] { parse_run_config(text, "/"); }), ErrorKind::config) << text;
    EXPECT_EQ(kind_of([] { load_run_config("/nonexistent/run.toml"); }), ErrorKind::config);
}

TEST(ExitCodes, Mapping) {
    EXPECT_EQ(exit_code_for(ErrorKind::config), 2);
    EXPECT_EQ(exit_code_for(ErrorKind::missing_result), 4);
    EXPECT_EQ(exit_code_for(ErrorKind::timeout), 4);
    EXPECT_EQ(exit_code_for(ErrorKind::dimension_mismatch), 4);
    EXPECT_EQ(exit_code_for(ErrorKind::unmasked_pixels_modified), 4);
    EXPECT_EQ(exit_code_for(ErrorKind::external_failure), 4);
    EXPECT_EQ(exit_code_for(ErrorKind::generation), 3);
    EXPECT_EQ(score_line(8, 12), "8 / 12");
}

TEST(ParallelFor, CoversRangeAndRethrowsLowestIndex) {
    std::vector<std::atomic<int>> hits(50);
    parallel_for(50, 4, [&](int i) { ++hits[static_cast<std::size_t>(i)]; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
    try {
        parallel_for(20, 3, [](int i) {
            if (i == 7 || i == 15) throw Error(ErrorKind::io, std::to_string(i));
        });
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "7");
    }
}

TEST(Evaluate, WritesRunDirectory) {
    const auto& r = runs().lattice;
    EXPECT_EQ(r.total, 3);
    for (const char* f : {"config.toml", "manifest.json", "manifest.hash", "votes.csv", "panels.csv", "reps.csv",
                          "trials.csv", "posterior.json", "score.txt", "report.json", "run.log",
                          "items/item_001_image.png", "items/item_001_mask.png", "items/item_003_opt7.png",
                          "items/item_002_inpainted.png"}) {
        EXPECT_TRUE(fs::exists(r.dir / f)) << f;
    }
    EXPECT_FALSE(fs::exists(r.dir / "FAILED"));
    EXPECT_EQ(slurp(r.dir / "score.txt"), score_line(r.correct, r.total) + "\n");
    const auto report = detail::read_json(r.dir / "report.json");
    EXPECT_EQ(report["score"]["total"], 3);
    EXPECT_EQ(report["manifest_hash"], r.manifest_hash);
    ASSERT_EQ(r.trials.size(), 3u);
    for (const auto& t : r.trials) EXPECT_EQ(t.n, 2);
    // Header plus 3 items x 2 reps.
    const std::string reps = slurp(r.dir / "reps.csv");
    EXPECT_EQ(std::count(reps.begin(), reps.end(), '\n'), 7);
}

TEST(Evaluate, OracleScoresEverything) {
    const auto& r = runs().oracle;
    EXPECT_EQ(r.correct, 3);
    for (const auto& item : r.items) EXPECT_EQ(item.rep_correct, 2);
}

TEST(Evaluate, RerunIsByteIdentical) {
    auto cfg = small_config("lattice_again", "lattice");
    cfg.workers = 3;
    const auto again = cmd_evaluate(cfg);
    for (const char* f : {"manifest.json", "votes.csv", "panels.csv", "reps.csv", "trials.csv", "posterior.json",
                          "report.json"}) {
        EXPECT_EQ(slurp(again.dir / f), slurp(runs().lattice.dir / f)) << f;
    }
}

TEST(Evaluate, ExternalFailureLeavesMarker) {
    const fs::path cfg_path = write_config("silent", "items = 3\nreps = 1\noutput = \"silent\"\n[substrate]\n"
                                                     "kind = \"external\"\ncommand = [\"" RB_FIXTURES
                                                     "/silent_inpainter.sh\"]\n");
    EXPECT_EQ(kind_of([&] { cmd_evaluate(load_run_config(cfg_path)); }), ErrorKind::missing_result);
    const std::string failed = slurp(root() / "silent" / "FAILED");
    EXPECT_NE(failed.find("stage inpaint"), std::string::npos) << failed;
    EXPECT_NE(failed.find("MissingResult"), std::string::npos) << failed;
}

TEST(Evaluate, ExternalCopyScoresLikeUnchangedInput) {
    const fs::path cfg_path = write_config("copy", "items = 3\nreps = 1\noutput = \"copy\"\n[substrate]\n"
                                                   "kind = \"external\"\ncommand = [\"" RB_FIXTURES
                                                   "/copy_inpainter.sh\"]\n");
    const auto r = cmd_evaluate(load_run_config(cfg_path));
    EXPECT_EQ(r.total, 3);
    EXPECT_EQ(r.substrate, "external");
}

TEST(Generate, WritesManifestAndPngs) {
    const auto m = cmd_generate(4, 5, root() / "gen");
    EXPECT_EQ(m.items.size(), 5u);
    EXPECT_TRUE(fs::exists(root() / "gen" / "manifest.json"));
    EXPECT_TRUE(fs::exists(root() / "gen" / "items" / "item_005_opt0.png"));
    EXPECT_EQ(slurp(root() / "gen" / "manifest.hash"), manifest_hash(m) + "\n");
}

TEST(Psych, RefitReproducesPosterior) {
    const auto& r = runs().lattice;
    const std::string before = slurp(r.dir / "posterior.json");
    cmd_psych(r.dir);
    EXPECT_EQ(slurp(r.dir / "posterior.json"), before);
}

TEST(Compare, SelfAndMismatch) {
    const auto& r = runs();
    const auto self = cmd_compare(r.lattice.dir, r.lattice.dir);
    EXPECT_TRUE(self["choice_diffs"].empty());
    EXPECT_EQ(self["rep_choice_diff_nonzero"], 0);
    const auto vs_oracle = cmd_compare(r.lattice.dir, r.oracle.dir);
    EXPECT_EQ(vs_oracle["runs"][1]["score"]["correct"], 3);
    EXPECT_EQ(kind_of([&] { cmd_compare(r.lattice.dir, r.other_seed.dir); }), ErrorKind::battery_mismatch);
}

TEST(Errors, SyntheticCohort) {
    const auto& r = runs().lattice;
    const fs::path cohort = root() / "cohort.csv";
    write_cohort(cohort, r);
    const auto summary = cmd_errors(r.dir, cohort);
    EXPECT_EQ(summary["groups"]["control"]["size"], 20);
    // One model row per repetition.
    EXPECT_EQ(summary["groups"]["model"]["size"], 2);
    for (const char* f : {"grid_control.csv", "grid_patient.csv", "grid_model.csv", "cells_patient_vs_control.csv",
                          "overlap.json", "summary.json"}) {
        EXPECT_TRUE(fs::exists(r.dir / "errors" / f)) << f;
    }
    const auto overlap = detail::read_json(r.dir / "errors" / "overlap.json");
    if (r.correct == r.total) {
        EXPECT_EQ(overlap["kind"], "NoModelErrors");
    } else {
        EXPECT_EQ(overlap["sharers"], 20);
        EXPECT_EQ(overlap["non_sharers"], 20);
    }
    const fs::path wrong = root() / "cohort_wrong.csv";
    std::ofstream(wrong) << "participant_id,group,age,education_years,premorbid_score,sex,item_1\nc,control,1,1,1,F,0\n";
    EXPECT_EQ(kind_of([&] { cmd_errors(r.dir, wrong); }), ErrorKind::item_mismatch);
}

TEST(Plots, CurvesAndEmptyTrialsNotice) {
    const auto& r = runs();
    std::vector<std::string> notices;
    const auto files = emit_plots({r.lattice.dir, r.oracle.dir}, root() / "plots", &notices);
    EXPECT_TRUE(fs::exists(root() / "plots" / "psychometric.svg"));
    const std::string svg = slurp(root() / "plots" / "psychometric.svg");
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);

    // A copy of a run with its trials removed.
    const fs::path empty = root() / "empty_run";
    fs::remove_all(empty);
    fs::copy(r.lattice.dir, empty, fs::copy_options::recursive);
    std::ofstream(empty / "trials.csv") << "item_rank,k,n\n";
    notices.clear();
    emit_plots({empty}, root() / "plots_empty", &notices);
    ASSERT_FALSE(notices.empty());
    EXPECT_NE(notices.front().find("no trials"), std::string::npos);
    EXPECT_FALSE(fs::exists(root() / "plots_empty" / "psychometric.svg"));
}
