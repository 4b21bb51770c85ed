#include "ravenbench/ravenbench.h"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

namespace {

// Usage errors share the config exit code.
int exit_code(rb_status s) {
    switch (s) {
        case RB_OK:
            return 0;
        case RB_ERR_ARGUMENT:
        case RB_ERR_CONFIG:
            return 2;
        case RB_ERR_EXTERNAL:
            return 4;
        default:
            return 3;
    }
}

int fail(rb_status s) {
    std::fprintf(stderr, "error [%s]: %s\n", rb_last_error_kind(), rb_last_error());
    return exit_code(s);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Raven-style matrix in-painting benchmark"};
    app.require_subcommand(1);
    app.set_version_flag("--version", rb_version());

    std::uint64_t seed = 0;
    int items = 12;
    std::string out_dir;
    auto* gen = app.add_subcommand("generate", "Generate a battery and write manifest and PNGs");
    gen->add_option("--seed", seed, "Battery seed")->required();
    gen->add_option("--items", items, "Number of items")->check(CLI::Range(3, 999));
    gen->add_option("--out", out_dir, "Output directory")->required();

    std::string config;
    int workers = 0;
    auto* eval = app.add_subcommand("evaluate", "Run the full pipeline from a TOML config");
    eval->add_option("--config", config, "Run config (TOML)")->required()->check(CLI::ExistingFile);
    eval->add_option("--workers", workers, "Override the configured worker count")->check(CLI::Range(1, 256));

    std::string run_dir;
    auto* psych = app.add_subcommand("psych", "Refit the psychometric function of a run");
    psych->add_option("--run", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);

    std::string cohort;
    auto* errors = app.add_subcommand("errors", "Error grids and statistics against a cohort CSV");
    errors->add_option("--run", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
    errors->add_option("--cohort", cohort, "Cohort CSV")->required()->check(CLI::ExistingFile);

    std::string run_a, run_b, compare_out;
    auto* compare = app.add_subcommand("compare", "Compare two runs on the same battery");
    compare->add_option("run_a", run_a, "First run directory")->required()->check(CLI::ExistingDirectory);
    compare->add_option("run_b", run_b, "Second run directory")->required()->check(CLI::ExistingDirectory);
    compare->add_option("--cohort", cohort, "Cohort CSV for error overlap")->check(CLI::ExistingFile);
    compare->add_option("--out", compare_out, "Output JSON (default: <run_a>/comparison.json)");

    std::vector<std::string> report_runs;
    std::string plots_out;
    auto* report = app.add_subcommand("report", "Write SVG plots for one or more runs");
    report->add_option("--run", report_runs, "Run directory (repeatable)")->required()->check(CLI::ExistingDirectory);
    report->add_option("--out", plots_out, "Plot directory (default: <first run>/plots)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (*gen) {
        rb_battery* b = nullptr;
        if (rb_status s = rb_battery_generate(seed, items, &b); s != RB_OK) return fail(s);
        const rb_status s = rb_battery_write(b, out_dir.c_str());
        if (s == RB_OK) std::printf("battery %s: %d items -> %s\n", rb_battery_hash(b), rb_battery_size(b), out_dir.c_str());
        rb_battery_free(b);
        return s == RB_OK ? 0 : fail(s);
    }
    if (*eval) {
        rb_run* run = nullptr;
        if (rb_status s = rb_evaluate(config.c_str(), workers, &run); s != RB_OK) return fail(s);
        int correct = 0, total = 0;
        rb_run_score(run, &correct, &total);
        std::printf("%d / %d\n", correct, total);
        double lo = 0, hi = 0, point = 0;
        if (rb_run_threshold(run, &lo, &hi, &point) == RB_OK) {
            std::printf("threshold %.3f [%.3f, %.3f]%s\n", point, lo, hi,
                        rb_run_boundary_warning(run) ? " BoundaryWarning" : "");
        } else {
            std::printf("threshold unavailable: %s\n", rb_last_error());
        }
        std::printf("outputs in %s\n", rb_run_dir(run));
        rb_run_free(run);
        return 0;
    }
    if (*psych) {
        if (rb_status s = rb_psych(run_dir.c_str()); s != RB_OK) return fail(s);
        std::printf("wrote %s\n", (std::filesystem::path(run_dir) / "posterior.json").c_str());
        return 0;
    }
    if (*errors) {
        if (rb_status s = rb_errors(run_dir.c_str(), cohort.c_str()); s != RB_OK) return fail(s);
        std::printf("wrote %s\n", (std::filesystem::path(run_dir) / "errors").c_str());
        return 0;
    }
    if (*compare) {
        if (compare_out.empty()) compare_out = (std::filesystem::path(run_a) / "comparison.json").string();
        const rb_status s = rb_compare(run_a.c_str(), run_b.c_str(), cohort.empty() ? nullptr : cohort.c_str(),
                                       compare_out.c_str());
        if (s != RB_OK) return fail(s);
        std::printf("wrote %s\n", compare_out.c_str());
        return 0;
    }
    if (*report) {
        if (plots_out.empty()) plots_out = (std::filesystem::path(report_runs.front()) / "plots").string();
        std::vector<const char*> dirs;
        for (const auto& r : report_runs) dirs.push_back(r.c_str());
        if (rb_status s = rb_plots(dirs.data(), dirs.size(), plots_out.c_str()); s != RB_OK) return fail(s);
        const auto notices = std::filesystem::path(plots_out) / "NOTICES.txt";
        if (std::filesystem::exists(notices)) std::printf("notices in %s\n", notices.c_str());
        std::printf("plots in %s\n", plots_out.c_str());
        return 0;
    }
    return 2;
}
