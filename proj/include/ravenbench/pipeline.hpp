#pragma once

#include "ravenbench/error.hpp"
#include "ravenbench/errstats.hpp"
#include "ravenbench/evaluation.hpp"
#include "ravenbench/inpaint.hpp"
#include "ravenbench/manifest.hpp"
#include "ravenbench/psychfit.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ravenbench::pipeline {

const char* version() noexcept;

struct SubstrateConfig {
    std::string kind = "lattice";  // local | lattice | external | oracle | constant
    std::vector<std::string> command;
    double timeout_seconds = 600.0;
    int constant_level = 128;
    inpaint::LocalConfig local;
};

struct RunConfig {
    std::uint64_t seed = 0;
    int items = 12;
    int reps = 50;
    int workers = 1;
    SubstrateConfig substrate;
    psychfit::PerturbSchedule perturbation;
    evaluation::EvalConfig evaluation;
    psychfit::GridConfig grid;
    double performance = 0.5;
    double level = 0.95;
    double alpha = 0.05;
    std::filesystem::path cohort;  // optional
    std::string reference_group = "control";
    std::filesystem::path output;

    std::string source_text;  // the file as read, copied into the run directory
};

// Relative paths resolve against `base_dir`. Unknown keys and out-of-range
// values throw Error(config).
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& file);
void validate(const RunConfig& cfg);

// Builds the substrate for one item; `truth` is used by the oracle.
std::unique_ptr<inpaint::Substrate> make_substrate(const RunConfig& cfg, const GrayImage& truth,
                                                   const std::filesystem::path& work_dir);

// Runs fn(i) for i in [0, n) on `workers` threads. The first exception (by
// index) is rethrown after all workers finish.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

struct ItemRecord {
    int item = 0;  // 0-based battery index
    int rank = 1;
    int rule_count = 1;
    int answer = 0;
    simpanel::VoteRecord vote;
    std::array<registration::RegisterMode, 8> modes{};
    std::array<int, 8> inliers{};
    std::string substrate_id;
    std::vector<psychfit::RepRecord> reps;
    int rep_correct = 0;
};

struct RunReport {
    std::filesystem::path dir;
    std::string manifest_hash;
    std::string substrate;
    int correct = 0;
    int total = 0;
    std::vector<ItemRecord> items;
    std::vector<psychfit::TrialBlock> trials;
    nlohmann::json posterior;  // summary, or {"error": ...}
    std::optional<psychfit::Interval> threshold;
};

std::string score_line(int correct, int total);

// Generates, in-paints, scores, repeats under perturbation and fits. Writes
// everything into cfg.output. On failure a FAILED file is left behind and the
// error is rethrown with item context.
RunReport cmd_evaluate(const RunConfig& cfg);

// Writes manifest.json and per-item PNGs for a battery.
BatteryManifest cmd_generate(std::uint64_t seed, int items, const std::filesystem::path& out);

// Refits trials.csv of a finished run and rewrites posterior.json.
nlohmann::json cmd_psych(const std::filesystem::path& run_dir);

// Error grids, per-cell tests and model overlap against a cohort CSV. Outputs
// go to <run>/errors/.
nlohmann::json cmd_errors(const std::filesystem::path& run_dir, const std::filesystem::path& cohort_csv);

// Throws Error(battery_mismatch) when the runs used different batteries.
nlohmann::json cmd_compare(const std::filesystem::path& run_a, const std::filesystem::path& run_b,
                           const std::filesystem::path& cohort_csv = {});

// SVG plots for one or more runs; returns the files written. Runs without
// trials are skipped with a notice in `notices`.
std::vector<std::filesystem::path> emit_plots(const std::vector<std::filesystem::path>& run_dirs,
                                              const std::filesystem::path& out_dir,
                                              std::vector<std::string>* notices = nullptr);

// Process exit code for an error kind: 2 config, 4 external protocol, 3 other.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace ravenbench::pipeline
