#include "ravenbench/pipeline.hpp"

#include "io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

namespace ravenbench::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<int> answer_key(const BatteryManifest& m) {
    std::vector<int> key;
    for (const auto& item : m.items) key.push_back(item.answer_index);
    return key;
}

std::vector<int> clean_choices(const json& report) {
    std::vector<int> out;
    for (const auto& item : report.at("items")) out.push_back(item.at("choice").get<int>());
    return out;
}

// One row per repetition: the option chosen on every item.
errstats::ResponseTable rep_table(const fs::path& run_dir, int n_items) {
    std::istringstream in(detail::read_text(run_dir / "reps.csv"));
    std::string line;
    std::getline(in, line);
    std::map<int, std::vector<int>> by_rep;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
        if (cells.size() < 6) throw Error(ErrorKind::io, "reps.csv row is malformed: " + line);
        const int item = std::stoi(cells[0]) - 1, rep = std::stoi(cells[1]), choice = std::stoi(cells[5]);
        auto& row = by_rep[rep];
        row.resize(static_cast<std::size_t>(n_items), -1);
        if (item < 0 || item >= n_items) throw Error(ErrorKind::io, "reps.csv item out of range: " + line);
        row[static_cast<std::size_t>(item)] = choice;
    }
    errstats::ResponseTable t;
    t.n_items = n_items;
    for (const auto& [rep, choices] : by_rep) {
        if (std::count(choices.begin(), choices.end(), -1) > 0) {
            ++t.excluded_incomplete;
            continue;
        }
        errstats::Participant p;
        p.id = fmt::format("rep_{}", rep);
        p.group = "model";
        p.responses = choices;
        t.rows.push_back(std::move(p));
    }
    return t;
}

std::string file_safe(const std::string& s) {
    std::string out;
    for (char c : s) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_');
    return out.empty() ? "_" : out;
}

json overlap_or_error(std::span<const int> choices, std::span<const int> key, const errstats::ResponseTable& cohort,
                      double alpha) {
    try {
        return errstats::to_json(errstats::model_error_overlap(choices, key, cohort, alpha));
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::no_model_errors) throw;
        return {{"error", e.what()}, {"kind", to_string(e.kind())}};
    }
}

json interval_of(const json& posterior) {
    if (!posterior.contains("threshold") || posterior["threshold"].contains("error")) return nullptr;
    return posterior["threshold"];
}

}  // namespace

json cmd_psych(const fs::path& run_dir) {
    const auto run = detail::load_run(run_dir);
    const auto trials = psychfit::read_trials_csv(run_dir / "trials.csv");
    const json summary = detail::fit_summary(trials, run.config.grid, run.config.performance, run.config.level, nullptr);
    detail::write_text(run_dir / "posterior.json", summary.dump(2) + "\n");
    return summary;
}

json cmd_errors(const fs::path& run_dir, const fs::path& cohort_csv) {
    const auto run = detail::load_run(run_dir);
    const auto key = answer_key(run.manifest);
    const int n_items = static_cast<int>(key.size());
    const auto cohort = errstats::read_cohort_csv(cohort_csv);
    if (cohort.n_items != n_items) {
        throw Error(ErrorKind::item_mismatch,
                    fmt::format("cohort has {} items but the battery has {}", cohort.n_items, n_items));
    }
    const std::string ref_name = run.config.reference_group;
    const auto reference = cohort.filter_group(ref_name);
    if (reference.rows.empty()) {
        throw Error(ErrorKind::insufficient_data, fmt::format("cohort has no participants in reference group '{}'", ref_name));
    }
    const double alpha = run.config.alpha;
    const fs::path out = run_dir / "errors";
    fs::create_directories(out);

    json summary;
    summary["reference_group"] = ref_name;
    summary["alpha"] = alpha;
    summary["excluded_incomplete"] = cohort.excluded_incomplete;
    summary["groups"] = json::object();

    std::map<std::string, errstats::ErrorGrid> grids;
    for (const auto& g : cohort.groups()) grids[g] = errstats::build_error_grid(cohort.filter_group(g), reference, key);
    const auto model_rows = rep_table(run_dir, n_items);
    const std::string model_name = "model";
    grids[model_name] = errstats::build_error_grid(model_rows, reference, key);

    for (const auto& [name, grid] : grids) {
        const std::string file = fmt::format("grid_{}.csv", file_safe(name));
        errstats::write_error_grid_csv(out / file, grid);
        summary["groups"][name] = {{"size", grid.group_size}, {"grid", file}};
    }
    summary["cell_tests"] = json::array();
    for (const auto& [name, grid] : grids) {
        if (name == ref_name || grid.group_size == 0) continue;
        const auto report = errstats::grid_cell_tests(grid, grids.at(ref_name), alpha);
        const std::string file = fmt::format("cells_{}_vs_{}.csv", file_safe(name), file_safe(ref_name));
        errstats::write_cell_tests_csv(out / file, report);
        const auto rejected = std::count_if(report.tests.begin(), report.tests.end(), [](const auto& t) { return t.rejected; });
        summary["cell_tests"].push_back({{"group", name},
                                         {"file", file},
                                         {"family_size", report.tests.size()},
                                         {"skipped", report.skipped},
                                         {"rejected", rejected}});
    }
    const auto choices = clean_choices(run.report);
    const json overlap = overlap_or_error(choices, key, cohort, alpha);
    detail::write_text(out / "overlap.json", overlap.dump(2) + "\n");
    summary["overlap"] = "overlap.json";
    detail::write_text(out / "summary.json", summary.dump(2) + "\n");
    return summary;
}

json cmd_compare(const fs::path& run_a, const fs::path& run_b, const fs::path& cohort_csv) {
    const auto a = detail::load_run(run_a);
    const auto b = detail::load_run(run_b);
    const std::string ha = a.report.at("manifest_hash"), hb = b.report.at("manifest_hash");
    if (ha != hb) throw Error(ErrorKind::battery_mismatch, fmt::format("battery hashes differ: {} vs {}", ha, hb));

    json j;
    j["manifest_hash"] = ha;
    j["runs"] = json::array();
    for (const auto* r : {&a, &b}) {
        j["runs"].push_back({{"substrate", r->report.at("substrate")},
                             {"score", r->report.at("score")},
                             {"threshold", interval_of(r->report.at("posterior"))},
                             {"warnings", r->report.at("posterior").value("warnings", json::array())}});
    }
    const json ta = j["runs"][0]["threshold"], tb = j["runs"][1]["threshold"];
    if (ta.is_null() || tb.is_null()) {
        j["threshold_relation"] = "unavailable";
    } else if (ta.at("lo").get<double>() > tb.at("hi").get<double>()) {
        j["threshold_relation"] = "first_right_disjoint";
    } else if (tb.at("lo").get<double>() > ta.at("hi").get<double>()) {
        j["threshold_relation"] = "second_right_disjoint";
    } else {
        j["threshold_relation"] = "overlapping";
    }

    const auto ca = clean_choices(a.report), cb = clean_choices(b.report);
    j["choice_diffs"] = json::array();
    for (std::size_t i = 0; i < ca.size(); ++i) {
        if (ca[i] != cb[i]) j["choice_diffs"].push_back({{"item", i + 1}, {"first", ca[i]}, {"second", cb[i]}});
    }
    // Rep-choice count difference per (item, option), in battery order.
    const int n_items = static_cast<int>(ca.size());
    const auto ra = rep_table(run_a, n_items), rb = rep_table(run_b, n_items);
    json grid = json::array();
    int nonzero = 0;
    for (int i = 0; i < n_items; ++i) {
        std::array<int, 8> d{};
        for (const auto& p : ra.rows) ++d[static_cast<std::size_t>(p.responses[static_cast<std::size_t>(i)])];
        for (const auto& p : rb.rows) --d[static_cast<std::size_t>(p.responses[static_cast<std::size_t>(i)])];
        for (int v : d) nonzero += v != 0;
        grid.push_back(d);
    }
    j["rep_choice_diff"] = grid;
    j["rep_choice_diff_nonzero"] = nonzero;

    if (!cohort_csv.empty()) {
        const auto cohort = errstats::read_cohort_csv(cohort_csv);
        const auto key = answer_key(a.manifest);
        if (cohort.n_items != n_items) throw Error(ErrorKind::item_mismatch, "cohort item count differs from the battery");
        j["overlap"] = {overlap_or_error(ca, key, cohort, a.config.alpha), overlap_or_error(cb, key, cohort, b.config.alpha)};
    }
    return j;
}

}  // namespace ravenbench::pipeline
