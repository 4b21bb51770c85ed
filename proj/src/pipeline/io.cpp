#include "io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace ravenbench::pipeline::detail {

namespace fs = std::filesystem;
using nlohmann::json;

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorKind::io, "short write to " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const fs::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::io, fmt::format("{} is not valid JSON: {}", path.string(), e.what()));
    }
}

void write_item_pngs(const fs::path& dir, int item, const matrixgen::RasterCase& raster) {
    const std::string stem = fmt::format("item_{:03d}", item + 1);
    write_png(dir / (stem + "_image.png"), raster.image);
    write_png(dir / (stem + "_mask.png"), raster.mask.to_image());
    for (std::size_t k = 0; k < raster.option_cells.size(); ++k) {
        write_png(dir / fmt::format("{}_opt{}.png", stem, k), raster.option_cells[k]);
    }
}

int homography_count(const std::array<registration::RegisterMode, 8>& modes) {
    return static_cast<int>(std::count(modes.begin(), modes.end(), registration::RegisterMode::homography));
}

json fit_summary(std::span<const psychfit::TrialBlock> trials, const psychfit::GridConfig& grid, double performance,
                 double level, std::optional<psychfit::Interval>* threshold) {
    if (threshold) threshold->reset();
    try {
        const auto post = psychfit::fit(trials, grid);
        try {
            const auto t = psychfit::threshold_interval(post, performance, level);
            if (threshold) *threshold = t;
            return psychfit::summary_json(post, t, performance, level);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::unattainable) throw;
            json j = psychfit::summary_json(post, {}, performance, level);
            j["threshold"] = {{"error", e.what()}, {"kind", to_string(e.kind())}, {"performance", performance},
                              {"level", level}};
            return j;
        }
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::insufficient_data) throw;
        return {{"error", e.what()}, {"kind", to_string(e.kind())}};
    }
}

json report_json(const RunReport& report, const RunConfig& cfg) {
    json j;
    j["software"] = {{"name", "ravenbench"}, {"version", version()}, {"compiler", __VERSION__}};
    j["manifest_hash"] = report.manifest_hash;
    j["seed"] = cfg.seed;
    j["substrate"] = report.substrate;
    j["reps"] = cfg.reps;
    j["score"] = {{"correct", report.correct}, {"total", report.total}, {"line", score_line(report.correct, report.total)}};

    std::map<int, std::pair<int, int>> strata;
    json items = json::array();
    for (const auto& r : report.items) {
        json winners = json::array();
        for (int w : r.vote.winners) winners.push_back(w);
        items.push_back({{"item", r.item + 1},
                         {"rank", r.rank},
                         {"rule_count", r.rule_count},
                         {"answer", r.answer},
                         {"choice", r.vote.choice},
                         {"correct", r.vote.choice == r.answer},
                         {"tiebreak", simpanel::to_string(r.vote.tiebreak)},
                         {"winners", winners},
                         {"homography_count", homography_count(r.modes)},
                         {"substrate_id", r.substrate_id},
                         {"rep_correct", r.rep_correct},
                         {"reps", r.reps.size()}});
        auto& s = strata[r.rule_count];
        s.first += r.vote.choice == r.answer ? 1 : 0;
        s.second += 1;
    }
    j["items"] = items;
    j["strata"] = json::array();
    for (const auto& [rules, s] : strata) j["strata"].push_back({{"rule_count", rules}, {"correct", s.first}, {"total", s.second}});
    j["trials"] = json::array();
    for (const auto& t : report.trials) j["trials"].push_back({{"item_rank", t.x}, {"k", t.k}, {"n", t.n}});
    j["posterior"] = report.posterior;
    j["files"] = {"config.toml", "manifest.json", "manifest.hash", "votes.csv", "panels.csv",
                  "reps.csv",    "trials.csv",    "posterior.json", "score.txt"};
    return j;
}

LoadedRun load_run(const fs::path& dir) {
    if (!fs::exists(dir / "report.json")) {
        throw Error(ErrorKind::io, fmt::format("{} has no report.json; is it a finished run?", dir.string()));
    }
    LoadedRun run;
    run.dir = dir;
    run.report = read_json(dir / "report.json");
    run.manifest = manifest_from_json(read_json(dir / "manifest.json"));
    run.config = parse_run_config(read_text(dir / "config.toml"), dir);
    return run;
}

}  // namespace ravenbench::pipeline::detail
