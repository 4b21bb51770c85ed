#pragma once

#include "ravenbench/pipeline.hpp"

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

namespace ravenbench::pipeline::detail {

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

// item_NNN_image.png, item_NNN_mask.png and item_NNN_optK.png.
void write_item_pngs(const std::filesystem::path& dir, int item, const matrixgen::RasterCase& raster);

int homography_count(const std::array<registration::RegisterMode, 8>& modes);

// Posterior summary, or {"error", "kind"} when the data cannot be fitted or
// the threshold is unattainable.
nlohmann::json fit_summary(std::span<const psychfit::TrialBlock> trials, const psychfit::GridConfig& grid,
                           double performance, double level, std::optional<psychfit::Interval>* threshold);

nlohmann::json report_json(const RunReport& report, const RunConfig& cfg);

struct LoadedRun {
    std::filesystem::path dir;
    nlohmann::json report;
    BatteryManifest manifest;
    RunConfig config;
};

// Throws Error(io) when the directory does not hold a finished run.
LoadedRun load_run(const std::filesystem::path& dir);

}  // namespace ravenbench::pipeline::detail
