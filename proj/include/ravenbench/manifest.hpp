#pragma once

#include "ravenbench/matrixgen.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ravenbench {

struct BatteryManifest {
    std::uint64_t seed = 0;
    matrixgen::DifficultyProfile profile;
    matrixgen::RenderConfig render;
    std::vector<matrixgen::MatrixItem> items;
};

nlohmann::json to_json(const matrixgen::MatrixItem& item);
matrixgen::MatrixItem item_from_json(const nlohmann::json& j);

nlohmann::json to_json(const BatteryManifest& manifest);
BatteryManifest manifest_from_json(const nlohmann::json& j);

// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

// Hash of the canonical (sorted-key, 2-space indented) manifest text.
std::string manifest_hash(const BatteryManifest& manifest);

}  // namespace ravenbench
