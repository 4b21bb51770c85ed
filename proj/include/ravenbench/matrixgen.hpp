#pragma once

#include "ravenbench/image.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ravenbench::matrixgen {

enum class ShapeKind : std::uint8_t { disc, square, triangle, bar, cross };

// One drawn figure. `count` copies are placed on consecutive lattice slots
// starting at `position` (wrapping modulo 9). Size is held in percent of the
// cell width so that rule arithmetic stays exact.
struct ShapeSpec {
    ShapeKind kind = ShapeKind::disc;
    int size_percent = 50;  // 10..90
    int intensity = 0;      // 0..255
    int count = 1;          // 1..4
    int rotation = 0;       // 0, 45, 90, 135
    int position = 4;       // 0..8

    double size() const noexcept { return size_percent / 100.0; }
    bool operator==(const ShapeSpec&) const = default;
};

using Cell = std::vector<ShapeSpec>;

bool is_valid(const ShapeSpec& shape) noexcept;

enum class Attribute : std::uint8_t { size, intensity, count, rotation, overlay };
enum class RuleFamily : std::uint8_t { constant, progression, addition, subtraction, distribution3 };
enum class Axis : std::uint8_t { row, column };

// `axis == row` means the rule runs along each row (varies with the column
// index); `axis == column` runs down each column.
struct RuleSpec {
    Attribute attribute = Attribute::intensity;
    RuleFamily family = RuleFamily::constant;
    Axis axis = Axis::row;
    int step = 0;                   // progression increment per cell
    std::array<int, 3> values{};    // distribution3 value set

    bool operator==(const RuleSpec&) const = default;
};

// Throws Error(invalid_argument) when a rule set breaks the structural
// invariants: 1..3 rules, distinct attributes, overlay only with
// addition/subtraction, overlay never combined with a count rule.
void validate_rules(std::span<const RuleSpec> rules);

using SlotSet = std::uint16_t;  // bit i = lattice slot i

// Everything rule realization needs besides the rules themselves: the shared
// base figure and, for overlay items, the slot sets of the two generating
// cells of each line.
struct ItemBasis {
    ShapeSpec base;
    std::array<std::array<SlotSet, 2>, 3> overlay_slots{};

    bool operator==(const ItemBasis&) const = default;
};

// Applies each rule to its attribute for cell (row, col). Throws
// Error(generation) if a progression leaves the attribute's range; values are
// never clamped.
Cell realize_cell(std::span<const RuleSpec> rules, int row, int col, const ItemBasis& basis);

enum class OptionLabel : std::uint8_t {
    correct,
    repetition_neighbour,
    incorrect_rule,
    incomplete_rule,
    random,
};

struct OptionSpec {
    Cell cell;
    OptionLabel label = OptionLabel::random;

    bool operator==(const OptionSpec&) const = default;
};

struct MatrixItem {
    std::string id;
    std::uint64_t seed = 0;
    std::vector<RuleSpec> rules;
    ItemBasis basis;
    std::array<Cell, 9> cells;  // cells[8] is the ground truth
    std::array<OptionSpec, 8> options;
    int answer_index = 0;
    int difficulty_rank = 1;

    bool operator==(const MatrixItem&) const = default;
};

// Which rule families an item may draw from. `basic` is constant/progression;
// `permutation` adds exactly one distribution3 rule; `composite` adds exactly
// one overlay addition/subtraction rule.
enum class FamilyTier : std::uint8_t { constant_only, basic, permutation, composite };

struct ProfileEntry {
    int rule_count = 1;
    FamilyTier tier = FamilyTier::basic;

    bool operator==(const ProfileEntry&) const = default;
};

struct DifficultyProfile {
    std::vector<ProfileEntry> entries;

    // Rule counts split into thirds (1, 2, 3 rules); within the 3-rule third the
    // first half draws a permutation rule and the second half an overlay rule.
    static DifficultyProfile standard(int n_items);
    static DifficultyProfile constant_only(int n_items);
};

// ---- rendering ------------------------------------------------------------

struct RenderConfig {
    int image_size = 512;
    int origin = 4;
    int pitch = 168;
    int border = 2;
    std::uint8_t background = 255;
    std::uint8_t line = 0;
};

void validate(const RenderConfig& cfg);

struct CellGeometry {
    int origin_x = 0;
    int origin_y = 0;
    int pitch = 0;
    int border = 0;

    // Cell `index` in 0..8, row-major.
    Rect cell_rect(int index) const noexcept;
    Rect interior(int index) const noexcept;
    int interior_size() const noexcept { return pitch - border; }
};

struct RasterCase {
    GrayImage image;  // cell 9 left blank
    Mask mask;        // cell 9 interior
    std::array<GrayImage, 8> option_cells;
    CellGeometry geometry;
};

CellGeometry geometry_of(const RenderConfig& cfg) noexcept;

// Draws one cell interior (size x size) on the background colour.
GrayImage render_cell(const Cell& cell, int size, const RenderConfig& cfg);

// Full matrix. Cell 9 is drawn from `ninth` when given, otherwise left blank.
GrayImage render_matrix(const MatrixItem& item, const RenderConfig& cfg,
                        const Cell* ninth = nullptr);

RasterCase render_case(const MatrixItem& item, const RenderConfig& cfg);

// The matrix with option `k` pasted into the answer cell.
GrayImage complete_with_option(const RasterCase& raster, int k);

// ---- generation -----------------------------------------------------------

// Builds the 8 answer options for an item whose cells are realized. Throws
// Error(generation) when 8 mutually distinct renders cannot be assembled.
std::array<OptionSpec, 8> make_distractors(const MatrixItem& item, std::uint64_t seed,
                                           int* answer_index,
                                           const RenderConfig& cfg = {});

// Regenerates a single item; pure function of its arguments.
MatrixItem generate_item(int index, std::uint64_t item_seed, const ProfileEntry& entry,
                         const RenderConfig& cfg = {});

std::vector<MatrixItem> generate_battery(std::uint64_t seed, int n_items,
                                         const DifficultyProfile& profile,
                                         const RenderConfig& cfg = {});

constexpr int kMaxResamplingAttempts = 100;

const char* to_string(ShapeKind kind) noexcept;
const char* to_string(Attribute attribute) noexcept;
const char* to_string(RuleFamily family) noexcept;
const char* to_string(Axis axis) noexcept;
const char* to_string(OptionLabel label) noexcept;
const char* to_string(FamilyTier tier) noexcept;

}  // namespace ravenbench::matrixgen
