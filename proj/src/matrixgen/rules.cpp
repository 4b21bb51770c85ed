#include "ravenbench/error.hpp"
#include "ravenbench/matrixgen.hpp"

#include <algorithm>
#include <bit>
#include <string>

namespace ravenbench::matrixgen {

namespace {

int attribute_value(const ShapeSpec& s, Attribute a) {
    switch (a) {
        case Attribute::size: return s.size_percent;
        case Attribute::intensity: return s.intensity;
        case Attribute::count: return s.count;
        case Attribute::rotation: return s.rotation;
        case Attribute::overlay: break;
    }
    throw Error(ErrorKind::invalid_argument, "overlay is not a scalar attribute");
}

void set_attribute(ShapeSpec& s, Attribute a, int v) {
    switch (a) {
        case Attribute::size: s.size_percent = v; return;
        case Attribute::intensity: s.intensity = v; return;
        case Attribute::count: s.count = v; return;
        case Attribute::rotation: s.rotation = v; return;
        case Attribute::overlay: break;
    }
    throw Error(ErrorKind::invalid_argument, "overlay is not a scalar attribute");
}

bool in_range(Attribute a, int v) {
    switch (a) {
        case Attribute::size: return v >= 10 && v <= 90;
        case Attribute::intensity: return v >= 0 && v <= 255;
        case Attribute::count: return v >= 1 && v <= 4;
        case Attribute::rotation: return v >= 0 && v <= 135 && v % 45 == 0;
        case Attribute::overlay: return false;
    }
    return false;
}

// Latin-square index: every value appears once per row and once per column.
int latin_index(int row, int col, Axis axis) {
    return axis == Axis::row ? (row + col) % 3 : (col - row + 3) % 3;
}

}  // namespace

bool is_valid(const ShapeSpec& s) noexcept {
    return in_range(Attribute::size, s.size_percent) && in_range(Attribute::intensity, s.intensity) &&
           in_range(Attribute::count, s.count) && in_range(Attribute::rotation, s.rotation) &&
           s.position >= 0 && s.position <= 8 && static_cast<int>(s.kind) <= 4;
}

void validate_rules(std::span<const RuleSpec> rules) {
    if (rules.empty() || rules.size() > 3) {
        throw Error(ErrorKind::invalid_argument, "an item needs 1..3 rules");
    }
    unsigned seen = 0;
    bool has_overlay = false;
    bool has_count = false;
    for (const auto& r : rules) {
        const unsigned bit = 1u << static_cast<unsigned>(r.attribute);
        if (seen & bit) {
            throw Error(ErrorKind::invalid_argument,
                        std::string("duplicate rule attribute ") + to_string(r.attribute));
        }
        seen |= bit;
        const bool composite = r.family == RuleFamily::addition || r.family == RuleFamily::subtraction;
        if ((r.attribute == Attribute::overlay) != composite) {
            throw Error(ErrorKind::invalid_argument,
                        "overlay pairs only with addition/subtraction, and vice versa");
        }
        has_overlay |= r.attribute == Attribute::overlay;
        has_count |= r.attribute == Attribute::count;
    }
    if (has_overlay && has_count) {
        throw Error(ErrorKind::invalid_argument, "overlay and count rules cannot be combined");
    }
}

Cell realize_cell(std::span<const RuleSpec> rules, int row, int col, const ItemBasis& basis) {
    if (row < 0 || row > 2 || col < 0 || col > 2) {
        throw Error(ErrorKind::invalid_argument, "cell coordinates must be in 0..2");
    }
    ShapeSpec shape = basis.base;
    const RuleSpec* overlay = nullptr;
    for (const auto& rule : rules) {
        if (rule.attribute == Attribute::overlay) {
            overlay = &rule;
            continue;
        }
        const int index = rule.axis == Axis::row ? col : row;
        int value = 0;
        switch (rule.family) {
            case RuleFamily::constant:
                value = attribute_value(basis.base, rule.attribute);
                break;
            case RuleFamily::progression:
                value = attribute_value(basis.base, rule.attribute) + index * rule.step;
                break;
            case RuleFamily::distribution3:
                value = rule.values[static_cast<std::size_t>(latin_index(row, col, rule.axis))];
                break;
            case RuleFamily::addition:
            case RuleFamily::subtraction:
                throw Error(ErrorKind::invalid_argument, "addition/subtraction apply to overlay only");
        }
        if (!in_range(rule.attribute, value)) {
            throw Error(ErrorKind::generation, std::string(to_string(rule.attribute)) + " value " +
                                                   std::to_string(value) + " out of range");
        }
        set_attribute(shape, rule.attribute, value);
    }
    if (!overlay) return {shape};

    const int line = overlay->axis == Axis::row ? row : col;
    const int pos = overlay->axis == Axis::row ? col : row;
    const auto& pair = basis.overlay_slots[static_cast<std::size_t>(line)];
    SlotSet slots = 0;
    if (pos < 2) {
        slots = pair[static_cast<std::size_t>(pos)];
    } else if (overlay->family == RuleFamily::addition) {
        slots = static_cast<SlotSet>(pair[0] | pair[1]);
    } else {
        slots = static_cast<SlotSet>(pair[0] & ~pair[1]);
    }
    slots &= 0x1FF;
    if (slots == 0) throw Error(ErrorKind::generation, "overlay produced an empty cell");

    Cell cell;
    cell.reserve(static_cast<std::size_t>(std::popcount(slots)));
    for (int slot = 0; slot < 9; ++slot) {
        if (!(slots & (1u << slot))) continue;
        ShapeSpec s = shape;
        s.count = 1;
        s.position = slot;
        cell.push_back(s);
    }
    return cell;
}

DifficultyProfile DifficultyProfile::standard(int n_items) {
    DifficultyProfile profile;
    if (n_items < 1) return profile;
    int third_start = -1;
    for (int i = 0; i < n_items; ++i) {
        const int rules = 1 + (3 * i) / n_items;
        if (rules == 3 && third_start < 0) third_start = i;
        profile.entries.push_back({rules, FamilyTier::basic});
    }
    if (third_start >= 0) {
        const int hard = n_items - third_start;
        for (int i = third_start; i < n_items; ++i) {
            profile.entries[static_cast<std::size_t>(i)].tier =
                (i - third_start) < (hard + 1) / 2 ? FamilyTier::permutation : FamilyTier::composite;
        }
    }
    return profile;
}

DifficultyProfile DifficultyProfile::constant_only(int n_items) {
    DifficultyProfile profile;
    profile.entries.assign(static_cast<std::size_t>(std::max(0, n_items)),
                           ProfileEntry{1, FamilyTier::constant_only});
    return profile;
}

const char* to_string(ShapeKind kind) noexcept {
    switch (kind) {
        case ShapeKind::disc: return "disc";
        case ShapeKind::square: return "square";
        case ShapeKind::triangle: return "triangle";
        case ShapeKind::bar: return "bar";
        case ShapeKind::cross: return "cross";
    }
    return "?";
}

const char* to_string(Attribute a) noexcept {
    switch (a) {
        case Attribute::size: return "size";
        case Attribute::intensity: return "intensity";
        case Attribute::count: return "count";
        case Attribute::rotation: return "rotation";
        case Attribute::overlay: return "overlay";
    }
    return "?";
}

const char* to_string(RuleFamily f) noexcept {
    switch (f) {
        case RuleFamily::constant: return "constant";
        case RuleFamily::progression: return "progression";
        case RuleFamily::addition: return "addition";
        case RuleFamily::subtraction: return "subtraction";
        case RuleFamily::distribution3: return "distribution3";
    }
    return "?";
}

const char* to_string(Axis axis) noexcept { return axis == Axis::row ? "row" : "column"; }

const char* to_string(OptionLabel label) noexcept {
    switch (label) {
        case OptionLabel::correct: return "correct";
        case OptionLabel::repetition_neighbour: return "repetition_neighbour";
        case OptionLabel::incorrect_rule: return "incorrect_rule";
        case OptionLabel::incomplete_rule: return "incomplete_rule";
        case OptionLabel::random: return "random";
    }
    return "?";
}

const char* to_string(FamilyTier tier) noexcept {
    switch (tier) {
        case FamilyTier::constant_only: return "constant_only";
        case FamilyTier::basic: return "basic";
        case FamilyTier::permutation: return "permutation";
        case FamilyTier::composite: return "composite";
    }
    return "?";
}

}  // namespace ravenbench::matrixgen
