#include "ravenbench/error.hpp"
#include "ravenbench/matrixgen.hpp"
#include "ravenbench/rng.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <string>

namespace ravenbench::matrixgen {

namespace {

constexpr std::array<ShapeKind, 5> kAllKinds{ShapeKind::disc, ShapeKind::square, ShapeKind::triangle,
                                            ShapeKind::bar, ShapeKind::cross};
constexpr std::array<int, 4> kAngles{0, 45, 90, 135};

template <class T, std::size_t N>
T pick(Rng& rng, const std::array<T, N>& xs) {
    return xs[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(N) - 1))];
}

// Whether the cell is laid out on the 3x3 slot lattice (small figures) rather
// than as one centred figure.
bool uses_slots(std::span<const RuleSpec> rules) {
    return std::any_of(rules.begin(), rules.end(), [](const RuleSpec& r) {
        return r.attribute == Attribute::overlay || r.attribute == Attribute::count;
    });
}

std::vector<int> value_ladder(Attribute a, bool slots) {
    switch (a) {
        case Attribute::size: return slots ? std::vector<int>{15, 20, 25, 30} : std::vector<int>{30, 45, 60, 75};
        case Attribute::intensity: return {0, 50, 100, 150, 200};
        case Attribute::count: return {1, 2, 3, 4};
        case Attribute::rotation: return {0, 45, 90, 135};
        case Attribute::overlay: break;
    }
    return {};
}

int progression_step(Attribute a, bool slots, Rng& rng) {
    const int sign = rng.coin() ? 1 : -1;
    switch (a) {
        case Attribute::size: return sign * (slots ? 5 : (rng.coin() ? 15 : 20));
        case Attribute::intensity: return sign * (40 + 10 * rng.uniform_int(0, 2));
        case Attribute::count: return sign;
        case Attribute::rotation: return sign * 45;
        case Attribute::overlay: break;
    }
    return 0;
}

int random_base_value(Attribute a, bool slots, Rng& rng) {
    switch (a) {
        case Attribute::size: return slots ? 5 * rng.uniform_int(3, 6) : 5 * rng.uniform_int(6, 16);
        case Attribute::intensity: return 20 * rng.uniform_int(0, 9);
        case Attribute::count: return rng.uniform_int(1, 4);
        case Attribute::rotation: return pick(rng, kAngles);
        case Attribute::overlay: break;
    }
    return 0;
}

void set_value(ShapeSpec& s, Attribute a, int v) {
    switch (a) {
        case Attribute::size: s.size_percent = v; break;
        case Attribute::intensity: s.intensity = v; break;
        case Attribute::count: s.count = v; break;
        case Attribute::rotation: s.rotation = v; break;
        case Attribute::overlay: break;
    }
}

int get_value(const ShapeSpec& s, Attribute a) {
    switch (a) {
        case Attribute::size: return s.size_percent;
        case Attribute::intensity: return s.intensity;
        case Attribute::count: return s.count;
        case Attribute::rotation: return s.rotation;
        case Attribute::overlay: break;
    }
    return 0;
}

SlotSet random_slots(Rng& rng, int min_count, int max_count) {
    const int n = rng.uniform_int(min_count, max_count);
    std::array<int, 9> order{0, 1, 2, 3, 4, 5, 6, 7, 8};
    rng.shuffle(order.begin(), order.end());
    SlotSet s = 0;
    for (int i = 0; i < n; ++i) s |= static_cast<SlotSet>(1u << order[static_cast<std::size_t>(i)]);
    return s;
}

// One attempt at drawing rules and a basis for the given profile entry.
void draw_structure(const ProfileEntry& entry, Rng& rng, std::vector<RuleSpec>& rules, ItemBasis& basis) {
    rules.clear();
    const int n = entry.rule_count;

    std::vector<Attribute> scalar{Attribute::size, Attribute::intensity, Attribute::count, Attribute::rotation};
    std::vector<RuleFamily> families(static_cast<std::size_t>(n), RuleFamily::constant);
    std::vector<Attribute> attributes;

    if (entry.tier == FamilyTier::composite) {
        attributes.push_back(Attribute::overlay);
        families[0] = rng.coin() ? RuleFamily::addition : RuleFamily::subtraction;
        scalar.erase(std::find(scalar.begin(), scalar.end(), Attribute::count));
    }
    rng.shuffle(scalar.begin(), scalar.end());
    for (std::size_t i = 0; attributes.size() < static_cast<std::size_t>(n); ++i) {
        attributes.push_back(scalar[i]);
    }
    const std::size_t first_scalar = entry.tier == FamilyTier::composite ? 1 : 0;
    for (std::size_t i = first_scalar; i < attributes.size(); ++i) {
        if (entry.tier == FamilyTier::constant_only) {
            families[i] = RuleFamily::constant;
        } else {
            // Progression is the typical rule; constancy is the occasional filler.
            families[i] = rng.uniform01() < 0.75 ? RuleFamily::progression : RuleFamily::constant;
        }
    }
    if (entry.tier == FamilyTier::permutation) {
        families[static_cast<std::size_t>(rng.uniform_int(0, n - 1))] = RuleFamily::distribution3;
    }
    if (entry.tier == FamilyTier::basic &&
        std::none_of(families.begin(), families.end(), [](RuleFamily f) { return f == RuleFamily::progression; })) {
        families[static_cast<std::size_t>(rng.uniform_int(0, n - 1))] = RuleFamily::progression;
    }

    for (std::size_t i = 0; i < attributes.size(); ++i) {
        RuleSpec r;
        r.attribute = attributes[i];
        r.family = families[i];
        r.axis = rng.coin() ? Axis::row : Axis::column;
        rules.push_back(r);
    }

    const bool slots = uses_slots(rules);
    const bool rotation_ruled = std::any_of(rules.begin(), rules.end(),
                                            [](const RuleSpec& r) { return r.attribute == Attribute::rotation; });
    ShapeSpec base;
    // Rotation rules need figures whose four orientations all look different.
    base.kind = rotation_ruled ? (rng.coin() ? ShapeKind::triangle : ShapeKind::bar) : pick(rng, kAllKinds);
    base.size_percent = random_base_value(Attribute::size, slots, rng);
    base.intensity = random_base_value(Attribute::intensity, slots, rng);
    base.rotation = random_base_value(Attribute::rotation, slots, rng);
    base.count = 1;
    base.position = 4;
    const bool counted = std::any_of(rules.begin(), rules.end(),
                                     [](const RuleSpec& r) { return r.attribute == Attribute::count; });
    if (counted) {
        base.count = random_base_value(Attribute::count, slots, rng);
        base.position = rng.uniform_int(0, 8);
    }

    for (auto& r : rules) {
        if (r.attribute == Attribute::overlay) continue;
        if (r.family == RuleFamily::progression) {
            r.step = progression_step(r.attribute, slots, rng);
        } else if (r.family == RuleFamily::distribution3) {
            auto ladder = value_ladder(r.attribute, slots);
            rng.shuffle(ladder.begin(), ladder.end());
            r.values = {ladder[0], ladder[1], ladder[2]};
            set_value(base, r.attribute, r.values[0]);
        }
    }
    basis.base = base;

    basis.overlay_slots = {};
    const auto overlay = std::find_if(rules.begin(), rules.end(),
                                      [](const RuleSpec& r) { return r.attribute == Attribute::overlay; });
    if (overlay != rules.end()) {
        for (auto& pair : basis.overlay_slots) {
            for (int tries = 0; tries < 64; ++tries) {
                const SlotSet a = random_slots(rng, 2, 4);
                const SlotSet b = random_slots(rng, 1, 3);
                const SlotSet both = a & b;
                bool ok = false;
                if (overlay->family == RuleFamily::addition) {
                    ok = (a | b) != a && (a | b) != b;
                } else {
                    ok = both != 0 && (a & ~b) != 0;
                }
                if (ok) {
                    pair = {a, b};
                    break;
                }
            }
        }
    }
}

class OptionBuilder {
public:
    OptionBuilder(const RenderConfig& cfg, int size) : cfg_(cfg), size_(size) {}

    // Accepts the option if its render differs from every accepted option.
    bool offer(const Cell& cell, OptionLabel label) {
        if (options_.size() >= 8) return false;
        for (const auto& s : cell) {
            if (!is_valid(s)) return false;
        }
        GrayImage render = render_cell(cell, size_, cfg_);
        for (const auto& r : renders_) {
            if (r == render) return false;
        }
        renders_.push_back(std::move(render));
        options_.push_back({cell, label});
        return true;
    }

    std::size_t size() const { return options_.size(); }
    std::vector<OptionSpec>& options() { return options_; }

private:
    const RenderConfig& cfg_;
    int size_;
    std::vector<GrayImage> renders_;
    std::vector<OptionSpec> options_;
};

Cell with_attribute(Cell cell, Attribute a, int value) {
    for (auto& s : cell) set_value(s, a, value);
    return cell;
}

Cell with_kind(Cell cell, ShapeKind kind) {
    for (auto& s : cell) s.kind = kind;
    return cell;
}

bool slot_layout(const Cell& cell) { return cell.size() > 1 || cell.front().count > 1 || cell.front().size_percent <= 30; }

// Changes one attribute of every figure in the cell to a different legal value.
Cell jitter(const Cell& cell, Attribute a, Rng& rng) {
    const int current = get_value(cell.front(), a);
    auto ladder = value_ladder(a, slot_layout(cell));
    if (a == Attribute::intensity) ladder = {0, 40, 80, 120, 160, 200};
    ladder.erase(std::remove(ladder.begin(), ladder.end(), current), ladder.end());
    return with_attribute(cell, a, ladder[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(ladder.size()) - 1))]);
}

Cell random_distractor(const Cell& truth, bool overlay, Rng& rng) {
    std::vector<int> choices{0, 1, 2, 3};  // kind, size, intensity, rotation
    if (!overlay) choices.push_back(4);   // count
    rng.shuffle(choices.begin(), choices.end());
    Cell cell = truth;
    for (int i = 0; i < 2; ++i) {
        switch (choices[static_cast<std::size_t>(i)]) {
            case 0: {
                ShapeKind k;
                do {
                    k = pick(rng, kAllKinds);
                } while (k == cell.front().kind);
                cell = with_kind(cell, k);
                break;
            }
            case 1: cell = jitter(cell, Attribute::size, rng); break;
            case 2: cell = jitter(cell, Attribute::intensity, rng); break;
            case 3: cell = jitter(cell, Attribute::rotation, rng); break;
            case 4: cell = jitter(cell, Attribute::count, rng); break;
        }
    }
    return cell;
}

// Wrong-family variants of each rule, realized at the answer cell.
std::vector<Cell> incorrect_rule_cells(const MatrixItem& item) {
    std::vector<Cell> cells;
    for (std::size_t i = 0; i < item.rules.size(); ++i) {
        const RuleSpec& rule = item.rules[i];
        std::vector<RuleSpec> variants;
        RuleSpec v = rule;
        switch (rule.family) {
            case RuleFamily::constant:
                v.family = RuleFamily::progression;
                v.step = rule.attribute == Attribute::intensity ? 50
                         : rule.attribute == Attribute::size    ? 15
                         : rule.attribute == Attribute::count   ? 1
                                                                : 45;
                variants.push_back(v);
                v.step = -v.step;
                variants.push_back(v);
                break;
            case RuleFamily::progression:
                v.family = RuleFamily::constant;
                variants.push_back(v);
                v = rule;
                v.step = -rule.step;
                variants.push_back(v);
                break;
            case RuleFamily::distribution3:
                v.family = RuleFamily::progression;
                v.step = rule.values[1] - rule.values[0];
                variants.push_back(v);
                v.family = RuleFamily::constant;
                variants.push_back(v);
                break;
            case RuleFamily::addition:
                v.family = RuleFamily::subtraction;
                variants.push_back(v);
                break;
            case RuleFamily::subtraction:
                v.family = RuleFamily::addition;
                variants.push_back(v);
                break;
        }
        for (const auto& variant : variants) {
            std::vector<RuleSpec> rules = item.rules;
            rules[i] = variant;
            try {
                cells.push_back(realize_cell(rules, 2, 2, item.basis));
            } catch (const Error&) {
                // Variant leaves the attribute range; not a usable distractor.
            }
        }
    }
    return cells;
}

// Realizations at the answer cell with one rule left out.
std::vector<Cell> incomplete_rule_cells(const MatrixItem& item) {
    std::vector<Cell> cells;
    for (std::size_t drop = 0; drop < item.rules.size(); ++drop) {
        std::vector<RuleSpec> subset;
        for (std::size_t i = 0; i < item.rules.size(); ++i) {
            if (i != drop) subset.push_back(item.rules[i]);
        }
        try {
            cells.push_back(realize_cell(subset, 2, 2, item.basis));
        } catch (const Error&) {
        }
    }
    return cells;
}

}  // namespace

std::array<OptionSpec, 8> make_distractors(const MatrixItem& item, std::uint64_t seed, int* answer_index,
                                           const RenderConfig& cfg) {
    Rng rng(seed);
    const Cell& truth = item.cells[8];
    const bool overlay = std::any_of(item.rules.begin(), item.rules.end(),
                                     [](const RuleSpec& r) { return r.attribute == Attribute::overlay; });
    OptionBuilder builder(cfg, geometry_of(cfg).interior_size());
    if (!builder.offer(truth, OptionLabel::correct)) {
        throw Error(ErrorKind::generation, item.id + ": ground truth is not drawable");
    }

    // Neighbour repetitions: cell 8 (left) and cell 6 (above), jittered when
    // they coincide with an already accepted option.
    for (const Cell* neighbour : {&item.cells[7], &item.cells[5]}) {
        if (builder.offer(*neighbour, OptionLabel::repetition_neighbour)) continue;
        bool placed = false;
        for (int t = 0; t < 16 && !placed; ++t) {
            const Attribute a = t % 2 == 0 ? Attribute::intensity : Attribute::size;
            placed = builder.offer(jitter(*neighbour, a, rng), OptionLabel::repetition_neighbour);
        }
        if (!placed) throw Error(ErrorKind::generation, item.id + ": no distinct neighbour repetition");
    }

    auto wrong = incorrect_rule_cells(item);
    rng.shuffle(wrong.begin(), wrong.end());
    int accepted = 0;
    for (const auto& cell : wrong) {
        if (accepted == 2) break;
        if (builder.offer(cell, OptionLabel::incorrect_rule)) ++accepted;
    }
    for (int t = 0; t < 32 && accepted < 2 && !wrong.empty(); ++t) {
        const Cell& source = wrong[static_cast<std::size_t>(t) % wrong.size()];
        if (builder.offer(jitter(source, Attribute::intensity, rng), OptionLabel::incorrect_rule)) ++accepted;
    }
    if (accepted == 0) throw Error(ErrorKind::generation, item.id + ": no incorrect-rule distractor");

    auto partial = incomplete_rule_cells(item);
    rng.shuffle(partial.begin(), partial.end());
    for (const auto& cell : partial) {
        if (builder.offer(cell, OptionLabel::incomplete_rule)) break;
    }

    for (int t = 0; builder.size() < 8 && t < 256; ++t) {
        builder.offer(random_distractor(truth, overlay, rng), OptionLabel::random);
    }
    if (builder.size() < 8) throw Error(ErrorKind::generation, item.id + ": fewer than 8 distinct options");

    auto& built = builder.options();
    std::array<int, 8> order{0, 1, 2, 3, 4, 5, 6, 7};
    rng.shuffle(order.begin(), order.end());
    std::array<OptionSpec, 8> options;
    for (std::size_t k = 0; k < 8; ++k) {
        options[k] = built[static_cast<std::size_t>(order[k])];
        if (order[k] == 0 && answer_index) *answer_index = static_cast<int>(k);
    }
    return options;
}

MatrixItem generate_item(int index, std::uint64_t item_seed, const ProfileEntry& entry, const RenderConfig& cfg) {
    if (entry.rule_count < 1 || entry.rule_count > 3) {
        throw Error(ErrorKind::invalid_argument, "item " + std::to_string(index) + ": rule count must be 1..3");
    }
    MatrixItem item;
    char id[32];
    std::snprintf(id, sizeof id, "item_%03d", index + 1);
    item.id = id;
    item.seed = item_seed;
    item.difficulty_rank = index + 1;

    for (int attempt = 0; attempt < kMaxResamplingAttempts; ++attempt) {
        Rng rng(derive_seed(item_seed, static_cast<std::uint64_t>(attempt)));
        try {
            draw_structure(entry, rng, item.rules, item.basis);
            validate_rules(item.rules);
            for (int cell = 0; cell < 9; ++cell) {
                item.cells[static_cast<std::size_t>(cell)] = realize_cell(item.rules, cell / 3, cell % 3, item.basis);
            }
            item.options = make_distractors(item, rng.next(), &item.answer_index, cfg);
            return item;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::generation) throw;
        }
    }
    throw Error(ErrorKind::generation, "item index " + std::to_string(index) + " (" + item.id +
                                           "): no valid realization after " +
                                           std::to_string(kMaxResamplingAttempts) + " resampling attempts");
}

std::vector<MatrixItem> generate_battery(std::uint64_t seed, int n_items, const DifficultyProfile& profile,
                                         const RenderConfig& cfg) {
    if (n_items < 1) throw Error(ErrorKind::invalid_argument, "battery needs at least one item");
    if (profile.entries.size() != static_cast<std::size_t>(n_items)) {
        throw Error(ErrorKind::invalid_argument, "profile length must equal the item count");
    }
    validate(cfg);
    for (std::size_t i = 0; i < profile.entries.size(); ++i) {
        const int rc = profile.entries[i].rule_count;
        if (rc < 1 || rc > 3) {
            throw Error(ErrorKind::invalid_argument,
                        "profile entry " + std::to_string(i) + " asks for " + std::to_string(rc) + " rules (max 3)");
        }
        if (i > 0 && rc < profile.entries[i - 1].rule_count) {
            throw Error(ErrorKind::invalid_argument, "profile rule counts must be non-decreasing");
        }
    }
    std::vector<MatrixItem> items;
    items.reserve(static_cast<std::size_t>(n_items));
    for (int i = 0; i < n_items; ++i) {
        items.push_back(generate_item(i, derive_seed(seed, static_cast<std::uint64_t>(i)),
                                      profile.entries[static_cast<std::size_t>(i)], cfg));
    }
    return items;
}

}  // namespace ravenbench::matrixgen
