#include "ravenbench/error.hpp"
#include "ravenbench/manifest.hpp"
#include "ravenbench/matrixgen.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

using namespace ravenbench;
using namespace ravenbench::matrixgen;

namespace {

const std::vector<MatrixItem>& seed0() {
    static const auto items = generate_battery(0, 12, DifficultyProfile::standard(12));
    return items;
}

std::set<int> slots_of(const Cell& cell) {
    std::set<int> s;
    for (const auto& shape : cell) s.insert(shape.position);
    return s;
}

}  // namespace

TEST(Rules, ConstantIntensityCopiesBase) {
    ItemBasis basis;
    basis.base.intensity = 100;
    const std::vector<RuleSpec> rules{{Attribute::intensity, RuleFamily::constant, Axis::row}};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) EXPECT_EQ(realize_cell(rules, r, c, basis).front().intensity, 100);
}

TEST(Rules, RowProgressionOnCount) {
    ItemBasis basis;
    basis.base.count = 1;
    RuleSpec rule{Attribute::count, RuleFamily::progression, Axis::row};
    rule.step = 1;
    const std::vector<RuleSpec> rules{rule};
    for (int r = 0; r < 3; ++r) {
        EXPECT_EQ(realize_cell(rules, r, 0, basis).front().count, 1);
        EXPECT_EQ(realize_cell(rules, r, 1, basis).front().count, 2);
        EXPECT_EQ(realize_cell(rules, r, 2, basis).front().count, 3);
    }
}

TEST(Rules, OverlaySubtractionIsSetDifference) {
    ItemBasis basis;
    basis.overlay_slots[2] = {static_cast<SlotSet>((1 << 0) | (1 << 1) | (1 << 4)), static_cast<SlotSet>(1 << 1)};
    const std::vector<RuleSpec> rules{{Attribute::overlay, RuleFamily::subtraction, Axis::row}};
    EXPECT_EQ(slots_of(realize_cell(rules, 2, 2, basis)), (std::set<int>{0, 4}));
    EXPECT_EQ(slots_of(realize_cell(rules, 2, 0, basis)), (std::set<int>{0, 1, 4}));
}

TEST(Rules, OverlayAdditionIsUnion) {
    ItemBasis basis;
    basis.overlay_slots[0] = {static_cast<SlotSet>(0b11), static_cast<SlotSet>(0b100000000)};
    const std::vector<RuleSpec> rules{{Attribute::overlay, RuleFamily::addition, Axis::row}};
    EXPECT_EQ(slots_of(realize_cell(rules, 0, 2, basis)), (std::set<int>{0, 1, 8}));
}

TEST(Rules, Distribution3IsLatinSquare) {
    ItemBasis basis;
    RuleSpec rule{Attribute::rotation, RuleFamily::distribution3, Axis::column};
    rule.values = {0, 45, 90};
    const std::vector<RuleSpec> rules{rule};
    for (int i = 0; i < 3; ++i) {
        std::set<int> row, col;
        for (int j = 0; j < 3; ++j) {
            row.insert(realize_cell(rules, i, j, basis).front().rotation);
            col.insert(realize_cell(rules, j, i, basis).front().rotation);
        }
        EXPECT_EQ(row.size(), 3u);
        EXPECT_EQ(col.size(), 3u);
    }
}

TEST(Rules, OutOfRangeProgressionIsRejectedNotClamped) {
    ItemBasis basis;
    basis.base.intensity = 200;
    RuleSpec rule{Attribute::intensity, RuleFamily::progression, Axis::row};
    rule.step = 40;
    const std::vector<RuleSpec> rules{rule};
    EXPECT_EQ(realize_cell(rules, 0, 1, basis).front().intensity, 240);
    try {
        realize_cell(rules, 0, 2, basis);
        FAIL() << "expected a generation error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::generation);
    }
}

TEST(Rules, StructuralValidation) {
    const RuleSpec size_c{Attribute::size, RuleFamily::constant, Axis::row};
    const RuleSpec overlay_add{Attribute::overlay, RuleFamily::addition, Axis::row};
    const RuleSpec count_p{Attribute::count, RuleFamily::progression, Axis::row, 1};
    EXPECT_NO_THROW(validate_rules(std::vector<RuleSpec>{size_c, overlay_add}));
    EXPECT_THROW(validate_rules(std::vector<RuleSpec>{}), Error);
    EXPECT_THROW(validate_rules(std::vector<RuleSpec>{size_c, size_c}), Error);
    EXPECT_THROW(validate_rules(std::vector<RuleSpec>{{Attribute::overlay, RuleFamily::constant, Axis::row}}), Error);
    EXPECT_THROW(validate_rules(std::vector<RuleSpec>{{Attribute::size, RuleFamily::addition, Axis::row}}), Error);
    EXPECT_THROW(validate_rules(std::vector<RuleSpec>{overlay_add, count_p}), Error);
    const RuleSpec a{Attribute::intensity, RuleFamily::constant, Axis::row};
    const RuleSpec b{Attribute::rotation, RuleFamily::constant, Axis::row};
    EXPECT_THROW(validate_rules(std::vector<RuleSpec>{size_c, a, b, count_p}), Error);
}

TEST(Battery, DefaultSeedZeroShapeAndDeterminism) {
    const auto& items = seed0();
    ASSERT_EQ(items.size(), 12u);
    for (std::size_t i = 0; i < items.size(); ++i) EXPECT_EQ(items[i].difficulty_rank, static_cast<int>(i) + 1);
    const auto again = generate_battery(0, 12, DifficultyProfile::standard(12));
    EXPECT_EQ(items, again);
    BatteryManifest a{0, DifficultyProfile::standard(12), {}, items};
    BatteryManifest b{0, DifficultyProfile::standard(12), {}, again};
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
    EXPECT_EQ(manifest_hash(a), manifest_hash(b));
}

TEST(Battery, DifferentSeedsDiffer) {
    EXPECT_NE(generate_battery(1, 12, DifficultyProfile::standard(12)), seed0());
}

TEST(Battery, RuleCountIsMonotone) {
    const auto& items = seed0();
    for (std::size_t i = 1; i < items.size(); ++i) EXPECT_LE(items[i - 1].rules.size(), items[i].rules.size());
    EXPECT_EQ(items.front().rules.size(), 1u);
    EXPECT_EQ(items.back().rules.size(), 3u);
}

TEST(Battery, ConstantOnlyItemHasIdenticalCells) {
    const auto items = generate_battery(0, 1, DifficultyProfile::constant_only(1));
    ASSERT_EQ(items.size(), 1u);
    for (const auto& c : items[0].cells) EXPECT_EQ(c, items[0].cells[0]);
}

TEST(Battery, RejectsBadProfiles) {
    DifficultyProfile too_many{{{4, FamilyTier::basic}}};
    EXPECT_THROW(generate_battery(0, 1, too_many), Error);
    DifficultyProfile decreasing{{{2, FamilyTier::basic}, {1, FamilyTier::basic}}};
    EXPECT_THROW(generate_battery(0, 2, decreasing), Error);
    EXPECT_THROW(generate_battery(0, 3, DifficultyProfile::standard(2)), Error);
}

TEST(Battery, ExactlyOneOptionRendersAsTruthSeed7) {
    const RenderConfig cfg;
    const auto items = generate_battery(7, 12, DifficultyProfile::standard(12), cfg);
    const int size = geometry_of(cfg).interior_size();
    for (const auto& item : items) {
        const GrayImage truth = render_cell(item.cells[8], size, cfg);
        int equal = 0, equal_index = -1;
        for (int k = 0; k < 8; ++k) {
            if (render_cell(item.options[static_cast<std::size_t>(k)].cell, size, cfg) == truth) {
                ++equal;
                equal_index = k;
            }
        }
        EXPECT_EQ(equal, 1) << item.id;
        EXPECT_EQ(equal_index, item.answer_index) << item.id;
    }
}

TEST(Distractors, LabelsAndDistinctness) {
    const RenderConfig cfg;
    const int size = geometry_of(cfg).interior_size();
    std::map<OptionLabel, int> totals;
    for (const auto& item : seed0()) {
        std::map<OptionLabel, int> labels;
        std::vector<GrayImage> renders;
        for (const auto& o : item.options) {
            ++labels[o.label];
            ++totals[o.label];
            renders.push_back(render_cell(o.cell, size, cfg));
        }
        EXPECT_EQ(labels[OptionLabel::correct], 1) << item.id;
        EXPECT_GE(labels[OptionLabel::repetition_neighbour], 1) << item.id;
        EXPECT_GE(labels[OptionLabel::incorrect_rule], 1) << item.id;
        EXPECT_EQ(item.options[static_cast<std::size_t>(item.answer_index)].label, OptionLabel::correct);
        for (std::size_t a = 0; a < renders.size(); ++a)
            for (std::size_t b = a + 1; b < renders.size(); ++b) EXPECT_NE(renders[a], renders[b]) << item.id;
    }
    for (auto label : {OptionLabel::repetition_neighbour, OptionLabel::incorrect_rule, OptionLabel::incomplete_rule,
                       OptionLabel::random}) {
        EXPECT_GE(totals[label], 5) << to_string(label);
    }
}

TEST(Distractors, ConstantOnlyItemStillHasEightDistinctOptions) {
    const RenderConfig cfg;
    const int size = geometry_of(cfg).interior_size();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto item = generate_battery(seed, 1, DifficultyProfile::constant_only(1))[0];
        std::vector<GrayImage> renders;
        for (const auto& o : item.options) renders.push_back(render_cell(o.cell, size, cfg));
        for (std::size_t a = 0; a < 8; ++a)
            for (std::size_t b = a + 1; b < 8; ++b) EXPECT_NE(renders[a], renders[b]);
    }
}

TEST(Distractors, IncompleteRuleSatisfiesSomeButNotAllRules) {
    // Composite items carry an overlay rule plus scalar rules.
    int checked = 0;
    for (const auto& item : seed0()) {
        const bool has_overlay = std::any_of(item.rules.begin(), item.rules.end(),
                                             [](const RuleSpec& r) { return r.attribute == Attribute::overlay; });
        if (!has_overlay) continue;
        for (const auto& o : item.options) {
            if (o.label != OptionLabel::incomplete_rule) continue;
            int satisfied = 0;
            for (const auto& rule : item.rules) {
                std::vector<RuleSpec> alone{rule};
                bool ok = false;
                if (rule.attribute == Attribute::overlay) {
                    ok = slots_of(o.cell) == slots_of(item.cells[8]);
                } else {
                    const auto& t = item.cells[8].front();
                    const auto& s = o.cell.front();
                    switch (rule.attribute) {
                        case Attribute::size: ok = s.size_percent == t.size_percent; break;
                        case Attribute::intensity: ok = s.intensity == t.intensity; break;
                        case Attribute::count: ok = s.count == t.count; break;
                        case Attribute::rotation: ok = s.rotation == t.rotation; break;
                        default: break;
                    }
                }
                satisfied += ok;
            }
            EXPECT_GE(satisfied, 1) << item.id;
            EXPECT_LT(satisfied, static_cast<int>(item.rules.size())) << item.id;
            ++checked;
        }
    }
    EXPECT_GE(checked, 1);
}

TEST(Distractors, SameSeedSameOrder) {
    const auto& item = seed0()[5];
    int a = -1, b = -1;
    const auto x = make_distractors(item, 1234, &a);
    const auto y = make_distractors(item, 1234, &b);
    EXPECT_EQ(x, y);
    EXPECT_EQ(a, b);
}

TEST(Render, GeometryAndMask) {
    const RenderConfig cfg;
    for (const auto& item : seed0()) {
        const auto rc = render_case(item, cfg);
        EXPECT_EQ(rc.image.width(), 512);
        EXPECT_EQ(rc.image.height(), 512);
        EXPECT_EQ(rc.mask.bounds(), rc.geometry.interior(8));
        EXPECT_EQ(rc.mask.count(), static_cast<std::size_t>(rc.geometry.interior_size() * rc.geometry.interior_size()));
        for (const auto& opt : rc.option_cells) {
            EXPECT_EQ(opt.width(), rc.geometry.pitch - rc.geometry.border);
            EXPECT_EQ(opt.height(), rc.geometry.pitch - rc.geometry.border);
        }
    }
}

TEST(Render, ConstantItemCellsRenderIdentically) {
    const auto item = generate_battery(3, 1, DifficultyProfile::constant_only(1))[0];
    const auto rc = render_case(item, {});
    EXPECT_EQ(crop(rc.image, rc.geometry.interior(0)), crop(rc.image, rc.geometry.interior(4)));
}

TEST(Render, PastedCorrectOptionEqualsFullRender) {
    const RenderConfig cfg;
    for (const auto& item : seed0()) {
        const auto rc = render_case(item, cfg);
        const GrayImage full = render_matrix(item, cfg, &item.cells[8]);
        GrayImage composed = rc.image;
        const Rect r = rc.geometry.interior(8);
        paste(composed, rc.option_cells[static_cast<std::size_t>(item.answer_index)], r.x, r.y);
        EXPECT_EQ(composed, full) << item.id;
        EXPECT_EQ(complete_with_option(rc, item.answer_index), full) << item.id;
    }
}

TEST(Render, RejectsBadConfig) {
    RenderConfig cfg;
    cfg.pitch = 200;  // 3 cells no longer fit in 512
    EXPECT_THROW(validate(cfg), Error);
}

TEST(Manifest, RoundTrip) {
    BatteryManifest m{0, DifficultyProfile::standard(12), {}, seed0()};
    const auto back = manifest_from_json(to_json(m));
    EXPECT_EQ(back.items, m.items);
    EXPECT_EQ(back.profile.entries, m.profile.entries);
    EXPECT_EQ(manifest_hash(back), manifest_hash(m));
}

TEST(Manifest, Fnv1aKnownValues) {
    EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
    EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}
