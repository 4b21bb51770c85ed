#include "ravenbench/manifest.hpp"

#include "ravenbench/error.hpp"

#include <cstdio>

namespace ravenbench {

using nlohmann::json;
using namespace matrixgen;

namespace {

template <class Enum, std::size_t N>
Enum parse_enum(const std::string& name, const std::array<Enum, N>& all) {
    for (Enum e : all) {
        if (name == to_string(e)) return e;
    }
    throw Error(ErrorKind::config, "unknown enum value '" + name + "'");
}

constexpr std::array<ShapeKind, 5> kKinds{ShapeKind::disc, ShapeKind::square, ShapeKind::triangle, ShapeKind::bar,
                                         ShapeKind::cross};
constexpr std::array<Attribute, 5> kAttributes{Attribute::size, Attribute::intensity, Attribute::count,
                                              Attribute::rotation, Attribute::overlay};
constexpr std::array<RuleFamily, 5> kFamilies{RuleFamily::constant, RuleFamily::progression, RuleFamily::addition,
                                             RuleFamily::subtraction, RuleFamily::distribution3};
constexpr std::array<Axis, 2> kAxes{Axis::row, Axis::column};
constexpr std::array<OptionLabel, 5> kLabels{OptionLabel::correct, OptionLabel::repetition_neighbour,
                                            OptionLabel::incorrect_rule, OptionLabel::incomplete_rule,
                                            OptionLabel::random};
constexpr std::array<FamilyTier, 4> kTiers{FamilyTier::constant_only, FamilyTier::basic, FamilyTier::permutation,
                                          FamilyTier::composite};

json shape_json(const ShapeSpec& s) {
    return {{"kind", to_string(s.kind)},   {"size", s.size_percent / 100.0}, {"size_percent", s.size_percent},
            {"intensity", s.intensity},    {"count", s.count},               {"rotation", s.rotation},
            {"position", s.position}};
}

ShapeSpec shape_from(const json& j) {
    ShapeSpec s;
    s.kind = parse_enum(j.at("kind").get<std::string>(), kKinds);
    s.size_percent = j.at("size_percent").get<int>();
    s.intensity = j.at("intensity").get<int>();
    s.count = j.at("count").get<int>();
    s.rotation = j.at("rotation").get<int>();
    s.position = j.at("position").get<int>();
    return s;
}

json cell_json(const Cell& cell) {
    json out = json::array();
    for (const auto& s : cell) out.push_back(shape_json(s));
    return out;
}

Cell cell_from(const json& j) {
    Cell cell;
    for (const auto& s : j) cell.push_back(shape_from(s));
    return cell;
}

}  // namespace

json to_json(const MatrixItem& item) {
    json rules = json::array();
    for (const auto& r : item.rules) {
        rules.push_back({{"attribute", to_string(r.attribute)},
                         {"family", to_string(r.family)},
                         {"axis", to_string(r.axis)},
                         {"step", r.step},
                         {"values", r.values}});
    }
    json slots = json::array();
    for (const auto& pair : item.basis.overlay_slots) slots.push_back({pair[0], pair[1]});
    json cells = json::array();
    for (const auto& c : item.cells) cells.push_back(cell_json(c));
    json options = json::array();
    for (const auto& o : item.options) options.push_back({{"label", to_string(o.label)}, {"cell", cell_json(o.cell)}});
    return {{"id", item.id},
            {"seed", item.seed},
            {"difficulty_rank", item.difficulty_rank},
            {"answer_index", item.answer_index},
            {"rules", rules},
            {"basis", {{"base", shape_json(item.basis.base)}, {"overlay_slots", slots}}},
            {"cells", cells},
            {"options", options}};
}

MatrixItem item_from_json(const json& j) {
    MatrixItem item;
    item.id = j.at("id").get<std::string>();
    item.seed = j.at("seed").get<std::uint64_t>();
    item.difficulty_rank = j.at("difficulty_rank").get<int>();
    item.answer_index = j.at("answer_index").get<int>();
    for (const auto& r : j.at("rules")) {
        RuleSpec rule;
        rule.attribute = parse_enum(r.at("attribute").get<std::string>(), kAttributes);
        rule.family = parse_enum(r.at("family").get<std::string>(), kFamilies);
        rule.axis = parse_enum(r.at("axis").get<std::string>(), kAxes);
        rule.step = r.at("step").get<int>();
        rule.values = r.at("values").get<std::array<int, 3>>();
        item.rules.push_back(rule);
    }
    item.basis.base = shape_from(j.at("basis").at("base"));
    const auto& slots = j.at("basis").at("overlay_slots");
    for (std::size_t i = 0; i < 3; ++i) {
        item.basis.overlay_slots[i] = {slots.at(i).at(0).get<SlotSet>(), slots.at(i).at(1).get<SlotSet>()};
    }
    for (std::size_t i = 0; i < 9; ++i) item.cells[i] = cell_from(j.at("cells").at(i));
    for (std::size_t k = 0; k < 8; ++k) {
        const auto& o = j.at("options").at(k);
        item.options[k].label = parse_enum(o.at("label").get<std::string>(), kLabels);
        item.options[k].cell = cell_from(o.at("cell"));
    }
    return item;
}

json to_json(const BatteryManifest& m) {
    json profile = json::array();
    for (const auto& e : m.profile.entries) {
        profile.push_back({{"rule_count", e.rule_count}, {"tier", to_string(e.tier)}});
    }
    json items = json::array();
    for (const auto& item : m.items) items.push_back(to_json(item));
    return {{"format", "ravenbench-battery/1"},
            {"seed", m.seed},
            {"n_items", m.items.size()},
            {"profile", profile},
            {"render",
             {{"image_size", m.render.image_size},
              {"origin", m.render.origin},
              {"pitch", m.render.pitch},
              {"border", m.render.border},
              {"background", m.render.background},
              {"line", m.render.line}}},
            {"distractor_taxonomy",
             {{"per_item", {{"correct", 1}, {"repetition_neighbour", 2}, {"incorrect_rule", 2},
                            {"incomplete_rule", 1}, {"random", 2}}},
              {"note", "label frequencies are a generator choice, not derived from the original test"}}},
            {"items", items}};
}

BatteryManifest manifest_from_json(const json& j) {
    BatteryManifest m;
    try {
        m.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& e : j.at("profile")) {
            m.profile.entries.push_back(
                {e.at("rule_count").get<int>(), parse_enum(e.at("tier").get<std::string>(), kTiers)});
        }
        const auto& r = j.at("render");
        m.render.image_size = r.at("image_size").get<int>();
        m.render.origin = r.at("origin").get<int>();
        m.render.pitch = r.at("pitch").get<int>();
        m.render.border = r.at("border").get<int>();
        m.render.background = r.at("background").get<std::uint8_t>();
        m.render.line = r.at("line").get<std::uint8_t>();
        for (const auto& item : j.at("items")) m.items.push_back(item_from_json(item));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::io, std::string("malformed battery manifest: ") + e.what());
    }
    return m;
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string manifest_hash(const BatteryManifest& manifest) { return fnv1a_hex(to_json(manifest).dump(2)); }

}  // namespace ravenbench
