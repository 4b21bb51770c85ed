#include "ravenbench/pipeline.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <toml.hpp>

namespace ravenbench::pipeline {

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorKind::config, msg); }

void check_keys(const toml::table& t, const std::string& where, std::initializer_list<const char*> allowed) {
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, node] : t) {
        (void)node;
        if (!ok.count(std::string(key.str()))) {
            bad(where.empty() ? fmt::format("unknown key '{}'", key.str())
                              : fmt::format("unknown key '{}' in [{}]", key.str(), where));
        }
    }
}

template <class T>
void read(const toml::table& t, const char* key, T& out, const std::string& where) {
    const toml::node* n = t.get(key);
    if (!n) return;
    const std::string name = where.empty() ? key : where + "." + key;
    if constexpr (std::is_same_v<T, bool>) {
        if (!n->is_boolean()) bad(name + " must be a boolean");
        out = *n->value<bool>();
    } else if constexpr (std::is_integral_v<T>) {
        if (!n->is_integer()) bad(name + " must be an integer");
        const std::int64_t v = *n->value<std::int64_t>();
        if constexpr (std::is_unsigned_v<T>) {
            if (v < 0) bad(name + " must be >= 0");
        }
        out = static_cast<T>(v);
    } else if constexpr (std::is_floating_point_v<T>) {
        if (!n->is_number()) bad(name + " must be a number");
        out = *n->value<double>();
    } else {
        if (!n->is_string()) bad(name + " must be a string");
        out = T(*n->value<std::string>());
    }
}

const toml::table* section(const toml::table& root, const char* name) {
    const toml::node* n = root.get(name);
    if (!n) return nullptr;
    if (!n->is_table()) bad(fmt::format("[{}] must be a table", name));
    return n->as_table();
}

}  // namespace

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
    toml::table root;
    try {
        root = toml::parse(text);
    } catch (const toml::parse_error& e) {
        bad(fmt::format("TOML parse error at line {}: {}", e.source().begin.line, e.description()));
    }
    RunConfig cfg;
    cfg.source_text = std::string(text);
    check_keys(root, "", {"seed", "items", "reps", "workers", "output", "substrate", "perturbation", "registration",
                          "metrics", "psych", "stats"});
    read(root, "seed", cfg.seed, "");
    read(root, "items", cfg.items, "");
    read(root, "reps", cfg.reps, "");
    read(root, "workers", cfg.workers, "");
    std::string output;
    read(root, "output", output, "");
    if (output.empty()) bad("output directory is required");
    cfg.output = base_dir / output;

    if (const auto* t = section(root, "substrate")) {
        check_keys(*t, "substrate", {"kind", "command", "timeout_seconds", "constant_level", "local_iterations",
                                     "local_kernel_radius", "local_tolerance"});
        read(*t, "kind", cfg.substrate.kind, "substrate");
        read(*t, "timeout_seconds", cfg.substrate.timeout_seconds, "substrate");
        read(*t, "constant_level", cfg.substrate.constant_level, "substrate");
        read(*t, "local_iterations", cfg.substrate.local.iterations, "substrate");
        read(*t, "local_kernel_radius", cfg.substrate.local.kernel_radius, "substrate");
        read(*t, "local_tolerance", cfg.substrate.local.tolerance, "substrate");
        if (const toml::node* c = t->get("command")) {
            const toml::array* arr = c->as_array();
            if (!arr) bad("substrate.command must be an array of strings");
            for (const auto& e : *arr) {
                if (!e.is_string()) bad("substrate.command must be an array of strings");
                cfg.substrate.command.push_back(*e.value<std::string>());
            }
        }
    }
    if (const auto* t = section(root, "perturbation")) {
        check_keys(*t, "perturbation", {"sigma_min", "sigma_max", "brightness_max"});
        read(*t, "sigma_min", cfg.perturbation.sigma_min, "perturbation");
        read(*t, "sigma_max", cfg.perturbation.sigma_max, "perturbation");
        read(*t, "brightness_max", cfg.perturbation.brightness_max, "perturbation");
    }
    if (const auto* t = section(root, "registration")) {
        auto& r = cfg.evaluation.registration;
        check_keys(*t, "registration", {"enabled", "fast_threshold", "max_corners", "min_arc", "ransac_threshold",
                                        "ransac_iterations", "ransac_seed", "min_inliers", "confidence",
                                        "max_corner_shift", "layout_seed"});
        read(*t, "enabled", cfg.evaluation.register_enabled, "registration");
        read(*t, "fast_threshold", r.corners.threshold, "registration");
        read(*t, "max_corners", r.corners.max_n, "registration");
        read(*t, "min_arc", r.corners.min_arc, "registration");
        read(*t, "ransac_threshold", r.ransac.threshold, "registration");
        read(*t, "ransac_iterations", r.ransac.max_iters, "registration");
        read(*t, "ransac_seed", r.ransac.seed, "registration");
        read(*t, "min_inliers", r.ransac.min_inliers, "registration");
        read(*t, "confidence", r.ransac.confidence, "registration");
        read(*t, "max_corner_shift", r.max_corner_shift, "registration");
        read(*t, "layout_seed", r.layout_seed, "registration");
    }
    if (const auto* t = section(root, "metrics")) {
        check_keys(*t, "metrics", {"nmi_bins", "ergas_ratio"});
        read(*t, "nmi_bins", cfg.evaluation.metrics.nmi_bins, "metrics");
        read(*t, "ergas_ratio", cfg.evaluation.metrics.ergas_ratio, "metrics");
    }
    if (const auto* t = section(root, "psych")) {
        auto& g = cfg.grid;
        check_keys(*t, "psych", {"m_count", "m_lo", "m_hi", "s_count", "s_lo", "s_hi", "lambda_count", "lambda_lo",
                                 "lambda_hi", "lambda_beta_a", "lambda_beta_b", "boundary_fraction", "performance",
                                 "level"});
        read(*t, "m_count", g.m_count, "psych");
        read(*t, "m_lo", g.m_lo, "psych");
        read(*t, "m_hi", g.m_hi, "psych");
        read(*t, "s_count", g.s_count, "psych");
        read(*t, "s_lo", g.s_lo, "psych");
        read(*t, "s_hi", g.s_hi, "psych");
        read(*t, "lambda_count", g.lambda_count, "psych");
        read(*t, "lambda_lo", g.lambda_lo, "psych");
        read(*t, "lambda_hi", g.lambda_hi, "psych");
        read(*t, "lambda_beta_a", g.lambda_beta_a, "psych");
        read(*t, "lambda_beta_b", g.lambda_beta_b, "psych");
        read(*t, "boundary_fraction", g.boundary_fraction, "psych");
        read(*t, "performance", cfg.performance, "psych");
        read(*t, "level", cfg.level, "psych");
    }
    if (const auto* t = section(root, "stats")) {
        check_keys(*t, "stats", {"alpha", "cohort", "reference_group"});
        read(*t, "alpha", cfg.alpha, "stats");
        std::string cohort;
        read(*t, "cohort", cohort, "stats");
        if (!cohort.empty()) cfg.cohort = base_dir / cohort;
        read(*t, "reference_group", cfg.reference_group, "stats");
    }
    validate(cfg);
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(ErrorKind::config, "cannot read config " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), file.parent_path());
}

void validate(const RunConfig& cfg) {
    if (cfg.items < 3 || cfg.items > 999) bad("items must be in 3..999");
    if (cfg.reps < 1 || cfg.reps > 10000) bad("reps must be in 1..10000");
    if (cfg.workers < 1 || cfg.workers > 256) bad("workers must be in 1..256");
    static const std::set<std::string> kinds{"local", "lattice", "external", "oracle", "constant"};
    if (!kinds.count(cfg.substrate.kind)) bad("substrate.kind must be local, lattice, external, oracle or constant");
    if (cfg.substrate.kind == "external" && cfg.substrate.command.empty()) bad("external substrate needs a command");
    if (!(cfg.substrate.timeout_seconds > 0)) bad("substrate.timeout_seconds must be > 0");
    if (cfg.substrate.constant_level < 0 || cfg.substrate.constant_level > 255) bad("substrate.constant_level must be 0..255");
    const auto& l = cfg.substrate.local;
    if (l.iterations < 1 || l.kernel_radius < 1 || l.kernel_radius > 8 || !(l.tolerance > 0)) {
        bad("local substrate needs iterations >= 1, kernel radius 1..8 and tolerance > 0");
    }
    const auto& p = cfg.perturbation;
    if (!(p.sigma_min >= 0 && p.sigma_max >= p.sigma_min && p.sigma_max <= 128)) bad("perturbation sigma range is invalid");
    if (p.brightness_max < 0 || p.brightness_max > 255) bad("perturbation.brightness_max must be 0..255");
    const auto& r = cfg.evaluation.registration;
    if (r.corners.threshold < 1 || r.corners.threshold > 255) bad("registration.fast_threshold must be 1..255");
    if (r.corners.max_n < 4) bad("registration.max_corners must be >= 4");
    if (r.corners.min_arc < 9 || r.corners.min_arc > 16) bad("registration.min_arc must be 9..16");
    if (!(r.ransac.threshold > 0) || r.ransac.max_iters < 1 || r.ransac.min_inliers < 4) {
        bad("registration needs ransac_threshold > 0, ransac_iterations >= 1 and min_inliers >= 4");
    }
    if (!(r.ransac.confidence > 0 && r.ransac.confidence < 1)) bad("registration.confidence must be in (0, 1)");
    if (!(r.max_corner_shift > 0)) bad("registration.max_corner_shift must be > 0");
    if (cfg.evaluation.metrics.nmi_bins < 2 || cfg.evaluation.metrics.nmi_bins > 256) bad("metrics.nmi_bins must be 2..256");
    if (!(cfg.evaluation.metrics.ergas_ratio > 0)) bad("metrics.ergas_ratio must be > 0");
    const auto& g = cfg.grid;
    if (g.m_count < 2 || g.s_count < 1 || g.lambda_count < 1 || g.m_count * g.s_count * g.lambda_count > 5'000'000) {
        bad("psych grid sizes are invalid");
    }
    if (!(g.m_hi > g.m_lo) || !(g.s_lo >= 0 && g.s_hi > g.s_lo) || !(g.lambda_lo >= 0 && g.lambda_hi >= g.lambda_lo) ||
        !(g.lambda_hi < 1.0 - psychfit::kGuessRate)) {
        bad("psych grid ranges are invalid");
    }
    if (!(g.lambda_beta_a > 0 && g.lambda_beta_b > 0)) bad("psych lambda prior parameters must be > 0");
    if (!(g.boundary_fraction >= 0 && g.boundary_fraction < 0.5)) bad("psych.boundary_fraction must be in [0, 0.5)");
    if (!(cfg.performance > 0 && cfg.performance < 1)) bad("psych.performance must be in (0, 1)");
    if (!(cfg.level > 0 && cfg.level < 1)) bad("psych.level must be in (0, 1)");
    if (!(cfg.alpha > 0 && cfg.alpha < 1)) bad("stats.alpha must be in (0, 1)");
}

}  // namespace ravenbench::pipeline
