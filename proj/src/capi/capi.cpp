#include "ravenbench/ravenbench.h"

#include "ravenbench/error.hpp"
#include "ravenbench/manifest.hpp"
#include "ravenbench/pipeline.hpp"

#include "../pipeline/io.hpp"

#include <fstream>
#include <memory>
#include <new>
#include <string>

struct rb_battery {
    ravenbench::BatteryManifest manifest;
    std::string hash;
};

struct rb_run {
    std::string dir;
    nlohmann::json report;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_kind;

rb_status status_for(ravenbench::ErrorKind kind) {
    using ravenbench::ErrorKind;
    if (kind == ErrorKind::invalid_argument) return RB_ERR_ARGUMENT;
    if (kind == ErrorKind::battery_mismatch) return RB_ERR_BATTERY_MISMATCH;
    return static_cast<rb_status>(ravenbench::pipeline::exit_code_for(kind));
}

template <class Fn>
rb_status guarded(Fn&& fn) {
    g_error.clear();
    g_kind.clear();
    try {
        fn();
        return RB_OK;
    } catch (const ravenbench::Error& e) {
        g_error = e.what();
        g_kind = ravenbench::to_string(e.kind());
        return status_for(e.kind());
    } catch (const std::bad_alloc&) {
        g_error = "out of memory";
        g_kind = "Internal";
        return RB_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_error = e.what();
        g_kind = "Internal";
        return RB_ERR_INTERNAL;
    }
}

rb_status null_argument(const char* name) {
    g_error = std::string(name) + " is null";
    g_kind = "InvalidArgument";
    return RB_ERR_ARGUMENT;
}

}  // namespace

extern "C" {

const char* rb_version(void) { return ravenbench::pipeline::version(); }
const char* rb_last_error(void) { return g_error.c_str(); }
const char* rb_last_error_kind(void) { return g_kind.c_str(); }

rb_status rb_battery_generate(uint64_t seed, int n_items, rb_battery** out) {
    if (!out) return null_argument("out");
    *out = nullptr;
    return guarded([&] {
        if (n_items < 3 || n_items > 999) throw ravenbench::Error(ravenbench::ErrorKind::invalid_argument, "n_items must be in 3..999");
        auto b = std::make_unique<rb_battery>();
        b->manifest.seed = seed;
        b->manifest.profile = ravenbench::matrixgen::DifficultyProfile::standard(n_items);
        b->manifest.items = ravenbench::matrixgen::generate_battery(seed, n_items, b->manifest.profile, b->manifest.render);
        b->hash = ravenbench::manifest_hash(b->manifest);
        *out = b.release();
    });
}

void rb_battery_free(rb_battery* battery) { delete battery; }

int rb_battery_size(const rb_battery* battery) {
    return battery ? static_cast<int>(battery->manifest.items.size()) : 0;
}

int rb_battery_answer(const rb_battery* battery, int index) {
    if (!battery || index < 0 || index >= rb_battery_size(battery)) return -1;
    return battery->manifest.items[static_cast<std::size_t>(index)].answer_index;
}

int rb_battery_rank(const rb_battery* battery, int index) {
    if (!battery || index < 0 || index >= rb_battery_size(battery)) return -1;
    return battery->manifest.items[static_cast<std::size_t>(index)].difficulty_rank;
}

const char* rb_battery_hash(const rb_battery* battery) { return battery ? battery->hash.c_str() : ""; }

rb_status rb_battery_write(const rb_battery* battery, const char* out_dir) {
    if (!battery) return null_argument("battery");
    if (!out_dir) return null_argument("out_dir");
    return guarded([&] {
        const std::filesystem::path out(out_dir);
        std::filesystem::create_directories(out / "items");
        const auto& m = battery->manifest;
        ravenbench::pipeline::detail::write_text(out / "manifest.json", ravenbench::to_json(m).dump(2) + "\n");
        ravenbench::pipeline::detail::write_text(out / "manifest.hash", battery->hash + "\n");
        for (std::size_t i = 0; i < m.items.size(); ++i) {
            ravenbench::pipeline::detail::write_item_pngs(out / "items", static_cast<int>(i),
                                                          ravenbench::matrixgen::render_case(m.items[i], m.render));
        }
    });
}

rb_status rb_evaluate(const char* config_path, int workers, rb_run** out) {
    if (!config_path) return null_argument("config_path");
    if (out) *out = nullptr;
    return guarded([&] {
        auto cfg = ravenbench::pipeline::load_run_config(config_path);
        if (workers > 0) cfg.workers = workers;
        const auto report = ravenbench::pipeline::cmd_evaluate(cfg);
        if (out) {
            auto run = std::make_unique<rb_run>();
            run->dir = report.dir.string();
            run->report = ravenbench::pipeline::detail::read_json(report.dir / "report.json");
            *out = run.release();
        }
    });
}

rb_status rb_run_open(const char* run_dir, rb_run** out) {
    if (!run_dir) return null_argument("run_dir");
    if (!out) return null_argument("out");
    *out = nullptr;
    return guarded([&] {
        auto run = std::make_unique<rb_run>();
        run->dir = run_dir;
        run->report = ravenbench::pipeline::detail::load_run(run_dir).report;
        *out = run.release();
    });
}

void rb_run_free(rb_run* run) { delete run; }

rb_status rb_run_score(const rb_run* run, int* correct, int* total) {
    if (!run) return null_argument("run");
    return guarded([&] {
        const auto& s = run->report.at("score");
        if (correct) *correct = s.at("correct").get<int>();
        if (total) *total = s.at("total").get<int>();
    });
}

int rb_run_choice(const rb_run* run, int item) {
    if (!run || item < 0) return -1;
    try {
        const auto& items = run->report.at("items");
        if (item >= static_cast<int>(items.size())) return -1;
        return items[static_cast<std::size_t>(item)].at("choice").get<int>();
    } catch (const std::exception&) {
        return -1;
    }
}

rb_status rb_run_threshold(const rb_run* run, double* lo, double* hi, double* point) {
    if (!run) return null_argument("run");
    return guarded([&] {
        const auto& post = run->report.at("posterior");
        if (!post.contains("threshold") || post["threshold"].contains("error")) {
            throw ravenbench::Error(ravenbench::ErrorKind::unattainable, "run has no attainable threshold");
        }
        const auto& t = post["threshold"];
        if (lo) *lo = t.at("lo").get<double>();
        if (hi) *hi = t.at("hi").get<double>();
        if (point) *point = t.at("median").get<double>();
    });
}

int rb_run_boundary_warning(const rb_run* run) {
    if (!run) return 0;
    try {
        const auto& post = run->report.at("posterior");
        if (!post.contains("warnings")) return 0;
        for (const auto& w : post["warnings"])
            if (w.get<std::string>().rfind("BoundaryWarning", 0) == 0) return 1;
    } catch (const std::exception&) {
    }
    return 0;
}

const char* rb_run_dir(const rb_run* run) { return run ? run->dir.c_str() : ""; }

rb_status rb_psych(const char* run_dir) {
    if (!run_dir) return null_argument("run_dir");
    return guarded([&] { ravenbench::pipeline::cmd_psych(run_dir); });
}

rb_status rb_errors(const char* run_dir, const char* cohort_csv) {
    if (!run_dir) return null_argument("run_dir");
    if (!cohort_csv) return null_argument("cohort_csv");
    return guarded([&] { ravenbench::pipeline::cmd_errors(run_dir, cohort_csv); });
}

rb_status rb_compare(const char* run_a, const char* run_b, const char* cohort_csv, const char* out_json) {
    if (!run_a || !run_b) return null_argument("run directory");
    if (!out_json) return null_argument("out_json");
    return guarded([&] {
        const auto j = ravenbench::pipeline::cmd_compare(run_a, run_b, cohort_csv ? cohort_csv : "");
        ravenbench::pipeline::detail::write_text(out_json, j.dump(2) + "\n");
    });
}

rb_status rb_plots(const char* const* run_dirs, size_t n, const char* out_dir) {
    if (!run_dirs && n > 0) return null_argument("run_dirs");
    if (!out_dir) return null_argument("out_dir");
    return guarded([&] {
        std::vector<std::filesystem::path> dirs;
        for (size_t i = 0; i < n; ++i) {
            if (!run_dirs[i]) throw ravenbench::Error(ravenbench::ErrorKind::invalid_argument, "run directory is null");
            dirs.emplace_back(run_dirs[i]);
        }
        std::vector<std::string> notices;
        ravenbench::pipeline::emit_plots(dirs, out_dir, &notices);
        std::string joined;
        for (const auto& s : notices) joined += s + "\n";
        if (!joined.empty()) ravenbench::pipeline::detail::write_text(std::filesystem::path(out_dir) / "NOTICES.txt", joined);
    });
}

}  // extern "C"
