#include "ravenbench/pipeline.hpp"

#include "io.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <fmt/format.h>

namespace ravenbench::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

const char* version() noexcept { return RAVENBENCH_VERSION; }

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::config:
            return 2;
        case ErrorKind::timeout:
        case ErrorKind::missing_result:
        case ErrorKind::external_failure:
        case ErrorKind::dimension_mismatch:
        case ErrorKind::unmasked_pixels_modified:
            return 4;
        default:
            return 3;
    }
}

std::string score_line(int correct, int total) { return fmt::format("{} / {}", correct, total); }

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    };
    const int threads = std::clamp(workers, 1, n);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::unique_ptr<inpaint::Substrate> make_substrate(const RunConfig& cfg, const GrayImage& truth, const fs::path& work_dir) {
    const auto& s = cfg.substrate;
    if (s.kind == "local") return inpaint::make_local_substrate(s.local);
    if (s.kind == "lattice") return inpaint::make_lattice_substrate({s.local});
    if (s.kind == "oracle") return inpaint::make_paste_substrate(truth);
    if (s.kind == "constant") return inpaint::make_constant_substrate(static_cast<std::uint8_t>(s.constant_level));
    inpaint::ExternalConfig ext;
    ext.command = s.command;
    ext.timeout_seconds = s.timeout_seconds;
    return inpaint::make_external_substrate(ext, work_dir);
}

namespace {

// Re-raises with the item number in front, keeping the kind.
template <class Fn>
auto with_item(int item, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(e.kind(), fmt::format("item {}: {}", item + 1, e.what()));
    } catch (const std::exception& e) {
        throw Error(ErrorKind::stage, fmt::format("item {}: {}", item + 1, e.what()));
    }
}

}  // namespace

BatteryManifest cmd_generate(std::uint64_t seed, int items, const fs::path& out) {
    if (items < 3 || items > 999) throw Error(ErrorKind::config, "items must be in 3..999");
    BatteryManifest m;
    m.seed = seed;
    m.profile = matrixgen::DifficultyProfile::standard(items);
    m.items = matrixgen::generate_battery(seed, items, m.profile, m.render);
    fs::create_directories(out / "items");
    detail::write_text(out / "manifest.json", to_json(m).dump(2) + "\n");
    detail::write_text(out / "manifest.hash", manifest_hash(m) + "\n");
    for (std::size_t i = 0; i < m.items.size(); ++i) {
        const auto raster = matrixgen::render_case(m.items[i], m.render);
        detail::write_item_pngs(out / "items", static_cast<int>(i), raster);
    }
    return m;
}

RunReport cmd_evaluate(const RunConfig& cfg) {
    validate(cfg);
    const fs::path out = cfg.output;
    fs::create_directories(out);
    fs::remove(out / "FAILED");
    const auto started = std::chrono::steady_clock::now();
    std::string stage = "setup";
    try {
        detail::write_text(out / "config.toml", cfg.source_text);

        stage = "generate";
        BatteryManifest manifest;
        manifest.seed = cfg.seed;
        manifest.profile = matrixgen::DifficultyProfile::standard(cfg.items);
        manifest.items = matrixgen::generate_battery(cfg.seed, cfg.items, manifest.profile, manifest.render);
        const std::string hash = manifest_hash(manifest);
        detail::write_text(out / "manifest.json", to_json(manifest).dump(2) + "\n");
        detail::write_text(out / "manifest.hash", hash + "\n");
        const int n_items = static_cast<int>(manifest.items.size());

        stage = "render";
        std::vector<matrixgen::RasterCase> rasters(static_cast<std::size_t>(n_items));
        std::vector<std::unique_ptr<evaluation::ItemEvaluator>> evaluators(static_cast<std::size_t>(n_items));
        fs::create_directories(out / "items");
        parallel_for(n_items, cfg.workers, [&](int i) {
            with_item(i, [&] {
                const auto idx = static_cast<std::size_t>(i);
                rasters[idx] = matrixgen::render_case(manifest.items[idx], manifest.render);
                evaluators[idx] = std::make_unique<evaluation::ItemEvaluator>(rasters[idx], cfg.evaluation);
                detail::write_item_pngs(out / "items", i, rasters[idx]);
            });
        });

        stage = "inpaint";
        std::vector<std::unique_ptr<inpaint::Substrate>> substrates;
        if (cfg.substrate.kind == "oracle") {
            for (int i = 0; i < n_items; ++i) {
                const auto idx = static_cast<std::size_t>(i);
                substrates.push_back(make_substrate(
                    cfg, matrixgen::complete_with_option(rasters[idx], manifest.items[idx].answer_index), out / "external"));
            }
        } else {
            substrates.push_back(make_substrate(cfg, {}, out / "external"));
        }
        auto substrate_of = [&](int i) -> const inpaint::Substrate& {
            return *substrates[substrates.size() == 1 ? 0 : static_cast<std::size_t>(i)];
        };
        const bool pooled = substrate_of(0).thread_safe();

        RunReport report;
        report.dir = out;
        report.manifest_hash = hash;
        report.substrate = cfg.substrate.kind;
        report.items.resize(static_cast<std::size_t>(n_items));
        std::vector<inpaint::InpaintResult> clean(static_cast<std::size_t>(n_items));
        if (pooled) {
            parallel_for(n_items, cfg.workers, [&](int i) {
                clean[static_cast<std::size_t>(i)] = with_item(i, [&] {
                    return substrate_of(i).inpaint({rasters[static_cast<std::size_t>(i)].image, rasters[static_cast<std::size_t>(i)].mask});
                });
            });
        } else {
            std::vector<inpaint::InpaintRequest> requests;
            for (const auto& r : rasters) requests.push_back({r.image, r.mask});
            clean = substrate_of(0).inpaint_batch(requests);
        }

        stage = "score";
        parallel_for(n_items, cfg.workers, [&](int i) {
            with_item(i, [&] {
                const auto idx = static_cast<std::size_t>(i);
                const auto& item = manifest.items[idx];
                const auto outcome = evaluators[idx]->score(clean[idx].image);
                auto& rec = report.items[idx];
                rec.item = i;
                rec.rank = item.difficulty_rank;
                rec.rule_count = static_cast<int>(item.rules.size());
                rec.answer = item.answer_index;
                rec.vote = outcome.vote;
                rec.modes = outcome.modes;
                rec.inliers = outcome.inliers;
                rec.substrate_id = clean[idx].substrate_id;
                write_png(out / "items" / fmt::format("item_{:03d}_inpainted.png", i + 1), clean[idx].image);
            });
        });

        stage = "repetitions";
        const int n_reps = cfg.reps;
        for (auto& rec : report.items) rec.reps.resize(static_cast<std::size_t>(n_reps));
        auto plan_of = [&](int i, int rep) {
            return psychfit::plan_rep(manifest.items[static_cast<std::size_t>(i)].seed, rep, cfg.perturbation);
        };
        if (pooled) {
            parallel_for(n_items * n_reps, cfg.workers, [&](int unit) {
                const int i = unit / n_reps, rep = unit % n_reps;
                const auto idx = static_cast<std::size_t>(i);
                report.items[idx].reps[static_cast<std::size_t>(rep)] = with_item(i, [&] {
                    return psychfit::run_one_rep(rasters[idx], manifest.items[idx], substrate_of(i), *evaluators[idx],
                                                 plan_of(i, rep));
                });
            });
        } else {
            for (int i = 0; i < n_items; ++i) {
                const auto idx = static_cast<std::size_t>(i);
                std::vector<psychfit::RepPlan> plans;
                std::vector<inpaint::InpaintRequest> requests;
                for (int rep = 0; rep < n_reps; ++rep) {
                    plans.push_back(plan_of(i, rep));
                    requests.push_back({psychfit::perturb(rasters[idx].image, plans.back().seed, plans.back().kind,
                                                          plans.back().magnitude),
                                        rasters[idx].mask});
                }
                const auto fills = with_item(i, [&] { return substrate_of(i).inpaint_batch(requests); });
                parallel_for(n_reps, cfg.workers, [&](int rep) {
                    const auto r = static_cast<std::size_t>(rep);
                    psychfit::RepRecord rec;
                    rec.plan = plans[r];
                    rec.outcome = evaluators[idx]->score(fills[r].image);
                    rec.substrate_id = fills[r].substrate_id;
                    rec.correct = rec.outcome.vote.choice == manifest.items[idx].answer_index;
                    report.items[idx].reps[r] = std::move(rec);
                });
            }
        }

        stage = "psych";
        for (auto& rec : report.items) {
            rec.rep_correct = static_cast<int>(std::count_if(rec.reps.begin(), rec.reps.end(), [](const auto& r) { return r.correct; }));
            report.trials.push_back({static_cast<double>(rec.rank), rec.rep_correct, n_reps});
            report.correct += rec.vote.choice == rec.answer ? 1 : 0;
        }
        report.total = n_items;
        std::sort(report.trials.begin(), report.trials.end(), [](const auto& a, const auto& b) { return a.x < b.x; });
        psychfit::write_trials_csv(out / "trials.csv", report.trials);
        report.posterior = detail::fit_summary(report.trials, cfg.grid, cfg.performance, cfg.level, &report.threshold);
        detail::write_text(out / "posterior.json", report.posterior.dump(2) + "\n");

        stage = "report";
        {
            std::string votes =
                "item,rank,rule_count,answer,choice,correct,tiebreak,winner_hd,winner_mse,winner_wd,winner_ergas,"
                "winner_nmi,homography_count,substrate_id\n";
            std::string panels =
                "item,option,hd,mse,wd,ergas,nmi,win_hd,win_mse,win_wd,win_ergas,win_nmi,registration,inliers,choice,"
                "tiebreak\n";
            std::string reps = "item,rep,kind,magnitude,seed,choice,correct,homography_count,substrate_id\n";
            for (const auto& r : report.items) {
                votes += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.item + 1, r.rank, r.rule_count,
                                     r.answer, r.vote.choice, r.vote.choice == r.answer ? 1 : 0,
                                     simpanel::to_string(r.vote.tiebreak), r.vote.winners[0], r.vote.winners[1],
                                     r.vote.winners[2], r.vote.winners[3], r.vote.winners[4], detail::homography_count(r.modes),
                                     r.substrate_id);
                for (int k = 0; k < 8; ++k) {
                    const auto& p = r.vote.panels[static_cast<std::size_t>(k)];
                    const auto& w = r.vote.winners;
                    panels += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.item + 1, k, p.hd, p.mse,
                                          p.wd, p.ergas, p.nmi, int(w[0] == k), int(w[1] == k), int(w[2] == k), int(w[3] == k), int(w[4] == k),
                                          registration::to_string(r.modes[static_cast<std::size_t>(k)]),
                                          r.inliers[static_cast<std::size_t>(k)], r.vote.choice,
                                          simpanel::to_string(r.vote.tiebreak));
                }
                for (const auto& rep : r.reps) {
                    reps += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.item + 1, rep.plan.rep,
                                        psychfit::to_string(rep.plan.kind), rep.plan.magnitude, rep.plan.seed,
                                        rep.outcome.vote.choice, rep.correct ? 1 : 0, detail::homography_count(rep.outcome.modes),
                                        rep.substrate_id);
                }
            }
            detail::write_text(out / "votes.csv", votes);
            detail::write_text(out / "panels.csv", panels);
            detail::write_text(out / "reps.csv", reps);
        }
        detail::write_text(out / "score.txt", score_line(report.correct, report.total) + "\n");
        detail::write_text(out / "report.json", detail::report_json(report, cfg).dump(2) + "\n");

        if (!cfg.cohort.empty()) {
            stage = "errors";
            cmd_errors(out, cfg.cohort);
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        detail::write_text(out / "run.log", fmt::format("substrate {}\nworkers {}\nelapsed_seconds {:.3f}\n",
                                                        cfg.substrate.kind, cfg.workers, seconds));
        return report;
    } catch (const Error& e) {
        const std::string msg = fmt::format("stage {}: {}", stage, e.what());
        detail::write_text(out / "FAILED", fmt::format("{}\nkind {}\n", msg, to_string(e.kind())));
        throw Error(e.kind(), msg);
    } catch (const std::exception& e) {
        const std::string msg = fmt::format("stage {}: {}", stage, e.what());
        detail::write_text(out / "FAILED", msg + "\n");
        throw Error(ErrorKind::stage, msg);
    }
}

}  // namespace ravenbench::pipeline
