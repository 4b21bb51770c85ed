#include "ravenbench/psychfit.hpp"

#include "ravenbench/error.hpp"
#include "ravenbench/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace ravenbench::psychfit {

namespace {

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
    return v;
}

// First support point whose cumulative mass reaches q.
double quantile(const std::vector<double>& axis, const std::vector<double>& marginal, double q) {
    double cum = 0.0;
    for (std::size_t i = 0; i < axis.size(); ++i) {
        cum += marginal[i];
        if (cum >= q - 1e-12) return axis[i];
    }
    return axis.back();
}

Interval marginal_interval(const std::vector<double>& axis, const std::vector<double>& marginal) {
    return {quantile(axis, marginal, 0.025), quantile(axis, marginal, 0.975), quantile(axis, marginal, 0.5)};
}

}  // namespace

const char* to_string(PerturbKind kind) noexcept { return kind == PerturbKind::gaussian ? "gaussian" : "brightness"; }

GrayImage perturb(const GrayImage& image, std::uint64_t seed, PerturbKind kind, double magnitude) {
    GrayImage out = image;
    if (kind == PerturbKind::brightness) {
        for (auto& v : out.pixels()) v = static_cast<std::uint8_t>(std::clamp(std::round(v + magnitude), 0.0, 255.0));
        return out;
    }
    Rng rng(seed);
    for (auto& v : out.pixels()) {
        v = static_cast<std::uint8_t>(std::clamp(std::round(v + magnitude * rng.normal()), 0.0, 255.0));
    }
    return out;
}

RepPlan plan_rep(std::uint64_t item_seed, int rep, const PerturbSchedule& schedule) {
    Rng rng(derive_seed(item_seed, static_cast<std::uint64_t>(rep), 0x7E75));
    RepPlan plan;
    plan.rep = rep;
    if (rep % 2 == 0) {
        plan.kind = PerturbKind::gaussian;
        plan.magnitude = rng.uniform(schedule.sigma_min, schedule.sigma_max);
    } else {
        plan.kind = PerturbKind::brightness;
        plan.magnitude = rng.uniform_int(-schedule.brightness_max, schedule.brightness_max);
    }
    plan.seed = rng.next();
    return plan;
}

RepRecord run_one_rep(const matrixgen::RasterCase& raster, const matrixgen::MatrixItem& item,
                      const inpaint::Substrate& substrate, const evaluation::ItemEvaluator& evaluator,
                      const RepPlan& plan) {
    const inpaint::InpaintRequest request{perturb(raster.image, plan.seed, plan.kind, plan.magnitude), raster.mask};
    const inpaint::InpaintResult fill = substrate.inpaint(request);
    RepRecord rec;
    rec.plan = plan;
    rec.outcome = evaluator.score(fill.image);
    rec.substrate_id = fill.substrate_id;
    rec.correct = rec.outcome.vote.choice == item.answer_index;
    return rec;
}

RepetitionResult run_repetitions(const matrixgen::RasterCase& raster, const matrixgen::MatrixItem& item,
                                 const inpaint::Substrate& substrate, const evaluation::ItemEvaluator& evaluator,
                                 int n, std::uint64_t seed, const PerturbSchedule& schedule) {
    if (n < 1) throw Error(ErrorKind::invalid_argument, "repetition count must be >= 1");
    RepetitionResult result;
    result.block.x = item.difficulty_rank;
    result.block.n = n;
    if (substrate.thread_safe()) {
        for (int rep = 0; rep < n; ++rep) {
            result.reps.push_back(run_one_rep(raster, item, substrate, evaluator, plan_rep(seed, rep, schedule)));
        }
    } else {
        std::vector<RepPlan> plans;
        std::vector<inpaint::InpaintRequest> requests;
        for (int rep = 0; rep < n; ++rep) {
            plans.push_back(plan_rep(seed, rep, schedule));
            requests.push_back({perturb(raster.image, plans.back().seed, plans.back().kind, plans.back().magnitude),
                                raster.mask});
        }
        const auto fills = substrate.inpaint_batch(requests);
        for (int rep = 0; rep < n; ++rep) {
            RepRecord rec;
            rec.plan = plans[static_cast<std::size_t>(rep)];
            rec.outcome = evaluator.score(fills[static_cast<std::size_t>(rep)].image);
            rec.substrate_id = fills[static_cast<std::size_t>(rep)].substrate_id;
            rec.correct = rec.outcome.vote.choice == item.answer_index;
            result.reps.push_back(std::move(rec));
        }
    }
    for (const auto& r : result.reps) result.block.k += r.correct ? 1 : 0;
    return result;
}

double psi(double x, const PsychParams& p) {
    if (!(p.s > 0.0)) throw Error(ErrorKind::invalid_argument, "psychometric width must be > 0");
    return p.gamma + (1.0 - p.gamma - p.lambda) * logistic((p.m - x) / p.s);
}

std::optional<double> invert_psi(double performance, const PsychParams& p) {
    const double q = (performance - p.gamma) / (1.0 - p.gamma - p.lambda);
    if (!(q > 0.0 && q < 1.0) || !(p.s > 0.0)) return std::nullopt;
    return p.m - p.s * std::log(q / (1.0 - q));
}

bool PsychPosterior::boundary_warning() const {
    return std::any_of(warnings.begin(), warnings.end(),
                       [](const std::string& w) { return w.rfind("BoundaryWarning", 0) == 0; });
}

PsychPosterior fit(std::span<const TrialBlock> trials, const GridConfig& grid) {
    std::set<double> xs;
    for (const auto& t : trials) {
        if (t.n < 0 || t.k < 0 || t.k > t.n) throw Error(ErrorKind::invalid_argument, "trial block needs 0 <= k <= n");
        if (t.n > 0) xs.insert(t.x);
    }
    if (xs.size() < 3) throw Error(ErrorKind::insufficient_data, "psychometric fit needs >= 3 distinct ranks with trials");
    if (grid.m_count < 1 || grid.s_count < 1 || grid.lambda_count < 1 || !(grid.s_lo >= 0.0) ||
        !(grid.s_hi > grid.s_lo) || !(grid.m_hi >= grid.m_lo) || grid.lambda_lo < 0.0 || grid.lambda_hi >= 1.0 - kGuessRate) {
        throw Error(ErrorKind::config, "invalid psychometric grid");
    }

    PsychPosterior post;
    post.m_axis = linspace(grid.m_lo, grid.m_hi, grid.m_count);
    for (int i = 0; i < grid.s_count; ++i) post.s_axis.push_back(grid.s_lo + (i + 1) * (grid.s_hi - grid.s_lo) / grid.s_count);
    post.lambda_axis = linspace(grid.lambda_lo, grid.lambda_hi, grid.lambda_count);
    const std::size_t nm = post.m_axis.size(), ns = post.s_axis.size(), nl = post.lambda_axis.size();

    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    std::vector<double> log_prior_l(nl);
    for (std::size_t l = 0; l < nl; ++l) {
        const double lam = post.lambda_axis[l];
        log_prior_l[l] = lam <= 0.0 ? (grid.lambda_beta_a > 1.0 ? neg_inf : 0.0)
                                    : (grid.lambda_beta_a - 1.0) * std::log(lam) + (grid.lambda_beta_b - 1.0) * std::log1p(-lam);
    }

    std::vector<double> logp(nm * ns * nl, neg_inf);
    double best = neg_inf;
    std::size_t best_index = 0;
    for (std::size_t i = 0; i < nm; ++i) {
        for (std::size_t j = 0; j < ns; ++j) {
            for (std::size_t l = 0; l < nl; ++l) {
                if (log_prior_l[l] == neg_inf) continue;
                const double lam = post.lambda_axis[l];
                double ll = log_prior_l[l];
                for (const auto& t : trials) {
                    if (t.n == 0) continue;
                    const double z = (post.m_axis[i] - t.x) / post.s_axis[j];
                    const double scale = 1.0 - kGuessRate - lam;
                    const double p = kGuessRate + scale * logistic(z);
                    const double q = lam + scale * logistic(-z);
                    ll += t.k * std::log(p) + (t.n - t.k) * std::log(q);
                }
                const std::size_t idx = (i * ns + j) * nl + l;
                logp[idx] = ll;
                if (ll > best) {
                    best = ll;
                    best_index = idx;
                }
            }
        }
    }
    if (best == neg_inf) throw Error(ErrorKind::insufficient_data, "posterior has no support");

    post.mass.resize(logp.size());
    double total = 0.0;
    for (std::size_t n = 0; n < logp.size(); ++n) {
        post.mass[n] = logp[n] == neg_inf ? 0.0 : std::exp(logp[n] - best);
        total += post.mass[n];
    }
    for (auto& v : post.mass) v /= total;

    const std::size_t bi = best_index / (ns * nl), bj = (best_index / nl) % ns, bl = best_index % nl;
    post.map = {post.m_axis[bi], post.s_axis[bj], post.lambda_axis[bl], kGuessRate};

    std::vector<double> mm(nm, 0.0), ms(ns, 0.0), ml(nl, 0.0);
    for (std::size_t i = 0; i < nm; ++i)
        for (std::size_t j = 0; j < ns; ++j)
            for (std::size_t l = 0; l < nl; ++l) {
                const double w = post.mass[(i * ns + j) * nl + l];
                mm[i] += w;
                ms[j] += w;
                ml[l] += w;
            }
    post.m_ci = marginal_interval(post.m_axis, mm);
    post.s_ci = marginal_interval(post.s_axis, ms);
    post.lambda_ci = marginal_interval(post.lambda_axis, ml);

    const double margin = grid.boundary_fraction * (grid.m_hi - grid.m_lo);
    if (post.map.m <= grid.m_lo + margin || post.map.m >= grid.m_hi - margin) {
        post.warnings.push_back(fmt::format("BoundaryWarning: MAP threshold location m = {} lies within {}% of the grid edge",
                                            post.map.m, grid.boundary_fraction * 100.0));
    }
    return post;
}

Interval threshold_interval(const PsychPosterior& post, double performance, double level) {
    if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::invalid_argument, "interval level must be in (0, 1)");
    const std::size_t ns = post.s_axis.size(), nl = post.lambda_axis.size();
    std::vector<std::pair<double, double>> nodes;
    double total = 0.0;
    for (std::size_t i = 0; i < post.m_axis.size(); ++i) {
        for (std::size_t j = 0; j < ns; ++j) {
            for (std::size_t l = 0; l < nl; ++l) {
                const double w = post.mass[(i * ns + j) * nl + l];
                if (w <= 0.0) continue;
                const auto x = invert_psi(performance, {post.m_axis[i], post.s_axis[j], post.lambda_axis[l], kGuessRate});
                if (!x) continue;
                nodes.emplace_back(*x, w);
                total += w;
            }
        }
    }
    if (nodes.empty() || !(total > 0.0)) {
        throw Error(ErrorKind::unattainable, fmt::format("performance {} is outside the fitted function's range", performance));
    }
    std::sort(nodes.begin(), nodes.end());
    auto weighted_quantile = [&](double q) {
        double cum = 0.0;
        for (const auto& [x, w] : nodes) {
            cum += w / total;
            if (cum >= q - 1e-12) return x;
        }
        return nodes.back().first;
    };
    const double tail = (1.0 - level) / 2.0;
    return {weighted_quantile(tail), weighted_quantile(1.0 - tail), weighted_quantile(0.5)};
}

void write_trials_csv(const std::filesystem::path& path, std::span<const TrialBlock> blocks) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out << "item_rank,k,n\n";
    for (const auto& b : blocks) out << fmt::format("{},{},{}\n", b.x, b.k, b.n);
    if (!out) throw Error(ErrorKind::io, "failed writing " + path.string());
}

std::vector<TrialBlock> read_trials_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("item_rank,k,n", 0) != 0) {
        throw Error(ErrorKind::invalid_argument, path.string() + ": expected header item_rank,k,n");
    }
    std::vector<TrialBlock> blocks;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        TrialBlock b;
        char c1 = 0, c2 = 0;
        std::istringstream row(line);
        if (!(row >> b.x >> c1 >> b.k >> c2 >> b.n) || c1 != ',' || c2 != ',' || b.k < 0 || b.k > b.n) {
            throw Error(ErrorKind::invalid_argument, fmt::format("{}:{}: malformed trial row", path.string(), lineno));
        }
        blocks.push_back(b);
    }
    return blocks;
}

nlohmann::json summary_json(const PsychPosterior& post, const Interval& threshold, double performance, double level) {
    auto interval = [](const Interval& i) { return nlohmann::json{{"lo", i.lo}, {"hi", i.hi}, {"median", i.point}}; };
    nlohmann::json j;
    j["guess_rate"] = kGuessRate;
    j["grid"] = {{"m", {post.m_axis.front(), post.m_axis.back(), post.m_axis.size()}},
                 {"s", {post.s_axis.front(), post.s_axis.back(), post.s_axis.size()}},
                 {"lambda", {post.lambda_axis.front(), post.lambda_axis.back(), post.lambda_axis.size()}}};
    j["map"] = {{"m", post.map.m}, {"s", post.map.s}, {"lambda", post.map.lambda}};
    j["marginals"] = {{"m", interval(post.m_ci)}, {"s", interval(post.s_ci)}, {"lambda", interval(post.lambda_ci)}};
    j["threshold"] = interval(threshold);
    j["threshold"]["performance"] = performance;
    j["threshold"]["level"] = level;
    j["warnings"] = post.warnings;
    return j;
}

}  // namespace ravenbench::psychfit
