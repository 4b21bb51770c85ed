#pragma once

#include "ravenbench/evaluation.hpp"
#include "ravenbench/image.hpp"
#include "ravenbench/inpaint.hpp"
#include "ravenbench/matrixgen.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace ravenbench::psychfit {

constexpr double kGuessRate = 0.125;

// ---- perturbation ---------------------------------------------------------

enum class PerturbKind { gaussian, brightness };
const char* to_string(PerturbKind kind) noexcept;

struct PerturbSchedule {
    double sigma_min = 2.0;
    double sigma_max = 20.0;
    int brightness_max = 40;  // delta drawn from [-max, max]
};

// gaussian: i.i.d. N(0, magnitude^2) noise; brightness: + magnitude. Both
// rounded and clipped to [0, 255]. Deterministic in seed.
GrayImage perturb(const GrayImage& image, std::uint64_t seed, PerturbKind kind, double magnitude);

struct RepPlan {
    int rep = 0;
    PerturbKind kind = PerturbKind::gaussian;
    double magnitude = 0.0;
    std::uint64_t seed = 0;  // noise seed
};

// Even reps are gaussian, odd reps brightness; magnitudes drawn from the rep's
// own seed.
RepPlan plan_rep(std::uint64_t item_seed, int rep, const PerturbSchedule& schedule);

struct TrialBlock {
    double x = 0.0;  // item difficulty rank
    int k = 0;
    int n = 0;
    bool operator==(const TrialBlock&) const = default;
};

struct RepRecord {
    RepPlan plan;
    evaluation::TrialOutcome outcome;
    std::string substrate_id;
    bool correct = false;
};

struct RepetitionResult {
    TrialBlock block;
    std::vector<RepRecord> reps;
};

// Perturb, in-paint, register and vote n times. Thread-safe substrates are
// called per rep; others receive the whole batch at once.
RepetitionResult run_repetitions(const matrixgen::RasterCase& raster, const matrixgen::MatrixItem& item,
                                 const inpaint::Substrate& substrate, const evaluation::ItemEvaluator& evaluator,
                                 int n, std::uint64_t seed, const PerturbSchedule& schedule = {});

// One rep for a thread-safe substrate. Exposed for work-pool scheduling.
RepRecord run_one_rep(const matrixgen::RasterCase& raster, const matrixgen::MatrixItem& item,
                      const inpaint::Substrate& substrate, const evaluation::ItemEvaluator& evaluator,
                      const RepPlan& plan);

// ---- model ----------------------------------------------------------------

struct PsychParams {
    double m = 0.0;       // threshold location
    double s = 1.0;       // width, > 0
    double lambda = 0.0;  // lapse
    double gamma = kGuessRate;
};

// gamma + (1 - gamma - lambda) * L((m - x) / s); decreasing in x.
double psi(double x, const PsychParams& p);

// x with psi(x) == performance, or nullopt when performance is outside psi's range.
std::optional<double> invert_psi(double performance, const PsychParams& p);

struct GridConfig {
    int m_count = 121;
    double m_lo = 0.5, m_hi = 12.5;
    int s_count = 61;
    double s_lo = 0.1, s_hi = 12.0;  // nodes s_lo + (i+1)(s_hi - s_lo)/s_count
    int lambda_count = 21;
    double lambda_lo = 0.0, lambda_hi = 0.1;
    double lambda_beta_a = 1.5, lambda_beta_b = 12.0;
    double boundary_fraction = 0.02;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double point = 0.0;  // median
};

struct PsychPosterior {
    std::vector<double> m_axis, s_axis, lambda_axis;
    std::vector<double> mass;  // index (i * s + j) * lambda + l, sums to 1
    PsychParams map;
    Interval m_ci, s_ci, lambda_ci;
    std::vector<std::string> warnings;  // e.g. "BoundaryWarning: ..."

    double at(std::size_t i, std::size_t j, std::size_t l) const {
        return mass[(i * s_axis.size() + j) * lambda_axis.size() + l];
    }
    bool boundary_warning() const;
};

// Dense-grid posterior. Throws Error(insufficient_data) with fewer than three
// distinct x values carrying trials.
PsychPosterior fit(std::span<const TrialBlock> trials, const GridConfig& grid = {});

// Central `level` interval and median of the x solving psi(x) = performance,
// over the posterior. Throws Error(unattainable) when no node reaches it.
Interval threshold_interval(const PsychPosterior& post, double performance = 0.5, double level = 0.95);

// ---- serialization --------------------------------------------------------

void write_trials_csv(const std::filesystem::path& path, std::span<const TrialBlock> blocks);
std::vector<TrialBlock> read_trials_csv(const std::filesystem::path& path);

nlohmann::json summary_json(const PsychPosterior& post, const Interval& threshold, double performance = 0.5,
                            double level = 0.95);

}  // namespace ravenbench::psychfit
