#pragma once

#include "ravenbench/matrixgen.hpp"
#include "ravenbench/registration.hpp"
#include "ravenbench/simpanel.hpp"

#include <array>
#include <vector>

namespace ravenbench::evaluation {

struct EvalConfig {
    registration::RegisterConfig registration;
    bool register_enabled = true;  // false forces identity alignment
    simpanel::MetricConfig metrics;
};

struct TrialOutcome {
    simpanel::VoteRecord vote;
    std::array<int, 8> inliers{};
    std::array<registration::RegisterMode, 8> modes{};
};

// Scores in-painted images of one item: registers each onto the 8
// candidate-completed matrices, crops the answer cell and votes. Candidate
// features are computed once. score() is const and thread-safe.
class ItemEvaluator {
public:
    ItemEvaluator(const matrixgen::RasterCase& raster, const EvalConfig& cfg);

    TrialOutcome score(const GrayImage& inpainted) const;

    const matrixgen::RasterCase& raster() const noexcept { return *raster_; }

private:
    const matrixgen::RasterCase* raster_;
    EvalConfig cfg_;
    registration::PairLayout layout_;
    std::vector<registration::FeatureSet> candidates_;
};

}  // namespace ravenbench::evaluation
