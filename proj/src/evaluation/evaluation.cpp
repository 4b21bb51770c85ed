#include "ravenbench/evaluation.hpp"

#include "ravenbench/error.hpp"

namespace ravenbench::evaluation {

namespace reg = registration;

ItemEvaluator::ItemEvaluator(const matrixgen::RasterCase& raster, const EvalConfig& cfg)
    : raster_(&raster), cfg_(cfg), layout_(reg::make_pair_layout(cfg.registration.layout_seed)) {
    if (!cfg_.register_enabled) return;
    candidates_.reserve(8);
    for (int k = 0; k < 8; ++k) {
        candidates_.push_back(reg::extract_features(matrixgen::complete_with_option(raster, k), cfg_.registration, layout_));
    }
}

TrialOutcome ItemEvaluator::score(const GrayImage& inpainted) const {
    const auto& raster = *raster_;
    if (!inpainted.same_shape(raster.image)) {
        throw Error(ErrorKind::dimension_mismatch, "in-painted image does not match the puzzle size");
    }
    const Rect answer = raster.geometry.interior(8);
    TrialOutcome out;
    std::array<simpanel::MetricPanel, 8> panels;
    reg::FeatureSet own;
    if (cfg_.register_enabled) own = reg::extract_features(inpainted, cfg_.registration, layout_);
    for (std::size_t k = 0; k < 8; ++k) {
        reg::Registration r;
        if (cfg_.register_enabled) {
            r = reg::estimate_registration(own, candidates_[k], raster.image.width(), raster.image.height(),
                                           cfg_.registration);
        }
        out.modes[k] = r.mode;
        out.inliers[k] = r.inliers;
        const GrayImage region = reg::warp_region(inpainted, r.H, answer);
        panels[k] = simpanel::compute_panel(region, raster.option_cells[k], cfg_.metrics);
    }
    out.vote = simpanel::vote_panels(panels);
    return out;
}

}  // namespace ravenbench::evaluation
