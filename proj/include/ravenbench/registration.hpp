#pragma once

#include "ravenbench/image.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace ravenbench::registration {

struct Keypoint {
    int x = 0;
    int y = 0;
    double score = 0.0;  // sum of |ring - centre| over the 16-pixel circle
};

struct CornerConfig {
    int threshold = 20;  // gray levels
    int max_n = 500;
    int min_arc = 12;    // contiguous ring pixels required
};

// Segment test on the radius-3 Bresenham circle, 7x7 non-maximum suppression,
// strongest max_n kept. Keypoints lie at least 3 px inside the border.
std::vector<Keypoint> detect_corners(const GrayImage& image, const CornerConfig& cfg = {});

// The raw segment test at one pixel, without suppression. Exposed for tests.
bool is_corner(const GrayImage& image, int x, int y, int threshold, int min_arc = 12);

using Descriptor = std::array<std::uint64_t, 4>;

struct PairLayout {
    std::array<std::array<std::int8_t, 4>, 256> pairs;  // px, py, qx, qy offsets in [-15, 15]
};

constexpr std::uint64_t kDefaultLayoutSeed = 0x5EEDB41EF;
PairLayout make_pair_layout(std::uint64_t seed = kDefaultLayoutSeed);

// Bit i set iff I(p_i) < I(q_i) on the 5x5 box-smoothed image; samples outside
// the image are clamped to the nearest edge pixel.
std::vector<Descriptor> describe(const GrayImage& image, std::span<const Keypoint> keypoints,
                                 const PairLayout& layout);

int hamming(const Descriptor& a, const Descriptor& b) noexcept;

struct Match {
    int index_a = 0;
    int index_b = 0;
    int distance = 0;
    bool operator==(const Match&) const = default;
};

constexpr int kMaxMatchDistance = 64;

// Mutual nearest neighbours (first index wins ties), distance <= max_distance.
std::vector<Match> match(std::span<const Descriptor> a, std::span<const Descriptor> b,
                         int max_distance = kMaxMatchDistance);

// Row-major, h[8] == 1.
struct Homography {
    std::array<double, 9> h{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Homography identity() { return {}; }
    void apply(double x, double y, double& ox, double& oy) const noexcept;
    double determinant() const noexcept;
    Homography inverse() const;
};

struct PointPair {
    double ax, ay;  // source
    double bx, by;  // destination
};

// Least-squares DLT on Hartley-normalized coordinates. Throws
// Error(degenerate) on fewer than 4 pairs or a singular system.
Homography fit_homography(std::span<const PointPair> pairs);

struct RansacConfig {
    double threshold = 2.0;  // reprojection error, px
    int max_iters = 2000;
    std::uint64_t seed = 0;
    int min_inliers = 8;
    double confidence = 0.999;  // adaptive early stop
};

struct RansacResult {
    Homography H;
    std::vector<bool> inliers;
    int inlier_count = 0;
    int iterations = 0;
};

// Throws Error(degenerate) when no model reaches cfg.min_inliers.
RansacResult ransac_homography(std::span<const PointPair> pairs, const RansacConfig& cfg = {});

// Inverse mapping with bilinear interpolation; samples outside the source are 0.
GrayImage warp(const GrayImage& image, const Homography& H, int out_width, int out_height);
// Only the `region` of the warped output, returned as a region-sized image.
GrayImage warp_region(const GrayImage& image, const Homography& H, Rect region);

struct FeatureSet {
    std::vector<Keypoint> keypoints;
    std::vector<Descriptor> descriptors;
};

struct RegisterConfig {
    CornerConfig corners;
    RansacConfig ransac;
    std::uint64_t layout_seed = kDefaultLayoutSeed;
    // Models moving any image corner further than this are rejected in favour
    // of identity.
    double max_corner_shift = 32.0;
};

FeatureSet extract_features(const GrayImage& image, const RegisterConfig& cfg, const PairLayout& layout);

enum class RegisterMode { homography, identity_fallback };
const char* to_string(RegisterMode mode) noexcept;

struct Registration {
    Homography H;
    RegisterMode mode = RegisterMode::identity_fallback;
    int inliers = 0;
};

// Estimates the map from inpainted onto candidate. Never throws on feature or
// model failure; those give identity_fallback.
Registration estimate_registration(const FeatureSet& inpainted, const FeatureSet& candidate, int width, int height,
                                   const RegisterConfig& cfg);

struct RegisterResult {
    GrayImage aligned;
    Registration registration;
};

RegisterResult register_to_candidate(const GrayImage& inpainted, const GrayImage& candidate,
                                     const RegisterConfig& cfg = {});

}  // namespace ravenbench::registration
