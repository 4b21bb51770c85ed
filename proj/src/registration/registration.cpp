#include "ravenbench/registration.hpp"

#include "ravenbench/error.hpp"
#include "ravenbench/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

namespace ravenbench::registration {

namespace {

constexpr std::array<std::array<int, 2>, 16> kCircle{{{0, -3}, {1, -3}, {2, -2}, {3, -1},
                                                      {3, 0},  {3, 1},  {2, 2},  {1, 3},
                                                      {0, 3},  {-1, 3}, {-2, 2}, {-3, 1},
                                                      {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3}}};

double ring_score(const GrayImage& image, int x, int y) {
    const int c = image.at(x, y);
    double s = 0.0;
    for (const auto& o : kCircle) s += std::abs(image.at(x + o[0], y + o[1]) - c);
    return s;
}

// Sums over the 5x5 window, edges clamped. Same ordering as the mean.
std::vector<int> box_sum5(const GrayImage& image) {
    const int w = image.width(), h = image.height();
    std::vector<int> horiz(static_cast<std::size_t>(w) * h), out(horiz.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int s = 0;
            for (int d = -2; d <= 2; ++d) s += image.at(std::clamp(x + d, 0, w - 1), y);
            horiz[static_cast<std::size_t>(y) * w + x] = s;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int s = 0;
            for (int d = -2; d <= 2; ++d) s += horiz[static_cast<std::size_t>(std::clamp(y + d, 0, h - 1)) * w + x];
            out[static_cast<std::size_t>(y) * w + x] = s;
        }
    }
    return out;
}

struct Normalizer {
    double cx = 0.0, cy = 0.0, scale = 1.0;

    static Normalizer of(std::span<const PointPair> pairs, bool source) {
        Normalizer n;
        for (const auto& p : pairs) {
            n.cx += source ? p.ax : p.bx;
            n.cy += source ? p.ay : p.by;
        }
        n.cx /= static_cast<double>(pairs.size());
        n.cy /= static_cast<double>(pairs.size());
        double dist = 0.0;
        for (const auto& p : pairs) {
            dist += std::hypot((source ? p.ax : p.bx) - n.cx, (source ? p.ay : p.by) - n.cy);
        }
        dist /= static_cast<double>(pairs.size());
        n.scale = dist > 1e-12 ? std::sqrt(2.0) / dist : 1.0;
        return n;
    }
    Eigen::Matrix3d matrix() const {
        Eigen::Matrix3d t;
        t << scale, 0, -scale * cx, 0, scale, -scale * cy, 0, 0, 1;
        return t;
    }
};

Homography from_matrix(const Eigen::Matrix3d& m) {
    if (std::abs(m(2, 2)) < 1e-15) throw Error(ErrorKind::degenerate, "homography has h33 = 0");
    Homography H;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) H.h[static_cast<std::size_t>(3 * r + c)] = m(r, c) / m(2, 2);
    return H;
}

Eigen::Matrix3d to_matrix(const Homography& H) {
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = H.h[static_cast<std::size_t>(3 * r + c)];
    return m;
}

// Exactly determined 4-point system with h33 fixed to 1, in normalized space.
bool solve_minimal(std::span<const PointPair> pairs, Homography& out) {
    const Normalizer na = Normalizer::of(pairs, true), nb = Normalizer::of(pairs, false);
    Eigen::Matrix<double, 8, 8> A;
    Eigen::Matrix<double, 8, 1> rhs;
    for (int i = 0; i < 4; ++i) {
        const auto& p = pairs[static_cast<std::size_t>(i)];
        const double x = (p.ax - na.cx) * na.scale, y = (p.ay - na.cy) * na.scale;
        const double u = (p.bx - nb.cx) * nb.scale, v = (p.by - nb.cy) * nb.scale;
        A.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
        A.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
        rhs(2 * i) = u;
        rhs(2 * i + 1) = v;
    }
    Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(A);
    if (lu.rank() < 8) return false;
    const Eigen::Matrix<double, 8, 1> h = lu.solve(rhs);
    Eigen::Matrix3d hn;
    hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0;
    const Eigen::Matrix3d full = nb.matrix().inverse() * hn * na.matrix();
    if (!full.allFinite() || std::abs(full(2, 2)) < 1e-15) return false;
    out = from_matrix(full);
    return true;
}

bool collinear(double x0, double y0, double x1, double y1, double x2, double y2) {
    return std::abs((x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)) < 1e-6;
}

bool sample_degenerate(const std::array<PointPair, 4>& s) {
    for (int i = 0; i < 4; ++i) {
        const auto& a = s[static_cast<std::size_t>((i + 1) % 4)];
        const auto& b = s[static_cast<std::size_t>((i + 2) % 4)];
        const auto& c = s[static_cast<std::size_t>((i + 3) % 4)];
        if (collinear(a.ax, a.ay, b.ax, b.ay, c.ax, c.ay) || collinear(a.bx, a.by, b.bx, b.by, c.bx, c.by)) return true;
    }
    return false;
}

// Invertible, and the unit square maps to a convex quadrilateral in front of
// the camera.
bool plausible(const Homography& H) {
    if (std::abs(H.determinant()) <= 1e-9) return false;
    constexpr double sq[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    double px[4], py[4];
    for (int i = 0; i < 4; ++i) {
        const double w = H.h[6] * sq[i][0] + H.h[7] * sq[i][1] + H.h[8];
        if (w <= 0.0) return false;
        H.apply(sq[i][0], sq[i][1], px[i], py[i]);
    }
    int sign = 0;
    for (int i = 0; i < 4; ++i) {
        const int j = (i + 1) % 4, k = (i + 2) % 4;
        const double cross = (px[j] - px[i]) * (py[k] - py[j]) - (py[j] - py[i]) * (px[k] - px[j]);
        const int s = cross > 0 ? 1 : (cross < 0 ? -1 : 0);
        if (s == 0 || (sign != 0 && s != sign)) return false;
        sign = s;
    }
    return true;
}

int count_inliers(std::span<const PointPair> pairs, const Homography& H, double threshold, std::vector<bool>* flags) {
    const double t2 = threshold * threshold;
    int n = 0;
    if (flags) flags->assign(pairs.size(), false);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        double x, y;
        H.apply(pairs[i].ax, pairs[i].ay, x, y);
        const double dx = x - pairs[i].bx, dy = y - pairs[i].by;
        if (dx * dx + dy * dy < t2) {
            ++n;
            if (flags) (*flags)[i] = true;
        }
    }
    return n;
}

}  // namespace

bool is_corner(const GrayImage& image, int x, int y, int threshold, int min_arc) {
    if (x < 3 || y < 3 || x >= image.width() - 3 || y >= image.height() - 3) return false;
    const int c = image.at(x, y);
    int run_bright = 0, run_dark = 0, best = 0;
    for (int k = 0; k < 32; ++k) {
        const auto& o = kCircle[static_cast<std::size_t>(k % 16)];
        const int v = image.at(x + o[0], y + o[1]);
        run_bright = v > c + threshold ? run_bright + 1 : 0;
        run_dark = v < c - threshold ? run_dark + 1 : 0;
        best = std::max({best, run_bright, run_dark});
    }
    return std::min(best, 16) >= min_arc;
}

std::vector<Keypoint> detect_corners(const GrayImage& image, const CornerConfig& cfg) {
    std::vector<Keypoint> out;
    const int w = image.width(), h = image.height();
    if (w < 32 || h < 32 || cfg.max_n <= 0) return out;

    std::vector<double> score(static_cast<std::size_t>(w) * h, -1.0);
    std::vector<Keypoint> candidates;
    for (int y = 3; y < h - 3; ++y) {
        for (int x = 3; x < w - 3; ++x) {
            if (!is_corner(image, x, y, cfg.threshold, cfg.min_arc)) continue;
            const double s = ring_score(image, x, y);
            score[static_cast<std::size_t>(y) * w + x] = s;
            candidates.push_back({x, y, s});
        }
    }
    // Ties inside a window go to the earlier pixel in raster order.
    for (const auto& k : candidates) {
        bool keep = true;
        for (int dy = -3; dy <= 3 && keep; ++dy) {
            for (int dx = -3; dx <= 3 && keep; ++dx) {
                if (dx == 0 && dy == 0) continue;
                const int xx = k.x + dx, yy = k.y + dy;
                if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
                const double s = score[static_cast<std::size_t>(yy) * w + xx];
                if (s > k.score || (s == k.score && (dy < 0 || (dy == 0 && dx < 0)))) keep = false;
            }
        }
        if (keep) out.push_back(k);
    }
    std::stable_sort(out.begin(), out.end(), [](const Keypoint& a, const Keypoint& b) { return a.score > b.score; });
    if (static_cast<int>(out.size()) > cfg.max_n) out.resize(static_cast<std::size_t>(cfg.max_n));
    return out;
}

PairLayout make_pair_layout(std::uint64_t seed) {
    PairLayout layout;
    Rng rng(seed);
    // Isotropic Gaussian sampling around the keypoint, sigma = S/5 for S = 31.
    auto draw = [&] { return static_cast<std::int8_t>(std::clamp(std::lround(rng.normal() * 31.0 / 5.0), -15L, 15L)); };
    for (auto& p : layout.pairs) {
        do {
            p = {draw(), draw(), draw(), draw()};
        } while (p[0] == p[2] && p[1] == p[3]);
    }
    return layout;
}

std::vector<Descriptor> describe(const GrayImage& image, std::span<const Keypoint> keypoints,
                                 const PairLayout& layout) {
    std::vector<Descriptor> out;
    out.reserve(keypoints.size());
    if (keypoints.empty()) return out;
    const int w = image.width(), h = image.height();
    const std::vector<int> smooth = box_sum5(image);
    auto sample = [&](int x, int y) {
        return smooth[static_cast<std::size_t>(std::clamp(y, 0, h - 1)) * w + std::clamp(x, 0, w - 1)];
    };
    for (const auto& k : keypoints) {
        Descriptor d{};
        for (std::size_t i = 0; i < 256; ++i) {
            const auto& p = layout.pairs[i];
            if (sample(k.x + p[0], k.y + p[1]) < sample(k.x + p[2], k.y + p[3])) d[i / 64] |= std::uint64_t{1} << (i % 64);
        }
        out.push_back(d);
    }
    return out;
}

int hamming(const Descriptor& a, const Descriptor& b) noexcept {
    int d = 0;
    for (std::size_t i = 0; i < 4; ++i) d += std::popcount(a[i] ^ b[i]);
    return d;
}

std::vector<Match> match(std::span<const Descriptor> a, std::span<const Descriptor> b, int max_distance) {
    std::vector<Match> out;
    if (a.empty() || b.empty()) return out;
    std::vector<int> best_b(a.size(), -1), dist_a(a.size(), 257);
    std::vector<int> best_a(b.size(), -1), dist_b(b.size(), 257);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            const int d = hamming(a[i], b[j]);
            if (d < dist_a[i]) {
                dist_a[i] = d;
                best_b[i] = static_cast<int>(j);
            }
            if (d < dist_b[j]) {
                dist_b[j] = d;
                best_a[j] = static_cast<int>(i);
            }
        }
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        const int j = best_b[i];
        if (best_a[static_cast<std::size_t>(j)] == static_cast<int>(i) && dist_a[i] <= max_distance) {
            out.push_back({static_cast<int>(i), j, dist_a[i]});
        }
    }
    return out;
}

void Homography::apply(double x, double y, double& ox, double& oy) const noexcept {
    const double w = h[6] * x + h[7] * y + h[8];
    ox = (h[0] * x + h[1] * y + h[2]) / w;
    oy = (h[3] * x + h[4] * y + h[5]) / w;
}

double Homography::determinant() const noexcept { return to_matrix(*this).determinant(); }

Homography Homography::inverse() const {
    const Eigen::Matrix3d m = to_matrix(*this);
    if (std::abs(m.determinant()) <= 1e-12) throw Error(ErrorKind::degenerate, "homography is singular");
    return from_matrix(m.inverse());
}

Homography fit_homography(std::span<const PointPair> pairs) {
    if (pairs.size() < 4) throw Error(ErrorKind::degenerate, "homography needs at least 4 pairs");
    const Normalizer na = Normalizer::of(pairs, true), nb = Normalizer::of(pairs, false);
    Eigen::MatrixXd A(2 * pairs.size(), 9);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& p = pairs[i];
        const double x = (p.ax - na.cx) * na.scale, y = (p.ay - na.cy) * na.scale;
        const double u = (p.bx - nb.cx) * nb.scale, v = (p.by - nb.cy) * nb.scale;
        A.row(static_cast<Eigen::Index>(2 * i)) << x, y, 1, 0, 0, 0, -u * x, -u * y, -u;
        A.row(static_cast<Eigen::Index>(2 * i + 1)) << 0, 0, 0, x, y, 1, -v * x, -v * y, -v;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    const Eigen::VectorXd h = svd.matrixV().col(8);
    Eigen::Matrix3d hn;
    hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
    const Eigen::Matrix3d full = nb.matrix().inverse() * hn * na.matrix();
    if (!full.allFinite()) throw Error(ErrorKind::degenerate, "homography fit is not finite");
    return from_matrix(full);
}

RansacResult ransac_homography(std::span<const PointPair> pairs, const RansacConfig& cfg) {
    const int n = static_cast<int>(pairs.size());
    if (n < 4) throw Error(ErrorKind::degenerate, "RANSAC needs at least 4 pairs");
    Rng rng(cfg.seed);
    RansacResult best;
    best.inlier_count = -1;
    long needed = cfg.max_iters;
    int it = 0;
    for (; it < needed && it < cfg.max_iters; ++it) {
        std::array<int, 4> idx{};
        for (int k = 0; k < 4; ++k) {
            int v;
            do {
                v = rng.uniform_int(0, n - 1);
            } while (std::find(idx.begin(), idx.begin() + k, v) != idx.begin() + k);
            idx[static_cast<std::size_t>(k)] = v;
        }
        std::array<PointPair, 4> sample{};
        for (int k = 0; k < 4; ++k) sample[static_cast<std::size_t>(k)] = pairs[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
        if (sample_degenerate(sample)) continue;
        Homography H;
        if (!solve_minimal(sample, H) || !plausible(H)) continue;
        const int count = count_inliers(pairs, H, cfg.threshold, nullptr);
        if (count > best.inlier_count) {
            best.inlier_count = count;
            best.H = H;
            const double w = static_cast<double>(count) / n;
            const double p_fail = 1.0 - std::pow(w, 4);
            if (p_fail <= 1e-12) {
                needed = it + 1;
            } else {
                const double k = std::log(1.0 - cfg.confidence) / std::log(p_fail);
                needed = std::min<long>(cfg.max_iters, static_cast<long>(std::ceil(k)));
            }
        }
    }
    if (best.inlier_count < cfg.min_inliers) {
        throw Error(ErrorKind::degenerate, "no homography reached " + std::to_string(cfg.min_inliers) + " inliers");
    }
    std::vector<bool> flags;
    count_inliers(pairs, best.H, cfg.threshold, &flags);
    std::vector<PointPair> inliers;
    for (int i = 0; i < n; ++i)
        if (flags[static_cast<std::size_t>(i)]) inliers.push_back(pairs[static_cast<std::size_t>(i)]);
    try {
        const Homography refined = fit_homography(inliers);
        if (plausible(refined)) best.H = refined;
    } catch (const Error&) {
    }
    best.inlier_count = count_inliers(pairs, best.H, cfg.threshold, &best.inliers);
    best.iterations = it;
    if (best.inlier_count < cfg.min_inliers) {
        throw Error(ErrorKind::degenerate, "refined homography lost its inliers");
    }
    return best;
}

GrayImage warp_region(const GrayImage& image, const Homography& H, Rect region) {
    GrayImage out(region.width, region.height, 0);
    if (H.h == Homography::identity().h) {
        for (int y = 0; y < region.height; ++y) {
            for (int x = 0; x < region.width; ++x) {
                const int sx = region.x + x, sy = region.y + y;
                if (sx >= 0 && sy >= 0 && sx < image.width() && sy < image.height()) out.at(x, y) = image.at(sx, sy);
            }
        }
        return out;
    }
    const Homography inv = H.inverse();
    const int w = image.width(), h = image.height();
    for (int y = 0; y < region.height; ++y) {
        for (int x = 0; x < region.width; ++x) {
            double sx, sy;
            inv.apply(region.x + x, region.y + y, sx, sy);
            if (!(sx >= 0.0 && sy >= 0.0 && sx <= w - 1 && sy <= h - 1)) continue;
            const int x0 = static_cast<int>(sx), y0 = static_cast<int>(sy);
            const double fx = sx - x0, fy = sy - y0;
            const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
            const double top = image.at(x0, y0) * (1.0 - fx) + image.at(x1, y0) * fx;
            const double bottom = image.at(x0, y1) * (1.0 - fx) + image.at(x1, y1) * fx;
            out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::round(top * (1.0 - fy) + bottom * fy), 0.0, 255.0));
        }
    }
    return out;
}

GrayImage warp(const GrayImage& image, const Homography& H, int out_width, int out_height) {
    return warp_region(image, H, {0, 0, out_width, out_height});
}

FeatureSet extract_features(const GrayImage& image, const RegisterConfig& cfg, const PairLayout& layout) {
    FeatureSet f;
    f.keypoints = detect_corners(image, cfg.corners);
    f.descriptors = describe(image, f.keypoints, layout);
    return f;
}

const char* to_string(RegisterMode mode) noexcept {
    return mode == RegisterMode::homography ? "homography" : "identity_fallback";
}

Registration estimate_registration(const FeatureSet& inpainted, const FeatureSet& candidate, int width, int height,
                                   const RegisterConfig& cfg) {
    Registration fallback;
    const auto matches = match(inpainted.descriptors, candidate.descriptors);
    if (static_cast<int>(matches.size()) < std::max(4, cfg.ransac.min_inliers)) return fallback;
    std::vector<PointPair> pairs;
    pairs.reserve(matches.size());
    for (const auto& m : matches) {
        const auto& a = inpainted.keypoints[static_cast<std::size_t>(m.index_a)];
        const auto& b = candidate.keypoints[static_cast<std::size_t>(m.index_b)];
        pairs.push_back({double(a.x), double(a.y), double(b.x), double(b.y)});
    }
    RansacResult fit;
    try {
        fit = ransac_homography(pairs, cfg.ransac);
    } catch (const Error&) {
        return fallback;
    }
    const double corners[4][2] = {{0, 0}, {double(width - 1), 0}, {0, double(height - 1)},
                                  {double(width - 1), double(height - 1)}};
    for (const auto& c : corners) {
        double x, y;
        fit.H.apply(c[0], c[1], x, y);
        if (!(std::hypot(x - c[0], y - c[1]) <= cfg.max_corner_shift)) {
            fallback.inliers = fit.inlier_count;
            return fallback;
        }
    }
    return {fit.H, RegisterMode::homography, fit.inlier_count};
}

RegisterResult register_to_candidate(const GrayImage& inpainted, const GrayImage& candidate,
                                     const RegisterConfig& cfg) {
    const PairLayout layout = make_pair_layout(cfg.layout_seed);
    const FeatureSet a = extract_features(inpainted, cfg, layout);
    const FeatureSet b = extract_features(candidate, cfg, layout);
    RegisterResult out;
    out.registration = estimate_registration(a, b, candidate.width(), candidate.height(), cfg);
    if (!inpainted.same_shape(candidate)) out.registration = {};
    out.aligned = warp(inpainted, out.registration.H, candidate.width(), candidate.height());
    return out;
}

}  // namespace ravenbench::registration
