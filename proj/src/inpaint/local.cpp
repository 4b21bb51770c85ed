#include "ravenbench/error.hpp"
#include "ravenbench/inpaint.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace ravenbench::inpaint {

namespace {

enum class State : std::uint8_t { unavailable, known, unknown };

struct Level {
    int width = 0;
    int height = 0;
    std::vector<double> value;
    std::vector<State> state;

    std::size_t at(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

// One Gauss-Seidel sweep in raster order; returns the largest change.
double sweep(Level& level, int radius) {
    double max_change = 0.0;
    for (int y = 0; y < level.height; ++y) {
        for (int x = 0; x < level.width; ++x) {
            const std::size_t i = level.at(x, y);
            if (level.state[i] != State::unknown) continue;
            double sum = 0.0;
            int n = 0;
            for (int dy = -radius; dy <= radius; ++dy) {
                const int yy = y + dy;
                if (yy < 0 || yy >= level.height) continue;
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int xx = x + dx;
                    if ((dx == 0 && dy == 0) || xx < 0 || xx >= level.width) continue;
                    const std::size_t j = level.at(xx, yy);
                    if (level.state[j] == State::unavailable) continue;
                    sum += level.value[j];
                    ++n;
                }
            }
            if (n == 0) continue;
            const double next = sum / n;
            max_change = std::max(max_change, std::abs(next - level.value[i]));
            level.value[i] = next;
        }
    }
    return max_change;
}

Level coarsen(const Level& fine) {
    Level coarse;
    coarse.width = (fine.width + 1) / 2;
    coarse.height = (fine.height + 1) / 2;
    coarse.value.assign(static_cast<std::size_t>(coarse.width) * coarse.height, 0.0);
    coarse.state.assign(coarse.value.size(), State::unavailable);
    for (int y = 0; y < coarse.height; ++y) {
        for (int x = 0; x < coarse.width; ++x) {
            bool any_unknown = false;
            double sum = 0.0;
            int known = 0;
            for (int dy = 0; dy < 2; ++dy) {
                for (int dx = 0; dx < 2; ++dx) {
                    const int fx = 2 * x + dx, fy = 2 * y + dy;
                    if (fx >= fine.width || fy >= fine.height) continue;
                    const std::size_t j = fine.at(fx, fy);
                    if (fine.state[j] == State::unknown) any_unknown = true;
                    if (fine.state[j] == State::known) {
                        sum += fine.value[j];
                        ++known;
                    }
                }
            }
            const std::size_t i = coarse.at(x, y);
            // Mixed blocks stay known so a one-pixel boundary ring survives
            // every level; the fine sweeps correct the shifted boundary.
            if (known > 0) {
                coarse.state[i] = State::known;
                coarse.value[i] = sum / known;
            } else if (any_unknown) {
                coarse.state[i] = State::unknown;
            }
        }
    }
    return coarse;
}

// Bilinear lookup of fine pixel (x, y) in the half-resolution level, using
// only usable coarse samples.
double prolong(const Level& coarse, int x, int y) {
    const double cx = (x + 0.5) / 2.0 - 0.5, cy = (y + 0.5) / 2.0 - 0.5;
    const int x0 = static_cast<int>(std::floor(cx)), y0 = static_cast<int>(std::floor(cy));
    const double fx = cx - x0, fy = cy - y0;
    double sum = 0.0, weight = 0.0;
    for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
            const int xx = x0 + dx, yy = y0 + dy;
            if (xx < 0 || yy < 0 || xx >= coarse.width || yy >= coarse.height) continue;
            const std::size_t j = coarse.at(xx, yy);
            if (coarse.state[j] == State::unavailable) continue;
            const double w = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy);
            sum += w * coarse.value[j];
            weight += w;
        }
    }
    return weight > 0.0 ? sum / weight : coarse.value[coarse.at(x / 2, y / 2)];
}

struct SolveStats {
    int iterations = 0;
    bool converged = false;
};

// Coarse-to-fine: the half-resolution solution seeds the unknowns, then
// averaging sweeps run to tolerance at this resolution.
SolveStats solve(Level& level, int radius, double tolerance, int cap, int depth) {
    const auto unknown = std::count(level.state.begin(), level.state.end(), State::unknown);
    if (unknown > 64 && level.width > 8 && level.height > 8 && depth < 12) {
        Level coarse = coarsen(level);
        solve(coarse, radius, tolerance * 0.1, 4 * cap, depth + 1);
        for (int y = 0; y < level.height; ++y) {
            for (int x = 0; x < level.width; ++x) {
                const std::size_t i = level.at(x, y);
                if (level.state[i] == State::unknown) level.value[i] = prolong(coarse, x, y);
            }
        }
    } else {
        double sum = 0.0;
        int known = 0;
        for (std::size_t i = 0; i < level.value.size(); ++i) {
            if (level.state[i] == State::known) {
                sum += level.value[i];
                ++known;
            }
        }
        const double mean = known > 0 ? sum / known : 0.0;
        for (std::size_t i = 0; i < level.value.size(); ++i) {
            if (level.state[i] == State::unknown) level.value[i] = mean;
        }
    }
    SolveStats stats;
    while (stats.iterations < cap) {
        const double change = sweep(level, radius);
        ++stats.iterations;
        if (change < tolerance) {
            stats.converged = true;
            break;
        }
    }
    return stats;
}

}  // namespace

void validate(const InpaintRequest& request) {
    const auto& img = request.image;
    const auto& mask = request.mask;
    if (img.empty() || mask.width() != img.width() || mask.height() != img.height()) {
        throw Error(ErrorKind::invalid_argument, "mask dimensions must match the image");
    }
    const Rect b = mask.bounds();
    if (b.width == 0) throw Error(ErrorKind::invalid_argument, "mask is empty");
    if (b.x == 0 || b.y == 0 || b.x + b.width == img.width() || b.y + b.height == img.height()) {
        throw Error(ErrorKind::invalid_argument, "mask must be strictly interior to the image");
    }
}

InpaintResult inpaint_local(const InpaintRequest& request, const LocalConfig& cfg) {
    validate(request);
    if (cfg.kernel_radius < 1 || cfg.iterations < 1 || !(cfg.tolerance > 0.0)) {
        throw Error(ErrorKind::invalid_argument, "local fill needs radius >= 1, iterations >= 1, tolerance > 0");
    }
    const auto start = std::chrono::steady_clock::now();
    const auto& img = request.image;
    const auto& mask = request.mask;
    const int r = cfg.kernel_radius;

    // Work inside the mask's bounding box grown by the kernel radius.
    const Rect b = mask.bounds();
    const int x0 = std::max(0, b.x - r), y0 = std::max(0, b.y - r);
    const int x1 = std::min(img.width(), b.x + b.width + r), y1 = std::min(img.height(), b.y + b.height + r);

    Level level;
    level.width = x1 - x0;
    level.height = y1 - y0;
    level.value.assign(static_cast<std::size_t>(level.width) * level.height, 0.0);
    level.state.assign(level.value.size(), State::unavailable);
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            const std::size_t i = level.at(x - x0, y - y0);
            if (mask.test(x, y)) {
                level.state[i] = State::unknown;
                continue;
            }
            // Known only when within the kernel radius of a masked pixel.
            bool near = false;
            for (int dy = -r; dy <= r && !near; ++dy) {
                for (int dx = -r; dx <= r && !near; ++dx) {
                    const int xx = x + dx, yy = y + dy;
                    near = xx >= 0 && yy >= 0 && xx < img.width() && yy < img.height() && mask.test(xx, yy);
                }
            }
            if (near) {
                level.state[i] = State::known;
                level.value[i] = img.at(x, y);
            }
        }
    }

    const SolveStats stats = solve(level, r, cfg.tolerance, cfg.iterations, 0);

    InpaintResult result;
    result.image = img;
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            if (!mask.test(x, y)) continue;
            const double v = std::clamp(std::round(level.value[level.at(x - x0, y - y0)]), 0.0, 255.0);
            result.image.at(x, y) = static_cast<std::uint8_t>(v);
        }
    }
    result.substrate_id = "local";
    result.converged = stats.converged;
    result.iterations = stats.iterations;
    result.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace ravenbench::inpaint
