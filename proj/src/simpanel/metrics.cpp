#include "ravenbench/simpanel.hpp"

#include "ravenbench/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace ravenbench::simpanel {

namespace {

void require_same_shape(const GrayImage& a, const GrayImage& b) {
    if (!a.same_shape(b)) throw Error(ErrorKind::dimension_mismatch, "images differ in size");
}

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher), squared distances.
void edt_1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    int k = 0;
    v[0] = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] == inf) continue;
        if (v[0] < 0) {
            v[0] = q;
            z[0] = -inf;
            z[1] = inf;
            continue;
        }
        double s;
        for (;;) {
            const int p = v[static_cast<std::size_t>(k)];
            s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * q - 2.0 * p);
            if (s > z[static_cast<std::size_t>(k)] || k == 0) break;
            --k;
        }
        if (s <= z[static_cast<std::size_t>(k)]) {
            v[static_cast<std::size_t>(k)] = q;
        } else {
            ++k;
            v[static_cast<std::size_t>(k)] = q;
            z[static_cast<std::size_t>(k)] = s;
        }
        z[static_cast<std::size_t>(k) + 1] = inf;
    }
    if (v[0] < 0) {
        std::fill(d, d + n, inf);
        return;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[static_cast<std::size_t>(k) + 1] < q) ++k;
        const int p = v[static_cast<std::size_t>(k)];
        d[q] = double(q - p) * (q - p) + f[p];
    }
}

// Exact squared Euclidean distance to the nearest set pixel.
std::vector<double> squared_edt(const Mask& m) {
    const int w = m.width(), h = m.height();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> grid(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) grid[static_cast<std::size_t>(y) * w + x] = m.test(x, y) ? 0.0 : inf;
    const int n = std::max(w, h);
    std::vector<double> f(static_cast<std::size_t>(n)), d(static_cast<std::size_t>(n)), z(static_cast<std::size_t>(n) + 1);
    std::vector<int> v(static_cast<std::size_t>(n));
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) f[static_cast<std::size_t>(y)] = grid[static_cast<std::size_t>(y) * w + x];
        edt_1d(f.data(), d.data(), h, v, z);
        for (int y = 0; y < h; ++y) grid[static_cast<std::size_t>(y) * w + x] = d[static_cast<std::size_t>(y)];
    }
    for (int y = 0; y < h; ++y) {
        edt_1d(&grid[static_cast<std::size_t>(y) * w], d.data(), w, v, z);
        std::copy_n(d.data(), w, &grid[static_cast<std::size_t>(y) * w]);
    }
    return grid;
}

double directed(const Mask& from, const std::vector<double>& to_edt) {
    double worst = 0.0;
    for (int y = 0; y < from.height(); ++y)
        for (int x = 0; x < from.width(); ++x)
            if (from.test(x, y)) worst = std::max(worst, to_edt[static_cast<std::size_t>(y) * from.width() + x]);
    return std::sqrt(worst);
}

std::array<std::uint64_t, 256> histogram(const GrayImage& image) {
    std::array<std::uint64_t, 256> h{};
    for (auto v : image.pixels()) ++h[v];
    return h;
}

double entropy(const std::vector<std::uint64_t>& counts, double total) {
    double e = 0.0;
    for (auto c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / total;
        e -= p * std::log(p);
    }
    return e;
}

}  // namespace

int otsu_threshold(const GrayImage& image) {
    const auto h = histogram(image);
    const double total = static_cast<double>(image.size());
    double sum_all = 0.0;
    for (int v = 0; v < 256; ++v) sum_all += double(v) * h[static_cast<std::size_t>(v)];
    double w0 = 0.0, sum0 = 0.0, best = -1.0;
    int threshold = 0;
    for (int t = 0; t < 255; ++t) {
        w0 += h[static_cast<std::size_t>(t)];
        sum0 += double(t) * h[static_cast<std::size_t>(t)];
        const double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0) continue;
        const double m0 = sum0 / w0, m1 = (sum_all - sum0) / w1;
        const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if (between > best) {
            best = between;
            threshold = t;
        }
    }
    return threshold;
}

Mask foreground(const GrayImage& image) {
    Mask m(image.width(), image.height());
    if (image.empty()) return m;
    const auto [lo, hi] = std::minmax_element(image.pixels().begin(), image.pixels().end());
    const int t = *lo == *hi ? (*lo <= 127 ? 255 : -1) : otsu_threshold(image);
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x)
            if (image.at(x, y) <= t) m.set(x, y);
    return m;
}

double hausdorff_sets(const Mask& a, const Mask& b) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw Error(ErrorKind::dimension_mismatch, "point sets come from rasters of different size");
    }
    const bool ea = a.count() == 0, eb = b.count() == 0;
    if (ea && eb) return 0.0;
    if (ea || eb) return std::hypot(double(a.width()), double(a.height()));
    return std::max(directed(a, squared_edt(b)), directed(b, squared_edt(a)));
}

double hausdorff(const GrayImage& a, const GrayImage& b) {
    require_same_shape(a, b);
    return hausdorff_sets(foreground(a), foreground(b));
}

double mse(const GrayImage& a, const GrayImage& b) {
    require_same_shape(a, b);
    if (a.empty()) return 0.0;
    std::uint64_t sum = 0;
    const auto pa = a.pixels(), pb = b.pixels();
    for (std::size_t i = 0; i < pa.size(); ++i) {
        const int d = int(pa[i]) - int(pb[i]);
        sum += static_cast<std::uint64_t>(d * d);
    }
    return static_cast<double>(sum) / static_cast<double>(pa.size());
}

double wasserstein(const GrayImage& a, const GrayImage& b) {
    if (a.size() != b.size()) throw Error(ErrorKind::dimension_mismatch, "samples differ in size");
    if (a.empty()) return 0.0;
    // For integer samples, the sorted-pairing mean |x_i - y_i| equals the L1
    // distance between the two cumulative histograms.
    const auto ha = histogram(a), hb = histogram(b);
    std::int64_t ca = 0, cb = 0;
    std::uint64_t area = 0;
    for (std::size_t v = 0; v < 255; ++v) {
        ca += static_cast<std::int64_t>(ha[v]);
        cb += static_cast<std::int64_t>(hb[v]);
        area += static_cast<std::uint64_t>(std::llabs(ca - cb));
    }
    return static_cast<double>(area) / static_cast<double>(a.size());
}

double ergas(const GrayImage& ref, const GrayImage& test, double ratio) {
    require_same_shape(ref, test);
    std::uint64_t sum = 0;
    for (auto v : ref.pixels()) sum += v;
    const double mean = ref.empty() ? 0.0 : static_cast<double>(sum) / static_cast<double>(ref.size());
    if (mean <= 1e-9) throw Error(ErrorKind::zero_mean_reference, "ERGAS reference image has zero mean");
    return 100.0 * ratio * std::sqrt(mse(ref, test)) / mean;
}

double nmi(const GrayImage& a, const GrayImage& b, int bins) {
    require_same_shape(a, b);
    if (bins < 1 || bins > 256) throw Error(ErrorKind::invalid_argument, "nmi bins must be in 1..256");
    const auto nb = static_cast<std::size_t>(bins);
    std::vector<std::uint64_t> ja(nb, 0), jb(nb, 0), joint(nb * nb, 0);
    const auto pa = a.pixels(), pb = b.pixels();
    for (std::size_t i = 0; i < pa.size(); ++i) {
        const std::size_t ba = pa[i] * nb / 256, bb = pb[i] * nb / 256;
        ++ja[ba];
        ++jb[bb];
        ++joint[ba * nb + bb];
    }
    const double total = static_cast<double>(pa.size());
    if (total == 0.0) return 2.0;
    const double ha = entropy(ja, total), hb = entropy(jb, total), hab = entropy(joint, total);
    if (hab <= 0.0) {
        // Both constant: a single occupied joint cell.
        return pa[0] * nb / 256 == pb[0] * nb / 256 ? 2.0 : 1.0;
    }
    return std::clamp((ha + hb) / hab, 1.0, 2.0);
}

MetricPanel compute_panel(const GrayImage& region, const GrayImage& option, const MetricConfig& cfg) {
    MetricPanel p;
    p.hd = hausdorff(region, option);
    p.mse = mse(region, option);
    p.wd = wasserstein(region, option);
    try {
        p.ergas = ergas(option, region, cfg.ergas_ratio);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::zero_mean_reference) throw;
        p.ergas = std::numeric_limits<double>::infinity();
    }
    p.nmi = nmi(region, option, cfg.nmi_bins);
    return p;
}

const char* to_string(Tiebreak t) noexcept {
    switch (t) {
        case Tiebreak::none: return "none";
        case Tiebreak::mse: return "mse";
        case Tiebreak::lowest_index: return "lowest_index";
    }
    return "?";
}

const char* metric_name(int metric) noexcept {
    static constexpr const char* names[] = {"hd", "mse", "wd", "ergas", "nmi"};
    return metric >= 0 && metric < kMetricCount ? names[metric] : "?";
}

VoteRecord vote_panels(const std::array<MetricPanel, 8>& panels) {
    VoteRecord rec;
    rec.panels = panels;
    auto value = [&](int k, int metric) {
        const auto& p = panels[static_cast<std::size_t>(k)];
        switch (metric) {
            case kHd: return p.hd;
            case kMse: return p.mse;
            case kWd: return p.wd;
            case kErgas: return p.ergas;
            default: return -p.nmi;  // larger is better
        }
    };
    for (int m = 0; m < kMetricCount; ++m) {
        int best = 0;
        for (int k = 1; k < 8; ++k)
            if (value(k, m) < value(best, m)) best = k;
        rec.winners[static_cast<std::size_t>(m)] = best;
    }
    std::array<int, 8> votes{};
    for (int w : rec.winners) ++votes[static_cast<std::size_t>(w)];
    const int top = *std::max_element(votes.begin(), votes.end());
    std::vector<int> tied;
    for (int k = 0; k < 8; ++k)
        if (votes[static_cast<std::size_t>(k)] == top) tied.push_back(k);
    rec.choice = tied.front();
    if (tied.size() == 1) return rec;

    rec.tiebreak = Tiebreak::mse;
    double best_mse = panels[static_cast<std::size_t>(tied.front())].mse;
    int equal = 1;
    for (std::size_t i = 1; i < tied.size(); ++i) {
        const double m = panels[static_cast<std::size_t>(tied[i])].mse;
        if (m < best_mse) {
            best_mse = m;
            rec.choice = tied[i];
            equal = 1;
        } else if (m == best_mse) {
            ++equal;
        }
    }
    if (equal > 1) rec.tiebreak = Tiebreak::lowest_index;
    return rec;
}

VoteRecord vote(const GrayImage& region, std::span<const GrayImage> options, const MetricConfig& cfg) {
    if (options.size() != 8) throw Error(ErrorKind::invalid_argument, "vote needs exactly 8 options");
    std::array<MetricPanel, 8> panels;
    for (std::size_t k = 0; k < 8; ++k) panels[k] = compute_panel(region, options[k], cfg);
    return vote_panels(panels);
}

}  // namespace ravenbench::simpanel
