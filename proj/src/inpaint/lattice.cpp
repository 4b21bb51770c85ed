#include "ravenbench/error.hpp"
#include "ravenbench/inpaint.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <mutex>
#include <optional>

#include <fftw3.h>

namespace ravenbench::inpaint {

namespace {

// FFTW's planner is not re-entrant; execution on distinct arrays is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwBuffer {
    explicit FftwBuffer(std::size_t bytes) : data(fftw_malloc(bytes)) {
        if (!data) throw std::bad_alloc();
    }
    ~FftwBuffer() { fftw_free(data); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
    void* data;
};

class Autocorrelator {
public:
    Autocorrelator(int width, int height)
        : width_(width), height_(height),
          real_(static_cast<std::size_t>(width) * height * sizeof(double)),
          spectrum_(static_cast<std::size_t>(height) * (width / 2 + 1) * sizeof(fftw_complex)) {
        std::lock_guard lock(planner_mutex());
        forward_ = fftw_plan_dft_r2c_2d(height, width, real(), spectrum(), FFTW_ESTIMATE);
        inverse_ = fftw_plan_dft_c2r_2d(height, width, spectrum(), real(), FFTW_ESTIMATE);
    }
    ~Autocorrelator() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(inverse_);
    }
    Autocorrelator(const Autocorrelator&) = delete;
    Autocorrelator& operator=(const Autocorrelator&) = delete;

    double* real() { return static_cast<double*>(real_.data); }

    // In place: real() holds a padded signal on entry and its circular
    // autocorrelation (unnormalized sums of products) on exit.
    void run() {
        fftw_execute(forward_);
        const std::size_t n = static_cast<std::size_t>(height_) * (width_ / 2 + 1);
        const double scale = 1.0 / (static_cast<double>(width_) * height_);
        for (std::size_t i = 0; i < n; ++i) {
            auto& c = spectrum()[i];
            const double power = c[0] * c[0] + c[1] * c[1];
            c[0] = power * scale;
            c[1] = 0.0;
        }
        fftw_execute(inverse_);
    }

private:
    fftw_complex* spectrum() { return static_cast<fftw_complex*>(spectrum_.data); }

    int width_;
    int height_;
    FftwBuffer real_;
    FftwBuffer spectrum_;
    fftw_plan forward_ = nullptr;
    fftw_plan inverse_ = nullptr;
};

double unmasked_mean(const GrayImage& image, const Mask& mask) {
    double sum = 0.0;
    std::size_t n = 0;
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            if (mask.test(x, y)) continue;
            sum += image.at(x, y);
            ++n;
        }
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

struct Peak {
    int lag = 0;
    double strength = 0.0;
};

// Walks down the central lobe to its first minimum, then takes the strongest
// lag beyond it.
template <class Profile>
Peak dominant_peak(Profile ratio, int max_lag) {
    int t = 1;
    while (t < max_lag && ratio(t + 1) < ratio(t)) ++t;
    Peak best{0, -1.0};
    for (int lag = std::max(t, kMinPitch); lag <= max_lag; ++lag) {
        const double r = ratio(lag);
        if (r > best.strength) best = {lag, r};
    }
    return best;
}

// Phase of the lattice: offset (mod pitch) whose folded profile deviates most
// from the mean.
int fold_origin(const std::vector<double>& profile, int pitch) {
    std::vector<double> folded(static_cast<std::size_t>(pitch), 0.0);
    std::vector<int> count(static_cast<std::size_t>(pitch), 0);
    double mean = 0.0;
    for (std::size_t i = 0; i < profile.size(); ++i) mean += profile[i];
    mean /= static_cast<double>(profile.size());
    for (std::size_t i = 0; i < profile.size(); ++i) {
        folded[i % static_cast<std::size_t>(pitch)] += profile[i];
        ++count[i % static_cast<std::size_t>(pitch)];
    }
    int best = 0;
    double best_dev = -1.0;
    for (int p = 0; p < pitch; ++p) {
        const double dev = std::abs(folded[static_cast<std::size_t>(p)] / std::max(1, count[static_cast<std::size_t>(p)]) - mean);
        if (dev > best_dev) {
            best_dev = dev;
            best = p;
        }
    }
    return best;
}

}  // namespace

double autocorrelation_at(const GrayImage& image, const Mask& mask, int dx, int dy) {
    const double mean = unmasked_mean(image, mask);
    double sum = 0.0;
    std::size_t pairs = 0;
    for (int y = 0; y + dy < image.height(); ++y) {
        for (int x = 0; x + dx < image.width(); ++x) {
            if (mask.test(x, y) || mask.test(x + dx, y + dy)) continue;
            sum += (image.at(x, y) - mean) * (image.at(x + dx, y + dy) - mean);
            ++pairs;
        }
    }
    return pairs ? sum / static_cast<double>(pairs) : 0.0;
}

LatticeEstimate detect_lattice(const GrayImage& image, const Mask& mask) {
    if (image.empty() || mask.width() != image.width() || mask.height() != image.height()) {
        throw Error(ErrorKind::invalid_argument, "mask dimensions must match the image");
    }
    const int w = image.width(), h = image.height();
    const std::size_t total = static_cast<std::size_t>(w) * h;
    if (mask.count() * 9 > total) {
        throw Error(ErrorKind::invalid_argument, "lattice detection needs >= 8/9 of the image unmasked");
    }
    const int max_x = w / 2, max_y = h / 2;
    if (max_x < kMinPitch || max_y < kMinPitch) {
        throw Error(ErrorKind::invalid_argument, "image too small for lattice detection");
    }

    // Zero padding by half the image keeps lags up to dim/2 free of wrap-around.
    const int pw = w + max_x, ph = h + max_y;
    const double mean = unmasked_mean(image, mask);
    Autocorrelator signal(pw, ph), coverage(pw, ph);
    std::fill_n(signal.real(), static_cast<std::size_t>(pw) * ph, 0.0);
    std::fill_n(coverage.real(), static_cast<std::size_t>(pw) * ph, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (mask.test(x, y)) continue;
            const std::size_t i = static_cast<std::size_t>(y) * pw + x;
            signal.real()[i] = image.at(x, y) - mean;
            coverage.real()[i] = 1.0;
        }
    }
    signal.run();
    coverage.run();

    auto normalized = [&](int dx, int dy) {
        const std::size_t i = static_cast<std::size_t>(dy) * pw + dx;
        const double pairs = coverage.real()[i];
        return pairs > 0.5 ? signal.real()[i] / pairs : 0.0;
    };
    const double zero_lag = normalized(0, 0);
    if (!(zero_lag > 1e-9)) throw Error(ErrorKind::constant_image, "image has no intensity variation");

    const Peak px = dominant_peak([&](int lag) { return normalized(lag, 0) / zero_lag; }, max_x);
    const Peak py = dominant_peak([&](int lag) { return normalized(0, lag) / zero_lag; }, max_y);
    const double strength = std::clamp(std::min(px.strength, py.strength), 0.0, 1.0);
    if (px.lag == 0 || py.lag == 0 || strength < kMinPeakStrength) {
        throw Error(ErrorKind::constant_image, "no periodic structure above strength 0.1");
    }

    std::vector<double> cols(static_cast<std::size_t>(w), 0.0), rows(static_cast<std::size_t>(h), 0.0);
    std::vector<int> col_n(static_cast<std::size_t>(w), 0), row_n(static_cast<std::size_t>(h), 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (mask.test(x, y)) continue;
            cols[static_cast<std::size_t>(x)] += image.at(x, y);
            rows[static_cast<std::size_t>(y)] += image.at(x, y);
            ++col_n[static_cast<std::size_t>(x)];
            ++row_n[static_cast<std::size_t>(y)];
        }
    }
    for (int x = 0; x < w; ++x) cols[static_cast<std::size_t>(x)] /= std::max(1, col_n[static_cast<std::size_t>(x)]);
    for (int y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] /= std::max(1, row_n[static_cast<std::size_t>(y)]);

    LatticeEstimate est;
    est.pitch_x = px.lag;
    est.pitch_y = py.lag;
    est.origin_x = fold_origin(cols, px.lag);
    est.origin_y = fold_origin(rows, py.lag);
    est.peak_strength = strength;
    return est;
}

InpaintResult inpaint_lattice(const InpaintRequest& request, const LatticeConfig& cfg) {
    validate(request);
    const auto start = std::chrono::steady_clock::now();
    const auto& img = request.image;
    const auto& mask = request.mask;

    std::optional<LatticeEstimate> lattice;
    try {
        lattice = detect_lattice(img, mask);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::constant_image) throw;
    }
    if (!lattice) {
        InpaintResult fallback = inpaint_local(request, cfg.fallback);
        fallback.substrate_id = "lattice+localfallback";
        return fallback;
    }

    const int px = lattice->pitch_x, py = lattice->pitch_y;
    auto usable = [&](int x, int y) {
        return x >= 0 && y >= 0 && x < img.width() && y < img.height() && !mask.test(x, y);
    };

    InpaintResult result;
    result.image = img;
    std::optional<GrayImage> local;
    const Rect b = mask.bounds();
    for (int y = b.y; y < b.y + b.height; ++y) {
        for (int x = b.x; x < b.x + b.width; ++x) {
            if (!mask.test(x, y)) continue;
            double sum = 0.0;
            int n = 0;
            // Two homologous samples at indices 0 and 1 define the line that is
            // extrapolated to index 2.
            if (usable(x - px, y) && usable(x - 2 * px, y)) {
                sum += 2.0 * img.at(x - px, y) - img.at(x - 2 * px, y);
                ++n;
            }
            if (usable(x, y - py) && usable(x, y - 2 * py)) {
                sum += 2.0 * img.at(x, y - py) - img.at(x, y - 2 * py);
                ++n;
            }
            if (n == 0) {
                if (!local) local = inpaint_local(request, cfg.fallback).image;
                result.image.at(x, y) = local->at(x, y);
                continue;
            }
            result.image.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::round(sum / n), 0.0, 255.0));
        }
    }
    result.substrate_id = "lattice";
    result.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace ravenbench::inpaint
