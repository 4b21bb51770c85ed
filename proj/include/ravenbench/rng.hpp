#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ravenbench {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Mixes a parent seed with stream indices into an independent child seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept {
    return splitmix64(splitmix64(seed ^ splitmix64(a + 1)) ^ splitmix64(b + 0x51ED27ULL));
}

// The standard distributions are implementation-defined, so sampling is done
// here on top of the (fully specified) 64-bit Mersenne Twister to keep runs
// byte-identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Inclusive on both ends.
    int uniform_int(int lo, int hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t draw;
        do {
            draw = engine_();
        } while (draw >= limit);
        return lo + static_cast<int>(draw % span);
    }

    bool coin() { return (engine_() >> 63) != 0; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        const double u2 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    template <class It>
    void shuffle(It first, It last) {
        const auto n = static_cast<int>(last - first);
        for (int i = n - 1; i > 0; --i) {
            const int j = uniform_int(0, i);
            using std::swap;
            swap(first[i], first[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace ravenbench
