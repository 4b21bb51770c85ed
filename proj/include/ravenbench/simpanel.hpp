#pragma once

#include "ravenbench/image.hpp"

#include <array>
#include <span>

namespace ravenbench::simpanel {

// Otsu threshold t: pixels <= t form the darker class.
int otsu_threshold(const GrayImage& image);

// Dark (foreground) pixels after Otsu binarization. A single-level image is
// all foreground when that level is <= 127 and empty otherwise.
Mask foreground(const GrayImage& image);

// Symmetric Hausdorff distance between two pixel sets of equal raster size.
// Empty vs non-empty gives the raster diagonal; empty vs empty gives 0.
double hausdorff_sets(const Mask& a, const Mask& b);
double hausdorff(const GrayImage& a, const GrayImage& b);

double mse(const GrayImage& a, const GrayImage& b);

// W1 between the two flattened intensity samples.
double wasserstein(const GrayImage& a, const GrayImage& b);

// 100 * ratio * RMSE / mean(ref). Throws Error(zero_mean_reference) when the
// reference mean is <= 1e-9.
double ergas(const GrayImage& ref, const GrayImage& test, double ratio = 1.0);

// (H(A) + H(B)) / H(A,B) over a bins x bins equal-width joint histogram.
// Both constant: 2 if they share a bin, else 1.
double nmi(const GrayImage& a, const GrayImage& b, int bins = 64);

struct MetricPanel {
    double hd = 0.0;
    double mse = 0.0;
    double wd = 0.0;
    double ergas = 0.0;  // +inf when the option is black
    double nmi = 0.0;
};

struct MetricConfig {
    int nmi_bins = 64;
    double ergas_ratio = 1.0;
};

// `region` is the in-painted answer crop; `option` is the reference.
MetricPanel compute_panel(const GrayImage& region, const GrayImage& option, const MetricConfig& cfg = {});

enum class Tiebreak { none, mse, lowest_index };
const char* to_string(Tiebreak t) noexcept;

enum Metric { kHd = 0, kMse, kWd, kErgas, kNmi, kMetricCount };
const char* metric_name(int metric) noexcept;

struct VoteRecord {
    std::array<MetricPanel, 8> panels{};
    std::array<int, kMetricCount> winners{};
    int choice = 0;
    Tiebreak tiebreak = Tiebreak::none;
};

VoteRecord vote_panels(const std::array<MetricPanel, 8>& panels);
VoteRecord vote(const GrayImage& region, std::span<const GrayImage> options, const MetricConfig& cfg = {});

}  // namespace ravenbench::simpanel
