#pragma once

#include "ravenbench/image.hpp"

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ravenbench::inpaint {

struct InpaintRequest {
    GrayImage image;
    Mask mask;
};

// Throws Error(invalid_argument) unless the mask matches the image, is
// non-empty and touches no border pixel.
void validate(const InpaintRequest& request);

struct InpaintResult {
    GrayImage image;
    std::string substrate_id;
    double elapsed_seconds = 0.0;
    bool converged = true;
    int iterations = 0;
};

// ---- local diffusion ------------------------------------------------------

struct LocalConfig {
    int iterations = 2000;     // Gauss-Seidel sweep cap at full resolution
    int kernel_radius = 1;     // averaging window is (2r+1)^2 minus the centre
    double tolerance = 0.5;    // stop once the largest per-sweep change is below this
};

// Discrete harmonic fill of the masked pixels. Only pixels within
// `kernel_radius` of the mask are ever read.
InpaintResult inpaint_local(const InpaintRequest& request, const LocalConfig& cfg = {});

// ---- lattice extrapolation ------------------------------------------------

struct LatticeEstimate {
    int pitch_x = 0;
    int pitch_y = 0;
    int origin_x = 0;
    int origin_y = 0;
    double peak_strength = 0.0;  // secondary-peak / zero-lag autocorrelation
};

constexpr int kMinPitch = 16;
constexpr double kMinPeakStrength = 0.1;

// Coverage-normalized autocorrelation of the mean-subtracted unmasked
// content. Throws Error(constant_image) when no off-origin peak reaches
// kMinPeakStrength.
LatticeEstimate detect_lattice(const GrayImage& image, const Mask& mask);

// Coverage-normalized autocorrelation at one lag, computed directly. Exposed
// for diagnostics and tests; O(W*H) per lag.
double autocorrelation_at(const GrayImage& image, const Mask& mask, int dx, int dy);

struct LatticeConfig {
    LocalConfig fallback;
};

// Per-pixel linear extrapolation from the two homologous cells to the left and
// the two above, averaged. Falls back to inpaint_local (substrate id suffix
// "+localfallback") when no lattice is found.
InpaintResult inpaint_lattice(const InpaintRequest& request, const LatticeConfig& cfg = {});

// ---- external in-painters -------------------------------------------------

struct ExternalConfig {
    std::vector<std::string> command;  // argv; the case directory is appended
    double timeout_seconds = 600.0;
    double poll_interval_seconds = 0.1;
    int unmasked_tolerance = 2;
};

struct ExternalCase {
    int item = 0;  // NNN in item_{NNN}_*.png
    InpaintResult result;
};

std::string case_file(int item, const char* suffix);  // "item_007_image.png"

// Writes item_{NNN}_image.png / item_{NNN}_mask.png, numbering from `first`.
void write_case_dir(const std::filesystem::path& dir, std::span<const InpaintRequest> requests, int first = 1);

// Runs `<command> <case_dir>`, waits for item_{NNN}_result.png for every
// input item and validates each result against its inputs.
std::vector<ExternalCase> run_external(const std::filesystem::path& case_dir, const ExternalConfig& cfg);

// ---- substrates -----------------------------------------------------------

class Substrate {
public:
    virtual ~Substrate() = default;
    virtual std::string name() const = 0;
    virtual InpaintResult inpaint(const InpaintRequest& request) const = 0;
    // External substrates override this to launch one process per batch.
    virtual std::vector<InpaintResult> inpaint_batch(std::span<const InpaintRequest> requests) const;
    virtual bool thread_safe() const { return true; }
};

std::unique_ptr<Substrate> make_local_substrate(const LocalConfig& cfg = {});
std::unique_ptr<Substrate> make_lattice_substrate(const LatticeConfig& cfg = {});
// Writes each batch to a fresh directory under `work_dir`.
std::unique_ptr<Substrate> make_external_substrate(const ExternalConfig& cfg, std::filesystem::path work_dir);
// Copies `truth` into the masked region.
std::unique_ptr<Substrate> make_paste_substrate(GrayImage truth);
// Fills the masked region with one gray level.
std::unique_ptr<Substrate> make_constant_substrate(std::uint8_t level);

}  // namespace ravenbench::inpaint
