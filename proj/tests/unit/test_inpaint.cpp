#include "ravenbench/error.hpp"
#include "ravenbench/inpaint.hpp"
#include "ravenbench/matrixgen.hpp"
#include "ravenbench/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

using namespace ravenbench;
using namespace ravenbench::inpaint;
namespace fs = std::filesystem;

namespace {

int max_abs_diff(const GrayImage& a, const GrayImage& b, Rect r) {
    int worst = 0;
    for (int y = r.y; y < r.y + r.height; ++y)
        for (int x = r.x; x < r.x + r.width; ++x) worst = std::max(worst, std::abs(int(a.at(x, y)) - int(b.at(x, y))));
    return worst;
}

bool unmasked_identical(const GrayImage& a, const GrayImage& b, const Mask& m) {
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x)
            if (!m.test(x, y) && a.at(x, y) != b.at(x, y)) return false;
    return true;
}

// A matrix whose cells follow `rules`, with the answer cell masked.
struct Synthetic {
    GrayImage truth;
    InpaintRequest request;
    Rect hole;
};

Synthetic synthetic_matrix(const std::vector<matrixgen::RuleSpec>& rules, const matrixgen::ShapeSpec& base) {
    matrixgen::MatrixItem item;
    item.rules = rules;
    item.basis.base = base;
    for (int i = 0; i < 9; ++i) item.cells[static_cast<std::size_t>(i)] = matrixgen::realize_cell(rules, i / 3, i % 3, item.basis);
    const matrixgen::RenderConfig cfg;
    Synthetic s;
    s.truth = matrixgen::render_matrix(item, cfg, &item.cells[8]);
    const auto rc = matrixgen::render_case(item, cfg);
    s.request = {rc.image, rc.mask};
    s.hole = rc.geometry.interior(8);
    return s;
}

fs::path fixture(const char* name) { return fs::path(RB_FIXTURES) / name; }

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("rb_inpaint_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST(Local, ConstantSurroundFillsExactly) {
    GrayImage img(64, 64, 200);
    const Mask m = Mask::from_rect(64, 64, {20, 20, 24, 24});
    for (int y = 20; y < 44; ++y)
        for (int x = 20; x < 44; ++x) img.at(x, y) = 0;
    const auto r = inpaint_local({img, m});
    EXPECT_EQ(max_abs_diff(r.image, GrayImage(64, 64, 200), {0, 0, 64, 64}), 0);
    EXPECT_EQ(r.substrate_id, "local");
}

TEST(Local, LinearRampIsReproduced) {
    GrayImage img(96, 96);
    for (int y = 0; y < 96; ++y)
        for (int x = 0; x < 96; ++x) img.at(x, y) = static_cast<std::uint8_t>(20 + 2 * x);
    const GrayImage truth = img;
    const Rect hole{30, 30, 36, 36};
    const Mask m = Mask::from_rect(96, 96, hole);
    for (int y = hole.y; y < hole.y + hole.height; ++y)
        for (int x = hole.x; x < hole.x + hole.width; ++x) img.at(x, y) = 0;
    const auto r = inpaint_local({img, m});
    EXPECT_LE(max_abs_diff(r.image, truth, hole), 1);
    EXPECT_TRUE(unmasked_identical(r.image, img, m));
}

TEST(Local, RejectsBadMasks) {
    GrayImage img(32, 32, 100);
    EXPECT_THROW(inpaint_local({img, Mask(32, 32)}), Error);
    EXPECT_THROW(inpaint_local({img, Mask::from_rect(32, 32, {0, 0, 4, 4})}), Error);
    EXPECT_THROW(inpaint_local({img, Mask::from_rect(16, 16, {4, 4, 4, 4})}), Error);
}

TEST(Lattice, DetectsDefaultPitch) {
    const auto battery = matrixgen::generate_battery(0, 12, matrixgen::DifficultyProfile::standard(12));
    for (const auto& item : battery) {
        const auto rc = matrixgen::render_case(item, {});
        const auto est = detect_lattice(rc.image, rc.mask);
        EXPECT_NEAR(est.pitch_x, 168, 2) << item.id;
        EXPECT_NEAR(est.pitch_y, 168, 2) << item.id;
        EXPECT_GE(est.peak_strength, kMinPeakStrength);
    }
}

TEST(Lattice, PitchMatchesBruteForceAutocorrelation) {
    // Small dark blobs on a 170 px tiling; the brute-force oracle walks down the
    // central lobe and takes the strongest lag after it.
    const int size = 512, tile = 170;
    GrayImage img(size, size, 230);
    Rng rng(5);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const int tx = x % tile, ty = y % tile;
            if (tx >= 40 && tx < 52 && ty >= 60 && ty < 70) img.at(x, y) = 20;
            if (tx >= 100 && tx < 106 && ty >= 20 && ty < 50) img.at(x, y) = 90;
        }
    const Mask m = Mask::from_rect(size, size, {360, 360, 120, 120});
    const auto est = detect_lattice(img, m);

    auto oracle = [&](bool horizontal) {
        auto r = [&](int lag) {
            return horizontal ? autocorrelation_at(img, m, lag, 0) : autocorrelation_at(img, m, 0, lag);
        };
        int t = 1;
        double prev = r(1);
        for (;;) {
            const double next = r(t + 1);
            if (!(next < prev) || t + 1 > size / 2) break;
            prev = next;
            ++t;
        }
        int best = 0;
        double best_v = -1e300;
        for (int lag = std::max(t, kMinPitch); lag <= size / 2; ++lag) {
            const double v = r(lag);
            if (v > best_v) {
                best_v = v;
                best = lag;
            }
        }
        return best;
    };
    EXPECT_EQ(est.pitch_x, oracle(true));
    EXPECT_EQ(est.pitch_y, oracle(false));
    EXPECT_EQ(est.pitch_x, tile);
    EXPECT_EQ(est.pitch_y, tile);
}

TEST(Lattice, ConstantImageRaises) {
    const GrayImage img(128, 128, 77);
    const Mask m = Mask::from_rect(128, 128, {40, 40, 20, 20});
    try {
        detect_lattice(img, m);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::constant_image);
    }
    const auto r = inpaint_lattice({img, m});
    EXPECT_EQ(r.substrate_id, "lattice+localfallback");
    EXPECT_EQ(max_abs_diff(r.image, img, {0, 0, 128, 128}), 0);
}

TEST(Lattice, ConstantItemIsRecovered) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto item = matrixgen::generate_battery(seed, 1, matrixgen::DifficultyProfile::constant_only(1))[0];
        const auto rc = matrixgen::render_case(item, {});
        const GrayImage truth = matrixgen::render_matrix(item, {}, &item.cells[8]);
        const auto r = inpaint_lattice({rc.image, rc.mask});
        EXPECT_EQ(r.substrate_id, "lattice");
        EXPECT_LE(max_abs_diff(r.image, truth, rc.geometry.interior(8)), 2);
        EXPECT_TRUE(unmasked_identical(r.image, rc.image, rc.mask));
    }
}

TEST(Lattice, IntensityProgressionIsExtrapolated) {
    using namespace matrixgen;
    RuleSpec rule{Attribute::intensity, RuleFamily::progression, Axis::row};
    rule.step = 60;
    ShapeSpec base;
    base.kind = ShapeKind::square;
    base.size_percent = 60;
    base.intensity = 40;
    const auto s = synthetic_matrix({rule}, base);
    const auto r = inpaint_lattice(s.request);
    EXPECT_LE(max_abs_diff(r.image, s.truth, s.hole), 5);
}

TEST(Substrates, PasteAndConstant) {
    const auto s = synthetic_matrix({{matrixgen::Attribute::size, matrixgen::RuleFamily::constant, matrixgen::Axis::row}},
                                    {});
    const auto paste = make_paste_substrate(s.truth);
    EXPECT_EQ(paste->inpaint(s.request).image, s.truth);
    const auto constant = make_constant_substrate(128);
    const auto c = constant->inpaint(s.request);
    EXPECT_EQ(c.image.at(s.hole.x + 5, s.hole.y + 5), 128);
    EXPECT_TRUE(unmasked_identical(c.image, s.request.image, s.request.mask));
}

class External : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fresh_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
        const auto item = matrixgen::generate_battery(0, 3, matrixgen::DifficultyProfile::standard(3))[1];
        const auto rc = matrixgen::render_case(item, {});
        requests_ = {{rc.image, rc.mask}, {rc.image, rc.mask}};
        write_case_dir(dir_, requests_);
    }
    ErrorKind run_expecting_error(const char* script, double timeout = 30.0) {
        ExternalConfig cfg;
        cfg.command = {fixture(script).string()};
        cfg.timeout_seconds = timeout;
        try {
            run_external(dir_, cfg);
        } catch (const Error& e) {
            return e.kind();
        }
        ADD_FAILURE() << script << " did not fail";
        return ErrorKind::stage;
    }
    fs::path dir_;
    std::vector<InpaintRequest> requests_;
};

TEST_F(External, CaseFileNames) {
    EXPECT_EQ(case_file(7, "image"), "item_007_image.png");
    EXPECT_TRUE(fs::exists(dir_ / "item_001_image.png"));
    EXPECT_TRUE(fs::exists(dir_ / "item_002_mask.png"));
}

TEST_F(External, CopyStubRoundTrips) {
    ExternalConfig cfg;
    cfg.command = {fixture("copy_inpainter.sh").string()};
    const auto cases = run_external(dir_, cfg);
    ASSERT_EQ(cases.size(), 2u);
    EXPECT_EQ(cases[0].item, 1);
    EXPECT_EQ(cases[0].result.image, requests_[0].image);
    EXPECT_EQ(cases[1].result.substrate_id, "external");
}

TEST_F(External, NoOutputIsMissingResult) { EXPECT_EQ(run_expecting_error("silent_inpainter.sh"), ErrorKind::missing_result); }
TEST_F(External, NonZeroExit) { EXPECT_EQ(run_expecting_error("failing_inpainter.sh"), ErrorKind::external_failure); }
TEST_F(External, ModifiedUnmaskedPixels) {
    EXPECT_EQ(run_expecting_error("mask_inpainter.sh"), ErrorKind::unmasked_pixels_modified);
}
TEST_F(External, WrongDimensions) { EXPECT_EQ(run_expecting_error("tiny_inpainter.sh"), ErrorKind::dimension_mismatch); }
TEST_F(External, Timeout) { EXPECT_EQ(run_expecting_error("sleepy_inpainter.sh", 0.5), ErrorKind::timeout); }
TEST_F(External, MissingCommand) {
    EXPECT_EQ(run_expecting_error("no_such_inpainter.sh"), ErrorKind::external_failure);
}

TEST_F(External, SubstrateBatch) {
    ExternalConfig cfg;
    cfg.command = {fixture("copy_inpainter.sh").string()};
    const auto sub = make_external_substrate(cfg, dir_ / "work");
    const auto out = sub->inpaint_batch(requests_);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[1].image, requests_[1].image);
}
