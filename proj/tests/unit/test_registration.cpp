#include "ravenbench/error.hpp"
#include "ravenbench/matrixgen.hpp"
#include "ravenbench/registration.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace ravenbench;
using namespace ravenbench::registration;

namespace {

GrayImage square_image(int size, Rect sq, std::uint8_t bg = 255, std::uint8_t fg = 0) {
    GrayImage img(size, size, bg);
    for (int y = sq.y; y < sq.y + sq.height; ++y)
        for (int x = sq.x; x < sq.x + sq.width; ++x) img.at(x, y) = fg;
    return img;
}

// Segment test written from the definition: walk the 16-pixel ring twice and
// find the longest run all brighter or all darker than centre +- t.
bool segment_test(const GrayImage& img, int x, int y, int t, int arc) {
    static const int ring[16][2] = {{0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0},  {3, 1},  {2, 2},  {1, 3},
                                    {0, 3},  {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3}};
    const int c = img.at(x, y);
    for (int sign : {1, -1}) {
        for (int start = 0; start < 16; ++start) {
            int len = 0;
            while (len < 16) {
                const auto& o = ring[(start + len) % 16];
                const int v = img.at(x + o[0], y + o[1]);
                if (sign > 0 ? v > c + t : v < c - t) ++len;
                else break;
            }
            if (len >= arc) return true;
        }
    }
    return false;
}

GrayImage textured(std::uint64_t seed, int size = 256) {
    Rng rng(seed);
    GrayImage img(size, size, 200);
    for (int k = 0; k < 40; ++k) {
        const int w = rng.uniform_int(6, 24), h = rng.uniform_int(6, 24);
        const int x = rng.uniform_int(8, size - w - 8), y = rng.uniform_int(8, size - h - 8);
        const auto v = static_cast<std::uint8_t>(rng.uniform_int(0, 120));
        for (int yy = y; yy < y + h; ++yy)
            for (int xx = x; xx < x + w; ++xx) img.at(xx, yy) = v;
    }
    return img;
}

}  // namespace

TEST(Corners, ConstantImageHasNone) { EXPECT_TRUE(detect_corners(GrayImage(64, 64, 90)).empty()); }

TEST(Corners, SegmentTestMatchesDefinition) {
    const GrayImage img = textured(3, 96);
    for (int arc : {9, 12}) {
        for (int y = 3; y < 93; ++y)
            for (int x = 3; x < 93; ++x) ASSERT_EQ(is_corner(img, x, y, 20, arc), segment_test(img, x, y, 20, arc)) << x << "," << y;
    }
}

TEST(Corners, SquareCornersFoundWithArcNine) {
    const Rect sq{40, 40, 40, 40};
    const GrayImage img = square_image(128, sq);
    CornerConfig cfg;
    cfg.min_arc = 9;
    const auto kps = detect_corners(img, cfg);
    ASSERT_EQ(kps.size(), 4u);
    const int cx[2] = {sq.x, sq.x + sq.width - 1}, cy[2] = {sq.y, sq.y + sq.height - 1};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const bool found = std::any_of(kps.begin(), kps.end(), [&](const Keypoint& k) {
                return std::abs(k.x - cx[i]) <= 2 && std::abs(k.y - cy[j]) <= 2;
            });
            EXPECT_TRUE(found) << cx[i] << "," << cy[j];
        }
    // A right-angle corner leaves only a 90 degree arc of the other class,
    // short of the stricter default.
    EXPECT_TRUE(detect_corners(img).empty());
}

TEST(Corners, HalfTurnPreservesCount) {
    const GrayImage img = textured(9);
    GrayImage rot(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) rot.at(img.width() - 1 - x, img.height() - 1 - y) = img.at(x, y);
    CornerConfig cfg;
    cfg.max_n = 100000;
    EXPECT_EQ(detect_corners(img, cfg).size(), detect_corners(rot, cfg).size());
}

TEST(Descriptors, DeterministicAndHamming) {
    const GrayImage img = textured(4);
    const auto kps = detect_corners(img);
    ASSERT_FALSE(kps.empty());
    const auto layout = make_pair_layout();
    const auto d1 = describe(img, kps, layout);
    const auto d2 = describe(img, kps, make_pair_layout());
    EXPECT_EQ(d1, d2);
    for (const auto& d : d1) EXPECT_EQ(hamming(d, d), 0);
    const Descriptor zero{}, ones{~0ULL, ~0ULL, ~0ULL, ~0ULL};
    EXPECT_EQ(hamming(zero, ones), 256);
    for (const auto& p : layout.pairs)
        for (auto v : p) {
            EXPECT_GE(v, -15);
            EXPECT_LE(v, 15);
        }
}

TEST(Matching, EmptySideGivesNothing) {
    const std::vector<Descriptor> a{{1, 2, 3, 4}}, none;
    EXPECT_TRUE(match(a, none).empty());
    EXPECT_TRUE(match(none, a).empty());
}

TEST(Matching, PlantedPairsAmongNoise) {
    Rng rng(17);
    auto random_desc = [&] { return Descriptor{rng.next(), rng.next(), rng.next(), rng.next()}; };
    std::vector<Descriptor> a, b;
    for (int i = 0; i < 60; ++i) a.push_back(random_desc());
    for (int i = 0; i < 60; ++i) b.push_back(random_desc());
    // Plant 20 pairs differing in a few bits.
    std::set<std::pair<int, int>> planted;
    for (int i = 0; i < 20; ++i) {
        const int ia = i * 3, ib = 59 - i * 2;
        b[static_cast<std::size_t>(ib)] = a[static_cast<std::size_t>(ia)];
        b[static_cast<std::size_t>(ib)][0] ^= (1ULL << i) | (1ULL << 40);
        planted.insert({ia, ib});
    }
    const auto m = match(a, b);
    std::set<std::pair<int, int>> got;
    for (const auto& x : m) got.insert({x.index_a, x.index_b});
    EXPECT_EQ(got, planted);
}

TEST(Matching, Symmetric) {
    const GrayImage img1 = textured(21), img2 = textured(22);
    const auto layout = make_pair_layout();
    const auto k1 = detect_corners(img1), k2 = detect_corners(img2);
    const auto d1 = describe(img1, k1, layout), d2 = describe(img2, k2, layout);
    auto ab = match(d1, d2, 256), ba = match(d2, d1, 256);
    std::set<std::tuple<int, int, int>> s1, s2;
    for (const auto& m : ab) s1.insert({m.index_a, m.index_b, m.distance});
    for (const auto& m : ba) s2.insert({m.index_b, m.index_a, m.distance});
    EXPECT_EQ(s1, s2);
}

TEST(Ransac, IdentityExact) {
    std::vector<PointPair> pairs;
    for (int i = 0; i < 8; ++i) {
        const double x = 10.0 + 37 * (i % 4), y = 20.0 + 53 * (i / 4) + 7 * i;
        pairs.push_back({x, y, x, y});
    }
    const auto r = ransac_homography(pairs);
    for (int i = 0; i < 9; ++i) EXPECT_NEAR(r.H.h[static_cast<std::size_t>(i)], Homography::identity().h[static_cast<std::size_t>(i)], 1e-6);
    EXPECT_EQ(r.inlier_count, 8);
}

TEST(Ransac, TranslationExact) {
    std::vector<PointPair> pairs;
    Rng rng(2);
    for (int i = 0; i < 20; ++i) {
        const double x = rng.uniform(0, 500), y = rng.uniform(0, 500);
        pairs.push_back({x, y, x + 5, y - 3});
    }
    const auto r = ransac_homography(pairs);
    EXPECT_NEAR(r.H.h[2], 5.0, 1e-6);
    EXPECT_NEAR(r.H.h[5], -3.0, 1e-6);
    for (const auto& p : pairs) {
        double x, y;
        r.H.apply(p.ax, p.ay, x, y);
        EXPECT_LT(std::hypot(x - p.bx, y - p.by), 1e-6);
    }
}

TEST(Ransac, TooFewPairsIsDegenerate) {
    const std::vector<PointPair> pairs{{0, 0, 0, 0}, {1, 0, 1, 0}, {0, 1, 0, 1}};
    try {
        ransac_homography(pairs);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::degenerate);
    }
}

TEST(Ransac, OutlierFixtures) {
    int ok = 0;
    for (std::uint64_t s = 0; s < 40; ++s) {
        const auto f = oracle::homography_fixture(1000 + s);
        RansacConfig cfg;
        cfg.seed = s;
        const auto r = ransac_homography(f.pairs, cfg);
        ok += oracle::corner_error(r.H, f.truth) < 0.5;
    }
    EXPECT_GE(ok, 38);
}

TEST(Ransac, DeterministicInSeed) {
    const auto f = oracle::homography_fixture(77);
    RansacConfig cfg;
    cfg.seed = 5;
    EXPECT_EQ(ransac_homography(f.pairs, cfg).H.h, ransac_homography(f.pairs, cfg).H.h);
}

TEST(Warp, IdentityAndTranslation) {
    const GrayImage img = textured(8, 64);
    EXPECT_EQ(warp(img, Homography::identity(), 64, 64), img);
    Homography t;
    t.h[2] = 3;
    t.h[5] = 2;
    const GrayImage moved = warp(img, t, 64, 64);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            if (x < 3 || y < 2) EXPECT_EQ(moved.at(x, y), 0);
            else EXPECT_EQ(moved.at(x, y), img.at(x - 3, y - 2));
        }
}

TEST(Warp, RoundTripWithinTwoLevels) {
    // Smooth content so bilinear resampling twice stays close.
    GrayImage img(128, 128);
    for (int y = 0; y < 128; ++y)
        for (int x = 0; x < 128; ++x)
            img.at(x, y) = static_cast<std::uint8_t>(128 + 60 * std::sin(x / 9.0) * std::cos(y / 11.0));
    Homography H;
    H.h = {1.02, 0.03, 2.5, -0.02, 0.98, -1.5, 1e-5, -2e-5, 1.0};
    const GrayImage back = warp(warp(img, H, 128, 128), H.inverse(), 128, 128);
    int worst = 0;
    for (int y = 16; y < 112; ++y)
        for (int x = 16; x < 112; ++x) worst = std::max(worst, std::abs(int(back.at(x, y)) - int(img.at(x, y))));
    EXPECT_LE(worst, 2);
}

TEST(Register, SelfRegistrationIsNearIdentity) {
    const auto item = matrixgen::generate_battery(0, 12, matrixgen::DifficultyProfile::standard(12))[6];
    const GrayImage img = matrixgen::render_matrix(item, {}, &item.cells[8]);
    const auto r = register_to_candidate(img, img);
    EXPECT_EQ(r.aligned.width(), img.width());
    EXPECT_EQ(r.aligned.height(), img.height());
    for (int i = 0; i < 9; ++i)
        EXPECT_NEAR(r.registration.H.h[static_cast<std::size_t>(i)], Homography::identity().h[static_cast<std::size_t>(i)], 1e-3);
}

TEST(Register, ConstantFallsBackToIdentity) {
    const GrayImage flat(128, 128, 140);
    const auto r = register_to_candidate(flat, textured(1, 128));
    EXPECT_EQ(r.registration.mode, RegisterMode::identity_fallback);
    EXPECT_EQ(r.aligned, flat);
}

TEST(Register, MismatchedSizesNeverThrow) {
    const auto r = register_to_candidate(textured(1, 128), textured(2, 96));
    EXPECT_EQ(r.registration.mode, RegisterMode::identity_fallback);
    EXPECT_EQ(r.aligned.width(), 96);
    EXPECT_EQ(r.aligned.height(), 96);
}
