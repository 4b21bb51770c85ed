#include "ravenbench/error.hpp"
#include "ravenbench/image.hpp"
#include "ravenbench/rng.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace ravenbench;
namespace fs = std::filesystem;

TEST(Image, PngRoundTripIsLossless) {
    Rng rng(11);
    GrayImage img(37, 23);
    for (auto& p : img.pixels()) p = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    const fs::path path = fs::temp_directory_path() / "rb_image_roundtrip.png";
    write_png(path, img);
    EXPECT_EQ(read_png(path), img);
    fs::remove(path);
}

TEST(Image, ReadMissingFileIsIoError) {
    try {
        read_png("/nonexistent/definitely_not_here.png");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::io);
    }
}

TEST(Image, MaskFromRectAndBounds) {
    const Rect r{10, 20, 5, 7};
    const Mask m = Mask::from_rect(64, 64, r);
    EXPECT_EQ(m.count(), 35u);
    EXPECT_EQ(m.bounds(), r);
    EXPECT_TRUE(m.test(10, 20));
    EXPECT_FALSE(m.test(15, 20));
    EXPECT_EQ(Mask(8, 8).bounds().width, 0);
}

TEST(Image, MaskImageRoundTrip) {
    const Mask m = Mask::from_rect(16, 16, {3, 3, 4, 4});
    EXPECT_EQ(Mask::from_image(m.to_image()), m);
}

TEST(Image, CropPasteRoundTrip) {
    GrayImage img(20, 20);
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 20; ++x) img.at(x, y) = static_cast<std::uint8_t>(x * 10 + y);
    const Rect r{4, 5, 6, 3};
    const GrayImage patch = crop(img, r);
    ASSERT_EQ(patch.width(), 6);
    ASSERT_EQ(patch.height(), 3);
    EXPECT_EQ(patch.at(0, 0), img.at(4, 5));
    EXPECT_EQ(patch.at(5, 2), img.at(9, 7));

    GrayImage blank(20, 20, 0);
    paste(blank, patch, r.x, r.y);
    EXPECT_EQ(crop(blank, r), patch);
    EXPECT_EQ(blank.at(3, 5), 0);
}
