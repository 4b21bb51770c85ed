#include "ravenbench/image.hpp"

#include "ravenbench/error.hpp"

#include <algorithm>
#include <cstdio>
#include <memory>
#include <string>

#include <png.h>

namespace ravenbench {

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : width_(width), height_(height),
      pixels_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
    if (width < 0 || height < 0) {
        throw Error(ErrorKind::invalid_argument, "negative image dimensions");
    }
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width < 0 || height < 0 ||
        pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw Error(ErrorKind::invalid_argument, "pixel buffer does not match image dimensions");
    }
}

Mask::Mask(int width, int height)
    : width_(width), height_(height),
      bits_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0) {}

Mask Mask::from_rect(int width, int height, Rect rect) {
    Mask mask(width, height);
    for (int y = std::max(0, rect.y); y < std::min(height, rect.y + rect.height); ++y) {
        for (int x = std::max(0, rect.x); x < std::min(width, rect.x + rect.width); ++x) {
            mask.set(x, y);
        }
    }
    return mask;
}

Mask Mask::from_image(const GrayImage& image) {
    Mask mask(image.width(), image.height());
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            if (image.at(x, y) > 127) mask.set(x, y);
        }
    }
    return mask;
}

std::size_t Mask::count() const noexcept {
    return static_cast<std::size_t>(std::count_if(bits_.begin(), bits_.end(),
                                                  [](std::uint8_t b) { return b != 0; }));
}

Rect Mask::bounds() const noexcept {
    int x0 = width_, y0 = height_, x1 = -1, y1 = -1;
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
            if (!test(x, y)) continue;
            x0 = std::min(x0, x);
            y0 = std::min(y0, y);
            x1 = std::max(x1, x);
            y1 = std::max(y1, y);
        }
    }
    if (x1 < 0) return {};
    return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

GrayImage Mask::to_image() const {
    GrayImage image(width_, height_);
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
            image.at(x, y) = test(x, y) ? 255 : 0;
        }
    }
    return image;
}

GrayImage crop(const GrayImage& image, Rect rect) {
    if (rect.x < 0 || rect.y < 0 || rect.width < 0 || rect.height < 0 ||
        rect.x + rect.width > image.width() || rect.y + rect.height > image.height()) {
        throw Error(ErrorKind::invalid_argument, "crop rectangle outside image");
    }
    GrayImage out(rect.width, rect.height);
    for (int y = 0; y < rect.height; ++y) {
        for (int x = 0; x < rect.width; ++x) {
            out.at(x, y) = image.at(rect.x + x, rect.y + y);
        }
    }
    return out;
}

void paste(GrayImage& target, const GrayImage& patch, int x, int y) {
    if (x < 0 || y < 0 || x + patch.width() > target.width() ||
        y + patch.height() > target.height()) {
        throw Error(ErrorKind::invalid_argument, "paste target outside image");
    }
    for (int py = 0; py < patch.height(); ++py) {
        for (int px = 0; px < patch.width(); ++px) {
            target.at(x + px, y + py) = patch.at(px, py);
        }
    }
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_fail(const std::filesystem::path& path, const char* what) {
    throw Error(ErrorKind::io, std::string(what) + ": " + path.string());
}

}  // namespace

GrayImage read_png(const std::filesystem::path& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) png_fail(path, "cannot open PNG");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) png_fail(path, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        png_fail(path, "png_create_info_struct failed");
    }

    GrayImage image;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        png_fail(path, "malformed PNG");
    }
    png_init_io(png, file.get());
    png_read_info(png, info);

    const auto color = png_get_color_type(png, info);
    const auto depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
        color == PNG_COLOR_TYPE_PALETTE) {
        png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    }
    png_read_update_info(png, info);

    const int width = static_cast<int>(png_get_image_width(png, info));
    const int height = static_cast<int>(png_get_image_height(png, info));
    if (png_get_rowbytes(png, info) != static_cast<png_size_t>(width)) {
        png_destroy_read_struct(&png, &info, nullptr);
        png_fail(path, "unsupported PNG layout");
    }
    image = GrayImage(width, height);
    rows.resize(static_cast<std::size_t>(height));
    auto pixels = image.pixels();
    for (int y = 0; y < height; ++y) {
        rows[static_cast<std::size_t>(y)] = pixels.data() + static_cast<std::size_t>(y) * width;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

void write_png(const std::filesystem::path& path, const GrayImage& image) {
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) png_fail(path, "cannot create PNG");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) png_fail(path, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        png_fail(path, "png_create_info_struct failed");
    }
    std::vector<png_bytep> rows(static_cast<std::size_t>(image.height()));
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        png_fail(path, "PNG encoding failed");
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()),
                 static_cast<png_uint_32>(image.height()), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    auto pixels = image.pixels();
    for (int y = 0; y < image.height(); ++y) {
        rows[static_cast<std::size_t>(y)] =
            const_cast<png_bytep>(pixels.data() + static_cast<std::size_t>(y) * image.width());
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace ravenbench
