#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace ravenbench {

struct Rect {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;

    bool contains(int px, int py) const noexcept {
        return px >= x && py >= y && px < x + width && py < y + height;
    }
    bool operator==(const Rect&) const = default;
};

// Row-major 8-bit grayscale raster.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, std::uint8_t fill = 0);
    GrayImage(int width, int height, std::vector<std::uint8_t> pixels);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return pixels_.empty(); }
    std::size_t size() const noexcept { return pixels_.size(); }

    std::uint8_t at(int x, int y) const { return pixels_[index(x, y)]; }
    std::uint8_t& at(int x, int y) { return pixels_[index(x, y)]; }

    std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
    std::span<std::uint8_t> pixels() noexcept { return pixels_; }

    bool same_shape(const GrayImage& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }
    bool operator==(const GrayImage&) const = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

// Binary raster; a pixel is "set" when its byte is non-zero.
class Mask {
public:
    Mask() = default;
    Mask(int width, int height);
    static Mask from_rect(int width, int height, Rect rect);
    static Mask from_image(const GrayImage& image);  // > 127 is set

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool test(int x, int y) const {
        return bits_[static_cast<std::size_t>(y) * width_ + x] != 0;
    }
    void set(int x, int y, bool value = true) {
        bits_[static_cast<std::size_t>(y) * width_ + x] = value ? 1 : 0;
    }
    std::size_t count() const noexcept;
    // Smallest rectangle holding every set pixel; zero-sized when empty.
    Rect bounds() const noexcept;
    GrayImage to_image() const;  // 0 / 255

    bool operator==(const Mask&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> bits_;
};

GrayImage crop(const GrayImage& image, Rect rect);
void paste(GrayImage& target, const GrayImage& patch, int x, int y);

// 8-bit grayscale PNG. Colour or 16-bit inputs are converted on read.
GrayImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const GrayImage& image);

}  // namespace ravenbench
