#include "ravenbench/error.hpp"
#include "ravenbench/matrixgen.hpp"

#include <algorithm>
#include <cmath>

namespace ravenbench::matrixgen {

namespace {

// Membership test in the shape's own frame (u right, v down), radius r.
bool inside(ShapeKind kind, double u, double v, double r) {
    switch (kind) {
        case ShapeKind::disc:
            return u * u + v * v <= r * r;
        case ShapeKind::square: {
            const double h = 0.7 * r;
            return std::abs(u) <= h && std::abs(v) <= h;
        }
        case ShapeKind::triangle: {
            // Equilateral, apex up, inscribed in the radius-r circle.
            if (v > 0.5 * r || v < -r) return false;
            return std::abs(u) <= (v + r) * (0.8660254037844386 / 1.5);
        }
        case ShapeKind::bar:
            return std::abs(u) <= r && std::abs(v) <= 0.25 * r;
        case ShapeKind::cross: {
            const double arm = 0.2 * r;
            return (std::abs(u) <= r && std::abs(v) <= arm) || (std::abs(v) <= r && std::abs(u) <= arm);
        }
    }
    return false;
}

struct Rotation {
    double c;
    double s;
};

// Exact constants for the four permitted angles keep rasterization identical
// across libm implementations.
Rotation rotation_of(int degrees) {
    constexpr double h = 0.70710678118654752440;
    switch (degrees) {
        case 0: return {1.0, 0.0};
        case 45: return {h, h};
        case 90: return {0.0, 1.0};
        case 135: return {-h, h};
        default: break;
    }
    throw Error(ErrorKind::invalid_argument, "rotation must be one of 0/45/90/135");
}

void draw_shape(GrayImage& canvas, const ShapeSpec& shape, int slot, int size) {
    const double slot_pitch = size / 3.0;
    const double cx = slot_pitch * (slot % 3) + slot_pitch * 0.5;
    const double cy = slot_pitch * (slot / 3) + slot_pitch * 0.5;
    const double r = 0.5 * shape.size() * size;
    const Rotation rot = rotation_of(shape.rotation);
    const auto value = static_cast<std::uint8_t>(shape.intensity);

    const int x0 = std::max(0, static_cast<int>(std::floor(cx - r)) - 1);
    const int x1 = std::min(size - 1, static_cast<int>(std::ceil(cx + r)) + 1);
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - r)) - 1);
    const int y1 = std::min(size - 1, static_cast<int>(std::ceil(cy + r)) + 1);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double dx = (x + 0.5) - cx;
            const double dy = (y + 0.5) - cy;
            // Rotate the sample point by -angle into the shape frame.
            const double u = rot.c * dx + rot.s * dy;
            const double v = -rot.s * dx + rot.c * dy;
            if (inside(shape.kind, u, v, r)) canvas.at(x, y) = value;
        }
    }
}

}  // namespace

void validate(const RenderConfig& cfg) {
    if (cfg.pitch < 32 || cfg.border < 1 || cfg.border >= cfg.pitch || cfg.origin < 1 ||
        cfg.origin + 3 * cfg.pitch + cfg.border > cfg.image_size - 1) {
        throw Error(ErrorKind::config, "render geometry does not fit the image");
    }
}

Rect CellGeometry::cell_rect(int index) const noexcept {
    return {origin_x + (index % 3) * pitch, origin_y + (index / 3) * pitch, pitch, pitch};
}

Rect CellGeometry::interior(int index) const noexcept {
    const Rect cell = cell_rect(index);
    return {cell.x + border, cell.y + border, pitch - border, pitch - border};
}

CellGeometry geometry_of(const RenderConfig& cfg) noexcept {
    return {cfg.origin, cfg.origin, cfg.pitch, cfg.border};
}

GrayImage render_cell(const Cell& cell, int size, const RenderConfig& cfg) {
    GrayImage canvas(size, size, cfg.background);
    for (const auto& shape : cell) {
        if (!is_valid(shape)) throw Error(ErrorKind::invalid_argument, "invalid shape spec");
        for (int i = 0; i < shape.count; ++i) {
            draw_shape(canvas, shape, (shape.position + i) % 9, size);
        }
    }
    return canvas;
}

GrayImage render_matrix(const MatrixItem& item, const RenderConfig& cfg, const Cell* ninth) {
    validate(cfg);
    const CellGeometry geo = geometry_of(cfg);
    GrayImage image(cfg.image_size, cfg.image_size, cfg.background);

    // Lattice lines: 4 vertical and 4 horizontal, `border` pixels thick.
    const int extent = 3 * geo.pitch + geo.border;
    for (int k = 0; k <= 3; ++k) {
        const int offset = k * geo.pitch;
        for (int t = 0; t < geo.border; ++t) {
            for (int s = 0; s < extent; ++s) {
                image.at(geo.origin_x + offset + t, geo.origin_y + s) = cfg.line;
                image.at(geo.origin_x + s, geo.origin_y + offset + t) = cfg.line;
            }
        }
    }
    const int size = geo.interior_size();
    for (int index = 0; index < 9; ++index) {
        const Cell* cell = index < 8 ? &item.cells[static_cast<std::size_t>(index)] : ninth;
        if (!cell) continue;
        const Rect r = geo.interior(index);
        paste(image, render_cell(*cell, size, cfg), r.x, r.y);
    }
    return image;
}

RasterCase render_case(const MatrixItem& item, const RenderConfig& cfg) {
    RasterCase raster;
    raster.geometry = geometry_of(cfg);
    raster.image = render_matrix(item, cfg);
    raster.mask = Mask::from_rect(cfg.image_size, cfg.image_size, raster.geometry.interior(8));
    const int size = raster.geometry.interior_size();
    for (std::size_t k = 0; k < 8; ++k) {
        raster.option_cells[k] = render_cell(item.options[k].cell, size, cfg);
    }
    return raster;
}

GrayImage complete_with_option(const RasterCase& raster, int k) {
    if (k < 0 || k > 7) throw Error(ErrorKind::invalid_argument, "option index must be 0..7");
    GrayImage full = raster.image;
    const Rect r = raster.geometry.interior(8);
    paste(full, raster.option_cells[static_cast<std::size_t>(k)], r.x, r.y);
    return full;
}

}  // namespace ravenbench::matrixgen
