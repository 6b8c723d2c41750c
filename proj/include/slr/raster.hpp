#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "slr/errors.hpp"

namespace slr {

/// Image-plane point, screen convention: x rightward, y downward.
struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline bool operator==(Point a, Point b) { return a.x == b.x && a.y == b.y; }
inline bool operator!=(Point a, Point b) { return !(a == b); }

/// Lexicographic order on (x, y). Used for canonical segment orientation
/// and for deterministic tie-breaking in the solver.
inline bool lex_less(Point a, Point b) {
    if (a.x != b.x) return a.x < b.x;
    return a.y < b.y;
}

/// Immutable 8-bit grayscale raster. Row-major, top-left origin.
class GrayImage {
public:
    GrayImage(int width, int height, std::vector<std::uint8_t> pixels);

    /// Constant image of the given value.
    static GrayImage filled(int width, int height, std::uint8_t value);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    bool in_bounds(int ix, int iy) const noexcept {
        return ix >= 0 && ix < width_ && iy >= 0 && iy < height_;
    }

    /// Stored intensity at (ix, iy). Out-of-bounds indices are a caller bug.
    std::uint8_t pixel(int ix, int iy) const {
        if (!in_bounds(ix, iy))
            throw contract_error("pixel(" + std::to_string(ix) + ", " + std::to_string(iy) +
                                 ") outside " + std::to_string(width_) + "x" +
                                 std::to_string(height_) + " image");
        return pixels_[static_cast<std::size_t>(iy) * width_ + ix];
    }

    /// Unchecked access for hot loops; caller guarantees bounds.
    std::uint8_t at_unchecked(int ix, int iy) const noexcept {
        return pixels_[static_cast<std::size_t>(iy) * width_ + ix];
    }

    std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }

private:
    int width_;
    int height_;
    std::vector<std::uint8_t> pixels_;
};

inline bool operator==(const GrayImage& a, const GrayImage& b) {
    return a.width() == b.width() && a.height() == b.height() &&
           std::equal(a.pixels().begin(), a.pixels().end(), b.pixels().begin());
}

/// Decodes a binary PGM (magic "P5", maxval <= 255). '#' comments are allowed
/// anywhere in the header per the PNM convention. Errors carry the byte offset.
GrayImage load_pgm(std::span<const std::uint8_t> bytes);

/// Canonical binary PGM serialization: "P5\n<w> <h>\n255\n" + payload.
/// load_pgm(to_pgm_bytes(img)) reproduces img bit-exactly.
std::vector<std::uint8_t> to_pgm_bytes(const GrayImage& img);

GrayImage load_pgm_file(const std::string& path);
void save_pgm_file(const GrayImage& img, const std::string& path);

}  // namespace slr
