#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "slr/raster.hpp"

namespace slr {

/// Parameters of the segment border-strength measure.
struct LineParams {
    double rect_width = 3.0;  ///< d: width of each analysis rectangle, pixels
    int bin_count = 16;       ///< n: histogram bins over [0,256)
    double gap = 0.5;         ///< band excluded on either side of the segment line

    void validate() const {
        if (rect_width <= 0.0) throw config_error("rect_width must be positive");
        if (bin_count < 2) throw config_error("bin_count must be at least 2");
        if (gap < 0.0 || gap >= rect_width) throw config_error("gap must lie in [0, rect_width)");
    }
};

/// Intensity histogram over n equal bins of [0,256).
struct Histogram {
    std::vector<std::uint32_t> counts;
    std::uint64_t total = 0;

    int bin_count() const noexcept { return static_cast<int>(counts.size()); }
};

/// Border strength in [0,1]: 1 = fully separated flank distributions, 0 = identical.
struct Strength {
    double value = 0.0;
};

/// Oriented angle in degrees, [0,360).
struct Angle {
    double degrees = 0.0;
};

/// Flank selector for the two analysis rectangles. "left" is the side toward
/// which (-dy, dx)/|p2-p1| points for the segment direction (dx, dy).
enum class Side { left, right };

/// Euclidean distance between two points, pixels.
double len(Point a, Point b);

/// Oriented angle at vertex p2 between rays p2->p1 and p2->p3, counterclockwise
/// in screen coordinates (y down), normalized into [0,360).
/// Throws degenerate_geometry when either ray has zero length.
Angle angle(Point p1, Point p2, Point p3);

/// Intensities of every pixel whose center falls inside the analysis rectangle
/// flanking segment (p1,p2) on the given side, clipped to the image. The
/// rectangle spans the segment lengthwise and covers perpendicular offsets
/// [gap, gap + rect_width). Scan order is row-major; endpoint order does not
/// change the pixel set (the reversed segment swaps sides exactly).
/// Throws degenerate_geometry when len(p1,p2) < 2.
std::vector<std::uint8_t> rect_pixels(const GrayImage& img, Point p1, Point p2, Side side,
                                      const LineParams& params = {});

/// Histogram of `values` over `bin_count` equal intervals of [0,256);
/// bin index = floor(v * n / 256). Empty input yields all-zero counts.
Histogram histogram(std::span<const std::uint8_t> values, int bin_count);

/// 1 - sum(min(w1_i, w2_i)) / sum(max(w1_i, w2_i)) over raw bin counts.
/// Returns 0 when both histograms are empty.
Strength strength_from_histograms(const Histogram& h1, const Histogram& h2);

/// Border strength of segment (p1,p2): both flank histograms fed through
/// strength_from_histograms. Symmetric in its endpoints bit-exactly.
/// Throws degenerate_geometry when len(p1,p2) < 2.
Strength line(const GrayImage& img, Point p1, Point p2, const LineParams& params = {});

}  // namespace slr
