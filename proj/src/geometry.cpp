#include "slr/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace slr {

double len(Point a, Point b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

Angle angle(Point p1, Point p2, Point p3) {
    const double ux = p1.x - p2.x, uy = p1.y - p2.y;
    const double vx = p3.x - p2.x, vy = p3.y - p2.y;
    if (ux == 0.0 && uy == 0.0)
        throw degenerate_geometry("angle: p1 coincides with vertex p2");
    if (vx == 0.0 && vy == 0.0)
        throw degenerate_geometry("angle: p3 coincides with vertex p2");
    const double cross = ux * vy - uy * vx;
    const double dot = ux * vx + uy * vy;
    double deg = std::atan2(cross, dot) * (180.0 / M_PI);
    if (deg < 0.0) deg += 360.0;
    if (deg >= 360.0) deg = 0.0;
    return Angle{deg};
}

namespace {

// Segment frame with lexicographically ordered endpoints. Both flanks of a
// segment are always evaluated relative to the same orientation, so swapping
// p1/p2 reproduces the opposite side's pixel set bit-exactly.
struct SegmentFrame {
    Point a, b;        // canonical endpoints, a = lex-min
    double length;     // |b - a|
    double dirx, diry; // unit direction a -> b
    bool swapped;      // input order was (b, a)
};

SegmentFrame make_frame(Point p1, Point p2) {
    SegmentFrame f;
    f.swapped = lex_less(p2, p1);
    f.a = f.swapped ? p2 : p1;
    f.b = f.swapped ? p1 : p2;
    f.length = len(f.a, f.b);
    if (f.length < 2.0)
        throw degenerate_geometry("segment shorter than 2 px (length " +
                                  std::to_string(f.length) + ")");
    f.dirx = (f.b.x - f.a.x) / f.length;
    f.diry = (f.b.y - f.a.y) / f.length;
    return f;
}

// Visits every pixel whose center lies in the flank rectangle, row-major.
// Membership: longitudinal t strictly inside (0, L); perpendicular offset
// toward the requested side in [gap, gap + d). The half-open lateral band
// keeps pixels abutting the gap and drops the far boundary row.
template <typename Fn>
void visit_rect(const GrayImage& img, const SegmentFrame& f, Side side, const LineParams& params,
                Fn&& fn) {
    // Canonical-frame left normal; the requested side may be flipped by the swap.
    double nx = -f.diry, ny = f.dirx;
    const bool want_left = (side == Side::left) != f.swapped;
    if (!want_left) {
        nx = -nx;
        ny = -ny;
    }

    const double lo = params.gap, hi = params.gap + params.rect_width;

    // Bounding box of the rectangle corners, padded one pixel, clipped to image.
    const double cx[4] = {f.a.x + nx * lo, f.a.x + nx * hi, f.b.x + nx * lo, f.b.x + nx * hi};
    const double cy[4] = {f.a.y + ny * lo, f.a.y + ny * hi, f.b.y + ny * lo, f.b.y + ny * hi};
    const int x0 = std::max(0, static_cast<int>(std::floor(*std::min_element(cx, cx + 4))) - 1);
    const int x1 = std::min(img.width() - 1,
                            static_cast<int>(std::ceil(*std::max_element(cx, cx + 4))) + 1);
    const int y0 = std::max(0, static_cast<int>(std::floor(*std::min_element(cy, cy + 4))) - 1);
    const int y1 = std::min(img.height() - 1,
                            static_cast<int>(std::ceil(*std::max_element(cy, cy + 4))) + 1);

    for (int iy = y0; iy <= y1; ++iy) {
        const double py = iy + 0.5 - f.a.y;
        for (int ix = x0; ix <= x1; ++ix) {
            const double px = ix + 0.5 - f.a.x;
            const double t = px * f.dirx + py * f.diry;
            if (t <= 0.0 || t >= f.length) continue;
            const double s = px * nx + py * ny;
            if (s < lo || s >= hi) continue;
            fn(ix, iy);
        }
    }
}

}  // namespace

std::vector<std::uint8_t> rect_pixels(const GrayImage& img, Point p1, Point p2, Side side,
                                      const LineParams& params) {
    params.validate();
    const SegmentFrame f = make_frame(p1, p2);
    std::vector<std::uint8_t> out;
    visit_rect(img, f, side, params, [&](int ix, int iy) { out.push_back(img.at_unchecked(ix, iy)); });
    return out;
}

Histogram histogram(std::span<const std::uint8_t> values, int bin_count) {
    if (bin_count < 2) throw contract_error("histogram: bin_count must be at least 2");
    Histogram h;
    h.counts.assign(static_cast<std::size_t>(bin_count), 0);
    for (const std::uint8_t v : values) ++h.counts[(static_cast<std::size_t>(v) * bin_count) >> 8];
    h.total = values.size();
    return h;
}

Strength strength_from_histograms(const Histogram& h1, const Histogram& h2) {
    if (h1.counts.size() != h2.counts.size())
        throw contract_error("strength_from_histograms: bin counts differ");
    std::uint64_t min_sum = 0, max_sum = 0;
    for (std::size_t i = 0; i < h1.counts.size(); ++i) {
        min_sum += std::min(h1.counts[i], h2.counts[i]);
        max_sum += std::max(h1.counts[i], h2.counts[i]);
    }
    if (max_sum == 0) return Strength{0.0};  // both flanks empty: no evidence
    return Strength{1.0 - static_cast<double>(min_sum) / static_cast<double>(max_sum)};
}

Strength line(const GrayImage& img, Point p1, Point p2, const LineParams& params) {
    params.validate();
    const SegmentFrame f = make_frame(p1, p2);
    const int n = params.bin_count;
    std::vector<std::uint32_t> left(static_cast<std::size_t>(n), 0);
    std::vector<std::uint32_t> right(static_cast<std::size_t>(n), 0);
    std::uint64_t left_total = 0, right_total = 0;
    visit_rect(img, f, Side::left, params, [&](int ix, int iy) {
        ++left[(static_cast<std::size_t>(img.at_unchecked(ix, iy)) * n) >> 8];
        ++left_total;
    });
    visit_rect(img, f, Side::right, params, [&](int ix, int iy) {
        ++right[(static_cast<std::size_t>(img.at_unchecked(ix, iy)) * n) >> 8];
        ++right_total;
    });
    // visit_rect already resolved the swap, so left/right here follow the
    // canonical orientation: min/max make the value independent of which is which.
    Histogram hl{std::move(left), left_total};
    Histogram hr{std::move(right), right_total};
    return strength_from_histograms(hl, hr);
}

}  // namespace slr
