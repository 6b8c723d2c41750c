#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "slr/raster.hpp"

namespace slr {

/// Rotated rectangle painted into a scene. Center and half-extents are
/// geometric coordinates (pixel (ix, iy) covers [ix, ix+1) x [iy, iy+1)).
struct SynthShape {
    double cx = 0, cy = 0;
    double hx = 0, hy = 0;
    double rot_deg = 0;
    int fill = 0;
};

struct SynthScene {
    int width = 0, height = 0;
    int background = 0;
    std::vector<SynthShape> shapes;
    double sigma = 0.0;
    std::uint32_t seed = 0;
};

/// Exact corner coordinates of one rendered rectangle, in the order
/// (-hx,-hy), (+hx,-hy), (+hx,+hy), (-hx,+hy) before rotation.
struct RectTruth {
    std::array<Point, 4> corners;
};

struct RenderResult {
    GrayImage image;
    std::vector<RectTruth> truth;
};

/// Paints background, then shapes in order (a pixel takes a shape's fill when
/// its center lies inside, boundary included), then adds i.i.d. Gaussian
/// noise and clamps to [0,255]. Deterministic: noise comes from mt19937
/// seeded with scene.seed, mapped to normals by Box-Muller in row-major
/// pixel order (u = (next()+0.5)/2^32; the second variate of each pair is
/// cached and consumed before drawing again).
///
/// Throws scene_error if a shape corner falls outside the image rectangle.
RenderResult render(const SynthScene& scene);

/// Corner positions for one shape without rendering.
RectTruth shape_truth(const SynthShape& s);

/// Plain-text scene description:
///
///   width 64
///   height 64
///   background 60
///   sigma 5
///   seed 7
///   rect 32 32 10 15 0 160     # cx cy hx hy rot_deg fill
///
/// One directive per line; '#' starts a comment; blank lines ignored.
/// Throws scene_error with the offending line number.
SynthScene parse_scene(std::string_view text);

SynthScene load_scene_file(const std::string& path);

}  // namespace slr
