#include "slr/synth.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "slr/errors.hpp"

namespace slr {
namespace {

constexpr double kPi = 3.14159265358979323846;

// Box-Muller over the raw mt19937 stream. std::normal_distribution is not
// bit-portable across standard libraries, so the transform is spelled out.
class Gaussian {
public:
    explicit Gaussian(std::uint32_t seed) : rng_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = (static_cast<double>(rng_()) + 0.5) * 0x1p-32;
        double u2 = (static_cast<double>(rng_()) + 0.5) * 0x1p-32;
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * kPi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937 rng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

struct ShapeFrame {
    double cx, cy, hx, hy, cos_t, sin_t;

    bool contains(double px, double py) const {
        double dx = px - cx;
        double dy = py - cy;
        double lx = cos_t * dx + sin_t * dy;
        double ly = -sin_t * dx + cos_t * dy;
        return std::abs(lx) <= hx && std::abs(ly) <= hy;
    }
};

ShapeFrame make_frame(const SynthShape& s) {
    double t = s.rot_deg * kPi / 180.0;
    return ShapeFrame{s.cx, s.cy, s.hx, s.hy, std::cos(t), std::sin(t)};
}

int parse_scene_int(std::istringstream& in, int lineno, const char* what, long lo, long hi) {
    long v;
    if (!(in >> v) || v < lo || v > hi)
        throw scene_error("line " + std::to_string(lineno) + ": invalid " + what);
    return static_cast<int>(v);
}

double parse_scene_real(std::istringstream& in, int lineno, const char* what) {
    double v;
    if (!(in >> v) || !std::isfinite(v))
        throw scene_error("line " + std::to_string(lineno) + ": invalid " + what);
    return v;
}

}  // namespace

RectTruth shape_truth(const SynthShape& s) {
    double t = s.rot_deg * kPi / 180.0;
    double c = std::cos(t), n = std::sin(t);
    auto corner = [&](double sx, double sy) {
        double ox = sx * s.hx, oy = sy * s.hy;
        return Point{s.cx + c * ox - n * oy, s.cy + n * ox + c * oy};
    };
    return RectTruth{{corner(-1, -1), corner(+1, -1), corner(+1, +1), corner(-1, +1)}};
}

RenderResult render(const SynthScene& scene) {
    if (scene.width < 1 || scene.height < 1)
        throw scene_error("scene dimensions must be positive");
    if (scene.background < 0 || scene.background > 255)
        throw scene_error("background intensity out of [0,255]");
    if (!(scene.sigma >= 0.0))
        throw scene_error("noise sigma must be >= 0");

    std::vector<RectTruth> truth;
    std::vector<ShapeFrame> frames;
    truth.reserve(scene.shapes.size());
    frames.reserve(scene.shapes.size());
    for (const SynthShape& s : scene.shapes) {
        if (s.hx <= 0 || s.hy <= 0) throw scene_error("shape half-extents must be positive");
        if (s.fill < 0 || s.fill > 255) throw scene_error("shape fill intensity out of [0,255]");
        RectTruth rt = shape_truth(s);
        for (const Point& p : rt.corners)
            if (p.x < 0 || p.x > scene.width || p.y < 0 || p.y > scene.height)
                throw scene_error("shape extends outside the image");
        truth.push_back(rt);
        frames.push_back(make_frame(s));
    }

    std::vector<std::uint8_t> px(static_cast<size_t>(scene.width) * scene.height,
                                 static_cast<std::uint8_t>(scene.background));
    for (size_t si = 0; si < frames.size(); ++si) {
        const ShapeFrame& f = frames[si];
        std::uint8_t fill = static_cast<std::uint8_t>(scene.shapes[si].fill);
        // Conservative bounding box around the rotated rectangle.
        double rad = std::hypot(f.hx, f.hy);
        int x0 = std::max(0, static_cast<int>(std::floor(f.cx - rad - 1)));
        int x1 = std::min(scene.width - 1, static_cast<int>(std::ceil(f.cx + rad + 1)));
        int y0 = std::max(0, static_cast<int>(std::floor(f.cy - rad - 1)));
        int y1 = std::min(scene.height - 1, static_cast<int>(std::ceil(f.cy + rad + 1)));
        for (int iy = y0; iy <= y1; ++iy)
            for (int ix = x0; ix <= x1; ++ix)
                if (f.contains(ix + 0.5, iy + 0.5))
                    px[static_cast<size_t>(iy) * scene.width + ix] = fill;
    }

    if (scene.sigma > 0.0) {
        Gaussian g(scene.seed);
        for (auto& v : px) {
            double noisy = static_cast<double>(v) + scene.sigma * g.next();
            long r = std::lround(noisy);
            v = static_cast<std::uint8_t>(r < 0 ? 0 : r > 255 ? 255 : r);
        }
    }

    return RenderResult{GrayImage(scene.width, scene.height, std::move(px)), std::move(truth)};
}

SynthScene parse_scene(std::string_view text) {
    SynthScene scene;
    scene.width = scene.height = -1;
    scene.background = -1;
    bool saw_sigma = false, saw_seed = false;

    std::istringstream lines{std::string(text)};
    std::string raw;
    int lineno = 0;
    while (std::getline(lines, raw)) {
        ++lineno;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
        std::istringstream in(raw);
        std::string key;
        if (!(in >> key)) continue;
        if (key == "width") {
            scene.width = parse_scene_int(in, lineno, "width", 1, 1 << 20);
        } else if (key == "height") {
            scene.height = parse_scene_int(in, lineno, "height", 1, 1 << 20);
        } else if (key == "background") {
            scene.background = parse_scene_int(in, lineno, "background", 0, 255);
        } else if (key == "sigma") {
            scene.sigma = parse_scene_real(in, lineno, "sigma");
            if (scene.sigma < 0)
                throw scene_error("line " + std::to_string(lineno) + ": invalid sigma");
            saw_sigma = true;
        } else if (key == "seed") {
            long v;
            if (!(in >> v) || v < 0 || v > 0xffffffffL)
                throw scene_error("line " + std::to_string(lineno) + ": invalid seed");
            scene.seed = static_cast<std::uint32_t>(v);
            saw_seed = true;
        } else if (key == "rect") {
            SynthShape s;
            s.cx = parse_scene_real(in, lineno, "rect cx");
            s.cy = parse_scene_real(in, lineno, "rect cy");
            s.hx = parse_scene_real(in, lineno, "rect hx");
            s.hy = parse_scene_real(in, lineno, "rect hy");
            s.rot_deg = parse_scene_real(in, lineno, "rect rotation");
            s.fill = parse_scene_int(in, lineno, "rect fill", 0, 255);
            if (s.hx <= 0 || s.hy <= 0)
                throw scene_error("line " + std::to_string(lineno) +
                                  ": rect half-extents must be positive");
            scene.shapes.push_back(s);
        } else {
            throw scene_error("line " + std::to_string(lineno) + ": unknown directive '" + key +
                              "'");
        }
        std::string extra;
        if (in >> extra)
            throw scene_error("line " + std::to_string(lineno) + ": trailing input '" + extra +
                              "'");
    }
    if (scene.width < 0) throw scene_error("missing width");
    if (scene.height < 0) throw scene_error("missing height");
    if (scene.background < 0) throw scene_error("missing background");
    (void)saw_sigma;
    (void)saw_seed;
    return scene;
}

SynthScene load_scene_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot open scene file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scene(buf.str());
}

}  // namespace slr
