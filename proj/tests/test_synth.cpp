#include <cstdint>
#include <random>

#include "doctest.h"
#include "slr/errors.hpp"
#include "slr/geometry.hpp"
#include "slr/synth.hpp"

using namespace slr;

namespace {

SynthScene basic_scene() {
    SynthScene s;
    s.width = s.height = 64;
    s.background = 60;
    s.shapes.push_back(SynthShape{32, 32, 10, 15, 0, 160});
    return s;
}

}  // namespace

TEST_CASE("axis-aligned rectangle paints the documented pixels") {
    RenderResult r = render(basic_scene());
    CHECK(r.image.pixel(32, 32) == 160);
    CHECK(r.image.pixel(2, 2) == 60);
    REQUIRE(r.truth.size() == 1);
    CHECK(r.truth[0].corners[0] == Point{22, 17});
    CHECK(r.truth[0].corners[1] == Point{42, 17});
    CHECK(r.truth[0].corners[2] == Point{42, 47});
    CHECK(r.truth[0].corners[3] == Point{22, 47});
    // Pixel centers at the geometric edges land inside: columns 22..41 filled.
    CHECK(r.image.pixel(22, 30) == 160);
    CHECK(r.image.pixel(41, 30) == 160);
    CHECK(r.image.pixel(21, 30) == 60);
    CHECK(r.image.pixel(42, 30) == 60);
}

TEST_CASE("no shapes and no noise gives a constant image") {
    SynthScene s;
    s.width = 16;
    s.height = 8;
    s.background = 93;
    RenderResult r = render(s);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 16; ++x) CHECK(r.image.pixel(x, y) == 93);
}

TEST_CASE("rendering is deterministic under a fixed seed") {
    SynthScene s = basic_scene();
    s.sigma = 7.5;
    s.seed = 42;
    RenderResult a = render(s);
    RenderResult b = render(s);
    CHECK(a.image == b.image);
    s.seed = 43;
    RenderResult c = render(s);
    CHECK_FALSE(a.image == c.image);
}

TEST_CASE("shapes must stay inside the image") {
    SynthScene s = basic_scene();
    s.shapes[0].cx = 60;  // corners would cross the right border
    CHECK_THROWS_AS(render(s), scene_error);
    SynthScene t = basic_scene();
    t.shapes[0].cx = 50;
    t.shapes[0].rot_deg = 45;  // rotation swings a corner past the border
    CHECK_THROWS_AS(render(t), scene_error);
}

TEST_CASE("clean two-bin contrast makes an edge segment saturate") {
    // Contrast 100 spans more than two 16-wide bins, so the border strength
    // along the rectangle's left edge is exactly 1.
    RenderResult r = render(basic_scene());
    CHECK(line(r.image, Point{22, 20}, Point{22, 44}).value == 1.0);
    CHECK(line(r.image, Point{42, 20}, Point{42, 44}).value == 1.0);
    CHECK(line(r.image, Point{26, 17}, Point{38, 17}).value == 1.0);
}

TEST_CASE("rotated corners follow the rotation matrix") {
    SynthShape s{32, 32, 10, 15, 90, 200};
    RectTruth t = shape_truth(s);
    CHECK(t.corners[0].x == doctest::Approx(47.0));
    CHECK(t.corners[0].y == doctest::Approx(22.0));
    CHECK(t.corners[2].x == doctest::Approx(17.0));
    CHECK(t.corners[2].y == doctest::Approx(42.0));
}

TEST_CASE("noise is clamped to the intensity range") {
    SynthScene s;
    s.width = s.height = 32;
    s.background = 5;
    s.sigma = 200.0;
    s.seed = 3;
    RenderResult r = render(s);
    bool low = false, high = false;
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            if (r.image.pixel(x, y) == 0) low = true;
            if (r.image.pixel(x, y) == 255) high = true;
        }
    CHECK(low);
    CHECK(high);
}

TEST_CASE("the uniform generator matches the published reference output") {
    // Guarantees the documented noise stream is portable: the 10000th draw of
    // a default-seeded mt19937 is pinned by the standard.
    std::mt19937 rng;
    for (int i = 0; i < 9999; ++i) rng();
    CHECK(rng() == 4123659995u);
}

TEST_CASE("scene text parsing") {
    SUBCASE("full scene round trip") {
        SynthScene s = parse_scene(
            "# demo scene\nwidth 64\nheight 48\nbackground 60\nsigma 5\nseed 7\n"
            "rect 32 24 10 8 30 160  # one building\n");
        CHECK(s.width == 64);
        CHECK(s.height == 48);
        CHECK(s.background == 60);
        CHECK(s.sigma == 5.0);
        CHECK(s.seed == 7u);
        REQUIRE(s.shapes.size() == 1);
        CHECK(s.shapes[0].rot_deg == 30.0);
        CHECK(s.shapes[0].fill == 160);
    }
    SUBCASE("missing keys are rejected") {
        CHECK_THROWS_AS(parse_scene("width 64\nheight 64\n"), scene_error);
        CHECK_THROWS_AS(parse_scene("height 64\nbackground 3\n"), scene_error);
    }
    SUBCASE("diagnostics name the offending line") {
        try {
            parse_scene("width 64\nheight 64\nbackground 60\nbogus 1\n");
            FAIL("expected scene_error");
        } catch (const scene_error& e) {
            CHECK(std::string(e.what()).find("line 4") != std::string::npos);
        }
        CHECK_THROWS_AS(parse_scene("width 64\nheight 64\nbackground 999\n"), scene_error);
        CHECK_THROWS_AS(
            parse_scene("width 64\nheight 64\nbackground 60\nrect 5 5 2 2 0 300\n"),
            scene_error);
        CHECK_THROWS_AS(
            parse_scene("width 64\nheight 64\nbackground 60\nrect 5 5 2 2 0 100 9\n"),
            scene_error);
    }
}
