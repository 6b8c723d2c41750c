#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "doctest.h"
#include "slr/errors.hpp"
#include "slr/geometry.hpp"
#include "slr/raster.hpp"
#include "slr/rules.hpp"
#include "slr/solver.hpp"
#include "slr/synth.hpp"

using namespace slr;

namespace {

GrayImage rect_scene(int size, int bg, int fill, double cx, double cy, double hx, double hy,
                     double sigma = 0.0, std::uint32_t seed = 1) {
    SynthScene scene;
    scene.width = scene.height = size;
    scene.background = bg;
    scene.sigma = sigma;
    scene.seed = seed;
    scene.shapes.push_back(SynthShape{cx, cy, hx, hy, 0.0, fill});
    return render(scene).image;
}

SolverContext make_ctx(const GrayImage& img) {
    SolverContext ctx;
    ctx.image = &img;
    return ctx;
}

bool same_detections(const SolveResult& a, const SolveResult& b) {
    if (a.detections.size() != b.detections.size()) return false;
    for (size_t i = 0; i < a.detections.size(); ++i) {
        const Detection &x = a.detections[i], &y = b.detections[i];
        if (x.score != y.score || x.bindings.size() != y.bindings.size() ||
            x.segments.size() != y.segments.size())
            return false;
        for (size_t j = 0; j < x.bindings.size(); ++j)
            if (x.bindings[j].first != y.bindings[j].first ||
                x.bindings[j].second != y.bindings[j].second)
                return false;
        for (size_t j = 0; j < x.segments.size(); ++j)
            if (x.segments[j].a != y.segments[j].a || x.segments[j].b != y.segments[j].b ||
                x.segments[j].strength != y.segments[j].strength)
                return false;
    }
    return true;
}

}  // namespace

TEST_CASE("query parsing") {
    Query q = parse_query("house(p1, p2, p3, p4)");
    CHECK(q.name == "house");
    CHECK(q.vars == std::vector<std::string>{"p1", "p2", "p3", "p4"});
    CHECK(parse_query("w(a)").vars.size() == 1);
    CHECK_THROWS_AS(parse_query("house"), parse_error);
    CHECK_THROWS_AS(parse_query("house()"), parse_error);
    CHECK_THROWS_AS(parse_query("House(a)"), parse_error);
    CHECK_THROWS_AS(parse_query("h(a) extra"), parse_error);
}

TEST_CASE("candidate grid") {
    SUBCASE("16x16 stride 4 gives the 16 lattice points") {
        GrayImage img = GrayImage::filled(16, 16, 0);
        auto pts = candidate_points(img, CandidateConfig{});
        REQUIRE(pts.size() == 16);
        CHECK(pts[0] == Point{0, 0});
        CHECK(pts[1] == Point{4, 0});
        CHECK(pts[4] == Point{0, 4});
        CHECK(pts[15] == Point{12, 12});
    }
    SUBCASE("stride exceeding the image leaves the origin") {
        GrayImage img = GrayImage::filled(5, 5, 0);
        CandidateConfig cfg;
        cfg.stride = 8;
        auto pts = candidate_points(img, cfg);
        REQUIRE(pts.size() == 1);
        CHECK(pts[0] == Point{0, 0});
    }
}

TEST_CASE("constraint-directed candidates") {
    GrayImage img = GrayImage::filled(64, 64, 0);
    CandidateConfig cfg;
    SUBCASE("no constraints falls back to the full grid") {
        auto all = candidate_points(img, cfg);
        auto gen = generative_candidates(img, cfg, PendingConstraints{});
        CHECK(gen == all);
    }
    SUBCASE("pending length bound restricts to a disk") {
        PendingConstraints pending;
        pending.disks.push_back(DiskConstraint{Point{20, 20}, 10.0 + cfg.len_tol});
        auto gen = generative_candidates(img, cfg, pending);
        auto all = candidate_points(img, cfg);
        CHECK(gen.size() < all.size());
        std::vector<Point> expected;
        for (const Point& p : all)
            if (len(p, Point{20, 20}) <= 12.0) expected.push_back(p);
        CHECK(gen == expected);
    }
    SUBCASE("pending right angle restricts to the perpendicular") {
        PendingConstraints pending;
        pending.wedges.push_back(WedgeConstraint{Point{28, 28}, Point{8, 28}, 90.0, false});
        auto gen = generative_candidates(img, cfg, pending);
        REQUIRE(!gen.empty());
        for (const Point& p : gen) {
            double a = angle(Point{8, 28}, Point{28, 28}, p).degrees;
            CHECK(std::abs(a - 90.0) <= cfg.angle_tol);
            CHECK(p.x == 28.0);  // lattice points off the vertical all exceed 3 degrees
        }
        // Same acceptance as filtering the full grid through the angle test.
        std::vector<Point> expected;
        for (const Point& p : candidate_points(img, cfg)) {
            if (p == Point{28, 28}) continue;
            if (std::abs(angle(Point{8, 28}, Point{28, 28}, p).degrees - 90.0) <= cfg.angle_tol)
                expected.push_back(p);
        }
        CHECK(gen == expected);
    }
    SUBCASE("disk and wedge intersect") {
        PendingConstraints pending;
        pending.disks.push_back(DiskConstraint{Point{28, 28}, 10.0});
        pending.wedges.push_back(WedgeConstraint{Point{28, 28}, Point{8, 28}, 90.0, false});
        auto gen = generative_candidates(img, cfg, pending);
        for (const Point& p : gen) {
            CHECK(len(p, Point{28, 28}) <= 10.0);
            CHECK(p.x == 28.0);
        }
        CHECK(!gen.empty());
    }
}

TEST_CASE("score convolution") {
    std::vector<double> ones{1, 1, 1, 1};
    CHECK(score(ones, ones) == 4.0);
    std::vector<double> b{0.5, 0.5}, w{1, 0};
    CHECK(score(b, w) == 0.5);
    std::vector<double> b2{0.9, 0.8, 0.85, 0.95}, w2(4, 0.25);
    CHECK(score(b2, w2) == doctest::Approx(0.875).epsilon(1e-12));
    CHECK_THROWS_AS(score(b, w2), contract_error);
}

TEST_CASE("prune bound arithmetic") {
    std::vector<double> rem{0.25, 0.25};
    CHECK(bound_and_prune(0.4, rem, 0.95) == PruneDecision::prune);
    CHECK(bound_and_prune(0.4, rem, 0.85) == PruneDecision::keep_going);
    CHECK(bound_and_prune(0.9, {}, 0.9) == PruneDecision::keep_going);
}

TEST_CASE("uniform image admits only border-clipped artifacts") {
    GrayImage img = GrayImage::filled(32, 32, 77);
    RuleSet rules = parse_rules("seg(a, b) :- line(a, b, s), s > 0.8.");
    SolveResult r = solve(parse_query("seg(a, b)"), rules, make_ctx(img));
    CHECK_FALSE(r.stats.truncated);
    // Interior flanks are identical, so a hit needs one rectangle clipped
    // away by the image border; its endpoints must sit inside the band the
    // rectangles span.
    double band = LineParams{}.gap + LineParams{}.rect_width;
    for (const Detection& d : r.detections)
        for (const Segment& s : d.segments)
            for (Point p : {s.a, s.b}) {
                double border = std::min(std::min(p.x, p.y),
                                         std::min(32.0 - p.x, 32.0 - p.y));
                CHECK(border <= band);
            }
    // Away from the border the score is exactly zero.
    CHECK(line(img, Point{8, 16}, Point{24, 16}).value == 0.0);
}

TEST_CASE("uniform image defeats the four-corner rule entirely") {
    // Border artifacts give at most two perpendicular strong runs (along the
    // x=0 and y=0 bands when 64 is a stride multiple); the rule needs three.
    GrayImage img = GrayImage::filled(64, 64, 128);
    RuleSet rules = parse_rules(
        "house(p1, p2, p3, p4) :- line(p1, p2, b1), b1 > 0.8, "
        "angle(p1, p2, p3, l1), l1 = 90, line(p2, p3, b2), b2 > 0.8, "
        "angle(p2, p3, p4, l2), l2 = 90, line(p3, p4, b3), b3 > 0.8, "
        "line(p4, p1, b4).");
    SolveResult r = solve(parse_query("house(p1, p2, p3, p4)"), rules, make_ctx(img));
    CHECK(r.detections.empty());
    CHECK_FALSE(r.stats.truncated);
}

TEST_CASE("unknown query predicate throws") {
    GrayImage img = GrayImage::filled(16, 16, 0);
    RuleSet rules = parse_rules("seg(a, b) :- line(a, b, s), s > 0.8.");
    CHECK_THROWS_AS(solve(parse_query("hous(a, b)"), rules, make_ctx(img)),
                    unknown_predicate);
    CHECK_THROWS_AS(solve(parse_query("seg(a, b, c)"), rules, make_ctx(img)),
                    unknown_predicate);
}

TEST_CASE("detections satisfy their rule and arrive sorted") {
    GrayImage img = rect_scene(32, 40, 200, 16, 16, 8, 8);
    RuleSet rules = parse_rules("seg(a, b) :- line(a, b, s), s > 0.9.");
    SolveResult r = solve(parse_query("seg(a, b)"), rules, make_ctx(img));
    REQUIRE(!r.detections.empty());
    for (size_t i = 1; i < r.detections.size(); ++i)
        CHECK(r.detections[i - 1].score >= r.detections[i].score);
    for (const Detection& d : r.detections) {
        REQUIRE(d.segments.size() == 1);
        double b = line(img, d.segments[0].a, d.segments[0].b).value;
        CHECK(b == d.segments[0].strength);
        CHECK(b > 0.9);
        CHECK(d.score == b);  // single line goal, uniform weight 1
    }
}

TEST_CASE("suppression keeps non-conflicting detections only") {
    GrayImage img = rect_scene(32, 40, 200, 16, 16, 8, 8);
    RuleSet rules = parse_rules("seg(a, b) :- line(a, b, s), s > 0.9.");
    SolverContext ctx = make_ctx(img);
    SolveResult r = solve(parse_query("seg(a, b)"), rules, ctx);
    for (size_t i = 0; i < r.detections.size(); ++i)
        for (size_t j = i + 1; j < r.detections.size(); ++j) {
            bool all_close = true;
            for (size_t v = 0; v < 2; ++v)
                if (len(r.detections[i].bindings[v].second,
                        r.detections[j].bindings[v].second) > ctx.limits.nms_radius)
                    all_close = false;
            CHECK_FALSE(all_close);
        }
    CHECK(static_cast<int>(r.detections.size()) <= ctx.limits.top_k);
}

TEST_CASE("two runs are identical") {
    GrayImage img = rect_scene(32, 40, 200, 16, 16, 8, 8, 4.0, 9);
    RuleSet rules = parse_rules("seg(a, b) :- line(a, b, s), s > 0.7.");
    SolverContext ctx = make_ctx(img);
    SolveResult r1 = solve(parse_query("seg(a, b)"), rules, ctx);
    SolveResult r2 = solve(parse_query("seg(a, b)"), rules, ctx);
    CHECK(same_detections(r1, r2));
    CHECK(r1.stats.expansions == r2.stats.expansions);
}

TEST_CASE("parallel search merges to the sequential result") {
    GrayImage img = rect_scene(32, 40, 200, 16, 16, 8, 8, 4.0, 9);
    RuleSet rules = parse_rules("seg(a, b) :- line(a, b, s), s > 0.7.");
    SolverContext seq = make_ctx(img);
    seq.prune = false;
    SolverContext par = seq;
    par.threads = 3;
    SolveResult rs = solve(parse_query("seg(a, b)"), rules, seq);
    SolveResult rp = solve(parse_query("seg(a, b)"), rules, par);
    CHECK(same_detections(rs, rp));
    CHECK(rs.stats.solutions_found == rp.stats.solutions_found);
}

TEST_CASE("raising a threshold never adds solutions") {
    GrayImage img = rect_scene(32, 60, 180, 16, 16, 8, 8, 6.0, 4);
    SolverContext ctx = make_ctx(img);
    long long previous = -1;
    for (const char* rule : {"seg(a, b) :- line(a, b, s), s > 0.3.",
                             "seg(a, b) :- line(a, b, s), s > 0.6.",
                             "seg(a, b) :- line(a, b, s), s > 0.9."}) {
        SolveResult r = solve(parse_query("seg(a, b)"), parse_rules(rule), ctx);
        if (previous >= 0) CHECK(r.stats.solutions_found <= previous);
        previous = r.stats.solutions_found;
    }
}

TEST_CASE("small oracle equivalence across all four configurations") {
    GrayImage img = rect_scene(12, 30, 220, 6, 6, 4, 2);
    RuleSet rules = parse_rules("pair(a, b) :- line(a, b, s), s > 0.3.");
    Query q = parse_query("pair(a, b)");

    CandidateConfig cfg;
    auto pts = candidate_points(img, cfg);
    double best = -1.0;
    for (const Point& a : pts)
        for (const Point& b : pts) {
            if (len(a, b) < 2.0) continue;
            double s = line(img, a, b).value;
            if (s > 0.3) best = std::max(best, s);
        }
    REQUIRE(best > 0.0);

    for (bool prune : {false, true})
        for (bool generative : {false, true}) {
            SolverContext ctx = make_ctx(img);
            ctx.prune = prune;
            ctx.generative = generative;
            SolveResult r = solve(q, rules, ctx);
            REQUIRE(!r.detections.empty());
            CHECK(r.detections[0].score == doctest::Approx(best).epsilon(1e-9));
        }
}

TEST_CASE("generative pruning of the search space preserves results") {
    // len-bounded pair on a small scene: the disk filter must not lose the
    // best solution the grid search finds.
    GrayImage img = rect_scene(24, 30, 220, 12, 12, 6, 4);
    RuleSet rules = parse_rules("short(a, b) :- line(a, b, s), len(a, b, d), d < 10, s > 0.3.");
    Query q = parse_query("short(a, b)");
    SolverContext grid = make_ctx(img);
    grid.generative = false;
    SolverContext gen = make_ctx(img);
    gen.generative = true;
    SolveResult rg = solve(q, rules, grid);
    SolveResult rc = solve(q, rules, gen);
    REQUIRE(!rg.detections.empty());
    CHECK(same_detections(rg, rc));
    CHECK(rc.stats.expansions < rg.stats.expansions);
    for (const Detection& d : rc.detections) {
        double dist = len(d.bindings[0].second, d.bindings[1].second);
        CHECK(dist < 10.0);
    }
}

TEST_CASE("recursion is depth-bounded and reported") {
    GrayImage img = rect_scene(16, 20, 230, 8, 8, 4, 4);
    RuleSet rules = parse_rules(
        "wall(a, b) :- line(a, b, s), s > 0.5. wall(a, c) :- wall(a, b), wall(b, c).");
    Query q = parse_query("wall(a, c)");
    SolverContext ctx = make_ctx(img);
    ctx.limits.depth_bound = 2;
    ctx.limits.max_expansions = 2'000'000;
    SolveResult r = solve(q, rules, ctx);
    CHECK(!r.detections.empty());
    CHECK(r.stats.depth_exceeded > 0);
}

TEST_CASE("expansion budget truncates gracefully") {
    GrayImage img = rect_scene(32, 40, 200, 16, 16, 8, 8);
    RuleSet rules = parse_rules("seg(a, b) :- line(a, b, s), s > 0.1.");
    SolverContext ctx = make_ctx(img);
    ctx.limits.max_expansions = 50;
    SolveResult r = solve(parse_query("seg(a, b)"), rules, ctx);
    CHECK(r.stats.truncated);
    CHECK(r.stats.expansions <= 51);
}

TEST_CASE("per-rule weight overrides change the convolution") {
    GrayImage img = rect_scene(24, 30, 220, 12, 12, 6, 6);
    RuleSet rules = parse_rules(
        "bar(a, b, c) :- line(a, b, s1), s1 > 0.5, line(b, c, s2), s2 > 0.5.");
    Query q = parse_query("bar(a, b, c)");
    SolverContext uniform = make_ctx(img);
    SolveResult ru = solve(q, rules, uniform);
    REQUIRE(!ru.detections.empty());
    SolverContext masked = make_ctx(img);
    masked.weights.per_rule["bar"] = {1.0, 0.0};
    SolveResult rm = solve(q, rules, masked);
    REQUIRE(!rm.detections.empty());
    CHECK(rm.detections[0].score == doctest::Approx(rm.detections[0].segments[0].strength));
    // Uniform weighting averages both strengths instead.
    const Detection& d = ru.detections[0];
    CHECK(d.score ==
          doctest::Approx((d.segments[0].strength + d.segments[1].strength) / 2.0));
}

TEST_CASE("solver context is validated") {
    GrayImage img = GrayImage::filled(8, 8, 0);
    RuleSet rules = parse_rules("seg(a, b) :- line(a, b, s), s > 0.5.");
    SolverContext ctx = make_ctx(img);
    ctx.candidates.stride = 0;
    CHECK_THROWS_AS(solve(parse_query("seg(a, b)"), rules, ctx), config_error);
    SolverContext ctx2 = make_ctx(img);
    ctx2.weights.per_rule["seg"] = {-1.0};
    CHECK_THROWS_AS(solve(parse_query("seg(a, b)"), rules, ctx2), config_error);
    SolverContext ctx3 = make_ctx(img);
    ctx3.limits.top_k = 0;
    CHECK_THROWS_AS(solve(parse_query("seg(a, b)"), rules, ctx3), config_error);
}
