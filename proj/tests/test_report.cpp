#include <string>

#include "doctest.h"
#include "slr/errors.hpp"
#include "slr/report.hpp"
#include "slr/solver.hpp"
#include "slr/synth.hpp"

using namespace slr;

namespace {

SolveResult sample_result() {
    SolveResult r;
    Detection d;
    d.bindings = {{"p1", Point{4, 8}}, {"p2", Point{20, 8}}};
    d.segments = {Segment{Point{4, 8}, Point{20, 8}, 1.0 / 3.0}};
    d.score = 1.0 / 3.0;
    r.detections.push_back(d);
    return r;
}

}  // namespace

TEST_CASE("rounding clips to six fractional digits") {
    CHECK(round6(1.0) == 1.0);
    CHECK(round6(0.1234567) == 0.123457);
    CHECK(round6(-0.1234564) == -0.123456);
    CHECK(round6(90.0) == 90.0);
}

TEST_CASE("detection document carries query, parameters, and detections") {
    GrayImage img = GrayImage::filled(32, 32, 0);
    SolverContext ctx;
    ctx.image = &img;
    Query q{"seg", {"p1", "p2"}};
    nlohmann::ordered_json doc = detection_document(q, "scene.pgm", ctx, sample_result());
    CHECK(doc["query"] == "seg(p1, p2)");
    CHECK(doc["image"] == "scene.pgm");
    CHECK(doc["parameters"]["stride"] == 4);
    CHECK(doc["parameters"]["bins"] == 16);
    CHECK(doc["parameters"]["weights"] == "uniform");
    CHECK(doc["truncated"] == false);
    REQUIRE(doc["detections"].size() == 1);
    const auto& det = doc["detections"][0];
    CHECK(det["points"]["p1"][0] == 4.0);
    CHECK(det["points"]["p2"][0] == 20.0);
    CHECK(det["score"] == 0.333333);
    CHECK(det["segments"][0]["b"] == 0.333333);
    std::string dumped = doc.dump(2);
    CHECK(dumped.find("0.3333333") == std::string::npos);
    // Key order is fixed: query before image before parameters.
    CHECK(dumped.find("\"query\"") < dumped.find("\"image\""));
    CHECK(dumped.find("\"image\"") < dumped.find("\"parameters\""));
    CHECK(doc.dump(2) == dumped);
}

TEST_CASE("weight overrides are echoed in the parameters block") {
    GrayImage img = GrayImage::filled(8, 8, 0);
    SolverContext ctx;
    ctx.image = &img;
    ctx.weights.per_rule["seg"] = {1.0, 0.25};
    Query q{"seg", {"a", "b"}};
    nlohmann::ordered_json doc = detection_document(q, "x.pgm", ctx, SolveResult{});
    CHECK(doc["parameters"]["weights"]["seg"][1] == 0.25);
    CHECK(doc["detections"].empty());
}

TEST_CASE("truth document lists corner quadruples") {
    RectTruth t{{Point{22, 17}, Point{42, 17}, Point{42, 47}, Point{22, 47}}};
    nlohmann::ordered_json doc = truth_document("out.pgm", {t});
    CHECK(doc["image"] == "out.pgm");
    REQUIRE(doc["truth"].size() == 1);
    CHECK(doc["truth"][0]["corners"][2][0] == 42.0);
    CHECK(doc["truth"][0]["corners"][2][1] == 47.0);
}

TEST_CASE("svg overlay draws one polygon per detection") {
    std::string svg = detections_svg(64, 48, sample_result());
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("width=\"64\"") != std::string::npos);
    CHECK(svg.find("height=\"48\"") != std::string::npos);
    CHECK(svg.find("<polygon points=\"4,8 20,8\"") != std::string::npos);
    CHECK(svg.find("0.333333") != std::string::npos);
    CHECK(svg.rfind("</svg>\n") == svg.size() - 7);
}

TEST_CASE("weights config parsing") {
    ScoreWeights w = parse_weights(R"({"house": [1, 0.5, 0.5, 1]})");
    REQUIRE(w.per_rule.count("house") == 1);
    CHECK(w.per_rule["house"] == std::vector<double>{1.0, 0.5, 0.5, 1.0});
    CHECK_THROWS_AS(parse_weights("[1, 2]"), config_error);
    CHECK_THROWS_AS(parse_weights(R"({"house": []})"), config_error);
    CHECK_THROWS_AS(parse_weights(R"({"house": ["a"]})"), config_error);
    CHECK_THROWS_AS(parse_weights("not json"), config_error);
}
