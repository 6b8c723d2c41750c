#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "slr/errors.hpp"
#include "slr/geometry.hpp"
#include "slr/raster.hpp"
#include "slr/report.hpp"
#include "slr/rules.hpp"
#include "slr/solver.hpp"
#include "slr/synth.hpp"

namespace {

// Exit codes: 0 ok, 2 I/O, 3 degenerate geometry, 4 parse/validation,
// 5 unknown predicate, 1 anything unexpected.
constexpr int kOk = 0;
constexpr int kUnexpected = 1;
constexpr int kIo = 2;
constexpr int kDegenerate = 3;
constexpr int kParse = 4;
constexpr int kUnknownPredicate = 5;

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw std::ios_base::failure("read failed: " + path);
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::ios_base::failure("cannot open file for writing: " + path);
    out << content;
    out.flush();
    if (!out) throw std::ios_base::failure("write failed: " + path);
}

struct LineArgs {
    std::string image;
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
    slr::LineParams params;
};

int cmd_line(const LineArgs& a) {
    slr::GrayImage img = slr::load_pgm_file(a.image);
    a.params.validate();
    slr::Strength s =
        slr::line(img, slr::Point{a.x1, a.y1}, slr::Point{a.x2, a.y2}, a.params);
    std::printf("%.6f\n", s.value);
    return kOk;
}

struct DetectArgs {
    std::string image, rules, query, out_json, out_svg, weights;
    slr::SolverContext ctx;
};

int cmd_detect(DetectArgs& a) {
    slr::GrayImage img = slr::load_pgm_file(a.image);
    slr::RuleSet rules = slr::parse_rules(read_text_file(a.rules));
    slr::Query query = slr::parse_query(a.query);
    if (!a.weights.empty()) a.ctx.weights = slr::load_weights_file(a.weights);
    a.ctx.image = &img;
    a.ctx.validate();

    slr::SolveResult result = slr::solve(query, rules, a.ctx);
    nlohmann::ordered_json doc = slr::detection_document(query, a.image, a.ctx, result);
    write_text_file(a.out_json, doc.dump(2) + "\n");
    if (!a.out_svg.empty())
        write_text_file(a.out_svg, slr::detections_svg(img.width(), img.height(), result));

    std::printf("detections %zu", result.detections.size());
    if (!result.detections.empty()) std::printf(" top %.6f", result.detections.front().score);
    if (result.stats.truncated) std::printf(" (truncated)");
    std::printf("\n");
    return kOk;
}

struct SynthArgs {
    std::string scene, out_image, out_truth;
};

int cmd_synth(const SynthArgs& a) {
    slr::SynthScene scene = slr::load_scene_file(a.scene);
    slr::RenderResult r = slr::render(scene);
    slr::save_pgm_file(r.image, a.out_image);
    nlohmann::ordered_json doc = slr::truth_document(a.out_image, r.truth);
    write_text_file(a.out_truth, doc.dump(2) + "\n");
    std::printf("wrote %dx%d image, %zu shapes\n", r.image.width(), r.image.height(),
                r.truth.size());
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"recognizes polygonal objects in grayscale images by rule-based inference"};
    app.require_subcommand(1);

    LineArgs la;
    CLI::App* line_cmd =
        app.add_subcommand("line", "evaluate the border strength of one segment");
    line_cmd->add_option("image", la.image, "PGM image path")->required();
    line_cmd->add_option("x1", la.x1)->required();
    line_cmd->add_option("y1", la.y1)->required();
    line_cmd->add_option("x2", la.x2)->required();
    line_cmd->add_option("y2", la.y2)->required();
    line_cmd->add_option("--d,--rect-width", la.params.rect_width,
                         "analysis rectangle width in pixels");
    line_cmd->add_option("--n,--bins", la.params.bin_count, "histogram bin count");
    line_cmd->add_option("--gap", la.params.gap, "gap between segment and rectangles");

    DetectArgs da;
    CLI::App* detect_cmd = app.add_subcommand("detect", "search an image for rule matches");
    detect_cmd->add_option("image", da.image, "PGM image path")->required();
    detect_cmd->add_option("rules", da.rules, "rule file path")->required();
    detect_cmd->add_option("query", da.query, "query, e.g. 'house(p1, p2, p3, p4)'")
        ->required();
    detect_cmd->add_option("-o,--out", da.out_json, "output JSON path")->required();
    detect_cmd->add_option("--svg", da.out_svg, "optional SVG overlay path");
    detect_cmd->add_option("--weights", da.weights, "weights config JSON path");
    detect_cmd->add_option("--stride", da.ctx.candidates.stride, "candidate grid stride");
    detect_cmd->add_option("--sample-step", da.ctx.candidates.sample_step,
                           "lattice step for constrained enumeration (0 = stride)");
    detect_cmd->add_option("--angle-tol", da.ctx.candidates.angle_tol,
                           "degrees of slack for scalar '=' on angles");
    detect_cmd->add_option("--len-tol", da.ctx.candidates.len_tol,
                           "pixels of slack for scalar '=' on lengths");
    detect_cmd->add_option("--d,--rect-width", da.ctx.params.rect_width,
                           "analysis rectangle width in pixels");
    detect_cmd->add_option("--n,--bins", da.ctx.params.bin_count, "histogram bin count");
    detect_cmd->add_option("--gap", da.ctx.params.gap,
                           "gap between segment and rectangles");
    detect_cmd->add_option("--top-k", da.ctx.limits.top_k, "max detections to report");
    detect_cmd->add_option("--nms-radius", da.ctx.limits.nms_radius,
                           "suppression radius in pixels");
    detect_cmd->add_option("--depth-bound", da.ctx.limits.depth_bound,
                           "recursion depth bound");
    detect_cmd->add_option("--max-expansions", da.ctx.limits.max_expansions,
                           "search step budget");
    detect_cmd->add_option("--threads", da.ctx.threads, "parallel search branches");
    detect_cmd->add_flag("--no-prune", [&da](int64_t) { da.ctx.prune = false; },
                         "disable branch-and-bound pruning");
    detect_cmd->add_flag("--no-generative", [&da](int64_t) { da.ctx.generative = false; },
                         "disable constraint-directed candidate enumeration");

    SynthArgs sa;
    CLI::App* synth_cmd =
        app.add_subcommand("synth", "render a synthetic scene with ground truth");
    synth_cmd->add_option("scene", sa.scene, "scene description path")->required();
    synth_cmd->add_option("image_out", sa.out_image, "output PGM path")->required();
    synth_cmd->add_option("truth_out", sa.out_truth, "output ground-truth JSON path")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kParse;
    }

    try {
        if (line_cmd->parsed()) return cmd_line(la);
        if (detect_cmd->parsed()) return cmd_detect(da);
        if (synth_cmd->parsed()) return cmd_synth(sa);
        return kUnexpected;
    } catch (const slr::degenerate_geometry& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDegenerate;
    } catch (const slr::unknown_predicate& e) {
        std::cerr << "error: unknown predicate " << e.what() << "\n";
        return kUnknownPredicate;
    } catch (const slr::parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParse;
    } catch (const slr::scene_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParse;
    } catch (const slr::config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParse;
    } catch (const slr::contract_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParse;
    } catch (const slr::pgm_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUnexpected;
    }
}
