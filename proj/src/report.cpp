#include "slr/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "slr/errors.hpp"

namespace slr {

double round6(double v) { return std::round(v * 1e6) / 1e6; }

namespace {

nlohmann::ordered_json point_json(Point p) {
    return nlohmann::ordered_json::array({round6(p.x), round6(p.y)});
}

std::string fmt_num(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, round6(v));
    return std::string(buf, res.ptr);
}

}  // namespace

nlohmann::ordered_json detection_document(const Query& query, const std::string& image_path,
                                          const SolverContext& ctx, const SolveResult& result) {
    nlohmann::ordered_json doc;
    std::string qtext = query.name + "(";
    for (size_t i = 0; i < query.vars.size(); ++i) {
        if (i) qtext += ", ";
        qtext += query.vars[i];
    }
    qtext += ")";
    doc["query"] = qtext;
    doc["image"] = image_path;

    nlohmann::ordered_json params;
    params["stride"] = ctx.candidates.stride;
    params["sample_step"] = ctx.candidates.effective_step();
    params["bins"] = ctx.params.bin_count;
    params["rect_width"] = round6(ctx.params.rect_width);
    params["gap"] = round6(ctx.params.gap);
    params["angle_tolerance"] = round6(ctx.candidates.angle_tol);
    params["length_tolerance"] = round6(ctx.candidates.len_tol);
    params["depth_bound"] = ctx.limits.depth_bound;
    params["max_expansions"] = ctx.limits.max_expansions;
    params["top_k"] = ctx.limits.top_k;
    params["nms_radius"] = round6(ctx.limits.nms_radius);
    params["prune"] = ctx.prune;
    params["generative"] = ctx.generative;
    params["threads"] = ctx.threads;
    if (ctx.weights.per_rule.empty()) {
        params["weights"] = "uniform";
    } else {
        nlohmann::ordered_json w = nlohmann::ordered_json::object();
        for (const auto& [name, ws] : ctx.weights.per_rule) {
            nlohmann::ordered_json arr = nlohmann::ordered_json::array();
            for (double x : ws) arr.push_back(round6(x));
            w[name] = std::move(arr);
        }
        params["weights"] = std::move(w);
    }
    doc["parameters"] = std::move(params);
    doc["truncated"] = result.stats.truncated;

    nlohmann::ordered_json dets = nlohmann::ordered_json::array();
    for (const Detection& d : result.detections) {
        nlohmann::ordered_json jd;
        nlohmann::ordered_json pts = nlohmann::ordered_json::object();
        for (const auto& [name, p] : d.bindings) pts[name] = point_json(p);
        jd["points"] = std::move(pts);
        jd["score"] = round6(d.score);
        nlohmann::ordered_json segs = nlohmann::ordered_json::array();
        for (const Segment& s : d.segments) {
            nlohmann::ordered_json js;
            js["from"] = point_json(s.a);
            js["to"] = point_json(s.b);
            js["b"] = round6(s.strength);
            segs.push_back(std::move(js));
        }
        jd["segments"] = std::move(segs);
        dets.push_back(std::move(jd));
    }
    doc["detections"] = std::move(dets);
    return doc;
}

nlohmann::ordered_json truth_document(const std::string& image_path,
                                      const std::vector<RectTruth>& truth) {
    nlohmann::ordered_json doc;
    doc["image"] = image_path;
    nlohmann::ordered_json shapes = nlohmann::ordered_json::array();
    for (const RectTruth& rt : truth) {
        nlohmann::ordered_json corners = nlohmann::ordered_json::array();
        for (const Point& p : rt.corners) corners.push_back(point_json(p));
        nlohmann::ordered_json shape;
        shape["corners"] = std::move(corners);
        shapes.push_back(std::move(shape));
    }
    doc["truth"] = std::move(shapes);
    return doc;
}

std::string detections_svg(int width, int height, const SolveResult& result) {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "  <rect width=\"" << width << "\" height=\"" << height
        << "\" fill=\"#202020\"/>\n";
    for (size_t i = 0; i < result.detections.size(); ++i) {
        const Detection& d = result.detections[i];
        out << "  <polygon points=\"";
        for (size_t j = 0; j < d.bindings.size(); ++j) {
            if (j) out << ' ';
            out << fmt_num(d.bindings[j].second.x) << ',' << fmt_num(d.bindings[j].second.y);
        }
        out << "\" fill=\"none\" stroke=\"" << (i == 0 ? "#ff4040" : "#40c040")
            << "\" stroke-width=\"1\">\n";
        out << "    <title>score " << fmt_num(d.score) << "</title>\n";
        out << "  </polygon>\n";
        if (!d.bindings.empty()) {
            const Point& p = d.bindings.front().second;
            out << "  <text x=\"" << fmt_num(p.x + 1) << "\" y=\"" << fmt_num(p.y - 1)
                << "\" font-size=\"4\" fill=\"#ffffff\">" << fmt_num(d.score) << "</text>\n";
        }
    }
    out << "</svg>\n";
    return out.str();
}

ScoreWeights parse_weights(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("weights config: ") + e.what());
    }
    if (!doc.is_object()) throw config_error("weights config: top level must be an object");
    ScoreWeights w;
    for (const auto& [name, arr] : doc.items()) {
        if (!arr.is_array() || arr.empty())
            throw config_error("weights config: '" + name + "' must be a non-empty array");
        std::vector<double> ws;
        for (const auto& x : arr) {
            if (!x.is_number())
                throw config_error("weights config: '" + name + "' has a non-numeric entry");
            ws.push_back(x.get<double>());
        }
        w.per_rule[name] = std::move(ws);
    }
    return w;
}

ScoreWeights load_weights_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot open weights config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_weights(buf.str());
}

}  // namespace slr
