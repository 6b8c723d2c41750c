#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "slr/raster.hpp"
#include "slr/solver.hpp"
#include "slr/synth.hpp"

namespace slr {

/// Doubles in emitted documents are rounded to at most 6 fractional digits.
double round6(double v);

/// Detection report with stable key order: query, image, parameters echo,
/// truncation flag, detections sorted by descending score.
nlohmann::ordered_json detection_document(const Query& query, const std::string& image_path,
                                          const SolverContext& ctx, const SolveResult& result);

/// Ground-truth sidecar for a synthesized scene.
nlohmann::ordered_json truth_document(const std::string& image_path,
                                      const std::vector<RectTruth>& truth);

/// SVG overlay at the source image size: one polygon per detection, each
/// annotated with its score.
std::string detections_svg(int width, int height, const SolveResult& result);

/// Weights config: a JSON object mapping rule name to an array of positive
/// reals, e.g. {"house": [1, 0.5, 0.5, 1]}. Throws config_error on anything
/// else.
ScoreWeights parse_weights(std::string_view text);
ScoreWeights load_weights_file(const std::string& path);

}  // namespace slr
