#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slr/geometry.hpp"
#include "slr/raster.hpp"
#include "slr/rules.hpp"

namespace slr {

/// Candidate enumeration. Unbound point variables range over the grid
/// (i*stride, j*stride). sample_step is the lattice used when look-ahead
/// constraints restrict a point (0 means "same as stride"); a smaller value
/// recovers resolution along constrained loci at the cost of leaving the
/// plain grid, so results then need not match a grid-only search.
struct CandidateConfig {
    int stride = 4;
    double angle_tol = 3.0;  // degrees, for scalar "=" on angle outputs
    double len_tol = 2.0;    // pixels, for scalar "=" on len outputs
    int sample_step = 0;

    int effective_step() const noexcept { return sample_step > 0 ? sample_step : stride; }
    void validate() const;
};

/// Per-rule weight overrides for the score convolution, keyed by query
/// predicate name. An override applies when its length equals the number of
/// line goals in the solution's derivation; otherwise weights fall back to
/// uniform 1/k.
struct ScoreWeights {
    std::map<std::string, std::vector<double>> per_rule;
};

struct SearchLimits {
    int depth_bound = 8;                     // max nesting of user-predicate calls
    long long max_expansions = 10'000'000;   // search step budget
    int top_k = 10;
    double nms_radius = 5.0;

    void validate() const;
};

struct SolverContext {
    const GrayImage* image = nullptr;
    LineParams params;
    CandidateConfig candidates;
    ScoreWeights weights;
    SearchLimits limits;
    bool prune = true;       // branch-and-bound on the score upper bound
    bool generative = true;  // constraint-directed candidate enumeration
    int threads = 1;         // first-enumeration branches evaluated in parallel

    void validate() const;
};

struct Query {
    std::string name;
    std::vector<std::string> vars;
};

/// Parses "name(v1, v2, ...)"; throws parse_error on malformed text.
Query parse_query(std::string_view text);

struct Segment {
    Point a, b;
    double strength = 0.0;
};

struct Detection {
    std::vector<std::pair<std::string, Point>> bindings;  // query-variable order
    std::vector<Segment> segments;                        // line goals in derivation order
    double score = 0.0;
};

struct SolveStats {
    long long expansions = 0;
    long long depth_exceeded = 0;   // branches cut by the recursion depth bound
    long long solutions_found = 0;  // before suppression and truncation to top-K
    bool truncated = false;         // expansion budget ran out
};

struct SolveResult {
    std::vector<Detection> detections;
    SolveStats stats;
};

/// Grid points (i*stride, j*stride) inside the image, row-major.
std::vector<Point> candidate_points(const GrayImage& image, const CandidateConfig& cfg);

/// Look-ahead constraints harvested for one unbound point.
struct DiskConstraint {
    Point center;
    double radius = 0.0;  // already includes the tolerance slack
};

struct WedgeConstraint {
    Point vertex;          // the angle's middle point, bound
    Point ref;             // the bound outer point
    double target_deg = 0.0;
    bool unbound_is_first = false;  // unbound point is the angle's first argument
};

struct PendingConstraints {
    std::vector<DiskConstraint> disks;
    std::vector<WedgeConstraint> wedges;

    bool empty() const noexcept { return disks.empty() && wedges.empty(); }
};

/// Lattice points consistent with every pending constraint, row-major. With
/// no constraints this is exactly candidate_points. Wedge membership uses the
/// same angle computation and tolerance as the solver's scalar "=", so the
/// filter never drops a point the search could accept.
std::vector<Point> generative_candidates(const GrayImage& image, const CandidateConfig& cfg,
                                         const PendingConstraints& pending);

/// Dot product; throws contract_error on length mismatch.
double score(std::span<const double> strengths, std::span<const double> weights);

enum class PruneDecision { keep_going, prune };

/// Admissible branch-and-bound test: optimistic bound is the partial score
/// plus all remaining weights (each strength is at most 1); prune only when
/// even that cannot reach the incumbent.
PruneDecision bound_and_prune(double partial_score, std::span<const double> remaining_weights,
                              double incumbent);

/// Depth-first search over candidate bindings for the query against the rule
/// set. Scalar "=" is tolerant (angle_tol for angle outputs, len_tol for len
/// outputs, 1e-9 otherwise); other comparisons are exact. Degenerate geometry
/// on a tried candidate fails that binding silently. Results are exact
/// duplicates removed, suppressed within nms_radius (two detections conflict
/// when every corresponding point pair is within the radius), sorted by
/// descending score with lexicographic point tie-break, and truncated to
/// top_k. Throws unknown_predicate if the query does not resolve.
SolveResult solve(const Query& query, const RuleSet& rules, const SolverContext& ctx);

}  // namespace slr
