#include "slr/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <thread>

#include "slr/errors.hpp"

namespace slr {

void CandidateConfig::validate() const {
    if (stride < 1) throw config_error("candidate stride must be >= 1");
    if (!(angle_tol > 0.0)) throw config_error("angle tolerance must be positive");
    if (!(len_tol > 0.0)) throw config_error("length tolerance must be positive");
    if (sample_step < 0) throw config_error("sampling step must be >= 0");
}

void SearchLimits::validate() const {
    if (depth_bound < 1) throw config_error("recursion depth bound must be >= 1");
    if (max_expansions < 1) throw config_error("expansion budget must be >= 1");
    if (top_k < 1) throw config_error("top-K must be >= 1");
    if (!(nms_radius >= 0.0)) throw config_error("suppression radius must be >= 0");
}

void SolverContext::validate() const {
    if (!image) throw config_error("solver context has no image");
    params.validate();
    candidates.validate();
    limits.validate();
    if (threads < 1) throw config_error("thread count must be >= 1");
    for (const auto& [name, w] : weights.per_rule) {
        if (w.empty()) throw config_error("empty weight list for rule '" + name + "'");
        bool positive = false;
        for (double x : w) {
            if (x < 0.0) throw config_error("negative weight for rule '" + name + "'");
            if (x > 0.0) positive = true;
        }
        if (!positive) throw config_error("all-zero weights for rule '" + name + "'");
    }
}

Query parse_query(std::string_view text) {
    size_t i = 0;
    auto col = [&] { return static_cast<int>(i) + 1; };
    auto skip = [&] {
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    };
    auto ident = [&]() -> std::string {
        skip();
        size_t start = i;
        if (i >= text.size() || text[i] < 'a' || text[i] > 'z')
            throw parse_error(1, col(), "expected identifier");
        while (i < text.size() &&
               ((text[i] >= 'a' && text[i] <= 'z') || (text[i] >= '0' && text[i] <= '9')))
            ++i;
        return std::string(text.substr(start, i - start));
    };

    Query q;
    q.name = ident();
    skip();
    if (i >= text.size() || text[i] != '(') throw parse_error(1, col(), "expected '('");
    ++i;
    for (;;) {
        q.vars.push_back(ident());
        skip();
        if (i < text.size() && text[i] == ',') {
            ++i;
            continue;
        }
        break;
    }
    if (i >= text.size() || text[i] != ')') throw parse_error(1, col(), "expected ')'");
    ++i;
    skip();
    if (i != text.size()) throw parse_error(1, col(), "trailing characters after query");
    return q;
}

std::vector<Point> candidate_points(const GrayImage& image, const CandidateConfig& cfg) {
    std::vector<Point> out;
    for (int y = 0; y < image.height(); y += cfg.stride)
        for (int x = 0; x < image.width(); x += cfg.stride)
            out.push_back(Point{static_cast<double>(x), static_cast<double>(y)});
    return out;
}

namespace {

bool wedge_accepts(const WedgeConstraint& w, Point p, double tol) {
    if (p == w.vertex || w.ref == w.vertex) return false;
    double a = w.unbound_is_first ? angle(p, w.vertex, w.ref).degrees
                                  : angle(w.ref, w.vertex, p).degrees;
    return std::abs(a - w.target_deg) <= tol;
}

}  // namespace

std::vector<Point> generative_candidates(const GrayImage& image, const CandidateConfig& cfg,
                                         const PendingConstraints& pending) {
    if (pending.empty()) return candidate_points(image, cfg);

    double x_lo = 0.0, y_lo = 0.0;
    double x_hi = image.width() - 1.0, y_hi = image.height() - 1.0;
    for (const DiskConstraint& d : pending.disks) {
        if (d.radius < 0.0) return {};
        x_lo = std::max(x_lo, d.center.x - d.radius);
        x_hi = std::min(x_hi, d.center.x + d.radius);
        y_lo = std::max(y_lo, d.center.y - d.radius);
        y_hi = std::min(y_hi, d.center.y + d.radius);
    }
    std::vector<Point> out;
    if (x_lo > x_hi || y_lo > y_hi) return out;

    int step = cfg.effective_step();
    int i0 = std::max(0, static_cast<int>(std::floor(x_lo / step)));
    int i1 = static_cast<int>(std::ceil(x_hi / step));
    int j0 = std::max(0, static_cast<int>(std::floor(y_lo / step)));
    int j1 = static_cast<int>(std::ceil(y_hi / step));

    for (int j = j0; j <= j1; ++j) {
        double y = static_cast<double>(j) * step;
        if (y >= image.height()) break;
        for (int i = i0; i <= i1; ++i) {
            double x = static_cast<double>(i) * step;
            if (x >= image.width()) break;
            Point p{x, y};
            bool ok = true;
            for (const DiskConstraint& d : pending.disks)
                if (len(p, d.center) > d.radius) {
                    ok = false;
                    break;
                }
            if (ok)
                for (const WedgeConstraint& w : pending.wedges)
                    if (!wedge_accepts(w, p, cfg.angle_tol)) {
                        ok = false;
                        break;
                    }
            if (ok) out.push_back(p);
        }
    }
    return out;
}

double score(std::span<const double> strengths, std::span<const double> weights) {
    if (strengths.size() != weights.size())
        throw contract_error("score: strength/weight length mismatch");
    double s = 0.0;
    for (size_t i = 0; i < strengths.size(); ++i) s += strengths[i] * weights[i];
    return s;
}

PruneDecision bound_and_prune(double partial_score, std::span<const double> remaining_weights,
                              double incumbent) {
    double bound = partial_score;
    for (double w : remaining_weights) bound += w;
    return bound < incumbent ? PruneDecision::prune : PruneDecision::keep_going;
}

namespace {

// ---- compiled program ----------------------------------------------------

struct CTerm {
    bool is_var = true;
    int local = -1;
    double lit = 0.0;
};

struct CGoal {
    Goal::Kind kind = Goal::Kind::call;
    BuiltinFn fn = BuiltinFn::line;
    CmpOp op = CmpOp::eq;
    std::vector<CTerm> args;
    CTerm lhs, rhs;
    int target = -1;      // predicate id for user calls
    int line_index = -1;  // position among the clause's line goals
};

struct CClause {
    int nparams = 0;
    int nlocals = 0;
    int line_goals = 0;
    bool has_calls = false;
    std::vector<CGoal> goals;
};

struct Program {
    std::vector<CClause> clauses;                       // same indexing as RuleSet::clauses
    std::vector<const std::vector<int>*> pred_clauses;  // predicate id -> clause indices
    std::map<std::pair<std::string, int>, int> pred_ids;
};

Program compile(const RuleSet& rs) {
    Program prog;
    for (const auto& [key, idxs] : rs.index) {
        prog.pred_ids[key] = static_cast<int>(prog.pred_clauses.size());
        prog.pred_clauses.push_back(&idxs);
    }
    prog.clauses.resize(rs.clauses.size());
    for (size_t ci = 0; ci < rs.clauses.size(); ++ci) {
        const Clause& src = rs.clauses[ci];
        CClause& cc = prog.clauses[ci];
        cc.nparams = src.arity();
        std::map<std::string, int> slots;
        for (int i = 0; i < cc.nparams; ++i) slots[src.params[i]] = i;
        auto slot_of = [&](const std::string& name) {
            auto it = slots.find(name);
            if (it != slots.end()) return it->second;
            int s = static_cast<int>(slots.size());
            slots[name] = s;
            return s;
        };
        auto cterm = [&](const Term& t) {
            CTerm c;
            if (t.kind == Term::Kind::variable) {
                c.is_var = true;
                c.local = slot_of(t.name);
            } else {
                c.is_var = false;
                c.lit = t.value;
            }
            return c;
        };
        for (const Goal& g : src.body) {
            CGoal cg;
            cg.kind = g.kind;
            switch (g.kind) {
                case Goal::Kind::builtin:
                    cg.fn = g.fn;
                    for (const Term& t : g.args) cg.args.push_back(cterm(t));
                    if (g.fn == BuiltinFn::line) cg.line_index = cc.line_goals++;
                    break;
                case Goal::Kind::comparison:
                    cg.op = g.op;
                    cg.lhs = cterm(g.lhs);
                    cg.rhs = cterm(g.rhs);
                    break;
                case Goal::Kind::call:
                    for (const Term& t : g.args) cg.args.push_back(cterm(t));
                    cg.target = prog.pred_ids.at({g.name, static_cast<int>(g.args.size())});
                    cc.has_calls = true;
                    break;
            }
            cc.goals.push_back(std::move(cg));
        }
        cc.nlocals = static_cast<int>(slots.size());
    }
    return prog;
}

// ---- search machine ------------------------------------------------------

struct Cell {
    enum Kind : std::uint8_t { unbound, point, scalar };
    enum Origin : std::uint8_t { none, from_line, from_len, from_angle };
    Kind kind = unbound;
    Origin origin = none;
    Point p{};
    double s = 0.0;
};

struct Solution {
    std::vector<Point> points;
    std::vector<Segment> segments;
    double value = 0.0;
};

struct Activation {
    const CClause* cl = nullptr;
    std::vector<int> cells;  // local slot -> cell index
    int depth = 1;
    bool prune_here = false;
    double partial = 0.0;
    const std::vector<double>* sched_w = nullptr;
    const std::vector<double>* sched_suffix = nullptr;
};

struct Cont {
    Activation* act;
    size_t gi;
    Cont* next;
};

class Machine {
public:
    Machine(const Program& prog, const SolverContext& ctx, int query_pred, size_t query_arity,
            const std::vector<double>* weight_override, int enum_offset, int enum_step)
        : prog_(prog),
          ctx_(ctx),
          img_(*ctx.image),
          query_pred_(query_pred),
          query_arity_(query_arity),
          override_(weight_override),
          enum_offset_(enum_offset),
          enum_step_(enum_step) {
        prune_enabled_ = ctx.prune && enum_step_ == 1;
        if (prune_enabled_) build_schedules();
    }

    void run() {
        for (size_t i = 0; i < query_arity_; ++i) query_cells_.push_back(new_cell());
        for (int cid : *prog_.pred_clauses[query_pred_]) {
            Mark m = mark();
            Activation act;
            setup_activation(act, cid, 1, [&](int param) { return query_cells_[param]; });
            if (prune_enabled_ && !act.cl->has_calls) {
                act.prune_here = true;
                act.sched_w = &sched_w_[cid];
                act.sched_suffix = &sched_suffix_[cid];
            }
            if (run_goals(act, 0, nullptr)) break;
            undo(m);
        }
    }

    std::vector<Solution> solutions;
    SolveStats stats;

private:
    const Program& prog_;
    const SolverContext& ctx_;
    const GrayImage& img_;
    int query_pred_;
    size_t query_arity_;
    const std::vector<double>* override_;
    int enum_offset_, enum_step_;
    bool prune_enabled_ = false;

    std::vector<Cell> cells_;
    std::vector<int> trail_;
    std::vector<Segment> segs_;
    std::vector<int> query_cells_;
    std::map<int, std::vector<double>> sched_w_, sched_suffix_;
    double incumbent_ = -std::numeric_limits<double>::infinity();
    bool first_enum_pending_ = true;
    bool abort_ = false;

    struct Mark {
        size_t trail, cells, segs;
    };

    Mark mark() const { return {trail_.size(), cells_.size(), segs_.size()}; }

    void undo(const Mark& m) {
        while (trail_.size() > m.trail) {
            Cell& c = cells_[trail_.back()];
            c.kind = Cell::unbound;
            c.origin = Cell::none;
            trail_.pop_back();
        }
        cells_.resize(m.cells);
        segs_.resize(m.segs);
    }

    int new_cell() {
        cells_.emplace_back();
        return static_cast<int>(cells_.size()) - 1;
    }

    int new_literal_cell(double v) {
        int ci = new_cell();
        cells_[ci].kind = Cell::scalar;
        cells_[ci].s = v;
        return ci;
    }

    void bind_point(int ci, Point p) {
        Cell& c = cells_[ci];
        c.kind = Cell::point;
        c.p = p;
        trail_.push_back(ci);
    }

    void bind_scalar(int ci, double v, Cell::Origin origin) {
        Cell& c = cells_[ci];
        c.kind = Cell::scalar;
        c.s = v;
        c.origin = origin;
        trail_.push_back(ci);
    }

    const Cell& cell(const Activation& act, const CTerm& t) const {
        return cells_[act.cells[t.local]];
    }

    void build_schedules() {
        for (int cid : *prog_.pred_clauses[query_pred_]) {
            const CClause& cl = prog_.clauses[cid];
            if (cl.has_calls) continue;
            int k = cl.line_goals;
            std::vector<double> w;
            if (override_ && static_cast<int>(override_->size()) == k)
                w = *override_;
            else
                w.assign(k, k > 0 ? 1.0 / k : 0.0);
            std::vector<double> suffix(k + 1, 0.0);
            for (int i = k - 1; i >= 0; --i) suffix[i] = suffix[i + 1] + w[i];
            sched_w_[cid] = std::move(w);
            sched_suffix_[cid] = std::move(suffix);
        }
    }

    template <typename ParamCell>
    void setup_activation(Activation& act, int cid, int depth, ParamCell param_cell) {
        act.cl = &prog_.clauses[cid];
        act.depth = depth;
        act.cells.resize(act.cl->nlocals);
        for (int s = 0; s < act.cl->nlocals; ++s)
            act.cells[s] = s < act.cl->nparams ? param_cell(s) : new_cell();
    }

    bool tick() {
        if (++stats.expansions > ctx_.limits.max_expansions) {
            stats.truncated = true;
            abort_ = true;
        }
        return abort_;
    }

    double eq_tolerance(Cell::Origin a, Cell::Origin b) const {
        double tol = 1e-9;
        if (a == Cell::from_angle || b == Cell::from_angle)
            tol = std::max(tol, ctx_.candidates.angle_tol);
        if (a == Cell::from_len || b == Cell::from_len)
            tol = std::max(tol, ctx_.candidates.len_tol);
        return tol;
    }

    // Every run_* function returns true when the whole search must stop.

    bool run_goals(Activation& act, size_t gi, Cont* k) {
        if (abort_) return true;
        if (gi == act.cl->goals.size()) return body_done(k);
        const CGoal& g = act.cl->goals[gi];
        switch (g.kind) {
            case Goal::Kind::comparison: {
                if (tick()) return true;
                return eval_comparison(act, g) ? run_goals(act, gi + 1, k) : false;
            }
            case Goal::Kind::builtin:
                return bind_points_then_eval(act, gi, k, g, 0);
            case Goal::Kind::call: {
                if (tick()) return true;
                if (act.depth + 1 > ctx_.limits.depth_bound) {
                    ++stats.depth_exceeded;
                    return false;
                }
                for (int cid : *prog_.pred_clauses[g.target]) {
                    Mark m = mark();
                    Activation child;
                    setup_activation(child, cid, act.depth + 1, [&](int param) {
                        const CTerm& t = g.args[param];
                        return t.is_var ? act.cells[t.local] : new_literal_cell(t.lit);
                    });
                    Cont cont{&act, gi + 1, k};
                    if (run_goals(child, 0, &cont)) return true;
                    undo(m);
                }
                return false;
            }
        }
        return false;
    }

    bool body_done(Cont* k) {
        if (k) return run_goals(*k->act, k->gi, k->next);
        emit();
        return abort_;
    }

    bool bind_points_then_eval(Activation& act, size_t gi, Cont* k, const CGoal& g,
                               size_t arg_i) {
        size_t npoints = g.args.size() - 1;
        while (arg_i < npoints && cell(act, g.args[arg_i]).kind != Cell::unbound) ++arg_i;
        if (arg_i >= npoints) return eval_builtin(act, gi, k, g);

        std::vector<Point> cands = candidates_for(act, gi, g, arg_i);
        int target_cell = act.cells[g.args[arg_i].local];
        bool first_here = first_enum_pending_;
        first_enum_pending_ = false;
        size_t start = first_here ? static_cast<size_t>(enum_offset_) : 0;
        size_t step = first_here ? static_cast<size_t>(enum_step_) : 1;
        for (size_t i = start; i < cands.size(); i += step) {
            if (tick()) return true;
            Mark m = mark();
            bind_point(target_cell, cands[i]);
            if (bind_points_then_eval(act, gi, k, g, arg_i + 1)) return true;
            undo(m);
        }
        first_enum_pending_ = first_here;
        return false;
    }

    bool eval_builtin(Activation& act, size_t gi, Cont* k, const CGoal& g) {
        if (tick()) return true;
        Point pts[3];
        size_t npoints = g.args.size() - 1;
        for (size_t i = 0; i < npoints; ++i) {
            const Cell& c = cell(act, g.args[i]);
            if (c.kind != Cell::point) return false;
            pts[i] = c.p;
        }

        double out = 0.0;
        Cell::Origin origin = Cell::none;
        switch (g.fn) {
            case BuiltinFn::line:
                if (len(pts[0], pts[1]) < 2.0) return false;
                out = line(img_, pts[0], pts[1], ctx_.params).value;
                origin = Cell::from_line;
                break;
            case BuiltinFn::len:
                out = len(pts[0], pts[1]);
                origin = Cell::from_len;
                break;
            case BuiltinFn::angle:
                if (pts[0] == pts[1] || pts[2] == pts[1]) return false;
                out = angle(pts[0], pts[1], pts[2]).degrees;
                origin = Cell::from_angle;
                break;
        }

        Mark m = mark();
        int out_cell = act.cells[g.args.back().local];
        const Cell& oc = cells_[out_cell];
        if (oc.kind == Cell::unbound) {
            bind_scalar(out_cell, out, origin);
        } else if (oc.kind == Cell::scalar) {
            if (std::abs(oc.s - out) > eq_tolerance(oc.origin, origin)) return false;
        } else {
            return false;
        }

        double saved_partial = act.partial;
        if (g.fn == BuiltinFn::line) {
            segs_.push_back(Segment{pts[0], pts[1], out});
            if (act.prune_here) {
                act.partial += (*act.sched_w)[g.line_index] * out;
                if (act.partial + (*act.sched_suffix)[g.line_index + 1] < incumbent_) {
                    act.partial = saved_partial;
                    undo(m);
                    return false;
                }
            }
        }
        bool stop = run_goals(act, gi + 1, k);
        act.partial = saved_partial;
        if (!stop) undo(m);
        return stop;
    }

    bool eval_comparison(const Activation& act, const CGoal& g) const {
        double a, b;
        Cell::Origin oa = Cell::none, ob = Cell::none;
        if (g.lhs.is_var) {
            const Cell& c = cell(act, g.lhs);
            if (c.kind != Cell::scalar) return false;
            a = c.s;
            oa = c.origin;
        } else {
            a = g.lhs.lit;
        }
        if (g.rhs.is_var) {
            const Cell& c = cell(act, g.rhs);
            if (c.kind != Cell::scalar) return false;
            b = c.s;
            ob = c.origin;
        } else {
            b = g.rhs.lit;
        }
        switch (g.op) {
            case CmpOp::lt: return a < b;
            case CmpOp::le: return a <= b;
            case CmpOp::gt: return a > b;
            case CmpOp::ge: return a >= b;
            case CmpOp::eq: return std::abs(a - b) <= eq_tolerance(oa, ob);
        }
        return false;
    }

    // Harvests look-ahead constraints for the unbound point at g.args[arg_i],
    // scanning the rest of the clause body. Only patterns whose filter
    // acceptance provably contains the later runtime acceptance are used, so
    // filtering never loses a solution reachable on the lattice.
    std::vector<Point> candidates_for(const Activation& act, size_t gi, const CGoal& g,
                                      size_t arg_i) {
        if (!ctx_.generative) return candidate_points(img_, ctx_.candidates);

        int uc = act.cells[g.args[arg_i].local];
        auto cell_of = [&](const CTerm& t) { return t.is_var ? act.cells[t.local] : -1; };
        auto bound_point = [&](const CTerm& t, Point& p) {
            if (!t.is_var) return false;
            const Cell& c = cells_[act.cells[t.local]];
            if (c.kind != Cell::point) return false;
            p = c.p;
            return true;
        };

        // Comparison constraints on a scalar cell: (op, rhs value, rhs origin).
        struct CmpFact {
            CmpOp op;
            double value;
            Cell::Origin origin;
        };
        auto facts_for = [&](int scalar_cell, size_t from_goal) {
            std::vector<CmpFact> facts;
            const auto& goals = act.cl->goals;
            for (size_t j = from_goal; j < goals.size(); ++j) {
                const CGoal& h = goals[j];
                if (h.kind != Goal::Kind::comparison) continue;
                const CTerm* other = nullptr;
                CmpOp op = h.op;
                if (cell_of(h.lhs) == scalar_cell) {
                    other = &h.rhs;
                } else if (cell_of(h.rhs) == scalar_cell) {
                    other = &h.lhs;
                    switch (h.op) {
                        case CmpOp::lt: op = CmpOp::gt; break;
                        case CmpOp::le: op = CmpOp::ge; break;
                        case CmpOp::gt: op = CmpOp::lt; break;
                        case CmpOp::ge: op = CmpOp::le; break;
                        case CmpOp::eq: op = CmpOp::eq; break;
                    }
                } else {
                    continue;
                }
                if (!other->is_var) {
                    facts.push_back({op, other->lit, Cell::none});
                } else {
                    const Cell& c = cells_[act.cells[other->local]];
                    if (c.kind == Cell::scalar) facts.push_back({op, c.s, c.origin});
                }
            }
            return facts;
        };

        PendingConstraints pending;
        const auto& goals = act.cl->goals;
        for (size_t j = gi; j < goals.size(); ++j) {
            const CGoal& h = goals[j];
            if (h.kind != Goal::Kind::builtin) continue;
            if (h.fn == BuiltinFn::len) {
                Point other;
                bool involved = false;
                if (cell_of(h.args[0]) == uc)
                    involved = bound_point(h.args[1], other);
                else if (cell_of(h.args[1]) == uc)
                    involved = bound_point(h.args[0], other);
                if (!involved) continue;
                const Cell& oc = cells_[cell_of(h.args[2])];
                if (oc.kind == Cell::scalar) {
                    pending.disks.push_back(
                        {other, oc.s + eq_tolerance(oc.origin, Cell::from_len)});
                } else if (oc.kind == Cell::unbound) {
                    for (const CmpFact& f : facts_for(cell_of(h.args[2]), j + 1)) {
                        if (f.op == CmpOp::lt || f.op == CmpOp::le)
                            pending.disks.push_back({other, f.value + ctx_.candidates.len_tol});
                        else if (f.op == CmpOp::eq)
                            pending.disks.push_back(
                                {other, f.value + eq_tolerance(f.origin, Cell::from_len)});
                    }
                }
            } else if (h.fn == BuiltinFn::angle) {
                Point vertex, ref;
                bool first;
                if (cell_of(h.args[0]) == uc && bound_point(h.args[1], vertex) &&
                    bound_point(h.args[2], ref)) {
                    first = true;
                } else if (cell_of(h.args[2]) == uc && bound_point(h.args[1], vertex) &&
                           bound_point(h.args[0], ref)) {
                    first = false;
                } else {
                    continue;
                }
                const Cell& oc = cells_[cell_of(h.args[3])];
                if (oc.kind == Cell::scalar) {
                    if (eq_tolerance(oc.origin, Cell::from_angle) <= ctx_.candidates.angle_tol)
                        pending.wedges.push_back({vertex, ref, oc.s, first});
                } else if (oc.kind == Cell::unbound) {
                    for (const CmpFact& f : facts_for(cell_of(h.args[3]), j + 1))
                        if (f.op == CmpOp::eq &&
                            eq_tolerance(f.origin, Cell::from_angle) <= ctx_.candidates.angle_tol)
                            pending.wedges.push_back({vertex, ref, f.value, first});
                }
            }
        }
        return generative_candidates(img_, ctx_.candidates, pending);
    }

    void emit() {
        std::vector<Point> pts;
        pts.reserve(query_cells_.size());
        for (int ci : query_cells_) {
            const Cell& c = cells_[ci];
            if (c.kind != Cell::point) return;
            pts.push_back(c.p);
        }
        ++stats.solutions_found;

        size_t nsegs = segs_.size();
        std::vector<double> b(nsegs);
        for (size_t i = 0; i < nsegs; ++i) b[i] = segs_[i].strength;
        double value;
        if (override_ && override_->size() == nsegs) {
            value = score(b, *override_);
        } else if (nsegs == 0) {
            value = 0.0;
        } else {
            std::vector<double> w(nsegs, 1.0 / static_cast<double>(nsegs));
            value = score(b, w);
        }
        if (value > incumbent_) incumbent_ = value;
        solutions.push_back(Solution{std::move(pts), segs_, value});

        // Exact duplicates from overlapping disjuncts can pile up; compact now
        // and then so memory stays proportional to the distinct set.
        if (solutions.size() >= compact_at_) {
            sort_dedup(solutions);
            compact_at_ = std::max<size_t>(solutions.size() * 2, 1 << 16);
        }
    }

    size_t compact_at_ = 1 << 16;

public:
    static bool solution_before(const Solution& a, const Solution& b) {
        if (a.value != b.value) return a.value > b.value;
        if (a.points.size() != b.points.size()) return a.points.size() < b.points.size();
        for (size_t i = 0; i < a.points.size(); ++i) {
            if (a.points[i] != b.points[i]) return lex_less(a.points[i], b.points[i]);
        }
        if (a.segments.size() != b.segments.size()) return a.segments.size() < b.segments.size();
        for (size_t i = 0; i < a.segments.size(); ++i) {
            const Segment &x = a.segments[i], &y = b.segments[i];
            if (x.a != y.a) return lex_less(x.a, y.a);
            if (x.b != y.b) return lex_less(x.b, y.b);
            if (x.strength != y.strength) return x.strength < y.strength;
        }
        return false;
    }

    static bool solution_equal(const Solution& a, const Solution& b) {
        if (a.value != b.value || a.points.size() != b.points.size() ||
            a.segments.size() != b.segments.size())
            return false;
        for (size_t i = 0; i < a.points.size(); ++i)
            if (a.points[i] != b.points[i]) return false;
        for (size_t i = 0; i < a.segments.size(); ++i) {
            const Segment &x = a.segments[i], &y = b.segments[i];
            if (x.a != y.a || x.b != y.b || x.strength != y.strength) return false;
        }
        return true;
    }

    static void sort_dedup(std::vector<Solution>& sols) {
        std::sort(sols.begin(), sols.end(), solution_before);
        sols.erase(std::unique(sols.begin(), sols.end(), solution_equal), sols.end());
    }
};

bool nms_conflict(const Solution& a, const Solution& b, double radius) {
    for (size_t i = 0; i < a.points.size(); ++i)
        if (len(a.points[i], b.points[i]) > radius) return false;
    return true;
}

}  // namespace

SolveResult solve(const Query& query, const RuleSet& rules, const SolverContext& ctx) {
    ctx.validate();
    const std::vector<int>* cids = rules.find(query.name, static_cast<int>(query.vars.size()));
    if (!cids)
        throw unknown_predicate(query.name + "/" + std::to_string(query.vars.size()));

    Program prog = compile(rules);
    int query_pred = prog.pred_ids.at({query.name, static_cast<int>(query.vars.size())});
    const std::vector<double>* override_w = nullptr;
    if (auto it = ctx.weights.per_rule.find(query.name); it != ctx.weights.per_rule.end())
        override_w = &it->second;

    std::vector<Solution> all;
    SolveStats stats;
    int threads = ctx.threads;
    if (threads == 1) {
        Machine m(prog, ctx, query_pred, query.vars.size(), override_w, 0, 1);
        m.run();
        all = std::move(m.solutions);
        stats = m.stats;
    } else {
        std::vector<std::unique_ptr<Machine>> machines;
        for (int t = 0; t < threads; ++t)
            machines.push_back(std::make_unique<Machine>(prog, ctx, query_pred,
                                                         query.vars.size(), override_w, t,
                                                         threads));
        std::vector<std::thread> pool;
        for (auto& m : machines) pool.emplace_back([&m] { m->run(); });
        for (auto& th : pool) th.join();
        for (auto& m : machines) {
            all.insert(all.end(), m->solutions.begin(), m->solutions.end());
            stats.expansions += m->stats.expansions;
            stats.depth_exceeded += m->stats.depth_exceeded;
            stats.solutions_found += m->stats.solutions_found;
            stats.truncated = stats.truncated || m->stats.truncated;
        }
    }

    Machine::sort_dedup(all);

    std::vector<const Solution*> kept;
    for (const Solution& s : all) {
        bool conflict = false;
        for (const Solution* k : kept)
            if (nms_conflict(*k, s, ctx.limits.nms_radius)) {
                conflict = true;
                break;
            }
        if (!conflict) kept.push_back(&s);
    }
    if (static_cast<int>(kept.size()) > ctx.limits.top_k) kept.resize(ctx.limits.top_k);

    SolveResult result;
    result.stats = stats;
    for (const Solution* s : kept) {
        Detection d;
        d.score = s->value;
        d.segments = s->segments;
        for (size_t i = 0; i < query.vars.size(); ++i)
            d.bindings.emplace_back(query.vars[i], s->points[i]);
        result.detections.push_back(std::move(d));
    }
    return result;
}

}  // namespace slr
