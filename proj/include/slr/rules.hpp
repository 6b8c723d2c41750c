#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "slr/errors.hpp"

namespace slr {

enum class CmpOp { lt, le, gt, ge, eq };
enum class BuiltinFn { line, angle, len };

/// Argument position: a variable reference or a numeric literal.
struct Term {
    enum class Kind { variable, number };
    Kind kind = Kind::variable;
    std::string name;     // variable
    double value = 0.0;   // number
    int line = 0, column = 0;

    static Term var(std::string n) { return Term{Kind::variable, std::move(n), 0.0, 0, 0}; }
    static Term num(double v) { return Term{Kind::number, {}, v, 0, 0}; }
};

struct Goal {
    enum class Kind { builtin, comparison, call };
    Kind kind = Kind::call;

    BuiltinFn fn = BuiltinFn::line;  // builtin only
    std::string name;                // call only
    std::vector<Term> args;          // builtin + call

    Term lhs, rhs;                   // comparison only
    CmpOp op = CmpOp::eq;

    int line = 0, column = 0;
};

struct Clause {
    std::string name;
    std::vector<std::string> params;
    std::vector<Goal> body;
    int line = 0, column = 0;

    int arity() const noexcept { return static_cast<int>(params.size()); }
};

/// Validated rule program. Clause order is preserved; it defines the order in
/// which alternative clauses of one predicate are tried.
struct RuleSet {
    std::vector<Clause> clauses;
    std::map<std::pair<std::string, int>, std::vector<int>> index;

    /// Clause indices for (name, arity), or nullptr when undefined.
    const std::vector<int>* find(const std::string& name, int arity) const {
        auto it = index.find({name, arity});
        return it == index.end() ? nullptr : &it->second;
    }
};

/// Parses and validates rule text. The grammar:
///
///   program    := clause+
///   clause     := head ":-" body "."
///   head       := ident "(" ident ("," ident)* ")"
///   body       := goal ("," goal)*
///   goal       := call | comparison
///   call       := ident "(" term ("," term)* ")"
///   comparison := term op term          op in { < <= > >= = }
///   term       := ident | number
///
/// Identifiers are lowercase alphanumeric starting with a letter; all
/// identifiers in argument positions are variables. "%" starts a comment to
/// end of line. Built-ins are line/3, angle/4, len/3; their point arguments
/// and output argument must be variables. Violations throw parse_error with a
/// 1-based line:column position.
RuleSet parse_rules(std::string_view source);

/// Canonical text form; parse_rules(pretty_print(r)) is structurally identical to r.
std::string pretty_print(const RuleSet& rules);

/// Deep structural comparison (numbers compared exactly).
bool structurally_equal(const RuleSet& a, const RuleSet& b);

/// Predicate cycles in the call graph. Recursion is legal; the solver bounds
/// its depth. Each cycle lists the predicate names involved, sorted.
struct RecursionReport {
    std::vector<std::vector<std::string>> cycles;

    bool is_recursive(const std::string& name) const {
        for (const auto& c : cycles)
            for (const auto& n : c)
                if (n == name) return true;
        return false;
    }
};

RecursionReport validate_recursion(const RuleSet& rules);

}  // namespace slr
