#include "slr/rules.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <cstdlib>
#include <set>

namespace slr {
namespace {

enum class Tok { ident, number, lparen, rparen, comma, turnstile, dot, lt, le, gt, ge, eq, end };

struct Token {
    Tok kind = Tok::end;
    std::string text;
    double value = 0.0;
    int line = 1, column = 1;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next() {
        skip_blank();
        Token t;
        t.line = line_;
        t.column = column_;
        if (pos_ >= src_.size()) {
            t.kind = Tok::end;
            return t;
        }
        char c = src_[pos_];
        if (is_lower(c)) {
            size_t start = pos_;
            while (pos_ < src_.size() && is_ident_char(src_[pos_])) advance();
            t.kind = Tok::ident;
            t.text = std::string(src_.substr(start, pos_ - start));
            return t;
        }
        if (is_digit(c) || (c == '-' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
            return lex_number(t);
        }
        switch (c) {
            case '(': advance(); t.kind = Tok::lparen; return t;
            case ')': advance(); t.kind = Tok::rparen; return t;
            case ',': advance(); t.kind = Tok::comma; return t;
            case '.': advance(); t.kind = Tok::dot; return t;
            case '=': advance(); t.kind = Tok::eq; return t;
            case '<':
                advance();
                if (peek() == '=') { advance(); t.kind = Tok::le; } else { t.kind = Tok::lt; }
                return t;
            case '>':
                advance();
                if (peek() == '=') { advance(); t.kind = Tok::ge; } else { t.kind = Tok::gt; }
                return t;
            case ':':
                advance();
                if (peek() == '-') { advance(); t.kind = Tok::turnstile; return t; }
                throw parse_error(t.line, t.column, "expected '-' after ':'");
            default:
                throw parse_error(t.line, t.column, std::string("unexpected character '") + c + "'");
        }
    }

private:
    std::string_view src_;
    size_t pos_ = 0;
    int line_ = 1, column_ = 1;

    static bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
    static bool is_digit(char c) { return c >= '0' && c <= '9'; }
    static bool is_ident_char(char c) { return is_lower(c) || is_digit(c); }

    char peek() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }
    char peek2() const { return pos_ + 1 < src_.size() ? src_[pos_ + 1] : '\0'; }

    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        ++pos_;
    }

    void skip_blank() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else if (c == '%') {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
            } else {
                break;
            }
        }
    }

    Token lex_number(Token& t) {
        size_t start = pos_;
        if (peek() == '-') advance();
        while (is_digit(peek())) advance();
        // A '.' is consumed only when followed by a digit; otherwise it ends
        // the clause, as in "x = 1."
        if (peek() == '.' && is_digit(peek2())) {
            advance();
            while (is_digit(peek())) advance();
        }
        if ((peek() == 'e' || peek() == 'E')) {
            size_t save = pos_;
            int save_line = line_, save_col = column_;
            advance();
            if (peek() == '+' || peek() == '-') advance();
            if (is_digit(peek())) {
                while (is_digit(peek())) advance();
            } else {
                pos_ = save;
                line_ = save_line;
                column_ = save_col;
            }
        }
        t.kind = Tok::number;
        t.text = std::string(src_.substr(start, pos_ - start));
        auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.value);
        if (res.ec != std::errc() || res.ptr != t.text.data() + t.text.size())
            throw parse_error(t.line, t.column, "malformed number '" + t.text + "'");
        return t;
    }
};

const char* op_text(CmpOp op) {
    switch (op) {
        case CmpOp::lt: return "<";
        case CmpOp::le: return "<=";
        case CmpOp::gt: return ">";
        case CmpOp::ge: return ">=";
        case CmpOp::eq: return "=";
    }
    return "?";
}

struct BuiltinSig {
    BuiltinFn fn;
    int arity;
};

const BuiltinSig* builtin_lookup(const std::string& name) {
    static const std::map<std::string, BuiltinSig> table = {
        {"line", {BuiltinFn::line, 3}},
        {"angle", {BuiltinFn::angle, 4}},
        {"len", {BuiltinFn::len, 3}},
    };
    auto it = table.find(name);
    return it == table.end() ? nullptr : &it->second;
}

class Parser {
public:
    explicit Parser(std::string_view src) : lex_(src) { cur_ = lex_.next(); }

    RuleSet parse() {
        RuleSet rs;
        if (cur_.kind == Tok::end)
            throw parse_error(cur_.line, cur_.column, "empty rule program");
        while (cur_.kind != Tok::end) rs.clauses.push_back(parse_clause());
        build_index(rs);
        validate(rs);
        return rs;
    }

private:
    Lexer lex_;
    Token cur_;

    void bump() { cur_ = lex_.next(); }

    Token expect(Tok kind, const char* what) {
        if (cur_.kind != kind)
            throw parse_error(cur_.line, cur_.column, std::string("expected ") + what);
        Token t = cur_;
        bump();
        return t;
    }

    Clause parse_clause() {
        Clause cl;
        Token head = expect(Tok::ident, "predicate name");
        cl.name = head.text;
        cl.line = head.line;
        cl.column = head.column;
        expect(Tok::lparen, "'('");
        for (;;) {
            Token p = expect(Tok::ident, "parameter name");
            cl.params.push_back(p.text);
            if (cur_.kind == Tok::comma) {
                bump();
                continue;
            }
            break;
        }
        expect(Tok::rparen, "')'");
        for (size_t i = 0; i < cl.params.size(); ++i)
            for (size_t j = i + 1; j < cl.params.size(); ++j)
                if (cl.params[i] == cl.params[j])
                    throw parse_error(cl.line, cl.column,
                                      "duplicate head parameter '" + cl.params[i] + "' in " +
                                          cl.name + "/" + std::to_string(cl.params.size()));
        if (builtin_lookup(cl.name))
            throw parse_error(cl.line, cl.column,
                              "cannot define built-in predicate '" + cl.name + "'");
        expect(Tok::turnstile, "':-'");
        for (;;) {
            cl.body.push_back(parse_goal());
            if (cur_.kind == Tok::comma) {
                bump();
                continue;
            }
            break;
        }
        expect(Tok::dot, "'.'");
        return cl;
    }

    Term parse_term() {
        if (cur_.kind == Tok::ident) {
            Term t = Term::var(cur_.text);
            t.line = cur_.line;
            t.column = cur_.column;
            bump();
            return t;
        }
        if (cur_.kind == Tok::number) {
            Term t = Term::num(cur_.value);
            t.line = cur_.line;
            t.column = cur_.column;
            bump();
            return t;
        }
        throw parse_error(cur_.line, cur_.column, "expected variable or number");
    }

    Goal parse_goal() {
        Goal g;
        g.line = cur_.line;
        g.column = cur_.column;
        if (cur_.kind == Tok::ident) {
            Token name = cur_;
            bump();
            if (cur_.kind == Tok::lparen) {
                bump();
                g.name = name.text;
                for (;;) {
                    g.args.push_back(parse_term());
                    if (cur_.kind == Tok::comma) {
                        bump();
                        continue;
                    }
                    break;
                }
                expect(Tok::rparen, "')'");
                if (const BuiltinSig* sig = builtin_lookup(g.name)) {
                    g.kind = Goal::Kind::builtin;
                    g.fn = sig->fn;
                    if (static_cast<int>(g.args.size()) != sig->arity)
                        throw parse_error(g.line, g.column,
                                          "built-in " + g.name + " takes " +
                                              std::to_string(sig->arity) + " arguments, got " +
                                              std::to_string(g.args.size()));
                    for (size_t i = 0; i + 1 < g.args.size(); ++i)
                        if (g.args[i].kind != Term::Kind::variable)
                            throw parse_error(g.args[i].line, g.args[i].column,
                                              "point argument of " + g.name +
                                                  " must be a variable");
                    if (g.args.back().kind != Term::Kind::variable)
                        throw parse_error(g.args.back().line, g.args.back().column,
                                          "output argument of " + g.name + " must be a variable");
                } else {
                    g.kind = Goal::Kind::call;
                }
                return g;
            }
            // Identifier not followed by '(' opens a comparison.
            Term lhs = Term::var(name.text);
            lhs.line = name.line;
            lhs.column = name.column;
            return finish_comparison(std::move(g), std::move(lhs));
        }
        if (cur_.kind == Tok::number) {
            Term lhs = parse_term();
            return finish_comparison(std::move(g), std::move(lhs));
        }
        throw parse_error(cur_.line, cur_.column, "expected goal");
    }

    Goal finish_comparison(Goal g, Term lhs) {
        g.kind = Goal::Kind::comparison;
        g.lhs = std::move(lhs);
        switch (cur_.kind) {
            case Tok::lt: g.op = CmpOp::lt; break;
            case Tok::le: g.op = CmpOp::le; break;
            case Tok::gt: g.op = CmpOp::gt; break;
            case Tok::ge: g.op = CmpOp::ge; break;
            case Tok::eq: g.op = CmpOp::eq; break;
            default:
                throw parse_error(cur_.line, cur_.column, "expected comparison operator");
        }
        bump();
        g.rhs = parse_term();
        return g;
    }

    static void build_index(RuleSet& rs) {
        for (int i = 0; i < static_cast<int>(rs.clauses.size()); ++i) {
            const Clause& c = rs.clauses[i];
            rs.index[{c.name, c.arity()}].push_back(i);
        }
    }

    // Variable kinds are inferred per predicate signature: built-in argument
    // positions force point or scalar, comparisons force scalar, and calls
    // propagate kinds between caller and callee until a fixpoint.
    enum class VKind { unknown, point, scalar };

    static const char* kind_name(VKind k) {
        switch (k) {
            case VKind::point: return "point";
            case VKind::scalar: return "scalar";
            default: return "unknown";
        }
    }

    struct Infer {
        std::map<std::pair<std::string, int>, std::vector<VKind>> sig;
        bool changed = false;

        void meet(VKind& slot, VKind k, int line, int column, const std::string& var) {
            if (k == VKind::unknown) return;
            if (slot == VKind::unknown) {
                slot = k;
                changed = true;
                return;
            }
            if (slot != k)
                throw parse_error(line, column, "variable '" + var + "' used both as " +
                                                    kind_name(slot) + " and " + kind_name(k));
        }
    };

    static void validate(RuleSet& rs) {
        Infer inf;
        for (const Clause& c : rs.clauses)
            inf.sig[{c.name, c.arity()}].assign(c.params.size(), VKind::unknown);

        // Existence, arity, and definition-order checks are one pass; kind
        // inference iterates because callee signatures sharpen over time.
        for (const Clause& c : rs.clauses) {
            std::set<std::string> defined(c.params.begin(), c.params.end());
            for (const Goal& g : c.body) {
                if (g.kind == Goal::Kind::comparison) {
                    for (const Term* t : {&g.lhs, &g.rhs})
                        if (t->kind == Term::Kind::variable && !defined.count(t->name))
                            throw parse_error(t->line, t->column,
                                              "variable '" + t->name +
                                                  "' is not bound before this comparison");
                } else {
                    if (g.kind == Goal::Kind::call &&
                        !rs.find(g.name, static_cast<int>(g.args.size())))
                        throw parse_error(g.line, g.column,
                                          "undefined predicate " + g.name + "/" +
                                              std::to_string(g.args.size()));
                    for (const Term& t : g.args)
                        if (t.kind == Term::Kind::variable) defined.insert(t.name);
                }
            }
        }

        int rounds = 2 * static_cast<int>(rs.clauses.size()) + 2;
        for (int round = 0; round < rounds; ++round) {
            inf.changed = false;
            for (const Clause& c : rs.clauses) {
                std::map<std::string, VKind> local;
                std::vector<VKind>& own = inf.sig[{c.name, c.arity()}];
                for (size_t i = 0; i < c.params.size(); ++i) local[c.params[i]] = own[i];

                auto meet_var = [&](const Term& t, VKind k) {
                    inf.meet(local[t.name], k, t.line, t.column, t.name);
                };

                for (const Goal& g : c.body) {
                    switch (g.kind) {
                        case Goal::Kind::builtin:
                            for (size_t i = 0; i + 1 < g.args.size(); ++i)
                                meet_var(g.args[i], VKind::point);
                            meet_var(g.args.back(), VKind::scalar);
                            break;
                        case Goal::Kind::comparison:
                            for (const Term* t : {&g.lhs, &g.rhs})
                                if (t->kind == Term::Kind::variable)
                                    meet_var(*t, VKind::scalar);
                            break;
                        case Goal::Kind::call: {
                            std::vector<VKind>& callee =
                                inf.sig[{g.name, static_cast<int>(g.args.size())}];
                            for (size_t i = 0; i < g.args.size(); ++i) {
                                const Term& t = g.args[i];
                                if (t.kind == Term::Kind::number) {
                                    inf.meet(callee[i], VKind::scalar, t.line, t.column,
                                             g.name + " argument " + std::to_string(i + 1));
                                } else {
                                    meet_var(t, callee[i]);
                                    inf.meet(callee[i], local[t.name], t.line, t.column, t.name);
                                }
                            }
                            break;
                        }
                    }
                }
                for (size_t i = 0; i < c.params.size(); ++i) {
                    Term fake = Term::var(c.params[i]);
                    fake.line = c.line;
                    fake.column = c.column;
                    inf.meet(own[i], local[c.params[i]], fake.line, fake.column, c.params[i]);
                }
            }
            if (!inf.changed) break;
        }

        // Comparisons may not mention point-kind variables.
        for (const Clause& c : rs.clauses) {
            std::map<std::string, VKind> local;
            const std::vector<VKind>& own = inf.sig[{c.name, c.arity()}];
            for (size_t i = 0; i < c.params.size(); ++i) local[c.params[i]] = own[i];
            for (const Goal& g : c.body) {
                if (g.kind == Goal::Kind::builtin) {
                    for (size_t i = 0; i + 1 < g.args.size(); ++i)
                        local[g.args[i].name] = VKind::point;
                    local[g.args.back().name] = VKind::scalar;
                } else if (g.kind == Goal::Kind::call) {
                    const std::vector<VKind>& callee =
                        inf.sig[{g.name, static_cast<int>(g.args.size())}];
                    for (size_t i = 0; i < g.args.size(); ++i)
                        if (g.args[i].kind == Term::Kind::variable &&
                            local[g.args[i].name] == VKind::unknown)
                            local[g.args[i].name] = callee[i];
                } else {
                    for (const Term* t : {&g.lhs, &g.rhs})
                        if (t->kind == Term::Kind::variable &&
                            local[t->name] == VKind::point)
                            throw parse_error(t->line, t->column,
                                              "point variable '" + t->name +
                                                  "' cannot appear in a comparison");
                }
            }
        }
    }
};

void format_number(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    assert(res.ec == std::errc());
    out.append(buf, res.ptr);
}

void format_term(std::string& out, const Term& t) {
    if (t.kind == Term::Kind::variable)
        out += t.name;
    else
        format_number(out, t.value);
}

}  // namespace

RuleSet parse_rules(std::string_view source) { return Parser(source).parse(); }

std::string pretty_print(const RuleSet& rules) {
    std::string out;
    for (size_t ci = 0; ci < rules.clauses.size(); ++ci) {
        const Clause& c = rules.clauses[ci];
        if (ci) out += '\n';
        out += c.name;
        out += '(';
        for (size_t i = 0; i < c.params.size(); ++i) {
            if (i) out += ", ";
            out += c.params[i];
        }
        out += ") :-\n";
        for (size_t gi = 0; gi < c.body.size(); ++gi) {
            const Goal& g = c.body[gi];
            out += "    ";
            if (g.kind == Goal::Kind::comparison) {
                format_term(out, g.lhs);
                out += ' ';
                out += op_text(g.op);
                out += ' ';
                format_term(out, g.rhs);
            } else {
                out += g.name;
                out += '(';
                for (size_t i = 0; i < g.args.size(); ++i) {
                    if (i) out += ", ";
                    format_term(out, g.args[i]);
                }
                out += ')';
            }
            out += gi + 1 < c.body.size() ? ",\n" : ".\n";
        }
    }
    return out;
}

bool structurally_equal(const RuleSet& a, const RuleSet& b) {
    auto term_eq = [](const Term& x, const Term& y) {
        if (x.kind != y.kind) return false;
        return x.kind == Term::Kind::variable ? x.name == y.name : x.value == y.value;
    };
    if (a.clauses.size() != b.clauses.size()) return false;
    for (size_t i = 0; i < a.clauses.size(); ++i) {
        const Clause& ca = a.clauses[i];
        const Clause& cb = b.clauses[i];
        if (ca.name != cb.name || ca.params != cb.params) return false;
        if (ca.body.size() != cb.body.size()) return false;
        for (size_t j = 0; j < ca.body.size(); ++j) {
            const Goal& ga = ca.body[j];
            const Goal& gb = cb.body[j];
            if (ga.kind != gb.kind) return false;
            if (ga.kind == Goal::Kind::comparison) {
                if (ga.op != gb.op || !term_eq(ga.lhs, gb.lhs) || !term_eq(ga.rhs, gb.rhs))
                    return false;
            } else {
                if (ga.name != gb.name || ga.args.size() != gb.args.size()) return false;
                if (ga.kind == Goal::Kind::builtin && ga.fn != gb.fn) return false;
                for (size_t k = 0; k < ga.args.size(); ++k)
                    if (!term_eq(ga.args[k], gb.args[k])) return false;
            }
        }
    }
    return true;
}

namespace {

// Tarjan strongly connected components over the predicate call graph.
struct Scc {
    const RuleSet& rs;
    std::vector<std::pair<std::string, int>> nodes;
    std::map<std::pair<std::string, int>, int> id;
    std::vector<std::vector<int>> adj;
    std::vector<int> idx, low, comp;
    std::vector<bool> on_stack;
    std::vector<int> stack;
    int counter = 0, ncomp = 0;

    explicit Scc(const RuleSet& r) : rs(r) {
        for (const auto& [key, _] : rs.index) {
            id[key] = static_cast<int>(nodes.size());
            nodes.push_back(key);
        }
        adj.resize(nodes.size());
        std::vector<std::set<int>> seen(nodes.size());
        for (const Clause& c : rs.clauses) {
            int from = id[{c.name, c.arity()}];
            for (const Goal& g : c.body)
                if (g.kind == Goal::Kind::call) {
                    int to = id[{g.name, static_cast<int>(g.args.size())}];
                    if (seen[from].insert(to).second) adj[from].push_back(to);
                }
        }
        idx.assign(nodes.size(), -1);
        low.assign(nodes.size(), 0);
        comp.assign(nodes.size(), -1);
        on_stack.assign(nodes.size(), false);
    }

    void run(int v) {
        idx[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = true;
        for (int w : adj[v]) {
            if (idx[w] < 0) {
                run(w);
                low[v] = std::min(low[v], low[w]);
            } else if (on_stack[w]) {
                low[v] = std::min(low[v], idx[w]);
            }
        }
        if (low[v] == idx[v]) {
            for (;;) {
                int w = stack.back();
                stack.pop_back();
                on_stack[w] = false;
                comp[w] = ncomp;
                if (w == v) break;
            }
            ++ncomp;
        }
    }
};

}  // namespace

RecursionReport validate_recursion(const RuleSet& rules) {
    Scc scc(rules);
    for (size_t v = 0; v < scc.nodes.size(); ++v)
        if (scc.idx[v] < 0) scc.run(static_cast<int>(v));

    std::vector<std::vector<int>> members(scc.ncomp);
    for (size_t v = 0; v < scc.nodes.size(); ++v) members[scc.comp[v]].push_back(static_cast<int>(v));

    RecursionReport report;
    for (const auto& m : members) {
        bool cyclic = m.size() > 1;
        if (!cyclic) {
            int v = m[0];
            for (int w : scc.adj[v])
                if (w == v) cyclic = true;
        }
        if (!cyclic) continue;
        std::set<std::string> names;
        for (int v : m) names.insert(scc.nodes[v].first);
        report.cycles.emplace_back(names.begin(), names.end());
    }
    std::sort(report.cycles.begin(), report.cycles.end());
    return report;
}

}  // namespace slr
