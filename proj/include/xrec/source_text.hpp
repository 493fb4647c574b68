#pragma once

#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "xrec/lexer.hpp"
#include "xrec/source_syntax.hpp"

namespace xrec::source {

struct ParseResult {
    ExprPtr expr;
    Diagnostics diagnostics;
    bool ok() const { return expr != nullptr && diagnostics.empty(); }
};

inline std::string format_diagnostics(const Diagnostics& diags) {
    std::ostringstream out;
    for (const auto& d : diags) {
        out << d.code;
        if (d.condition != 0) out << " (condition " << d.condition << ")";
        out << ": " << d.message;
        if (!d.path.empty()) out << " at " << d.path;
        out << "\n";
    }
    return out.str();
}

namespace detail {

using xrec::detail::Tok;
using xrec::detail::TokenStream;

inline bool is_source_keyword(std::string_view word) {
    static const std::set<std::string_view> words{"rec", "in", "if", "then", "else", "and", "or", "true", "false"};
    return words.contains(word);
}

class Parser {
public:
    explicit Parser(std::string_view text) : ts_(xrec::detail::tokenize(text, false)) {}

    ExprPtr parse_all() {
        auto e = parse_expr();
        if (!ts_.at(Tok::End)) ts_.fail("expected end of input");
        return e;
    }

private:
    bool starts_open() const { return ts_.at(Tok::Backslash) || ts_.at_keyword("rec") || ts_.at_keyword("if"); }

    bool starts_atom() const {
        const auto& t = ts_.peek();
        switch (t.kind) {
        case Tok::Number:
        case Tok::LParen:
        case Tok::LBrace: return true;
        case Tok::Ident: return t.text == "true" || t.text == "false" || !is_source_keyword(t.text);
        default: return false;
        }
    }

    Name parse_variable(std::string_view what) {
        if (ts_.at(Tok::Wildcard)) ts_.fail("'_' is not a variable");
        if (ts_.at(Tok::Ident) && is_source_keyword(ts_.peek().text)) ts_.fail("keyword used as " + std::string(what));
        return ts_.expect(Tok::Ident, what).text;
    }

    ExprPtr parse_expr() {
        if (ts_.accept(Tok::Backslash)) {
            auto param = parse_variable("parameter name");
            ts_.expect(Tok::Dot, "'.' after parameter");
            return lam(param, parse_expr());
        }
        if (ts_.accept_keyword("rec")) {
            Binding binding;
            if (!ts_.at_keyword("in")) {
                do {
                    binding.push_back(parse_definition());
                } while (ts_.accept(Tok::Comma));
            }
            ts_.expect_keyword("in");
            return letrec(std::move(binding), parse_expr());
        }
        if (ts_.accept_keyword("if")) {
            auto c = parse_expr();
            ts_.expect_keyword("then");
            auto t = parse_expr();
            ts_.expect_keyword("else");
            return if_then_else(c, t, parse_expr());
        }
        return parse_binop(1);
    }

    Definition parse_definition() {
        auto name = parse_variable("defined variable");
        SizeIndication size;
        if (ts_.accept(Tok::EqUnknown)) {
            size = SizeIndication::unknown();
        } else if (ts_.at(Tok::EqKnown)) {
            ts_.next();
            auto n = ts_.expect(Tok::Number, "size in words");
            if (n.number == 0) throw SyntaxError("known sizes must be at least 1", n.line, n.column);
            size = SizeIndication::known(n.number);
            ts_.expect(Tok::RBracket, "']'");
        } else {
            ts_.fail("expected '=?' or '=[n]' after defined variable");
        }
        return Definition{name, size, parse_expr()};
    }

    ExprPtr parse_operand() { return starts_open() ? parse_expr() : parse_app(); }

    ExprPtr parse_binop(int min_prec) {
        auto lhs = parse_operand();
        for (;;) {
            auto op = xrec::detail::peek_binop(ts_);
            if (!op || precedence(*op) < min_prec) return lhs;
            ts_.next();
            auto rhs = parse_binop_rhs(precedence(*op) + 1);
            lhs = prim(*op, lhs, rhs);
        }
    }

    ExprPtr parse_binop_rhs(int min_prec) { return min_prec > 4 ? parse_operand() : parse_binop(min_prec); }

    ExprPtr parse_app() {
        if (!starts_atom()) ts_.fail("expected an expression");
        auto f = parse_postfix();
        while (starts_atom()) f = app(f, parse_postfix());
        if (starts_open()) f = app(f, parse_expr());
        return f;
    }

    ExprPtr parse_postfix() {
        auto e = parse_atom();
        while (ts_.accept(Tok::Dot)) {
            auto label = ts_.expect(Tok::Ident, "field name after '.'");
            e = select(e, label.text);
        }
        return e;
    }

    ExprPtr parse_atom() {
        const auto& t = ts_.peek();
        if (t.kind == Tok::Number) return nat(ts_.next().number);
        if (ts_.accept_keyword("true")) return boolean(true);
        if (ts_.accept_keyword("false")) return boolean(false);
        if (ts_.accept(Tok::LParen)) {
            auto e = parse_expr();
            ts_.expect(Tok::RParen, "')'");
            return e;
        }
        if (ts_.accept(Tok::LBrace)) {
            std::vector<Field> fields;
            if (!ts_.at(Tok::RBrace)) {
                do {
                    auto label = ts_.expect(Tok::Ident, "field name");
                    ts_.expect(Tok::Equals, "'=' after field name");
                    const auto& v = ts_.peek();
                    bool simple = v.kind == Tok::Ident && !is_source_keyword(v.text) &&
                                  (ts_.peek(1).kind == Tok::Comma || ts_.peek(1).kind == Tok::RBrace);
                    if (!simple) {
                        throw SyntaxError("record fields must be variables; bind the expression first",
                                          v.line, v.column);
                    }
                    fields.push_back({label.text, ts_.next().text});
                } while (ts_.accept(Tok::Comma));
            }
            ts_.expect(Tok::RBrace, "'}'");
            return record(std::move(fields));
        }
        return var(parse_variable("variable"));
    }

    TokenStream ts_;
};

}  // namespace detail

/// Parses `.rec` text and checks well-formedness. Syntax errors and
/// violations of the three binding conditions come back as diagnostics.
inline ParseResult parse_source(std::string_view text, bool allow_prims = false) {
    ParseResult result;
    try {
        detail::Parser parser(text);
        result.expr = parser.parse_all();
    } catch (const SyntaxError& err) {
        result.diagnostics.push_back({0, "syntax",
                                      std::to_string(err.line()) + ":" + std::to_string(err.column()) + ": " +
                                          err.what(),
                                      ""});
        return result;
    }
    result.diagnostics = check_wellformed(*result.expr, allow_prims);
    return result;
}

/// Convenience for tests and embedded programs: throws std::invalid_argument
/// carrying the formatted diagnostics.
inline ExprPtr parse_source_or_throw(std::string_view text, bool allow_prims = true) {
    auto result = parse_source(text, allow_prims);
    if (!result.ok()) throw std::invalid_argument(format_diagnostics(result.diagnostics));
    return result.expr;
}

// ------------------------------
// printing
// ------------------------------

namespace detail {

// Print contexts: 0 open position, 1-4 operator levels, 5 function position,
// 6 argument position, 7 selection subject.
inline void print(const Expr& e, int ctx, std::string& out);

inline void print_binding(const Binding& b, std::string& out) {
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (i) out += ", ";
        out += b[i].var;
        if (b[i].size.is_known()) {
            out += " =[" + std::to_string(b[i].size.words()) + "] ";
        } else {
            out += " =? ";
        }
        print(*b[i].rhs, 0, out);
    }
}

inline void print(const Expr& e, int ctx, std::string& out) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Var>) {
                out += n.name;
            } else if constexpr (std::is_same_v<T, Nat>) {
                out += std::to_string(n.value);
            } else if constexpr (std::is_same_v<T, Bool>) {
                out += n.value ? "true" : "false";
            } else if constexpr (std::is_same_v<T, Record>) {
                out += "{";
                for (std::size_t i = 0; i < n.fields.size(); ++i) {
                    if (i) out += ", ";
                    out += n.fields[i].label + " = " + n.fields[i].var;
                }
                out += "}";
            } else if constexpr (std::is_same_v<T, Select>) {
                print(*n.subject, 7, out);
                out += "." + n.label;
            } else if constexpr (std::is_same_v<T, App>) {
                bool paren = ctx >= 6;
                if (paren) out += "(";
                print(*n.fn, 5, out);
                out += " ";
                print(*n.arg, 6, out);
                if (paren) out += ")";
            } else if constexpr (std::is_same_v<T, Prim>) {
                int p = precedence(n.op);
                bool paren = ctx > p;
                if (paren) out += "(";
                print(*n.lhs, p, out);
                out += " ";
                out += to_string(n.op);
                out += " ";
                print(*n.rhs, p + 1, out);
                if (paren) out += ")";
            } else {
                bool paren = ctx != 0;
                if (paren) out += "(";
                if constexpr (std::is_same_v<T, Lam>) {
                    out += "\\" + n.param + ". ";
                    print(*n.body, 0, out);
                } else if constexpr (std::is_same_v<T, Letrec>) {
                    out += "rec ";
                    print_binding(n.binding, out);
                    out += n.binding.empty() ? "in " : " in ";
                    print(*n.body, 0, out);
                } else if constexpr (std::is_same_v<T, If>) {
                    out += "if ";
                    print(*n.cond, 0, out);
                    out += " then ";
                    print(*n.then_branch, 0, out);
                    out += " else ";
                    print(*n.else_branch, 0, out);
                }
                if (paren) out += ")";
            }
        },
        e.node);
}

}  // namespace detail

inline std::string to_string(const Expr& e) {
    std::string out;
    detail::print(e, 0, out);
    return out;
}
inline std::string to_string(const ExprPtr& e) { return to_string(*e); }

inline std::string to_string(const Binding& b) {
    std::string out;
    detail::print_binding(b, out);
    return out;
}

}  // namespace xrec::source
