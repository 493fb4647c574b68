#pragma once

#include <set>
#include <string>
#include <string_view>

#include "xrec/lexer.hpp"
#include "xrec/target_syntax.hpp"

namespace xrec::target {

namespace detail {

using xrec::detail::Tok;
using xrec::detail::TokenStream;

inline bool is_target_keyword(std::string_view word) {
    static const std::set<std::string_view> words{"let",  "in",   "if",    "then",  "else",  "and",
                                                  "or",   "true", "false", "alloc", "update"};
    return words.contains(word);
}

class Parser {
public:
    explicit Parser(std::string_view text) : ts_(xrec::detail::tokenize(text, true)) {}

    Configuration parse_configuration() {
        Configuration c;
        if (ts_.at_keyword("heap") && ts_.peek(1).kind == Tok::LBrace) {
            ts_.next();
            ts_.next();
            while (!ts_.accept(Tok::RBrace)) {
                auto loc = ts_.expect(Tok::Location, "heap location");
                ts_.expect(Tok::Equals, "'=' after heap location");
                auto rhs = parse_expr();
                auto hv = as_stored(*rhs);
                if (!hv) throw SyntaxError("heap bindings must hold stored values", loc.line, loc.column);
                if (c.heap.contains(loc.text))
                    throw SyntaxError("location bound twice: " + loc.text, loc.line, loc.column);
                c.heap.insert(loc.text, std::move(*hv));
                ts_.expect(Tok::Semicolon, "';' after heap binding");
            }
            if (!ts_.accept_keyword("expr")) ts_.fail("expected 'expr'");
            ts_.expect(Tok::LBrace, "'{'");
            c.expr = parse_expr();
            ts_.expect(Tok::RBrace, "'}'");
        } else {
            c.expr = parse_expr();
        }
        if (!ts_.at(Tok::End)) ts_.fail("expected end of input");
        return c;
    }

    ExprPtr parse_all() {
        auto e = parse_expr();
        if (!ts_.at(Tok::End)) ts_.fail("expected end of input");
        return e;
    }

private:
    bool starts_open() const { return ts_.at(Tok::Backslash) || ts_.at_keyword("let") || ts_.at_keyword("if"); }

    bool starts_atom() const {
        const auto& t = ts_.peek();
        switch (t.kind) {
        case Tok::Number:
        case Tok::Location:
        case Tok::LParen:
        case Tok::LBrace: return true;
        case Tok::Ident:
            return t.text == "true" || t.text == "false" || t.text == "alloc" || t.text == "update" ||
                   !is_target_keyword(t.text);
        default: return false;
        }
    }

    Name parse_variable(std::string_view what) {
        if (ts_.at(Tok::Ident) && is_target_keyword(ts_.peek().text)) ts_.fail("keyword used as " + std::string(what));
        return ts_.expect(Tok::Ident, what).text;
    }

    ExprPtr parse_expr() {
        if (ts_.accept(Tok::Backslash)) {
            auto param = parse_variable("parameter name");
            ts_.expect(Tok::Dot, "'.' after parameter");
            return lam(param, parse_expr());
        }
        if (ts_.accept_keyword("let")) {
            Bindings bindings;
            if (!ts_.at_keyword("in")) {
                do {
                    Binder bd;
                    if (!ts_.accept(Tok::Wildcard)) bd = parse_variable("let binder");
                    ts_.expect(Tok::Equals, "'=' in let binding");
                    bindings.push_back({bd, parse_expr()});
                } while (ts_.accept(Tok::Comma));
            }
            ts_.expect_keyword("in");
            return let(std::move(bindings), parse_expr());
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

    ExprPtr parse_operand() { return starts_open() ? parse_expr() : parse_app(); }

    ExprPtr parse_binop(int min_prec) {
        auto lhs = parse_operand();
        for (;;) {
            auto op = xrec::detail::peek_binop(ts_);
            if (!op || precedence(*op) < min_prec) return lhs;
            ts_.next();
            int next = precedence(*op) + 1;
            auto rhs = next > 4 ? parse_operand() : parse_binop(next);
            lhs = prim(*op, lhs, rhs);
        }
    }

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

    Value parse_field_value() {
        const auto& t = ts_.peek();
        if (t.kind == Tok::Number) return Value{ts_.next().number};
        if (t.kind == Tok::Location) return Value{ts_.next().text};
        if (ts_.accept_keyword("true")) return Value{true};
        if (ts_.accept_keyword("false")) return Value{false};
        if (t.kind == Tok::Ident && !is_target_keyword(t.text)) return Value{ts_.next().text};
        ts_.fail("record fields must be values");
    }

    ExprPtr parse_atom() {
        const auto& t = ts_.peek();
        if (t.kind == Tok::Number) return nat(ts_.next().number);
        if (t.kind == Tok::Location) return var(ts_.next().text);
        if (ts_.accept_keyword("true")) return boolean(true);
        if (ts_.accept_keyword("false")) return boolean(false);
        if (ts_.accept_keyword("alloc")) return alloc_op();
        if (ts_.accept_keyword("update")) return update_op();
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
                    fields.push_back({label.text, parse_field_value()});
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

/// Parses a `.tgt` text: either `heap { #0 = ...; } expr { ... }` or a bare
/// expression (empty heap). Throws SyntaxError.
inline Configuration parse_configuration(std::string_view text) {
    detail::Parser parser(text);
    return parser.parse_configuration();
}

inline ExprPtr parse_expr(std::string_view text) {
    detail::Parser parser(text);
    return parser.parse_all();
}

namespace detail {

inline std::string value_string(const Value& v) {
    if (auto x = std::get_if<Name>(&v)) return *x;
    if (auto n = std::get_if<std::uint64_t>(&v)) return std::to_string(*n);
    return std::get<bool>(v) ? "true" : "false";
}

inline void print(const Expr& e, int ctx, std::string& out);

inline void print_fields(const std::vector<Field>& fields, std::string& out) {
    out += "{";
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ", ";
        out += fields[i].label + " = " + value_string(fields[i].value);
    }
    out += "}";
}

// Contexts as for source printing: 0 open, 1-4 operators, 5 function,
// 6 argument, 7 selection subject.
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
            } else if constexpr (std::is_same_v<T, Alloc>) {
                out += "alloc";
            } else if constexpr (std::is_same_v<T, Update>) {
                out += "update";
            } else if constexpr (std::is_same_v<T, Record>) {
                print_fields(n.fields, out);
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
                } else if constexpr (std::is_same_v<T, Let>) {
                    out += "let ";
                    for (std::size_t i = 0; i < n.bindings.size(); ++i) {
                        if (i) out += ", ";
                        out += n.bindings[i].binder ? *n.bindings[i].binder : "_";
                        out += " = ";
                        print(*n.bindings[i].rhs, 0, out);
                    }
                    out += n.bindings.empty() ? "in " : " in ";
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

inline std::string to_string(const StoredValue& hv) { return to_string(*to_expr(hv)); }

inline std::string to_string(const Heap& heap) {
    std::string out = "heap {";
    heap.for_each([&](const Name& x, const StoredValue& hv) { out += " " + x + " = " + to_string(hv) + ";"; });
    out += heap.empty() ? "}" : " }";
    return out;
}

/// One-line rendering `heap { #0 = ...; } expr { ... }`.
inline std::string to_string(const Configuration& c) {
    return to_string(c.heap) + " expr { " + to_string(*c.expr) + " }";
}

/// Multi-line rendering used for `.tgt` files.
inline std::string to_file_string(const Configuration& c) {
    std::string out = "heap {\n";
    c.heap.for_each([&](const Name& x, const StoredValue& hv) { out += "  " + x + " = " + to_string(hv) + ";\n"; });
    out += "}\nexpr {\n  " + to_string(*c.expr) + "\n}\n";
    return out;
}

}  // namespace xrec::target
