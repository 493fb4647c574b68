#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <optional>
#include <vector>

#include "xrec/prims.hpp"

namespace xrec {

/// Parse failure with a 1-based source position.
class SyntaxError : public std::runtime_error {
public:
    SyntaxError(const std::string& what, int line, int column)
        : std::runtime_error(what), line_(line), column_(column) {}
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

}  // namespace xrec

namespace xrec::detail {

enum class Tok {
    Ident,
    Location,
    Number,
    Wildcard,
    Backslash,
    Dot,
    Comma,
    Semicolon,
    Equals,
    EqUnknown,  // =?
    EqKnown,    // =[
    RBracket,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Plus,
    Minus,
    Greater,
    End,
};

struct Token {
    Tok kind;
    std::string text;
    std::uint64_t number = 0;
    int line = 1;
    int column = 1;
};

// In target mode `#` followed by a digit is a heap location; otherwise `#`
// starts a comment running to the end of the line.
inline std::vector<Token> tokenize(std::string_view src, bool locations) {
    std::vector<Token> out;
    int line = 1;
    int column = 1;
    std::size_t i = 0;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) {
            if (src[i] == '\n') {
                ++line;
                column = 1;
            } else if ((static_cast<unsigned char>(src[i]) & 0xC0) != 0x80) {
                ++column;
            }
            ++i;
        }
    };
    auto is_ident_start = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
    auto is_ident_char = [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
    };
    while (i < src.size()) {
        char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
            continue;
        }
        Token t{Tok::End, "", 0, line, column};
        if (c == '#') {
            if (locations && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1]))) {
                std::size_t j = i + 1;
                while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
                t.kind = Tok::Location;
                t.text = std::string(src.substr(i, j - i));
                advance(j - i);
                out.push_back(std::move(t));
                continue;
            }
            while (i < src.size() && src[i] != '\n') advance(1);
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            std::uint64_t value = 0;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) {
                auto digit = static_cast<std::uint64_t>(src[j] - '0');
                if (value > (UINT64_MAX - digit) / 10) throw SyntaxError("numeric literal out of range", line, column);
                value = value * 10 + digit;
                ++j;
            }
            t.kind = Tok::Number;
            t.number = value;
            t.text = std::string(src.substr(i, j - i));
            advance(j - i);
            out.push_back(std::move(t));
            continue;
        }
        if (is_ident_start(c)) {
            std::size_t j = i;
            while (j < src.size() && is_ident_char(src[j])) ++j;
            t.text = std::string(src.substr(i, j - i));
            t.kind = t.text == "_" ? Tok::Wildcard : Tok::Ident;
            advance(j - i);
            out.push_back(std::move(t));
            continue;
        }
        // UTF-8 lambda
        if (src.substr(i, 2) == "\xCE\xBB") {
            t.kind = Tok::Backslash;
            t.text = "\\";
            advance(2);
            out.push_back(std::move(t));
            continue;
        }
        std::size_t width = 1;
        switch (c) {
        case '\\': t.kind = Tok::Backslash; break;
        case '.': t.kind = Tok::Dot; break;
        case ',': t.kind = Tok::Comma; break;
        case ';': t.kind = Tok::Semicolon; break;
        case ']': t.kind = Tok::RBracket; break;
        case '{': t.kind = Tok::LBrace; break;
        case '}': t.kind = Tok::RBrace; break;
        case '(': t.kind = Tok::LParen; break;
        case ')': t.kind = Tok::RParen; break;
        case '+': t.kind = Tok::Plus; break;
        case '-': t.kind = Tok::Minus; break;
        case '>': t.kind = Tok::Greater; break;
        case '=':
            if (i + 1 < src.size() && src[i + 1] == '?') {
                t.kind = Tok::EqUnknown;
                width = 2;
            } else if (i + 1 < src.size() && src[i + 1] == '[') {
                t.kind = Tok::EqKnown;
                width = 2;
            } else {
                t.kind = Tok::Equals;
            }
            break;
        default:
            throw SyntaxError(std::string("unexpected character '") + c + "'", line, column);
        }
        t.text = std::string(src.substr(i, width));
        advance(width);
        out.push_back(std::move(t));
    }
    out.push_back(Token{Tok::End, "<end of input>", 0, line, column});
    return out;
}

/// Cursor over a token vector with the usual expect/accept helpers.
class TokenStream {
public:
    explicit TokenStream(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    const Token& peek(std::size_t ahead = 0) const {
        auto k = std::min(pos_ + ahead, tokens_.size() - 1);
        return tokens_[k];
    }
    bool at(Tok kind) const { return peek().kind == kind; }
    bool at_keyword(std::string_view word) const { return at(Tok::Ident) && peek().text == word; }

    Token next() {
        Token t = peek();
        if (pos_ + 1 < tokens_.size()) ++pos_;
        return t;
    }
    bool accept(Tok kind) {
        if (!at(kind)) return false;
        next();
        return true;
    }
    bool accept_keyword(std::string_view word) {
        if (!at_keyword(word)) return false;
        next();
        return true;
    }
    Token expect(Tok kind, std::string_view what) {
        if (!at(kind)) fail(std::string("expected ") + std::string(what));
        return next();
    }
    void expect_keyword(std::string_view word) {
        if (!accept_keyword(word)) fail("expected '" + std::string(word) + "'");
    }

    [[noreturn]] void fail(const std::string& message) const {
        const auto& t = peek();
        throw SyntaxError(message + ", found '" + t.text + "'", t.line, t.column);
    }

private:
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

inline std::optional<PrimOp> peek_binop(const TokenStream& ts) {
    switch (ts.peek().kind) {
    case Tok::Plus: return PrimOp::Add;
    case Tok::Minus: return PrimOp::Sub;
    case Tok::Equals: return PrimOp::Eq;
    case Tok::Greater: return PrimOp::Gt;
    default: break;
    }
    if (ts.at_keyword("and")) return PrimOp::And;
    if (ts.at_keyword("or")) return PrimOp::Or;
    return std::nullopt;
}

}  // namespace xrec::detail
