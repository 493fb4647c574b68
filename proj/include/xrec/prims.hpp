#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>

// Arithmetic and boolean extension shared by both calculi. All operators are
// binary; `and`/`or` evaluate their left operand only and then select.

namespace xrec {

enum class PrimOp { Add, Sub, Eq, Gt, And, Or };

inline std::string_view to_string(PrimOp op) {
    switch (op) {
    case PrimOp::Add: return "+";
    case PrimOp::Sub: return "-";
    case PrimOp::Eq: return "=";
    case PrimOp::Gt: return ">";
    case PrimOp::And: return "and";
    case PrimOp::Or: return "or";
    }
    return "?";
}

inline bool is_short_circuit(PrimOp op) {
    return op == PrimOp::And || op == PrimOp::Or;
}

// Printer/parser binding strength; higher binds tighter.
inline int precedence(PrimOp op) {
    switch (op) {
    case PrimOp::Or: return 1;
    case PrimOp::And: return 2;
    case PrimOp::Eq:
    case PrimOp::Gt: return 3;
    case PrimOp::Add:
    case PrimOp::Sub: return 4;
    }
    return 0;
}

using Literal = std::variant<std::uint64_t, bool>;

/// Delta rule for strict operators. Naturals saturate at zero on subtraction.
/// Returns nullopt on an ill-typed operand pair.
inline std::optional<Literal> apply_strict(PrimOp op, const Literal& lhs, const Literal& rhs) {
    const auto* ln = std::get_if<std::uint64_t>(&lhs);
    const auto* rn = std::get_if<std::uint64_t>(&rhs);
    switch (op) {
    case PrimOp::Add:
        if (ln && rn) return Literal{*ln + *rn};
        return std::nullopt;
    case PrimOp::Sub:
        if (ln && rn) return Literal{*ln > *rn ? *ln - *rn : std::uint64_t{0}};
        return std::nullopt;
    case PrimOp::Gt:
        if (ln && rn) return Literal{*ln > *rn};
        return std::nullopt;
    case PrimOp::Eq:
        if (lhs.index() != rhs.index()) return std::nullopt;
        return Literal{lhs == rhs};
    case PrimOp::And:
    case PrimOp::Or:
        return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace xrec
