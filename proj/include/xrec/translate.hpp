#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "xrec/source_syntax.hpp"
#include "xrec/source_text.hpp"
#include "xrec/target_syntax.hpp"

namespace xrec {

namespace detail {

struct Translator {
    std::vector<std::pair<std::string, std::string>>* notes = nullptr;

    void note(const std::string& path, std::string what) const {
        if (notes) notes->emplace_back(path, std::move(what));
    }

    target::ExprPtr operator()(const source::ExprPtr& e, const std::string& path) const {
        using namespace source;
        return std::visit(
            [&](const auto& n) -> target::ExprPtr {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, Var>) {
                    return target::var(n.name);
                } else if constexpr (std::is_same_v<T, Lam>) {
                    return target::lam(n.param, (*this)(n.body, path + "/body"));
                } else if constexpr (std::is_same_v<T, App>) {
                    return target::app((*this)(n.fn, path + "/fn"), (*this)(n.arg, path + "/arg"));
                } else if constexpr (std::is_same_v<T, Record>) {
                    std::vector<target::Field> fields;
                    for (const auto& f : n.fields) fields.push_back({f.label, target::Value{f.var}});
                    return target::record(std::move(fields));
                } else if constexpr (std::is_same_v<T, Select>) {
                    return target::select((*this)(n.subject, path + "/subject"), n.label);
                } else if constexpr (std::is_same_v<T, Letrec>) {
                    auto bindings = dum(n.binding, path);
                    auto updates = up(n.binding, path);
                    bindings.insert(bindings.end(), updates.begin(), updates.end());
                    return target::let(std::move(bindings), (*this)(n.body, path + "/body"));
                } else if constexpr (std::is_same_v<T, Nat>) {
                    return target::nat(n.value);
                } else if constexpr (std::is_same_v<T, Bool>) {
                    return target::boolean(n.value);
                } else if constexpr (std::is_same_v<T, Prim>) {
                    return target::prim(n.op, (*this)(n.lhs, path + "/lhs"), (*this)(n.rhs, path + "/rhs"));
                } else {
                    return target::if_then_else((*this)(n.cond, path + "/cond"), (*this)(n.then_branch, path + "/then"),
                                                (*this)(n.else_branch, path + "/else"));
                }
            },
            e->node);
    }

    target::Bindings dum(const source::Binding& b, const std::string& path) const {
        target::Bindings out;
        for (std::size_t i = 0; i < b.size(); ++i) {
            const auto& d = b[i];
            if (!d.size.is_known()) continue;
            note(path + "/def[" + std::to_string(i) + "]", "dummy block of " + std::to_string(d.size.words()) + " words");
            out.push_back({d.var, target::alloc(d.size.words())});
        }
        return out;
    }

    target::Bindings up(const source::Binding& b, const std::string& path) const {
        target::Bindings out;
        for (std::size_t i = 0; i < b.size(); ++i) {
            const auto& d = b[i];
            auto p = path + "/def[" + std::to_string(i) + "]";
            auto rhs = (*this)(d.rhs, p + "/rhs");
            if (d.size.is_known()) {
                note(p, "update in place");
                out.push_back({std::nullopt, target::update(target::var(d.var), rhs)});
            } else {
                note(p, "plain let binding");
                out.push_back({d.var, rhs});
            }
        }
        return out;
    }
};

inline void require_wellformed(const source::ExprPtr& e) {
    auto diags = source::check_wellformed(*e, true);
    if (!diags.empty()) throw std::invalid_argument("ill-formed source term: " + source::format_diagnostics(diags));
}

}  // namespace detail

/// Dummy allocations for the known-size definitions of `b`, in order.
inline target::Bindings dum(const source::Binding& b) { return detail::Translator{}.dum(b, ""); }

/// Definitions of `b`: in-place updates for known sizes, plain bindings
/// otherwise.
inline target::Bindings up(const source::Binding& b) { return detail::Translator{}.up(b, ""); }

/// The in-place update translation. Throws std::invalid_argument on
/// ill-formed input.
inline target::ExprPtr transl(const source::ExprPtr& e) {
    detail::require_wellformed(e);
    return detail::Translator{}(e, "");
}

struct TranslationOutput {
    target::ExprPtr expr;
    std::vector<std::pair<std::string, std::string>> notes;
};

/// transl together with the per-definition decisions it made.
inline TranslationOutput transl_with_notes(const source::ExprPtr& e) {
    detail::require_wellformed(e);
    TranslationOutput out;
    out.expr = detail::Translator{&out.notes}(e, "");
    return out;
}

/// ⟨∅ | transl(e)⟩ for a closed program.
inline target::Configuration translate_program(const source::ExprPtr& e) {
    auto fv = source::free_vars(*e);
    if (!fv.empty()) throw std::invalid_argument("translate_program: term has free variable " + *fv.begin());
    return target::initial_configuration(transl(e));
}

}  // namespace xrec
