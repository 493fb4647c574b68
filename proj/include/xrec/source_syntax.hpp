#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "xrec/names.hpp"
#include "xrec/prims.hpp"

namespace xrec {

/// Size annotation of a recursive definition: unknown (`=?`) or a known
/// number of heap words (`=[n]`).
class SizeIndication {
public:
    static SizeIndication unknown() { return SizeIndication{}; }
    static SizeIndication known(std::uint64_t words) {
        if (words == 0) {
            throw std::invalid_argument("known size indications must be at least one word");
        }
        SizeIndication s;
        s.words_ = words;
        return s;
    }

    bool is_known() const { return words_.has_value(); }
    std::uint64_t words() const { return words_.value(); }

    friend bool operator==(const SizeIndication&, const SizeIndication&) = default;

private:
    std::optional<std::uint64_t> words_;
};

/// A diagnostic with the well-formedness condition it violates (0 when the
/// problem is not one of the three syntactic conditions).
struct Diagnostic {
    int condition = 0;
    std::string code;
    std::string message;
    std::string path;
};

using Diagnostics = std::vector<Diagnostic>;

}  // namespace xrec

namespace xrec::source {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Var {
    Name name;
};
struct Lam {
    Name param;
    ExprPtr body;
};
struct App {
    ExprPtr fn;
    ExprPtr arg;
};
struct Field {
    Name label;
    Name var;
};
struct Record {
    std::vector<Field> fields;
};
struct Select {
    ExprPtr subject;
    Name label;
};
struct Definition {
    Name var;
    SizeIndication size;
    ExprPtr rhs;
};
using Binding = std::vector<Definition>;
struct Letrec {
    Binding binding;
    ExprPtr body;
};
struct Nat {
    std::uint64_t value;
};
struct Bool {
    bool value;
};
struct Prim {
    PrimOp op;
    ExprPtr lhs;
    ExprPtr rhs;
};
struct If {
    ExprPtr cond;
    ExprPtr then_branch;
    ExprPtr else_branch;
};

struct Expr {
    using Node = std::variant<Var, Lam, App, Record, Select, Letrec, Nat, Bool, Prim, If>;
    Node node;

    template <class T>
    const T* as() const {
        return std::get_if<T>(&node);
    }
    template <class T>
    bool is() const {
        return std::holds_alternative<T>(node);
    }
};

inline ExprPtr make(Expr::Node node) { return std::make_shared<const Expr>(Expr{std::move(node)}); }
inline ExprPtr var(Name name) { return make(Var{std::move(name)}); }
inline ExprPtr lam(Name param, ExprPtr body) { return make(Lam{std::move(param), std::move(body)}); }
inline ExprPtr app(ExprPtr fn, ExprPtr arg) { return make(App{std::move(fn), std::move(arg)}); }
inline ExprPtr record(std::vector<Field> fields) { return make(Record{std::move(fields)}); }
inline ExprPtr select(ExprPtr subject, Name label) { return make(Select{std::move(subject), std::move(label)}); }
inline ExprPtr letrec(Binding binding, ExprPtr body) { return make(Letrec{std::move(binding), std::move(body)}); }
inline ExprPtr nat(std::uint64_t value) { return make(Nat{value}); }
inline ExprPtr boolean(bool value) { return make(Bool{value}); }
inline ExprPtr prim(PrimOp op, ExprPtr lhs, ExprPtr rhs) { return make(Prim{op, std::move(lhs), std::move(rhs)}); }
inline ExprPtr if_then_else(ExprPtr c, ExprPtr t, ExprPtr e) {
    return make(If{std::move(c), std::move(t), std::move(e)});
}

inline ExprPtr app(ExprPtr fn, ExprPtr a1, ExprPtr a2) { return app(app(std::move(fn), std::move(a1)), std::move(a2)); }

inline bool is_value(const Expr& e) {
    return e.is<Var>() || e.is<Lam>() || e.is<Record>() || e.is<Nat>() || e.is<Bool>();
}

inline bool is_literal(const Expr& e) { return e.is<Nat>() || e.is<Bool>(); }

inline std::optional<Literal> literal_of(const Expr& e) {
    if (auto n = e.as<Nat>()) return Literal{n->value};
    if (auto b = e.as<Bool>()) return Literal{b->value};
    return std::nullopt;
}

inline ExprPtr from_literal(const Literal& lit) {
    if (auto n = std::get_if<std::uint64_t>(&lit)) return nat(*n);
    return boolean(std::get<bool>(lit));
}

inline const Definition* find_definition(const Binding& b, const Name& x) {
    auto it = std::find_if(b.begin(), b.end(), [&](const Definition& d) { return d.var == x; });
    return it == b.end() ? nullptr : &*it;
}

inline NameSet domain(const Binding& b) {
    NameSet out;
    for (const auto& d : b) out.insert(d.var);
    return out;
}

// ------------------------------
// free variables
// ------------------------------

namespace detail {

inline void collect_free(const Expr& e, const NameSet& bound, NameSet& out);

inline void collect_free_binding(const Binding& b, const ExprPtr* body, const NameSet& bound, NameSet& out) {
    NameSet inner = bound;
    for (const auto& d : b) inner.insert(d.var);
    for (const auto& d : b) collect_free(*d.rhs, inner, out);
    if (body) collect_free(**body, inner, out);
}

inline void collect_free(const Expr& e, const NameSet& bound, NameSet& out) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Var>) {
                if (!bound.contains(n.name)) out.insert(n.name);
            } else if constexpr (std::is_same_v<T, Lam>) {
                NameSet inner = bound;
                inner.insert(n.param);
                collect_free(*n.body, inner, out);
            } else if constexpr (std::is_same_v<T, App>) {
                collect_free(*n.fn, bound, out);
                collect_free(*n.arg, bound, out);
            } else if constexpr (std::is_same_v<T, Record>) {
                for (const auto& f : n.fields)
                    if (!bound.contains(f.var)) out.insert(f.var);
            } else if constexpr (std::is_same_v<T, Select>) {
                collect_free(*n.subject, bound, out);
            } else if constexpr (std::is_same_v<T, Letrec>) {
                collect_free_binding(n.binding, &n.body, bound, out);
            } else if constexpr (std::is_same_v<T, Prim>) {
                collect_free(*n.lhs, bound, out);
                collect_free(*n.rhs, bound, out);
            } else if constexpr (std::is_same_v<T, If>) {
                collect_free(*n.cond, bound, out);
                collect_free(*n.then_branch, bound, out);
                collect_free(*n.else_branch, bound, out);
            }
        },
        e.node);
}

inline void collect_names(const Expr& e, NameSet& out) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Var>) {
                out.insert(n.name);
            } else if constexpr (std::is_same_v<T, Lam>) {
                out.insert(n.param);
                collect_names(*n.body, out);
            } else if constexpr (std::is_same_v<T, App>) {
                collect_names(*n.fn, out);
                collect_names(*n.arg, out);
            } else if constexpr (std::is_same_v<T, Record>) {
                for (const auto& f : n.fields) out.insert(f.var);
            } else if constexpr (std::is_same_v<T, Select>) {
                collect_names(*n.subject, out);
            } else if constexpr (std::is_same_v<T, Letrec>) {
                for (const auto& d : n.binding) {
                    out.insert(d.var);
                    collect_names(*d.rhs, out);
                }
                collect_names(*n.body, out);
            } else if constexpr (std::is_same_v<T, Prim>) {
                collect_names(*n.lhs, out);
                collect_names(*n.rhs, out);
            } else if constexpr (std::is_same_v<T, If>) {
                collect_names(*n.cond, out);
                collect_names(*n.then_branch, out);
                collect_names(*n.else_branch, out);
            }
        },
        e.node);
}

}  // namespace detail

inline NameSet free_vars(const Expr& e) {
    NameSet out;
    detail::collect_free(e, {}, out);
    return out;
}
inline NameSet free_vars(const ExprPtr& e) { return free_vars(*e); }

/// FV of a binding: its defined variables together with the free variables
/// of every right-hand side.
inline NameSet free_vars(const Binding& b) {
    NameSet out;
    for (const auto& d : b) {
        out.insert(d.var);
        detail::collect_free(*d.rhs, {}, out);
    }
    return out;
}

/// Every variable name occurring in `e`, bound or free.
inline NameSet all_names(const Expr& e) {
    NameSet out;
    detail::collect_names(e, out);
    return out;
}

// ------------------------------
// alpha-equivalence
// ------------------------------

namespace detail {

// Binder scopes map names to de Bruijn levels; a variable is compared by
// level when bound on both sides and by name when free on both.
class AlphaScope {
public:
    void push(const Name& left, const Name& right) {
        left_.emplace_back(left, level_);
        right_.emplace_back(right, level_);
        ++level_;
    }
    void pop(std::size_t count) {
        left_.resize(left_.size() - count);
        right_.resize(right_.size() - count);
    }
    bool same_var(const Name& a, const Name& b) const {
        auto la = lookup(left_, a);
        auto lb = lookup(right_, b);
        if (la || lb) return la == lb;
        return a == b;
    }

private:
    static std::optional<int> lookup(const std::vector<std::pair<Name, int>>& scope, const Name& x) {
        for (auto it = scope.rbegin(); it != scope.rend(); ++it)
            if (it->first == x) return it->second;
        return std::nullopt;
    }

    std::vector<std::pair<Name, int>> left_;
    std::vector<std::pair<Name, int>> right_;
    int level_ = 0;
};

inline bool alpha_equal(const Expr& a, const Expr& b, AlphaScope& scope) {
    if (a.node.index() != b.node.index()) return false;
    if (auto x = a.as<Var>()) return scope.same_var(x->name, b.as<Var>()->name);
    if (auto x = a.as<Lam>()) {
        const auto* y = b.as<Lam>();
        scope.push(x->param, y->param);
        bool eq = alpha_equal(*x->body, *y->body, scope);
        scope.pop(1);
        return eq;
    }
    if (auto x = a.as<App>()) {
        const auto* y = b.as<App>();
        return alpha_equal(*x->fn, *y->fn, scope) && alpha_equal(*x->arg, *y->arg, scope);
    }
    if (auto x = a.as<Record>()) {
        const auto* y = b.as<Record>();
        if (x->fields.size() != y->fields.size()) return false;
        for (std::size_t i = 0; i < x->fields.size(); ++i) {
            if (x->fields[i].label != y->fields[i].label) return false;
            if (!scope.same_var(x->fields[i].var, y->fields[i].var)) return false;
        }
        return true;
    }
    if (auto x = a.as<Select>()) {
        const auto* y = b.as<Select>();
        return x->label == y->label && alpha_equal(*x->subject, *y->subject, scope);
    }
    if (auto x = a.as<Letrec>()) {
        const auto* y = b.as<Letrec>();
        if (x->binding.size() != y->binding.size()) return false;
        for (std::size_t i = 0; i < x->binding.size(); ++i) {
            if (x->binding[i].size != y->binding[i].size) return false;
            scope.push(x->binding[i].var, y->binding[i].var);
        }
        bool eq = true;
        for (std::size_t i = 0; eq && i < x->binding.size(); ++i)
            eq = alpha_equal(*x->binding[i].rhs, *y->binding[i].rhs, scope);
        eq = eq && alpha_equal(*x->body, *y->body, scope);
        scope.pop(x->binding.size());
        return eq;
    }
    if (auto x = a.as<Nat>()) return x->value == b.as<Nat>()->value;
    if (auto x = a.as<Bool>()) return x->value == b.as<Bool>()->value;
    if (auto x = a.as<Prim>()) {
        const auto* y = b.as<Prim>();
        return x->op == y->op && alpha_equal(*x->lhs, *y->lhs, scope) && alpha_equal(*x->rhs, *y->rhs, scope);
    }
    if (auto x = a.as<If>()) {
        const auto* y = b.as<If>();
        return alpha_equal(*x->cond, *y->cond, scope) && alpha_equal(*x->then_branch, *y->then_branch, scope) &&
               alpha_equal(*x->else_branch, *y->else_branch, scope);
    }
    return false;
}

}  // namespace detail

/// Equality up to renaming of lambda and letrec binders. Field names and
/// free variables are compared literally.
inline bool alpha_equal(const Expr& a, const Expr& b) {
    detail::AlphaScope scope;
    return detail::alpha_equal(a, b, scope);
}
inline bool alpha_equal(const ExprPtr& a, const ExprPtr& b) { return alpha_equal(*a, *b); }

// ------------------------------
// capture-avoiding substitution
// ------------------------------

using Substitution = std::map<Name, ExprPtr>;

namespace detail {

inline NameSet range_free_vars(const Substitution& sub) {
    NameSet out;
    for (const auto& [x, e] : sub) collect_free(*e, {}, out);
    return out;
}

inline Substitution restrict_to(const Substitution& sub, const NameSet& keep) {
    Substitution out;
    for (const auto& [x, e] : sub)
        if (keep.contains(x)) out.emplace(x, e);
    return out;
}

inline ExprPtr subst_impl(const Substitution& sub, const ExprPtr& e, NameSupply& supply);

inline Name substitute_name(const Substitution& sub, const Name& x) {
    auto it = sub.find(x);
    if (it == sub.end()) return x;
    if (auto v = it->second->as<Var>()) return v->name;
    throw std::invalid_argument("record fields admit only variables; cannot substitute a non-variable for " + x);
}

inline ExprPtr subst_impl(const Substitution& sub, const ExprPtr& e, NameSupply& supply) {
    if (sub.empty()) return e;
    return std::visit(
        [&](const auto& n) -> ExprPtr {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Var>) {
                auto it = sub.find(n.name);
                return it == sub.end() ? e : it->second;
            } else if constexpr (std::is_same_v<T, Lam>) {
                auto body_free = free_vars(*n.body);
                body_free.erase(n.param);
                auto inner = restrict_to(sub, body_free);
                if (inner.empty()) return e;
                auto range = range_free_vars(inner);
                if (!range.contains(n.param)) return lam(n.param, subst_impl(inner, n.body, supply));
                NameSet avoid = range;
                avoid.insert(body_free.begin(), body_free.end());
                for (const auto& [x, _] : inner) avoid.insert(x);
                auto fresh = supply.fresh(n.param, avoid);
                inner[n.param] = var(fresh);
                return lam(fresh, subst_impl(inner, n.body, supply));
            } else if constexpr (std::is_same_v<T, App>) {
                return app(subst_impl(sub, n.fn, supply), subst_impl(sub, n.arg, supply));
            } else if constexpr (std::is_same_v<T, Record>) {
                std::vector<Field> fields;
                fields.reserve(n.fields.size());
                for (const auto& f : n.fields) fields.push_back({f.label, substitute_name(sub, f.var)});
                return record(std::move(fields));
            } else if constexpr (std::is_same_v<T, Select>) {
                return select(subst_impl(sub, n.subject, supply), n.label);
            } else if constexpr (std::is_same_v<T, Letrec>) {
                auto whole_free = free_vars(*e);
                auto inner = restrict_to(sub, whole_free);
                if (inner.empty()) return e;
                auto range = range_free_vars(inner);
                NameSet avoid = range;
                avoid.insert(whole_free.begin(), whole_free.end());
                for (const auto& d : n.binding) avoid.insert(d.var);
                for (const auto& [x, _] : inner) avoid.insert(x);
                Binding binding;
                binding.reserve(n.binding.size());
                for (const auto& d : n.binding) {
                    Name name = d.var;
                    if (range.contains(d.var)) {
                        name = supply.fresh(d.var, avoid);
                        avoid.insert(name);
                        inner[d.var] = var(name);
                    }
                    binding.push_back({name, d.size, d.rhs});
                }
                for (auto& d : binding) d.rhs = subst_impl(inner, d.rhs, supply);
                return letrec(std::move(binding), subst_impl(inner, n.body, supply));
            } else if constexpr (std::is_same_v<T, Prim>) {
                return prim(n.op, subst_impl(sub, n.lhs, supply), subst_impl(sub, n.rhs, supply));
            } else if constexpr (std::is_same_v<T, If>) {
                return if_then_else(subst_impl(sub, n.cond, supply), subst_impl(sub, n.then_branch, supply),
                                    subst_impl(sub, n.else_branch, supply));
            } else {
                return e;
            }
        },
        e->node);
}

}  // namespace detail

/// Capture-avoiding simultaneous substitution. Binders clashing with the
/// free variables of the substituted terms are renamed with `supply`.
/// Throws std::invalid_argument when a record field would receive a
/// non-variable.
inline ExprPtr substitute(const Substitution& sub, const ExprPtr& e, NameSupply& supply) {
    Substitution effective;
    for (const auto& [x, v] : sub) {
        if (auto y = v->as<Var>(); y && y->name == x) continue;
        effective.emplace(x, v);
    }
    return detail::subst_impl(effective, e, supply);
}

inline ExprPtr substitute(const Substitution& sub, const ExprPtr& e) {
    NameSupply supply;
    return substitute(sub, e, supply);
}

/// Renames the binders of `b` that fall in `avoid`, applying the renaming to
/// the right-hand sides and to `body`. Used by the lifting and merging rules.
inline std::pair<Binding, ExprPtr> rename_binding_away(const Binding& b, const ExprPtr& body, const NameSet& avoid,
                                                       NameSupply& supply) {
    NameSet taken = avoid;
    for (const auto& d : b) {
        taken.insert(d.var);
        detail::collect_names(*d.rhs, taken);
    }
    detail::collect_names(*body, taken);
    Substitution renaming;
    Binding out;
    out.reserve(b.size());
    for (const auto& d : b) {
        Name name = d.var;
        if (avoid.contains(d.var)) {
            name = supply.fresh(d.var, taken);
            taken.insert(name);
            renaming[d.var] = var(name);
        }
        out.push_back({name, d.size, d.rhs});
    }
    if (renaming.empty()) return {out, body};
    for (auto& d : out) d.rhs = substitute(renaming, d.rhs, supply);
    return {out, substitute(renaming, body, supply)};
}

// ------------------------------
// well-formedness
// ------------------------------

namespace detail {

inline std::string join_path(const std::string& parent, const std::string& step) {
    return parent.empty() ? step : parent + "/" + step;
}

inline void check_wellformed(const Expr& e, bool allow_prims, const std::string& path, Diagnostics& out) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Lam>) {
                check_wellformed(*n.body, allow_prims, join_path(path, "body"), out);
            } else if constexpr (std::is_same_v<T, App>) {
                check_wellformed(*n.fn, allow_prims, join_path(path, "fn"), out);
                check_wellformed(*n.arg, allow_prims, join_path(path, "arg"), out);
            } else if constexpr (std::is_same_v<T, Record>) {
                NameSet seen;
                for (const auto& f : n.fields) {
                    if (!seen.insert(f.label).second) {
                        out.push_back({1, "duplicate-field", "record defines field " + f.label + " twice", path});
                    }
                }
            } else if constexpr (std::is_same_v<T, Select>) {
                check_wellformed(*n.subject, allow_prims, join_path(path, "subject"), out);
            } else if constexpr (std::is_same_v<T, Letrec>) {
                NameSet seen;
                for (const auto& d : n.binding) {
                    if (!seen.insert(d.var).second) {
                        out.push_back({2, "duplicate-binder", "binding defines " + d.var + " twice", path});
                    }
                }
                for (std::size_t i = 0; i < n.binding.size(); ++i) {
                    auto fv = free_vars(*n.binding[i].rhs);
                    for (std::size_t j = i; j < n.binding.size(); ++j) {
                        if (!n.binding[j].size.is_known() && fv.contains(n.binding[j].var)) {
                            out.push_back({3, "forward-reference-to-unknown-size",
                                           "definition " + n.binding[i].var + " refers forward to " +
                                               n.binding[j].var + ", whose size is unknown",
                                           join_path(path, "def[" + std::to_string(i) + "]")});
                        }
                    }
                }
                for (std::size_t i = 0; i < n.binding.size(); ++i) {
                    check_wellformed(*n.binding[i].rhs, allow_prims,
                                     join_path(path, "def[" + std::to_string(i) + "]"), out);
                }
                check_wellformed(*n.body, allow_prims, join_path(path, "body"), out);
            } else if constexpr (std::is_same_v<T, Nat> || std::is_same_v<T, Bool>) {
                if (!allow_prims) out.push_back({0, "prims-disabled", "literal requires the prims extension", path});
            } else if constexpr (std::is_same_v<T, Prim>) {
                if (!allow_prims)
                    out.push_back({0, "prims-disabled", "operator requires the prims extension", path});
                check_wellformed(*n.lhs, allow_prims, join_path(path, "lhs"), out);
                check_wellformed(*n.rhs, allow_prims, join_path(path, "rhs"), out);
            } else if constexpr (std::is_same_v<T, If>) {
                if (!allow_prims) out.push_back({0, "prims-disabled", "if requires the prims extension", path});
                check_wellformed(*n.cond, allow_prims, join_path(path, "cond"), out);
                check_wellformed(*n.then_branch, allow_prims, join_path(path, "then"), out);
                check_wellformed(*n.else_branch, allow_prims, join_path(path, "else"), out);
            }
        },
        e.node);
}

}  // namespace detail

/// Checks the three syntactic conditions on every subterm: no duplicate
/// record field (1), no duplicate binder (2), and no forward reference to a
/// definition of unknown size (3). Never throws.
inline Diagnostics check_wellformed(const Expr& e, bool allow_prims = true) {
    Diagnostics out;
    detail::check_wellformed(e, allow_prims, "", out);
    return out;
}
inline Diagnostics check_wellformed(const ExprPtr& e, bool allow_prims = true) { return check_wellformed(*e, allow_prims); }

inline std::size_t node_count(const Expr& e) {
    return std::visit(
        [](const auto& n) -> std::size_t {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Lam>) return 1 + node_count(*n.body);
            else if constexpr (std::is_same_v<T, App>) return 1 + node_count(*n.fn) + node_count(*n.arg);
            else if constexpr (std::is_same_v<T, Select>) return 1 + node_count(*n.subject);
            else if constexpr (std::is_same_v<T, Letrec>) {
                std::size_t total = 1 + node_count(*n.body);
                for (const auto& d : n.binding) total += node_count(*d.rhs);
                return total;
            } else if constexpr (std::is_same_v<T, Prim>) return 1 + node_count(*n.lhs) + node_count(*n.rhs);
            else if constexpr (std::is_same_v<T, If>)
                return 1 + node_count(*n.cond) + node_count(*n.then_branch) + node_count(*n.else_branch);
            else return 1;
        },
        e.node);
}

}  // namespace xrec::source
