#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "xrec/sizing.hpp"
#include "xrec/target_syntax.hpp"

namespace xrec::target {

enum class Rule { Beta, Select, Update, Lift, IM, Let, EmptyLet, GC, Allocate, Delta };

inline std::string_view rule_name(Rule r) {
    switch (r) {
    case Rule::Beta: return "Beta_a";
    case Rule::Select: return "Select_a";
    case Rule::Update: return "Update_a";
    case Rule::Lift: return "Lift_a";
    case Rule::IM: return "IM_a";
    case Rule::Let: return "Let_a";
    case Rule::EmptyLet: return "EmptyLet_a";
    case Rule::GC: return "GC_a";
    case Rule::Allocate: return "Alloc_a";
    case Rule::Delta: return "Delta_a";
    }
    return "?";
}

/// Update, Let, EmptyLet, GC and Allocate.
inline bool is_administrative(Rule r) {
    return r == Rule::Update || r == Rule::Let || r == Rule::EmptyLet || r == Rule::GC || r == Rule::Allocate;
}

/// Child indices from the root: App 0 fn / 1 arg, Select 0, Let i for the
/// i-th right-hand side and n for the body, Prim 0 / 1, If 0 / 1 / 2.
using Path = std::vector<int>;

struct Redex {
    Rule rule;
    Path path;
    Name location;  // GC only

    friend bool operator==(const Redex&, const Redex&) = default;
};

inline std::string to_string(const Redex& r) {
    std::string out(rule_name(r.rule));
    out += "@[";
    for (std::size_t i = 0; i < r.path.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(r.path[i]);
    }
    out += "]";
    if (!r.location.empty()) out += " " + r.location;
    return out;
}

/// One case per bullet of the faulty-configuration characterization, plus
/// PrimMisuse for the arithmetic extension.
enum class FaultKind {
    UnboundCall,
    NonFunctionCall,
    NumberCalled,
    UnboundSelect,
    BadRecordSelect,
    NumberSelected,
    BareAlloc,
    UpdateUnbound,
    UpdateSizeMismatch,
    UpdateFromDummy,
    BareUpdate,
    PrimMisuse,
};

inline std::string_view to_string(FaultKind k) {
    switch (k) {
    case FaultKind::UnboundCall: return "UnboundCall";
    case FaultKind::NonFunctionCall: return "NonFunctionCall";
    case FaultKind::NumberCalled: return "NumberCalled";
    case FaultKind::UnboundSelect: return "UnboundSelect";
    case FaultKind::BadRecordSelect: return "BadRecordSelect";
    case FaultKind::NumberSelected: return "NumberSelected";
    case FaultKind::BareAlloc: return "BareAlloc";
    case FaultKind::UpdateUnbound: return "UpdateUnbound";
    case FaultKind::UpdateSizeMismatch: return "UpdateSizeMismatch";
    case FaultKind::UpdateFromDummy: return "UpdateFromDummy";
    case FaultKind::BareUpdate: return "BareUpdate";
    case FaultKind::PrimMisuse: return "PrimMisuse";
    }
    return "?";
}

// ------------------------------
// paths
// ------------------------------

namespace detail {

inline const ExprPtr& child(const Expr& e, int i) {
    if (auto a = e.as<App>()) return i == 0 ? a->fn : a->arg;
    if (auto s = e.as<Select>()) return s->subject;
    if (auto l = e.as<Let>()) {
        return static_cast<std::size_t>(i) < l->bindings.size() ? l->bindings[static_cast<std::size_t>(i)].rhs
                                                                : l->body;
    }
    if (auto p = e.as<Prim>()) return i == 0 ? p->lhs : p->rhs;
    if (auto f = e.as<If>()) return i == 0 ? f->cond : (i == 1 ? f->then_branch : f->else_branch);
    throw std::invalid_argument("path descends into a leaf or abstraction");
}

inline ExprPtr with_child(const Expr& e, int i, ExprPtr c) {
    if (auto a = e.as<App>()) return i == 0 ? app(std::move(c), a->arg) : app(a->fn, std::move(c));
    if (auto s = e.as<Select>()) return select(std::move(c), s->label);
    if (auto l = e.as<Let>()) {
        if (static_cast<std::size_t>(i) < l->bindings.size()) {
            Bindings b = l->bindings;
            b[static_cast<std::size_t>(i)].rhs = std::move(c);
            return let(std::move(b), l->body);
        }
        return let(l->bindings, std::move(c));
    }
    if (auto p = e.as<Prim>()) return i == 0 ? prim(p->op, std::move(c), p->rhs) : prim(p->op, p->lhs, std::move(c));
    if (auto f = e.as<If>()) {
        if (i == 0) return if_then_else(std::move(c), f->then_branch, f->else_branch);
        if (i == 1) return if_then_else(f->cond, std::move(c), f->else_branch);
        return if_then_else(f->cond, f->then_branch, std::move(c));
    }
    throw std::invalid_argument("path descends into a leaf or abstraction");
}

inline ExprPtr replace_at(const ExprPtr& root, const Path& path, std::size_t depth, ExprPtr repl) {
    if (depth == path.size()) return repl;
    return with_child(*root, path[depth], replace_at(child(*root, path[depth]), path, depth + 1, std::move(repl)));
}

}  // namespace detail

inline ExprPtr node_at(const ExprPtr& root, const Path& path) {
    const ExprPtr* cur = &root;
    for (int i : path) cur = &detail::child(**cur, i);
    return *cur;
}

inline ExprPtr replace_at(const ExprPtr& root, const Path& path, ExprPtr repl) {
    return detail::replace_at(root, path, 0, std::move(repl));
}

// ------------------------------
// redex recognition
// ------------------------------

struct EvalOptions {
    SizeModel sizes{};
};

namespace detail {

inline const Name* var_name(const Expr& e) {
    auto v = e.as<Var>();
    return v ? &v->name : nullptr;
}

// The `update x y` shape with two variables.
inline bool update_shape(const Expr& e, const Name** x, const Name** y) {
    auto outer = e.as<App>();
    if (!outer) return false;
    auto inner = outer->fn->as<App>();
    if (!inner || !inner->fn->is<Update>()) return false;
    *x = var_name(*inner->arg);
    *y = var_name(*outer->arg);
    return *x && *y;
}

inline bool update_applicable(const Heap& heap, const Name& x, const Name& y, const SizeModel& sizes) {
    auto hx = heap.find(x);
    auto hy = heap.find(y);
    if (!hx || !hy) return false;
    if (std::holds_alternative<AllocBlock>(*hy)) return false;
    return size_stored_value(*hx, sizes) == size_stored_value(*hy, sizes);
}

// Lift contexts: `E []`, `[] V`, `[].X` and the operand positions of the
// arithmetic extension that evaluation passes through.
inline bool lift_shape(const Expr& e) {
    if (auto a = e.as<App>()) return a->arg->is<Let>() || (a->fn->is<Let>() && is_value(*a->arg));
    if (auto s = e.as<Select>()) return s->subject->is<Let>();
    if (auto p = e.as<Prim>()) {
        if (is_short_circuit(p->op)) return p->lhs->is<Let>();
        return p->rhs->is<Let>() || (p->lhs->is<Let>() && is_value(*p->rhs));
    }
    if (auto f = e.as<If>()) return f->cond->is<Let>();
    return false;
}

inline bool delta_shape(const Expr& e) {
    if (auto p = e.as<Prim>()) {
        auto l = literal_of(*p->lhs);
        if (is_short_circuit(p->op)) return l && std::holds_alternative<bool>(*l);
        auto r = literal_of(*p->rhs);
        return l && r && apply_strict(p->op, *l, *r).has_value();
    }
    if (auto f = e.as<If>()) return f->cond->is<Bool>();
    return false;
}

/// Rule applicable at a node sitting in an evaluation-context hole.
inline std::optional<Rule> contextual_rule(const Expr& e, const Heap& heap, const SizeModel& sizes) {
    const Name* x = nullptr;
    const Name* y = nullptr;
    if (update_shape(e, &x, &y)) {
        if (update_applicable(heap, *x, *y, sizes)) return Rule::Update;
        return std::nullopt;
    }
    if (auto a = e.as<App>()) {
        if (auto f = var_name(*a->fn); f && is_value(*a->arg)) {
            auto hv = heap.find(*f);
            if (hv && std::holds_alternative<LamBlock>(*hv)) return Rule::Beta;
        }
    }
    if (auto s = e.as<Select>()) {
        if (auto r = var_name(*s->subject)) {
            auto hv = heap.find(*r);
            if (hv) {
                if (auto rec = std::get_if<RecordBlock>(hv)) {
                    for (const auto& f : rec->fields)
                        if (f.label == s->label) return Rule::Select;
                }
            }
        }
    }
    if (lift_shape(e)) return Rule::Lift;
    if (delta_shape(e)) return Rule::Delta;
    return std::nullopt;
}

// Enumerates every nested-lift-context position below `e`.
inline void f_positions(const ExprPtr& e, Path& path, const std::function<void(const ExprPtr&, const Path&)>& visit) {
    visit(e, path);
    auto go = [&](int i, const ExprPtr& c) {
        path.push_back(i);
        f_positions(c, path, visit);
        path.pop_back();
    };
    if (auto a = e->as<App>()) {
        go(1, a->arg);
        if (is_value(*a->arg)) go(0, a->fn);
    } else if (auto s = e->as<Select>()) {
        go(0, s->subject);
    } else if (auto p = e->as<Prim>()) {
        if (is_short_circuit(p->op)) {
            go(0, p->lhs);
        } else {
            go(1, p->rhs);
            if (is_value(*p->rhs)) go(0, p->lhs);
        }
    } else if (auto f = e->as<If>()) {
        go(0, f->cond);
    }
}

// Enumerates allocation-context positions with the binders captured there.
inline void a_positions(const ExprPtr& e, Path& path, std::vector<Name>& capt,
                        const std::function<void(const ExprPtr&, const Path&, const std::vector<Name>&)>& visit) {
    visit(e, path, capt);
    auto go = [&](int i, const ExprPtr& c) {
        path.push_back(i);
        a_positions(c, path, capt, visit);
        path.pop_back();
    };
    if (auto a = e->as<App>()) {
        go(0, a->fn);
        go(1, a->arg);
    } else if (auto s = e->as<Select>()) {
        go(0, s->subject);
    } else if (auto l = e->as<Let>()) {
        auto mark = capt.size();
        for (std::size_t i = 0; i < l->bindings.size(); ++i) {
            go(static_cast<int>(i), l->bindings[i].rhs);
            if (l->bindings[i].binder) capt.push_back(*l->bindings[i].binder);
        }
        go(static_cast<int>(l->bindings.size()), l->body);
        capt.resize(mark);
    } else if (auto p = e->as<Prim>()) {
        go(0, p->lhs);
        if (!is_short_circuit(p->op)) go(1, p->rhs);
    } else if (auto f = e->as<If>()) {
        go(0, f->cond);
    }
}

inline bool allocatable(const Expr& e, const std::vector<Name>& capt) {
    auto hv = as_stored(e);
    if (!hv) return false;
    if (capt.empty()) return true;
    for (const auto& x : capt)
        if (occurs_free(*hv, x)) return false;
    return true;
}

inline bool gc_applicable(const Configuration& c, const Name& x) {
    return c.heap.contains(x) && c.heap.mentions_from_others(x) == 0 && !occurs_free(*c.expr, x);
}

}  // namespace detail

/// Every (rule, position) instance applicable to `c`.
inline std::vector<Redex> applicable_redexes(const Configuration& c, const EvalOptions& opts = {}) {
    std::vector<Redex> out;
    Path path;
    auto contextual = [&](const ExprPtr& e, const Path& p) {
        if (auto r = detail::contextual_rule(*e, c.heap, opts.sizes)) out.push_back({*r, p, {}});
    };
    if (auto l = c.expr->as<Let>()) {
        if (l->bindings.empty()) {
            out.push_back({Rule::EmptyLet, {}, {}});
        } else {
            const auto& first = l->bindings.front().rhs;
            if (first->is<Let>()) out.push_back({Rule::IM, {}, {}});
            if (is_value(*first)) out.push_back({Rule::Let, {}, {}});
            path.push_back(0);
            detail::f_positions(first, path, contextual);
            path.pop_back();
        }
    } else {
        detail::f_positions(c.expr, path, contextual);
    }
    std::vector<Name> capt;
    detail::a_positions(c.expr, path, capt, [&](const ExprPtr& e, const Path& p, const std::vector<Name>& cp) {
        if (detail::allocatable(*e, cp)) out.push_back({Rule::Allocate, p, {}});
    });
    c.heap.for_each([&](const Name& x, const StoredValue&) {
        if (detail::gc_applicable(c, x)) out.push_back({Rule::GC, {}, x});
    });
    return out;
}

// ------------------------------
// rule application
// ------------------------------

namespace detail {

inline Name fresh_location(const Configuration& c) {
    LocationSupply supply;
    c.heap.for_each([&](const Name& x, const StoredValue& hv) {
        supply.reserve(x);
        for (const auto& y : free_vars(hv)) supply.reserve(y);
    });
    for (const auto& y : free_vars(*c.expr)) supply.reserve(y);
    return supply.fresh();
}

// Renames the binders of `l` that fall in `avoid`.
inline Let rename_let_away(const Let& l, const NameSet& avoid, NameSupply& supply) {
    NameSet taken = avoid;
    for (const auto& b : l.bindings) {
        if (b.binder) taken.insert(*b.binder);
        NameSet bound;
        collect_free(*b.rhs, bound, taken);
    }
    {
        NameSet bound;
        collect_free(*l.body, bound, taken);
    }
    Substitution sub;
    Let out;
    for (const auto& b : l.bindings) {
        auto rhs = substitute(sub, b.rhs, supply);
        Binder binder = b.binder;
        if (b.binder) {
            if (avoid.contains(*b.binder)) {
                auto fresh = supply.fresh(*b.binder, taken);
                taken.insert(fresh);
                sub[*b.binder] = Value{fresh};
                binder = fresh;
            } else {
                sub.erase(*b.binder);
            }
        }
        out.bindings.push_back({binder, rhs});
    }
    out.body = substitute(sub, l.body, supply);
    return out;
}

inline ExprPtr apply_lift(const Expr& e, NameSupply& supply) {
    auto lifted = [&](const Let& l, const NameSet& avoid, const std::function<ExprPtr(ExprPtr)>& rebuild) {
        auto renamed = rename_let_away(l, avoid, supply);
        return let(std::move(renamed.bindings), rebuild(renamed.body));
    };
    if (auto a = e.as<App>()) {
        if (auto l = a->arg->as<Let>()) {
            return lifted(*l, free_vars(*a->fn), [&](ExprPtr b) { return app(a->fn, std::move(b)); });
        }
        return lifted(*a->fn->as<Let>(), free_vars(*a->arg), [&](ExprPtr b) { return app(std::move(b), a->arg); });
    }
    if (auto s = e.as<Select>()) {
        return lifted(*s->subject->as<Let>(), {}, [&](ExprPtr b) { return select(std::move(b), s->label); });
    }
    if (auto p = e.as<Prim>()) {
        if (auto l = p->rhs->as<Let>(); l && !is_short_circuit(p->op)) {
            return lifted(*l, free_vars(*p->lhs), [&](ExprPtr b) { return prim(p->op, p->lhs, std::move(b)); });
        }
        return lifted(*p->lhs->as<Let>(), free_vars(*p->rhs),
                      [&](ExprPtr b) { return prim(p->op, std::move(b), p->rhs); });
    }
    const auto& f = *e.as<If>();
    NameSet avoid = free_vars(*f.then_branch);
    auto more = free_vars(*f.else_branch);
    avoid.insert(more.begin(), more.end());
    return lifted(*f.cond->as<Let>(), avoid,
                  [&](ExprPtr b) { return if_then_else(std::move(b), f.then_branch, f.else_branch); });
}

inline ExprPtr apply_delta(const Expr& e) {
    if (auto p = e.as<Prim>()) {
        auto l = literal_of(*p->lhs);
        if (is_short_circuit(p->op)) {
            bool b = std::get<bool>(*l);
            bool decided = p->op == PrimOp::Or ? b : !b;
            return decided ? boolean(b) : p->rhs;
        }
        return from_literal(*apply_strict(p->op, *l, *literal_of(*p->rhs)));
    }
    const auto& f = *e.as<If>();
    return f.cond->as<Bool>()->value ? f.then_branch : f.else_branch;
}

}  // namespace detail

/// Applies `r` to `c` in place. `fresh` supplies the location for Allocate.
/// Throws std::invalid_argument if `r` does not apply.
inline void apply_rule_in_place(Configuration& c, const Redex& r, const Name& fresh, NameSupply& supply,
                                const EvalOptions& opts = {}) {
    auto fail = [&] { throw std::invalid_argument("redex " + to_string(r) + " does not apply"); };
    switch (r.rule) {
    case Rule::GC:
        if (!detail::gc_applicable(c, r.location)) fail();
        c.heap.erase(r.location);
        return;
    case Rule::EmptyLet: {
        auto l = c.expr->as<Let>();
        if (!l || !l->bindings.empty() || !r.path.empty()) fail();
        c.expr = l->body;
        return;
    }
    case Rule::Let: {
        auto l = c.expr->as<Let>();
        if (!l || l->bindings.empty() || !r.path.empty() || !is_value(*l->bindings.front().rhs)) fail();
        Bindings rest(l->bindings.begin() + 1, l->bindings.end());
        auto remaining = let(std::move(rest), l->body);
        const auto& bd = l->bindings.front().binder;
        c.expr = bd ? substitute({{*bd, *value_of(*l->bindings.front().rhs)}}, remaining, supply) : remaining;
        return;
    }
    case Rule::IM: {
        auto l = c.expr->as<Let>();
        if (!l || l->bindings.empty() || !r.path.empty()) fail();
        auto inner = l->bindings.front().rhs->as<Let>();
        if (!inner) fail();
        NameSet avoid;
        if (l->bindings.front().binder) avoid.insert(*l->bindings.front().binder);
        for (std::size_t i = 1; i < l->bindings.size(); ++i) {
            if (l->bindings[i].binder) avoid.insert(*l->bindings[i].binder);
            auto fv = free_vars(*l->bindings[i].rhs);
            avoid.insert(fv.begin(), fv.end());
        }
        auto fv = free_vars(*l->body);
        avoid.insert(fv.begin(), fv.end());
        auto renamed = detail::rename_let_away(*inner, avoid, supply);
        Bindings merged = renamed.bindings;
        merged.push_back({l->bindings.front().binder, renamed.body});
        merged.insert(merged.end(), l->bindings.begin() + 1, l->bindings.end());
        c.expr = let(std::move(merged), l->body);
        return;
    }
    case Rule::Allocate: {
        auto node = node_at(c.expr, r.path);
        auto hv = as_stored(*node);
        if (!hv || c.heap.contains(fresh)) fail();
        c.heap.insert(fresh, std::move(*hv));
        c.expr = replace_at(c.expr, r.path, var(fresh));
        return;
    }
    default: break;
    }
    auto node = node_at(c.expr, r.path);
    auto rule = detail::contextual_rule(*node, c.heap, opts.sizes);
    if (rule != r.rule) fail();
    ExprPtr repl;
    switch (r.rule) {
    case Rule::Beta: {
        const auto& a = *node->as<App>();
        const auto& f = std::get<LamBlock>(c.heap.at(a.fn->as<Var>()->name));
        repl = substitute({{f.param, *value_of(*a.arg)}}, f.body, supply);
        break;
    }
    case Rule::Select: {
        const auto& s = *node->as<Select>();
        const auto& rec = std::get<RecordBlock>(c.heap.at(s.subject->as<Var>()->name));
        for (const auto& f : rec.fields)
            if (f.label == s.label) repl = from_value(f.value);
        break;
    }
    case Rule::Update: {
        const Name* x = nullptr;
        const Name* y = nullptr;
        detail::update_shape(*node, &x, &y);
        auto copied = c.heap.at(*y);
        c.heap.assign(*x, std::move(copied));
        repl = record({});
        break;
    }
    case Rule::Lift: repl = detail::apply_lift(*node, supply); break;
    case Rule::Delta: repl = detail::apply_delta(*node); break;
    default: fail();
    }
    c.expr = replace_at(c.expr, r.path, repl);
}

/// Functional form of apply_rule_in_place with a fresh location computed
/// from the configuration.
inline Configuration apply_rule(const Configuration& c, const Redex& r, const EvalOptions& opts = {}) {
    Configuration out = c;
    NameSupply supply;
    apply_rule_in_place(out, r, r.rule == Rule::Allocate ? detail::fresh_location(c) : Name{}, supply, opts);
    return out;
}

// ------------------------------
// deterministic strategy
// ------------------------------

/// Result of looking for the next deterministic step.
struct Focus {
    enum class Kind { Step, Answer, Stuck };
    Kind kind = Kind::Stuck;
    Redex redex{Rule::Beta, {}, {}};
    std::optional<FaultKind> fault;
};

namespace detail {

inline Focus step_at(Redex r) { return Focus{Focus::Kind::Step, std::move(r), std::nullopt}; }
inline Focus stuck_at(FaultKind k) { return Focus{Focus::Kind::Stuck, {Rule::Beta, {}, {}}, k}; }

// Walks the unique evaluation path. `parents` holds the nodes above the
// current one, used to recognize `update x y` around an update leaf.
inline Focus find_focus(const ExprPtr& e, Path& path, std::vector<const Expr*>& parents, const Heap& heap,
                        const SizeModel& sizes) {
    auto sub = [&](int i, const ExprPtr& c) -> std::optional<Focus> {
        if (is_stored_value(*c)) {
            path.push_back(i);
            return step_at({Rule::Allocate, path, {}});
        }
        if (c->is<Let>()) return step_at({Rule::Lift, path, {}});
        if (!is_value(*c)) {
            path.push_back(i);
            parents.push_back(e.get());
            return find_focus(c, path, parents, heap, sizes);
        }
        return std::nullopt;
    };

    const Expr& n = *e;
    if (n.is<Update>()) {
        // update x y: parents are (update x) then ((update x) y)
        if (parents.size() >= 2) {
            const Expr* outer = parents[parents.size() - 2];
            const Name* x = nullptr;
            const Name* y = nullptr;
            if (update_shape(*outer, &x, &y) && path.size() >= 2 && path[path.size() - 1] == 0 &&
                path[path.size() - 2] == 0) {
                auto hx = heap.find(*x);
                auto hy = heap.find(*y);
                if (!hx || !hy) return stuck_at(FaultKind::UpdateUnbound);
                if (std::holds_alternative<AllocBlock>(*hy)) return stuck_at(FaultKind::UpdateFromDummy);
                if (size_stored_value(*hx, sizes) != size_stored_value(*hy, sizes))
                    return stuck_at(FaultKind::UpdateSizeMismatch);
                Path p(path.begin(), path.end() - 2);
                return step_at({Rule::Update, p, {}});
            }
        }
        return stuck_at(FaultKind::BareUpdate);
    }
    if (n.is<Alloc>()) return stuck_at(FaultKind::BareAlloc);
    if (auto a = n.as<App>()) {
        if (auto f = sub(1, a->arg)) return *f;
        if (auto f = sub(0, a->fn)) return *f;
        if (auto x = var_name(*a->fn)) {
            auto hv = heap.find(*x);
            if (!hv) return stuck_at(FaultKind::UnboundCall);
            if (!std::holds_alternative<LamBlock>(*hv)) return stuck_at(FaultKind::NonFunctionCall);
            return step_at({Rule::Beta, path, {}});
        }
        if (a->fn->is<Nat>()) return stuck_at(FaultKind::NumberCalled);
        return stuck_at(FaultKind::PrimMisuse);
    }
    if (auto s = n.as<Select>()) {
        if (auto f = sub(0, s->subject)) return *f;
        if (auto x = var_name(*s->subject)) {
            auto hv = heap.find(*x);
            if (!hv) return stuck_at(FaultKind::UnboundSelect);
            if (auto rec = std::get_if<RecordBlock>(hv)) {
                for (const auto& fl : rec->fields)
                    if (fl.label == s->label) return step_at({Rule::Select, path, {}});
            }
            return stuck_at(FaultKind::BadRecordSelect);
        }
        if (s->subject->is<Nat>()) return stuck_at(FaultKind::NumberSelected);
        return stuck_at(FaultKind::PrimMisuse);
    }
    if (auto p = n.as<Prim>()) {
        if (is_short_circuit(p->op)) {
            if (auto f = sub(0, p->lhs)) return *f;
        } else {
            if (auto f = sub(1, p->rhs)) return *f;
            if (auto f = sub(0, p->lhs)) return *f;
        }
        if (delta_shape(n)) return step_at({Rule::Delta, path, {}});
        return stuck_at(FaultKind::PrimMisuse);
    }
    if (auto f = n.as<If>()) {
        if (auto r = sub(0, f->cond)) return *r;
        if (delta_shape(n)) return step_at({Rule::Delta, path, {}});
        return stuck_at(FaultKind::PrimMisuse);
    }
    throw std::logic_error("find_focus reached a value or binder");
}

}  // namespace detail

/// Next step of the deterministic strategy: at the unique evaluation focus,
/// allocate a stored value, otherwise EmptyLet, Let, IM, Lift, or the
/// computational rule found there.
inline Focus deterministic_focus(const Configuration& c, const EvalOptions& opts = {}) {
    Path path;
    std::vector<const Expr*> parents;
    const auto& e = c.expr;
    if (is_value(*e)) return Focus{Focus::Kind::Answer, {Rule::Beta, {}, {}}, std::nullopt};
    if (is_stored_value(*e)) return detail::step_at({Rule::Allocate, {}, {}});
    if (auto l = e->as<Let>()) {
        if (l->bindings.empty()) return detail::step_at({Rule::EmptyLet, {}, {}});
        const auto& first = l->bindings.front().rhs;
        if (is_stored_value(*first)) return detail::step_at({Rule::Allocate, {0}, {}});
        if (is_value(*first)) return detail::step_at({Rule::Let, {}, {}});
        if (first->is<Let>()) return detail::step_at({Rule::IM, {}, {}});
        path.push_back(0);
        parents.push_back(e.get());
        return detail::find_focus(first, path, parents, c.heap, opts.sizes);
    }
    return detail::find_focus(e, path, parents, c.heap, opts.sizes);
}

/// Fault kind of a configuration in deterministic normal form. Throws
/// std::invalid_argument on answers and reducible configurations.
inline FaultKind classify_stuck(const Configuration& c, const EvalOptions& opts = {}) {
    auto f = deterministic_focus(c, opts);
    if (f.kind == Focus::Kind::Answer) throw std::invalid_argument("classify_stuck: configuration is an answer");
    if (f.kind == Focus::Kind::Step) throw std::invalid_argument("classify_stuck: configuration is reducible");
    return *f.fault;
}

struct TraceStep {
    std::size_t index;
    Redex redex;
    Configuration config;
};

struct Outcome {
    enum class Kind { Answer, Faulty, FuelExhausted };
    Kind kind = Kind::FuelExhausted;
    Configuration config;
    std::optional<FaultKind> fault;
    std::size_t steps = 0;
};

inline std::string_view to_string(Outcome::Kind k) {
    switch (k) {
    case Outcome::Kind::Answer: return "Answer";
    case Outcome::Kind::Faulty: return "Faulty";
    case Outcome::Kind::FuelExhausted: return "FuelExhausted";
    }
    return "?";
}

struct Run {
    Outcome outcome;
    std::vector<TraceStep> trace;
};

struct RunOptions {
    std::size_t fuel = 100000;
    bool record_trace = true;
    SizeModel sizes{};
};

/// Deterministic driver with its per-run location and name supplies. GC is
/// applied right after an Update to the copied-from block, and right after
/// a wildcard Let discards a location, whenever the block is then dead.
class Machine {
public:
    explicit Machine(Configuration c, SizeModel sizes = {}) : config_(std::move(c)) {
        opts_.sizes = sizes;
        config_.heap.for_each([&](const Name& x, const StoredValue& hv) {
            locations_.reserve(x);
            for (const auto& y : free_vars(hv)) locations_.reserve(y);
        });
        for (const auto& y : free_vars(*config_.expr)) locations_.reserve(y);
    }

    const Configuration& config() const { return config_; }

    /// Performs one step; nullopt at an answer or a stuck configuration
    /// (see focus()).
    std::optional<Redex> step() {
        if (gc_candidate_) {
            auto x = *gc_candidate_;
            gc_candidate_.reset();
            if (detail::gc_applicable(config_, x)) {
                Redex r{Rule::GC, {}, x};
                apply_rule_in_place(config_, r, {}, names_, opts_);
                return r;
            }
        }
        auto f = deterministic_focus(config_, opts_);
        last_ = f;
        if (f.kind != Focus::Kind::Step) return std::nullopt;
        const auto& r = f.redex;
        if (r.rule == Rule::Update) {
            const Name* x = nullptr;
            const Name* y = nullptr;
            detail::update_shape(*node_at(config_.expr, r.path), &x, &y);
            gc_candidate_ = *y;
        } else if (r.rule == Rule::Let) {
            const auto& first = config_.expr->as<Let>()->bindings.front();
            if (!first.binder) {
                if (auto x = detail::var_name(*first.rhs)) gc_candidate_ = *x;
            }
        }
        apply_rule_in_place(config_, r, r.rule == Rule::Allocate ? locations_.fresh() : Name{}, names_, opts_);
        return r;
    }

    const Focus& last_focus() const { return last_; }

private:
    Configuration config_;
    EvalOptions opts_;
    LocationSupply locations_;
    NameSupply names_;
    std::optional<Name> gc_candidate_;
    Focus last_;
};

/// Single deterministic step as a pure function.
inline std::optional<std::pair<Configuration, Redex>> step_deterministic(const Configuration& c,
                                                                         const EvalOptions& opts = {}) {
    auto f = deterministic_focus(c, opts);
    if (f.kind != Focus::Kind::Step) return std::nullopt;
    return std::pair{apply_rule(c, f.redex, opts), f.redex};
}

inline Run run_target(const Configuration& c, const RunOptions& opts = {}) {
    Run run;
    Machine m(c, opts.sizes);
    for (std::size_t step = 0;; ++step) {
        if (step == opts.fuel) {
            // Out of fuel unless the configuration is already final.
            auto f = deterministic_focus(m.config(), EvalOptions{opts.sizes});
            if (f.kind == Focus::Kind::Step) {
                run.outcome = {Outcome::Kind::FuelExhausted, m.config(), std::nullopt, step};
                return run;
            }
        }
        auto r = m.step();
        if (!r) {
            const auto& f = m.last_focus();
            if (f.kind == Focus::Kind::Answer) {
                run.outcome = {Outcome::Kind::Answer, m.config(), std::nullopt, step};
            } else {
                run.outcome = {Outcome::Kind::Faulty, m.config(), f.fault, step};
            }
            return run;
        }
        if (opts.record_trace) run.trace.push_back({step + 1, *r, m.config()});
    }
}

inline Run run_target(const Configuration& c, std::size_t fuel) {
    RunOptions opts;
    opts.fuel = fuel;
    return run_target(c, opts);
}

// ------------------------------
// administrative normalization
// ------------------------------

struct AdminResult {
    Configuration config;
    bool completed = false;
    std::size_t steps = 0;
};

/// Applies Update, Let, EmptyLet, GC and Allocate until none applies or the
/// step budget runs out (completed = false).
inline AdminResult admin_normalize(const Configuration& c, std::size_t budget = 100000,
                                   const EvalOptions& opts = {}) {
    AdminResult out{c, false, 0};
    LocationSupply locations;
    out.config.heap.for_each([&](const Name& x, const StoredValue& hv) {
        locations.reserve(x);
        for (const auto& y : free_vars(hv)) locations.reserve(y);
    });
    for (const auto& y : free_vars(*out.config.expr)) locations.reserve(y);
    NameSupply names;
    for (;;) {
        std::optional<Redex> chosen;
        for (auto& r : applicable_redexes(out.config, opts)) {
            if (is_administrative(r.rule)) {
                chosen = std::move(r);
                break;
            }
        }
        if (!chosen) {
            out.completed = true;
            return out;
        }
        if (out.steps == budget) return out;
        apply_rule_in_place(out.config, *chosen, chosen->rule == Rule::Allocate ? locations.fresh() : Name{}, names,
                            opts);
        ++out.steps;
    }
}

}  // namespace xrec::target
