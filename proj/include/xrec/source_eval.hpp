#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "xrec/sizing.hpp"
#include "xrec/source_syntax.hpp"

namespace xrec::source {

/// The ways a normal form can fail to be an answer. PrimMisuse covers the
/// arithmetic extension (a literal called or selected, an ill-typed
/// operand); the other five are the calculus' own cases.
enum class FaultKind {
    UndefinedVariableDeref,
    SizeMismatch,
    RecordApplied,
    MissingField,
    FunctionSelected,
    PrimMisuse,
};

inline std::string_view to_string(FaultKind k) {
    switch (k) {
    case FaultKind::UndefinedVariableDeref: return "UndefinedVariableDeref";
    case FaultKind::SizeMismatch: return "SizeMismatch";
    case FaultKind::RecordApplied: return "RecordApplied";
    case FaultKind::MissingField: return "MissingField";
    case FaultKind::FunctionSelected: return "FunctionSelected";
    case FaultKind::PrimMisuse: return "PrimMisuse";
    }
    return "?";
}

inline std::optional<FaultKind> fault_kind_from_string(std::string_view s) {
    for (auto k : {FaultKind::UndefinedVariableDeref, FaultKind::SizeMismatch, FaultKind::RecordApplied,
                   FaultKind::MissingField, FaultKind::FunctionSelected, FaultKind::PrimMisuse})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

// ------------------------------
// answers
// ------------------------------

inline bool is_size_respecting(const Definition& d, const SizeModel& model = {}) {
    if (!is_value(*d.rhs)) return false;
    if (!d.size.is_known()) return true;
    auto size = size_source_value(*d.rhs, model);
    return size && *size == d.size.words();
}

inline std::size_t size_respecting_prefix(const Binding& b, const SizeModel& model = {}) {
    std::size_t k = 0;
    while (k < b.size() && is_size_respecting(b[k], model)) ++k;
    return k;
}

inline bool is_answer(const Expr& e, const SizeModel& model = {}) {
    if (is_value(e)) return true;
    auto l = e.as<Letrec>();
    return l && size_respecting_prefix(l->binding, model) == l->binding.size() && is_value(*l->body);
}

// ------------------------------
// contexts
// ------------------------------

/// One layer of a nested lift context. Besides the three calculus layers
/// (`e []`, `[] v`, `[].X`) the arithmetic extension adds operand and
/// condition positions.
struct Frame {
    enum class Kind {
        AppArg,    // e []
        AppFn,     // [] v
        Select,    // [].X
        PrimRhs,   // e op []
        PrimLhs,   // [] op v, and the left operand of and/or
        IfCond,    // if [] then e1 else e2
    };
    Kind kind;
    ExprPtr other;  // function, argument or sibling operand; then-branch for IfCond
    ExprPtr extra;  // else-branch for IfCond
    Name label;
    PrimOp op = PrimOp::Add;

    ExprPtr plug(ExprPtr e) const {
        switch (kind) {
        case Kind::AppArg: return app(other, std::move(e));
        case Kind::AppFn: return app(std::move(e), other);
        case Kind::Select: return select(std::move(e), label);
        case Kind::PrimRhs: return prim(op, other, std::move(e));
        case Kind::PrimLhs: return prim(op, std::move(e), other);
        case Kind::IfCond: return if_then_else(std::move(e), other, extra);
        }
        return e;
    }

    /// Dereferencing layers force the variable in their hole.
    bool dereferences() const { return kind != Kind::AppArg; }

    NameSet free_vars() const {
        NameSet out;
        if (other) out = source::free_vars(*other);
        if (extra) {
            auto more = source::free_vars(*extra);
            out.insert(more.begin(), more.end());
        }
        return out;
    }
};

/// Evaluation context: a nested lift context F, possibly under the
/// evaluated part of the top-level binding or inside its first unevaluated
/// definition.
struct EvalContext {
    enum class Stage { Nested, UnderBinding, InBinding };
    Stage stage = Stage::Nested;
    Binding bv;
    Name var;
    SizeIndication size;
    Binding rest;
    ExprPtr body;
    std::vector<Frame> frames;  // outermost first

    ExprPtr plug_frames(ExprPtr e) const {
        for (auto it = frames.rbegin(); it != frames.rend(); ++it) e = it->plug(std::move(e));
        return e;
    }

    ExprPtr plug(ExprPtr focus) const {
        auto inner = plug_frames(std::move(focus));
        switch (stage) {
        case Stage::Nested: return inner;
        case Stage::UnderBinding: return letrec(bv, inner);
        case Stage::InBinding: {
            Binding b = bv;
            b.push_back({var, size, inner});
            b.insert(b.end(), rest.begin(), rest.end());
            return letrec(std::move(b), body);
        }
        }
        return inner;
    }

    /// True when the hole is a dereferencing position.
    bool dereferencing() const {
        if (!frames.empty()) return frames.back().dereferences();
        return stage == Stage::InBinding && size.is_known();
    }
};

/// Value of x in the context: its definition in the evaluated prefix of the
/// top-level binding, if any.
inline std::optional<ExprPtr> lookup_context(const EvalContext& ctx, const Name& x) {
    if (ctx.stage == EvalContext::Stage::Nested) return std::nullopt;
    if (auto d = find_definition(ctx.bv, x)) return d->rhs;
    return std::nullopt;
}

struct Decomposition {
    EvalContext context;
    ExprPtr focus;
};

namespace detail {

inline ExprPtr descend(const ExprPtr& e, std::vector<Frame>& frames) {
    const Expr& n = *e;
    if (auto a = n.as<App>()) {
        if (!is_value(*a->arg)) {
            frames.push_back({Frame::Kind::AppArg, a->fn, nullptr, {}, {}});
            return descend(a->arg, frames);
        }
        if (!is_value(*a->fn)) {
            frames.push_back({Frame::Kind::AppFn, a->arg, nullptr, {}, {}});
            return descend(a->fn, frames);
        }
        if (a->fn->is<Var>()) {
            frames.push_back({Frame::Kind::AppFn, a->arg, nullptr, {}, {}});
            return a->fn;
        }
        return e;
    }
    if (auto s = n.as<Select>()) {
        if (!is_value(*s->subject) || s->subject->is<Var>()) {
            frames.push_back({Frame::Kind::Select, nullptr, nullptr, s->label, {}});
            return is_value(*s->subject) ? s->subject : descend(s->subject, frames);
        }
        return e;
    }
    if (auto p = n.as<Prim>()) {
        if (is_short_circuit(p->op)) {
            if (!is_value(*p->lhs) || p->lhs->is<Var>()) {
                frames.push_back({Frame::Kind::PrimLhs, p->rhs, nullptr, {}, p->op});
                return is_value(*p->lhs) ? p->lhs : descend(p->lhs, frames);
            }
            return e;
        }
        if (!is_value(*p->rhs)) {
            frames.push_back({Frame::Kind::PrimRhs, p->lhs, nullptr, {}, p->op});
            return descend(p->rhs, frames);
        }
        if (!is_value(*p->lhs) || p->lhs->is<Var>()) {
            frames.push_back({Frame::Kind::PrimLhs, p->rhs, nullptr, {}, p->op});
            return is_value(*p->lhs) ? p->lhs : descend(p->lhs, frames);
        }
        if (p->rhs->is<Var>()) {
            frames.push_back({Frame::Kind::PrimRhs, p->lhs, nullptr, {}, p->op});
            return p->rhs;
        }
        return e;
    }
    if (auto i = n.as<If>()) {
        if (!is_value(*i->cond) || i->cond->is<Var>()) {
            frames.push_back({Frame::Kind::IfCond, i->then_branch, i->else_branch, {}, {}});
            return is_value(*i->cond) ? i->cond : descend(i->cond, frames);
        }
        return e;
    }
    return e;
}

}  // namespace detail

/// Maximal decomposition: the deepest focus, arguments before functions,
/// past the size-respecting prefix of the top-level binding. nullopt when
/// the term is an answer.
inline std::optional<Decomposition> decompose(const ExprPtr& e, const SizeModel& model = {}) {
    if (is_answer(*e, model)) return std::nullopt;
    Decomposition d;
    if (auto l = e->as<Letrec>()) {
        auto k = size_respecting_prefix(l->binding, model);
        d.context.bv.assign(l->binding.begin(), l->binding.begin() + static_cast<std::ptrdiff_t>(k));
        if (k < l->binding.size()) {
            const auto& def = l->binding[k];
            d.context.stage = EvalContext::Stage::InBinding;
            d.context.var = def.var;
            d.context.size = def.size;
            d.context.rest.assign(l->binding.begin() + static_cast<std::ptrdiff_t>(k) + 1, l->binding.end());
            d.context.body = l->body;
            d.focus = detail::descend(def.rhs, d.context.frames);
        } else {
            d.context.stage = EvalContext::Stage::UnderBinding;
            d.focus = detail::descend(l->body, d.context.frames);
        }
    } else {
        d.focus = detail::descend(e, d.context.frames);
    }
    return d;
}

// ------------------------------
// rules
// ------------------------------

namespace detail {

inline ExprPtr lift(const Frame& frame, const Letrec& l, NameSupply& supply) {
    auto avoid = frame.free_vars();
    auto [b, body] = rename_binding_away(l.binding, l.body, avoid, supply);
    return letrec(std::move(b), frame.plug(body));
}

inline std::optional<ExprPtr> beta(const Lam& f, const ExprPtr& v, NameSupply& supply) {
    auto fv = free_vars(*v);
    if (!fv.contains(f.param)) return letrec({{f.param, SizeIndication::unknown(), v}}, f.body);
    NameSet avoid = fv;
    detail::collect_names(*f.body, avoid);
    auto fresh = supply.fresh(f.param, avoid);
    auto body = substitute({{f.param, var(fresh)}}, f.body, supply);
    return letrec({{fresh, SizeIndication::unknown(), v}}, body);
}

}  // namespace detail

/// Subreduction at the root of `e`: Select, Beta or Lift. nullopt if none
/// applies.
inline std::optional<std::pair<ExprPtr, std::string>> subreduce(const ExprPtr& e, NameSupply& supply) {
    if (auto s = e->as<Select>()) {
        if (auto r = s->subject->as<Record>()) {
            for (const auto& f : r->fields)
                if (f.label == s->label) return std::pair{var(f.var), std::string("Select")};
            return std::nullopt;
        }
        if (auto l = s->subject->as<Letrec>()) {
            Frame fr{Frame::Kind::Select, nullptr, nullptr, s->label, {}};
            return std::pair{detail::lift(fr, *l, supply), std::string("Lift")};
        }
        return std::nullopt;
    }
    if (auto a = e->as<App>()) {
        if (auto l = a->arg->as<Letrec>()) {
            Frame fr{Frame::Kind::AppArg, a->fn, nullptr, {}, {}};
            return std::pair{detail::lift(fr, *l, supply), std::string("Lift")};
        }
        if (!is_value(*a->arg)) return std::nullopt;
        if (auto l = a->fn->as<Letrec>()) {
            Frame fr{Frame::Kind::AppFn, a->arg, nullptr, {}, {}};
            return std::pair{detail::lift(fr, *l, supply), std::string("Lift")};
        }
        if (auto f = a->fn->as<Lam>()) return std::pair{*detail::beta(*f, a->arg, supply), std::string("Beta")};
        return std::nullopt;
    }
    return std::nullopt;
}

enum class StepKind { Stepped, AnswerReached, Stuck };

struct StepResult {
    StepKind kind = StepKind::Stuck;
    ExprPtr next;
    std::string rule;
    std::optional<FaultKind> fault;
};

namespace detail {

inline StepResult stepped(ExprPtr next, std::string rule) {
    return StepResult{StepKind::Stepped, std::move(next), std::move(rule), std::nullopt};
}
inline StepResult stuck(FaultKind k) { return StepResult{StepKind::Stuck, nullptr, {}, k}; }

}  // namespace detail

/// One reduction step under the maximal decomposition. Rule names are
/// Beta/Select/Lift (applied under an evaluation context), IM, EM, Subst,
/// and Delta for the arithmetic extension.
inline StepResult reduce_step(const ExprPtr& e, NameSupply& supply, const SizeModel& model = {}) {
    using Stage = EvalContext::Stage;
    auto d = decompose(e, model);
    if (!d) return StepResult{StepKind::AnswerReached, e, {}, std::nullopt};
    const auto& ctx = d->context;
    const auto& focus = d->focus;

    if (auto l = focus->as<Letrec>()) {
        if (!ctx.frames.empty()) {
            EvalContext outer = ctx;
            outer.frames.pop_back();
            return detail::stepped(outer.plug(detail::lift(ctx.frames.back(), *l, supply)), "Lift");
        }
        if (ctx.stage == Stage::InBinding) {
            NameSet avoid = free_vars(ctx.bv);
            auto more = free_vars(ctx.rest);
            avoid.insert(more.begin(), more.end());
            more = free_vars(*ctx.body);
            avoid.insert(more.begin(), more.end());
            avoid.insert(ctx.var);
            auto [b1, inner] = rename_binding_away(l->binding, l->body, avoid, supply);
            Binding merged = ctx.bv;
            merged.insert(merged.end(), b1.begin(), b1.end());
            merged.push_back({ctx.var, ctx.size, inner});
            merged.insert(merged.end(), ctx.rest.begin(), ctx.rest.end());
            return detail::stepped(letrec(std::move(merged), ctx.body), "IM");
        }
        if (ctx.stage == Stage::UnderBinding) {
            auto avoid = free_vars(ctx.bv);
            auto [b, inner] = rename_binding_away(l->binding, l->body, avoid, supply);
            Binding merged = ctx.bv;
            merged.insert(merged.end(), b.begin(), b.end());
            return detail::stepped(letrec(std::move(merged), inner), "EM");
        }
        throw std::logic_error("letrec focus at the root of a nested context");
    }

    if (auto x = focus->as<Var>()) {
        if (!ctx.dereferencing()) throw std::logic_error("variable focus outside a dereferencing position");
        auto v = lookup_context(ctx, x->name);
        if (!v) return detail::stuck(FaultKind::UndefinedVariableDeref);
        return detail::stepped(ctx.plug(*v), "Subst");
    }

    if (is_value(*focus)) {
        // Only a known-size slot holding a wrongly sized value stops here.
        return detail::stuck(FaultKind::SizeMismatch);
    }

    auto in_place = [&](ExprPtr next, std::string rule) { return detail::stepped(ctx.plug(std::move(next)), rule); };

    if (auto a = focus->as<App>()) {
        if (auto f = a->fn->as<Lam>()) return in_place(*detail::beta(*f, a->arg, supply), "Beta");
        if (a->fn->is<Record>()) return detail::stuck(FaultKind::RecordApplied);
        return detail::stuck(FaultKind::PrimMisuse);
    }
    if (auto s = focus->as<Select>()) {
        if (auto r = s->subject->as<Record>()) {
            for (const auto& f : r->fields)
                if (f.label == s->label) return in_place(var(f.var), "Select");
            return detail::stuck(FaultKind::MissingField);
        }
        if (s->subject->is<Lam>()) return detail::stuck(FaultKind::FunctionSelected);
        return detail::stuck(FaultKind::PrimMisuse);
    }
    if (auto p = focus->as<Prim>()) {
        auto l = literal_of(*p->lhs);
        if (is_short_circuit(p->op)) {
            auto b = l ? std::get_if<bool>(&*l) : nullptr;
            if (!b) return detail::stuck(FaultKind::PrimMisuse);
            bool decided = p->op == PrimOp::Or ? *b : !*b;
            return in_place(decided ? boolean(*b) : p->rhs, "Delta");
        }
        auto r = literal_of(*p->rhs);
        if (!l || !r) return detail::stuck(FaultKind::PrimMisuse);
        auto result = apply_strict(p->op, *l, *r);
        if (!result) return detail::stuck(FaultKind::PrimMisuse);
        return in_place(from_literal(*result), "Delta");
    }
    if (auto i = focus->as<If>()) {
        auto b = i->cond->as<Bool>();
        if (!b) return detail::stuck(FaultKind::PrimMisuse);
        return in_place(b->value ? i->then_branch : i->else_branch, "Delta");
    }
    throw std::logic_error("unexpected focus in decomposition");
}

inline StepResult reduce_step(const ExprPtr& e, const SizeModel& model = {}) {
    NameSupply supply;
    return reduce_step(e, supply, model);
}

/// Fault kind of a stuck term. Throws std::invalid_argument on answers and
/// on reducible terms.
inline FaultKind classify_stuck(const ExprPtr& e, const SizeModel& model = {}) {
    auto r = reduce_step(e, model);
    if (r.kind == StepKind::AnswerReached) throw std::invalid_argument("classify_stuck: term is an answer");
    if (r.kind == StepKind::Stepped) throw std::invalid_argument("classify_stuck: term is reducible");
    return *r.fault;
}

// ------------------------------
// driver
// ------------------------------

struct TraceStep {
    std::size_t index;
    std::string rule;
    ExprPtr term;
};

struct Outcome {
    enum class Kind { Answer, Faulty, FuelExhausted };
    Kind kind = Kind::FuelExhausted;
    ExprPtr term;  // the answer, the stuck witness, or the last term
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

/// Iterates reduce_step at most `fuel` times.
inline Run run_source(const ExprPtr& e, const RunOptions& opts = {}) {
    Run run;
    NameSupply supply;
    ExprPtr cur = e;
    for (std::size_t step = 0;; ++step) {
        auto r = reduce_step(cur, supply, opts.sizes);
        if (r.kind == StepKind::AnswerReached) {
            run.outcome = {Outcome::Kind::Answer, cur, std::nullopt, step};
            return run;
        }
        if (r.kind == StepKind::Stuck) {
            run.outcome = {Outcome::Kind::Faulty, cur, r.fault, step};
            return run;
        }
        if (step == opts.fuel) {
            run.outcome = {Outcome::Kind::FuelExhausted, cur, std::nullopt, step};
            return run;
        }
        cur = r.next;
        if (opts.record_trace) run.trace.push_back({step + 1, r.rule, cur});
    }
}

inline Run run_source(const ExprPtr& e, std::size_t fuel) {
    RunOptions opts;
    opts.fuel = fuel;
    return run_source(e, opts);
}

/// The value part of an answer, looking through the top-level binding.
inline ExprPtr answer_value(const ExprPtr& answer) {
    if (auto l = answer->as<Letrec>()) return l->body;
    return answer;
}

}  // namespace xrec::source
