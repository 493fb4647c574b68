#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "xrec/sizing.hpp"
#include "xrec/source_eval.hpp"
#include "xrec/source_text.hpp"
#include "xrec/target_eval.hpp"
#include "xrec/target_text.hpp"
#include "xrec/translate.hpp"

namespace xrec::harness {

// ------------------------------
// differential check
// ------------------------------

enum class Agreement { AgreeAnswer, AgreeFaulty, Inconclusive, Disagree };

inline std::string_view to_string(Agreement a) {
    switch (a) {
    case Agreement::AgreeAnswer: return "AgreeAnswer";
    case Agreement::AgreeFaulty: return "AgreeFaulty";
    case Agreement::Inconclusive: return "Inconclusive";
    case Agreement::Disagree: return "DISAGREE";
    }
    return "?";
}

struct Verdict {
    source::Outcome source;
    target::Outcome target;
    Agreement agreement = Agreement::Inconclusive;
    std::string detail;
    source::ExprPtr witness;  // shrunk term, set on DISAGREE
};

struct CheckOptions {
    std::size_t fuel = 5000;
    std::size_t multiplier = 20;  // target fuel = multiplier * fuel
    std::optional<std::size_t> target_fuel;
    SizeModel sizes{};
    bool shrink = true;
    std::size_t shrink_budget = 300;
};

namespace detail {

inline Verdict compare(const source::ExprPtr& e, const CheckOptions& opts) {
    Verdict v;
    source::RunOptions so;
    so.fuel = opts.fuel;
    so.record_trace = false;
    so.sizes = opts.sizes;
    v.source = source::run_source(e, so).outcome;

    target::RunOptions to;
    to.fuel = opts.target_fuel.value_or(opts.multiplier * opts.fuel);
    to.record_trace = false;
    to.sizes = opts.sizes;
    v.target = target::run_target(translate_program(e), to).outcome;

    using SK = source::Outcome::Kind;
    using TK = target::Outcome::Kind;
    auto sk = v.source.kind;
    auto tk = v.target.kind;
    if (sk == SK::FuelExhausted || tk == TK::FuelExhausted) {
        v.agreement = Agreement::Inconclusive;
        v.detail = "fuel exhausted";
        return v;
    }
    if (sk == SK::Faulty && tk == TK::Faulty) {
        v.agreement = Agreement::AgreeFaulty;
        v.detail = std::string(source::to_string(*v.source.fault)) + " / " + std::string(target::to_string(*v.target.fault));
        return v;
    }
    if (sk != SK::Answer || tk != TK::Answer) {
        v.agreement = Agreement::Disagree;
        v.detail = "source " + std::string(source::to_string(sk)) + ", target " + std::string(target::to_string(tk));
        return v;
    }
    // Both answers: the translated source answer, once its administrative
    // steps are done, must match the target answer up to garbage and names.
    target::EvalOptions eo{opts.sizes};
    auto repr = target::admin_normalize(translate_program(v.source.term), 100000, eo);
    if (!repr.completed || !target::is_answer(repr.config)) {
        v.agreement = Agreement::Disagree;
        v.detail = "translated source answer does not normalize to an answer: " + target::to_string(repr.config);
        return v;
    }
    auto lhs = target::canonicalize(repr.config);
    auto rhs = target::canonicalize(v.target.config);
    if (!target::config_equal(lhs, rhs)) {
        v.agreement = Agreement::Disagree;
        v.detail = "answers differ: " + target::to_string(lhs) + " vs " + target::to_string(rhs);
        return v;
    }
    v.agreement = Agreement::AgreeAnswer;
    v.detail = target::to_string(rhs);
    return v;
}

// One-step structural reductions of `e`, each a candidate for shrinking.
inline std::vector<source::ExprPtr> shrink_candidates(const source::ExprPtr& e) {
    using namespace source;
    std::vector<ExprPtr> out;
    auto empty = record({});
    if (!e->is<Record>() || !e->as<Record>()->fields.empty()) out.push_back(empty);
    auto lift = [&](const std::function<ExprPtr(ExprPtr)>& rebuild, const ExprPtr& child) {
        for (auto& c : shrink_candidates(child)) out.push_back(rebuild(c));
    };
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Lam>) {
                out.push_back(n.body);
                lift([&](ExprPtr b) { return lam(n.param, b); }, n.body);
            } else if constexpr (std::is_same_v<T, App>) {
                out.push_back(n.fn);
                out.push_back(n.arg);
                lift([&](ExprPtr f) { return app(f, n.arg); }, n.fn);
                lift([&](ExprPtr a) { return app(n.fn, a); }, n.arg);
            } else if constexpr (std::is_same_v<T, Select>) {
                out.push_back(n.subject);
                lift([&](ExprPtr s) { return select(s, n.label); }, n.subject);
            } else if constexpr (std::is_same_v<T, Letrec>) {
                out.push_back(n.body);
                for (std::size_t i = 0; i < n.binding.size(); ++i) {
                    Binding fewer = n.binding;
                    fewer.erase(fewer.begin() + static_cast<std::ptrdiff_t>(i));
                    out.push_back(letrec(fewer, n.body));
                    out.push_back(n.binding[i].rhs);
                    if (n.binding[i].size.is_known()) {
                        Binding unsized = n.binding;
                        unsized[i].size = SizeIndication::unknown();
                        out.push_back(letrec(unsized, n.body));
                    }
                    lift(
                        [&](ExprPtr r) {
                            Binding b = n.binding;
                            b[i].rhs = r;
                            return letrec(b, n.body);
                        },
                        n.binding[i].rhs);
                }
                lift([&](ExprPtr b) { return letrec(n.binding, b); }, n.body);
            } else if constexpr (std::is_same_v<T, Prim>) {
                out.push_back(n.lhs);
                out.push_back(n.rhs);
                lift([&](ExprPtr l) { return prim(n.op, l, n.rhs); }, n.lhs);
                lift([&](ExprPtr r) { return prim(n.op, n.lhs, r); }, n.rhs);
            } else if constexpr (std::is_same_v<T, If>) {
                out.push_back(n.then_branch);
                out.push_back(n.else_branch);
                lift([&](ExprPtr c) { return if_then_else(c, n.then_branch, n.else_branch); }, n.cond);
                lift([&](ExprPtr t) { return if_then_else(n.cond, t, n.else_branch); }, n.then_branch);
                lift([&](ExprPtr f) { return if_then_else(n.cond, n.then_branch, f); }, n.else_branch);
            }
        },
        e->node);
    return out;
}

}  // namespace detail

/// Greedy structural shrinking: keeps any closed, well-formed one-step
/// reduction of the term that still disagrees.
inline source::ExprPtr shrink(const source::ExprPtr& e, const CheckOptions& opts) {
    CheckOptions inner = opts;
    inner.shrink = false;
    auto best = e;
    std::size_t budget = opts.shrink_budget;
    bool progress = true;
    while (progress && budget > 0) {
        progress = false;
        for (auto& c : detail::shrink_candidates(best)) {
            if (budget == 0) break;
            if (source::node_count(*c) >= source::node_count(*best)) continue;
            if (!source::free_vars(*c).empty() || !source::check_wellformed(*c, true).empty()) continue;
            --budget;
            if (detail::compare(c, inner).agreement == Agreement::Disagree) {
                best = c;
                progress = true;
                break;
            }
        }
    }
    return best;
}

/// Runs both sides and judges them. Throws std::invalid_argument on open or
/// ill-formed terms.
inline Verdict differential_check(const source::ExprPtr& e, const CheckOptions& opts = {}) {
    auto v = detail::compare(e, opts);
    if (v.agreement == Agreement::Disagree) v.witness = opts.shrink ? shrink(e, opts) : e;
    return v;
}

inline Verdict differential_check(const source::ExprPtr& e, std::size_t fuel) {
    CheckOptions opts;
    opts.fuel = fuel;
    return differential_check(e, opts);
}

/// Writes a DISAGREE witness as `<dir>/disagree-<hash>.rec`; returns the path.
inline std::filesystem::path save_regression(const std::filesystem::path& dir, const Verdict& v) {
    std::filesystem::create_directories(dir);
    auto text = source::to_string(v.witness ? v.witness : v.source.term);
    auto name = "disagree-" + std::to_string(std::hash<std::string>{}(text) % 1000000007ULL) + ".rec";
    auto path = dir / name;
    std::ofstream out(path);
    out << "# " << v.detail << "\n" << text << "\n";
    return path;
}

// ------------------------------
// random generation
// ------------------------------

struct GenConfig {
    std::uint64_t seed = 0;
    int max_depth = 4;
    int max_binding_len = 3;
    double known_size_probability = 0.5;
    bool prims_enabled = true;
    double faulty_rate = 0.2;
    SizeModel sizes{};
};

struct Generated {
    source::ExprPtr expr;
    bool faulty_by_construction = false;
    std::string mutation;  // empty when not faulty by construction
};

namespace gen {

struct Type;
using TypePtr = std::shared_ptr<const Type>;
struct Type {
    enum class Kind { Nat, Bool, Fun, Rec, Opaque };
    Kind kind;
    TypePtr param;
    TypePtr result;
    std::vector<std::pair<std::string, TypePtr>> fields;
};

inline TypePtr nat_t() { return std::make_shared<const Type>(Type{Type::Kind::Nat, {}, {}, {}}); }
inline TypePtr bool_t() { return std::make_shared<const Type>(Type{Type::Kind::Bool, {}, {}, {}}); }
inline TypePtr opaque_t() { return std::make_shared<const Type>(Type{Type::Kind::Opaque, {}, {}, {}}); }
inline TypePtr fun_t(TypePtr a, TypePtr b) {
    return std::make_shared<const Type>(Type{Type::Kind::Fun, std::move(a), std::move(b), {}});
}
inline TypePtr rec_t(std::vector<std::pair<std::string, TypePtr>> fields) {
    return std::make_shared<const Type>(Type{Type::Kind::Rec, {}, {}, std::move(fields)});
}

inline bool same(const TypePtr& a, const TypePtr& b) {
    if (a->kind != b->kind) return false;
    switch (a->kind) {
    case Type::Kind::Fun: return same(a->param, b->param) && same(a->result, b->result);
    case Type::Kind::Rec:
        if (a->fields.size() != b->fields.size()) return false;
        for (std::size_t i = 0; i < a->fields.size(); ++i)
            if (a->fields[i].first != b->fields[i].first || !same(a->fields[i].second, b->fields[i].second))
                return false;
        return true;
    default: return true;
    }
}

inline std::optional<std::uint64_t> size_of(const TypePtr& t, const SizeModel& m) {
    if (t->kind == Type::Kind::Fun) return m.function_size;
    if (t->kind == Type::Kind::Rec) return m.record_size(t->fields.size());
    return std::nullopt;
}

struct Var {
    Name name;
    TypePtr type;
    bool deref_ok;
};

struct Scope {
    std::vector<Var> vars;
    std::vector<Var> pending;  // later manifest definitions of the binding being generated
};

}  // namespace gen

/// Random closed well-formed terms. Terms are typed internally so most of
/// them evaluate without faults; faulty terms come from explicit mutations.
class Generator {
public:
    explicit Generator(GenConfig cfg) : cfg_(cfg), rng_(cfg.seed) {}

    std::mt19937_64& rng() { return rng_; }
    const GenConfig& config() const { return cfg_; }

    Generated term() {
        names_ = 0;
        gen::Scope scope;
        auto t = random_type(2);
        auto body = expr(t, cfg_.max_depth, scope, false);
        Generated out{body, false, {}};
        if (chance(cfg_.faulty_rate)) {
            auto [e, m] = mutate(body, scope);
            out = {e, true, m};
        }
        require_valid(out.expr);
        return out;
    }

    /// A non-variable value: an abstraction or a record. Records with fields
    /// mention free variables since fields are variables.
    source::ExprPtr value() {
        names_ = 0;
        gen::Scope scope;
        if (chance(0.5)) {
            auto t = gen::fun_t(random_type(1), random_type(1));
            return intro(t, cfg_.max_depth, scope);
        }
        std::vector<source::Field> fields;
        auto n = uniform(0, 3);
        for (int i = 0; i < n; ++i) fields.push_back({label(i), fresh("y")});
        return source::record(std::move(fields));
    }

    /// A configuration reached from a translated term by a random walk of
    /// target reductions, keeping the heap within `max_heap` bindings.
    target::Configuration configuration(std::size_t max_heap = 6, int max_walk = 60) {
        auto c = translate_program(term().expr);
        int walk = uniform(0, max_walk);
        for (int i = 0; i < walk; ++i) {
            auto rs = target::applicable_redexes(c);
            if (rs.empty()) break;
            const auto& r = rs[static_cast<std::size_t>(uniform(0, static_cast<int>(rs.size()) - 1))];
            auto next = target::apply_rule(c, r);
            if (next.heap.size() > max_heap) break;
            c = std::move(next);
        }
        return c;
    }

    /// An arbitrary configuration over the whole target grammar, not
    /// necessarily the image of a source term.
    target::Configuration raw_configuration() {
        target::Configuration c;
        int k = uniform(0, 4);
        for (int i = 0; i < k; ++i) c.heap.insert(location_name(static_cast<std::uint64_t>(i)), raw_stored(k));
        c.expr = raw_expr(3, k);
        return c;
    }

private:
    bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }
    int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    Name fresh(const char* stem) { return stem + std::to_string(names_++); }
    static std::string label(int i) {
        static const char* labels[] = {"A", "B", "C", "Head", "Tail"};
        return labels[i % 5];
    }

    void require_valid(const source::ExprPtr& e) const {
        if (!source::free_vars(*e).empty())
            throw std::logic_error("generator produced an open term: " + source::to_string(e));
        auto d = source::check_wellformed(*e, cfg_.prims_enabled);
        if (!d.empty())
            throw std::logic_error("generator produced an ill-formed term: " + source::to_string(e) + "\n" +
                                   source::format_diagnostics(d));
    }

    gen::TypePtr random_type(int depth) {
        std::vector<int> kinds = {0};
        if (cfg_.prims_enabled) {
            kinds.push_back(1);
            kinds.push_back(2);
        }
        if (depth > 0) {
            kinds.push_back(3);
            kinds.push_back(3);
            kinds.push_back(4);
        }
        switch (kinds[static_cast<std::size_t>(uniform(0, static_cast<int>(kinds.size()) - 1))]) {
        case 1: return gen::nat_t();
        case 2: return gen::bool_t();
        case 3: return gen::fun_t(random_type(depth - 1), random_type(depth - 1));
        case 4: {
            std::vector<std::pair<std::string, gen::TypePtr>> fields;
            int n = uniform(1, 2);
            for (int i = 0; i < n; ++i) fields.emplace_back(label(i), random_type(depth - 1));
            return gen::rec_t(std::move(fields));
        }
        default: return gen::rec_t({});
        }
    }

    std::optional<Name> pick(const std::vector<gen::Var>& vars, const gen::TypePtr& t, bool deref) {
        std::vector<const gen::Var*> ok;
        for (const auto& v : vars) {
            if (deref && !v.deref_ok) continue;
            if (t->kind == gen::Type::Kind::Opaque || gen::same(v.type, t)) ok.push_back(&v);
        }
        if (ok.empty()) return std::nullopt;
        return ok[static_cast<std::size_t>(uniform(0, static_cast<int>(ok.size()) - 1))]->name;
    }

    // Terms of type `t`. With `deref` set, a variable result must be safe to
    // dereference.
    source::ExprPtr expr(const gen::TypePtr& t, int depth, const gen::Scope& scope, bool deref) {
        using namespace source;
        using K = gen::Type::Kind;
        if (chance(depth <= 0 ? 0.8 : 0.3)) {
            if (auto v = pick(scope.vars, t, deref)) return var(*v);
        }
        if (depth <= 0) return intro(t, 0, scope);
        std::vector<int> forms = {0, 0, 1, 1, 1, 2, 3, 3};
        if (cfg_.prims_enabled) {
            forms.push_back(4);
            if (t->kind == K::Nat || t->kind == K::Bool) {
                forms.push_back(5);
                forms.push_back(5);
            }
            if (depth >= 2) forms.push_back(6);
        }
        switch (forms[static_cast<std::size_t>(uniform(0, static_cast<int>(forms.size()) - 1))]) {
        case 1: {
            auto a = random_type(1);
            auto f = expr(gen::fun_t(a, t), depth - 1, scope, true);
            return app(f, expr(a, depth - 1, scope, false));
        }
        case 2: {
            std::vector<std::pair<std::string, gen::TypePtr>> fields{{label(0), t}};
            if (chance(0.4)) fields.emplace_back(label(1), random_type(1));
            if (chance(0.5)) std::reverse(fields.begin(), fields.end());
            return select(expr(gen::rec_t(fields), depth - 1, scope, true), label(0));
        }
        case 3: return letrec_expr(t, depth, scope);
        case 4:
            return if_then_else(expr(gen::bool_t(), depth - 1, scope, true), expr(t, depth - 1, scope, deref),
                                expr(t, depth - 1, scope, deref));
        case 5: return prim_expr(t, depth, scope);
        case 6: return countdown(t, depth, scope);
        default: return intro(t, depth, scope);
        }
    }

    source::ExprPtr prim_expr(const gen::TypePtr& t, int depth, const gen::Scope& scope) {
        using namespace source;
        if (t->kind == gen::Type::Kind::Nat) {
            auto op = chance(0.5) ? PrimOp::Add : PrimOp::Sub;
            return prim(op, expr(t, depth - 1, scope, true), expr(t, depth - 1, scope, true));
        }
        switch (uniform(0, 3)) {
        case 0: return prim(PrimOp::Eq, expr(gen::nat_t(), depth - 1, scope, true), expr(gen::nat_t(), depth - 1, scope, true));
        case 1: return prim(PrimOp::Gt, expr(gen::nat_t(), depth - 1, scope, true), expr(gen::nat_t(), depth - 1, scope, true));
        case 2: return prim(PrimOp::And, expr(t, depth - 1, scope, true), expr(t, depth - 1, scope, true));
        default: return prim(PrimOp::Or, expr(t, depth - 1, scope, true), expr(t, depth - 1, scope, true));
        }
    }

    // rec f =[fs] \n. if n = 0 then e else f (n - 1) in f k
    source::ExprPtr countdown(const gen::TypePtr& t, int depth, const gen::Scope& scope) {
        using namespace source;
        auto f = fresh("f");
        auto n = fresh("n");
        gen::Scope inner = scope;
        inner.vars.push_back({n, gen::nat_t(), true});
        auto base = expr(t, depth - 1, inner, false);
        auto body = if_then_else(prim(PrimOp::Eq, var(n), nat(0)), base,
                                 app(var(f), prim(PrimOp::Sub, var(n), nat(1))));
        Binding b{{f, SizeIndication::known(cfg_.sizes.function_size), lam(n, body)}};
        return letrec(b, app(var(f), nat(static_cast<std::uint64_t>(uniform(0, 4)))));
    }

    // Introduction form of `t`.
    source::ExprPtr intro(const gen::TypePtr& t, int depth, const gen::Scope& scope) {
        using namespace source;
        using K = gen::Type::Kind;
        switch (t->kind) {
        case K::Nat: return nat(static_cast<std::uint64_t>(uniform(0, 5)));
        case K::Bool: return boolean(chance(0.5));
        case K::Opaque: {
            if (auto v = pick(scope.vars, t, false); v && chance(0.5)) return var(*v);
            return record({});
        }
        case K::Fun: {
            auto p = fresh("p");
            gen::Scope inner;
            inner.vars = scope.vars;
            // forward definitions become visible under the abstraction;
            // calling them is allowed only occasionally since it may loop
            for (const auto& v : scope.pending) inner.vars.push_back({v.name, v.type, chance(0.15)});
            inner.vars.push_back({p, t->param, true});
            return lam(p, expr(t->result, depth - 1, inner, false));
        }
        case K::Rec: {
            std::vector<Field> fields;
            Binding aux;
            gen::Scope outer = scope;
            outer.pending.clear();
            for (const auto& [l, ft] : t->fields) {
                auto v = pick(scope.vars, ft, false);
                if (!v || chance(0.3)) {
                    auto a = fresh("a");
                    aux.push_back({a, SizeIndication::unknown(), expr(ft, depth - 1, outer, false)});
                    v = a;
                }
                fields.push_back({l, *v});
            }
            auto r = record(std::move(fields));
            return aux.empty() ? r : letrec(std::move(aux), r);
        }
        }
        return record({});
    }

    // A record whose fields are drawn from the visible variables, including
    // forward and self references (typed opaquely).
    std::pair<source::ExprPtr, gen::TypePtr> manifest_record(const gen::Scope& scope, const gen::Var& self) {
        std::vector<gen::Var> candidates = scope.vars;
        for (const auto& v : scope.pending) candidates.push_back({v.name, gen::opaque_t(), false});
        candidates.push_back({self.name, gen::opaque_t(), false});
        std::vector<source::Field> fields;
        std::vector<std::pair<std::string, gen::TypePtr>> types;
        int n = candidates.empty() ? 0 : uniform(0, 2);
        for (int i = 0; i < n; ++i) {
            const auto& c = candidates[static_cast<std::size_t>(uniform(0, static_cast<int>(candidates.size()) - 1))];
            fields.push_back({label(i), c.name});
            types.emplace_back(label(i), c.type);
        }
        return {source::record(std::move(fields)), gen::rec_t(std::move(types))};
    }

    source::ExprPtr letrec_expr(const gen::TypePtr& t, int depth, const gen::Scope& scope) {
        using namespace source;
        using K = gen::Type::Kind;
        int n = uniform(1, std::max(1, cfg_.max_binding_len));
        struct Plan {
            Name name;
            gen::TypePtr type;
            bool manifest;
        };
        std::vector<Plan> plan;
        for (int i = 0; i < n; ++i) {
            bool manifest = chance(0.6);
            gen::TypePtr ty;
            if (manifest) {
                ty = chance(0.7) ? gen::fun_t(random_type(1), random_type(1)) : gen::rec_t({});
            } else {
                ty = chance(0.4) ? t : random_type(2);
            }
            plan.push_back({fresh("x"), ty, manifest});
        }
        Binding b;
        gen::Scope cur = scope;
        cur.pending.clear();
        for (int i = 0; i < n; ++i) {
            gen::Scope here = cur;
            for (int j = i; j < n; ++j) {
                if (!plan[static_cast<std::size_t>(j)].manifest) continue;
                const auto& p = plan[static_cast<std::size_t>(j)];
                auto ty = p.type->kind == K::Rec ? gen::opaque_t() : p.type;
                here.pending.push_back({p.name, ty, false});
            }
            auto& p = plan[static_cast<std::size_t>(i)];
            ExprPtr rhs;
            if (p.manifest && p.type->kind == K::Rec) {
                auto [r, ty] = manifest_record(here, {p.name, p.type, false});
                rhs = r;
                p.type = ty;
            } else if (p.manifest) {
                rhs = intro(p.type, depth - 1, here);
            } else {
                rhs = expr(p.type, depth - 1, here, false);
            }
            b.push_back({p.name, SizeIndication::unknown(), rhs});
            cur.vars.push_back({p.name, p.type, true});
        }
        auto inferred = infer_size_annotations(b, cfg_.sizes);
        b = inferred.binding;
        for (std::size_t i = 0; i < b.size(); ++i) {
            if (b[i].size.is_known()) continue;
            auto sz = gen::size_of(plan[i].type, cfg_.sizes);
            double p = plan[i].manifest ? cfg_.known_size_probability : cfg_.known_size_probability / 2;
            if (sz && chance(p)) b[i].size = SizeIndication::known(*sz);
        }
        auto body = expr(t, depth - 1, cur, false);
        return letrec(std::move(b), body);
    }

    // Wraps `body` so that evaluation first meets a deliberate fault.
    std::pair<source::ExprPtr, std::string> mutate(const source::ExprPtr& body, const gen::Scope& scope) {
        using namespace source;
        auto w = fresh("w");
        auto wrap = [&](Binding b) {
            // place the faulty definition after an innocuous one now and then
            if (chance(0.3)) b.insert(b.begin(), {fresh("x"), SizeIndication::unknown(), intro(random_type(1), 1, scope)});
            return letrec(std::move(b), body);
        };
        auto fs = cfg_.sizes.function_size;
        std::vector<int> kinds = {0, 1, 2, 3, 4, 5};
        if (cfg_.prims_enabled) {
            kinds.push_back(6);
            kinds.push_back(7);
        }
        switch (kinds[static_cast<std::size_t>(uniform(0, static_cast<int>(kinds.size()) - 1))]) {
        case 0: {
            auto t = chance(0.5) ? gen::fun_t(random_type(1), random_type(1)) : gen::rec_t({{"A", gen::rec_t({})}});
            auto v = intro(t, 2, scope);
            auto wrong = *gen::size_of(t, cfg_.sizes) + static_cast<std::uint64_t>(uniform(1, 2));
            return {wrap({{w, SizeIndication::known(wrong), v}}), "wrong-size"};
        }
        case 1: {
            auto r = intro(gen::rec_t({{"A", gen::rec_t({})}}), 2, scope);
            return {wrap({{w, SizeIndication::unknown(), select(r, "Tail")}}), "missing-field"};
        }
        case 2: {
            auto r = intro(gen::rec_t({}), 1, scope);
            return {wrap({{w, SizeIndication::unknown(), app(r, record({}))}}), "record-applied"};
        }
        case 3: {
            auto f = intro(gen::fun_t(random_type(1), random_type(1)), 2, scope);
            return {wrap({{w, SizeIndication::unknown(), select(f, "A")}}), "function-selected"};
        }
        case 4: {
            auto f = fresh("f");
            auto p = fresh("p");
            Binding b{{w, SizeIndication::unknown(), app(var(f), record({}))},
                      {f, SizeIndication::known(fs), lam(p, var(p))}};
            return {wrap(b), "forward-call"};
        }
        case 5: {
            auto f = fresh("f");
            auto p = fresh("p");
            Binding b{{w, SizeIndication::known(fs), var(f)}, {f, SizeIndication::known(fs), lam(p, var(p))}};
            return {wrap(b), "forward-copy"};
        }
        case 6: return {wrap({{w, SizeIndication::known(uniform(1, 3)), nat(7)}}), "literal-in-known-slot"};
        default: {
            auto f = intro(gen::fun_t(random_type(1), random_type(1)), 1, scope);
            return {wrap({{w, SizeIndication::unknown(), prim(PrimOp::Add, f, nat(1))}}), "prim-misuse"};
        }
        }
    }

    target::StoredValue raw_stored(int k) {
        switch (uniform(0, 2)) {
        case 0: return target::LamBlock{"z", raw_expr(1, k, "z")};
        case 1: {
            std::vector<target::Field> fields;
            int n = uniform(0, 2);
            for (int i = 0; i < n; ++i) fields.push_back({label(i), raw_value(k)});
            return target::RecordBlock{std::move(fields)};
        }
        default: return target::AllocBlock{static_cast<std::uint64_t>(uniform(1, 3))};
        }
    }

    target::Value raw_value(int k, const std::string& param = {}) {
        switch (uniform(0, 4)) {
        case 0: return target::Value{static_cast<std::uint64_t>(uniform(0, 3))};
        case 1: return target::Value{chance(0.5)};
        case 2: return target::Value{param.empty() ? std::string("u") : param};
        default: return target::Value{location_name(static_cast<std::uint64_t>(uniform(0, k)))};
        }
    }

    target::ExprPtr raw_expr(int depth, int k, const std::string& param = {}) {
        using namespace target;
        if (depth <= 0 || chance(0.25)) {
            switch (uniform(0, 5)) {
            case 0: return alloc_op();
            case 1: return update_op();
            case 2: return alloc(static_cast<std::uint64_t>(uniform(1, 3)));
            case 3: return record({{"A", raw_value(k, param)}});
            default: return from_value(raw_value(k, param));
            }
        }
        auto sub = [&] { return raw_expr(depth - 1, k, param); };
        switch (uniform(0, 8)) {
        case 0: return app(sub(), from_value(raw_value(k, param)));
        case 1: return app(sub(), sub());
        case 2: return select(sub(), chance(0.5) ? "A" : "B");
        case 3: {
            Bindings b;
            int n = uniform(0, 2);
            for (int i = 0; i < n; ++i) {
                Binder bd;
                if (chance(0.7)) bd = "l" + std::to_string(i);
                b.push_back({bd, sub()});
            }
            return let(std::move(b), sub());
        }
        case 4:
            return update(from_value(raw_value(k, param)), from_value(raw_value(k, param)));
        case 5: return lam("q", sub());
        case 6: return prim(chance(0.5) ? PrimOp::Add : PrimOp::And, sub(), sub());
        case 7: return if_then_else(sub(), sub(), sub());
        default: return app(alloc_op(), from_value(raw_value(k, param)));
        }
    }

    GenConfig cfg_;
    std::mt19937_64 rng_;
    std::uint64_t names_ = 0;
};

/// One generated term for `cfg.seed`.
inline source::ExprPtr gen_expr(const GenConfig& cfg) { return Generator(cfg).term().expr; }

// ------------------------------
// property drivers
// ------------------------------

struct CommutationFailure {
    target::Redex first;
    target::Redex second;
    std::string detail;
};

struct CommutationReport {
    std::size_t redexes = 0;
    std::size_t pairs = 0;
    std::vector<CommutationFailure> failures;
    bool ok() const { return failures.empty(); }
};

/// For every pair of distinct redexes of `c`, looks for one step of each
/// rule closing the square up to config_equal.
inline CommutationReport check_commutation(const target::Configuration& c, std::size_t pairs_budget = SIZE_MAX,
                                           const target::EvalOptions& opts = {}) {
    CommutationReport report;
    auto redexes = target::applicable_redexes(c, opts);
    report.redexes = redexes.size();
    auto residual = [&](const target::Configuration& from, target::Rule rule) {
        std::vector<target::Configuration> out;
        for (const auto& r : target::applicable_redexes(from, opts))
            if (r.rule == rule) out.push_back(target::apply_rule(from, r, opts));
        return out;
    };
    for (std::size_t i = 0; i < redexes.size(); ++i) {
        for (std::size_t j = i + 1; j < redexes.size(); ++j) {
            if (report.pairs == pairs_budget) return report;
            ++report.pairs;
            const auto& r1 = redexes[i];
            const auto& r2 = redexes[j];
            auto c1 = target::apply_rule(c, r1, opts);
            auto c2 = target::apply_rule(c, r2, opts);
            auto left = residual(c1, r2.rule);
            auto right = residual(c2, r1.rule);
            bool closed = false;
            for (const auto& a : left) {
                for (const auto& b : right) {
                    if (target::config_equal(a, b)) {
                        closed = true;
                        break;
                    }
                }
                if (closed) break;
            }
            if (!closed) {
                report.failures.push_back(
                    {r1, r2,
                     "from " + target::to_string(c) + "\n  " + target::to_string(r1) + " gives " + target::to_string(c1) +
                         "\n  " + target::to_string(r2) + " gives " + target::to_string(c2)});
            }
        }
    }
    return report;
}

/// Allocates transl(v) and compares the root block's size with the source
/// size of v.
inline bool check_size_hypothesis(const source::ExprPtr& v, const SizeModel& sizes = {}) {
    auto expected = size_source_value(*v, sizes);
    auto normal = target::admin_normalize(target::initial_configuration(transl(v)), 100000, target::EvalOptions{sizes});
    if (!normal.completed || !target::is_answer(normal.config)) return false;
    auto root = target::value_of(*normal.config.expr);
    const auto* name = root ? std::get_if<Name>(&*root) : nullptr;
    const auto* hv = name ? normal.config.heap.find(*name) : nullptr;
    if (!hv) return !expected.has_value();
    return expected && *expected == size_stored_value(*hv, sizes);
}

// ------------------------------
// corpus
// ------------------------------

/// Expected outcome read from a `.expect` sidecar: `key: value` lines with
/// keys outcome, fault, target-fault, answer, value, target, rules, prims,
/// fuel.
struct Expectation {
    std::string outcome;
    std::string fault;
    std::string target_fault;
    std::string answer;
    std::string value;
    std::string target;
    std::vector<std::string> rules;
    bool prims = false;
    std::size_t fuel = 100000;

    static Expectation parse(const std::string& text) {
        Expectation e;
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            auto colon = line.find(':');
            if (colon == std::string::npos) throw std::invalid_argument("bad expectation line: " + line);
            auto key = line.substr(0, colon);
            auto value = line.substr(colon + 1);
            value.erase(0, value.find_first_not_of(" \t"));
            while (!value.empty() && (value.back() == ' ' || value.back() == '\r')) value.pop_back();
            if (key == "outcome") e.outcome = value;
            else if (key == "fault") e.fault = value;
            else if (key == "target-fault") e.target_fault = value;
            else if (key == "answer") e.answer = value;
            else if (key == "value") e.value = value;
            else if (key == "target") e.target = value;
            else if (key == "prims") e.prims = value == "true";
            else if (key == "fuel") e.fuel = std::stoull(value);
            else if (key == "rules") {
                std::istringstream words(value);
                for (std::string w; words >> w;) e.rules.push_back(w);
            } else {
                throw std::invalid_argument("unknown expectation key: " + key);
            }
        }
        if (e.outcome.empty()) throw std::invalid_argument("expectation lacks an outcome line");
        return e;
    }
};

struct CorpusEntry {
    enum class Status { Pass, Fail, Skipped };
    std::string file;
    Status status = Status::Skipped;
    std::string message;
};

struct CorpusReport {
    std::vector<CorpusEntry> entries;
    std::size_t count(CorpusEntry::Status s) const {
        return static_cast<std::size_t>(
            std::count_if(entries.begin(), entries.end(), [&](const CorpusEntry& e) { return e.status == s; }));
    }
    bool ok() const { return count(CorpusEntry::Status::Fail) == 0; }
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw std::invalid_argument("cannot read " + p.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Checks one program against its expectation; returns an empty string on
/// success or the reason for failure.
inline std::string check_expectation(const std::string& text, const Expectation& ex, const SizeModel& sizes = {}) {
    auto parsed = source::parse_source(text, ex.prims);
    if (!parsed.ok()) return "parse: " + source::format_diagnostics(parsed.diagnostics);
    source::RunOptions ro;
    ro.fuel = ex.fuel;
    ro.sizes = sizes;
    auto run = source::run_source(parsed.expr, ro);
    auto got = std::string(source::to_string(run.outcome.kind));
    if (got != ex.outcome) return "expected " + ex.outcome + ", got " + got;
    if (!ex.fault.empty() && (!run.outcome.fault || source::to_string(*run.outcome.fault) != ex.fault))
        return "expected fault " + ex.fault;
    if (!ex.answer.empty()) {
        auto want = source::parse_source_or_throw(ex.answer, true);
        if (!source::alpha_equal(want, run.outcome.term))
            return "answer " + source::to_string(run.outcome.term) + " differs from " + ex.answer;
    }
    if (!ex.value.empty()) {
        auto want = source::parse_source_or_throw(ex.value, true);
        if (!source::alpha_equal(want, source::answer_value(run.outcome.term)))
            return "answer value " + source::to_string(source::answer_value(run.outcome.term)) + " differs from " +
                   ex.value;
    }
    if (!ex.rules.empty()) {
        std::vector<std::string> rules;
        for (const auto& s : run.trace) rules.push_back(s.rule);
        if (rules != ex.rules) {
            std::string seen;
            for (const auto& r : rules) seen += r + " ";
            return "rule sequence differs: " + seen;
        }
    }
    if (!ex.target.empty() || !ex.target_fault.empty()) {
        target::RunOptions to;
        to.fuel = ex.fuel * 20;
        to.sizes = sizes;
        to.record_trace = false;
        auto trun = target::run_target(translate_program(parsed.expr), to).outcome;
        if (!ex.target_fault.empty() && (!trun.fault || target::to_string(*trun.fault) != ex.target_fault))
            return "expected target fault " + ex.target_fault;
        if (!ex.target.empty()) {
            if (trun.kind != target::Outcome::Kind::Answer) return "target run did not reach an answer";
            auto want = target::canonicalize(target::parse_configuration(ex.target));
            if (!target::config_equal(want, target::canonicalize(trun.config)))
                return "target answer " + target::to_string(trun.config) + " differs";
        }
    }
    if (source::free_vars(*parsed.expr).empty()) {
        CheckOptions co;
        co.fuel = ex.fuel;
        co.sizes = sizes;
        auto v = differential_check(parsed.expr, co);
        if (v.agreement == Agreement::Disagree) return "differential check: " + v.detail;
    }
    return {};
}

/// Runs every `.rec` file of `dir` that has a `.expect` sidecar.
inline CorpusReport run_corpus(const std::filesystem::path& dir, const SizeModel& sizes = {}) {
    CorpusReport report;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.path().extension() == ".rec") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        CorpusEntry e;
        e.file = f.filename().string();
        auto sidecar = f;
        sidecar.replace_extension(".expect");
        if (!std::filesystem::exists(sidecar)) {
            e.status = CorpusEntry::Status::Skipped;
            e.message = "no .expect sidecar";
            report.entries.push_back(e);
            continue;
        }
        try {
            auto why = check_expectation(read_file(f), Expectation::parse(read_file(sidecar)), sizes);
            e.status = why.empty() ? CorpusEntry::Status::Pass : CorpusEntry::Status::Fail;
            e.message = why;
        } catch (const std::exception& ex) {
            e.status = CorpusEntry::Status::Fail;
            e.message = ex.what();
        }
        report.entries.push_back(e);
    }
    return report;
}

// ------------------------------
// fuzzing campaign
// ------------------------------

struct FuzzReport {
    std::size_t cases = 0;
    std::size_t faulty_by_construction = 0;
    std::size_t agree_answer = 0;
    std::size_t agree_faulty = 0;
    std::size_t inconclusive = 0;
    std::vector<Verdict> disagreements;
    std::vector<std::filesystem::path> saved;
};

/// Checks `count` generated terms, seeds cfg.seed, cfg.seed + 1, ...
inline FuzzReport fuzz(GenConfig cfg, std::size_t count, const CheckOptions& opts,
                       const std::optional<std::filesystem::path>& regressions = std::nullopt) {
    FuzzReport report;
    for (std::size_t i = 0; i < count; ++i) {
        GenConfig c = cfg;
        c.seed = cfg.seed + i;
        auto g = Generator(c).term();
        auto v = differential_check(g.expr, opts);
        ++report.cases;
        if (g.faulty_by_construction) ++report.faulty_by_construction;
        switch (v.agreement) {
        case Agreement::AgreeAnswer: ++report.agree_answer; break;
        case Agreement::AgreeFaulty: ++report.agree_faulty; break;
        case Agreement::Inconclusive: ++report.inconclusive; break;
        case Agreement::Disagree:
            if (regressions) report.saved.push_back(save_regression(*regressions, v));
            report.disagreements.push_back(std::move(v));
            break;
        }
    }
    return report;
}

}  // namespace xrec::harness
