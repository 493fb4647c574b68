#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "xrec/names.hpp"
#include "xrec/prims.hpp"

namespace xrec::target {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// First-class value: a variable (possibly a heap location) or a literal.
using Value = std::variant<Name, std::uint64_t, bool>;

struct Var {
    Name name;
};
struct Nat {
    std::uint64_t value;
};
struct Bool {
    bool value;
};
struct Lam {
    Name param;
    ExprPtr body;
};
struct App {
    ExprPtr fn;
    ExprPtr arg;
};
/// Let binder; an empty optional is the wildcard `_`.
using Binder = std::optional<Name>;
struct LetBinding {
    Binder binder;
    ExprPtr rhs;
};
using Bindings = std::vector<LetBinding>;
struct Let {
    Bindings bindings;
    ExprPtr body;
};
struct Field {
    Name label;
    Value value;
};
struct Record {
    std::vector<Field> fields;
};
struct Select {
    ExprPtr subject;
    Name label;
};
struct Alloc {};
struct Update {};
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
    using Node = std::variant<Var, Nat, Bool, Lam, App, Let, Record, Select, Alloc, Update, Prim, If>;
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
inline ExprPtr nat(std::uint64_t n) { return make(Nat{n}); }
inline ExprPtr boolean(bool b) { return make(Bool{b}); }
inline ExprPtr lam(Name param, ExprPtr body) { return make(Lam{std::move(param), std::move(body)}); }
inline ExprPtr app(ExprPtr fn, ExprPtr arg) { return make(App{std::move(fn), std::move(arg)}); }
inline ExprPtr app(ExprPtr fn, ExprPtr a1, ExprPtr a2) { return app(app(std::move(fn), std::move(a1)), std::move(a2)); }
inline ExprPtr let(Bindings bindings, ExprPtr body) { return make(Let{std::move(bindings), std::move(body)}); }
inline ExprPtr record(std::vector<Field> fields) { return make(Record{std::move(fields)}); }
inline ExprPtr select(ExprPtr subject, Name label) { return make(Select{std::move(subject), std::move(label)}); }
inline ExprPtr alloc_op() { return make(Alloc{}); }
inline ExprPtr update_op() { return make(Update{}); }
inline ExprPtr alloc(std::uint64_t n) { return app(alloc_op(), nat(n)); }
inline ExprPtr update(ExprPtr x, ExprPtr y) { return app(update_op(), std::move(x), std::move(y)); }
inline ExprPtr prim(PrimOp op, ExprPtr lhs, ExprPtr rhs) { return make(Prim{op, std::move(lhs), std::move(rhs)}); }
inline ExprPtr if_then_else(ExprPtr c, ExprPtr t, ExprPtr e) {
    return make(If{std::move(c), std::move(t), std::move(e)});
}

inline ExprPtr from_value(const Value& v) {
    if (auto x = std::get_if<Name>(&v)) return var(*x);
    if (auto n = std::get_if<std::uint64_t>(&v)) return nat(*n);
    return boolean(std::get<bool>(v));
}

inline bool is_value(const Expr& e) { return e.is<Var>() || e.is<Nat>() || e.is<Bool>(); }

inline std::optional<Value> value_of(const Expr& e) {
    if (auto x = e.as<Var>()) return Value{x->name};
    if (auto n = e.as<Nat>()) return Value{n->value};
    if (auto b = e.as<Bool>()) return Value{b->value};
    return std::nullopt;
}

inline std::optional<Literal> literal_of(const Expr& e) {
    if (auto n = e.as<Nat>()) return Literal{n->value};
    if (auto b = e.as<Bool>()) return Literal{b->value};
    return std::nullopt;
}

inline ExprPtr from_literal(const Literal& lit) {
    if (auto n = std::get_if<std::uint64_t>(&lit)) return nat(*n);
    return boolean(std::get<bool>(lit));
}

// ------------------------------
// stored values
// ------------------------------

struct LamBlock {
    Name param;
    ExprPtr body;
};
struct AllocBlock {
    std::uint64_t words;
};
struct RecordBlock {
    std::vector<Field> fields;
};
using StoredValue = std::variant<LamBlock, AllocBlock, RecordBlock>;

/// Recognizes the stored-value shapes `\x. E`, `alloc n` and `{S}`.
inline std::optional<StoredValue> as_stored(const Expr& e) {
    if (auto l = e.as<Lam>()) return StoredValue{LamBlock{l->param, l->body}};
    if (auto r = e.as<Record>()) return StoredValue{RecordBlock{r->fields}};
    if (auto a = e.as<App>()) {
        if (a->fn->is<Alloc>()) {
            if (auto n = a->arg->as<Nat>()) return StoredValue{AllocBlock{n->value}};
        }
    }
    return std::nullopt;
}

inline bool is_stored_value(const Expr& e) { return as_stored(e).has_value(); }

inline ExprPtr to_expr(const StoredValue& hv) {
    if (auto l = std::get_if<LamBlock>(&hv)) return lam(l->param, l->body);
    if (auto a = std::get_if<AllocBlock>(&hv)) return alloc(a->words);
    return record(std::get<RecordBlock>(hv).fields);
}

// ------------------------------
// free variables
// ------------------------------

namespace detail {

inline void collect_free(const Expr& e, NameSet& bound, NameSet& out);

inline void note(const Name& x, const NameSet& bound, NameSet& out) {
    if (!bound.contains(x)) out.insert(x);
}

inline void collect_free_value(const Value& v, const NameSet& bound, NameSet& out) {
    if (auto x = std::get_if<Name>(&v)) note(*x, bound, out);
}

inline void collect_free(const Expr& e, NameSet& bound, NameSet& out) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Var>) {
                note(n.name, bound, out);
            } else if constexpr (std::is_same_v<T, Lam>) {
                bool added = bound.insert(n.param).second;
                collect_free(*n.body, bound, out);
                if (added) bound.erase(n.param);
            } else if constexpr (std::is_same_v<T, App>) {
                collect_free(*n.fn, bound, out);
                collect_free(*n.arg, bound, out);
            } else if constexpr (std::is_same_v<T, Let>) {
                std::vector<Name> added;
                for (const auto& b : n.bindings)
                    if (b.binder && bound.insert(*b.binder).second) added.push_back(*b.binder);
                for (const auto& b : n.bindings) collect_free(*b.rhs, bound, out);
                collect_free(*n.body, bound, out);
                for (const auto& x : added) bound.erase(x);
            } else if constexpr (std::is_same_v<T, Record>) {
                for (const auto& f : n.fields) collect_free_value(f.value, bound, out);
            } else if constexpr (std::is_same_v<T, Select>) {
                collect_free(*n.subject, bound, out);
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

inline bool occurs_free_impl(const Expr& e, const Name& x);

inline bool occurs_free_value(const Value& v, const Name& x) {
    auto y = std::get_if<Name>(&v);
    return y && *y == x;
}

inline bool occurs_free_impl(const Expr& e, const Name& x) {
    return std::visit(
        [&](const auto& n) -> bool {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Var>) {
                return n.name == x;
            } else if constexpr (std::is_same_v<T, Lam>) {
                return n.param != x && occurs_free_impl(*n.body, x);
            } else if constexpr (std::is_same_v<T, App>) {
                return occurs_free_impl(*n.fn, x) || occurs_free_impl(*n.arg, x);
            } else if constexpr (std::is_same_v<T, Let>) {
                for (const auto& b : n.bindings)
                    if (b.binder == x) return false;
                for (const auto& b : n.bindings)
                    if (occurs_free_impl(*b.rhs, x)) return true;
                return occurs_free_impl(*n.body, x);
            } else if constexpr (std::is_same_v<T, Record>) {
                for (const auto& f : n.fields)
                    if (occurs_free_value(f.value, x)) return true;
                return false;
            } else if constexpr (std::is_same_v<T, Select>) {
                return occurs_free_impl(*n.subject, x);
            } else if constexpr (std::is_same_v<T, Prim>) {
                return occurs_free_impl(*n.lhs, x) || occurs_free_impl(*n.rhs, x);
            } else if constexpr (std::is_same_v<T, If>) {
                return occurs_free_impl(*n.cond, x) || occurs_free_impl(*n.then_branch, x) || occurs_free_impl(*n.else_branch, x);
            } else {
                return false;
            }
        },
        e.node);
}

}  // namespace detail

inline NameSet free_vars(const Expr& e) {
    NameSet bound;
    NameSet out;
    detail::collect_free(e, bound, out);
    return out;
}
inline NameSet free_vars(const ExprPtr& e) { return free_vars(*e); }

inline NameSet free_vars(const StoredValue& hv) {
    NameSet out;
    NameSet bound;
    if (auto l = std::get_if<LamBlock>(&hv)) {
        bound.insert(l->param);
        detail::collect_free(*l->body, bound, out);
    } else if (auto r = std::get_if<RecordBlock>(&hv)) {
        for (const auto& f : r->fields) detail::collect_free_value(f.value, bound, out);
    }
    return out;
}

inline bool occurs_free(const Expr& e, const Name& x) { return detail::occurs_free_impl(e, x); }

inline bool occurs_free(const StoredValue& hv, const Name& x) {
    if (auto l = std::get_if<LamBlock>(&hv)) return l->param != x && detail::occurs_free_impl(*l->body, x);
    if (auto r = std::get_if<RecordBlock>(&hv)) {
        for (const auto& f : r->fields)
            if (detail::occurs_free_value(f.value, x)) return true;
    }
    return false;
}

/// Defined variables of a binding; wildcards contribute nothing.
inline NameSet domain(const Bindings& b) {
    NameSet out;
    for (const auto& d : b)
        if (d.binder) out.insert(*d.binder);
    return out;
}

inline std::uint64_t stored_words(const StoredValue& hv, std::uint64_t function_size, std::uint64_t record_header) {
    if (auto a = std::get_if<AllocBlock>(&hv)) return a->words;
    if (std::holds_alternative<LamBlock>(hv)) return function_size;
    return record_header + std::get<RecordBlock>(hv).fields.size();
}

// ------------------------------
// heaps and configurations
// ------------------------------

/// Location-indexed heap. Iteration follows insertion order; an occurrence
/// count of every location inside stored values makes liveness checks for
/// the GC rule independent of heap size.
class Heap {
public:
    using Entry = std::pair<Name, StoredValue>;

    bool contains(const Name& x) const { return index_.contains(x); }
    std::size_t size() const { return index_.size(); }
    bool empty() const { return index_.empty(); }

    const StoredValue* find(const Name& x) const {
        auto it = index_.find(x);
        return it == index_.end() ? nullptr : &slots_[it->second]->second;
    }
    const StoredValue& at(const Name& x) const {
        auto p = find(x);
        if (!p) throw std::out_of_range("unbound heap location " + x);
        return *p;
    }

    void insert(const Name& x, StoredValue hv) {
        if (contains(x)) throw std::invalid_argument("heap location bound twice: " + x);
        count(hv, +1);
        index_.emplace(x, slots_.size());
        slots_.emplace_back(Entry{x, std::move(hv)});
    }

    void assign(const Name& x, StoredValue hv) {
        auto it = index_.find(x);
        if (it == index_.end()) throw std::out_of_range("unbound heap location " + x);
        auto& slot = slots_[it->second]->second;
        count(slot, -1);
        count(hv, +1);
        slot = std::move(hv);
    }

    void erase(const Name& x) {
        auto it = index_.find(x);
        if (it == index_.end()) throw std::out_of_range("unbound heap location " + x);
        count(slots_[it->second]->second, -1);
        slots_[it->second].reset();
        index_.erase(it);
        if (slots_.size() > 32 && index_.size() * 2 < slots_.size()) compact();
    }

    /// Number of stored values other than `x`'s own that mention `x`.
    std::size_t mentions_from_others(const Name& x) const {
        auto it = mentions_.find(x);
        std::size_t total = it == mentions_.end() ? 0 : it->second;
        if (auto own = find(x); own && occurs_free(*own, x)) --total;
        return total;
    }

    std::vector<Entry> entries() const {
        std::vector<Entry> out;
        out.reserve(index_.size());
        for (const auto& s : slots_)
            if (s) out.push_back(*s);
        return out;
    }

    template <class F>
    void for_each(F&& f) const {
        for (const auto& s : slots_)
            if (s) f(s->first, s->second);
    }

    NameSet domain() const {
        NameSet out;
        for (const auto& [x, _] : index_) out.insert(x);
        return out;
    }

private:
    void count(const StoredValue& hv, int delta) {
        for (const auto& x : free_vars(hv)) {
            auto& c = mentions_[x];
            c = static_cast<std::size_t>(static_cast<long long>(c) + delta);
            if (c == 0) mentions_.erase(x);
        }
    }

    void compact() {
        std::vector<std::optional<Entry>> kept;
        kept.reserve(index_.size());
        for (auto& s : slots_)
            if (s) kept.push_back(std::move(s));
        slots_ = std::move(kept);
        index_.clear();
        for (std::size_t i = 0; i < slots_.size(); ++i) index_.emplace(slots_[i]->first, i);
    }

    std::vector<std::optional<Entry>> slots_;
    std::unordered_map<Name, std::size_t> index_;
    std::unordered_map<Name, std::size_t> mentions_;
};

struct Configuration {
    Heap heap;
    ExprPtr expr;
};

inline Configuration initial_configuration(ExprPtr e) { return Configuration{Heap{}, std::move(e)}; }

/// FV(heap): every bound location together with the free variables of every
/// stored value.
inline NameSet free_vars(const Heap& heap) {
    NameSet out;
    heap.for_each([&](const Name& x, const StoredValue& hv) {
        out.insert(x);
        auto fv = free_vars(hv);
        out.insert(fv.begin(), fv.end());
    });
    return out;
}

inline NameSet free_vars(const Configuration& c) {
    NameSet out;
    c.heap.for_each([&](const Name&, const StoredValue& hv) {
        auto fv = free_vars(hv);
        out.insert(fv.begin(), fv.end());
    });
    auto fe = free_vars(*c.expr);
    out.insert(fe.begin(), fe.end());
    for (auto it = out.begin(); it != out.end();) {
        if (c.heap.contains(*it)) {
            it = out.erase(it);
        } else {
            ++it;
        }
    }
    return out;
}

inline bool is_answer(const Configuration& c) { return is_value(*c.expr); }

// ------------------------------
// substitution
// ------------------------------

/// Value substitution; target substitutions only ever map variables to
/// first-class values.
using Substitution = std::map<Name, Value>;

namespace detail {

inline NameSet range_names(const Substitution& sub) {
    NameSet out;
    for (const auto& [_, v] : sub)
        if (auto x = std::get_if<Name>(&v)) out.insert(*x);
    return out;
}

inline Value substitute_value(const Substitution& sub, const Value& v) {
    if (auto x = std::get_if<Name>(&v)) {
        auto it = sub.find(*x);
        if (it != sub.end()) return it->second;
    }
    return v;
}

inline ExprPtr subst_impl(const Substitution& sub, const ExprPtr& e, NameSupply& supply);

// Binder `x` is about to scope over `scope`; drops x from the substitution
// and renames it if it would capture a substituted name.
inline Name enter_binder(Substitution& sub, const Name& x, const std::vector<const Expr*>& scope,
                         NameSupply& supply) {
    sub.erase(x);
    if (sub.empty()) return x;
    auto range = range_names(sub);
    if (!range.contains(x)) return x;
    NameSet avoid = range;
    for (const auto& [k, _] : sub) avoid.insert(k);
    for (const auto* s : scope) {
        NameSet bound;
        collect_free(*s, bound, avoid);
    }
    auto fresh = supply.fresh(x, avoid);
    sub[x] = Value{fresh};
    return fresh;
}

inline ExprPtr subst_impl(const Substitution& sub, const ExprPtr& e, NameSupply& supply) {
    if (sub.empty()) return e;
    return std::visit(
        [&](const auto& n) -> ExprPtr {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Var>) {
                auto it = sub.find(n.name);
                return it == sub.end() ? e : from_value(it->second);
            } else if constexpr (std::is_same_v<T, Lam>) {
                Substitution inner = sub;
                auto param = enter_binder(inner, n.param, {n.body.get()}, supply);
                return lam(param, subst_impl(inner, n.body, supply));
            } else if constexpr (std::is_same_v<T, App>) {
                return app(subst_impl(sub, n.fn, supply), subst_impl(sub, n.arg, supply));
            } else if constexpr (std::is_same_v<T, Let>) {
                // Sequential scoping, as for nested single lets.
                Substitution cur = sub;
                Bindings out;
                out.reserve(n.bindings.size());
                for (std::size_t i = 0; i < n.bindings.size(); ++i) {
                    const auto& b = n.bindings[i];
                    auto rhs = subst_impl(cur, b.rhs, supply);
                    Binder binder = b.binder;
                    if (b.binder) {
                        std::vector<const Expr*> scope;
                        for (std::size_t j = i + 1; j < n.bindings.size(); ++j) scope.push_back(n.bindings[j].rhs.get());
                        scope.push_back(n.body.get());
                        binder = enter_binder(cur, *b.binder, scope, supply);
                    }
                    out.push_back({binder, rhs});
                }
                return let(std::move(out), subst_impl(cur, n.body, supply));
            } else if constexpr (std::is_same_v<T, Record>) {
                std::vector<Field> fields;
                fields.reserve(n.fields.size());
                for (const auto& f : n.fields) fields.push_back({f.label, substitute_value(sub, f.value)});
                return record(std::move(fields));
            } else if constexpr (std::is_same_v<T, Select>) {
                return select(subst_impl(sub, n.subject, supply), n.label);
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

/// Capture-avoiding substitution of values for variables.
inline ExprPtr substitute(const Substitution& sub, const ExprPtr& e, NameSupply& supply) {
    return detail::subst_impl(sub, e, supply);
}
inline ExprPtr substitute(const Substitution& sub, const ExprPtr& e) {
    NameSupply supply;
    return detail::subst_impl(sub, e, supply);
}

// ------------------------------
// equality
// ------------------------------

namespace detail {

// Pairs bound names of the two sides; locations are related by a bijection
// that grows as the traversal discovers them.
struct ConfigMatcher {
    const Heap* h1 = nullptr;
    const Heap* h2 = nullptr;
    std::map<Name, Name> loc12;
    std::map<Name, Name> loc21;
    std::vector<std::pair<Name, Name>> pending;
    std::vector<std::pair<Name, Name>> bound;

    bool same_name(const Name& a, const Name& b) {
        for (auto it = bound.rbegin(); it != bound.rend(); ++it) {
            bool la = it->first == a;
            bool lb = it->second == b;
            if (la || lb) return la && lb;
        }
        bool in1 = h1 && h1->contains(a);
        bool in2 = h2 && h2->contains(b);
        if (in1 != in2) return false;
        if (!in1) return a == b;
        auto f = loc12.find(a);
        auto g = loc21.find(b);
        if (f != loc12.end() || g != loc21.end()) {
            return f != loc12.end() && g != loc21.end() && f->second == b && g->second == a;
        }
        loc12.emplace(a, b);
        loc21.emplace(b, a);
        pending.emplace_back(a, b);
        return true;
    }

    bool same_value(const Value& a, const Value& b) {
        if (a.index() != b.index()) return false;
        if (auto x = std::get_if<Name>(&a)) return same_name(*x, std::get<Name>(b));
        return a == b;
    }

    bool same_fields(const std::vector<Field>& a, const std::vector<Field>& b) {
        if (a.size() != b.size()) return false;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i].label != b[i].label || !same_value(a[i].value, b[i].value)) return false;
        }
        return true;
    }

    bool same_expr(const Expr& a, const Expr& b) {
        if (a.node.index() != b.node.index()) return false;
        if (auto x = a.as<Var>()) return same_name(x->name, b.as<Var>()->name);
        if (auto x = a.as<Nat>()) return x->value == b.as<Nat>()->value;
        if (auto x = a.as<Bool>()) return x->value == b.as<Bool>()->value;
        if (auto x = a.as<Lam>()) {
            const auto* y = b.as<Lam>();
            bound.emplace_back(x->param, y->param);
            bool eq = same_expr(*x->body, *y->body);
            bound.pop_back();
            return eq;
        }
        if (auto x = a.as<App>()) {
            const auto* y = b.as<App>();
            return same_expr(*x->fn, *y->fn) && same_expr(*x->arg, *y->arg);
        }
        if (auto x = a.as<Let>()) {
            const auto* y = b.as<Let>();
            if (x->bindings.size() != y->bindings.size()) return false;
            std::size_t pushed = 0;
            bool eq = true;
            for (std::size_t i = 0; i < x->bindings.size(); ++i) {
                const auto& bx = x->bindings[i].binder;
                const auto& by = y->bindings[i].binder;
                if (bx.has_value() != by.has_value()) {
                    eq = false;
                    break;
                }
                if (bx) {
                    bound.emplace_back(*bx, *by);
                    ++pushed;
                }
            }
            for (std::size_t i = 0; eq && i < x->bindings.size(); ++i)
                eq = same_expr(*x->bindings[i].rhs, *y->bindings[i].rhs);
            eq = eq && same_expr(*x->body, *y->body);
            bound.resize(bound.size() - pushed);
            return eq;
        }
        if (auto x = a.as<Record>()) return same_fields(x->fields, b.as<Record>()->fields);
        if (auto x = a.as<Select>()) {
            const auto* y = b.as<Select>();
            return x->label == y->label && same_expr(*x->subject, *y->subject);
        }
        if (a.is<Alloc>() || a.is<Update>()) return true;
        if (auto x = a.as<Prim>()) {
            const auto* y = b.as<Prim>();
            return x->op == y->op && same_expr(*x->lhs, *y->lhs) && same_expr(*x->rhs, *y->rhs);
        }
        if (auto x = a.as<If>()) {
            const auto* y = b.as<If>();
            return same_expr(*x->cond, *y->cond) && same_expr(*x->then_branch, *y->then_branch) &&
                   same_expr(*x->else_branch, *y->else_branch);
        }
        return false;
    }

    bool same_stored(const StoredValue& a, const StoredValue& b) {
        if (a.index() != b.index()) return false;
        if (auto x = std::get_if<AllocBlock>(&a)) return x->words == std::get<AllocBlock>(b).words;
        if (auto x = std::get_if<RecordBlock>(&a)) return same_fields(x->fields, std::get<RecordBlock>(b).fields);
        const auto& x = std::get<LamBlock>(a);
        const auto& y = std::get<LamBlock>(b);
        bound.emplace_back(x.param, y.param);
        bool eq = same_expr(*x.body, *y.body);
        bound.pop_back();
        return eq;
    }

    bool drain() {
        while (!pending.empty()) {
            auto [a, b] = pending.back();
            pending.pop_back();
            if (!same_stored(h1->at(a), h2->at(b))) return false;
        }
        return true;
    }
};

inline bool match_rest(ConfigMatcher& m, const std::vector<Name>& left, const std::vector<Name>& right) {
    auto first = std::find_if(left.begin(), left.end(), [&](const Name& a) { return !m.loc12.contains(a); });
    if (first == left.end()) return true;
    for (const auto& b : right) {
        if (m.loc21.contains(b)) continue;
        ConfigMatcher trial = m;
        trial.loc12.emplace(*first, b);
        trial.loc21.emplace(b, *first);
        trial.pending.emplace_back(*first, b);
        if (trial.drain() && match_rest(trial, left, right)) {
            m = std::move(trial);
            return true;
        }
    }
    return false;
}

}  // namespace detail

/// Structural equivalence: equality up to heap reordering and renaming of
/// bound variables and locations. Unreachable bindings count.
inline bool config_equal(const Configuration& c1, const Configuration& c2) {
    if (c1.heap.size() != c2.heap.size()) return false;
    detail::ConfigMatcher m;
    m.h1 = &c1.heap;
    m.h2 = &c2.heap;
    if (!m.same_expr(*c1.expr, *c2.expr) || !m.drain()) return false;
    std::vector<Name> left;
    std::vector<Name> right;
    c1.heap.for_each([&](const Name& x, const StoredValue&) { left.push_back(x); });
    c2.heap.for_each([&](const Name& x, const StoredValue&) { right.push_back(x); });
    return detail::match_rest(m, left, right);
}

/// Alpha-equivalence of open expressions (no heap).
inline bool alpha_equal(const Expr& a, const Expr& b) {
    detail::ConfigMatcher m;
    return m.same_expr(a, b);
}
inline bool alpha_equal(const ExprPtr& a, const ExprPtr& b) { return alpha_equal(*a, *b); }

/// Exact syntactic equality, names included, heap order included.
inline bool identical(const Expr& a, const Expr& b);

namespace detail {
inline bool identical_value(const Value& a, const Value& b) { return a == b; }
inline bool identical_fields(const std::vector<Field>& a, const std::vector<Field>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].label != b[i].label || a[i].value != b[i].value) return false;
    return true;
}
}  // namespace detail

inline bool identical(const Expr& a, const Expr& b) {
    if (&a == &b) return true;
    if (a.node.index() != b.node.index()) return false;
    if (auto x = a.as<Var>()) return x->name == b.as<Var>()->name;
    if (auto x = a.as<Nat>()) return x->value == b.as<Nat>()->value;
    if (auto x = a.as<Bool>()) return x->value == b.as<Bool>()->value;
    if (auto x = a.as<Lam>()) return x->param == b.as<Lam>()->param && identical(*x->body, *b.as<Lam>()->body);
    if (auto x = a.as<App>()) return identical(*x->fn, *b.as<App>()->fn) && identical(*x->arg, *b.as<App>()->arg);
    if (auto x = a.as<Let>()) {
        const auto* y = b.as<Let>();
        if (x->bindings.size() != y->bindings.size()) return false;
        for (std::size_t i = 0; i < x->bindings.size(); ++i) {
            if (x->bindings[i].binder != y->bindings[i].binder) return false;
            if (!identical(*x->bindings[i].rhs, *y->bindings[i].rhs)) return false;
        }
        return identical(*x->body, *y->body);
    }
    if (auto x = a.as<Record>()) return detail::identical_fields(x->fields, b.as<Record>()->fields);
    if (auto x = a.as<Select>())
        return x->label == b.as<Select>()->label && identical(*x->subject, *b.as<Select>()->subject);
    if (a.is<Alloc>() || a.is<Update>()) return true;
    if (auto x = a.as<Prim>()) {
        const auto* y = b.as<Prim>();
        return x->op == y->op && identical(*x->lhs, *y->lhs) && identical(*x->rhs, *y->rhs);
    }
    if (auto x = a.as<If>()) {
        const auto* y = b.as<If>();
        return identical(*x->cond, *y->cond) && identical(*x->then_branch, *y->then_branch) &&
               identical(*x->else_branch, *y->else_branch);
    }
    return false;
}

inline bool identical(const StoredValue& a, const StoredValue& b) {
    if (a.index() != b.index()) return false;
    if (auto x = std::get_if<AllocBlock>(&a)) return x->words == std::get<AllocBlock>(b).words;
    if (auto x = std::get_if<RecordBlock>(&a)) return detail::identical_fields(x->fields, std::get<RecordBlock>(b).fields);
    const auto& x = std::get<LamBlock>(a);
    const auto& y = std::get<LamBlock>(b);
    return x.param == y.param && identical(*x.body, *y.body);
}

inline bool identical(const Configuration& a, const Configuration& b) {
    auto ea = a.heap.entries();
    auto eb = b.heap.entries();
    if (ea.size() != eb.size()) return false;
    for (std::size_t i = 0; i < ea.size(); ++i) {
        if (ea[i].first != eb[i].first || !identical(ea[i].second, eb[i].second)) return false;
    }
    return identical(*a.expr, *b.expr);
}

// ------------------------------
// canonical answers
// ------------------------------

namespace detail {

// Renames reachable locations in depth-first first-visit order and bound
// variables to `v'N` in the order they are met.
class Canonicalizer {
public:
    Canonicalizer(const Configuration& c, NameSet avoid) : in_(c), avoid_(std::move(avoid)) {}

    Configuration run() {
        auto root = rename_value(value_of(*in_.expr).value());
        std::sort(blocks_.begin(), blocks_.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        Configuration out;
        for (auto& [index, hv] : blocks_) out.heap.insert(location_name(index), std::move(hv));
        out.expr = from_value(root);
        return out;
    }

private:
    Name visit_location(const Name& x) {
        auto it = loc_map_.find(x);
        if (it != loc_map_.end()) return location_name(it->second);
        auto index = static_cast<std::uint64_t>(loc_map_.size());
        loc_map_.emplace(x, index);
        auto saved = std::move(scope_);
        scope_.clear();
        auto hv = rename_stored(in_.heap.at(x));
        scope_ = std::move(saved);
        blocks_.emplace_back(index, std::move(hv));
        return location_name(index);
    }

    Name rename_free(const Name& x) {
        for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
            if (it->first == x) return it->second;
        if (in_.heap.contains(x)) return visit_location(x);
        return x;
    }

    Value rename_value(const Value& v) {
        if (auto x = std::get_if<Name>(&v)) return Value{rename_free(*x)};
        return v;
    }

    Name bind(const Name& x) {
        Name fresh;
        do {
            fresh = "v'" + std::to_string(counter_++);
        } while (avoid_.contains(fresh));
        scope_.emplace_back(x, fresh);
        return fresh;
    }

    std::vector<Field> rename_fields(const std::vector<Field>& fields) {
        std::vector<Field> out;
        out.reserve(fields.size());
        for (const auto& f : fields) out.push_back({f.label, rename_value(f.value)});
        return out;
    }

    StoredValue rename_stored(const StoredValue& hv) {
        if (auto a = std::get_if<AllocBlock>(&hv)) return *a;
        if (auto r = std::get_if<RecordBlock>(&hv)) return RecordBlock{rename_fields(r->fields)};
        const auto& l = std::get<LamBlock>(hv);
        auto p = bind(l.param);
        auto body = rename(*l.body);
        scope_.pop_back();
        return LamBlock{p, body};
    }

    ExprPtr rename(const Expr& e) {
        return std::visit(
            [&](const auto& n) -> ExprPtr {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, Var>) {
                    return var(rename_free(n.name));
                } else if constexpr (std::is_same_v<T, Nat>) {
                    return nat(n.value);
                } else if constexpr (std::is_same_v<T, Bool>) {
                    return boolean(n.value);
                } else if constexpr (std::is_same_v<T, Lam>) {
                    auto p = bind(n.param);
                    auto body = rename(*n.body);
                    scope_.pop_back();
                    return lam(p, body);
                } else if constexpr (std::is_same_v<T, App>) {
                    auto f = rename(*n.fn);
                    return app(f, rename(*n.arg));
                } else if constexpr (std::is_same_v<T, Let>) {
                    Bindings out;
                    std::size_t pushed = 0;
                    for (const auto& b : n.bindings) {
                        Binder bd;
                        if (b.binder) {
                            bd = bind(*b.binder);
                            ++pushed;
                        }
                        out.push_back({bd, nullptr});
                    }
                    for (std::size_t i = 0; i < n.bindings.size(); ++i) out[i].rhs = rename(*n.bindings[i].rhs);
                    auto body = rename(*n.body);
                    scope_.resize(scope_.size() - pushed);
                    return let(std::move(out), body);
                } else if constexpr (std::is_same_v<T, Record>) {
                    return record(rename_fields(n.fields));
                } else if constexpr (std::is_same_v<T, Select>) {
                    return select(rename(*n.subject), n.label);
                } else if constexpr (std::is_same_v<T, Alloc>) {
                    return alloc_op();
                } else if constexpr (std::is_same_v<T, Update>) {
                    return update_op();
                } else if constexpr (std::is_same_v<T, Prim>) {
                    auto l = rename(*n.lhs);
                    return prim(n.op, l, rename(*n.rhs));
                } else {
                    auto c = rename(*n.cond);
                    auto t = rename(*n.then_branch);
                    return if_then_else(c, t, rename(*n.else_branch));
                }
            },
            e.node);
    }

    const Configuration& in_;
    NameSet avoid_;
    std::map<Name, std::uint64_t> loc_map_;
    std::vector<std::pair<std::uint64_t, StoredValue>> blocks_;
    std::vector<std::pair<Name, Name>> scope_;
    std::uint64_t counter_ = 0;
};

}  // namespace detail

/// Canonical representative of an answer: only the part of the heap
/// reachable from the result value, locations numbered `#0, #1, ...` in
/// depth-first first-visit order, bound variables renamed `v'N`.
/// Throws std::invalid_argument on non-answers.
inline Configuration canonicalize(const Configuration& c) {
    if (!is_answer(c)) throw std::invalid_argument("canonicalize expects an answer configuration");
    return detail::Canonicalizer(c, free_vars(c)).run();
}

}  // namespace xrec::target
