#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "xrec/source_syntax.hpp"
#include "xrec/target_syntax.hpp"

namespace xrec {

/// Word sizes of heap blocks. A closure always takes `function_size` words;
/// a record takes one header of `record_header` words plus one per field.
struct SizeModel {
    std::uint64_t function_size = 2;
    std::uint64_t record_header = 1;

    std::uint64_t record_size(std::size_t fields) const { return record_header + fields; }

    void validate() const {
        if (function_size < 1) throw std::invalid_argument("function_size must be at least 1");
        if (record_header < 1) throw std::invalid_argument("record_header must be at least 1");
    }

    /// Reads flat `key = value` lines; `#` starts a comment.
    static SizeModel parse(const std::string& text) {
        SizeModel model;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            auto eq = line.find('=');
            auto trim = [](std::string s) {
                auto b = s.find_first_not_of(" \t\r");
                auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
            };
            if (trim(line).empty()) continue;
            if (eq == std::string::npos) {
                throw std::invalid_argument("sizing line " + std::to_string(lineno) + ": expected key = value");
            }
            auto key = trim(line.substr(0, eq));
            auto value = trim(line.substr(eq + 1));
            std::uint64_t n = 0;
            try {
                std::size_t used = 0;
                n = std::stoull(value, &used);
                if (used != value.size()) throw std::invalid_argument("trailing text");
            } catch (const std::exception&) {
                throw std::invalid_argument("sizing line " + std::to_string(lineno) + ": bad number '" + value + "'");
            }
            if (key == "function_size") {
                model.function_size = n;
            } else if (key == "record_header") {
                model.record_header = n;
            } else {
                throw std::invalid_argument("sizing line " + std::to_string(lineno) + ": unknown key '" + key + "'");
            }
        }
        model.validate();
        return model;
    }

    static SizeModel load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::invalid_argument("cannot read sizing file " + path);
        std::stringstream buf;
        buf << in.rdbuf();
        return parse(buf.str());
    }
};

/// Size of a source value: undefined on variables and literals.
/// Throws std::invalid_argument on non-values.
inline std::optional<std::uint64_t> size_source_value(const source::Expr& v, const SizeModel& model = {}) {
    if (v.is<source::Lam>()) return model.function_size;
    if (auto r = v.as<source::Record>()) return model.record_size(r->fields.size());
    if (v.is<source::Var>() || source::is_literal(v)) return std::nullopt;
    throw std::invalid_argument("size_source_value expects a value");
}

inline std::uint64_t size_stored_value(const target::StoredValue& hv, const SizeModel& model = {}) {
    return target::stored_words(hv, model.function_size, model.record_header);
}

/// Size a right-hand side will have if it is manifestly a value of known
/// shape; nullopt otherwise.
inline std::optional<std::uint64_t> manifest_size(const source::Expr& rhs, const SizeModel& model = {}) {
    if (rhs.is<source::Lam>() || rhs.is<source::Record>()) return size_source_value(rhs, model);
    return std::nullopt;
}

struct InferredBinding {
    source::Binding binding;
    Diagnostics diagnostics;
};

/// Annotates every forward-referenced definition whose right-hand side is a
/// manifest abstraction or record. Other forward-referenced definitions
/// without an annotation get an UnsizableForwardTarget diagnostic.
inline InferredBinding infer_size_annotations(const source::Binding& b, const SizeModel& model = {}) {
    InferredBinding out{b, {}};
    std::vector<bool> forward(b.size(), false);
    for (std::size_t i = 0; i < b.size(); ++i) {
        auto fv = source::free_vars(*b[i].rhs);
        for (std::size_t j = i; j < b.size(); ++j)
            if (fv.contains(b[j].var)) forward[j] = true;
    }
    for (std::size_t j = 0; j < b.size(); ++j) {
        auto& d = out.binding[j];
        if (!forward[j] || d.size.is_known()) continue;
        if (auto n = manifest_size(*d.rhs, model)) {
            d.size = SizeIndication::known(*n);
        } else {
            out.diagnostics.push_back({3, "UnsizableForwardTarget",
                                       "definition " + d.var +
                                           " is referenced before its own position but its right-hand side has no "
                                           "syntactic size",
                                       "def[" + std::to_string(j) + "]"});
        }
    }
    return out;
}

namespace detail {

inline source::ExprPtr infer_everywhere(const source::ExprPtr& e, const SizeModel& model, Diagnostics& diags) {
    using namespace source;
    return std::visit(
        [&](const auto& n) -> ExprPtr {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Lam>) {
                return lam(n.param, infer_everywhere(n.body, model, diags));
            } else if constexpr (std::is_same_v<T, App>) {
                return app(infer_everywhere(n.fn, model, diags), infer_everywhere(n.arg, model, diags));
            } else if constexpr (std::is_same_v<T, Select>) {
                return select(infer_everywhere(n.subject, model, diags), n.label);
            } else if constexpr (std::is_same_v<T, Letrec>) {
                Binding b = n.binding;
                for (auto& d : b) d.rhs = infer_everywhere(d.rhs, model, diags);
                auto inferred = infer_size_annotations(b, model);
                diags.insert(diags.end(), inferred.diagnostics.begin(), inferred.diagnostics.end());
                return letrec(std::move(inferred.binding), infer_everywhere(n.body, model, diags));
            } else if constexpr (std::is_same_v<T, Prim>) {
                return prim(n.op, infer_everywhere(n.lhs, model, diags), infer_everywhere(n.rhs, model, diags));
            } else if constexpr (std::is_same_v<T, If>) {
                return if_then_else(infer_everywhere(n.cond, model, diags), infer_everywhere(n.then_branch, model, diags),
                                    infer_everywhere(n.else_branch, model, diags));
            } else {
                return e;
            }
        },
        e->node);
}

inline void check_consistency(const source::Expr& e, const SizeModel& model, Diagnostics& out) {
    using namespace source;
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Lam>) {
                check_consistency(*n.body, model, out);
            } else if constexpr (std::is_same_v<T, App>) {
                check_consistency(*n.fn, model, out);
                check_consistency(*n.arg, model, out);
            } else if constexpr (std::is_same_v<T, Select>) {
                check_consistency(*n.subject, model, out);
            } else if constexpr (std::is_same_v<T, Letrec>) {
                for (const auto& d : n.binding) {
                    if (d.size.is_known()) {
                        auto m = manifest_size(*d.rhs, model);
                        if (m && *m != d.size.words()) {
                            out.push_back({0, "SizeAnnotationMismatch",
                                           d.var + " is annotated with " + std::to_string(d.size.words()) +
                                               " words but its right-hand side has size " + std::to_string(*m),
                                           ""});
                        } else if (is_literal(*d.rhs)) {
                            out.push_back({0, "SizeAnnotationMismatch",
                                           d.var + " is annotated with a size but literals have none", ""});
                        }
                    }
                    check_consistency(*d.rhs, model, out);
                }
                check_consistency(*n.body, model, out);
            } else if constexpr (std::is_same_v<T, Prim>) {
                check_consistency(*n.lhs, model, out);
                check_consistency(*n.rhs, model, out);
            } else if constexpr (std::is_same_v<T, If>) {
                check_consistency(*n.cond, model, out);
                check_consistency(*n.then_branch, model, out);
                check_consistency(*n.else_branch, model, out);
            }
        },
        e.node);
}

}  // namespace detail

struct InferredExpr {
    source::ExprPtr expr;
    Diagnostics diagnostics;
};

/// infer_size_annotations applied to every binding of a term.
inline InferredExpr infer_size_annotations(const source::ExprPtr& e, const SizeModel& model = {}) {
    InferredExpr out;
    out.expr = detail::infer_everywhere(e, model, out.diagnostics);
    return out;
}

/// Warnings for `=[n]` definitions whose right-hand side manifestly has a
/// different size.
inline Diagnostics check_annotation_consistency(const source::Expr& e, const SizeModel& model = {}) {
    Diagnostics out;
    detail::check_consistency(e, model, out);
    return out;
}

}  // namespace xrec
