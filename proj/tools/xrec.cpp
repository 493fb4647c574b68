// Command-line front end: run, compile, exec, trace, check, fuzz, corpus,
// infer-sizes.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "xrec/harness.hpp"

namespace {

using json = nlohmann::json;
using namespace xrec;

struct Flags {
    std::size_t fuel = 100000;
    bool prims = false;
    std::uint64_t seed = 0;
    bool json = false;
    std::string sizing;
};

// Exit codes.
constexpr int kOk = 0;
constexpr int kSemantic = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--fuel", f.fuel, "maximum number of reduction steps");
    cmd->add_flag("--prims", f.prims, "enable numbers, booleans, operators and if");
    cmd->add_option("--seed", f.seed, "random seed");
    cmd->add_flag("--json", f.json, "machine-readable output");
    cmd->add_option("--sizing", f.sizing, "size model file");
}

SizeModel sizes_of(const Flags& f) {
    if (f.sizing.empty()) return {};
    try {
        return SizeModel::load(f.sizing);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
}

std::string slurp(const std::string& path) {
    try {
        return harness::read_file(path);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
}

json diagnostics_json(const Diagnostics& diags) {
    json out = json::array();
    for (const auto& d : diags)
        out.push_back({{"condition", d.condition}, {"code", d.code}, {"message", d.message}, {"path", d.path}});
    return out;
}

source::ExprPtr load_source(const std::string& path, const Flags& f) {
    auto parsed = source::parse_source(slurp(path), f.prims);
    if (!parsed.ok()) throw UsageError(path + ":\n" + source::format_diagnostics(parsed.diagnostics));
    return parsed.expr;
}

target::Configuration load_target(const std::string& path) {
    try {
        return target::parse_configuration(slurp(path));
    } catch (const SyntaxError& e) {
        throw UsageError(path + ":" + std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": " + e.what());
    }
}

bool is_target_file(const std::string& path) { return std::filesystem::path(path).extension() == ".tgt"; }

json source_outcome_json(const source::Outcome& o) {
    json j{{"outcome", source::to_string(o.kind)}, {"steps", o.steps}, {"term", source::to_string(o.term)}};
    if (o.fault) j["fault"] = source::to_string(*o.fault);
    return j;
}

json target_outcome_json(const target::Outcome& o) {
    json j{{"outcome", target::to_string(o.kind)}, {"steps", o.steps}, {"config", target::to_string(o.config)}};
    if (o.fault) j["fault"] = target::to_string(*o.fault);
    return j;
}

int cmd_run(const std::string& file, const Flags& f) {
    auto e = load_source(file, f);
    source::RunOptions opts;
    opts.fuel = f.fuel;
    opts.record_trace = false;
    opts.sizes = sizes_of(f);
    auto o = source::run_source(e, opts).outcome;
    if (f.json) {
        std::cout << source_outcome_json(o).dump(2) << "\n";
    } else if (o.kind == source::Outcome::Kind::Answer) {
        std::cout << source::to_string(o.term) << "\n";
    } else if (o.kind == source::Outcome::Kind::Faulty) {
        std::cout << "Faulty " << source::to_string(*o.fault) << "\n" << source::to_string(o.term) << "\n";
    } else {
        std::cout << "FuelExhausted after " << o.steps << " steps\n";
    }
    return o.kind == source::Outcome::Kind::Answer ? kOk : kSemantic;
}

int cmd_compile(const std::string& file, const std::string& out, const Flags& f) {
    auto e = load_source(file, f);
    auto c = target::initial_configuration(transl(e));
    auto text = target::to_file_string(c);
    if (out.empty()) {
        std::cout << text;
    } else {
        std::ofstream o(out);
        if (!o) throw UsageError("cannot write " + out);
        o << text;
    }
    return kOk;
}

int cmd_exec(const std::string& file, const Flags& f) {
    auto c = is_target_file(file) ? load_target(file) : target::initial_configuration(transl(load_source(file, f)));
    target::RunOptions opts;
    opts.fuel = f.fuel;
    opts.record_trace = false;
    opts.sizes = sizes_of(f);
    auto o = target::run_target(c, opts).outcome;
    if (f.json) {
        std::cout << target_outcome_json(o).dump(2) << "\n";
    } else if (o.kind == target::Outcome::Kind::Answer) {
        std::cout << target::to_string(o.config) << "\n";
    } else if (o.kind == target::Outcome::Kind::Faulty) {
        std::cout << "Faulty " << target::to_string(*o.fault) << "\n" << target::to_string(o.config) << "\n";
    } else {
        std::cout << "FuelExhausted after " << o.steps << " steps\n";
    }
    return o.kind == target::Outcome::Kind::Answer ? kOk : kSemantic;
}

int cmd_trace(const std::string& file, bool translated, const Flags& f) {
    if (is_target_file(file) || translated) {
        auto c = is_target_file(file) ? load_target(file) : target::initial_configuration(transl(load_source(file, f)));
        target::RunOptions opts;
        opts.fuel = f.fuel;
        opts.sizes = sizes_of(f);
        auto run = target::run_target(c, opts);
        json steps = json::array();
        if (!f.json) std::cout << "STEP 0\n" << target::to_string(c) << "\n";
        for (const auto& s : run.trace) {
            if (f.json) {
                steps.push_back({{"step", s.index}, {"rule", target::rule_name(s.redex.rule)},
                                 {"config", target::to_string(s.config)}});
            } else {
                std::cout << "STEP " << s.index << " RULE " << target::rule_name(s.redex.rule) << "\n"
                          << target::to_string(s.config) << "\n";
            }
        }
        const auto& o = run.outcome;
        if (f.json) {
            std::cout << json{{"initial", target::to_string(c)}, {"steps", steps}, {"result", target_outcome_json(o)}}.dump(2)
                      << "\n";
        } else {
            std::cout << target::to_string(o.kind);
            if (o.fault) std::cout << " " << target::to_string(*o.fault);
            std::cout << "\n";
        }
        return o.kind == target::Outcome::Kind::Answer ? kOk : kSemantic;
    }
    auto e = load_source(file, f);
    source::RunOptions opts;
    opts.fuel = f.fuel;
    opts.sizes = sizes_of(f);
    auto run = source::run_source(e, opts);
    json steps = json::array();
    if (!f.json) std::cout << "STEP 0\n" << source::to_string(e) << "\n";
    for (const auto& s : run.trace) {
        if (f.json) {
            steps.push_back({{"step", s.index}, {"rule", s.rule}, {"term", source::to_string(s.term)}});
        } else {
            std::cout << "STEP " << s.index << " RULE " << s.rule << "\n" << source::to_string(s.term) << "\n";
        }
    }
    const auto& o = run.outcome;
    if (f.json) {
        std::cout << json{{"initial", source::to_string(e)}, {"steps", steps}, {"result", source_outcome_json(o)}}.dump(2)
                  << "\n";
    } else {
        std::cout << source::to_string(o.kind);
        if (o.fault) std::cout << " " << source::to_string(*o.fault);
        std::cout << "\n";
    }
    return o.kind == source::Outcome::Kind::Answer ? kOk : kSemantic;
}

json verdict_json(const harness::Verdict& v) {
    json j{{"agreement", harness::to_string(v.agreement)},
           {"detail", v.detail},
           {"source", source_outcome_json(v.source)},
           {"target", target_outcome_json(v.target)}};
    if (v.witness) j["witness"] = source::to_string(v.witness);
    return j;
}

int cmd_check(const std::string& file, std::size_t multiplier, const Flags& f) {
    auto e = load_source(file, f);
    if (!source::free_vars(*e).empty()) throw UsageError(file + ": program has free variables");
    harness::CheckOptions opts;
    opts.fuel = f.fuel;
    opts.multiplier = multiplier;
    opts.sizes = sizes_of(f);
    auto v = harness::differential_check(e, opts);
    if (f.json) {
        std::cout << verdict_json(v).dump(2) << "\n";
    } else {
        std::cout << harness::to_string(v.agreement) << "  " << v.detail << "\n";
        if (v.witness) std::cout << "witness: " << source::to_string(v.witness) << "\n";
    }
    return v.agreement == harness::Agreement::Disagree ? kSemantic : kOk;
}

int cmd_fuzz(std::size_t count, std::size_t multiplier, const std::string& regressions, int depth, const Flags& f) {
    harness::GenConfig cfg;
    cfg.seed = f.seed;
    cfg.prims_enabled = f.prims;
    cfg.max_depth = depth;
    cfg.sizes = sizes_of(f);
    harness::CheckOptions opts;
    opts.fuel = f.fuel;
    opts.multiplier = multiplier;
    opts.sizes = cfg.sizes;
    std::optional<std::filesystem::path> dir;
    if (!regressions.empty()) dir = regressions;
    auto r = harness::fuzz(cfg, count, opts, dir);
    if (f.json) {
        json d = json::array();
        for (const auto& v : r.disagreements) d.push_back(verdict_json(v));
        std::cout << json{{"cases", r.cases},
                          {"faulty_by_construction", r.faulty_by_construction},
                          {"agree_answer", r.agree_answer},
                          {"agree_faulty", r.agree_faulty},
                          {"inconclusive", r.inconclusive},
                          {"disagree", d}}
                         .dump(2)
                  << "\n";
    } else {
        std::cout << "cases " << r.cases << ", faulty by construction " << r.faulty_by_construction << "\n"
                  << "AgreeAnswer " << r.agree_answer << ", AgreeFaulty " << r.agree_faulty << ", Inconclusive "
                  << r.inconclusive << ", DISAGREE " << r.disagreements.size() << "\n";
        for (const auto& v : r.disagreements)
            std::cout << "DISAGREE " << v.detail << "\n  " << source::to_string(v.witness) << "\n";
        for (const auto& p : r.saved) std::cout << "saved " << p.string() << "\n";
    }
    return r.disagreements.empty() ? kOk : kSemantic;
}

int cmd_corpus(const std::string& dir, const Flags& f) {
    if (!std::filesystem::is_directory(dir)) throw UsageError(dir + " is not a directory");
    auto r = harness::run_corpus(dir, sizes_of(f));
    auto status = [](harness::CorpusEntry::Status s) {
        switch (s) {
        case harness::CorpusEntry::Status::Pass: return "pass";
        case harness::CorpusEntry::Status::Fail: return "FAIL";
        case harness::CorpusEntry::Status::Skipped: return "skip";
        }
        return "?";
    };
    if (f.json) {
        json files = json::array();
        for (const auto& e : r.entries) files.push_back({{"file", e.file}, {"status", status(e.status)}, {"message", e.message}});
        std::cout << json{{"files", files}}.dump(2) << "\n";
    } else {
        for (const auto& e : r.entries) {
            std::cout << status(e.status) << "  " << e.file;
            if (!e.message.empty()) std::cout << "  " << e.message;
            std::cout << "\n";
        }
    }
    return r.ok() ? kOk : kSemantic;
}

int cmd_infer_sizes(const std::string& file, const Flags& f) {
    auto parsed = source::parse_source(slurp(file), f.prims);
    if (!parsed.expr) throw UsageError(file + ":\n" + source::format_diagnostics(parsed.diagnostics));
    for (const auto& d : parsed.diagnostics) {
        if (d.condition != 3) throw UsageError(file + ":\n" + source::format_diagnostics(parsed.diagnostics));
    }
    auto sizes = sizes_of(f);
    auto inferred = infer_size_annotations(parsed.expr, sizes);
    auto remaining = source::check_wellformed(*inferred.expr, f.prims);
    auto warnings = check_annotation_consistency(*inferred.expr, sizes);
    if (f.json) {
        std::cout << json{{"program", source::to_string(inferred.expr)},
                          {"diagnostics", diagnostics_json(inferred.diagnostics)},
                          {"warnings", diagnostics_json(warnings)}}
                         .dump(2)
                  << "\n";
    } else {
        std::cout << source::to_string(inferred.expr) << "\n";
        if (!inferred.diagnostics.empty()) std::cerr << source::format_diagnostics(inferred.diagnostics);
        if (!warnings.empty()) std::cerr << source::format_diagnostics(warnings);
    }
    return remaining.empty() ? kOk : kSemantic;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"xrec: call-by-value recursion calculus, heap target and in-place update translation"};
    app.require_subcommand(1);
    Flags flags;
    std::string file;
    std::string out;
    bool translated = false;
    std::size_t multiplier = 20;
    std::size_t count = 1000;
    int depth = 4;
    std::string regressions;

    auto* run = app.add_subcommand("run", "evaluate a .rec program");
    run->add_option("file", file)->required();
    auto* compile = app.add_subcommand("compile", "translate a .rec program to .tgt");
    compile->add_option("file", file)->required();
    compile->add_option("-o,--output", out, "output file (default stdout)");
    auto* exec = app.add_subcommand("exec", "evaluate a .tgt configuration");
    exec->add_option("file", file)->required();
    auto* trace = app.add_subcommand("trace", "print every reduction step");
    trace->add_option("file", file)->required();
    trace->add_flag("--target", translated, "trace the translated program");
    auto* check = app.add_subcommand("check", "compare source and target evaluation of one program");
    check->add_option("file", file)->required();
    check->add_option("--multiplier", multiplier, "target fuel per unit of source fuel");
    auto* fuzz = app.add_subcommand("fuzz", "differential checks on generated programs");
    fuzz->add_option("--count", count, "number of programs");
    fuzz->add_option("--multiplier", multiplier, "target fuel per unit of source fuel");
    fuzz->add_option("--depth", depth, "generator depth");
    fuzz->add_option("--regressions", regressions, "directory for DISAGREE witnesses");
    auto* corpus = app.add_subcommand("corpus", "check every .rec file of a directory against its .expect file");
    corpus->add_option("dir", file)->required();
    auto* infer = app.add_subcommand("infer-sizes", "annotate forward-referenced definitions with sizes");
    infer->add_option("file", file)->required();
    for (auto* c : {run, compile, exec, trace, check, fuzz, corpus, infer}) add_common(c, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*run) return cmd_run(file, flags);
        if (*compile) return cmd_compile(file, out, flags);
        if (*exec) return cmd_exec(file, flags);
        if (*trace) return cmd_trace(file, translated, flags);
        if (*check) return cmd_check(file, multiplier, flags);
        if (*fuzz) {
            if (flags.fuel == 100000) flags.fuel = 5000;
            return cmd_fuzz(count, multiplier, regressions, depth, flags);
        }
        if (*corpus) return cmd_corpus(file, flags);
        if (*infer) return cmd_infer_sizes(file, flags);
    } catch (const UsageError& e) {
        std::cerr << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
