#include <gtest/gtest.h>

#include "xrec/harness.hpp"
#include "xrec/source_text.hpp"
#include "xrec/target_text.hpp"

using namespace xrec;
using namespace xrec::harness;

namespace {

source::ExprPtr p(const std::string& text) { return source::parse_source_or_throw(text, true); }

std::filesystem::path corpus_dir() { return std::filesystem::path(XREC_SOURCE_DIR) / "corpus"; }

}  // namespace

TEST(Differential, Examples) {
    auto sub = differential_check(p("rec x =? \\y.y in x x"));
    EXPECT_EQ(sub.agreement, Agreement::AgreeAnswer) << sub.detail;

    auto fwd = differential_check(p("rec z =? x x, x =[2] \\y.y in z"));
    EXPECT_EQ(fwd.agreement, Agreement::AgreeFaulty) << fwd.detail;

    auto eo = differential_check(
        p("rec even =? \\x. (x = 0) or (odd (x - 1)), odd =[2] \\x. (x > 0) and (even (x - 1)) in even 56"), 10000);
    EXPECT_EQ(eo.agreement, Agreement::AgreeAnswer) << eo.detail;
    EXPECT_TRUE(source::alpha_equal(source::answer_value(eo.source.term), source::boolean(true)));
}

TEST(Differential, InconclusiveOnDivergence) {
    auto v = differential_check(p("rec f =[2] \\x. f x in f f"), 100);
    EXPECT_EQ(v.agreement, Agreement::Inconclusive);
}

TEST(Differential, RejectsOpenTerms) { EXPECT_THROW(differential_check(p("x")), std::invalid_argument); }

TEST(Generator, TermsAreClosedAndWellFormed) {
    GenConfig cfg;
    std::size_t faulty = 0;
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
        cfg.seed = seed;
        auto g = Generator(cfg).term();
        EXPECT_TRUE(source::free_vars(g.expr).empty()) << source::to_string(g.expr);
        EXPECT_TRUE(source::check_wellformed(*g.expr).empty()) << source::to_string(g.expr);
        EXPECT_EQ(g.faulty_by_construction, !g.mutation.empty());
        faulty += g.faulty_by_construction;
    }
    EXPECT_GT(faulty, 50u);
}

TEST(Generator, Deterministic) {
    GenConfig cfg;
    cfg.seed = 42;
    EXPECT_TRUE(source::alpha_equal(gen_expr(cfg), gen_expr(cfg)));
}

TEST(Generator, NoPrimsWhenDisabled) {
    GenConfig cfg;
    cfg.prims_enabled = false;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        cfg.seed = seed;
        EXPECT_TRUE(source::parse_source(source::to_string(gen_expr(cfg)), false).ok());
    }
}

TEST(Shrink, KeepsAgreeingTermsAndOffersSmallerCandidates) {
    auto e = p("(\\a. a) ((\\b. b) (\\c. c))");
    EXPECT_TRUE(source::alpha_equal(shrink(e, CheckOptions{}), e));
    std::size_t smaller = 0;
    for (const auto& c : harness::detail::shrink_candidates(e))
        smaller += source::node_count(*c) < source::node_count(*e);
    EXPECT_GT(smaller, 0u);
}

TEST(Commutation, Examples) {
    auto c = target::parse_configuration("heap { #0 = {X = #1}; #1 = \\y. y; #2 = alloc 3; } expr { #0.X 1 }");
    auto r = check_commutation(c);
    EXPECT_GE(r.pairs, 1u);
    EXPECT_TRUE(r.ok()) << (r.failures.empty() ? "" : r.failures[0].detail);

    auto lets = target::parse_configuration("let a = \\x. x, b = {} in (\\y. y) (let c = {} in c)");
    EXPECT_TRUE(check_commutation(lets).ok());
}

TEST(SizeHypothesis, Examples) {
    EXPECT_TRUE(check_size_hypothesis(p("\\x. x")));
    EXPECT_TRUE(check_size_hypothesis(p("{A = a, B = b}")));
    EXPECT_TRUE(check_size_hypothesis(p("{}"), SizeModel{3, 4}));
}

TEST(Expectation, Parse) {
    auto e = Expectation::parse("# c\nprims: true\noutcome: Faulty\nfault: SizeMismatch\nrules: Subst Beta\nfuel: 9\n");
    EXPECT_TRUE(e.prims);
    EXPECT_EQ(e.outcome, "Faulty");
    EXPECT_EQ(e.fault, "SizeMismatch");
    EXPECT_EQ(e.rules, (std::vector<std::string>{"Subst", "Beta"}));
    EXPECT_EQ(e.fuel, 9u);
    EXPECT_THROW(Expectation::parse("fault: X\n"), std::invalid_argument);
    EXPECT_THROW(Expectation::parse("outcome: Answer\ncolour: red\n"), std::invalid_argument);
}

TEST(Expectation, Mismatch) {
    auto ex = Expectation::parse("outcome: Faulty\n");
    EXPECT_FALSE(check_expectation("\\x. x", ex).empty());
    EXPECT_TRUE(check_expectation("\\x. x", Expectation::parse("outcome: Answer\n")).empty());
}

TEST(Corpus, AllPass) {
    auto report = run_corpus(corpus_dir());
    EXPECT_GE(report.entries.size(), 12u);
    for (const auto& e : report.entries) EXPECT_EQ(e.status, CorpusEntry::Status::Pass) << e.file << ": " << e.message;
}

TEST(Corpus, PipelineCoherence) {
    for (const auto& entry : std::filesystem::directory_iterator(corpus_dir())) {
        if (entry.path().extension() != ".rec") continue;
        auto e = source::parse_source_or_throw(read_file(entry.path()), true);
        auto c = translate_program(e);
        EXPECT_TRUE(target::free_vars(c).empty()) << entry.path();
        auto once = target::run_target(c, target::RunOptions{100000, false, {}});
        auto again = target::run_target(c, target::RunOptions{100000, false, {}});
        EXPECT_EQ(once.outcome.kind, again.outcome.kind);
        EXPECT_TRUE(target::identical(once.outcome.config, again.outcome.config)) << entry.path();
    }
}

TEST(Fuzz, SmallCampaign) {
    GenConfig cfg;
    cfg.seed = 1000;
    auto r = fuzz(cfg, 100, CheckOptions{});
    EXPECT_EQ(r.cases, 100u);
    EXPECT_TRUE(r.disagreements.empty());
    EXPECT_EQ(r.agree_answer + r.agree_faulty + r.inconclusive, 100u);
}
