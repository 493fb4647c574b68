#include <gtest/gtest.h>

#include "oracles/source_oracle.hpp"
#include "xrec/harness.hpp"
#include "xrec/source_eval.hpp"
#include "xrec/source_text.hpp"

using namespace xrec;
using namespace xrec::source;

namespace {

ExprPtr p(const std::string& text) { return parse_source_or_throw(text, true); }

const char* kEvenOdd =
    "rec even =? \\x. (x = 0) or (odd (x - 1)), odd =[2] \\x. (x > 0) and (even (x - 1)) in even ";

bool parity_even(std::uint64_t n) { return n % 2 == 0; }

}  // namespace

TEST(Decompose, LetrecInFunctionPositionLiftsFirst) {
    auto e = p("(rec x =? \\u. u in x y) z");
    auto d = decompose(e);
    ASSERT_TRUE(d);
    EXPECT_TRUE(d->focus->is<Letrec>());
    ASSERT_EQ(d->context.frames.size(), 1u);
    EXPECT_EQ(d->context.frames[0].kind, Frame::Kind::AppFn);
    auto r = reduce_step(e);
    EXPECT_EQ(r.rule, "Lift");
    EXPECT_TRUE(alpha_equal(r.next, p("rec x =? \\u. u in x y z")));
}

TEST(Decompose, ArgumentBeforeFunction) {
    auto e = p("((\\a. a) (\\b. b)) ((\\c. c) v)");
    auto d = decompose(e);
    ASSERT_TRUE(d);
    EXPECT_TRUE(alpha_equal(d->focus, p("(\\c. c) v")));
}

TEST(Decompose, AnswerHasNoRedex) {
    EXPECT_FALSE(decompose(p("\\x. x")));
    EXPECT_FALSE(decompose(p("rec x =? \\y. y, y =? x in y")));
}

TEST(Decompose, PastTheSizeRespectingPrefix) {
    auto d = decompose(p("rec a =? {}, b =[2] a in b"));
    ASSERT_TRUE(d);
    EXPECT_EQ(d->context.stage, EvalContext::Stage::InBinding);
    EXPECT_EQ(d->context.var, "b");
    EXPECT_TRUE(d->context.dereferencing());
}

TEST(LookupContext, Examples) {
    auto d = decompose(p("rec x =? \\y. y in x x"));
    ASSERT_TRUE(d);
    ASSERT_TRUE(lookup_context(d->context, "x"));
    EXPECT_TRUE(alpha_equal(*lookup_context(d->context, "x"), p("\\y. y")));
    EXPECT_FALSE(lookup_context(d->context, "w"));
    // the definition being evaluated and the later ones are not available
    auto f = decompose(p("rec a =? {}, b =? c c, c =[2] \\u. u in b"));
    ASSERT_TRUE(f);
    EXPECT_TRUE(lookup_context(f->context, "a"));
    EXPECT_FALSE(lookup_context(f->context, "b"));
    EXPECT_FALSE(lookup_context(f->context, "c"));
}

TEST(Subreduce, Examples) {
    NameSupply s;
    auto sel = subreduce(p("{X = z}.X"), s);
    ASSERT_TRUE(sel);
    EXPECT_EQ(sel->second, "Select");
    EXPECT_TRUE(alpha_equal(sel->first, var("z")));

    auto beta = subreduce(p("(\\y. y) x"), s);
    ASSERT_TRUE(beta);
    EXPECT_EQ(beta->second, "Beta");
    EXPECT_TRUE(alpha_equal(beta->first, p("rec y =? x in y")));

    auto lift = subreduce(p("e1 (rec b =? {} in e2)"), s);
    ASSERT_TRUE(lift);
    EXPECT_EQ(lift->second, "Lift");
    EXPECT_TRUE(alpha_equal(lift->first, p("rec b =? {} in e1 e2")));

    EXPECT_FALSE(subreduce(p("x y"), s));
}

TEST(Subreduce, BetaRenamesWhenArgumentMentionsParameter) {
    NameSupply s;
    auto r = subreduce(p("(\\y. y z) y"), s);
    ASSERT_TRUE(r);
    auto l = r->first->as<Letrec>();
    ASSERT_NE(l, nullptr);
    EXPECT_NE(l->binding[0].var, "y");
    EXPECT_TRUE(alpha_equal(r->first, p("rec w =? y in w z")));
}

TEST(Subreduce, LiftRenamesAwayFromContext) {
    NameSupply s;
    auto r = subreduce(p("b (rec b =? {} in b)"), s);
    ASSERT_TRUE(r);
    EXPECT_EQ(free_vars(r->first), NameSet({"b"}));
    EXPECT_TRUE(alpha_equal(r->first, p("rec c =? {} in b c")));
}

TEST(ReduceStep, Examples) {
    auto r1 = reduce_step(p("rec x =? \\y.y in x x"));
    EXPECT_EQ(r1.rule, "Subst");
    EXPECT_TRUE(alpha_equal(r1.next, p("rec x =? \\y.y in (\\y.y) x")));

    auto r2 = reduce_step(p("rec x =? \\y.y in (rec y =? x in y)"));
    EXPECT_EQ(r2.rule, "EM");
    EXPECT_TRUE(alpha_equal(r2.next, p("rec x =? \\y.y, y =? x in y")));

    auto r3 = reduce_step(p("rec e =? {}, y =? {X = e}, z =[2] y in z"));
    EXPECT_EQ(r3.rule, "Subst");
    EXPECT_TRUE(alpha_equal(r3.next, p("rec e =? {}, y =? {X = e}, z =[2] {X = e} in z")));
}

TEST(ReduceStep, InternalMerge) {
    auto r = reduce_step(p("rec a =? {}, b =? (rec c =? {} in c) in b"));
    EXPECT_EQ(r.rule, "IM");
    EXPECT_TRUE(alpha_equal(r.next, p("rec a =? {}, c =? {}, b =? c in b")));
}

TEST(RunSource, Examples) {
    auto run = run_source(p("rec x =? \\y.y in x x"), 10);
    EXPECT_EQ(run.outcome.kind, Outcome::Kind::Answer);
    EXPECT_TRUE(alpha_equal(run.outcome.term, p("rec x =? \\y. y, y =? x in y")));

    auto bad = run_source(p("rec z =? x x, x =[2] \\y.y in z"), 10);
    EXPECT_EQ(bad.outcome.kind, Outcome::Kind::Faulty);
    EXPECT_EQ(bad.outcome.fault, FaultKind::UndefinedVariableDeref);
}

TEST(RunSource, EvenOddAgainstParity) {
    for (std::uint64_t n : {0u, 1u, 7u, 56u}) {
        auto run = run_source(p(std::string(kEvenOdd) + std::to_string(n)), 10000);
        ASSERT_EQ(run.outcome.kind, Outcome::Kind::Answer) << n;
        auto v = answer_value(run.outcome.term);
        ASSERT_TRUE(v->is<Bool>());
        EXPECT_EQ(v->as<Bool>()->value, parity_even(n)) << n;
    }
}

TEST(RunSource, FuelExhaustion) {
    auto run = run_source(p("rec f =[2] \\x. f x in f f"), 50);
    EXPECT_EQ(run.outcome.kind, Outcome::Kind::FuelExhausted);
    EXPECT_EQ(run.outcome.steps, 50u);
    EXPECT_EQ(run.trace.size(), 50u);
}

TEST(RunSource, TraceRecordsRules) {
    auto run = run_source(p("rec x =? \\y.y in x x"));
    std::vector<std::string> rules;
    for (const auto& s : run.trace) rules.push_back(s.rule);
    EXPECT_EQ(rules, (std::vector<std::string>{"Subst", "Beta", "EM"}));
}

TEST(ClassifyStuck, Examples) {
    EXPECT_EQ(classify_stuck(p("rec x =[5] {X = y} in x")), FaultKind::SizeMismatch);
    EXPECT_EQ(classify_stuck(p("rec v =? {} in {X = v} v")), FaultKind::RecordApplied);
    EXPECT_EQ(classify_stuck(p("(\\x. x).X")), FaultKind::FunctionSelected);
    EXPECT_EQ(classify_stuck(p("{}.X")), FaultKind::MissingField);
    EXPECT_EQ(classify_stuck(p("x y")), FaultKind::UndefinedVariableDeref);
    EXPECT_EQ(classify_stuck(p("1 + true")), FaultKind::PrimMisuse);
    EXPECT_EQ(classify_stuck(p("rec x =[1] 5 in x")), FaultKind::SizeMismatch);
}

TEST(ClassifyStuck, RejectsAnswersAndRedexes) {
    EXPECT_THROW(classify_stuck(p("\\x. x")), std::invalid_argument);
    EXPECT_THROW(classify_stuck(p("(\\x. x) y")), std::invalid_argument);
}

TEST(Answers, SizeRespectingOnly) {
    EXPECT_TRUE(is_answer(*p("rec x =[2] \\y. y in x")));
    EXPECT_FALSE(is_answer(*p("rec x =[3] \\y. y in x")));
    EXPECT_FALSE(is_answer(*p("rec a =? {}, x =[2] a in x")));
    EXPECT_TRUE(is_answer(*p("rec a =? {}, x =? a in x")));
}

TEST(Properties, LiftKeepsFreeVariables) {
    harness::GenConfig cfg;
    std::size_t lifts = 0;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        cfg.seed = seed;
        auto run = run_source(harness::gen_expr(cfg), 300);
        ExprPtr prev = harness::gen_expr(cfg);
        for (const auto& s : run.trace) {
            if (s.rule == "Lift") {
                ++lifts;
                EXPECT_EQ(free_vars(prev), free_vars(s.term));
            }
            prev = s.term;
        }
    }
    EXPECT_GT(lifts, 0u);
}

TEST(Properties, OutcomesAreAnswersOrClassified) {
    harness::GenConfig cfg;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        cfg.seed = seed;
        auto run = run_source(harness::gen_expr(cfg), 2000);
        if (run.outcome.kind == Outcome::Kind::Answer) EXPECT_TRUE(is_answer(*run.outcome.term));
        if (run.outcome.kind == Outcome::Kind::Faulty) EXPECT_TRUE(run.outcome.fault.has_value());
    }
}

TEST(Properties, MatchesBruteForceEnumeration) {
    harness::GenConfig cfg;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        cfg.seed = seed;
        ExprPtr cur = harness::gen_expr(cfg);
        for (int i = 0; i < 20; ++i) {
            auto all = oracle::src::distinct_reducts(cur);
            auto r = reduce_step(cur);
            if (r.kind != StepKind::Stepped) {
                EXPECT_TRUE(all.empty()) << to_string(cur);
                break;
            }
            ASSERT_EQ(all.size(), 1u) << to_string(cur);
            EXPECT_EQ(all[0].rule, r.rule);
            EXPECT_TRUE(alpha_equal(all[0].term, r.next)) << to_string(cur);
            cur = r.next;
        }
    }
}
