#include <gtest/gtest.h>

#include <algorithm>

#include "oracles/target_oracle.hpp"
#include "xrec/harness.hpp"
#include "xrec/target_eval.hpp"
#include "xrec/target_text.hpp"

using namespace xrec;
using namespace xrec::target;

namespace {

Configuration c(const std::string& text) { return parse_configuration(text); }

bool has_rule(const std::vector<Redex>& rs, Rule r) {
    return std::any_of(rs.begin(), rs.end(), [&](const Redex& x) { return x.rule == r; });
}

std::uint64_t total_words(const Heap& h) {
    std::uint64_t n = 0;
    h.for_each([&](const Name&, const StoredValue& hv) { n += size_stored_value(hv, SizeModel{}); });
    return n;
}

}  // namespace

TEST(Rules, Names) {
    EXPECT_EQ(rule_name(Rule::Allocate), "Alloc_a");
    EXPECT_EQ(rule_name(Rule::Beta), "Beta_a");
    EXPECT_TRUE(is_administrative(Rule::GC));
    EXPECT_FALSE(is_administrative(Rule::Lift));
}

TEST(ApplicableRedexes, Examples) {
    auto lam = applicable_redexes(c("\\x. x"));
    ASSERT_EQ(lam.size(), 1u);
    EXPECT_EQ(lam[0], (Redex{Rule::Allocate, {}, {}}));

    auto beta = applicable_redexes(c("heap { #0 = \\y. y; } expr { #0 5 }"));
    ASSERT_EQ(beta.size(), 1u);
    EXPECT_EQ(beta[0].rule, Rule::Beta);

    auto gc = applicable_redexes(c("heap { #0 = \\x. x; } expr { 0 }"));
    ASSERT_EQ(gc.size(), 1u);
    EXPECT_EQ(gc[0], (Redex{Rule::GC, {}, "#0"}));
}

TEST(ApplicableRedexes, AnswersHaveNone) {
    EXPECT_TRUE(applicable_redexes(c("heap { #0 = \\x. x; } expr { #0 }")).empty());
    EXPECT_TRUE(applicable_redexes(c("5")).empty());
}

TEST(ApplicableRedexes, SeveralAtOnce) {
    auto rs = applicable_redexes(c("heap { #0 = {X = #1}; #1 = \\y. y; #2 = alloc 3; } expr { #0.X 1 }"));
    EXPECT_TRUE(has_rule(rs, Rule::Select));
    EXPECT_TRUE(has_rule(rs, Rule::GC));
}

TEST(ApplyRule, Update) {
    auto in = c("heap { #0 = alloc 2; #1 = \\x. x; } expr { update #0 #1 }");
    auto rs = applicable_redexes(in);
    ASSERT_TRUE(has_rule(rs, Rule::Update));
    auto r = *std::find_if(rs.begin(), rs.end(), [](const Redex& x) { return x.rule == Rule::Update; });
    auto out = apply_rule(in, r);
    EXPECT_EQ(out.heap.size(), 2u);
    EXPECT_TRUE(identical(out, c("heap { #0 = \\x. x; #1 = \\x. x; } expr { {} }"))) << to_string(out);
}

TEST(ApplyRule, BetaAndSelect) {
    auto beta = apply_rule(c("heap { #0 = \\y. y; } expr { #0 5 }"), Redex{Rule::Beta, {}, {}});
    EXPECT_TRUE(config_equal(beta, c("heap { #0 = \\y. y; } expr { 5 }"))) << to_string(beta);

    auto sel = apply_rule(c("heap { #0 = {X = 3}; } expr { #0.X }"), Redex{Rule::Select, {}, {}});
    EXPECT_TRUE(identical(sel, c("heap { #0 = {X = 3}; } expr { 3 }")));
}

TEST(ApplyRule, AllocateAddsOneBinding) {
    auto out = apply_rule(c("alloc 4"), Redex{Rule::Allocate, {}, {}});
    ASSERT_EQ(out.heap.size(), 1u);
    EXPECT_TRUE(config_equal(out, c("heap { #0 = alloc 4; } expr { #0 }")));
}

TEST(Deterministic, Examples) {
    auto s = step_deterministic(c("(\\x. x) 5"));
    ASSERT_TRUE(s);
    EXPECT_EQ(s->second.rule, Rule::Allocate);
    EXPECT_EQ(s->second.path, (Path{0}));
    EXPECT_FALSE(step_deterministic(c("heap { #0 = \\x. x; } expr { #0 }")));
}

TEST(RunTarget, FirstExample) {
    auto run = run_target(c("(\\x. x.X.Y) (let y = {Y = 0} in {X = y})"));
    ASSERT_EQ(run.outcome.kind, Outcome::Kind::Answer);
    EXPECT_TRUE(config_equal(run.outcome.config, c("heap { #1 = {Y = 0}; #2 = {X = #1}; #3 = \\x. x.X.Y; } expr { 0 }")))
        << to_string(run.outcome.config);
    bool saw = false;
    for (const auto& s : run.trace)
        saw = saw || config_equal(s.config, c("heap { #1 = {Y = 0}; #2 = {X = #1}; #3 = \\x. x.X.Y; } expr { #3 #2 }"));
    EXPECT_TRUE(saw);
}

TEST(RunTarget, MutualRecursion) {
    auto run = run_target(
        c("let odd = alloc 2, even = \\x. (x = 0) or (odd (x - 1)), _ = update odd (\\x. (x > 0) and (even (x - 1))) in even 56"));
    ASSERT_EQ(run.outcome.kind, Outcome::Kind::Answer);
    EXPECT_TRUE(config_equal(canonicalize(run.outcome.config), c("true")));
}

TEST(RunTarget, FuelExhausted) {
    auto run = run_target(c("let f = alloc 2, _ = update f (\\x. f x) in f 0"), 40);
    EXPECT_EQ(run.outcome.kind, Outcome::Kind::FuelExhausted);
    EXPECT_EQ(run.outcome.steps, 40u);
}

TEST(ClassifyStuck, Examples) {
    EXPECT_EQ(classify_stuck(c("heap { #0 = alloc 2; #1 = alloc 2; } expr { update #0 #1 }")),
              FaultKind::UpdateFromDummy);
    EXPECT_EQ(classify_stuck(c("3 4")), FaultKind::NumberCalled);
    EXPECT_EQ(classify_stuck(c("x.X")), FaultKind::UnboundSelect);
    EXPECT_EQ(classify_stuck(c("heap { #0 = {}; } expr { #0.X }")), FaultKind::BadRecordSelect);
    EXPECT_EQ(classify_stuck(c("heap { #0 = {}; } expr { #0 1 }")), FaultKind::NonFunctionCall);
    EXPECT_EQ(classify_stuck(c("heap { #0 = \\x. x; #1 = {A = 1, B = 2}; } expr { update #0 #1 }")),
              FaultKind::UpdateSizeMismatch);
    EXPECT_EQ(classify_stuck(c("update")), FaultKind::BareUpdate);
    EXPECT_EQ(classify_stuck(c("alloc")), FaultKind::BareAlloc);
    EXPECT_EQ(classify_stuck(c("1 + true")), FaultKind::PrimMisuse);
    EXPECT_THROW(classify_stuck(c("5")), std::invalid_argument);
    EXPECT_THROW(classify_stuck(c("(\\x. x) 5")), std::invalid_argument);
}

TEST(ClassifyStuck, UpdatePrecedence) {
    // unbound before dummy before size
    EXPECT_EQ(classify_stuck(c("heap { #0 = alloc 3; } expr { update #0 y }")), FaultKind::UpdateUnbound);
    EXPECT_EQ(classify_stuck(c("heap { #0 = alloc 3; #1 = alloc 2; } expr { update #0 #1 }")),
              FaultKind::UpdateFromDummy);
}

TEST(AdminNormalize, Examples) {
    auto a = admin_normalize(c("\\x. x"));
    EXPECT_TRUE(a.completed);
    EXPECT_TRUE(identical(a.config, c("heap { #0 = \\x. x; } expr { #0 }")));

    auto b = admin_normalize(c("let y = alloc 2, _ = update y (\\x. x) in y"));
    EXPECT_TRUE(b.completed);
    EXPECT_TRUE(config_equal(b.config, c("heap { #0 = \\x. x; } expr { #0 }"))) << to_string(b.config);
}

TEST(AdminNormalize, FixpointAndBudget) {
    auto once = admin_normalize(c("let a = {}, b = \\z. a in b 1"));
    ASSERT_TRUE(once.completed);
    auto twice = admin_normalize(once.config);
    EXPECT_TRUE(twice.completed);
    EXPECT_EQ(twice.steps, 0u);
    EXPECT_TRUE(identical(once.config, twice.config));
    EXPECT_FALSE(admin_normalize(c("let a = {}, b = \\z. a in b 1"), 1).completed);
}

TEST(Properties, DriverStepsAreApplicable) {
    harness::GenConfig cfg;
    for (std::uint64_t seed = 0; seed < 150; ++seed) {
        cfg.seed = seed;
        Configuration cur = translate_program(harness::gen_expr(cfg));
        for (int i = 0; i < 200; ++i) {
            auto s = step_deterministic(cur);
            if (!s) break;
            auto rs = applicable_redexes(cur);
            ASSERT_NE(std::find(rs.begin(), rs.end(), s->second), rs.end())
                << to_string(s->second) << " in " << to_string(cur);
            cur = s->first;
        }
    }
}

TEST(Properties, RuleEffectsOnTheHeap) {
    harness::GenConfig cfg;
    std::size_t updates = 0;
    for (std::uint64_t seed = 0; seed < 150; ++seed) {
        cfg.seed = seed;
        Configuration cur = translate_program(harness::gen_expr(cfg));
        for (int i = 0; i < 200; ++i) {
            auto s = step_deterministic(cur);
            if (!s) break;
            const auto& [next, r] = *s;
            if (r.rule == Rule::Update) {
                ++updates;
                EXPECT_EQ(next.heap.domain(), cur.heap.domain());
                EXPECT_EQ(total_words(next.heap), total_words(cur.heap));
            }
            if (r.rule == Rule::Allocate) EXPECT_EQ(next.heap.size(), cur.heap.size() + 1);
            if (r.rule == Rule::GC) EXPECT_EQ(next.heap.size() + 1, cur.heap.size());
            cur = next;
        }
    }
    EXPECT_GT(updates, 0u);
}

TEST(Properties, StuckConfigurationsMatchOracle) {
    harness::GenConfig cfg;
    std::size_t stuck = 0;
    for (std::uint64_t seed = 0; seed < 400; ++seed) {
        cfg.seed = seed;
        auto run = run_target(translate_program(harness::gen_expr(cfg)), RunOptions{5000, false, {}});
        if (run.outcome.kind != Outcome::Kind::Faulty) continue;
        ++stuck;
        auto cases = oracle::tgt::fault_cases(run.outcome.config);
        EXPECT_EQ(cases.bullets.size(), 1u) << to_string(run.outcome.config);
        EXPECT_TRUE(cases.kinds.contains(std::string(to_string(*run.outcome.fault)))) << to_string(run.outcome.config);
    }
    EXPECT_GT(stuck, 0u);
}
