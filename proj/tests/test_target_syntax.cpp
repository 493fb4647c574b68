#include <gtest/gtest.h>

#include "xrec/harness.hpp"
#include "xrec/target_syntax.hpp"
#include "xrec/target_text.hpp"

using namespace xrec;
using namespace xrec::target;

namespace {

Configuration c(const std::string& text) { return parse_configuration(text); }

}  // namespace

TEST(FreeVars, Examples) {
    EXPECT_EQ(free_vars(parse_expr("let _ = x in y")), NameSet({"x", "y"}));
    EXPECT_TRUE(free_vars(c("heap { #0 = \\x. x; } expr { #0 }")).empty());
    EXPECT_TRUE(free_vars(parse_expr("alloc")).empty());
}

TEST(FreeVars, LetBindersScopeOverTheWholeLet) {
    EXPECT_TRUE(free_vars(parse_expr("let x = y, y = x in x")).empty());
    EXPECT_EQ(free_vars(parse_expr("let x = alloc 2, _ = update x z in x")), NameSet({"z"}));
}

TEST(FreeVars, ConfigurationSubtractsHeapDomain) {
    EXPECT_EQ(free_vars(c("heap { #0 = {A = #1}; #1 = \\u. w; } expr { #0 v }")), NameSet({"v", "w"}));
}

TEST(ConfigEqual, ReorderAndRename) {
    auto a = c("heap { #1 = \\x. x; #2 = {X = #1}; } expr { #2 }");
    auto b = c("heap { #7 = {X = #3}; #3 = \\y. y; } expr { #7 }");
    EXPECT_TRUE(config_equal(a, b));
    EXPECT_TRUE(config_equal(b, a));
}

TEST(ConfigEqual, DifferentBlockSizes) {
    EXPECT_FALSE(config_equal(c("heap { #0 = alloc 2; } expr { #0 }"), c("heap { #0 = alloc 3; } expr { #0 }")));
}

TEST(ConfigEqual, GarbageIsNotIgnored) {
    auto a = c("heap { #0 = \\x. x; } expr { #0 }");
    auto b = c("heap { #0 = \\x. x; #1 = {}; } expr { #0 }");
    EXPECT_FALSE(config_equal(a, b));
}

TEST(ConfigEqual, FreeVariablesRigid) {
    EXPECT_FALSE(config_equal(c("heap { #0 = {A = a}; } expr { #0 }"), c("heap { #0 = {A = b}; } expr { #0 }")));
}

TEST(ConfigEqual, NonAnswers) {
    auto a = c("heap { #0 = \\x. x; #1 = alloc 2; } expr { let _ = update #1 #0 in #1 5 }");
    auto b = c("heap { #5 = alloc 2; #4 = \\z. z; } expr { let _ = update #5 #4 in #5 5 }");
    EXPECT_TRUE(config_equal(a, b));
    auto d = c("heap { #5 = alloc 2; #4 = \\z. z; } expr { let _ = update #4 #5 in #5 5 }");
    EXPECT_FALSE(config_equal(a, d));
}

TEST(Canonicalize, FirstVisitOrder) {
    auto r = canonicalize(c("heap { #9 = \\x. x; #3 = {Y = #9}; } expr { #3 }"));
    EXPECT_TRUE(config_equal(r, c("heap { #0 = {Y = #1}; #1 = \\x. x; } expr { #0 }"))) << to_string(r);
    auto es = r.heap.entries();
    ASSERT_EQ(es.size(), 2u);
    EXPECT_EQ(es[0].first, "#0");
    EXPECT_TRUE(std::holds_alternative<RecordBlock>(es[0].second));
    EXPECT_EQ(es[1].first, "#1");
}

TEST(Canonicalize, DropsCyclicGarbage) {
    auto r = canonicalize(c("heap { #0 = {A = #1}; #1 = {A = #0}; #2 = \\x. x; } expr { #2 }"));
    EXPECT_EQ(r.heap.size(), 1u);
    EXPECT_TRUE(config_equal(r, c("heap { #0 = \\x. x; } expr { #0 }")));
}

TEST(Canonicalize, CyclicList) {
    auto in = c("heap { #4 = {Head = 0, Tail = #4}; } expr { #4 }");
    auto r = canonicalize(in);
    EXPECT_TRUE(config_equal(in, r));
    EXPECT_TRUE(identical(r, c("heap { #0 = {Head = 0, Tail = #0}; } expr { #0 }")));
}

TEST(Canonicalize, RejectsNonAnswers) {
    EXPECT_THROW(canonicalize(c("heap { #0 = \\x. x; } expr { #0 #0 }")), std::invalid_argument);
}

TEST(Canonicalize, IdempotentOnGeneratedAnswers) {
    harness::GenConfig cfg;
    std::size_t answers = 0;
    for (std::uint64_t seed = 0; answers < 1000 && seed < 5000; ++seed) {
        cfg.seed = seed;
        auto prog = harness::Generator(cfg).term();
        auto run = run_target(translate_program(prog.expr), RunOptions{20000, false, {}});
        if (run.outcome.kind != Outcome::Kind::Answer) continue;
        ++answers;
        auto once = canonicalize(run.outcome.config);
        auto twice = canonicalize(once);
        EXPECT_TRUE(identical(once, twice)) << to_string(once);
        EXPECT_TRUE(config_equal(once, twice));
    }
    EXPECT_EQ(answers, 1000u);
}

TEST(Heap, InsertionOrderAndDoubleBinding) {
    Heap h;
    h.insert("#2", AllocBlock{2});
    h.insert("#0", AllocBlock{1});
    auto es = h.entries();
    ASSERT_EQ(es.size(), 2u);
    EXPECT_EQ(es[0].first, "#2");
    EXPECT_THROW(h.insert("#2", AllocBlock{1}), std::invalid_argument);
    h.erase("#2");
    EXPECT_FALSE(h.contains("#2"));
}

TEST(Text, ParsePrintRoundTrip) {
    for (const char* text :
         {"heap { #0 = \\x. x; } expr { #0 }", "let odd = alloc 2, even = \\x. (x = 0) or (odd (x - 1)), _ = update odd (\\x. (x > 0) and (even (x - 1))) in even 56",
          "heap { #0 = {Head = 0, Tail = #0}; } expr { #0.Tail.Head }", "let in (\\x. x) 5", "if true then 1 else 2"}) {
        auto a = c(text);
        auto b = c(to_file_string(a));
        EXPECT_TRUE(identical(a, b)) << text << " printed as " << to_file_string(a);
    }
}

TEST(Text, LocationsCannotBeBinders) {
    EXPECT_ANY_THROW(parse_expr("\\#0. #0"));
    EXPECT_ANY_THROW(parse_expr("let #0 = 1 in #0"));
}

TEST(Text, HeapMustHoldStoredValues) { EXPECT_ANY_THROW(c("heap { #0 = 5; } expr { #0 }")); }

TEST(Properties, ClosedProgramsStayClosed) {
    harness::GenConfig cfg;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        cfg.seed = seed;
        auto run = run_target(translate_program(harness::gen_expr(cfg)), RunOptions{5000, true, {}});
        for (const auto& s : run.trace) ASSERT_TRUE(free_vars(s.config).empty()) << to_string(s.config);
    }
}
