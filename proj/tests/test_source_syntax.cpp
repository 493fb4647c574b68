#include <gtest/gtest.h>

#include "xrec/harness.hpp"
#include "xrec/source_syntax.hpp"
#include "xrec/source_text.hpp"

using namespace xrec;
using namespace xrec::source;

namespace {

ExprPtr p(const std::string& text) { return parse_source_or_throw(text, true); }

bool has_condition(const Diagnostics& ds, int c) {
    for (const auto& d : ds)
        if (d.condition == c) return true;
    return false;
}

}  // namespace

TEST(Parse, LetrecWithApplication) {
    auto r = parse_source("rec x =? \\y.y in x x");
    ASSERT_TRUE(r.ok()) << format_diagnostics(r.diagnostics);
    auto l = r.expr->as<Letrec>();
    ASSERT_NE(l, nullptr);
    ASSERT_EQ(l->binding.size(), 1u);
    EXPECT_EQ(l->binding[0].var, "x");
    EXPECT_FALSE(l->binding[0].size.is_known());
    EXPECT_TRUE(alpha_equal(l->binding[0].rhs, lam("y", var("y"))));
    EXPECT_TRUE(alpha_equal(l->body, app(var("x"), var("x"))));
}

TEST(Parse, ForwardReferenceToUnknownSize) {
    auto r = parse_source("rec x =? y, y =? {} in x");
    EXPECT_FALSE(r.ok());
    EXPECT_TRUE(has_condition(r.diagnostics, 3));
}

TEST(Parse, DuplicateField) {
    auto r = parse_source("{X = x, X = y}");
    EXPECT_FALSE(r.ok());
    EXPECT_TRUE(has_condition(r.diagnostics, 1));
}

TEST(Parse, DuplicateBinder) {
    auto r = parse_source("rec x =? {}, x =? {} in x");
    EXPECT_TRUE(has_condition(r.diagnostics, 2));
}

TEST(Parse, SyntaxErrorCarriesPosition) {
    auto r = parse_source("rec x =? in x");
    ASSERT_FALSE(r.ok());
    EXPECT_EQ(r.diagnostics[0].code, "syntax");
    EXPECT_NE(r.diagnostics[0].message.find("1:"), std::string::npos);
}

TEST(Parse, RecordFieldsMustBeVariables) {
    EXPECT_FALSE(parse_source("{X = \\y. y}").ok());
    EXPECT_FALSE(parse_source("{X = {}}").ok());
}

TEST(Parse, PrimsNeedTheFlag) {
    EXPECT_FALSE(parse_source("1 + 2").ok());
    EXPECT_TRUE(parse_source("1 + 2", true).ok());
    EXPECT_TRUE(parse_source("if true then 1 else 2", true).ok());
}

TEST(Parse, KnownSize) {
    auto e = p("rec x =[3] {A = x, B = x} in x");
    auto l = e->as<Letrec>();
    ASSERT_TRUE(l->binding[0].size.is_known());
    EXPECT_EQ(l->binding[0].size.words(), 3u);
}

TEST(Parse, ZeroWordSizeRejected) { EXPECT_FALSE(parse_source("rec x =[0] \\y. y in x").ok()); }

TEST(Parse, ApplicationIsLeftAssociative) {
    EXPECT_TRUE(alpha_equal(p("f x y"), app(app(var("f"), var("x")), var("y"))));
    EXPECT_TRUE(alpha_equal(p("f (x y)"), app(var("f"), app(var("x"), var("y")))));
}

TEST(Parse, CommentsIgnored) { EXPECT_TRUE(parse_source("# a comment\n\\x. x # trailing\n").ok()); }

TEST(FreeVars, Examples) {
    EXPECT_TRUE(free_vars(p("\\x. x")).empty());
    EXPECT_EQ(free_vars(p("rec x =? y in x")), NameSet({"y"}));
    EXPECT_EQ(free_vars(p("{X = x}")), NameSet({"x"}));
}

TEST(FreeVars, RecursiveScope) {
    EXPECT_TRUE(free_vars(p("rec x =[2] \\u. y u, y =[2] \\u. x u in x")).empty());
    EXPECT_EQ(free_vars(p("(\\x. x y) x")), NameSet({"x", "y"}));
}

TEST(Alpha, Examples) {
    EXPECT_TRUE(alpha_equal(p("\\x. x"), p("\\y. y")));
    EXPECT_FALSE(alpha_equal(p("{X = x}"), p("{Y = x}")));
    EXPECT_TRUE(alpha_equal(p("rec x =? \\u. u in x"), p("rec z =? \\u. u in z")));
}

TEST(Alpha, FreeVariablesAreRigid) {
    EXPECT_FALSE(alpha_equal(p("\\x. y"), p("\\x. z")));
    EXPECT_FALSE(alpha_equal(p("\\x. \\y. x"), p("\\x. \\y. y")));
}

TEST(Alpha, SizeIndicationsMatter) { EXPECT_FALSE(alpha_equal(p("rec x =? {} in x"), p("rec x =[1] {} in x"))); }

TEST(Substitute, Examples) {
    EXPECT_TRUE(alpha_equal(substitute({{"x", var("y")}}, p("x z")), p("y z")));
    EXPECT_TRUE(alpha_equal(substitute({{"x", var("y")}}, p("\\x. x")), p("\\x. x")));
    auto r = substitute({{"x", var("y")}}, p("\\y. x"));
    auto l = r->as<Lam>();
    ASSERT_NE(l, nullptr);
    EXPECT_NE(l->param, "y");
    EXPECT_TRUE(alpha_equal(r, lam("w", var("y"))));
}

TEST(Substitute, UnderLetrecAvoidsCapture) {
    auto r = substitute({{"x", var("y")}}, p("rec y =? {} in x y"));
    EXPECT_EQ(free_vars(r), NameSet({"y"}));
    EXPECT_TRUE(alpha_equal(r, p("rec w =? {} in y w")));
}

TEST(Wellformed, Examples) {
    EXPECT_TRUE(check_wellformed(p("rec z =? x x, x =[2] \\y.y in z")).empty());
    auto bad = parse_source("rec x =? y, y =? \\z.z in x");
    EXPECT_TRUE(has_condition(bad.diagnostics, 3));
    EXPECT_TRUE(check_wellformed(p("\\x. x")).empty());
}

TEST(Wellformed, SelfReferenceNeedsKnownSize) {
    EXPECT_TRUE(has_condition(parse_source("rec f =? \\x. f x in f").diagnostics, 3));
    EXPECT_TRUE(parse_source("rec f =[2] \\x. f x in f").ok());
}

TEST(Print, RoundTripsCorpusShapes) {
    for (const char* text : {"rec x =? \\y. y in x x", "rec z =? x x, x =[2] \\y. y in z",
                             "rec e =? {}, y =? {X = e}, z =[2] y in z", "(\\x. x.A) {A = y}",
                             "rec even =? \\x. (x = 0) or (odd (x - 1)), odd =[2] \\x. (x > 0) and (even (x - 1)) in even 56",
                             "if 1 > 2 then 3 + 4 - 5 else (\\x. x) 0", "f (rec a =? {} in a) (g.X)"}) {
        auto e = p(text);
        auto again = p(to_string(e));
        EXPECT_TRUE(alpha_equal(e, again)) << text << " printed as " << to_string(e);
    }
}

TEST(Print, RoundTripsGeneratedTerms) {
    harness::GenConfig cfg;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        cfg.seed = seed;
        auto e = harness::gen_expr(cfg);
        auto again = parse_source(to_string(e), true);
        ASSERT_TRUE(again.ok()) << to_string(e);
        EXPECT_TRUE(alpha_equal(e, again.expr)) << to_string(e);
    }
}

TEST(Properties, AlphaIsAnEquivalenceOnGeneratedTerms) {
    harness::GenConfig cfg;
    std::vector<ExprPtr> terms;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        cfg.seed = seed;
        terms.push_back(harness::gen_expr(cfg));
    }
    for (const auto& a : terms) {
        EXPECT_TRUE(alpha_equal(a, a));
        auto b = parse_source_or_throw(to_string(a));
        for (const auto& c : terms) {
            EXPECT_EQ(alpha_equal(a, c), alpha_equal(c, a));
            if (alpha_equal(a, b) && alpha_equal(b, c)) EXPECT_TRUE(alpha_equal(a, c));
        }
    }
}

TEST(Properties, SubstitutionFreeVariableBound) {
    harness::GenConfig cfg;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        cfg.seed = seed;
        auto e = harness::gen_expr(cfg);
        auto fv = free_vars(e);
        for (const Name& x : {Name("x0"), Name("y1"), Name("q")}) {
            auto v = app(var("a"), var("x0"));
            auto r = substitute({{x, v}}, e);
            NameSet allowed = fv;
            allowed.erase(x);
            for (const auto& y : free_vars(v)) allowed.insert(y);
            for (const auto& y : free_vars(r)) EXPECT_TRUE(allowed.contains(y)) << y << " in " << to_string(r);
        }
    }
}

TEST(Properties, ViolationsInjectedIntoGeneratedTermsAreRejected) {
    harness::GenConfig cfg;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        cfg.seed = seed;
        auto t = harness::gen_expr(cfg);
        auto dup_field = app(lam("a", record({{"X", "a"}, {"X", "a"}})), t);
        auto dup_binder = letrec({{"a", SizeIndication::unknown(), t}, {"a", SizeIndication::unknown(), t}}, var("a"));
        auto forward = letrec({{"a", SizeIndication::unknown(), var("b")}, {"b", SizeIndication::unknown(), t}}, var("a"));
        EXPECT_TRUE(has_condition(check_wellformed(dup_field), 1));
        EXPECT_TRUE(has_condition(check_wellformed(dup_binder), 2));
        EXPECT_TRUE(has_condition(check_wellformed(forward), 3));
        EXPECT_TRUE(check_wellformed(t).empty());
    }
}
