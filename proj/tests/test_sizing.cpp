#include <gtest/gtest.h>

#include "xrec/harness.hpp"
#include "xrec/sizing.hpp"
#include "xrec/source_text.hpp"
#include "xrec/target_text.hpp"

using namespace xrec;

namespace {

source::ExprPtr p(const std::string& text) { return source::parse_source_or_throw(text, true); }

bool has_code(const Diagnostics& ds, const std::string& code) {
    for (const auto& d : ds)
        if (d.code == code) return true;
    return false;
}

}  // namespace

TEST(SourceValues, Examples) {
    EXPECT_EQ(size_source_value(*p("\\y. y")), 2u);
    EXPECT_EQ(size_source_value(*p("{X = x, Y = y}")), 3u);
    EXPECT_EQ(size_source_value(*p("{}")), 1u);
    EXPECT_FALSE(size_source_value(*p("x")));
    EXPECT_FALSE(size_source_value(*p("7")));
    EXPECT_THROW(size_source_value(*p("f x")), std::invalid_argument);
}

TEST(SourceValues, CustomModel) {
    SizeModel m{5, 2};
    EXPECT_EQ(size_source_value(*p("\\y. y"), m), 5u);
    EXPECT_EQ(size_source_value(*p("{X = x}"), m), 3u);
}

TEST(StoredValues, Examples) {
    EXPECT_EQ(size_stored_value(target::AllocBlock{7}), 7u);
    EXPECT_EQ(size_stored_value(target::RecordBlock{{{"X", target::Value{std::string("#0")}}}}), 2u);
    auto c = target::parse_configuration("heap { #0 = \\x. x; } expr { #0 }");
    EXPECT_EQ(size_stored_value(*c.heap.find("#0")), 2u);
}

TEST(SourceValues, InvariantUnderSubstitution) {
    harness::GenConfig cfg;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        cfg.seed = seed;
        harness::Generator g(cfg);
        auto v = g.value();
        for (const auto& x : source::free_vars(v)) {
            auto r = source::substitute({{x, source::var("fresh")}}, v);
            EXPECT_EQ(size_source_value(*r), size_source_value(*v)) << source::to_string(v);
        }
    }
}

TEST(Infer, AnnotatesForwardReferencedManifestValues) {
    using namespace source;
    // the unannotated form does not parse, so build it directly
    auto e = letrec({{"even", SizeIndication::unknown(), p("\\x. odd x")}, {"odd", SizeIndication::unknown(), p("\\x. even x")}},
                    var("even"));
    auto r = infer_size_annotations(e);
    ASSERT_TRUE(r.diagnostics.empty());
    auto l = r.expr->as<source::Letrec>();
    EXPECT_FALSE(l->binding[0].size.is_known());
    ASSERT_TRUE(l->binding[1].size.is_known());
    EXPECT_EQ(l->binding[1].size.words(), 2u);
    EXPECT_TRUE(source::check_wellformed(*r.expr).empty());
}

TEST(Infer, ReportsUnsizableTargets) {
    using namespace source;
    Binding b{{"x", SizeIndication::unknown(), app(var("y"), var("y"))}, {"y", SizeIndication::unknown(), nat(5)}};
    auto r = infer_size_annotations(b);
    EXPECT_TRUE(has_code(r.diagnostics, "UnsizableForwardTarget"));
    EXPECT_FALSE(r.binding[1].size.is_known());
}

TEST(Infer, LeavesOtherBindingsAlone) {
    auto e = p("rec a =? {}, b =? \\u. a, c =[4] b in c");
    auto r = infer_size_annotations(e);
    EXPECT_TRUE(r.diagnostics.empty());
    EXPECT_TRUE(source::alpha_equal(r.expr, e));
}

TEST(Consistency, Examples) {
    EXPECT_TRUE(has_code(check_annotation_consistency(*p("rec f =[5] \\x. x in f")), "SizeAnnotationMismatch"));
    EXPECT_TRUE(check_annotation_consistency(*p("rec f =[2] \\x. x in f")).empty());
    EXPECT_TRUE(check_annotation_consistency(*p("rec g =? \\x. x, z =? {}, f =[4] (g z) in f")).empty());
    EXPECT_TRUE(has_code(check_annotation_consistency(*p("rec n =[1] 3 in n")), "SizeAnnotationMismatch"));
}

TEST(Model, Parse) {
    auto m = SizeModel::parse("# sizes\nfunction_size = 3\nrecord_header=2 # trailing\n\n");
    EXPECT_EQ(m.function_size, 3u);
    EXPECT_EQ(m.record_header, 2u);
    EXPECT_EQ(m.record_size(2), 4u);
    EXPECT_THROW(SizeModel::parse("function_size = 0"), std::invalid_argument);
    EXPECT_THROW(SizeModel::parse("record_header = 0"), std::invalid_argument);
    EXPECT_THROW(SizeModel::parse("colour = 3"), std::invalid_argument);
    EXPECT_THROW(SizeModel::parse("function_size = two"), std::invalid_argument);
    EXPECT_THROW(SizeModel::parse("function_size"), std::invalid_argument);
    EXPECT_THROW(SizeModel::load("/nonexistent/sizes.conf"), std::invalid_argument);
}
