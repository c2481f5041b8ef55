#include "lawreason/schema.hpp"

#include <gtest/gtest.h>

#include <algorithm>

#include "test_util.hpp"

namespace {

using namespace lawreason;

TEST(ValidateTree, CleanTreePassesWithoutFindings) {
    const ReasoningTree t = testutil::small_valid_tree();
    const ValidationReport report = validate_tree(t, testutil::violation_case_text());
    EXPECT_TRUE(report.ok());
    EXPECT_TRUE(report.findings.empty()) << report.to_string();
}

TEST(ValidateTree, LoneUltimateFactumIsAValidTree) {
    ReasoningTree t;
    t.facta.push_back(Factum{"u1", FactumKind::Ultimate, "the root holds", std::nullopt});
    const ValidationReport report = validate_tree(t);
    EXPECT_TRUE(report.ok());
    EXPECT_TRUE(report.findings.empty()) << report.to_string();
}

TEST(ValidateTree, EachForcedViolationYieldsExactlyItsFinding) {
    for (const auto& fixture : testutil::violation_fixtures()) {
        const ValidationReport report =
            fixture.case_text ? validate_tree(fixture.tree, *fixture.case_text)
                              : validate_tree(fixture.tree);
        ASSERT_EQ(report.findings.size(), 1u)
            << fixture.name << ": " << report.to_string();
        EXPECT_EQ(report.findings[0].code, fixture.expected_code) << fixture.name;
        EXPECT_EQ(report.findings[0].severity, Severity::Error) << fixture.name;
        EXPECT_FALSE(report.ok()) << fixture.name;
    }
}

TEST(ValidateTree, DanglingReferenceSuppressesDownstreamFindings) {
    // The dangling id makes the later stages moot: a would-be cycle behind it
    // must not be reported.
    ReasoningTree t;
    t.facta.push_back(Factum{"f1", FactumKind::Interim, "loops", std::nullopt});
    t.facta.push_back(Factum{"u1", FactumKind::Ultimate, "root", std::nullopt});
    t.edges.push_back(FactEdge{"f1", "u1"});
    t.edges.push_back(FactEdge{"u1", "f1"});   // cycle
    t.edges.push_back(FactEdge{"f1", "zzz"});  // dangling parent
    const ValidationReport report = validate_tree(t);
    ASSERT_FALSE(report.ok());
    for (const auto& f : report.findings) EXPECT_NE(f.code, "cycle") << report.to_string();
    EXPECT_TRUE(std::any_of(report.findings.begin(), report.findings.end(),
                            [](const Finding& f) { return f.code == "dangling-edge-ref"; }));
}

TEST(ValidateTree, DuplicateIdsAcrossFactaAndEvidenceAreErrors) {
    ReasoningTree t;
    t.facta.push_back(Factum{"x1", FactumKind::Ultimate, "root", std::nullopt});
    t.evidence.push_back(EvidenceItem{"x1", "clashes with the factum", std::nullopt});
    const ValidationReport report = validate_tree(t);
    ASSERT_EQ(report.findings.size(), 1u) << report.to_string();
    EXPECT_EQ(report.findings[0].code, "duplicate-id");
}

TEST(ValidateTree, MissingUltimateReportedAlone) {
    ReasoningTree t;
    t.facta.push_back(Factum{"f1", FactumKind::Interim, "no root above me", std::nullopt});
    const ValidationReport report = validate_tree(t);
    ASSERT_EQ(report.findings.size(), 1u) << report.to_string();
    EXPECT_EQ(report.findings[0].code, "no-ultimate");
}

TEST(ValidateTree, EmptyTextAndBadSpanAreErrors) {
    ReasoningTree t = testutil::small_valid_tree();
    t.facta[0].text = "   ";
    const ValidationReport r1 = validate_tree(t);
    EXPECT_TRUE(std::any_of(r1.findings.begin(), r1.findings.end(),
                            [](const Finding& f) { return f.code == "empty-text"; }));

    ReasoningTree t2 = testutil::small_valid_tree();
    t2.evidence[0].span = Span{5, 5};  // start >= end
    const ValidationReport r2 = validate_tree(t2);
    EXPECT_TRUE(std::any_of(r2.findings.begin(), r2.findings.end(),
                            [](const Finding& f) { return f.code == "span-invalid"; }));
}

TEST(ValidateTree, InterimNeedsExactlyOneEdgeToTheRoot) {
    ReasoningTree t = testutil::small_valid_tree();
    t.edges.clear();
    const ValidationReport report = validate_tree(t);
    EXPECT_TRUE(std::any_of(report.findings.begin(), report.findings.end(),
                            [](const Finding& f) { return f.code == "edge-count"; }));
}

TEST(ValidateTree, UnlinkedEvidenceAndUnsupportedInterimAreWarnings) {
    ReasoningTree t = testutil::small_valid_tree();
    t.evidence.push_back(EvidenceItem{"v2", "nobody cites me", std::nullopt});
    t.facta.insert(t.facta.begin() + 1,
                   Factum{"f2", FactumKind::Interim, "nothing supports me", std::nullopt});
    t.edges.push_back(FactEdge{"f2", "u1"});
    const ValidationReport report = validate_tree(t);
    EXPECT_TRUE(report.ok()) << report.to_string();  // warnings only
    EXPECT_EQ(report.warning_count(), 2u) << report.to_string();
    EXPECT_TRUE(std::any_of(report.findings.begin(), report.findings.end(),
                            [](const Finding& f) { return f.code == "unlinked-evidence"; }));
    EXPECT_TRUE(std::any_of(report.findings.begin(), report.findings.end(),
                            [](const Finding& f) { return f.code == "unsupported-interim"; }));
}

TEST(ValidateTree, LinkToUltimateIsAnError) {
    ReasoningTree t = testutil::small_valid_tree();
    t.links.push_back(InferenceLink{"u1", "v1", {}});
    const ValidationReport report = validate_tree(t);
    EXPECT_TRUE(std::any_of(report.findings.begin(), report.findings.end(),
                            [](const Finding& f) { return f.code == "link-factum-kind"; }));
}

TEST(FindUltimate, SingleRootFoundAmbiguousIsNull) {
    const ReasoningTree t = testutil::small_valid_tree();
    const Factum* u = find_ultimate(t);
    ASSERT_NE(u, nullptr);
    EXPECT_EQ(u->id, "u1");

    ReasoningTree two;
    two.facta.push_back(Factum{"u1", FactumKind::Ultimate, "a", std::nullopt});
    two.facta.push_back(Factum{"u2", FactumKind::Ultimate, "b", std::nullopt});
    EXPECT_EQ(find_ultimate(two), nullptr);
    EXPECT_EQ(find_ultimate(ReasoningTree{}), nullptr);
}

TEST(Projections, TriplesAndQuadruples) {
    ReasoningTree t = testutil::small_valid_tree();
    t.evidence.push_back(EvidenceItem{"v2", "a second sentence", std::nullopt});
    t.links.push_back(InferenceLink{"f1", "v2", {}});

    const auto triples = to_triples(t);
    ASSERT_EQ(triples.size(), 2u);
    for (const auto& tr : triples) EXPECT_EQ(tr.relation, kSupportsRelation);

    const auto quads = to_quadruples(t);
    // One per (link, experience) with a no-experience entry for bare links:
    // v1 carries one experience, v2 none -> two quadruples.
    ASSERT_EQ(quads.size(), 2u);
    const bool has_experienced =
        std::any_of(quads.begin(), quads.end(),
                    [](const Quadruple& q) { return q.experience.has_value(); });
    const bool has_bare = std::any_of(quads.begin(), quads.end(), [](const Quadruple& q) {
        return !q.experience.has_value();
    });
    EXPECT_TRUE(has_experienced);
    EXPECT_TRUE(has_bare);
}

TEST(Projections, QuadrupleOrderIsStableUnderLinkPermutation) {
    ReasoningTree t = testutil::small_valid_tree();
    t.evidence.push_back(EvidenceItem{"v2", "a second sentence", std::nullopt});
    t.links.push_back(InferenceLink{"f1", "v2", {"another generalization"}});
    ReasoningTree shuffled = t;
    std::swap(shuffled.links[0], shuffled.links[1]);
    EXPECT_EQ(to_quadruples(t), to_quadruples(shuffled));
    EXPECT_EQ(to_triples(t), to_triples(shuffled));
}

TEST(BuildTree, ValidPartsAssembleInvalidThrow) {
    const ReasoningTree ok = build_tree(
        {Factum{"f1", FactumKind::Interim, "part", std::nullopt},
         Factum{"u1", FactumKind::Ultimate, "whole", std::nullopt}},
        {EvidenceItem{"v1", "seen", std::nullopt}}, {InferenceLink{"f1", "v1", {}}},
        {FactEdge{"f1", "u1"}});
    EXPECT_EQ(ok.facta.size(), 2u);

    EXPECT_THROW(build_tree({Factum{"f1", FactumKind::Interim, "orphan", std::nullopt}}, {}, {},
                            {}),
                 InvalidTree);
}

TEST(BuildTree, InvalidTreeCarriesItsReport) {
    try {
        build_tree({Factum{"f1", FactumKind::Interim, "orphan", std::nullopt}}, {}, {}, {});
        FAIL() << "expected InvalidTree";
    } catch (const InvalidTree& e) {
        EXPECT_FALSE(e.report().ok());
        EXPECT_NE(std::string(e.what()).find("no-ultimate"), std::string::npos);
    }
}

}  // namespace
