#include "lawreason/corpus.hpp"

#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "test_util.hpp"

namespace {

using namespace lawreason;
using namespace lawreason::corpus;
using nlohmann::json;

TEST(TreeJson, RoundTripPreservesEverything) {
    const ReasoningTree t = testutil::canned_expected_tree();
    const ReasoningTree back = tree_from_json(tree_to_json(t), "test");
    EXPECT_EQ(back, t);
}

TEST(TreeJson, MissingFieldsAreFormatErrors) {
    EXPECT_THROW(tree_from_json(json::array(), "test"), FormatError);
    EXPECT_THROW(tree_from_json(json{{"facta", json::array()}}, "test"), FormatError);
    json j = tree_to_json(testutil::canned_expected_tree());
    j["facta"][0].erase("kind");
    EXPECT_THROW(tree_from_json(j, "test"), FormatError);
}

TEST(SplitIo, SampleSplitLoadsCleanly) {
    std::vector<std::string> warnings;
    const DatasetSplit split = load_split(testutil::sample_split_path(), &warnings);
    EXPECT_EQ(split.cases.size(), 3u);
    EXPECT_TRUE(warnings.empty());
    for (const auto& c : split.cases) {
        EXPECT_FALSE(c.description.empty());
        EXPECT_NE(find_ultimate(c.gold), nullptr);
    }
}

TEST(SplitIo, SaveLoadRoundTripIsStructurallyEqual) {
    testutil::TempDir tmp;
    const DatasetSplit split = load_split(testutil::sample_split_path());
    const auto path = tmp.file("roundtrip_test.jsonl");
    save_split(split, path);
    const DatasetSplit back = load_split(path);
    EXPECT_EQ(back, split);
}

TEST(SplitIo, SplitNameComesFromTheFileStem) {
    testutil::TempDir tmp;
    const DatasetSplit split = load_split(testutil::sample_split_path());
    for (const auto& [stem, expected] :
         std::vector<std::pair<std::string, SplitName>>{{"my_train.jsonl", SplitName::Train},
                                                        {"val_cases.jsonl", SplitName::Val},
                                                        {"whatever.jsonl", SplitName::Test}}) {
        const auto path = tmp.file(stem);
        save_split(split, path);
        EXPECT_EQ(load_split(path).name, expected) << stem;
    }
}

TEST(SplitIo, MalformedLineNamesTheLineAndSniffedCase) {
    testutil::TempDir tmp;
    const auto path = tmp.file("bad.jsonl");
    testutil::write_file(path, "{\"case_id\": \"case-007\", \"broken\n");
    try {
        load_split(path);
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("bad.jsonl:1"), std::string::npos) << what;
        EXPECT_NE(what.find("case-007"), std::string::npos) << what;
    }
}

TEST(SplitIo, DuplicateCaseIdRejected) {
    testutil::TempDir tmp;
    const auto path = tmp.file("dup.jsonl");
    const std::string line = case_to_json(testutil::canned_case_record()).dump();
    testutil::write_file(path, line + "\n" + line + "\n");
    EXPECT_THROW(load_split(path), FormatError);
}

TEST(SplitIo, InvalidGoldTreeThrowsInvalidTree) {
    testutil::TempDir tmp;
    CaseRecord rec = testutil::canned_case_record();
    rec.gold.facta[2].kind = FactumKind::Interim;  // no ultimate left
    const auto path = tmp.file("invalid.jsonl");
    testutil::write_file(path, case_to_json(rec).dump() + "\n");
    EXPECT_THROW(load_split(path), InvalidTree);
}

TEST(SplitIo, GoldWarningsAreCollectedNotFatal) {
    testutil::TempDir tmp;
    CaseRecord rec = testutil::canned_case_record();
    // An evidence item nothing links to is a warning, not an error.
    rec.gold.evidence.push_back(EvidenceItem{"v3", "An unused statement.", std::nullopt});
    const auto path = tmp.file("warned.jsonl");
    testutil::write_file(path, case_to_json(rec).dump() + "\n");
    std::vector<std::string> warnings;
    const DatasetSplit split = load_split(path, &warnings);
    EXPECT_EQ(split.cases.size(), 1u);
    ASSERT_FALSE(warnings.empty());
    EXPECT_NE(warnings[0].find("[unlinked-evidence]"), std::string::npos) << warnings[0];
    EXPECT_NE(warnings[0].find(rec.case_id), std::string::npos);
}

TEST(PredictionIo, RoundTripKeepsProvenance) {
    testutil::TempDir tmp;
    PredictionRecord rec;
    rec.case_id = "case-alice";
    rec.predicted = testutil::canned_expected_tree();
    rec.provenance = json{{"method", "agent"}, {"steps", 6}};
    const auto path = tmp.file("preds.jsonl");
    save_predictions({rec}, path);
    const auto back = load_predictions(path);
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(back[0], rec);
}

TEST(PredictionIo, UnknownTopLevelKeysFoldIntoProvenance) {
    testutil::TempDir tmp;
    json j = prediction_to_json(PredictionRecord{"c1", testutil::canned_expected_tree(),
                                                 json{{"method", "baseline"}}});
    j["written_by"] = "some other tool";
    const auto path = tmp.file("folded.jsonl");
    testutil::write_file(path, j.dump() + "\n");
    const auto back = load_predictions(path);
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(back[0].provenance.at("written_by"), "some other tool");
    EXPECT_EQ(back[0].provenance.at("method"), "baseline");
}

TEST(CountTokens, WordsForAsciiCharactersForCjk) {
    EXPECT_EQ(count_tokens("three plain words"), 3u);
    EXPECT_EQ(count_tokens("他偷了车"), 4u);
    EXPECT_EQ(count_tokens(""), 0u);
}

// Shared property check for fragmenting: spans partition the description,
// fragments are exact slices, and every fragment respects the budget.
void check_fragment_properties(const std::string& description, std::size_t max_tokens) {
    const auto fragments = fragment_case(description, max_tokens);
    ASSERT_FALSE(fragments.empty());
    EXPECT_EQ(fragments.front().span.start, 0u);
    for (std::size_t i = 0; i < fragments.size(); ++i) {
        const auto& f = fragments[i];
        ASSERT_LE(f.span.start, f.span.end);
        if (i > 0) EXPECT_EQ(f.span.start, fragments[i - 1].span.end);
        EXPECT_EQ(f.text, text::substr_codepoints(description, f.span.start, f.span.end));
        EXPECT_LE(count_tokens(f.text, rouge::detect_mode(description)), max_tokens)
            << "budget " << max_tokens << " fragment \"" << f.text << "\"";
    }
    EXPECT_EQ(fragments.back().span.end, text::length_codepoints(description));
}

TEST(FragmentCase, EmptyDescriptionYieldsOneEmptyFragment) {
    const auto fragments = fragment_case("", 1500);
    ASSERT_EQ(fragments.size(), 1u);
    EXPECT_EQ(fragments[0].span, (Span{0, 0}));
    EXPECT_EQ(fragments[0].text, "");
}

TEST(FragmentCase, WholeTextFitsInOneFragmentUnderTheDefaultBudget) {
    const auto fragments = fragment_case(testutil::canned_case().description, 1500);
    ASSERT_EQ(fragments.size(), 1u);
    EXPECT_EQ(fragments[0].text, testutil::canned_case().description);
}

TEST(FragmentCase, PropertiesHoldAcrossBudgetsAndScripts) {
    std::vector<std::string> descriptions;
    const auto split = load_split(testutil::sample_split_path());
    for (const auto& c : split.cases) descriptions.push_back(c.description);
    descriptions.push_back(testutil::canned_case().description);
    // A long synthetic English text of many short sentences.
    std::string longer;
    for (int i = 0; i < 60; ++i) longer += "Sentence number " + std::to_string(i) + " here. ";
    descriptions.push_back(longer);

    for (const auto& d : descriptions)
        for (std::size_t budget : {3u, 7u, 40u, 1500u}) check_fragment_properties(d, budget);
}

TEST(FragmentCase, OversizedSentenceIsHardCutAtTokenStarts) {
    // One long sentence without terminators, budget of 4 words.
    std::string s;
    for (int i = 0; i < 11; ++i) s += (i ? " w" : "w") + std::to_string(i);
    check_fragment_properties(s, 4);
    const auto fragments = fragment_case(s, 4);
    EXPECT_EQ(fragments.size(), 3u);
    EXPECT_EQ(count_tokens(fragments[0].text), 4u);
    // Word mode never splits inside a word.
    for (const auto& f : fragments) EXPECT_NE(f.text.front(), ' ');
}

TEST(FragmentCase, CjkHardCutRespectsTheCharacterBudget) {
    const std::string s = "他偷了车然后逃走了没有人看见";  // 14 chars, no terminator
    check_fragment_properties(s, 5);
    const auto fragments = fragment_case(s, 5);
    EXPECT_EQ(fragments.size(), 3u);
}

TEST(ExportInstructions, EachTaskSerializesOnlyInSpanElements) {
    // A case with spans on interims and evidence so all four tasks fire.
    const std::string desc = "Alice was seen. Bob confessed.";
    ReasoningTree g;
    g.facta.push_back(Factum{"f1", FactumKind::Interim, "Alice was seen", Span{0, 15}});
    g.facta.push_back(Factum{"u1", FactumKind::Ultimate, "They did it together", std::nullopt});
    g.evidence.push_back(EvidenceItem{"v1", "Alice was seen.", Span{0, 15}});
    g.evidence.push_back(EvidenceItem{"v2", "Bob confessed.", Span{16, 30}});
    g.links.push_back(InferenceLink{"f1", "v1", {"witnesses place people at scenes"}});
    g.links.push_back(InferenceLink{"f1", "v2", {}});
    g.edges.push_back(FactEdge{"f1", "u1"});

    DatasetSplit split;
    split.cases.push_back(CaseRecord{"case-x", desc, g});

    const auto facts = export_instructions(split, TaskKind::Facts, 1500);
    ASSERT_EQ(facts.size(), 1u);
    EXPECT_EQ(facts[0].input, desc);
    EXPECT_EQ(json::parse(facts[0].output).at("interim_probanda").size(), 1u);
    EXPECT_FALSE(facts[0].instruction.empty());

    const auto evidence = export_instructions(split, TaskKind::Evidence, 1500);
    ASSERT_EQ(evidence.size(), 1u);
    EXPECT_EQ(json::parse(evidence[0].output).at("evidence").size(), 2u);

    const auto links = export_instructions(split, TaskKind::Links, 1500);
    ASSERT_EQ(links.size(), 1u);
    EXPECT_EQ(json::parse(links[0].output).at("links").size(), 2u);

    // Only the link with an experience contributes to the experience task.
    const auto experience = export_instructions(split, TaskKind::Experience, 1500);
    ASSERT_EQ(experience.size(), 1u);
    const json exps = json::parse(experience[0].output).at("experiences");
    ASSERT_EQ(exps.size(), 1u);
    EXPECT_EQ(exps[0].at("experience"), "witnesses place people at scenes");

    // With a budget that splits the two sentences apart, the second fragment
    // has no in-span interim -> only one facts record, two evidence records.
    const auto split_facts = export_instructions(split, TaskKind::Facts, 3);
    EXPECT_EQ(split_facts.size(), 1u);
    const auto split_evidence = export_instructions(split, TaskKind::Evidence, 3);
    EXPECT_EQ(split_evidence.size(), 2u);
}

TEST(ExportInstructions, ElementsWithoutSpansNeverExport) {
    const DatasetSplit split = load_split(testutil::sample_split_path());
    // Sample interims carry no spans, so facts/links/experience are empty and
    // evidence (which is spanned) is not.
    EXPECT_TRUE(export_instructions(split, TaskKind::Facts, 1500).empty());
    EXPECT_TRUE(export_instructions(split, TaskKind::Links, 1500).empty());
    EXPECT_TRUE(export_instructions(split, TaskKind::Experience, 1500).empty());
    EXPECT_FALSE(export_instructions(split, TaskKind::Evidence, 1500).empty());
}

TEST(TaskKinds, NamesRoundTrip) {
    for (TaskKind t : {TaskKind::Facts, TaskKind::Evidence, TaskKind::Links,
                       TaskKind::Experience})
        EXPECT_EQ(task_kind_from_name(task_kind_name(t)), t);
    EXPECT_FALSE(task_kind_from_name("everything").has_value());
}

}  // namespace
