#include "lawreason/harness.hpp"

#include <gtest/gtest.h>

#include <memory>
#include <string>
#include <vector>

#include "lawreason/corpus.hpp"
#include "lawreason/llm.hpp"
#include "lawreason/vectorstore.hpp"
#include "test_util.hpp"

namespace {

using namespace lawreason;
using namespace lawreason::harness;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Backend specification
// ---------------------------------------------------------------------------

TEST(BackendSpecJson, ScriptedRoundTrip) {
    BackendSpec spec;
    spec.kind = "scripted";
    spec.responses = {"first", "second"};
    spec.model = "canned-model";
    const BackendSpec back = backend_spec_from_json(backend_spec_to_json(spec));
    EXPECT_EQ(back.kind, "scripted");
    EXPECT_EQ(back.responses, spec.responses);
    EXPECT_EQ(back.model, "canned-model");
}

TEST(BackendSpecJson, ReplayWithUpstreamRoundTrip) {
    BackendSpec upstream;
    upstream.kind = "scripted";
    upstream.responses = {"pong"};
    upstream.model = "up";
    BackendSpec spec;
    spec.kind = "replay";
    spec.cache_path = "/tmp/cache.jsonl";
    spec.strict = false;
    spec.upstream = std::make_shared<BackendSpec>(upstream);
    const BackendSpec back = backend_spec_from_json(backend_spec_to_json(spec));
    EXPECT_EQ(back.kind, "replay");
    EXPECT_EQ(back.cache_path, "/tmp/cache.jsonl");
    EXPECT_FALSE(back.strict);
    ASSERT_TRUE(back.upstream);
    EXPECT_EQ(back.upstream->kind, "scripted");
    EXPECT_EQ(back.upstream->model, "up");
}

TEST(BackendSpecJson, RemoteRoundTrip) {
    BackendSpec spec;
    spec.kind = "remote";
    spec.remote.endpoint = "https://llm.example.test/v1/chat/completions";
    spec.remote.model = "m-remote";
    spec.remote.credential_env = "LAWREASON_TEST_KEY";
    spec.remote.max_attempts = 5;
    spec.remote.initial_backoff = std::chrono::milliseconds(10);
    const BackendSpec back = backend_spec_from_json(backend_spec_to_json(spec));
    EXPECT_EQ(back.remote.endpoint, spec.remote.endpoint);
    EXPECT_EQ(back.remote.model, "m-remote");
    EXPECT_EQ(back.remote.credential_env, "LAWREASON_TEST_KEY");
    EXPECT_EQ(back.remote.max_attempts, 5u);
    EXPECT_EQ(back.remote.initial_backoff.count(), 10);
}

TEST(BackendSpecJson, BadSpecsAreFormatErrors) {
    try {
        backend_spec_from_json(json{{"kind", "magic"}});
        FAIL() << "expected FormatError";
    } catch (const corpus::FormatError& e) {
        EXPECT_STREQ(e.what(),
                     "unknown backend kind \"magic\" (expected scripted, replay, or remote)");
    }
    try {
        backend_spec_from_json(json{{"kind", "scripted"}, {"cache_path", "x"}});
        FAIL() << "expected FormatError";
    } catch (const corpus::FormatError& e) {
        EXPECT_STREQ(e.what(), "backend (scripted): unknown key \"cache_path\"");
    }
    EXPECT_THROW(backend_spec_from_json(json{{"kind", "replay"}}), corpus::FormatError);
    try {
        backend_spec_from_json(json{{"kind", "remote"},
                                    {"endpoint", "https://x"},
                                    {"model", "m"}});
        FAIL() << "expected FormatError";
    } catch (const corpus::FormatError& e) {
        EXPECT_STREQ(e.what(), "remote backend needs \"credential_env\"");
    }
    EXPECT_THROW(backend_spec_from_json(json::array()), corpus::FormatError);
}

TEST(MakeBackend, ScriptedServesItsQueue) {
    BackendSpec spec;
    spec.responses = {"alpha"};
    spec.model = "canned-model";
    const auto backend = make_backend(spec);
    EXPECT_EQ(backend->model_id(), "canned-model");
    llm::ChatRequest request;
    request.messages.push_back(llm::Message{llm::Role::User, "ping"});
    EXPECT_EQ(backend->complete(request), "alpha");
}

TEST(MakeBackend, ReplayRecordsThenServesOffline) {
    testutil::TempDir tmp;
    BackendSpec spec;
    spec.kind = "replay";
    spec.cache_path = tmp.file("cache.jsonl").string();
    spec.strict = false;
    spec.upstream = std::make_shared<BackendSpec>();
    spec.upstream->responses = {"recorded answer"};
    spec.upstream->model = "up";

    llm::ChatRequest request;
    request.messages.push_back(llm::Message{llm::Role::User, "the question"});
    EXPECT_EQ(make_backend(spec)->complete(request), "recorded answer");

    // A strict replay over the same cache (upstream present only for the
    // model id, with nothing left to serve) answers without any live call.
    spec.strict = true;
    spec.upstream->responses = {};
    EXPECT_EQ(make_backend(spec)->complete(request), "recorded answer");
}

TEST(MakeBackend, RemoteConstructsFromTheSpec) {
    BackendSpec spec;
    spec.kind = "remote";
    spec.remote.endpoint = "https://llm.example.test/v1/chat/completions";
    spec.remote.model = "m-remote";
    spec.remote.credential_env = "LAWREASON_TEST_KEY";
    EXPECT_EQ(make_backend(spec)->model_id(), "m-remote");
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

RunConfig custom_config() {
    RunConfig c;
    c.backend.responses = {"one"};
    c.policy.max_steps = 7;
    c.policy.knowledge_calls_before_reflection = 1;
    c.policy.parse_retries = 0;
    c.policy.disabled_tools = {"emotion_check"};
    c.tokenizer = rouge::Mode::Word;
    c.metric.matcher.kind = metrics::MatcherSpec::Kind::Exact;
    c.metric.matcher.tau = 0.7;
    c.metric.comprehensive_variant = rouge::Variant::Rouge2;
    c.metric.symmetric_facts = true;
    c.few_shot = 0;
    c.fragment_max_tokens = 64;
    c.workers = 4;
    c.knowledge_path = "extra.json";
    c.prompt_dir = "prompts";
    c.params.temperature = 0.1;
    c.params.max_tokens = 256;
    return c;
}

TEST(RunConfigJson, DefaultsRoundTrip) {
    const RunConfig defaults;
    const json j = run_config_to_json(defaults);
    for (const char* key : {"backend", "policy", "tokenizer", "metrics", "few_shot",
                            "fragment_max_tokens", "workers", "knowledge_path",
                            "vector_store_path", "prompt_dir", "decoding"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j.at("tokenizer"), "auto");
    EXPECT_EQ(j.at("few_shot"), 3u);
    EXPECT_EQ(j.at("decoding").at("temperature"), 0.6);
    EXPECT_EQ(j.at("decoding").at("max_tokens"), 8096u);
    const RunConfig back = run_config_from_json(j);
    EXPECT_EQ(run_config_to_json(back), j);
    EXPECT_EQ(config_digest(back), config_digest(defaults));
}

TEST(RunConfigJson, CustomRoundTripKeepsTheDigest) {
    const RunConfig c = custom_config();
    const RunConfig back = run_config_from_json(run_config_to_json(c));
    EXPECT_EQ(run_config_to_json(back), run_config_to_json(c));
    EXPECT_EQ(config_digest(back), config_digest(c));
    EXPECT_EQ(config_digest(c).size(), 64u);
    RunConfig other = c;
    other.few_shot = 3;
    EXPECT_NE(config_digest(other), config_digest(c));
}

TEST(RunConfigJson, ValidationFailuresAreFormatErrors) {
    {
        RunConfig c;
        c.few_shot = 2;
        try {
            c.validate();
            FAIL() << "expected FormatError";
        } catch (const corpus::FormatError& e) {
            EXPECT_STREQ(e.what(), "few_shot must be 0 or 3");
        }
    }
    {
        RunConfig c;
        c.fragment_max_tokens = 0;
        EXPECT_THROW(c.validate(), corpus::FormatError);
    }
    {
        RunConfig c;
        c.workers = 0;
        EXPECT_THROW(c.validate(), corpus::FormatError);
    }
    {
        RunConfig c;
        c.policy.knowledge_calls_before_reflection = 5;
        try {
            c.validate();
            FAIL() << "expected FormatError";
        } catch (const corpus::FormatError& e) {
            EXPECT_STREQ(e.what(), "policy: knowledge_calls_before_reflection must be 1 or 2");
        }
    }
}

TEST(RunConfigJson, UnknownKeysAndValuesAreRejected) {
    try {
        run_config_from_json(json{{"surprise", 1}});
        FAIL() << "expected FormatError";
    } catch (const corpus::FormatError& e) {
        EXPECT_STREQ(e.what(), "run config: unknown key \"surprise\"");
    }
    EXPECT_THROW(run_config_from_json(json{{"policy", json{{"steps", 3}}}}),
                 corpus::FormatError);
    try {
        run_config_from_json(json{{"tokenizer", "syllable"}});
        FAIL() << "expected FormatError";
    } catch (const corpus::FormatError& e) {
        EXPECT_STREQ(e.what(), "tokenizer must be auto, character, or word");
    }
    EXPECT_THROW(run_config_from_json(json{{"decoding", json{{"beam", 4}}}}),
                 corpus::FormatError);
    EXPECT_THROW(run_config_from_json(json::array()), corpus::FormatError);
    // An empty object is a complete default configuration.
    EXPECT_EQ(config_digest(run_config_from_json(json::object())),
              config_digest(RunConfig{}));
}

TEST(RunConfigJson, PromptDirOverridesTemplates) {
    testutil::TempDir tmp;
    testutil::write_file(tmp.file("thought.txt"), "OVERRIDE {Goals} | {Tools}");
    RunConfig c;
    c.prompt_dir = tmp.path().string();
    const prompts::PromptLibrary library = prompt_library_for(c);
    EXPECT_EQ(library.render("thought", {{"Goals", "g"}, {"Tools", "t"}}), "OVERRIDE g | t");
}

// ---------------------------------------------------------------------------
// Tree renderings
// ---------------------------------------------------------------------------

TEST(RenderTree, TextOutlineIsExact) {
    const testutil::CannedCase c = testutil::canned_case();
    const std::string expected = "ultimate u1: " + c.ultimate + "\n" +        //
                                 "  interim f1: " + c.interim1 + "\n" +      //
                                 "    evidence v1: " + c.evidence1 + "\n" +  //
                                 "      experience: " + c.experience1 + "\n" +
                                 "  interim f2: " + c.interim2 + "\n" +      //
                                 "    evidence v2: " + c.evidence2 + "\n" +  //
                                 "      (no experience)\n";
    EXPECT_EQ(render_tree_text(testutil::canned_expected_tree()), expected);
}

TEST(RenderTree, UnlinkedEvidenceIsListedLast) {
    ReasoningTree tree = testutil::canned_expected_tree();
    tree.evidence.push_back(EvidenceItem{"v3", "Nobody else was there.", std::nullopt});
    const std::string text = render_tree_text(tree);
    const std::string tail = "  unlinked evidence:\n    evidence v3: Nobody else was there.\n";
    ASSERT_GE(text.size(), tail.size());
    EXPECT_EQ(text.substr(text.size() - tail.size()), tail);
}

TEST(RenderTree, InvalidTreesAreRejected) {
    ReasoningTree tree = testutil::canned_expected_tree();
    tree.facta[2].kind = FactumKind::Interim;  // no root left
    EXPECT_THROW(render_tree_text(tree), InvalidTree);
    EXPECT_THROW(render_tree_html("case-x", tree), InvalidTree);
}

TEST(RenderTree, HtmlIsEscapedAndSelfContained) {
    ReasoningTree tree = testutil::canned_expected_tree();
    tree.facta[0].text = "Alice <b>took</b> & fled";
    const std::string html = render_tree_html("case <&>", tree);
    EXPECT_NE(html.find("<title>case &lt;&amp;&gt;</title>"), std::string::npos);
    EXPECT_NE(html.find("<h1>case &lt;&amp;&gt;</h1>"), std::string::npos);
    EXPECT_NE(html.find("Alice &lt;b&gt;took&lt;/b&gt; &amp; fled"), std::string::npos);
    EXPECT_NE(html.find("<li class=\"interim\">f1: "), std::string::npos);
    EXPECT_EQ(html.find("<script"), std::string::npos);
    EXPECT_EQ(html.substr(html.size() - 8), "</html>\n");
}

// ---------------------------------------------------------------------------
// Few-shot exemplars
// ---------------------------------------------------------------------------

corpus::DatasetSplit exemplar_split(const std::vector<std::string>& ids) {
    corpus::DatasetSplit split;
    split.name = corpus::SplitName::Train;
    for (const auto& id : ids) {
        corpus::CaseRecord rec = testutil::canned_case_record();
        rec.case_id = id;
        rec.description = "Case body " + id;
        split.cases.push_back(std::move(rec));
    }
    return split;
}

TEST(FewShot, MissingTrainOrZeroCountGivesNoExamples) {
    const corpus::DatasetSplit train = exemplar_split({"a"});
    EXPECT_EQ(harness::detail::few_shot_block(nullptr, 3, "facts"), "(no examples)");
    EXPECT_EQ(harness::detail::few_shot_block(&train, 0, "facts"), "(no examples)");
}

TEST(FewShot, TakesTheLexicographicallyLowestCaseIds) {
    const corpus::DatasetSplit train = exemplar_split({"d", "b", "a", "c"});
    const std::string block = harness::detail::few_shot_block(&train, 3, "facts");
    const auto pos_a = block.find("Case body a");
    const auto pos_b = block.find("Case body b");
    const auto pos_c = block.find("Case body c");
    ASSERT_NE(pos_a, std::string::npos);
    ASSERT_NE(pos_b, std::string::npos);
    ASSERT_NE(pos_c, std::string::npos);
    EXPECT_LT(pos_a, pos_b);
    EXPECT_LT(pos_b, pos_c);
    EXPECT_EQ(block.find("Case body d"), std::string::npos);
    EXPECT_EQ(block.rfind("Examples:\n", 0), 0u);
}

TEST(FewShot, SubTaskOutputsMatchTheirContracts) {
    const testutil::CannedCase c = testutil::canned_case();
    const corpus::DatasetSplit train = exemplar_split({"a"});
    const std::string facts = harness::detail::few_shot_block(&train, 3, "facts");
    EXPECT_NE(facts.find(c.interim1), std::string::npos);
    EXPECT_NE(facts.find("\"ultimate_probandum\":\"" + c.ultimate + "\""), std::string::npos);
    const std::string evidence = harness::detail::few_shot_block(&train, 3, "evidence");
    EXPECT_NE(evidence.find(c.evidence1), std::string::npos);
    EXPECT_NE(evidence.find("\"factum_index\":1"), std::string::npos);
    EXPECT_NE(evidence.find("\"evidence_index\":2"), std::string::npos);
    const std::string experience = harness::detail::few_shot_block(&train, 3, "experience");
    EXPECT_NE(experience.find("\"link_index\":1"), std::string::npos);
    EXPECT_NE(experience.find(c.experience1), std::string::npos);
}

// ---------------------------------------------------------------------------
// Baseline runner
// ---------------------------------------------------------------------------

corpus::DatasetSplit canned_split() {
    corpus::DatasetSplit split;
    split.name = corpus::SplitName::Test;
    split.cases.push_back(testutil::canned_case_record());
    return split;
}

TEST(RunBaseline, AssemblesTheExpectedTree) {
    const RunConfig config;
    llm::ScriptedBackend backend(testutil::canned_baseline_script());
    const BaselineRunResult result = run_baseline(config, canned_split(), backend);
    EXPECT_TRUE(result.failures.empty());
    ASSERT_EQ(result.predictions.size(), 1u);
    EXPECT_EQ(result.predictions[0].case_id, "case-alice");
    EXPECT_EQ(result.predictions[0].predicted, testutil::canned_expected_tree());
    EXPECT_EQ(result.predictions[0].provenance.at("method"), "baseline");
    EXPECT_TRUE(result.predictions[0].provenance.at("notes").empty());
    EXPECT_EQ(backend.calls(), 3u);
}

TEST(RunBaseline, RetriesAGarbageReplyWithFeedback) {
    auto script = testutil::canned_baseline_script();
    script.insert(script.begin(), "no json in sight");
    llm::ScriptedBackend backend(script);
    const BaselineRunResult result = run_baseline(RunConfig{}, canned_split(), backend);
    ASSERT_EQ(result.predictions.size(), 1u);
    EXPECT_EQ(result.predictions[0].predicted, testutil::canned_expected_tree());
    EXPECT_EQ(backend.calls(), 4u);
    const auto retry = backend.requests()[1].messages;
    ASSERT_EQ(retry.size(), 3u);
    EXPECT_EQ(retry[2].content.rfind("That response could not be used: ", 0), 0u);
    EXPECT_NE(retry[2].content.find("Respond again as "), std::string::npos);
}

TEST(RunBaseline, OutputIsDeterministic) {
    auto run_once = [] {
        llm::ScriptedBackend backend(testutil::canned_baseline_script());
        const BaselineRunResult result = run_baseline(RunConfig{}, canned_split(), backend);
        return corpus::prediction_to_json(result.predictions.at(0)).dump();
    };
    EXPECT_EQ(run_once(), run_once());
}

TEST(RunBaseline, MissingUltimateIsAPerCaseFailure) {
    llm::ScriptedBackend backend(
        {json{{"interim_probanda", json::array({"Alice took the bike without permission"})},
              {"ultimate_probandum", nullptr}}
             .dump(),
         json{{"evidence", json::array()}, {"links", json::array()}}.dump()});
    const BaselineRunResult result = run_baseline(RunConfig{}, canned_split(), backend);
    EXPECT_TRUE(result.predictions.empty());
    ASSERT_EQ(result.failures.size(), 1u);
    EXPECT_EQ(result.failures[0].case_id, "case-alice");
    EXPECT_EQ(result.failures[0].error, "no ultimate probandum produced for case case-alice");
    EXPECT_EQ(backend.calls(), 2u);  // stage 3 skipped: no links survived
}

TEST(RunBaseline, AnExhaustedBackendAbortsTheRun) {
    llm::ScriptedBackend backend({});
    EXPECT_THROW(run_baseline(RunConfig{}, canned_split(), backend), llm::QueueExhausted);
}

TEST(RunBaseline, FewShotExemplarsReachThePrompt) {
    const corpus::DatasetSplit train = exemplar_split({"train-1"});
    llm::ScriptedBackend backend(testutil::canned_baseline_script());
    const BaselineRunResult result = run_baseline(RunConfig{}, canned_split(), backend, &train);
    ASSERT_EQ(result.predictions.size(), 1u);
    EXPECT_NE(backend.requests()[0].messages[0].content.find("Case body train-1"),
              std::string::npos);
}

// ---------------------------------------------------------------------------
// Agent runner
// ---------------------------------------------------------------------------

TEST(RunAgent, FinishedEpisodeBecomesAPrediction) {
    llm::ScriptedBackend backend(testutil::canned_agent_script());
    const AgentRunResult result = run_agent(RunConfig{}, canned_split(), backend);
    EXPECT_TRUE(result.failures.empty());
    ASSERT_EQ(result.predictions.size(), 1u);
    EXPECT_EQ(result.predictions[0].predicted, testutil::canned_expected_tree());
    EXPECT_EQ(result.predictions[0].provenance,
              (json{{"method", "agent"}, {"steps", 6}, {"status", "finished"}}));
    ASSERT_EQ(result.episodes.size(), 1u);
    EXPECT_EQ(result.episodes[0].first, "case-alice");
    EXPECT_EQ(result.episodes[0].second.status, agent::EpisodeStatus::Finished);
    EXPECT_EQ(result.episodes[0].second.steps.size(), 6u);
    ASSERT_EQ(backend.remaining(), 0u);
    // The goal states the objective, the fragment count, and the case text.
    const std::string first_prompt = backend.requests()[0].messages[0].content;
    EXPECT_NE(first_prompt.find("Construct the reasoning tree for case case-alice: extract "
                                "the interim probanda and supporting evidence, link them, "
                                "state the experiences, generate the ultimate probandum, then "
                                "finish.\nThe case description has 1 fragment(s), indexed "
                                "from 0."),
              std::string::npos);
    EXPECT_NE(first_prompt.find(testutil::canned_case().description), std::string::npos);
}

TEST(RunAgent, EpisodesSerializeIdenticallyAcrossRuns) {
    auto run_once = [] {
        llm::ScriptedBackend backend(testutil::canned_agent_script());
        const AgentRunResult result = run_agent(RunConfig{}, canned_split(), backend);
        return result.episodes.at(0).second.to_json().dump();
    };
    const std::string first = run_once();
    EXPECT_EQ(first, run_once());
    EXPECT_NE(first.find("\"status\":\"finished\""), std::string::npos);
}

TEST(RunAgent, AnAbortedEpisodeIsAFailureButStillRecorded) {
    llm::ScriptedBackend backend({"garbage", "garbage", "garbage"});
    const AgentRunResult result = run_agent(RunConfig{}, canned_split(), backend);
    EXPECT_TRUE(result.predictions.empty());
    ASSERT_EQ(result.failures.size(), 1u);
    EXPECT_EQ(result.failures[0].case_id, "case-alice");
    EXPECT_EQ(result.failures[0].error.rfind("episode ended aborted: parse-error: ", 0), 0u);
    ASSERT_EQ(result.episodes.size(), 1u);
    EXPECT_EQ(result.episodes[0].second.status, agent::EpisodeStatus::Aborted);
}

TEST(RunAgent, KnowledgePathMergesIntoTheToolkit) {
    testutil::TempDir tmp;
    testutil::write_file(tmp.file("extra.json"), R"({"bike_law": "two wheels good"})");
    RunConfig config;
    config.knowledge_path = tmp.file("extra.json").string();
    const json payload = corpus::tree_to_json(testutil::canned_expected_tree());
    llm::ScriptedBackend backend(
        {testutil::thought("legal_knowledge", json{{"topic", "bike_law"}}),
         testutil::thought("finish", json{{"payload", payload}})});
    const AgentRunResult result = run_agent(config, canned_split(), backend);
    ASSERT_EQ(result.predictions.size(), 1u);
    const auto& steps = result.episodes.at(0).second.steps;
    ASSERT_EQ(steps.size(), 2u);
    EXPECT_EQ(steps[0].result.payload.at("text"), "two wheels good");
}

TEST(RunAgent, VectorStorePathFeedsKnowledgeSearch) {
    testutil::TempDir tmp;
    const vectorstore::HashingEmbedder embedder(32);
    const vectorstore::VectorStore store = vectorstore::index_texts(
        {{"Alice took the bike without permission", true}, {"the sky is blue", false}},
        embedder);
    const auto store_path = tmp.file("store.json");
    store.save(store_path);
    RunConfig config;
    config.vector_store_path = store_path.string();
    const json payload = corpus::tree_to_json(testutil::canned_expected_tree());
    llm::ScriptedBackend backend(
        {testutil::thought("knowledge_search",
                           json{{"query", "Alice took the bike without permission"}}),
         R"({"is_on_target": true, "rationale": "matches the recorded probanda"})",
         testutil::thought("finish", json{{"payload", payload}})});
    const AgentRunResult result = run_agent(config, canned_split(), backend);
    ASSERT_EQ(result.predictions.size(), 1u);
    const auto& steps = result.episodes.at(0).second.steps;
    EXPECT_EQ(steps[0].result.payload.at("low_confidence"), false);
    ASSERT_FALSE(steps[0].result.payload.at("neighbors").empty());
    EXPECT_EQ(steps[0].result.payload.at("neighbors")[0].at("text"),
              "Alice took the bike without permission");
}

TEST(RunAgent, AnExhaustedBackendAbortsTheRun) {
    llm::ScriptedBackend backend({});
    EXPECT_THROW(run_agent(RunConfig{}, canned_split(), backend), llm::QueueExhausted);
}

// ---------------------------------------------------------------------------
// Report bundle
// ---------------------------------------------------------------------------

TEST(EvaluateBundle, GoldAsPredictionScoresPerfectly) {
    const corpus::DatasetSplit gold = corpus::load_split(testutil::sample_split_path());
    std::vector<corpus::PredictionRecord> predictions;
    for (const auto& c : gold.cases)
        predictions.push_back(corpus::PredictionRecord{c.case_id, c.gold, json::object()});
    const RunConfig config;
    const ReportBundle bundle = evaluate_bundle(gold, predictions, config);
    EXPECT_EQ(bundle.report.per_case.size(), 3u);
    EXPECT_NE(bundle.table.find("aggregate"), std::string::npos);
    EXPECT_NE(bundle.table.find("100.00"), std::string::npos);
    EXPECT_EQ(bundle.metadata.at("config_digest"), config_digest(config));
    EXPECT_EQ(bundle.metadata.at("split"), "test");
    EXPECT_EQ(bundle.metadata.at("cases"), 3u);
    EXPECT_EQ(bundle.metadata.at("predictions"), 3u);
    ASSERT_EQ(bundle.renderings.size(), 3u);
    for (const auto& r : bundle.renderings) {
        EXPECT_FALSE(r.case_id.empty());
        EXPECT_EQ(r.text.rfind("ultimate ", 0), 0u);
        EXPECT_NE(r.html.find("</html>"), std::string::npos);
    }
    const json j = bundle.to_json();
    for (const char* key : {"report", "table", "metadata", "renderings"})
        EXPECT_TRUE(j.contains(key)) << key;
}

}  // namespace
