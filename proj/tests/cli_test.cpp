#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "lawreason/corpus.hpp"
#include "lawreason/harness.hpp"
#include "lawreason/vectorstore.hpp"
#include "test_util.hpp"

namespace {

using namespace lawreason;
using nlohmann::json;

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

/// Writes the canned one-case split into `dir` and returns its path.
std::filesystem::path write_canned_split(const testutil::TempDir& dir,
                                         const std::string& name = "split.jsonl") {
    corpus::DatasetSplit split;
    split.name = corpus::SplitName::Test;
    split.cases.push_back(testutil::canned_case_record());
    const auto path = dir.file(name);
    corpus::save_split(split, path);
    return path;
}

std::filesystem::path write_config(const testutil::TempDir& dir, const json& config,
                                   const std::string& name = "config.json") {
    const auto path = dir.file(name);
    testutil::write_file(path, config.dump(2) + "\n");
    return path;
}

json scripted_config(const std::vector<std::string>& responses) {
    return json{{"backend", json{{"kind", "scripted"}, {"responses", responses}}}};
}

TEST(Cli, NoArgumentsIsAUsageError) {
    testutil::TempDir tmp;
    const auto r = testutil::run_cli("", tmp.path());
    EXPECT_EQ(r.exit_code, 1);
}

TEST(Cli, HelpExitsCleanly) {
    testutil::TempDir tmp;
    const auto r = testutil::run_cli("--help", tmp.path());
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_NE(r.out.find("validate"), std::string::npos);
    EXPECT_NE(r.out.find("run-agent"), std::string::npos);
}

TEST(Cli, ValidateAcceptsTheBundledSamples) {
    testutil::TempDir tmp;
    const auto r =
        testutil::run_cli("validate " + q(testutil::sample_split_path()), tmp.path());
    EXPECT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find(": 3 case(s), 0 errors, 0 warning(s)"), std::string::npos) << r.out;
}

TEST(Cli, ValidateReportsWarnings) {
    testutil::TempDir tmp;
    corpus::DatasetSplit split;
    split.name = corpus::SplitName::Test;
    corpus::CaseRecord rec = testutil::canned_case_record();
    // An evidence item nothing links to is a warning, not an error.
    rec.gold.evidence.push_back(EvidenceItem{"v3", "An unused statement.", std::nullopt});
    split.cases.push_back(std::move(rec));
    const auto path = tmp.file("warned.jsonl");
    corpus::save_split(split, path);
    const auto r = testutil::run_cli("validate " + q(path), tmp.path());
    EXPECT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find("1 case(s), 0 errors, 1 warning(s)"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("  warning: "), std::string::npos);
}

TEST(Cli, ValidateRejectsMissingAndMalformedFiles) {
    testutil::TempDir tmp;
    const auto missing = testutil::run_cli("validate " + q(tmp.file("absent.jsonl")),
                                           tmp.path());
    EXPECT_EQ(missing.exit_code, 2);
    EXPECT_EQ(missing.err.rfind("data error: ", 0), 0u) << missing.err;

    const auto bad_path = tmp.file("bad.jsonl");
    testutil::write_file(bad_path, "{broken\n");
    const auto malformed = testutil::run_cli("validate " + q(bad_path), tmp.path());
    EXPECT_EQ(malformed.exit_code, 2);
    EXPECT_NE(malformed.err.find("malformed object"), std::string::npos) << malformed.err;
}

TEST(Cli, IndexBuildsALoadableStore) {
    testutil::TempDir tmp;
    const auto out = tmp.file("store.json");
    const auto r = testutil::run_cli(
        "index --labels " + q(testutil::sample_labels_path()) + " --out " + q(out), tmp.path());
    EXPECT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find("indexed 11 text(s) into "), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("(provider hashing-ngram-v1-d256)"), std::string::npos) << r.out;
    const vectorstore::VectorStore store = vectorstore::VectorStore::load(out);
    EXPECT_EQ(store.size(), 11u);
    EXPECT_EQ(store.dimension(), 256u);
}

TEST(Cli, IndexHonorsTheDimensionFlag) {
    testutil::TempDir tmp;
    const auto out = tmp.file("store64.json");
    const auto r = testutil::run_cli("index --labels " + q(testutil::sample_labels_path()) +
                                         " --out " + q(out) + " --dim 64",
                                     tmp.path());
    EXPECT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find("hashing-ngram-v1-d64"), std::string::npos);
    EXPECT_EQ(vectorstore::VectorStore::load(out).dimension(), 64u);
}

TEST(Cli, IndexRejectsMalformedLabels) {
    testutil::TempDir tmp;
    const auto labels = tmp.file("labels.jsonl");
    testutil::write_file(labels, "{\"text\": \"missing the label\"}\n");
    const auto r = testutil::run_cli(
        "index --labels " + q(labels) + " --out " + q(tmp.file("s.json")), tmp.path());
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.err.find("entry needs \"text\" and \"label\""), std::string::npos) << r.err;
}

TEST(Cli, RunBaselineProducesPredictions) {
    testutil::TempDir tmp;
    const auto split = write_canned_split(tmp);
    const auto config = write_config(tmp, scripted_config(testutil::canned_baseline_script()));
    const auto out = tmp.file("preds.jsonl");
    const auto r = testutil::run_cli("run-baseline --config " + q(config) + " --split " +
                                         q(split) + " --out " + q(out),
                                     tmp.path());
    EXPECT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find("baseline: 1 prediction(s), 0 failure(s) -> "), std::string::npos)
        << r.out;
    // few_shot defaults to 3, so running without --train earns a note.
    EXPECT_NE(r.err.find("note: few_shot=3 but no --train split given"), std::string::npos)
        << r.err;
    const auto predictions = corpus::load_predictions(out);
    ASSERT_EQ(predictions.size(), 1u);
    EXPECT_EQ(predictions[0].predicted, testutil::canned_expected_tree());
}

TEST(Cli, RunBaselineWithATrainSplitSkipsTheNote) {
    testutil::TempDir tmp;
    const auto split = write_canned_split(tmp);
    corpus::DatasetSplit train;
    train.name = corpus::SplitName::Train;
    corpus::CaseRecord exemplar = testutil::canned_case_record();
    exemplar.case_id = "train-1";
    train.cases.push_back(std::move(exemplar));
    const auto train_path = tmp.file("train.jsonl");
    corpus::save_split(train, train_path);
    const auto config = write_config(tmp, scripted_config(testutil::canned_baseline_script()));
    const auto r = testutil::run_cli("run-baseline --config " + q(config) + " --split " +
                                         q(split) + " --train " + q(train_path) + " --out " +
                                         q(tmp.file("preds.jsonl")),
                                     tmp.path());
    EXPECT_EQ(r.exit_code, 0) << r.err;
    EXPECT_EQ(r.err.find("note: few_shot"), std::string::npos) << r.err;
}

TEST(Cli, RunBaselineRecordsPerCaseFailures) {
    testutil::TempDir tmp;
    const auto split = write_canned_split(tmp);
    const auto config = write_config(
        tmp, scripted_config(
                 {json{{"interim_probanda", json::array({"Alice took the bike"})},
                       {"ultimate_probandum", nullptr}}
                      .dump(),
                  json{{"evidence", json::array()}, {"links", json::array()}}.dump()}));
    const auto failures_path = tmp.file("failures.json");
    const auto r = testutil::run_cli("run-baseline --config " + q(config) + " --split " +
                                         q(split) + " --out " + q(tmp.file("preds.jsonl")) +
                                         " --failures " + q(failures_path),
                                     tmp.path());
    EXPECT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find("baseline: 0 prediction(s), 1 failure(s)"), std::string::npos)
        << r.out;
    EXPECT_NE(r.err.find("case case-alice failed: no ultimate probandum produced"),
              std::string::npos)
        << r.err;
    const json failures = json::parse(testutil::read_file(failures_path));
    ASSERT_EQ(failures.size(), 1u);
    EXPECT_EQ(failures[0].at("case_id"), "case-alice");
}

TEST(Cli, RunBaselineExhaustedBackendIsABackendError) {
    testutil::TempDir tmp;
    const auto split = write_canned_split(tmp);
    const auto config = write_config(tmp, scripted_config({}));
    const auto r = testutil::run_cli("run-baseline --config " + q(config) + " --split " +
                                         q(split) + " --out " + q(tmp.file("preds.jsonl")),
                                     tmp.path());
    EXPECT_EQ(r.exit_code, 3);
    // stderr may carry advisory notes (e.g. about few-shot exemplars) before
    // the error line itself.
    EXPECT_NE(r.err.find("backend error: "), std::string::npos) << r.err;
}

TEST(Cli, RunAgentWritesPredictionsAndEpisodes) {
    testutil::TempDir tmp;
    const auto split = write_canned_split(tmp);
    const auto config = write_config(tmp, scripted_config(testutil::canned_agent_script()));
    const auto out = tmp.file("preds.jsonl");
    const auto episodes_path = tmp.file("episodes.jsonl");
    const auto r = testutil::run_cli("run-agent --config " + q(config) + " --split " +
                                         q(split) + " --out " + q(out) + " --episodes " +
                                         q(episodes_path),
                                     tmp.path());
    EXPECT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find("agent: 1 prediction(s), 0 failure(s) -> "), std::string::npos)
        << r.out;
    const auto predictions = corpus::load_predictions(out);
    ASSERT_EQ(predictions.size(), 1u);
    EXPECT_EQ(predictions[0].predicted, testutil::canned_expected_tree());
    EXPECT_EQ(predictions[0].provenance.at("status"), "finished");
    const std::string episodes_text = testutil::read_file(episodes_path);
    const json line = json::parse(episodes_text.substr(0, episodes_text.find('\n')));
    EXPECT_EQ(line.at("case_id"), "case-alice");
    EXPECT_EQ(line.at("episode").at("status"), "finished");
    EXPECT_EQ(line.at("episode").at("steps").size(), 6u);
}

TEST(Cli, EvaluateScoresGoldAsPerfect) {
    testutil::TempDir tmp;
    const corpus::DatasetSplit gold = corpus::load_split(testutil::sample_split_path());
    std::vector<corpus::PredictionRecord> predictions;
    for (const auto& c : gold.cases)
        predictions.push_back(corpus::PredictionRecord{c.case_id, c.gold, json::object()});
    const auto pred_path = tmp.file("preds.jsonl");
    corpus::save_predictions(predictions, pred_path);
    const auto report_path = tmp.file("report.json");
    const auto r = testutil::run_cli("evaluate --gold " + q(testutil::sample_split_path()) +
                                         " --pred " + q(pred_path) + " --report " +
                                         q(report_path),
                                     tmp.path());
    EXPECT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find("aggregate"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("100.00"), std::string::npos);
    EXPECT_TRUE(r.err.empty()) << r.err;
    const json report = json::parse(testutil::read_file(report_path));
    for (const char* key : {"report", "table", "metadata", "renderings"})
        EXPECT_TRUE(report.contains(key)) << key;
    EXPECT_EQ(report.at("metadata").at("predictions"), 3u);
}

TEST(Cli, EvaluateNoticesMissingPredictions) {
    testutil::TempDir tmp;
    const corpus::DatasetSplit gold = corpus::load_split(testutil::sample_split_path());
    std::vector<corpus::PredictionRecord> predictions;
    predictions.push_back(
        corpus::PredictionRecord{gold.cases[0].case_id, gold.cases[0].gold, json::object()});
    const auto pred_path = tmp.file("preds.jsonl");
    corpus::save_predictions(predictions, pred_path);
    const auto r = testutil::run_cli("evaluate --gold " + q(testutil::sample_split_path()) +
                                         " --pred " + q(pred_path),
                                     tmp.path());
    EXPECT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.err.find("no prediction for this case; scored as empty"), std::string::npos)
        << r.err;
}

TEST(Cli, EvaluateRejectsAPredictionForAnUnknownCase) {
    testutil::TempDir tmp;
    std::vector<corpus::PredictionRecord> predictions;
    predictions.push_back(corpus::PredictionRecord{"case-nobody",
                                                   testutil::canned_expected_tree(),
                                                   json::object()});
    const auto pred_path = tmp.file("preds.jsonl");
    corpus::save_predictions(predictions, pred_path);
    const auto r = testutil::run_cli("evaluate --gold " + q(testutil::sample_split_path()) +
                                         " --pred " + q(pred_path),
                                     tmp.path());
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.err.find("prediction for unknown case \"case-nobody\""), std::string::npos)
        << r.err;
}

TEST(Cli, RenderPrintsOneCaseToStdout) {
    testutil::TempDir tmp;
    const auto r = testutil::run_cli("render --split " + q(testutil::sample_split_path()) +
                                         " --case sample-001",
                                     tmp.path());
    EXPECT_EQ(r.exit_code, 0) << r.err;
    EXPECT_EQ(r.out.rfind("== sample-001 ==\nultimate ", 0), 0u) << r.out;
}

TEST(Cli, RenderWritesFilesIntoTheOutputDirectory) {
    testutil::TempDir tmp;
    const auto out_dir = tmp.file("trees");
    const auto r = testutil::run_cli("render --split " + q(testutil::sample_split_path()) +
                                         " --out-dir " + q(out_dir),
                                     tmp.path());
    EXPECT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find("rendered 3 tree(s) into "), std::string::npos) << r.out;
    for (const char* id : {"sample-001", "sample-002", "sample-003"}) {
        EXPECT_TRUE(std::filesystem::exists(out_dir / (std::string(id) + ".txt"))) << id;
        EXPECT_TRUE(std::filesystem::exists(out_dir / (std::string(id) + ".html"))) << id;
    }
    const std::string html =
        testutil::read_file(out_dir / "sample-001.html");
    EXPECT_NE(html.find("<!DOCTYPE html>"), std::string::npos);
}

TEST(Cli, RenderUnknownCaseIsADataError) {
    testutil::TempDir tmp;
    const auto r = testutil::run_cli("render --split " + q(testutil::sample_split_path()) +
                                         " --case case-nobody",
                                     tmp.path());
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.err.find("no case with id \"case-nobody\""), std::string::npos) << r.err;
}

TEST(Cli, RenderPredictionsInsteadOfGold) {
    testutil::TempDir tmp;
    std::vector<corpus::PredictionRecord> predictions;
    predictions.push_back(corpus::PredictionRecord{"case-alice",
                                                   testutil::canned_expected_tree(),
                                                   json::object()});
    const auto pred_path = tmp.file("preds.jsonl");
    corpus::save_predictions(predictions, pred_path);
    const auto r = testutil::run_cli("render --split " + q(testutil::sample_split_path()) +
                                         " --pred " + q(pred_path) + " --case case-alice",
                                     tmp.path());
    EXPECT_EQ(r.exit_code, 0) << r.err;
    EXPECT_EQ(r.out.rfind("== case-alice ==\n", 0), 0u) << r.out;
}

TEST(Cli, ExportInstructionsWritesJsonlRecords) {
    testutil::TempDir tmp;
    const auto out = tmp.file("instructions.jsonl");
    const auto r = testutil::run_cli("export-instructions --split " +
                                         q(testutil::sample_split_path()) + " --out " + q(out),
                                     tmp.path());
    EXPECT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find(" instruction record(s) -> "), std::string::npos) << r.out;
    std::istringstream lines(testutil::read_file(out));
    std::string line;
    std::size_t count = 0;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        const json record = json::parse(line);
        for (const char* key : {"task", "instruction", "input", "output"})
            ASSERT_TRUE(record.contains(key)) << key;
        ++count;
    }
    EXPECT_GE(count, 1u);  // the samples carry anchored evidence
}

TEST(Cli, ExportInstructionsValidatesTheTaskName) {
    testutil::TempDir tmp;
    const auto r = testutil::run_cli("export-instructions --split " +
                                         q(testutil::sample_split_path()) + " --out " +
                                         q(tmp.file("x.jsonl")) + " --task bogus",
                                     tmp.path());
    EXPECT_EQ(r.exit_code, 1);
    EXPECT_EQ(r.err.rfind("error: ", 0), 0u) << r.err;
}

TEST(Cli, BadConfigFilesAreDataErrors) {
    testutil::TempDir tmp;
    const auto split = write_canned_split(tmp);
    {
        const auto r = testutil::run_cli("run-baseline --config " +
                                             q(tmp.file("absent.json")) + " --split " +
                                             q(split) + " --out " + q(tmp.file("p.jsonl")),
                                         tmp.path());
        EXPECT_EQ(r.exit_code, 2);
        EXPECT_NE(r.err.find("cannot open config file"), std::string::npos) << r.err;
    }
    {
        const auto config = write_config(tmp, json{{"surprise", 1}});
        const auto r = testutil::run_cli("run-agent --config " + q(config) + " --split " +
                                             q(split) + " --out " + q(tmp.file("p.jsonl")),
                                         tmp.path());
        EXPECT_EQ(r.exit_code, 2);
        EXPECT_NE(r.err.find("unknown key \"surprise\""), std::string::npos) << r.err;
    }
}

}  // namespace
