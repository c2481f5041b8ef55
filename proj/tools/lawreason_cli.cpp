// Command-line harness over the library: data validation, vector-store
// indexing, baseline and agent runs, evaluation, tree rendering, and
// instruction export.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 backend error.

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lawreason/lawreason.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lawreason;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitBackend = 3;

harness::RunConfig load_config(const std::string& path) {
    if (path.empty()) return harness::RunConfig{};
    std::ifstream in(path);
    if (!in) throw corpus::FormatError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw corpus::FormatError("malformed config file " + path + ": " + e.what());
    }
    return harness::run_config_from_json(j);
}

void write_text_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw corpus::FormatError("cannot write file: " + path.string());
    out << content;
}

int cmd_validate(const std::string& split_path) {
    std::vector<std::string> warnings;
    const corpus::DatasetSplit split = corpus::load_split(split_path, &warnings);
    std::cout << split_path << ": " << split.cases.size() << " case(s), 0 errors, "
              << warnings.size() << " warning(s)\n";
    for (const auto& w : warnings) std::cout << "  warning: " << w << '\n';
    return kExitOk;
}

int cmd_index(const std::string& labels_path, const std::string& out_path, std::size_t dim) {
    std::ifstream in(labels_path);
    if (!in) throw corpus::FormatError("cannot open labels file: " + labels_path);
    std::vector<std::pair<std::string, bool>> items;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw corpus::FormatError(labels_path + " line " + std::to_string(line_no) + ": " +
                                      e.what());
        }
        if (!j.is_object() || !j.contains("text") || !j.contains("label"))
            throw corpus::FormatError(labels_path + " line " + std::to_string(line_no) +
                                      ": entry needs \"text\" and \"label\"");
        items.emplace_back(j.at("text").get<std::string>(), j.at("label").get<bool>());
    }
    const vectorstore::HashingEmbedder provider(dim);
    const vectorstore::VectorStore store = vectorstore::index_texts(items, provider);
    store.save(out_path);
    std::cout << "indexed " << items.size() << " text(s) into " << out_path << " (provider "
              << provider.provider_id() << ")\n";
    return kExitOk;
}

void report_failures(const std::vector<harness::CaseFailure>& failures,
                     const std::string& failures_path) {
    for (const auto& f : failures)
        std::cerr << "case " << f.case_id << " failed: " << f.error << '\n';
    if (!failures_path.empty()) {
        json arr = json::array();
        for (const auto& f : failures)
            arr.push_back(json{{"case_id", f.case_id}, {"error", f.error}});
        write_text_file(failures_path, arr.dump(2) + "\n");
    }
}

int cmd_run_baseline(const std::string& config_path, const std::string& split_path,
                     const std::string& train_path, const std::string& out_path,
                     const std::string& failures_path) {
    const harness::RunConfig config = load_config(config_path);
    const corpus::DatasetSplit split = corpus::load_split(split_path);
    std::optional<corpus::DatasetSplit> train;
    if (!train_path.empty()) train = corpus::load_split(train_path);
    if (config.few_shot > 0 && !train)
        std::cerr << "note: few_shot=" << config.few_shot
                  << " but no --train split given; running without exemplars\n";
    const auto backend = harness::make_backend(config.backend);
    const harness::BaselineRunResult result =
        harness::run_baseline(config, split, *backend, train ? &*train : nullptr);
    corpus::save_predictions(result.predictions, out_path);
    report_failures(result.failures, failures_path);
    std::cout << "baseline: " << result.predictions.size() << " prediction(s), "
              << result.failures.size() << " failure(s) -> " << out_path << '\n';
    return kExitOk;
}

int cmd_run_agent(const std::string& config_path, const std::string& split_path,
                  const std::string& out_path, const std::string& episodes_path,
                  const std::string& failures_path) {
    const harness::RunConfig config = load_config(config_path);
    const corpus::DatasetSplit split = corpus::load_split(split_path);
    const auto backend = harness::make_backend(config.backend);
    const harness::AgentRunResult result = harness::run_agent(config, split, *backend);
    corpus::save_predictions(result.predictions, out_path);
    if (!episodes_path.empty()) {
        std::ostringstream os;
        for (const auto& [case_id, episode] : result.episodes)
            os << json{{"case_id", case_id}, {"episode", episode.to_json()}}.dump() << '\n';
        write_text_file(episodes_path, os.str());
    }
    report_failures(result.failures, failures_path);
    std::cout << "agent: " << result.predictions.size() << " prediction(s), "
              << result.failures.size() << " failure(s) -> " << out_path << '\n';
    return kExitOk;
}

int cmd_evaluate(const std::string& config_path, const std::string& gold_path,
                 const std::string& pred_path, const std::string& report_path) {
    const harness::RunConfig config = load_config(config_path);
    const corpus::DatasetSplit gold = corpus::load_split(gold_path);
    const std::vector<corpus::PredictionRecord> predictions = corpus::load_predictions(pred_path);
    const harness::ReportBundle bundle = harness::evaluate_bundle(gold, predictions, config);
    std::cout << bundle.table;
    for (const auto& [id, scores] : bundle.report.per_case)
        for (const auto& notice : scores.notices)
            std::cerr << "case " << id << ": " << notice << '\n';
    if (!report_path.empty()) write_text_file(report_path, bundle.to_json().dump(2) + "\n");
    return kExitOk;
}

int cmd_render(const std::string& split_path, const std::string& pred_path,
               const std::string& case_id, const std::string& out_dir) {
    const corpus::DatasetSplit split = corpus::load_split(split_path);
    std::vector<std::pair<std::string, const ReasoningTree*>> targets;
    std::vector<corpus::PredictionRecord> predictions;
    if (!pred_path.empty()) {
        predictions = corpus::load_predictions(pred_path);
        for (const auto& p : predictions)
            if (case_id.empty() || p.case_id == case_id)
                targets.emplace_back(p.case_id, &p.predicted);
    } else {
        for (const auto& c : split.cases)
            if (case_id.empty() || c.case_id == case_id) targets.emplace_back(c.case_id, &c.gold);
    }
    if (targets.empty())
        throw corpus::FormatError(case_id.empty() ? "nothing to render"
                                                  : "no case with id \"" + case_id + "\"");
    for (const auto& [id, tree] : targets) {
        const std::string text = harness::render_tree_text(*tree);
        if (out_dir.empty()) {
            std::cout << "== " << id << " ==\n" << text;
        } else {
            write_text_file(fs::path(out_dir) / (id + ".txt"), text);
            write_text_file(fs::path(out_dir) / (id + ".html"),
                            harness::render_tree_html(id, *tree));
        }
    }
    if (!out_dir.empty())
        std::cout << "rendered " << targets.size() << " tree(s) into " << out_dir << '\n';
    return kExitOk;
}

int cmd_export_instructions(const std::string& split_path, const std::string& task_name,
                            const std::string& out_path, std::size_t max_tokens) {
    const corpus::DatasetSplit split = corpus::load_split(split_path);
    std::vector<corpus::TaskKind> tasks;
    if (task_name == "all") {
        tasks = {corpus::TaskKind::Facts, corpus::TaskKind::Evidence, corpus::TaskKind::Links,
                 corpus::TaskKind::Experience};
    } else {
        const auto task = corpus::task_kind_from_name(task_name);
        if (!task)
            throw CLI::ValidationError("--task",
                                       "must be facts, evidence, links, experience, or all");
        tasks = {*task};
    }
    std::ostringstream os;
    std::size_t count = 0;
    for (const corpus::TaskKind task : tasks) {
        for (const auto& rec : corpus::export_instructions(split, task, max_tokens)) {
            os << json{{"task", corpus::task_kind_name(task)},
                       {"instruction", rec.instruction},
                       {"input", rec.input},
                       {"output", rec.output}}
                      .dump()
               << '\n';
            ++count;
        }
    }
    write_text_file(out_path, os.str());
    std::cout << "exported " << count << " instruction record(s) -> " << out_path << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Reasoning-tree toolkit: validate corpora, build vector indexes, run the "
        "baseline and agent pipelines, evaluate predictions, render trees, and "
        "export instruction data."};
    app.require_subcommand(1);

    // validate
    std::string v_split;
    CLI::App* validate = app.add_subcommand("validate", "Validate a case split file");
    validate->add_option("split", v_split, "case split (.jsonl)")->required();

    // index
    std::string i_labels, i_out;
    std::size_t i_dim = 256;
    CLI::App* index = app.add_subcommand("index", "Build a labeled vector store");
    index->add_option("--labels", i_labels, "labeled texts (.jsonl of {text, label})")
        ->required();
    index->add_option("--out", i_out, "output store file (.json)")->required();
    index->add_option("--dim", i_dim, "embedding dimension (default 256)");

    // run-baseline
    std::string b_config, b_split, b_train, b_out, b_failures;
    CLI::App* baseline = app.add_subcommand("run-baseline", "Run the prompt-pipeline baseline");
    baseline->add_option("--config", b_config, "run config (.json)");
    baseline->add_option("--split", b_split, "target split (.jsonl)")->required();
    baseline->add_option("--train", b_train, "train split for few-shot exemplars (.jsonl)");
    baseline->add_option("--out", b_out, "output predictions (.jsonl)")->required();
    baseline->add_option("--failures", b_failures, "write per-case failures (.json)");

    // run-agent
    std::string a_config, a_split, a_out, a_episodes, a_failures;
    CLI::App* agent_cmd = app.add_subcommand("run-agent", "Run the tool-using agent");
    agent_cmd->add_option("--config", a_config, "run config (.json)");
    agent_cmd->add_option("--split", a_split, "target split (.jsonl)")->required();
    agent_cmd->add_option("--out", a_out, "output predictions (.jsonl)")->required();
    agent_cmd->add_option("--episodes", a_episodes, "write episode traces (.jsonl)");
    agent_cmd->add_option("--failures", a_failures, "write per-case failures (.json)");

    // evaluate
    std::string e_config, e_gold, e_pred, e_report;
    CLI::App* evaluate = app.add_subcommand("evaluate", "Score predictions against gold");
    evaluate->add_option("--config", e_config, "run config (.json)");
    evaluate->add_option("--gold", e_gold, "gold split (.jsonl)")->required();
    evaluate->add_option("--pred", e_pred, "predictions (.jsonl)")->required();
    evaluate->add_option("--report", e_report, "write the full report bundle (.json)");

    // render
    std::string r_split, r_pred, r_case, r_out_dir;
    CLI::App* render = app.add_subcommand("render", "Render reasoning trees");
    render->add_option("--split", r_split, "case split (.jsonl)")->required();
    render->add_option("--pred", r_pred, "render these predictions instead of gold (.jsonl)");
    render->add_option("--case", r_case, "render only this case id");
    render->add_option("--out-dir", r_out_dir, "write <case>.txt and <case>.html here");

    // export-instructions
    std::string x_split, x_task = "all", x_out;
    std::size_t x_max_tokens = 1500;
    CLI::App* export_cmd =
        app.add_subcommand("export-instructions", "Export instruction-tuning records");
    export_cmd->add_option("--split", x_split, "case split (.jsonl)")->required();
    export_cmd->add_option("--task", x_task, "facts|evidence|links|experience|all (default all)");
    export_cmd->add_option("--out", x_out, "output records (.jsonl)")->required();
    export_cmd->add_option("--max-tokens", x_max_tokens, "fragment budget (default 1500)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*validate) return cmd_validate(v_split);
        if (*index) return cmd_index(i_labels, i_out, i_dim);
        if (*baseline) return cmd_run_baseline(b_config, b_split, b_train, b_out, b_failures);
        if (*agent_cmd) return cmd_run_agent(a_config, a_split, a_out, a_episodes, a_failures);
        if (*evaluate) return cmd_evaluate(e_config, e_gold, e_pred, e_report);
        if (*render) return cmd_render(r_split, r_pred, r_case, r_out_dir);
        if (*export_cmd) return cmd_export_instructions(x_split, x_task, x_out, x_max_tokens);
        std::cerr << "no subcommand selected\n";
        return kExitUsage;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const llm::BackendError& e) {
        std::cerr << "backend error: " << e.what() << '\n';
        return kExitBackend;
    } catch (const vectorstore::ProviderError& e) {
        std::cerr << "backend error: " << e.what() << '\n';
        return kExitBackend;
    } catch (const InvalidTree& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const corpus::FormatError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const metrics::MissingCase& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const metrics::EmptyGold& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    }
}
