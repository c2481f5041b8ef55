#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lawreason/agent.hpp"
#include "lawreason/corpus.hpp"
#include "lawreason/detail/sha256.hpp"
#include "lawreason/llm.hpp"
#include "lawreason/metrics.hpp"
#include "lawreason/prompts.hpp"
#include "lawreason/rouge.hpp"
#include "lawreason/schema.hpp"
#include "lawreason/text.hpp"
#include "lawreason/toolkits.hpp"
#include "lawreason/vectorstore.hpp"

// The experiment harness: validated run configuration, backend construction,
// the prompt-pipeline baseline, the agent runner, evaluation report bundles,
// and deterministic tree renderings (plain text and self-contained HTML).

namespace lawreason::harness {

using nlohmann::json;

// ============================================================================
// Backend specification
// ============================================================================

/// Declarative description of a chat backend, loadable from configuration.
/// Remote credentials are looked up from the NAMED environment variable at
/// call time and never appear in configuration files.
struct BackendSpec {
    std::string kind = "scripted";  // "scripted" | "replay" | "remote"

    // scripted
    std::vector<std::string> responses;
    std::string model = "scripted";

    // replay
    std::string cache_path;
    bool strict = true;
    std::shared_ptr<BackendSpec> upstream;  // optional recorded-from backend

    // remote
    llm::RemoteConfig remote;

    bool operator==(const BackendSpec& other) const {
        const bool upstream_equal =
            (upstream == nullptr) == (other.upstream == nullptr) &&
            (upstream == nullptr || *upstream == *other.upstream);
        return kind == other.kind && responses == other.responses && model == other.model &&
               cache_path == other.cache_path && strict == other.strict && upstream_equal &&
               remote.endpoint == other.remote.endpoint && remote.model == other.remote.model &&
               remote.credential_env == other.remote.credential_env &&
               remote.max_attempts == other.remote.max_attempts &&
               remote.initial_backoff == other.remote.initial_backoff;
    }
};

namespace detail {

inline void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                                const std::string& where) {
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            throw corpus::FormatError(where + ": unknown key \"" + key + "\"");
}

}  // namespace detail

inline json backend_spec_to_json(const BackendSpec& spec) {
    json j{{"kind", spec.kind}};
    if (spec.kind == "scripted") {
        j["responses"] = spec.responses;
        j["model"] = spec.model;
    } else if (spec.kind == "replay") {
        j["cache_path"] = spec.cache_path;
        j["strict"] = spec.strict;
        if (spec.upstream) j["upstream"] = backend_spec_to_json(*spec.upstream);
    } else if (spec.kind == "remote") {
        j["endpoint"] = spec.remote.endpoint;
        j["model"] = spec.remote.model;
        j["credential_env"] = spec.remote.credential_env;
        j["max_attempts"] = spec.remote.max_attempts;
        j["initial_backoff_ms"] = spec.remote.initial_backoff.count();
    }
    return j;
}

inline BackendSpec backend_spec_from_json(const json& j) {
    if (!j.is_object()) throw corpus::FormatError("backend spec must be an object");
    if (!j.contains("kind") || !j.at("kind").is_string())
        throw corpus::FormatError("backend spec needs a string \"kind\"");
    BackendSpec spec;
    spec.kind = j.at("kind").get<std::string>();
    if (spec.kind == "scripted") {
        detail::reject_unknown_keys(j, {"kind", "responses", "model"}, "backend (scripted)");
        if (j.contains("responses"))
            for (const auto& r : j.at("responses")) spec.responses.push_back(r.get<std::string>());
        if (j.contains("model")) spec.model = j.at("model").get<std::string>();
    } else if (spec.kind == "replay") {
        detail::reject_unknown_keys(j, {"kind", "cache_path", "strict", "upstream"},
                                    "backend (replay)");
        if (!j.contains("cache_path"))
            throw corpus::FormatError("replay backend needs a \"cache_path\"");
        spec.cache_path = j.at("cache_path").get<std::string>();
        if (j.contains("strict")) spec.strict = j.at("strict").get<bool>();
        if (j.contains("upstream"))
            spec.upstream = std::make_shared<BackendSpec>(backend_spec_from_json(j.at("upstream")));
    } else if (spec.kind == "remote") {
        detail::reject_unknown_keys(
            j, {"kind", "endpoint", "model", "credential_env", "max_attempts",
                "initial_backoff_ms"},
            "backend (remote)");
        for (const char* key : {"endpoint", "model", "credential_env"})
            if (!j.contains(key))
                throw corpus::FormatError(std::string("remote backend needs \"") + key + "\"");
        spec.remote.endpoint = j.at("endpoint").get<std::string>();
        spec.remote.model = j.at("model").get<std::string>();
        spec.remote.credential_env = j.at("credential_env").get<std::string>();
        if (j.contains("max_attempts"))
            spec.remote.max_attempts = j.at("max_attempts").get<std::size_t>();
        if (j.contains("initial_backoff_ms"))
            spec.remote.initial_backoff =
                std::chrono::milliseconds(j.at("initial_backoff_ms").get<long long>());
    } else {
        throw corpus::FormatError("unknown backend kind \"" + spec.kind +
                                  "\" (expected scripted, replay, or remote)");
    }
    return spec;
}

inline std::shared_ptr<llm::Backend> make_backend(const BackendSpec& spec) {
    if (spec.kind == "scripted")
        return std::make_shared<llm::ScriptedBackend>(spec.responses, spec.model);
    if (spec.kind == "replay")
        return std::make_shared<llm::ReplayBackend>(
            spec.cache_path, spec.strict, spec.upstream ? make_backend(*spec.upstream) : nullptr);
    if (spec.kind == "remote") return std::make_shared<llm::RemoteChatBackend>(spec.remote);
    throw corpus::FormatError("unknown backend kind \"" + spec.kind + "\"");
}

// ============================================================================
// Run configuration
// ============================================================================

struct RunConfig {
    BackendSpec backend;
    agent::StrategyPolicy policy;
    std::optional<rouge::Mode> tokenizer;  // nullopt = auto-detect per text
    metrics::EvaluateConfig metric;
    std::size_t few_shot = 3;  // 0 or 3 exemplars for the baseline prompts
    std::size_t fragment_max_tokens = 1500;
    std::size_t workers = 1;
    std::string knowledge_path;     // optional extra legal-knowledge file
    std::string vector_store_path;  // optional persisted vector store
    std::string prompt_dir;         // optional template overrides
    llm::DecodingParams params;

    void validate() const {
        try {
            policy.validate();
        } catch (const std::invalid_argument& e) {
            throw corpus::FormatError(e.what());
        }
        if (few_shot != 0 && few_shot != 3)
            throw corpus::FormatError("few_shot must be 0 or 3");
        if (fragment_max_tokens < 1)
            throw corpus::FormatError("fragment_max_tokens must be >= 1");
        if (workers < 1) throw corpus::FormatError("workers must be >= 1");
    }
};

inline json run_config_to_json(const RunConfig& c) {
    json disabled = json::array();
    for (const auto& t : c.policy.disabled_tools) disabled.push_back(t);
    return json{
        {"backend", backend_spec_to_json(c.backend)},
        {"policy",
         json{{"max_steps", c.policy.max_steps},
              {"knowledge_calls_before_reflection", c.policy.knowledge_calls_before_reflection},
              {"parse_retries", c.policy.parse_retries},
              {"disabled_tools", std::move(disabled)}}},
        {"tokenizer", !c.tokenizer          ? "auto"
                      : *c.tokenizer == rouge::Mode::Character ? "character"
                                                               : "word"},
        {"metrics", metrics::config_to_json(c.metric)},
        {"few_shot", c.few_shot},
        {"fragment_max_tokens", c.fragment_max_tokens},
        {"workers", c.workers},
        {"knowledge_path", c.knowledge_path},
        {"vector_store_path", c.vector_store_path},
        {"prompt_dir", c.prompt_dir},
        {"decoding", llm::params_to_json(c.params)}};
}

inline RunConfig run_config_from_json(const json& j) {
    if (!j.is_object()) throw corpus::FormatError("run config must be an object");
    detail::reject_unknown_keys(
        j,
        {"backend", "policy", "tokenizer", "metrics", "few_shot", "fragment_max_tokens",
         "workers", "knowledge_path", "vector_store_path", "prompt_dir", "decoding"},
        "run config");
    RunConfig c;
    if (j.contains("backend")) c.backend = backend_spec_from_json(j.at("backend"));
    if (j.contains("policy")) {
        const json& p = j.at("policy");
        detail::reject_unknown_keys(p,
                                    {"max_steps", "knowledge_calls_before_reflection",
                                     "parse_retries", "disabled_tools"},
                                    "policy");
        if (p.contains("max_steps")) c.policy.max_steps = p.at("max_steps").get<std::size_t>();
        if (p.contains("knowledge_calls_before_reflection"))
            c.policy.knowledge_calls_before_reflection =
                p.at("knowledge_calls_before_reflection").get<std::size_t>();
        if (p.contains("parse_retries"))
            c.policy.parse_retries = p.at("parse_retries").get<std::size_t>();
        if (p.contains("disabled_tools"))
            for (const auto& t : p.at("disabled_tools"))
                c.policy.disabled_tools.insert(t.get<std::string>());
    }
    if (j.contains("tokenizer")) {
        const std::string mode = j.at("tokenizer").get<std::string>();
        if (mode == "auto")
            c.tokenizer.reset();
        else if (mode == "character")
            c.tokenizer = rouge::Mode::Character;
        else if (mode == "word")
            c.tokenizer = rouge::Mode::Word;
        else
            throw corpus::FormatError("tokenizer must be auto, character, or word");
    }
    if (j.contains("metrics")) {
        detail::reject_unknown_keys(j.at("metrics"),
                                    {"matcher", "tau", "comprehensive_variant", "symmetric_facts"},
                                    "metrics");
        c.metric = metrics::config_from_json(j.at("metrics"));
    }
    if (j.contains("few_shot")) c.few_shot = j.at("few_shot").get<std::size_t>();
    if (j.contains("fragment_max_tokens"))
        c.fragment_max_tokens = j.at("fragment_max_tokens").get<std::size_t>();
    if (j.contains("workers")) c.workers = j.at("workers").get<std::size_t>();
    if (j.contains("knowledge_path")) c.knowledge_path = j.at("knowledge_path").get<std::string>();
    if (j.contains("vector_store_path"))
        c.vector_store_path = j.at("vector_store_path").get<std::string>();
    if (j.contains("prompt_dir")) c.prompt_dir = j.at("prompt_dir").get<std::string>();
    if (j.contains("decoding")) {
        const json& d = j.at("decoding");
        detail::reject_unknown_keys(d,
                                    {"temperature", "max_tokens", "top_p", "frequency_penalty",
                                     "presence_penalty", "n"},
                                    "decoding");
        if (d.contains("temperature")) c.params.temperature = d.at("temperature").get<double>();
        if (d.contains("max_tokens")) c.params.max_tokens = d.at("max_tokens").get<std::size_t>();
        if (d.contains("top_p")) c.params.top_p = d.at("top_p").get<double>();
        if (d.contains("frequency_penalty"))
            c.params.frequency_penalty = d.at("frequency_penalty").get<double>();
        if (d.contains("presence_penalty"))
            c.params.presence_penalty = d.at("presence_penalty").get<double>();
        if (d.contains("n")) c.params.n = d.at("n").get<std::size_t>();
    }
    c.validate();
    return c;
}

/// Stable digest of the full configuration; reports carry it so every table
/// is traceable to exact settings.
inline std::string config_digest(const RunConfig& c) {
    return lawreason::detail::sha256_hex(run_config_to_json(c).dump());
}

/// The prompt library for a run: the built-ins, overridden by any *.txt
/// templates in config.prompt_dir.
inline prompts::PromptLibrary prompt_library_for(const RunConfig& config) {
    prompts::PromptLibrary library = prompts::PromptLibrary::builtin();
    if (!config.prompt_dir.empty()) library.load_directory(config.prompt_dir);
    return library;
}

// ============================================================================
// Tree renderings
// ============================================================================

namespace detail {

inline std::string html_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace detail

/// Deterministic indented outline: ultimate first, each interim beneath it,
/// each supporting evidence item beneath its interim with the experiences of
/// that link inline ("(no experience)" when the link carries none). Evidence
/// supporting no interim is listed at the end. Throws InvalidTree on an
/// invalid tree.
inline std::string render_tree_text(const ReasoningTree& tree) {
    lawreason::detail::require_valid(tree);
    std::ostringstream os;
    const Factum* ultimate = find_ultimate(tree);
    os << "ultimate " << ultimate->id << ": " << ultimate->text << '\n';
    std::set<std::string> linked_evidence;
    for (const Factum& f : tree.facta) {
        if (f.kind != FactumKind::Interim) continue;
        os << "  interim " << f.id << ": " << f.text << '\n';
        for (const InferenceLink& link : tree.links) {
            if (link.factum_id != f.id) continue;
            linked_evidence.insert(link.evidence_id);
            const EvidenceItem* e = nullptr;
            for (const EvidenceItem& candidate : tree.evidence)
                if (candidate.id == link.evidence_id) {
                    e = &candidate;
                    break;
                }
            os << "    evidence " << link.evidence_id << ": " << (e ? e->text : "?") << '\n';
            if (link.experiences.empty()) {
                os << "      (no experience)\n";
            } else {
                for (const std::string& exp : link.experiences)
                    os << "      experience: " << exp << '\n';
            }
        }
    }
    bool any_unlinked = false;
    for (const EvidenceItem& e : tree.evidence) {
        if (linked_evidence.count(e.id)) continue;
        if (!any_unlinked) {
            os << "  unlinked evidence:\n";
            any_unlinked = true;
        }
        os << "    evidence " << e.id << ": " << e.text << '\n';
    }
    return os.str();
}

/// Self-contained static HTML rendering of the same outline: no scripts, no
/// external assets.
inline std::string render_tree_html(const std::string& case_id, const ReasoningTree& tree) {
    lawreason::detail::require_valid(tree);
    std::ostringstream os;
    os << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>"
       << detail::html_escape(case_id) << "</title>\n<style>\n"
       << "body{font-family:sans-serif;margin:2rem;max-width:60rem}\n"
       << "ul{list-style:none;padding-left:1.25rem;border-left:1px solid #ccc}\n"
       << ".ultimate{font-weight:bold}\n.interim{color:#1a3c6e}\n.evidence{color:#333}\n"
       << ".experience{color:#6e4a1a;font-style:italic}\n.none{color:#999;font-style:italic}\n"
       << "</style>\n</head>\n<body>\n<h1>" << detail::html_escape(case_id) << "</h1>\n";
    const Factum* ultimate = find_ultimate(tree);
    os << "<p class=\"ultimate\">" << detail::html_escape(ultimate->id) << ": "
       << detail::html_escape(ultimate->text) << "</p>\n<ul>\n";
    std::set<std::string> linked_evidence;
    for (const Factum& f : tree.facta) {
        if (f.kind != FactumKind::Interim) continue;
        os << "<li class=\"interim\">" << detail::html_escape(f.id) << ": "
           << detail::html_escape(f.text) << "\n<ul>\n";
        for (const InferenceLink& link : tree.links) {
            if (link.factum_id != f.id) continue;
            linked_evidence.insert(link.evidence_id);
            const EvidenceItem* e = nullptr;
            for (const EvidenceItem& candidate : tree.evidence)
                if (candidate.id == link.evidence_id) {
                    e = &candidate;
                    break;
                }
            os << "<li class=\"evidence\">" << detail::html_escape(link.evidence_id) << ": "
               << detail::html_escape(e ? e->text : "?") << "\n<ul>\n";
            if (link.experiences.empty()) {
                os << "<li class=\"none\">(no experience)</li>\n";
            } else {
                for (const std::string& exp : link.experiences)
                    os << "<li class=\"experience\">" << detail::html_escape(exp) << "</li>\n";
            }
            os << "</ul>\n</li>\n";
        }
        os << "</ul>\n</li>\n";
    }
    bool any_unlinked = false;
    for (const EvidenceItem& e : tree.evidence) {
        if (linked_evidence.count(e.id)) continue;
        if (!any_unlinked) {
            os << "<li class=\"none\">unlinked evidence\n<ul>\n";
            any_unlinked = true;
        }
        os << "<li class=\"evidence\">" << detail::html_escape(e.id) << ": "
           << detail::html_escape(e.text) << "</li>\n";
    }
    if (any_unlinked) os << "</ul>\n</li>\n";
    os << "</ul>\n</body>\n</html>\n";
    return os.str();
}

// ============================================================================
// Baseline pipeline
// ============================================================================

struct CaseFailure {
    std::string case_id;
    std::string error;

    bool operator==(const CaseFailure&) const = default;
};

struct BaselineRunResult {
    std::vector<corpus::PredictionRecord> predictions;  // in split order, failures omitted
    std::vector<CaseFailure> failures;
};

namespace detail {

/// Sends the request and parses the first JSON object of the reply,
/// re-prompting with the error up to `retries` extra times.
inline json complete_json(llm::Backend& backend, llm::ChatRequest request, std::size_t retries,
                          const std::string& contract_hint) {
    std::string last_error;
    for (std::size_t attempt = 0; attempt <= retries; ++attempt) {
        const std::string raw = backend.complete(request);
        try {
            return toolkits::detail::parse_json_object(raw);
        } catch (const agent::ParseError& e) {
            last_error = e.what();
            request.messages.push_back(llm::Message{llm::Role::Assistant, raw});
            request.messages.push_back(
                llm::Message{llm::Role::User, std::string("That response could not be used: ") +
                                                  e.what() + ". Respond again as " +
                                                  contract_hint});
        }
    }
    throw agent::ParseError("baseline prompt failed after retries: " + last_error);
}

/// Deterministic few-shot block: the `count` lexicographically lowest case
/// ids of the train split, rendered as input/output exemplars for one of the
/// three baseline sub-tasks ("facts", "evidence", "experience").
inline std::string few_shot_block(const corpus::DatasetSplit* train, std::size_t count,
                                  const std::string& sub_task) {
    if (!train || count == 0) return "(no examples)";
    std::vector<const corpus::CaseRecord*> cases;
    for (const auto& c : train->cases) cases.push_back(&c);
    std::sort(cases.begin(), cases.end(),
              [](const corpus::CaseRecord* a, const corpus::CaseRecord* b) {
                  return a->case_id < b->case_id;
              });
    if (cases.size() > count) cases.resize(count);

    std::ostringstream os;
    os << "Examples:\n";
    for (const corpus::CaseRecord* c : cases) {
        const ReasoningTree& tree = c->gold;
        os << "Input:\n" << c->description << "\nOutput:\n";
        if (sub_task == "facts") {
            json interims = json::array();
            const Factum* ultimate = nullptr;
            for (const auto& f : tree.facta) {
                if (f.kind == FactumKind::Interim)
                    interims.push_back(f.text);
                else
                    ultimate = &f;
            }
            os << json{{"interim_probanda", std::move(interims)},
                       {"ultimate_probandum", ultimate ? json(ultimate->text) : json()}}
                      .dump();
        } else if (sub_task == "evidence") {
            std::vector<const Factum*> interims;
            for (const auto& f : tree.facta)
                if (f.kind == FactumKind::Interim) interims.push_back(&f);
            json evidence = json::array();
            std::map<std::string, std::size_t> evidence_index;
            for (const auto& e : tree.evidence) {
                evidence_index[e.id] = evidence.size() + 1;
                evidence.push_back(e.text);
            }
            json links = json::array();
            for (const auto& l : lawreason::detail::sorted_links(tree)) {
                std::size_t factum_index = 0;
                for (std::size_t i = 0; i < interims.size(); ++i)
                    if (interims[i]->id == l->factum_id) factum_index = i + 1;
                if (factum_index == 0) continue;  // link to the ultimate: not part of this task
                links.push_back(json{{"factum_index", factum_index},
                                     {"evidence_index", evidence_index[l->evidence_id]}});
            }
            os << json{{"evidence", std::move(evidence)}, {"links", std::move(links)}}.dump();
        } else {  // experience
            json experiences = json::array();
            std::size_t link_index = 0;
            for (const auto& l : lawreason::detail::sorted_links(tree)) {
                ++link_index;
                for (const auto& exp : l->experiences)
                    experiences.push_back(json{{"link_index", link_index}, {"experience", exp}});
            }
            os << json{{"experiences", std::move(experiences)}}.dump();
        }
        os << '\n';
    }
    return os.str();
}

struct BaselineAccumulator {
    std::vector<toolkits::ProposedText> interims;  // deduplicated, in first-seen order
    std::optional<std::string> ultimate;
    std::vector<toolkits::ProposedText> evidence;
    // links by (interim index, evidence index) into the vectors above
    std::vector<std::pair<std::size_t, std::size_t>> links;
    std::vector<std::vector<std::string>> link_experiences;  // parallel to links
    std::vector<std::string> notes;

    std::map<std::string, std::size_t> interim_by_norm;
    std::map<std::string, std::size_t> evidence_by_norm;

    std::size_t add_interim(toolkits::ProposedText p) {
        const std::string key = text::normalize(p.text);
        const auto it = interim_by_norm.find(key);
        if (it != interim_by_norm.end()) return it->second;
        interim_by_norm.emplace(key, interims.size());
        interims.push_back(std::move(p));
        return interims.size() - 1;
    }

    std::size_t add_evidence(toolkits::ProposedText p) {
        const std::string key = text::normalize(p.text);
        const auto it = evidence_by_norm.find(key);
        if (it != evidence_by_norm.end()) return it->second;
        evidence_by_norm.emplace(key, evidence.size());
        evidence.push_back(std::move(p));
        return evidence.size() - 1;
    }

    void add_link(std::size_t interim_index, std::size_t evidence_index) {
        for (const auto& [f, e] : links)
            if (f == interim_index && e == evidence_index) return;
        links.emplace_back(interim_index, evidence_index);
        link_experiences.emplace_back();
    }
};

}  // namespace detail

/// Builds one case's reasoning tree through the three fixed prompts: facts
/// (interim probanda + ultimate probandum) per fragment, evidence + links per
/// fragment, then experiences over the collected links. Throws on parse
/// failure or an invalid assembled tree; the split-level runner records such
/// failures and continues.
inline corpus::PredictionRecord run_baseline_case(const corpus::CaseRecord& record,
                                                  const RunConfig& config, llm::Backend& backend,
                                                  const corpus::DatasetSplit* train,
                                                  const prompts::PromptLibrary& library) {
    const std::vector<corpus::Fragment> fragments =
        corpus::fragment_case(record.description, config.fragment_max_tokens, config.tokenizer);
    detail::BaselineAccumulator acc;

    const std::string facts_shots = detail::few_shot_block(train, config.few_shot, "facts");
    const std::string evidence_shots = detail::few_shot_block(train, config.few_shot, "evidence");
    const std::string experience_shots =
        detail::few_shot_block(train, config.few_shot, "experience");

    // Stage 1: interim probanda and the ultimate probandum, per fragment.
    for (const corpus::Fragment& frag : fragments) {
        llm::ChatRequest request;
        request.params = config.params;
        request.messages.push_back(llm::Message{
            llm::Role::User, library.render("baseline_facts", {{"Few_Shot", facts_shots},
                                                               {"Case_Fragment", frag.text}})});
        const json reply = detail::complete_json(
            backend, std::move(request), config.policy.parse_retries,
            "{\"interim_probanda\": [\"...\"], \"ultimate_probandum\": \"...\"}");
        if (!reply.contains("interim_probanda") || !reply.at("interim_probanda").is_array())
            throw agent::ParseError("facts reply must carry an interim_probanda array");
        for (const auto& t : reply.at("interim_probanda")) {
            if (!t.is_string() || t.get<std::string>().empty()) continue;
            const std::string txt = t.get<std::string>();
            acc.add_interim(toolkits::ProposedText{
                txt, toolkits::detail::anchor_span(frag.text, txt, frag.span.start)});
        }
        if (!acc.ultimate && reply.contains("ultimate_probandum") &&
            reply.at("ultimate_probandum").is_string() &&
            !reply.at("ultimate_probandum").get<std::string>().empty())
            acc.ultimate = reply.at("ultimate_probandum").get<std::string>();
    }

    // Stage 2: evidence extraction and linking, per fragment against the
    // global interim list.
    std::ostringstream interim_list;
    for (std::size_t i = 0; i < acc.interims.size(); ++i)
        interim_list << (i + 1) << ". " << acc.interims[i].text << '\n';
    const std::string interim_list_text =
        acc.interims.empty() ? "(none)" : interim_list.str();
    for (const corpus::Fragment& frag : fragments) {
        llm::ChatRequest request;
        request.params = config.params;
        request.messages.push_back(llm::Message{
            llm::Role::User,
            library.render("baseline_evidence", {{"Few_Shot", evidence_shots},
                                                 {"Interim_List", interim_list_text},
                                                 {"Case_Fragment", frag.text}})});
        const json reply = detail::complete_json(
            backend, std::move(request), config.policy.parse_retries,
            "{\"evidence\": [\"...\"], \"links\": [{\"factum_index\": 1, \"evidence_index\": "
            "1}]}");
        if (!reply.contains("evidence") || !reply.at("evidence").is_array())
            throw agent::ParseError("evidence reply must carry an evidence array");
        std::vector<std::size_t> fragment_evidence;  // local 1-based -> global index
        for (const auto& t : reply.at("evidence")) {
            if (!t.is_string() || t.get<std::string>().empty()) continue;
            const std::string txt = t.get<std::string>();
            auto span = toolkits::detail::anchor_span(frag.text, txt, frag.span.start);
            if (!span)
                acc.notes.push_back("evidence not found verbatim in its fragment: " + txt);
            fragment_evidence.push_back(acc.add_evidence(toolkits::ProposedText{txt, span}));
        }
        if (reply.contains("links")) {
            if (!reply.at("links").is_array())
                throw agent::ParseError("links must be an array");
            for (const auto& jl : reply.at("links")) {
                if (!jl.is_object() || !jl.contains("factum_index") ||
                    !jl.contains("evidence_index") ||
                    !jl.at("factum_index").is_number_unsigned() ||
                    !jl.at("evidence_index").is_number_unsigned()) {
                    acc.notes.push_back("malformed link entry dropped");
                    continue;
                }
                const std::size_t fi = jl.at("factum_index").get<std::size_t>();
                const std::size_t ei = jl.at("evidence_index").get<std::size_t>();
                if (fi < 1 || fi > acc.interims.size()) {
                    acc.notes.push_back("link dropped: factum_index " + std::to_string(fi) +
                                        " out of range");
                    continue;
                }
                if (ei < 1 || ei > fragment_evidence.size()) {
                    acc.notes.push_back("link dropped: evidence_index " + std::to_string(ei) +
                                        " out of range");
                    continue;
                }
                acc.add_link(fi - 1, fragment_evidence[ei - 1]);
            }
        }
    }

    // Stage 3: experiences over the collected links (skipped when no links).
    if (!acc.links.empty()) {
        std::ostringstream link_list;
        for (std::size_t i = 0; i < acc.links.size(); ++i)
            link_list << (i + 1) << ". " << acc.interims[acc.links[i].first].text << " | "
                      << acc.evidence[acc.links[i].second].text << '\n';
        llm::ChatRequest request;
        request.params = config.params;
        request.messages.push_back(llm::Message{
            llm::Role::User,
            library.render("baseline_experience",
                           {{"Few_Shot", experience_shots}, {"Link_List", link_list.str()}})});
        const json reply = detail::complete_json(
            backend, std::move(request), config.policy.parse_retries,
            "{\"experiences\": [{\"link_index\": 1, \"experience\": \"...\"}]}");
        if (!reply.contains("experiences") || !reply.at("experiences").is_array())
            throw agent::ParseError("experience reply must carry an experiences array");
        for (const auto& je : reply.at("experiences")) {
            if (!je.is_object() || !je.contains("link_index") || !je.contains("experience") ||
                !je.at("link_index").is_number_unsigned() ||
                !je.at("experience").is_string()) {
                acc.notes.push_back("malformed experience entry dropped");
                continue;
            }
            const std::size_t li = je.at("link_index").get<std::size_t>();
            const std::string exp = je.at("experience").get<std::string>();
            if (li < 1 || li > acc.links.size()) {
                acc.notes.push_back("experience dropped: link_index " + std::to_string(li) +
                                    " out of range");
                continue;
            }
            if (exp.empty()) continue;
            auto& bucket = acc.link_experiences[li - 1];
            if (std::find(bucket.begin(), bucket.end(), exp) == bucket.end())
                bucket.push_back(exp);
        }
    }

    // Assembly.
    std::vector<Factum> facta;
    for (std::size_t i = 0; i < acc.interims.size(); ++i) {
        Factum f;
        f.id = "f" + std::to_string(i + 1);
        f.kind = FactumKind::Interim;
        f.text = acc.interims[i].text;
        f.span = acc.interims[i].span;
        facta.push_back(std::move(f));
    }
    if (!acc.ultimate)
        throw agent::ParseError("no ultimate probandum produced for case " + record.case_id);
    Factum ultimate;
    ultimate.id = "u1";
    ultimate.kind = FactumKind::Ultimate;
    ultimate.text = *acc.ultimate;
    facta.push_back(std::move(ultimate));

    std::vector<EvidenceItem> evidence;
    for (std::size_t i = 0; i < acc.evidence.size(); ++i) {
        EvidenceItem e;
        e.id = "v" + std::to_string(i + 1);
        e.text = acc.evidence[i].text;
        e.span = acc.evidence[i].span;
        evidence.push_back(std::move(e));
    }
    std::vector<InferenceLink> links;
    for (std::size_t i = 0; i < acc.links.size(); ++i)
        links.push_back(InferenceLink{"f" + std::to_string(acc.links[i].first + 1),
                                      "v" + std::to_string(acc.links[i].second + 1),
                                      acc.link_experiences[i]});
    std::vector<FactEdge> edges;
    for (std::size_t i = 0; i < acc.interims.size(); ++i)
        edges.push_back(FactEdge{"f" + std::to_string(i + 1), "u1"});

    corpus::PredictionRecord prediction;
    prediction.case_id = record.case_id;
    prediction.predicted =
        build_tree(std::move(facta), std::move(evidence), std::move(links), std::move(edges));
    prediction.provenance = json{{"method", "baseline"}, {"notes", acc.notes}};
    return prediction;
}

namespace detail {

/// Runs `work(case index)` over the split with a bounded worker pool.
/// Scripted and replay backends are pinned to one worker: response order and
/// cache writes must stay deterministic.
template <typename Work>
void for_each_case(const RunConfig& config, std::size_t case_count, Work&& work) {
    std::size_t workers = config.workers;
    if (config.backend.kind != "remote") workers = 1;
    workers = std::max<std::size_t>(1, std::min(workers, case_count));
    if (workers == 1) {
        for (std::size_t i = 0; i < case_count; ++i) work(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < case_count; i = next.fetch_add(1))
                work(i);
        });
    for (auto& t : pool) t.join();
}

}  // namespace detail

/// Runs the baseline over a split. Parse failures and invalid assembled trees
/// are recorded per case and the run continues; backend failures (network,
/// exhausted scripts) abort the run.
inline BaselineRunResult run_baseline(const RunConfig& config, const corpus::DatasetSplit& split,
                                      llm::Backend& backend,
                                      const corpus::DatasetSplit* train = nullptr) {
    config.validate();
    const prompts::PromptLibrary library = prompt_library_for(config);
    BaselineRunResult result;
    std::vector<std::optional<corpus::PredictionRecord>> slots(split.cases.size());
    std::vector<std::optional<CaseFailure>> failures(split.cases.size());
    std::exception_ptr backend_failure;
    std::mutex mu;

    detail::for_each_case(config, split.cases.size(), [&](std::size_t i) {
        {
            std::lock_guard<std::mutex> lock(mu);
            if (backend_failure) return;
        }
        try {
            auto prediction = run_baseline_case(split.cases[i], config, backend, train, library);
            std::lock_guard<std::mutex> lock(mu);
            slots[i] = std::move(prediction);
        } catch (const llm::BackendError&) {
            std::lock_guard<std::mutex> lock(mu);
            if (!backend_failure) backend_failure = std::current_exception();
        } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(mu);
            failures[i] = CaseFailure{split.cases[i].case_id, e.what()};
        }
    });
    if (backend_failure) std::rethrow_exception(backend_failure);
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i]) result.predictions.push_back(std::move(*slots[i]));
        if (failures[i]) result.failures.push_back(std::move(*failures[i]));
    }
    return result;
}

// ============================================================================
// Agent runner
// ============================================================================

struct AgentRunResult {
    std::vector<corpus::PredictionRecord> predictions;  // in split order, failures omitted
    std::vector<CaseFailure> failures;
    std::vector<std::pair<std::string, agent::Episode>> episodes;  // every case, in split order
};

/// Runs one episode per case: the agent constructs the tree through the tool
/// registry over a fresh workspace, and the finish payload becomes the
/// prediction. Episodes that end without a finished tree are recorded as
/// failures; backend errors abort the run.
inline AgentRunResult run_agent(const RunConfig& config, const corpus::DatasetSplit& split,
                                llm::Backend& backend,
                                const toolkits::LegalKnowledgeBase* knowledge = nullptr,
                                const vectorstore::VectorStore* store = nullptr,
                                const vectorstore::EmbeddingProvider* provider = nullptr) {
    config.validate();
    const prompts::PromptLibrary library = prompt_library_for(config);
    toolkits::LegalKnowledgeBase kb =
        knowledge ? *knowledge : toolkits::LegalKnowledgeBase::builtin();
    if (!config.knowledge_path.empty()) kb.merge_file(config.knowledge_path);

    std::optional<vectorstore::VectorStore> loaded_store;
    std::optional<vectorstore::HashingEmbedder> loaded_provider;
    if (!store && !config.vector_store_path.empty()) {
        loaded_store = vectorstore::VectorStore::load(config.vector_store_path);
        loaded_provider = vectorstore::HashingEmbedder(loaded_store->dimension());
        store = &*loaded_store;
        if (!provider) provider = &*loaded_provider;
    }

    toolkits::ToolkitConfig toolkit_config;
    toolkit_config.options.params = config.params;
    toolkit_config.options.parse_retries = config.policy.parse_retries;
    toolkit_config.options.library = library;

    AgentRunResult result;
    std::vector<std::optional<corpus::PredictionRecord>> slots(split.cases.size());
    std::vector<std::optional<CaseFailure>> failures(split.cases.size());
    std::vector<std::optional<agent::Episode>> episodes(split.cases.size());
    std::exception_ptr backend_failure;
    std::mutex mu;

    detail::for_each_case(config, split.cases.size(), [&](std::size_t i) {
        {
            std::lock_guard<std::mutex> lock(mu);
            if (backend_failure) return;
        }
        const corpus::CaseRecord& record = split.cases[i];
        try {
            toolkits::CaseWorkspace workspace(record.case_id, record.description,
                                              config.fragment_max_tokens);
            const agent::ToolRegistry registry = toolkits::build_registry(
                workspace, backend, kb, store, provider, toolkit_config);
            std::ostringstream goal;
            goal << "Construct the reasoning tree for case " << record.case_id
                 << ": extract the interim probanda and supporting evidence, link them, state "
                    "the experiences, generate the ultimate probandum, then finish.\nThe case "
                    "description has "
                 << workspace.fragments().size() << " fragment(s), indexed from 0.\n\nCase "
                 << record.case_id << ":\n"
                 << record.description;
            agent::Episode episode =
                agent::run_episode(goal.str(), registry, backend, config.policy, library);

            std::lock_guard<std::mutex> lock(mu);
            if (episode.status == agent::EpisodeStatus::Finished &&
                episode.outcome.is_object() && episode.outcome.contains("tree")) {
                corpus::PredictionRecord prediction;
                prediction.case_id = record.case_id;
                prediction.predicted =
                    corpus::tree_from_json(episode.outcome.at("tree"), record.case_id);
                prediction.provenance = json{{"method", "agent"},
                                             {"steps", episode.steps.size()},
                                             {"status", agent::status_name(episode.status)}};
                slots[i] = std::move(prediction);
            } else {
                failures[i] = CaseFailure{
                    record.case_id,
                    std::string("episode ended ") + agent::status_name(episode.status) +
                        (episode.abort_cause.empty() ? "" : ": " + episode.abort_cause)};
            }
            episodes[i] = std::move(episode);
        } catch (const llm::BackendError&) {
            std::lock_guard<std::mutex> lock(mu);
            if (!backend_failure) backend_failure = std::current_exception();
        } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(mu);
            failures[i] = CaseFailure{record.case_id, e.what()};
        }
    });
    if (backend_failure) std::rethrow_exception(backend_failure);
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i]) result.predictions.push_back(std::move(*slots[i]));
        if (failures[i]) result.failures.push_back(std::move(*failures[i]));
        if (episodes[i])
            result.episodes.emplace_back(split.cases[i].case_id, std::move(*episodes[i]));
    }
    return result;
}

// ============================================================================
// Report bundle
// ============================================================================

struct TreeRendering {
    std::string case_id;
    std::string text;
    std::string html;

    bool operator==(const TreeRendering&) const = default;
};

/// Everything a run hands back for inspection: the metric report, its fixed
/// text table, run metadata (config digest included), and a deterministic
/// rendering of each predicted tree.
struct ReportBundle {
    metrics::MetricReport report;
    std::string table;
    json metadata;
    std::vector<TreeRendering> renderings;

    json to_json() const {
        json renderings_json = json::array();
        for (const auto& r : renderings)
            renderings_json.push_back(
                json{{"case_id", r.case_id}, {"text", r.text}, {"html", r.html}});
        return json{{"report", metrics::report_to_json(report)},
                    {"table", table},
                    {"metadata", metadata},
                    {"renderings", std::move(renderings_json)}};
    }
};

/// Scores predictions against the gold split and assembles the report bundle.
inline ReportBundle evaluate_bundle(const corpus::DatasetSplit& gold,
                                    const std::vector<corpus::PredictionRecord>& predictions,
                                    const RunConfig& config) {
    ReportBundle bundle;
    bundle.report = metrics::evaluate(gold, predictions, config.metric);
    bundle.table = metrics::render_table(bundle.report);
    bundle.metadata = json{{"config_digest", config_digest(config)},
                           {"split", corpus::split_name_str(gold.name)},
                           {"cases", gold.cases.size()},
                           {"predictions", predictions.size()}};
    for (const auto& p : predictions)
        bundle.renderings.push_back(TreeRendering{p.case_id, render_tree_text(p.predicted),
                                                  render_tree_html(p.case_id, p.predicted)});
    return bundle;
}

}  // namespace lawreason::harness
