#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lawreason/agent.hpp"
#include "lawreason/corpus.hpp"
#include "lawreason/llm.hpp"
#include "lawreason/prompts.hpp"
#include "lawreason/schema.hpp"
#include "lawreason/text.hpp"
#include "lawreason/vectorstore.hpp"

// The concrete tools: the five fact-finding heads, knowledge search over a
// labeled vector store, the three-role checker with judge synthesis, the
// legal knowledge lookup, reflection, emotion check, pattern match, and the
// terminal finish tool — plus the per-case workspace that accumulates tool
// output into a reasoning tree and the registry builder that wires it all up.

namespace lawreason::toolkits {

using nlohmann::json;

struct ToolkitOptions {
    llm::DecodingParams params;
    std::size_t parse_retries = 2;  // extra attempts after the first failure
    prompts::PromptLibrary library = prompts::PromptLibrary::builtin();
};

namespace detail {

/// First balanced {...} chunk in the response that parses as JSON.
inline json parse_json_object(std::string_view raw) {
    for (const std::string& candidate : agent::detail::balanced_objects(raw)) {
        try {
            return json::parse(candidate);
        } catch (const json::exception&) {
            continue;
        }
    }
    throw agent::ParseError("no parseable JSON object in the response");
}

inline std::string trim_lower(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (std::isspace(static_cast<unsigned char>(s[b])) || s[b] == '"')) ++b;
    while (e > b && (std::isspace(static_cast<unsigned char>(s[e - 1])) || s[e - 1] == '"' ||
                     s[e - 1] == '.' || s[e - 1] == '!'))
        --e;
    std::string out(s.substr(b, e - b));
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace detail

// ============================================================================
// Fact finding
// ============================================================================

enum class FactFindingKind {
    InterimFinding,
    UltimateGeneration,
    EvidenceExtraction,
    EvidenceLinking,
    ExperienceGeneration,
};

inline const char* fact_finding_kind_name(FactFindingKind k) {
    switch (k) {
        case FactFindingKind::InterimFinding: return "interim_finding";
        case FactFindingKind::UltimateGeneration: return "ultimate_generation";
        case FactFindingKind::EvidenceExtraction: return "evidence_extraction";
        case FactFindingKind::EvidenceLinking: return "evidence_linking";
        case FactFindingKind::ExperienceGeneration: return "experience_generation";
    }
    return "?";
}

/// A factum or evidence sentence proposed by a tool, before the workspace
/// assigns ids. The span is absolute (into the whole case description) and
/// present only when the text was located verbatim.
struct ProposedText {
    std::string text;
    std::optional<Span> span;

    bool operator==(const ProposedText&) const = default;
};

struct ProposedLink {
    std::string factum_id;
    std::string evidence_id;

    bool operator==(const ProposedLink&) const = default;
};

struct ProposedExperience {
    std::string factum_id;
    std::string evidence_id;
    std::string experience;

    bool operator==(const ProposedExperience&) const = default;
};

/// Output of one fact-finding call; only the fields for its kind are used.
struct FactFindingResult {
    FactFindingKind kind = FactFindingKind::InterimFinding;
    std::vector<ProposedText> interim;            // InterimFinding
    std::optional<std::string> ultimate;          // UltimateGeneration
    std::vector<ProposedText> evidence;           // EvidenceExtraction
    std::vector<ProposedLink> links;              // EvidenceLinking
    std::vector<ProposedExperience> experiences;  // ExperienceGeneration
    std::vector<std::string> warnings;

    bool operator==(const FactFindingResult&) const = default;

    /// The response-contract JSON for this kind (what a model must emit and
    /// what reflection must reproduce). Spans and warnings are bookkeeping
    /// and not part of the contract.
    json contract_json() const {
        switch (kind) {
            case FactFindingKind::InterimFinding: {
                json arr = json::array();
                for (const auto& p : interim) arr.push_back(p.text);
                return json{{"interim_probanda", std::move(arr)}};
            }
            case FactFindingKind::UltimateGeneration:
                return json{{"ultimate_probandum", ultimate ? json(*ultimate) : json()}};
            case FactFindingKind::EvidenceExtraction: {
                json arr = json::array();
                for (const auto& p : evidence) arr.push_back(p.text);
                return json{{"evidence", std::move(arr)}};
            }
            case FactFindingKind::EvidenceLinking: {
                json arr = json::array();
                for (const auto& l : links)
                    arr.push_back(
                        json{{"factum_id", l.factum_id}, {"evidence_id", l.evidence_id}});
                return json{{"links", std::move(arr)}};
            }
            case FactFindingKind::ExperienceGeneration: {
                json arr = json::array();
                for (const auto& e : experiences)
                    arr.push_back(json{{"factum_id", e.factum_id},
                                       {"evidence_id", e.evidence_id},
                                       {"experience", e.experience}});
                return json{{"experiences", std::move(arr)}};
            }
        }
        return json::object();
    }
};

/// Per-call context for fact finding: free text rendered into the prompt,
/// the fragment's offset into the whole description (so re-anchored spans are
/// absolute), and the identifier sets linking/experience output is validated
/// against.
struct FactFindingContext {
    std::string context_text = "(none)";
    std::size_t fragment_offset = 0;
    std::set<std::string> known_factum_ids;
    std::set<std::string> known_evidence_ids;
};

namespace detail {

inline const char* position_principle() {
    return "Act as a meticulous fact finder: stay faithful to the wording of the "
           "record, prefer concrete statements, and never invent content absent from "
           "the fragment.";
}

inline const char* specification_for(FactFindingKind kind) {
    switch (kind) {
        case FactFindingKind::InterimFinding:
            return "List each provisional fact the fragment's evidence could prove, one "
                   "string per fact, faithful to the fragment.";
        case FactFindingKind::UltimateGeneration:
            return "State exactly one ultimate fact that would decide the case, "
                   "synthesizing the interim probanda in the context.";
        case FactFindingKind::EvidenceExtraction:
            return "Copy each usable evidence sentence verbatim from the fragment; do "
                   "not paraphrase.";
        case FactFindingKind::EvidenceLinking:
            return "Use only the factum and evidence identifiers listed in the context; "
                   "pair each evidence item with the probandum it supports.";
        case FactFindingKind::ExperienceGeneration:
            return "For each linked pair in the context, state the commonsense "
                   "experience licensing the inference; omit pairs that need none.";
    }
    return "";
}

inline const char* json_format_for(FactFindingKind kind) {
    switch (kind) {
        case FactFindingKind::InterimFinding: return "{\"interim_probanda\": [\"...\"]}";
        case FactFindingKind::UltimateGeneration: return "{\"ultimate_probandum\": \"...\"}";
        case FactFindingKind::EvidenceExtraction: return "{\"evidence\": [\"...\"]}";
        case FactFindingKind::EvidenceLinking:
            return "{\"links\": [{\"factum_id\": \"f1\", \"evidence_id\": \"v1\"}]}";
        case FactFindingKind::ExperienceGeneration:
            return "{\"experiences\": [{\"factum_id\": \"f1\", \"evidence_id\": \"v1\", "
                   "\"experience\": \"...\"}]}";
    }
    return "";
}

/// Locates `needle` verbatim in `fragment` and returns its absolute span
/// (fragment offset + codepoint position). UTF-8 byte search is safe because
/// the encoding is self-synchronizing.
inline std::optional<Span> anchor_span(std::string_view fragment, std::string_view needle,
                                       std::size_t fragment_offset) {
    if (needle.empty()) return std::nullopt;
    const std::size_t byte_pos = std::string_view(fragment).find(needle);
    if (byte_pos == std::string_view::npos) return std::nullopt;
    const std::size_t start =
        fragment_offset + text::length_codepoints(fragment.substr(0, byte_pos));
    return Span{start, start + text::length_codepoints(needle)};
}

inline std::vector<std::string> string_array(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_array())
        throw agent::ParseError(std::string("response must carry an array field \"") + key +
                                "\"");
    std::vector<std::string> out;
    for (const auto& item : j.at(key)) {
        if (!item.is_string())
            throw agent::ParseError(std::string("every element of \"") + key +
                                    "\" must be a string");
        out.push_back(item.get<std::string>());
    }
    return out;
}

}  // namespace detail

/// Parses a raw fact-finding response into the structured result for `kind`,
/// re-anchoring extracted texts to spans by exact substring search and
/// validating identifiers against the context. Violations of the JSON
/// contract raise ParseError; missing anchors and unknown identifiers degrade
/// to warnings per the tool contracts.
inline FactFindingResult parse_fact_finding_response(FactFindingKind kind, std::string_view raw,
                                                     std::string_view fragment_text,
                                                     const FactFindingContext& context) {
    const json j = detail::parse_json_object(raw);
    FactFindingResult result;
    result.kind = kind;
    switch (kind) {
        case FactFindingKind::InterimFinding: {
            for (const auto& t : detail::string_array(j, "interim_probanda")) {
                if (t.empty()) continue;
                result.interim.push_back(ProposedText{
                    t, detail::anchor_span(fragment_text, t, context.fragment_offset)});
            }
            break;
        }
        case FactFindingKind::UltimateGeneration: {
            if (!j.contains("ultimate_probandum"))
                throw agent::ParseError(
                    "response must carry an \"ultimate_probandum\" field (string or null)");
            const json& u = j.at("ultimate_probandum");
            if (u.is_string() && !u.get<std::string>().empty()) {
                result.ultimate = u.get<std::string>();
            } else if (u.is_null() || (u.is_string() && u.get<std::string>().empty())) {
                result.warnings.push_back("no ultimate probandum produced");
            } else {
                throw agent::ParseError("\"ultimate_probandum\" must be a string or null");
            }
            break;
        }
        case FactFindingKind::EvidenceExtraction: {
            for (const auto& t : detail::string_array(j, "evidence")) {
                if (t.empty()) continue;
                auto span = detail::anchor_span(fragment_text, t, context.fragment_offset);
                if (!span)
                    result.warnings.push_back("evidence sentence not found verbatim in the "
                                              "fragment; kept without a span: " +
                                              t);
                result.evidence.push_back(ProposedText{t, span});
            }
            break;
        }
        case FactFindingKind::EvidenceLinking: {
            if (!j.contains("links") || !j.at("links").is_array())
                throw agent::ParseError("response must carry an array field \"links\"");
            for (const auto& jl : j.at("links")) {
                if (!jl.is_object() || !jl.contains("factum_id") || !jl.contains("evidence_id"))
                    throw agent::ParseError(
                        "every link must be an object with factum_id and evidence_id");
                ProposedLink link{jl.at("factum_id").get<std::string>(),
                                  jl.at("evidence_id").get<std::string>()};
                if (!context.known_factum_ids.count(link.factum_id)) {
                    result.warnings.push_back("link dropped: unknown factum id \"" +
                                              link.factum_id + "\"");
                    continue;
                }
                if (!context.known_evidence_ids.count(link.evidence_id)) {
                    result.warnings.push_back("link dropped: unknown evidence id \"" +
                                              link.evidence_id + "\"");
                    continue;
                }
                result.links.push_back(std::move(link));
            }
            break;
        }
        case FactFindingKind::ExperienceGeneration: {
            if (!j.contains("experiences") || !j.at("experiences").is_array())
                throw agent::ParseError("response must carry an array field \"experiences\"");
            for (const auto& je : j.at("experiences")) {
                if (!je.is_object() || !je.contains("factum_id") || !je.contains("evidence_id") ||
                    !je.contains("experience"))
                    throw agent::ParseError("every experience must be an object with factum_id, "
                                            "evidence_id and experience");
                ProposedExperience exp{je.at("factum_id").get<std::string>(),
                                       je.at("evidence_id").get<std::string>(),
                                       je.at("experience").get<std::string>()};
                if (!context.known_factum_ids.count(exp.factum_id)) {
                    result.warnings.push_back("experience dropped: unknown factum id \"" +
                                              exp.factum_id + "\"");
                    continue;
                }
                if (!context.known_evidence_ids.count(exp.evidence_id)) {
                    result.warnings.push_back("experience dropped: unknown evidence id \"" +
                                              exp.evidence_id + "\"");
                    continue;
                }
                if (exp.experience.empty()) {
                    result.warnings.push_back("empty experience dropped");
                    continue;
                }
                result.experiences.push_back(std::move(exp));
            }
            break;
        }
    }
    return result;
}

/// Runs one fact-finding head: renders the kind's prompt over the fragment
/// and context, asks the backend, and parses the structured response,
/// re-prompting with the parse failure up to opts.parse_retries extra times.
/// An empty fragment short-circuits to an empty result without any call.
inline FactFindingResult fact_finding(FactFindingKind kind, std::string_view fragment_text,
                                      const FactFindingContext& context, llm::Backend& backend,
                                      const ToolkitOptions& opts = {}) {
    if (text::collapse_whitespace(fragment_text).empty()) {
        FactFindingResult empty;
        empty.kind = kind;
        return empty;
    }
    const std::string prompt = opts.library.render(
        fact_finding_kind_name(kind),
        {{"Position Principle", detail::position_principle()},
         {"Specification", detail::specification_for(kind)},
         {"Json-Format", detail::json_format_for(kind)},
         {"Input_Text", std::string(fragment_text)},
         {"Context", context.context_text}});

    llm::ChatRequest request;
    request.params = opts.params;
    request.messages.push_back(llm::Message{llm::Role::User, prompt});
    std::string last_error;
    for (std::size_t attempt = 0; attempt <= opts.parse_retries; ++attempt) {
        const std::string raw = backend.complete(request);
        try {
            return parse_fact_finding_response(kind, raw, fragment_text, context);
        } catch (const agent::ParseError& e) {
            last_error = e.what();
            request.messages.push_back(llm::Message{llm::Role::Assistant, raw});
            request.messages.push_back(llm::Message{
                llm::Role::User, std::string("That response could not be used: ") + e.what() +
                                     ". Respond again with exactly the required JSON format: " +
                                     detail::json_format_for(kind)});
        }
    }
    throw agent::ParseError("fact finding (" + std::string(fact_finding_kind_name(kind)) +
                            ") failed after retries: " + last_error);
}

// ============================================================================
// Knowledge search
// ============================================================================

struct KnowledgeJudgment {
    bool is_on_target = false;
    std::string rationale;
    bool low_confidence = false;
    std::vector<vectorstore::SearchHit> neighbors;

    bool operator==(const KnowledgeJudgment&) const = default;
};

/// Two-step verification: retrieve the query's nearest labeled texts, then
/// ask the backend whether the query conforms to the task objective given
/// those neighbors (stating the majority-label prior in the prompt). With an
/// empty store the judgment is made from the query alone and flagged
/// low-confidence. The verdict may be a JSON object or a bare yes/no.
inline KnowledgeJudgment knowledge_search(const vectorstore::VectorStore& store,
                                          const std::string& query, llm::Backend& backend,
                                          const vectorstore::EmbeddingProvider& provider,
                                          std::size_t k = 5, const ToolkitOptions& opts = {}) {
    KnowledgeJudgment judgment;
    std::string neighbors_text;
    if (store.empty()) {
        judgment.low_confidence = true;
        neighbors_text = "(the vector store is empty; judge from the query alone)";
    } else {
        judgment.neighbors = vectorstore::query_similar(store, query, provider, k);
        std::ostringstream os;
        for (std::size_t i = 0; i < judgment.neighbors.size(); ++i) {
            const auto& h = judgment.neighbors[i];
            os << (i + 1) << ". ["
               << (h.label ? "belongs to the interim probandums"
                           : "does not belong to the interim probandums")
               << "] " << h.text << '\n';
        }
        neighbors_text = os.str();
    }

    llm::ChatRequest request;
    request.params = opts.params;
    request.messages.push_back(llm::Message{
        llm::Role::User, opts.library.render("knowledge_search", {{"Query", query},
                                                                  {"Neighbors", neighbors_text}})});
    const std::string raw = backend.complete(request);

    try {
        const json j = detail::parse_json_object(raw);
        if (j.contains("is_on_target")) {
            const json& v = j.at("is_on_target");
            if (v.is_boolean()) {
                judgment.is_on_target = v.get<bool>();
            } else if (v.is_string()) {
                const std::string s = detail::trim_lower(v.get<std::string>());
                if (s == "yes" || s == "true")
                    judgment.is_on_target = true;
                else if (s == "no" || s == "false")
                    judgment.is_on_target = false;
                else
                    throw agent::ParseError("is_on_target must be yes/no or a boolean");
            } else {
                throw agent::ParseError("is_on_target must be yes/no or a boolean");
            }
            judgment.rationale = j.value("rationale", "");
            if (judgment.rationale.empty())
                throw agent::ParseError("knowledge judgment needs a non-empty rationale");
            return judgment;
        }
    } catch (const agent::ParseError& e) {
        // Either no JSON object or a malformed one; a bare verdict may still
        // be salvageable below, except when the object was found but invalid.
        const std::string what = e.what();
        if (what.find("no parseable JSON object") == std::string::npos) throw;
    }

    const std::string bare = detail::trim_lower(raw);
    if (bare.rfind("yes", 0) == 0)
        judgment.is_on_target = true;
    else if (bare.rfind("no", 0) == 0)
        judgment.is_on_target = false;
    else
        throw agent::ParseError("knowledge judgment must be a JSON object or start with yes/no");
    judgment.rationale = text::collapse_whitespace(raw);
    return judgment;
}

// ============================================================================
// MultiRole checker
// ============================================================================

enum class RoleKind { Lawyer, PoliceOfficer, GeneralPublic };

inline const char* role_kind_name(RoleKind r) {
    switch (r) {
        case RoleKind::Lawyer: return "lawyer";
        case RoleKind::PoliceOfficer: return "police_officer";
        case RoleKind::GeneralPublic: return "general_public";
    }
    return "?";
}

enum class Vote { Excellent, NeedsWork };

inline const char* vote_name(Vote v) { return v == Vote::Excellent ? "excellent" : "needs_work"; }

enum class Verdict { Pass, Revise };

inline const char* verdict_name(Verdict v) { return v == Verdict::Pass ? "pass" : "revise"; }

struct RoleAnalysis {
    RoleKind role = RoleKind::Lawyer;
    std::string analysis;
    Vote vote = Vote::NeedsWork;

    bool operator==(const RoleAnalysis&) const = default;
};

struct JudgeDecision {
    std::string decision;
    Verdict verdict = Verdict::Revise;
    std::size_t votes_excellent = 0;
    std::size_t votes_needs_work = 0;
    std::vector<RoleAnalysis> analyses;

    bool operator==(const JudgeDecision&) const = default;
};

/// Phase 1: three role analysts (lawyer, police officer, general public) each
/// analyze the issue and vote excellent/needs_work. Phase 2: a judge prompt
/// synthesizes the three analyses into the final decision. The judge's
/// verdict is authoritative; the votes are recorded as advisory tallies.
inline JudgeDecision multirole_check(const std::string& issue, const std::string& legal_text,
                                     const std::string& prior_result, llm::Backend& backend,
                                     const ToolkitOptions& opts = {}) {
    if (issue.empty()) throw std::invalid_argument("multirole_check: issue must be non-empty");
    const std::string full_issue =
        prior_result.empty() ? issue
                             : issue + "\n\nPrior result under review:\n" + prior_result;

    JudgeDecision decision;
    static constexpr RoleKind kRoles[] = {RoleKind::Lawyer, RoleKind::PoliceOfficer,
                                          RoleKind::GeneralPublic};
    for (RoleKind role : kRoles) {
        llm::ChatRequest request;
        request.params = opts.params;
        request.messages.push_back(llm::Message{
            llm::Role::User,
            opts.library.render(std::string("role_") + role_kind_name(role),
                                {{"Issue", full_issue}, {"Legal_text", legal_text}})});
        const json j = detail::parse_json_object(backend.complete(request));
        RoleAnalysis analysis;
        analysis.role = role;
        analysis.analysis = j.value("analysis", "");
        const std::string vote = detail::trim_lower(j.value("vote", ""));
        if (vote == "excellent")
            analysis.vote = Vote::Excellent;
        else if (vote == "needs_work")
            analysis.vote = Vote::NeedsWork;
        else
            throw agent::ParseError(std::string("role ") + role_kind_name(role) +
                                    " vote must be excellent or needs_work");
        if (analysis.vote == Vote::Excellent)
            ++decision.votes_excellent;
        else
            ++decision.votes_needs_work;
        decision.analyses.push_back(std::move(analysis));
    }

    std::ostringstream analyses_text;
    for (const auto& a : decision.analyses)
        analyses_text << role_kind_name(a.role) << " voted " << vote_name(a.vote) << ": "
                      << a.analysis << '\n';
    llm::ChatRequest request;
    request.params = opts.params;
    request.messages.push_back(llm::Message{
        llm::Role::User, opts.library.render("judge_decision",
                                             {{"Issue", full_issue},
                                              {"Analyses", analyses_text.str()}})});
    const json j = detail::parse_json_object(backend.complete(request));
    decision.decision = j.value("decision", "");
    const std::string verdict = detail::trim_lower(j.value("verdict", ""));
    if (verdict == "pass")
        decision.verdict = Verdict::Pass;
    else if (verdict == "revise")
        decision.verdict = Verdict::Revise;
    else
        throw agent::ParseError("judge verdict must be pass or revise");
    return decision;
}

// ============================================================================
// Legal knowledge
// ============================================================================

/// Key-value lookup over bundled definitions, user-extensible from a JSON
/// file of {"key": "text"}. Lookups are pure; unknown keys return an empty
/// text plus a notice.
class LegalKnowledgeBase {
public:
    struct Lookup {
        std::string text;
        std::string notice;  // set when the key is unknown

        bool operator==(const Lookup&) const = default;
    };

    static LegalKnowledgeBase builtin() {
        LegalKnowledgeBase kb;
        kb.entries_["interim_probandum"] =
            "An interim probandum is a provisional fact that evidence supports directly: "
            "the middle layer of the reasoning tree between evidence sentences and the "
            "ultimate probandum. Each interim probandum should be provable from at least "
            "one evidence sentence of the case description. Example: from a confession "
            "and a surveillance record, the interim probandum that the defendant entered "
            "the premises on the night in question.";
        kb.entries_["ultimate_probandum"] =
            "The ultimate probandum is the single root fact that decides the case "
            "outcome, synthesized from the interim probanda. A reasoning tree has "
            "exactly one. Example: the defendant committed the charged theft.";
        kb.entries_["evidence"] =
            "Evidence items are sentence-level passages copied verbatim from the case "
            "description; they are the leaves of the reasoning tree and each supports "
            "one or more interim probanda through inference links.";
        kb.entries_["experience"] =
            "An experience is the commonsense or background generalization that licenses "
            "an inference from evidence to a factum, e.g. that goods bought at a "
            "fraction of market price are plausibly known to be stolen.";
        kb.entries_["inference_link"] =
            "An inference link is a directed support relation from an evidence sentence "
            "to an interim probandum (or from an interim to the ultimate probandum), "
            "optionally carrying the experiences that justify it.";
        kb.entries_["burden_of_proof"] =
            "The burden of proof determines which party must establish a fact; in "
            "criminal matters the prosecution must prove the facts constituting the "
            "offense to the required standard.";
        kb.entries_["chain_of_evidence"] =
            "A chain of evidence is a set of mutually corroborating evidence items that "
            "together support a factum; a single uncorroborated item is usually a weak "
            "basis for a finding.";
        return kb;
    }

    /// Merges entries from a JSON object file, overriding duplicates.
    std::size_t merge_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in)
            throw corpus::FormatError("cannot open knowledge file: " + path.string());
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw corpus::FormatError("malformed knowledge file " + path.string() + ": " +
                                      e.what());
        }
        if (!j.is_object())
            throw corpus::FormatError("knowledge file must be a JSON object of key -> text");
        std::size_t merged = 0;
        for (const auto& [key, value] : j.items()) {
            if (!value.is_string())
                throw corpus::FormatError("knowledge entry \"" + key + "\" must be a string");
            entries_[key] = value.get<std::string>();
            ++merged;
        }
        return merged;
    }

    Lookup lookup(const std::string& key) const {
        const auto it = entries_.find(key);
        if (it == entries_.end())
            return Lookup{"", "no knowledge entry for key \"" + key + "\""};
        return Lookup{it->second, ""};
    }

    std::vector<std::string> keys() const {
        std::vector<std::string> out;
        out.reserve(entries_.size());
        for (const auto& [k, v] : entries_) out.push_back(k);
        return out;
    }

private:
    std::map<std::string, std::string> entries_;
};

// ============================================================================
// Reflection
// ============================================================================

struct ReflectOutcome {
    FactFindingResult result;
    bool revised = false;  // false when the original was kept
    std::vector<std::string> warnings;
};

/// Middleware over a fact-finding result: prompts for a reconsidered version
/// and requires the output to parse in the identical shape. One retry is
/// granted; after that the input is returned unchanged with a warning — the
/// tool degrades to identity rather than failing.
inline ReflectOutcome reflect(const std::string& goals, const std::string& tool_responses,
                              const FactFindingResult& input, const FactFindingContext& context,
                              std::string_view fragment_text, llm::Backend& backend,
                              const ToolkitOptions& opts = {}) {
    const std::string prompt = opts.library.render(
        "reflection", {{"Goals", goals},
                       {"Relevant_Tool_Response", tool_responses.empty() ? "(none)"
                                                                         : tool_responses},
                       {"Input_Text", input.contract_json().dump()}});
    llm::ChatRequest request;
    request.params = opts.params;
    request.messages.push_back(llm::Message{llm::Role::User, prompt});

    ReflectOutcome outcome;
    for (int attempt = 0; attempt < 2; ++attempt) {
        const std::string raw = backend.complete(request);
        try {
            outcome.result = parse_fact_finding_response(input.kind, raw, fragment_text, context);
            outcome.revised = true;
            return outcome;
        } catch (const agent::ParseError& e) {
            request.messages.push_back(llm::Message{llm::Role::Assistant, raw});
            request.messages.push_back(llm::Message{
                llm::Role::User,
                std::string("That revision could not be used: ") + e.what() +
                    ". The output must align with the format of the result to reconsider."});
        }
    }
    outcome.result = input;
    outcome.revised = false;
    outcome.warnings.push_back(
        "reflection output did not match the required shape twice; keeping the original result");
    return outcome;
}

// ============================================================================
// Emotion check and pattern match
// ============================================================================

enum class EmotionLabel { Positive, Negative, Neutral };

inline const char* emotion_label_name(EmotionLabel l) {
    switch (l) {
        case EmotionLabel::Positive: return "positive";
        case EmotionLabel::Negative: return "negative";
        case EmotionLabel::Neutral: return "neutral";
    }
    return "?";
}

/// Single-prompt tone classification with a closed label set; the response
/// may be the bare label or {"label": "..."} — anything else is a ParseError.
inline EmotionLabel emotion_check(const std::string& input_text, llm::Backend& backend,
                                  const ToolkitOptions& opts = {}) {
    llm::ChatRequest request;
    request.params = opts.params;
    request.messages.push_back(llm::Message{
        llm::Role::User, opts.library.render("emotion_check", {{"Input_Text", input_text}})});
    const std::string raw = backend.complete(request);
    std::string label;
    try {
        const json j = detail::parse_json_object(raw);
        label = detail::trim_lower(j.value("label", ""));
    } catch (const agent::ParseError&) {
        label = detail::trim_lower(raw);
    }
    if (label == "positive") return EmotionLabel::Positive;
    if (label == "negative") return EmotionLabel::Negative;
    if (label == "neutral") return EmotionLabel::Neutral;
    throw agent::ParseError("emotion label must be one of positive, negative, neutral");
}

struct PatternAnalysis {
    std::string required_knowledge;
    std::string rules;
    std::string text_features;

    bool operator==(const PatternAnalysis&) const = default;
};

/// Pre-analysis of what a goal requires from a text. An empty text returns an
/// empty analysis without calling the backend.
inline PatternAnalysis pattern_match(const std::string& goal, const std::string& input_text,
                                     llm::Backend& backend, const ToolkitOptions& opts = {}) {
    if (text::collapse_whitespace(input_text).empty()) return PatternAnalysis{};
    llm::ChatRequest request;
    request.params = opts.params;
    request.messages.push_back(llm::Message{
        llm::Role::User,
        opts.library.render("pattern_match", {{"Goals", goal}, {"Input_Text", input_text}})});
    const json j = detail::parse_json_object(backend.complete(request));
    PatternAnalysis out;
    out.required_knowledge = j.value("required_knowledge", "");
    out.rules = j.value("rules", "");
    out.text_features = j.value("text_features", "");
    return out;
}

// ============================================================================
// Case workspace
// ============================================================================

/// Accumulates accepted fact-finding results for one case and folds them into
/// a reasoning tree with stable identifiers: interim facta get f1, f2, ... in
/// first-appearance order (by normalized text), evidence gets v1, v2, ...,
/// the ultimate factum gets u1. Reflection may replace the most recent
/// accepted result; identifiers assigned by earlier results never move.
class CaseWorkspace {
public:
    CaseWorkspace(std::string case_id, std::string description,
                  std::size_t fragment_max_tokens = 1500)
        : case_id_(std::move(case_id)),
          description_(std::move(description)),
          fragments_(corpus::fragment_case(description_, fragment_max_tokens)) {}

    const std::string& case_id() const { return case_id_; }
    const std::string& description() const { return description_; }
    const std::vector<corpus::Fragment>& fragments() const { return fragments_; }

    void accept(FactFindingResult result) { log_.push_back(std::move(result)); }

    bool replace_last(FactFindingResult result) {
        if (log_.empty()) return false;
        log_.back() = std::move(result);
        return true;
    }

    const std::vector<FactFindingResult>& log() const { return log_; }
    const FactFindingResult* last_result() const { return log_.empty() ? nullptr : &log_.back(); }

    struct State {
        std::vector<Factum> interims;          // ids f1..fn
        std::optional<std::string> ultimate;   // text of u1
        std::vector<EvidenceItem> evidence;    // ids v1..vm
        std::vector<InferenceLink> links;
        std::vector<std::string> notes;
    };

    /// Folds the accepted results, in order, into the current state.
    /// Deduplication is by normalized text for facta/evidence and by id pair
    /// for links; experiences append to their link (exact duplicates merged).
    State state() const {
        State s;
        std::map<std::string, std::size_t> interim_by_text;  // normalized text -> index
        std::map<std::string, std::size_t> evidence_by_text;
        std::map<std::string, std::size_t> interim_index_by_id;
        std::map<std::string, std::size_t> evidence_index_by_id;
        std::set<std::pair<std::string, std::string>> link_keys;

        auto add_interim = [&](const ProposedText& p) {
            const std::string key = text::normalize(p.text);
            if (key.empty()) return;
            const auto it = interim_by_text.find(key);
            if (it != interim_by_text.end()) return;
            Factum f;
            f.id = "f" + std::to_string(s.interims.size() + 1);
            f.kind = FactumKind::Interim;
            f.text = p.text;
            f.span = p.span;
            interim_by_text.emplace(key, s.interims.size());
            interim_index_by_id.emplace(f.id, s.interims.size());
            s.interims.push_back(std::move(f));
        };
        auto add_evidence = [&](const ProposedText& p) {
            const std::string key = text::normalize(p.text);
            if (key.empty()) return;
            const auto it = evidence_by_text.find(key);
            if (it != evidence_by_text.end()) return;
            EvidenceItem v;
            v.id = "v" + std::to_string(s.evidence.size() + 1);
            v.text = p.text;
            v.span = p.span;
            evidence_by_text.emplace(key, s.evidence.size());
            evidence_index_by_id.emplace(v.id, s.evidence.size());
            s.evidence.push_back(std::move(v));
        };
        auto find_link = [&](const std::string& fid, const std::string& vid) -> InferenceLink* {
            for (auto& l : s.links)
                if (l.factum_id == fid && l.evidence_id == vid) return &l;
            return nullptr;
        };

        for (const FactFindingResult& r : log_) {
            switch (r.kind) {
                case FactFindingKind::InterimFinding:
                    for (const auto& p : r.interim) add_interim(p);
                    break;
                case FactFindingKind::UltimateGeneration:
                    if (r.ultimate) {
                        if (!s.ultimate)
                            s.ultimate = *r.ultimate;
                        else if (*s.ultimate != *r.ultimate)
                            s.notes.push_back(
                                "additional ultimate probandum ignored (first one kept)");
                    }
                    break;
                case FactFindingKind::EvidenceExtraction:
                    for (const auto& p : r.evidence) add_evidence(p);
                    break;
                case FactFindingKind::EvidenceLinking:
                    for (const auto& l : r.links) {
                        if (!interim_index_by_id.count(l.factum_id)) {
                            s.notes.push_back("link skipped: no interim factum with id \"" +
                                              l.factum_id + "\"");
                            continue;
                        }
                        if (!evidence_index_by_id.count(l.evidence_id)) {
                            s.notes.push_back("link skipped: no evidence with id \"" +
                                              l.evidence_id + "\"");
                            continue;
                        }
                        if (!link_keys.emplace(l.factum_id, l.evidence_id).second) continue;
                        s.links.push_back(InferenceLink{l.factum_id, l.evidence_id, {}});
                    }
                    break;
                case FactFindingKind::ExperienceGeneration:
                    for (const auto& e : r.experiences) {
                        if (!interim_index_by_id.count(e.factum_id) ||
                            !evidence_index_by_id.count(e.evidence_id)) {
                            s.notes.push_back("experience skipped: unknown link endpoint (" +
                                              e.factum_id + ", " + e.evidence_id + ")");
                            continue;
                        }
                        InferenceLink* link = find_link(e.factum_id, e.evidence_id);
                        if (!link) {
                            // Charitable: an experience for a not-yet-recorded
                            // link creates the link.
                            link_keys.emplace(e.factum_id, e.evidence_id);
                            s.links.push_back(InferenceLink{e.factum_id, e.evidence_id, {}});
                            link = &s.links.back();
                        }
                        if (std::find(link->experiences.begin(), link->experiences.end(),
                                      e.experience) == link->experiences.end())
                            link->experiences.push_back(e.experience);
                    }
                    break;
            }
        }
        return s;
    }

    /// Assembles and validates the tree from the current state. Throws
    /// InvalidTree when the state cannot form one (no ultimate probandum, for
    /// instance).
    ReasoningTree build_tree() const {
        const State s = state();
        std::vector<Factum> facta = s.interims;
        if (s.ultimate) {
            Factum u;
            u.id = "u1";
            u.kind = FactumKind::Ultimate;
            u.text = *s.ultimate;
            facta.push_back(std::move(u));
        }
        // Without an ultimate probandum there is nothing to attach the interim
        // facta to; leave the edges out so validation reports the missing root
        // rather than dangling references.
        std::vector<FactEdge> edges;
        if (s.ultimate)
            for (const auto& f : s.interims) edges.push_back(FactEdge{f.id, "u1"});
        return lawreason::build_tree(std::move(facta), s.evidence, s.links, std::move(edges));
    }

private:
    std::string case_id_;
    std::string description_;
    std::vector<corpus::Fragment> fragments_;
    std::vector<FactFindingResult> log_;
};

// ============================================================================
// Registry builder
// ============================================================================

struct ToolkitConfig {
    ToolkitOptions options;
    std::size_t knowledge_k = 5;
    std::string default_legal_topic = "interim_probandum";
};

namespace detail {

inline json proposed_texts_json(const std::vector<ProposedText>& items,
                                const std::vector<std::string>& ids) {
    json arr = json::array();
    for (std::size_t i = 0; i < items.size(); ++i) {
        json j{{"text", items[i].text}};
        if (i < ids.size()) j["id"] = ids[i];
        if (items[i].span)
            j["span"] = json{{"start", items[i].span->start}, {"end", items[i].span->end}};
        arr.push_back(std::move(j));
    }
    return arr;
}

inline std::string numbered_interims(const CaseWorkspace::State& state) {
    std::ostringstream os;
    if (state.interims.empty()) return "(no interim probanda recorded yet)";
    for (const auto& f : state.interims) os << f.id << ": " << f.text << '\n';
    return os.str();
}

inline std::string numbered_evidence(const CaseWorkspace::State& state) {
    std::ostringstream os;
    if (state.evidence.empty()) return "(no evidence recorded yet)";
    for (const auto& v : state.evidence) os << v.id << ": " << v.text << '\n';
    return os.str();
}

inline std::string numbered_links(const CaseWorkspace& ws, const CaseWorkspace::State& state) {
    if (state.links.empty()) return "(no links recorded yet)";
    std::ostringstream os;
    auto text_of_factum = [&](const std::string& id) -> const std::string& {
        for (const auto& f : state.interims)
            if (f.id == id) return f.text;
        static const std::string unknown = "?";
        return unknown;
    };
    auto text_of_evidence = [&](const std::string& id) -> const std::string& {
        for (const auto& v : state.evidence)
            if (v.id == id) return v.text;
        static const std::string unknown = "?";
        return unknown;
    };
    (void)ws;
    for (const auto& l : state.links)
        os << l.factum_id << " <- " << l.evidence_id << ": " << text_of_factum(l.factum_id)
           << " | " << text_of_evidence(l.evidence_id) << '\n';
    return os.str();
}

}  // namespace detail

/// Builds the full tool registry over a case workspace. The returned handlers
/// hold references to every argument, which must outlive the registry. The
/// vector store and provider may be null, in which case knowledge search runs
/// in its degraded low-confidence mode over an empty store.
inline agent::ToolRegistry build_registry(CaseWorkspace& workspace, llm::Backend& backend,
                                          const LegalKnowledgeBase& knowledge,
                                          const vectorstore::VectorStore* store,
                                          const vectorstore::EmbeddingProvider* provider,
                                          const ToolkitConfig& config = {}) {
    agent::ToolRegistry registry;
    // The handlers outlive this call, so they own a copy of the configuration
    // (the reference parameters — workspace, backend, knowledge, store,
    // provider — must be kept alive by the caller per the contract above).
    const auto cfg = std::make_shared<const ToolkitConfig>(config);

    auto fragment_of = [&workspace](const json& args) -> const corpus::Fragment& {
        std::size_t index = 0;
        if (args.contains("fragment_index")) {
            if (!args.at("fragment_index").is_number_unsigned())
                throw std::invalid_argument("fragment_index must be a non-negative integer");
            index = args.at("fragment_index").get<std::size_t>();
        }
        if (index >= workspace.fragments().size())
            throw std::out_of_range("fragment_index " + std::to_string(index) +
                                    " out of range (case has " +
                                    std::to_string(workspace.fragments().size()) + " fragments)");
        return workspace.fragments()[index];
    };

    registry.add(
        agent::ToolDescriptor{
            "find_interim_probanda",
            "Extracts the provisional facts (interim probanda) provable from one case "
            "fragment and records them in the workspace.",
            {agent::ArgSpec{"fragment_index",
                            "0-based fragment to analyze (default 0)", false}},
            agent::ToolCategory::FactFinding},
        [&workspace, &backend, cfg, fragment_of](const json& args) -> agent::ToolResult {
            const corpus::Fragment& frag = fragment_of(args);
            FactFindingContext context;
            context.fragment_offset = frag.span.start;
            FactFindingResult result = fact_finding(FactFindingKind::InterimFinding, frag.text,
                                                    context, backend, cfg->options);
            workspace.accept(result);
            const auto state = workspace.state();
            std::vector<std::string> ids;
            for (const auto& p : result.interim) {
                const std::string key = text::normalize(p.text);
                for (const auto& f : state.interims)
                    if (text::normalize(f.text) == key) {
                        ids.push_back(f.id);
                        break;
                    }
            }
            agent::ToolResult out;
            out.payload = json{{"interim_probanda", detail::proposed_texts_json(result.interim, ids)},
                               {"warnings", result.warnings}};
            return out;
        });

    registry.add(
        agent::ToolDescriptor{
            "generate_ultimate_probandum",
            "Synthesizes the single ultimate probandum from the case description and "
            "the interim probanda recorded so far.",
            {},
            agent::ToolCategory::FactFinding},
        [&workspace, &backend, cfg](const json&) -> agent::ToolResult {
            FactFindingContext context;
            context.context_text = detail::numbered_interims(workspace.state());
            FactFindingResult result = fact_finding(FactFindingKind::UltimateGeneration,
                                                    workspace.description(), context, backend,
                                                    cfg->options);
            workspace.accept(result);
            agent::ToolResult out;
            out.payload = json{{"ultimate_probandum",
                                result.ultimate ? json(*result.ultimate) : json()},
                               {"warnings", result.warnings}};
            return out;
        });

    registry.add(
        agent::ToolDescriptor{
            "extract_evidence",
            "Copies evidence sentences verbatim out of one case fragment, anchors them "
            "to spans, and records them in the workspace.",
            {agent::ArgSpec{"fragment_index",
                            "0-based fragment to analyze (default 0)", false}},
            agent::ToolCategory::FactFinding},
        [&workspace, &backend, cfg, fragment_of](const json& args) -> agent::ToolResult {
            const corpus::Fragment& frag = fragment_of(args);
            FactFindingContext context;
            context.fragment_offset = frag.span.start;
            FactFindingResult result = fact_finding(FactFindingKind::EvidenceExtraction,
                                                    frag.text, context, backend, cfg->options);
            workspace.accept(result);
            const auto state = workspace.state();
            std::vector<std::string> ids;
            for (const auto& p : result.evidence) {
                const std::string key = text::normalize(p.text);
                for (const auto& v : state.evidence)
                    if (text::normalize(v.text) == key) {
                        ids.push_back(v.id);
                        break;
                    }
            }
            agent::ToolResult out;
            out.payload = json{{"evidence", detail::proposed_texts_json(result.evidence, ids)},
                               {"warnings", result.warnings}};
            return out;
        });

    registry.add(
        agent::ToolDescriptor{
            "link_evidence",
            "Pairs recorded evidence with the interim probanda it supports, using the "
            "workspace identifiers.",
            {},
            agent::ToolCategory::FactFinding},
        [&workspace, &backend, cfg](const json&) -> agent::ToolResult {
            const auto state = workspace.state();
            FactFindingContext context;
            context.context_text = "Interim probanda:\n" + detail::numbered_interims(state) +
                                   "\nEvidence:\n" + detail::numbered_evidence(state);
            for (const auto& f : state.interims) context.known_factum_ids.insert(f.id);
            for (const auto& v : state.evidence) context.known_evidence_ids.insert(v.id);
            FactFindingResult result = fact_finding(FactFindingKind::EvidenceLinking,
                                                    workspace.description(), context, backend,
                                                    cfg->options);
            workspace.accept(result);
            json links = json::array();
            for (const auto& l : result.links)
                links.push_back(json{{"factum_id", l.factum_id}, {"evidence_id", l.evidence_id}});
            agent::ToolResult out;
            out.payload = json{{"links", std::move(links)}, {"warnings", result.warnings}};
            return out;
        });

    registry.add(
        agent::ToolDescriptor{
            "generate_experiences",
            "States the commonsense experience licensing each recorded fact-evidence "
            "link.",
            {},
            agent::ToolCategory::FactFinding},
        [&workspace, &backend, cfg](const json&) -> agent::ToolResult {
            const auto state = workspace.state();
            FactFindingContext context;
            context.context_text = "Links:\n" + detail::numbered_links(workspace, state);
            for (const auto& f : state.interims) context.known_factum_ids.insert(f.id);
            for (const auto& v : state.evidence) context.known_evidence_ids.insert(v.id);
            FactFindingResult result = fact_finding(FactFindingKind::ExperienceGeneration,
                                                    workspace.description(), context, backend,
                                                    cfg->options);
            workspace.accept(result);
            json experiences = json::array();
            for (const auto& e : result.experiences)
                experiences.push_back(json{{"factum_id", e.factum_id},
                                           {"evidence_id", e.evidence_id},
                                           {"experience", e.experience}});
            agent::ToolResult out;
            out.payload = json{{"experiences", std::move(experiences)},
                               {"warnings", result.warnings}};
            return out;
        });

    registry.add(
        agent::ToolDescriptor{
            "knowledge_search",
            "Retrieves the texts most similar to a query from the labeled vector store "
            "and judges whether the query conforms to the task objective.",
            {agent::ArgSpec{"query", "the text to verify", true}},
            agent::ToolCategory::Knowledge},
        [&backend, store, provider, cfg](const json& args) -> agent::ToolResult {
            static const vectorstore::VectorStore empty_store({}, 1, "absent");
            static const vectorstore::HashingEmbedder fallback_provider(1);
            const vectorstore::VectorStore& s = store ? *store : empty_store;
            const vectorstore::EmbeddingProvider& p =
                provider ? *provider
                         : static_cast<const vectorstore::EmbeddingProvider&>(fallback_provider);
            const KnowledgeJudgment judgment =
                knowledge_search(s, args.at("query").get<std::string>(), backend, p,
                                 cfg->knowledge_k, cfg->options);
            json neighbors = json::array();
            for (const auto& h : judgment.neighbors)
                neighbors.push_back(
                    json{{"text", h.text}, {"label", h.label}, {"cosine", h.cosine}});
            agent::ToolResult out;
            out.payload = json{{"is_on_target", judgment.is_on_target},
                               {"rationale", judgment.rationale},
                               {"low_confidence", judgment.low_confidence},
                               {"neighbors", std::move(neighbors)}};
            return out;
        });

    registry.add(
        agent::ToolDescriptor{
            "multirole_check",
            "Has a lawyer, a police officer, and a member of the general public each "
            "analyze and vote on the quality of a completed piece of work, then a judge "
            "synthesize the final pass/revise decision.",
            {agent::ArgSpec{"issue", "what to review", true},
             agent::ArgSpec{"prior_result", "the result under review", false},
             agent::ArgSpec{"legal_topic",
                            "knowledge-base key for the legal text to consult", false}},
            agent::ToolCategory::Checker},
        [&backend, &knowledge, cfg](const json& args) -> agent::ToolResult {
            const std::string topic = args.contains("legal_topic")
                                          ? args.at("legal_topic").get<std::string>()
                                          : cfg->default_legal_topic;
            const JudgeDecision decision = multirole_check(
                args.at("issue").get<std::string>(), knowledge.lookup(topic).text,
                args.contains("prior_result") ? args.at("prior_result").get<std::string>() : "",
                backend, cfg->options);
            json analyses = json::array();
            for (const auto& a : decision.analyses)
                analyses.push_back(json{{"role", role_kind_name(a.role)},
                                        {"vote", vote_name(a.vote)},
                                        {"analysis", a.analysis}});
            agent::ToolResult out;
            out.payload = json{{"verdict", verdict_name(decision.verdict)},
                               {"decision", decision.decision},
                               {"votes",
                                json{{"excellent", decision.votes_excellent},
                                     {"needs_work", decision.votes_needs_work}}},
                               {"analyses", std::move(analyses)}};
            return out;
        });

    registry.add(
        agent::ToolDescriptor{
            "legal_knowledge",
            "Looks up the definition, provisions, or examples recorded for a legal "
            "topic key.",
            {agent::ArgSpec{"topic", "knowledge-base key", true}},
            agent::ToolCategory::Auxiliary},
        [&knowledge](const json& args) -> agent::ToolResult {
            const std::string topic = args.at("topic").get<std::string>();
            const LegalKnowledgeBase::Lookup found = knowledge.lookup(topic);
            agent::ToolResult out;
            out.payload = json{{"topic", topic}, {"text", found.text}};
            if (!found.notice.empty()) out.payload["notice"] = found.notice;
            return out;
        });

    registry.add(
        agent::ToolDescriptor{
            "reflect",
            "Reconsiders the most recent fact-finding result and replaces it with the "
            "revised version.",
            {agent::ArgSpec{"notes", "what to pay attention to", false}},
            agent::ToolCategory::Reflection},
        [&workspace, &backend, cfg](const json& args) -> agent::ToolResult {
            const FactFindingResult* last = workspace.last_result();
            if (!last) {
                agent::ToolResult out;
                out.ok = false;
                out.error = "nothing to reflect on yet: no fact-finding result recorded";
                return out;
            }
            FactFindingContext context;
            const auto state = workspace.state();
            for (const auto& f : state.interims) context.known_factum_ids.insert(f.id);
            for (const auto& v : state.evidence) context.known_evidence_ids.insert(v.id);
            const std::string notes =
                args.contains("notes") ? args.at("notes").get<std::string>() : "";
            const ReflectOutcome outcome =
                reflect("Construct the reasoning tree for case " + workspace.case_id() +
                            (notes.empty() ? "" : ". Attend to: " + notes),
                        "", *last, context, workspace.description(), backend, cfg->options);
            if (outcome.revised) workspace.replace_last(outcome.result);
            agent::ToolResult out;
            out.payload = json{{"revised", outcome.revised},
                               {"result", outcome.result.contract_json()},
                               {"warnings", outcome.warnings}};
            return out;
        });

    registry.add(
        agent::ToolDescriptor{
            "emotion_check",
            "Classifies the emotional tone of a text as positive, negative, or "
            "neutral.",
            {agent::ArgSpec{"text", "the text to classify", true}},
            agent::ToolCategory::Auxiliary},
        [&backend, cfg](const json& args) -> agent::ToolResult {
            const EmotionLabel label =
                emotion_check(args.at("text").get<std::string>(), backend, cfg->options);
            agent::ToolResult out;
            out.payload = json{{"label", emotion_label_name(label)}};
            return out;
        });

    registry.add(
        agent::ToolDescriptor{
            "pattern_match",
            "Pre-analyzes what knowledge, rules, and text features the goal requires "
            "from a text.",
            {agent::ArgSpec{"text", "the text to pre-analyze", false}},
            agent::ToolCategory::Auxiliary},
        [&workspace, &backend, cfg](const json& args) -> agent::ToolResult {
            const std::string input =
                args.contains("text") ? args.at("text").get<std::string>() : "";
            const PatternAnalysis analysis = pattern_match(
                "Construct the reasoning tree for case " + workspace.case_id(), input, backend,
                cfg->options);
            agent::ToolResult out;
            out.payload = json{{"required_knowledge", analysis.required_knowledge},
                               {"rules", analysis.rules},
                               {"text_features", analysis.text_features}};
            return out;
        });

    registry.add(
        agent::ToolDescriptor{
            "finish",
            "Concludes the task. The workspace must hold a complete, valid reasoning "
            "tree (or one must be passed as the payload argument); otherwise the call "
            "is rejected and the episode continues.",
            {agent::ArgSpec{"payload", "a complete reasoning tree object to submit "
                                       "instead of the workspace tree", false}},
            agent::ToolCategory::Terminal},
        [&workspace](const json& args) -> agent::ToolResult {
            agent::ToolResult out;
            try {
                ReasoningTree tree;
                if (args.contains("payload")) {
                    tree = corpus::tree_from_json(args.at("payload"), "finish payload");
                    ValidationReport report = validate_tree(tree);
                    if (!report.ok()) throw InvalidTree(std::move(report));
                } else {
                    tree = workspace.build_tree();
                }
                out.payload = json{{"case_id", workspace.case_id()},
                                   {"tree", corpus::tree_to_json(tree)}};
                return out;
            } catch (const std::exception& e) {
                out.ok = false;
                out.error = std::string("finish rejected: ") + e.what();
                return out;
            }
        });

    return registry;
}

}  // namespace lawreason::toolkits
