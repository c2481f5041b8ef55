#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lawreason/detail/sha256.hpp"
#include "lawreason/llm.hpp"
#include "lawreason/prompts.hpp"

// The tool-using episode loop: render a tool manual and transcript, ask the
// backend for a thought + tool call as JSON, parse and policy-check it,
// dispatch the tool, and repeat until the terminal tool fires or a budget
// runs out. Enforcement of the knowledge/reflection cadence is hard: an
// inadmissible call is rejected and the model re-prompted.

namespace lawreason::agent {

using nlohmann::json;

// ============================================================================
// Tools
// ============================================================================

enum class ToolCategory { FactFinding, Knowledge, Checker, Reflection, Auxiliary, Terminal };

inline const char* category_name(ToolCategory c) {
    switch (c) {
        case ToolCategory::FactFinding: return "fact-finding";
        case ToolCategory::Knowledge: return "knowledge";
        case ToolCategory::Checker: return "checker";
        case ToolCategory::Reflection: return "reflection";
        case ToolCategory::Auxiliary: return "auxiliary";
        case ToolCategory::Terminal: return "terminal";
    }
    return "?";
}

inline std::optional<ToolCategory> category_from_name(std::string_view s) {
    if (s == "fact-finding") return ToolCategory::FactFinding;
    if (s == "knowledge") return ToolCategory::Knowledge;
    if (s == "checker") return ToolCategory::Checker;
    if (s == "reflection") return ToolCategory::Reflection;
    if (s == "auxiliary") return ToolCategory::Auxiliary;
    if (s == "terminal") return ToolCategory::Terminal;
    return std::nullopt;
}

struct ArgSpec {
    std::string name;
    std::string description;
    bool required = true;

    bool operator==(const ArgSpec&) const = default;
};

struct ToolDescriptor {
    std::string name;
    std::string description;
    std::vector<ArgSpec> args;
    ToolCategory category = ToolCategory::Auxiliary;

    bool operator==(const ToolDescriptor&) const = default;
};

struct ToolResult {
    bool ok = true;
    json payload = json();     // tool-specific content
    std::string error;         // set when !ok

    bool operator==(const ToolResult&) const = default;

    json to_json() const { return json{{"ok", ok}, {"payload", payload}, {"error", error}}; }
    static ToolResult from_json(const json& j) {
        ToolResult r;
        r.ok = j.at("ok").get<bool>();
        r.payload = j.at("payload");
        r.error = j.at("error").get<std::string>();
        return r;
    }
};

using ToolHandler = std::function<ToolResult(const json& args)>;

class ToolRegistry {
public:
    void add(ToolDescriptor descriptor, ToolHandler handler) {
        // Copy the name first: the emplace below moves the descriptor, and the
        // order of argument evaluation is unspecified.
        const std::string name = descriptor.name;
        if (find(name)) throw std::invalid_argument("duplicate tool name \"" + name + "\"");
        order_.push_back(name);
        tools_.emplace(name, Registered{std::move(descriptor), std::move(handler)});
    }

    bool has(const std::string& name) const { return tools_.count(name) > 0; }

    const ToolDescriptor* find(const std::string& name) const {
        const auto it = tools_.find(name);
        return it == tools_.end() ? nullptr : &it->second.descriptor;
    }

    /// Descriptors in registration order.
    std::vector<const ToolDescriptor*> descriptors() const {
        std::vector<const ToolDescriptor*> out;
        out.reserve(order_.size());
        for (const auto& name : order_) out.push_back(&tools_.at(name).descriptor);
        return out;
    }

    /// Runs the tool; whatever its handler throws becomes a failed ToolResult
    /// instead of escaping into the episode loop.
    ToolResult invoke(const std::string& name, const json& args) const {
        const auto it = tools_.find(name);
        if (it == tools_.end()) throw std::out_of_range("no such tool \"" + name + "\"");
        try {
            return it->second.handler(args);
        } catch (const std::exception& e) {
            ToolResult r;
            r.ok = false;
            r.error = e.what();
            return r;
        }
    }

private:
    struct Registered {
        ToolDescriptor descriptor;
        ToolHandler handler;
    };
    std::vector<std::string> order_;
    std::map<std::string, Registered> tools_;
};

// ============================================================================
// Thought parsing
// ============================================================================

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnknownTool : public ParseError {
public:
    using ParseError::ParseError;
};

class ArgsMismatch : public ParseError {
public:
    using ParseError::ParseError;
};

struct Thinking {
    std::string text;
    std::string reasoning;
    std::string plan;

    bool operator==(const Thinking&) const = default;
};

struct ThoughtStep {
    Thinking thinking;
    std::string tool_name;
    json tool_args = json::object();

    bool operator==(const ThoughtStep&) const = default;

    json to_json() const {
        return json{{"thinking", json{{"text", thinking.text},
                                      {"reasoning", thinking.reasoning},
                                      {"plan", thinking.plan}}},
                    {"tool", json{{"name", tool_name}, {"args", tool_args}}}};
    }
    static ThoughtStep from_json(const json& j) {
        ThoughtStep t;
        const json& th = j.at("thinking");
        t.thinking.text = th.value("text", "");
        t.thinking.reasoning = th.value("reasoning", "");
        t.thinking.plan = th.value("plan", "");
        t.tool_name = j.at("tool").at("name").get<std::string>();
        t.tool_args = j.at("tool").value("args", json::object());
        return t;
    }
};

namespace detail {

/// Every balanced {...} candidate in the raw text, in order of appearance,
/// found with string/escape awareness so braces inside JSON strings don't
/// derail the scan.
inline std::vector<std::string> balanced_objects(std::string_view raw) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < raw.size()) {
        if (raw[i] != '{') {
            ++i;
            continue;
        }
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        std::size_t j = i;
        for (; j < raw.size(); ++j) {
            const char c = raw[j];
            if (in_string) {
                if (escaped)
                    escaped = false;
                else if (c == '\\')
                    escaped = true;
                else if (c == '"')
                    in_string = false;
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                --depth;
                if (depth == 0) break;
            }
        }
        if (j < raw.size() && depth == 0) {
            out.emplace_back(raw.substr(i, j - i + 1));
            i = j + 1;  // candidates never overlap
        } else {
            ++i;  // unbalanced from here; try the next opening brace
        }
    }
    return out;
}

}  // namespace detail

/// Parses a raw model response into a ThoughtStep. The response may be a bare
/// JSON object or an object buried in prose or code fences — the first
/// balanced object that parses as JSON is used. The object must carry
/// "thinking" and "tool" fields; the tool must exist in the registry and its
/// args must satisfy the declared schema (missing required argument or an
/// undeclared argument name is a mismatch).
inline ThoughtStep parse_thought(std::string_view raw, const ToolRegistry& registry) {
    json parsed;
    bool found = false;
    for (const std::string& candidate : detail::balanced_objects(raw)) {
        try {
            parsed = json::parse(candidate);
            found = true;
            break;
        } catch (const json::exception&) {
            continue;
        }
    }
    if (!found) throw ParseError("no parseable JSON object in the response");
    if (!parsed.is_object() || !parsed.contains("thinking") || !parsed.at("thinking").is_object())
        throw ParseError("response object is missing the \"thinking\" field");
    if (!parsed.contains("tool") || !parsed.at("tool").is_object() ||
        !parsed.at("tool").contains("name") || !parsed.at("tool").at("name").is_string())
        throw ParseError("response object is missing the \"tool\" field with a name");

    ThoughtStep step;
    const json& th = parsed.at("thinking");
    step.thinking.text = th.value("text", "");
    step.thinking.reasoning = th.value("reasoning", "");
    step.thinking.plan = th.value("plan", "");
    step.tool_name = parsed.at("tool").at("name").get<std::string>();
    step.tool_args = parsed.at("tool").value("args", json::object());

    const ToolDescriptor* descriptor = registry.find(step.tool_name);
    if (!descriptor) throw UnknownTool("unknown tool \"" + step.tool_name + "\"");
    if (!step.tool_args.is_object())
        throw ArgsMismatch("tool args for \"" + step.tool_name + "\" must be an object");
    for (const ArgSpec& spec : descriptor->args)
        if (spec.required && !step.tool_args.contains(spec.name))
            throw ArgsMismatch("tool \"" + step.tool_name + "\" is missing required argument \"" +
                               spec.name + "\"");
    for (const auto& [key, value] : step.tool_args.items()) {
        const bool declared =
            std::any_of(descriptor->args.begin(), descriptor->args.end(),
                        [&](const ArgSpec& spec) { return spec.name == key; });
        if (!declared)
            throw ArgsMismatch("tool \"" + step.tool_name + "\" does not take an argument \"" +
                               key + "\"");
    }
    return step;
}

// ============================================================================
// Episodes and policy
// ============================================================================

enum class EpisodeStatus { Finished, MaxStepsExceeded, Aborted };

inline const char* status_name(EpisodeStatus s) {
    switch (s) {
        case EpisodeStatus::Finished: return "finished";
        case EpisodeStatus::MaxStepsExceeded: return "max-steps-exceeded";
        case EpisodeStatus::Aborted: return "aborted";
    }
    return "?";
}

inline std::optional<EpisodeStatus> status_from_name(std::string_view s) {
    if (s == "finished") return EpisodeStatus::Finished;
    if (s == "max-steps-exceeded") return EpisodeStatus::MaxStepsExceeded;
    if (s == "aborted") return EpisodeStatus::Aborted;
    return std::nullopt;
}

struct StepRecord {
    ThoughtStep thought;
    ToolResult result;

    bool operator==(const StepRecord&) const = default;
};

/// A model response that was not accepted as a step: unparseable output, a
/// policy-inadmissible tool call, or a rejected finish payload.
struct Rejection {
    std::size_t after_step = 0;  // number of accepted steps at rejection time
    std::string kind;            // "parse-error" | "policy-violation" | "finish-rejected"
    std::string detail;

    bool operator==(const Rejection&) const = default;
};

struct StrategyPolicy {
    std::size_t max_steps = 20;
    std::size_t knowledge_calls_before_reflection = 2;  // 1 or 2
    std::size_t parse_retries = 2;
    std::set<std::string> disabled_tools;

    void validate() const {
        if (max_steps < 1) throw std::invalid_argument("policy: max_steps must be >= 1");
        if (knowledge_calls_before_reflection < 1 || knowledge_calls_before_reflection > 2)
            throw std::invalid_argument(
                "policy: knowledge_calls_before_reflection must be 1 or 2");
    }
};

struct Episode {
    std::string goal;
    std::vector<StepRecord> steps;
    json outcome = json();  // terminal payload, or best effort on budget exhaustion
    EpisodeStatus status = EpisodeStatus::Aborted;
    std::string abort_cause;
    std::vector<Rejection> rejections;

    bool operator==(const Episode&) const = default;

    json to_json() const {
        json steps_json = json::array();
        for (const auto& s : steps)
            steps_json.push_back(
                json{{"thought", s.thought.to_json()}, {"result", s.result.to_json()}});
        json rejections_json = json::array();
        for (const auto& r : rejections)
            rejections_json.push_back(
                json{{"after_step", r.after_step}, {"kind", r.kind}, {"detail", r.detail}});
        return json{{"goal", goal},
                    {"steps", std::move(steps_json)},
                    {"outcome", outcome},
                    {"status", status_name(status)},
                    {"abort_cause", abort_cause},
                    {"rejections", std::move(rejections_json)}};
    }

    static Episode from_json(const json& j) {
        Episode e;
        e.goal = j.at("goal").get<std::string>();
        for (const auto& js : j.at("steps"))
            e.steps.push_back(StepRecord{ThoughtStep::from_json(js.at("thought")),
                                         ToolResult::from_json(js.at("result"))});
        e.outcome = j.at("outcome");
        const auto status = status_from_name(j.at("status").get<std::string>());
        if (!status) throw std::invalid_argument("unknown episode status");
        e.status = *status;
        e.abort_cause = j.at("abort_cause").get<std::string>();
        for (const auto& jr : j.at("rejections"))
            e.rejections.push_back(Rejection{jr.at("after_step").get<std::size_t>(),
                                             jr.at("kind").get<std::string>(),
                                             jr.at("detail").get<std::string>()});
        return e;
    }
};

// ============================================================================
// Manual rendering and admissibility
// ============================================================================

/// Deterministic tool manual: the thought template with the goal and one
/// block per enabled tool, in registration order.
inline std::string render_manual(const ToolRegistry& registry, const std::string& goal,
                                 const std::set<std::string>& disabled_tools = {},
                                 const prompts::PromptLibrary& library =
                                     prompts::PromptLibrary::builtin()) {
    std::ostringstream tools;
    for (const ToolDescriptor* d : registry.descriptors()) {
        if (disabled_tools.count(d->name)) continue;
        tools << "- name: " << d->name << "\n  category: " << category_name(d->category)
              << "\n  description: " << d->description << "\n  args:";
        if (d->args.empty()) {
            tools << " none";
        } else {
            for (const ArgSpec& a : d->args)
                tools << "\n    - " << a.name << (a.required ? " (required): " : " (optional): ")
                      << a.description;
        }
        tools << '\n';
    }
    return library.render("thought", {{"Goals", goal}, {"Tools", tools.str()}});
}

namespace detail {

/// Length of the trailing run of Knowledge-category steps.
inline std::size_t trailing_knowledge_run(const std::vector<StepRecord>& steps,
                                          const ToolRegistry& registry) {
    std::size_t run = 0;
    for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
        const ToolDescriptor* d = registry.find(it->thought.tool_name);
        if (d && d->category == ToolCategory::Knowledge)
            ++run;
        else
            break;
    }
    return run;
}

}  // namespace detail

/// The tool names the policy permits next: a pure function of the category
/// sequence of the accepted steps so far. After the configured number of
/// consecutive knowledge calls, only reflection (or finishing) is admissible
/// until a reflection happens.
inline std::set<std::string> admissible_tools(const Episode& episode, const ToolRegistry& registry,
                                              const StrategyPolicy& policy) {
    const bool must_reflect =
        detail::trailing_knowledge_run(episode.steps, registry) >=
        policy.knowledge_calls_before_reflection;
    std::set<std::string> out;
    for (const ToolDescriptor* d : registry.descriptors()) {
        if (policy.disabled_tools.count(d->name)) continue;
        if (must_reflect && d->category != ToolCategory::Reflection &&
            d->category != ToolCategory::Terminal)
            continue;
        out.insert(d->name);
    }
    return out;
}

// ============================================================================
// The episode loop
// ============================================================================

namespace detail {

/// Transcript of the episode so far: the most recent entries in full, older
/// ones compressed to tool name plus a result digest so the prompt stays
/// bounded.
inline std::string transcript_text(const Episode& episode, std::size_t full_entries = 5) {
    if (episode.steps.empty()) return "(no steps taken yet)\n";
    std::ostringstream os;
    const std::size_t n = episode.steps.size();
    const std::size_t first_full = n > full_entries ? n - full_entries : 0;
    for (std::size_t i = 0; i < n; ++i) {
        const StepRecord& s = episode.steps[i];
        if (i < first_full) {
            const std::string digest =
                lawreason::detail::sha256_hex(s.result.to_json().dump()).substr(0, 12);
            os << "step " << (i + 1) << ": " << s.thought.tool_name << " -> result digest "
               << digest << '\n';
        } else {
            os << "step " << (i + 1) << ":\n  thought: " << s.thought.to_json().dump()
               << "\n  result: " << s.result.to_json().dump() << '\n';
        }
    }
    return os.str();
}

}  // namespace detail

/// Runs one episode: manual + transcript -> complete -> parse -> policy check
/// -> dispatch, until the terminal tool succeeds (Finished), the step budget
/// runs out (MaxStepsExceeded, with the last successful fact-finding payload
/// as a best-effort outcome), or the model exceeds the retry budget with
/// unusable responses (Aborted). Policy enforcement is hard: an inadmissible
/// or unparseable response is recorded as a rejection and re-prompted with
/// the problem appended, and a failed finish payload is rejected the same
/// way, so the step list never contains a non-final terminal call.
inline Episode run_episode(const std::string& goal, const ToolRegistry& registry,
                           llm::Backend& backend, const StrategyPolicy& policy = {},
                           const prompts::PromptLibrary& library =
                               prompts::PromptLibrary::builtin()) {
    policy.validate();
    {
        const auto descriptors = registry.descriptors();
        const bool has_terminal =
            std::any_of(descriptors.begin(), descriptors.end(), [&](const ToolDescriptor* d) {
                return d->category == ToolCategory::Terminal &&
                       !policy.disabled_tools.count(d->name);
            });
        if (!has_terminal)
            throw std::invalid_argument("registry has no enabled terminal tool");
    }

    Episode episode;
    episode.goal = goal;
    const std::string manual = render_manual(registry, goal, policy.disabled_tools, library);

    std::string feedback;
    std::size_t consecutive_rejections = 0;
    while (episode.steps.size() < policy.max_steps) {
        std::ostringstream prompt;
        prompt << manual << "\nTranscript so far:\n" << detail::transcript_text(episode);
        if (!feedback.empty())
            prompt << "\nYour previous response was rejected: " << feedback
                   << "\nRespond again, following the contract exactly.\n";
        prompt << "\nNext step:";

        llm::ChatRequest request;
        request.messages.push_back(llm::Message{llm::Role::User, prompt.str()});
        const std::string raw = backend.complete(request);

        auto reject = [&](const std::string& kind, const std::string& detail) -> bool {
            episode.rejections.push_back(Rejection{episode.steps.size(), kind, detail});
            feedback = detail;
            ++consecutive_rejections;
            if (consecutive_rejections > policy.parse_retries) {
                episode.status = EpisodeStatus::Aborted;
                episode.abort_cause = kind + ": " + detail;
                return true;
            }
            return false;
        };

        ThoughtStep thought;
        try {
            thought = parse_thought(raw, registry);
        } catch (const ParseError& e) {
            if (reject("parse-error", e.what())) return episode;
            continue;
        }

        const std::set<std::string> admissible = admissible_tools(episode, registry, policy);
        if (!admissible.count(thought.tool_name)) {
            std::string why = "tool \"" + thought.tool_name + "\" is not admissible now";
            if (policy.disabled_tools.count(thought.tool_name))
                why += " (it is disabled for this run)";
            else
                why += " (after " + std::to_string(policy.knowledge_calls_before_reflection) +
                       " knowledge lookups you must reflect before anything else)";
            if (reject("policy-violation", why)) return episode;
            continue;
        }

        const ToolDescriptor* descriptor = registry.find(thought.tool_name);
        const ToolResult result = registry.invoke(thought.tool_name, thought.tool_args);

        if (descriptor->category == ToolCategory::Terminal) {
            if (!result.ok) {
                if (reject("finish-rejected", result.error)) return episode;
                continue;
            }
            episode.steps.push_back(StepRecord{std::move(thought), result});
            episode.outcome = result.payload;
            episode.status = EpisodeStatus::Finished;
            return episode;
        }

        episode.steps.push_back(StepRecord{std::move(thought), result});
        consecutive_rejections = 0;
        feedback.clear();
    }

    episode.status = EpisodeStatus::MaxStepsExceeded;
    episode.abort_cause = "step budget of " + std::to_string(policy.max_steps) + " exhausted";
    for (auto it = episode.steps.rbegin(); it != episode.steps.rend(); ++it) {
        const ToolDescriptor* d = registry.find(it->thought.tool_name);
        if (d && d->category == ToolCategory::FactFinding && it->result.ok) {
            episode.outcome = it->result.payload;
            break;
        }
    }
    return episode;
}

/// Post-hoc check, independent of admissible_tools, that a finished episode's
/// category sequence respects the knowledge/reflection cadence and contains
/// at most one terminal call, in final position.
inline bool satisfies_policy(const Episode& episode, const ToolRegistry& registry,
                             const StrategyPolicy& policy) {
    std::size_t knowledge_run = 0;
    for (std::size_t i = 0; i < episode.steps.size(); ++i) {
        const ToolDescriptor* d = registry.find(episode.steps[i].thought.tool_name);
        if (!d) return false;
        if (policy.disabled_tools.count(d->name)) return false;
        if (knowledge_run >= policy.knowledge_calls_before_reflection &&
            d->category != ToolCategory::Reflection && d->category != ToolCategory::Terminal)
            return false;
        if (d->category == ToolCategory::Terminal && i + 1 != episode.steps.size()) return false;
        if (d->category == ToolCategory::Knowledge)
            ++knowledge_run;
        else if (d->category != ToolCategory::Terminal)
            knowledge_run = 0;
    }
    return true;
}

}  // namespace lawreason::agent
