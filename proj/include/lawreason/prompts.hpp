#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Prompt templates with named {Key} placeholders. Every prompt the pipelines
// send is built from this library, so wording can be overridden from a
// directory of plain-text files without touching code. Rendering substitutes
// only the keys the caller provides; any other brace-delimited text (JSON
// examples in particular) passes through untouched.

namespace lawreason::prompts {

class PromptLibrary {
public:
    /// The library with every built-in template (defined below).
    static PromptLibrary builtin();

    void set(const std::string& name, std::string text) {
        templates_[name] = std::move(text);
    }

    bool has(const std::string& name) const { return templates_.count(name) > 0; }

    const std::string& get(const std::string& name) const {
        const auto it = templates_.find(name);
        if (it == templates_.end())
            throw std::out_of_range("unknown prompt template \"" + name + "\"");
        return it->second;
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        out.reserve(templates_.size());
        for (const auto& [name, text] : templates_) out.push_back(name);
        return out;  // std::map keeps them sorted
    }

    /// Loads every *.txt file in the directory as a template named after the
    /// file stem, overriding built-ins of the same name. Returns how many
    /// templates were loaded.
    std::size_t load_directory(const std::filesystem::path& dir) {
        std::size_t loaded = 0;
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(dir))
            if (entry.is_regular_file() && entry.path().extension() == ".txt")
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& path : files) {
            std::ifstream in(path, std::ios::binary);
            if (!in) throw std::runtime_error("cannot read prompt template: " + path.string());
            std::ostringstream content;
            content << in.rdbuf();
            set(path.stem().string(), content.str());
            ++loaded;
        }
        return loaded;
    }

    /// Renders a template by substituting {Key} for every provided key in one
    /// pass. Unknown placeholders and literal braces are left as they are,
    /// and substituted values are never re-scanned.
    static std::string render_text(std::string_view tmpl,
                                   const std::map<std::string, std::string>& values) {
        std::string out;
        out.reserve(tmpl.size());
        std::size_t pos = 0;
        while (pos < tmpl.size()) {
            const std::size_t open = tmpl.find('{', pos);
            if (open == std::string_view::npos) {
                out.append(tmpl.substr(pos));
                break;
            }
            out.append(tmpl.substr(pos, open - pos));
            const std::size_t close = tmpl.find('}', open + 1);
            if (close == std::string_view::npos) {
                out.append(tmpl.substr(open));
                break;
            }
            const std::string key(tmpl.substr(open + 1, close - open - 1));
            const auto it = values.find(key);
            if (it != values.end()) {
                out.append(it->second);
                pos = close + 1;
            } else {
                out.push_back('{');
                pos = open + 1;
            }
        }
        return out;
    }

    std::string render(const std::string& name,
                       const std::map<std::string, std::string>& values) const {
        return render_text(get(name), values);
    }

private:
    std::map<std::string, std::string> templates_;
};

inline PromptLibrary PromptLibrary::builtin() {
    PromptLibrary lib;

    lib.set("thought",
            "You are a legal fact-finding agent working step by step toward the goal "
            "below.\n\nGoal:\n{Goals}\n\nAvailable tools:\n{Tools}\n\nAt each step, think "
            "first, then call exactly one tool. Respond with a single JSON object and "
            "nothing else:\n{\"thinking\": {\"text\": \"...\", \"reasoning\": \"...\", "
            "\"plan\": \"...\"}, \"tool\": {\"name\": \"...\", \"args\": {}}}\nThe value of "
            "tool.name must be one of the tool names listed above, and tool.args must "
            "supply that tool's arguments.\n");

    lib.set("interim_finding",
            "Interim probandum finding. Read the case fragment and extract every "
            "provisional fact (interim probandum) that the fragment's evidence could "
            "prove.\n\nPosition principle:\n{Position Principle}\n\nTask rules:\n"
            "{Specification}\n\nCase fragment:\n{Input_Text}\n\nContext:\n{Context}\n\n"
            "Respond with a single JSON object in exactly this format:\n{Json-Format}\n");

    lib.set("ultimate_generation",
            "Ultimate probandum generation. From the case fragment and the interim "
            "probanda found so far, synthesize the single ultimate probandum that "
            "decides the case.\n\nPosition principle:\n{Position Principle}\n\nTask "
            "rules:\n{Specification}\n\nCase fragment:\n{Input_Text}\n\nContext:\n"
            "{Context}\n\nRespond with a single JSON object in exactly this format:\n"
            "{Json-Format}\n");

    lib.set("evidence_extraction",
            "Evidence extraction. Copy out of the case fragment, verbatim and sentence "
            "by sentence, each passage that can serve as evidence.\n\nPosition "
            "principle:\n{Position Principle}\n\nTask rules:\n{Specification}\n\nCase "
            "fragment:\n{Input_Text}\n\nContext:\n{Context}\n\nRespond with a single "
            "JSON object in exactly this format:\n{Json-Format}\n");

    lib.set("evidence_linking",
            "Evidence linking. Pair each evidence sentence with the interim probandum "
            "it supports, using the identifiers given in the context.\n\nPosition "
            "principle:\n{Position Principle}\n\nTask rules:\n{Specification}\n\nCase "
            "fragment:\n{Input_Text}\n\nContext:\n{Context}\n\nRespond with a single "
            "JSON object in exactly this format:\n{Json-Format}\n");

    lib.set("experience_generation",
            "Experience generation. For each linked fact-evidence pair in the context, "
            "state the commonsense experience that licenses the inference.\n\nPosition "
            "principle:\n{Position Principle}\n\nTask rules:\n{Specification}\n\nCase "
            "fragment:\n{Input_Text}\n\nContext:\n{Context}\n\nRespond with a single "
            "JSON object in exactly this format:\n{Json-Format}\n");

    lib.set("knowledge_search",
            "Knowledge search verification. Decide whether the query conforms to the "
            "task objective of being an interim probandum.\n\nQuery:\n{Query}\n\n"
            "Similar texts retrieved from the vector store, each labeled by whether it "
            "belongs to the interim probandums:\n{Neighbors}\n\nIf there are more texts "
            "belonging to the interim probandums among the similar texts, be more "
            "inclined to judge the query on target; if more do not belong, be more "
            "inclined to judge it off target.\n\nRespond with a single JSON object: "
            "{\"is_on_target\": true, \"rationale\": \"...\"}\n");

    lib.set("role_lawyer",
            "You are an experienced lawyer reviewing the completed work below.\n\n"
            "Issue under review:\n{Issue}\n\nRelevant legal text:\n{Legal_text}\n\n"
            "Analyze the completion quality from a lawyer's standpoint and vote. "
            "Respond with a single JSON object: {\"analysis\": \"...\", \"vote\": "
            "\"excellent\"} where vote is \"excellent\" or \"needs_work\".\n");

    lib.set("role_police_officer",
            "You are a police officer reviewing the completed work below.\n\n"
            "Issue under review:\n{Issue}\n\nRelevant legal text:\n{Legal_text}\n\n"
            "Analyze the completion quality from an investigator's standpoint and vote. "
            "Respond with a single JSON object: {\"analysis\": \"...\", \"vote\": "
            "\"excellent\"} where vote is \"excellent\" or \"needs_work\".\n");

    lib.set("role_general_public",
            "You are a member of the general public reviewing the completed work "
            "below.\n\nIssue under review:\n{Issue}\n\nRelevant legal text:\n"
            "{Legal_text}\n\nAnalyze the completion quality from an ordinary citizen's "
            "standpoint and vote. Respond with a single JSON object: {\"analysis\": "
            "\"...\", \"vote\": \"excellent\"} where vote is \"excellent\" or "
            "\"needs_work\".\n");

    lib.set("judge_decision",
            "You are the presiding judge. Three analysts have reviewed the work.\n\n"
            "Issue under review:\n{Issue}\n\nAnalyst reports:\n{Analyses}\n\nSynthesize "
            "these inputs and deliver the final decision. Respond with a single JSON "
            "object: {\"decision\": \"...\", \"verdict\": \"pass\"} where verdict is "
            "\"pass\" or \"revise\".\n");

    lib.set("reflection",
            "Reflection. Reconsider the result below in light of the goal and the "
            "relevant tool responses, and output a revised result.\n\nGoal:\n{Goals}\n\n"
            "Relevant tool responses:\n{Relevant_Tool_Response}\n\nResult to "
            "reconsider:\n{Input_Text}\n\nThe output must align with the format of the "
            "result to reconsider: respond with a single JSON object of exactly the "
            "same shape, revised where needed.\n");

    lib.set("emotion_check",
            "Classify the emotional tone of the text below as exactly one of: "
            "positive, negative, neutral.\n\nText:\n{Input_Text}\n\nRespond with the "
            "single word label, or a JSON object {\"label\": \"...\"}.\n");

    lib.set("pattern_match",
            "Pre-analysis. Before solving the goal, analyze what it requires.\n\nGoal:\n"
            "{Goals}\n\nText:\n{Input_Text}\n\nRespond with a single JSON object: "
            "{\"required_knowledge\": \"...\", \"rules\": \"...\", \"text_features\": "
            "\"...\"}\n");

    lib.set("baseline_facts",
            "Fact generation. Read the case fragment and produce the provisional facts "
            "it can prove and, if the fragment reveals it, the single ultimate fact "
            "that decides the case.\n{Few_Shot}\nCase fragment:\n{Case_Fragment}\n\n"
            "Respond with a single JSON object: {\"interim_probanda\": [\"...\"], "
            "\"ultimate_probandum\": \"...\"} (use null for the ultimate when this "
            "fragment does not reveal it).\n");

    lib.set("baseline_evidence",
            "Evidence extraction and linking. Below are the interim probanda already "
            "identified (numbered from 1) and a case fragment. Copy out each evidence "
            "sentence verbatim and pair it with the probandum it supports, by number; "
            "evidence_index counts your evidence list from 1.\n"
            "{Few_Shot}\nInterim probanda:\n{Interim_List}\n\nCase fragment:\n"
            "{Case_Fragment}\n\nRespond with a single JSON object: {\"evidence\": "
            "[\"...\"], \"links\": [{\"factum_index\": 1, \"evidence_index\": 1}]}\n");

    lib.set("baseline_experience",
            "Experience generation. Below are supported fact-evidence pairs (numbered "
            "from 1). For each pair, write the commonsense experience licensing the "
            "inference; omit pairs that need none.\n{Few_Shot}\nPairs:\n{Link_List}\n\n"
            "Respond with a single JSON object: {\"experiences\": [{\"link_index\": 1, "
            "\"experience\": \"...\"}]}\n");

    return lib;
}

}  // namespace lawreason::prompts
