#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lawreason/rouge.hpp"
#include "lawreason/schema.hpp"
#include "lawreason/text.hpp"

// Case/annotation I/O: the line-delimited case format, prediction files,
// fragmenting long case descriptions under a token budget, and instruction
// dataset export. One JSON object per line, UTF-8 throughout.

namespace lawreason::corpus {

using nlohmann::json;

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ============================================================================
// Tree <-> JSON
// ============================================================================

inline json span_to_json(const Span& s) {
    return json{{"start", s.start}, {"end", s.end}};
}

inline Span span_from_json(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("start") || !j.contains("end"))
        throw FormatError(where + ": span must be an object with start and end");
    return Span{j.at("start").get<std::size_t>(), j.at("end").get<std::size_t>()};
}

inline json tree_to_json(const ReasoningTree& tree) {
    json facta = json::array();
    for (const auto& f : tree.facta) {
        json jf{{"id", f.id}, {"kind", factum_kind_name(f.kind)}, {"text", f.text}};
        if (f.span) jf["span"] = span_to_json(*f.span);
        facta.push_back(std::move(jf));
    }
    json evidence = json::array();
    for (const auto& v : tree.evidence) {
        json jv{{"id", v.id}, {"text", v.text}};
        if (v.span) jv["span"] = span_to_json(*v.span);
        evidence.push_back(std::move(jv));
    }
    json links = json::array();
    for (const auto& l : tree.links)
        links.push_back(json{{"factum_id", l.factum_id},
                             {"evidence_id", l.evidence_id},
                             {"experiences", l.experiences}});
    json edges = json::array();
    for (const auto& e : tree.edges)
        edges.push_back(json{{"child_id", e.child_id}, {"parent_id", e.parent_id}});
    return json{{"facta", std::move(facta)},
                {"evidence", std::move(evidence)},
                {"links", std::move(links)},
                {"edges", std::move(edges)}};
}

inline ReasoningTree tree_from_json(const json& j, const std::string& where) {
    if (!j.is_object()) throw FormatError(where + ": tree must be an object");
    ReasoningTree tree;
    for (const char* key : {"facta", "evidence", "links", "edges"})
        if (!j.contains(key) || !j.at(key).is_array())
            throw FormatError(where + ": tree needs the array field \"" + std::string(key) +
                              "\"");
    const json& facta = j.at("facta");
    const json& evidence = j.at("evidence");
    const json& links = j.at("links");
    const json& edges = j.at("edges");

    for (const auto& jf : facta) {
        if (!jf.is_object() || !jf.contains("id") || !jf.contains("kind") || !jf.contains("text"))
            throw FormatError(where + ": factum needs id, kind, text");
        Factum f;
        f.id = jf.at("id").get<std::string>();
        const auto kind = factum_kind_from_name(jf.at("kind").get<std::string>());
        if (!kind)
            throw FormatError(where + ": factum \"" + f.id + "\" has unknown kind \"" +
                              jf.at("kind").get<std::string>() + "\"");
        f.kind = *kind;
        f.text = jf.at("text").get<std::string>();
        if (jf.contains("span") && !jf.at("span").is_null())
            f.span = span_from_json(jf.at("span"), where + ": factum \"" + f.id + "\"");
        tree.facta.push_back(std::move(f));
    }
    for (const auto& jv : evidence) {
        if (!jv.is_object() || !jv.contains("id") || !jv.contains("text"))
            throw FormatError(where + ": evidence needs id and text");
        EvidenceItem v;
        v.id = jv.at("id").get<std::string>();
        v.text = jv.at("text").get<std::string>();
        if (jv.contains("span") && !jv.at("span").is_null())
            v.span = span_from_json(jv.at("span"), where + ": evidence \"" + v.id + "\"");
        tree.evidence.push_back(std::move(v));
    }
    for (const auto& jl : links) {
        if (!jl.is_object() || !jl.contains("factum_id") || !jl.contains("evidence_id"))
            throw FormatError(where + ": link needs factum_id and evidence_id");
        InferenceLink l;
        l.factum_id = jl.at("factum_id").get<std::string>();
        l.evidence_id = jl.at("evidence_id").get<std::string>();
        if (jl.contains("experiences")) {
            if (!jl.at("experiences").is_array())
                throw FormatError(where + ": link experiences must be an array");
            for (const auto& e : jl.at("experiences")) l.experiences.push_back(e.get<std::string>());
        }
        tree.links.push_back(std::move(l));
    }
    for (const auto& je : edges) {
        if (!je.is_object() || !je.contains("child_id") || !je.contains("parent_id"))
            throw FormatError(where + ": edge needs child_id and parent_id");
        tree.edges.push_back(
            FactEdge{je.at("child_id").get<std::string>(), je.at("parent_id").get<std::string>()});
    }
    return tree;
}

// ============================================================================
// Records and splits
// ============================================================================

/// A case description plus its gold annotation tree.
struct CaseRecord {
    std::string case_id;
    std::string description;
    ReasoningTree gold;

    bool operator==(const CaseRecord&) const = default;
};

/// A model output for one case, plus free-form provenance metadata
/// (model name, mode, timestamps — anything; preserved verbatim).
struct PredictionRecord {
    std::string case_id;
    ReasoningTree predicted;
    json provenance = json::object();

    bool operator==(const PredictionRecord&) const = default;
};

enum class SplitName { Train, Val, Test };

inline const char* split_name_str(SplitName n) {
    switch (n) {
        case SplitName::Train: return "train";
        case SplitName::Val: return "val";
        case SplitName::Test: return "test";
    }
    return "?";
}

struct DatasetSplit {
    SplitName name = SplitName::Test;
    std::vector<CaseRecord> cases;

    bool operator==(const DatasetSplit&) const = default;

    const CaseRecord* find(const std::string& case_id) const {
        for (const auto& c : cases)
            if (c.case_id == case_id) return &c;
        return nullptr;
    }
};

/// Split name inferred from a file name: a stem containing "train" or "val"
/// selects those splits, anything else is treated as test data.
inline SplitName split_name_from_path(const std::filesystem::path& path) {
    std::string stem = path.stem().string();
    std::transform(stem.begin(), stem.end(), stem.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (stem.find("train") != std::string::npos) return SplitName::Train;
    if (stem.find("val") != std::string::npos) return SplitName::Val;
    return SplitName::Test;
}

inline json case_to_json(const CaseRecord& rec) {
    return json{{"case_id", rec.case_id},
                {"description", rec.description},
                {"gold", tree_to_json(rec.gold)}};
}

inline CaseRecord case_from_json(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("case_id") || !j.contains("description") ||
        !j.contains("gold"))
        throw FormatError(where + ": case needs case_id, description, gold");
    CaseRecord rec;
    rec.case_id = j.at("case_id").get<std::string>();
    rec.description = j.at("description").get<std::string>();
    rec.gold = tree_from_json(j.at("gold"), where + ": case \"" + rec.case_id + "\"");
    return rec;
}

namespace detail {

/// Best-effort case_id extraction from a line that failed to parse, so
/// FormatError can still name the case.
inline std::string sniff_case_id(const std::string& line) {
    static const std::regex re("\"case_id\"\\s*:\\s*\"([^\"]*)\"");
    std::smatch m;
    if (std::regex_search(line, m, re)) return m[1].str();
    return "";
}

}  // namespace detail

/// Loads a split from a line-delimited file (one case object per line; blank
/// lines ignored). Every case must validate against its description with no
/// errors; validation warnings are appended to `warnings` when provided.
/// Throws FormatError (naming line and, when recoverable, case id) or
/// InvalidTree for a case whose gold tree has validation errors.
inline DatasetSplit load_split(const std::filesystem::path& path,
                               std::vector<std::string>* warnings = nullptr) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open case file: " + path.string());
    DatasetSplit split;
    split.name = split_name_from_path(path);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> seen_ids;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        const std::string where = path.filename().string() + ":" + std::to_string(line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            std::string id = detail::sniff_case_id(line);
            throw FormatError(where + (id.empty() ? "" : " (case \"" + id + "\")") +
                              ": malformed object: " + e.what());
        }
        CaseRecord rec = case_from_json(j, where);
        if (std::find(seen_ids.begin(), seen_ids.end(), rec.case_id) != seen_ids.end())
            throw FormatError(where + ": duplicate case_id \"" + rec.case_id + "\"");
        seen_ids.push_back(rec.case_id);
        ValidationReport vr = validate_tree(rec.gold, rec.description);
        if (!vr.ok()) throw InvalidTree(std::move(vr));
        if (warnings) {
            for (const auto& f : vr.findings)
                warnings->push_back(rec.case_id + ": [" + f.code + "] " + f.message);
        }
        split.cases.push_back(std::move(rec));
    }
    return split;
}

inline void save_split(const DatasetSplit& split, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write case file: " + path.string());
    for (const auto& c : split.cases) out << case_to_json(c).dump() << '\n';
}

inline json prediction_to_json(const PredictionRecord& rec) {
    return json{{"case_id", rec.case_id},
                {"predicted", tree_to_json(rec.predicted)},
                {"provenance", rec.provenance}};
}

inline PredictionRecord prediction_from_json(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("case_id") || !j.contains("predicted"))
        throw FormatError(where + ": prediction needs case_id and predicted");
    PredictionRecord rec;
    rec.case_id = j.at("case_id").get<std::string>();
    rec.predicted = tree_from_json(j.at("predicted"), where + ": case \"" + rec.case_id + "\"");
    rec.provenance =
        j.contains("provenance") && j.at("provenance").is_object() ? j.at("provenance")
                                                                   : json::object();
    // Unknown top-level fields are folded into provenance so nothing written
    // by other tooling is dropped on a round trip.
    for (const auto& [key, value] : j.items()) {
        if (key == "case_id" || key == "predicted" || key == "provenance") continue;
        rec.provenance[key] = value;
    }
    return rec;
}

/// Predictions use the same one-object-per-line layout as case files.
inline void save_predictions(const std::vector<PredictionRecord>& records,
                             const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write prediction file: " + path.string());
    for (const auto& r : records) out << prediction_to_json(r).dump() << '\n';
}

inline std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open prediction file: " + path.string());
    std::vector<PredictionRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        const std::string where = path.filename().string() + ":" + std::to_string(line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            std::string id = detail::sniff_case_id(line);
            throw FormatError(where + (id.empty() ? "" : " (case \"" + id + "\")") +
                              ": malformed object: " + e.what());
        }
        out.push_back(prediction_from_json(j, where));
    }
    return out;
}

// ============================================================================
// Fragmenting
// ============================================================================

struct Fragment {
    Span span;          // codepoint range into the original description
    std::string text;   // exact slice of the description at `span`

    bool operator==(const Fragment&) const = default;
};

/// Token count in the mode-dependent unit used for fragment budgeting:
/// characters for CJK text, whitespace-separated words otherwise.
inline std::size_t count_tokens(std::string_view s,
                                std::optional<rouge::Mode> mode = std::nullopt) {
    return rouge::tokenize(s, mode.value_or(rouge::detect_mode(s))).tokens.size();
}

namespace detail {

/// Splits a sentence slice into pieces of at most max_tokens tokens each,
/// cutting at token starts so no token is split across pieces (in Word mode a
/// pathological single word longer than the budget still counts as one token
/// and stays whole).
inline std::vector<Span> hard_cut(std::string_view whole, Span sentence, std::size_t max_tokens,
                                  rouge::Mode mode) {
    std::vector<Span> pieces;
    const std::string slice = text::substr_codepoints(whole, sentence.start, sentence.end);
    const auto cps = text::decode_utf8(slice);
    std::size_t piece_start = 0;  // relative to sentence.start
    std::size_t tokens_in_piece = 0;
    bool in_word = false;
    for (std::size_t i = 0; i < cps.size(); ++i) {
        const bool space = text::is_space(cps[i]);
        bool starts_token = false;
        if (mode == rouge::Mode::Character) {
            starts_token = !space;
        } else {
            starts_token = !space && !in_word;
            in_word = !space;
        }
        if (starts_token) {
            if (tokens_in_piece == max_tokens) {
                pieces.push_back(Span{sentence.start + piece_start, sentence.start + i});
                piece_start = i;
                tokens_in_piece = 0;
            }
            ++tokens_in_piece;
        }
    }
    if (piece_start < cps.size())
        pieces.push_back(Span{sentence.start + piece_start, sentence.end});
    if (pieces.empty()) pieces.push_back(sentence);  // all-whitespace sentence
    return pieces;
}

}  // namespace detail

/// Splits a description into fragments of at most max_tokens tokens each.
/// Cuts fall on sentence boundaries whenever a sentence fits the budget;
/// oversized sentences are hard-cut at token starts. Fragment spans are
/// disjoint, ordered, and partition the whole text, so the fragments
/// concatenate exactly to the input.
inline std::vector<Fragment> fragment_case(std::string_view description,
                                           std::size_t max_tokens = 1500,
                                           std::optional<rouge::Mode> mode = std::nullopt) {
    if (max_tokens < 1) throw std::invalid_argument("fragment_case: max_tokens must be >= 1");
    const rouge::Mode m = mode.value_or(rouge::detect_mode(description));

    std::vector<Fragment> out;
    if (description.empty()) {
        out.push_back(Fragment{Span{0, 0}, ""});
        return out;
    }

    // Sentence spans partition the text; pack greedily, recounting tokens on
    // the actual candidate substring so counting stays pure.
    std::vector<Span> units;
    for (const auto& s : text::split_sentences(description)) {
        const Span span{s.begin, s.end};
        const std::string slice = text::substr_codepoints(description, span.start, span.end);
        if (count_tokens(slice, m) > max_tokens) {
            for (const Span& piece : detail::hard_cut(description, span, max_tokens, m))
                units.push_back(piece);
        } else {
            units.push_back(span);
        }
    }

    std::size_t frag_start = units.front().start;
    std::size_t frag_end = units.front().end;
    for (std::size_t i = 1; i < units.size(); ++i) {
        const std::size_t candidate_end = units[i].end;
        const std::string candidate =
            text::substr_codepoints(description, frag_start, candidate_end);
        if (count_tokens(candidate, m) <= max_tokens) {
            frag_end = candidate_end;
        } else {
            out.push_back(Fragment{Span{frag_start, frag_end},
                                   text::substr_codepoints(description, frag_start, frag_end)});
            frag_start = units[i].start;
            frag_end = units[i].end;
        }
    }
    out.push_back(Fragment{Span{frag_start, frag_end},
                           text::substr_codepoints(description, frag_start, frag_end)});
    return out;
}

// ============================================================================
// Instruction export
// ============================================================================

enum class TaskKind { Facts, Evidence, Links, Experience };

inline const char* task_kind_name(TaskKind t) {
    switch (t) {
        case TaskKind::Facts: return "facts";
        case TaskKind::Evidence: return "evidence";
        case TaskKind::Links: return "links";
        case TaskKind::Experience: return "experience";
    }
    return "?";
}

inline std::optional<TaskKind> task_kind_from_name(std::string_view s) {
    if (s == "facts") return TaskKind::Facts;
    if (s == "evidence") return TaskKind::Evidence;
    if (s == "links") return TaskKind::Links;
    if (s == "experience") return TaskKind::Experience;
    return std::nullopt;
}

/// One supervised training sample: a task instruction, a case fragment, and
/// the serialized gold elements located inside that fragment.
struct InstructionRecord {
    std::string instruction;
    std::string input;
    std::string output;

    bool operator==(const InstructionRecord&) const = default;
};

namespace detail {

inline bool span_inside(const std::optional<Span>& s, const Span& frag) {
    return s && s->start >= frag.start && s->end <= frag.end;
}

inline const char* instruction_for(TaskKind t) {
    switch (t) {
        case TaskKind::Facts:
            return "Read the case fragment and list every provisional fact that the "
                   "fragment's evidence could prove. Answer with a JSON object "
                   "{\"interim_probanda\": [\"...\"]}.";
        case TaskKind::Evidence:
            return "Read the case fragment and copy out, verbatim and sentence by "
                   "sentence, each passage that can serve as evidence. Answer with a "
                   "JSON object {\"evidence\": [\"...\"]}.";
        case TaskKind::Links:
            return "Given the case fragment, pair each evidence sentence with the "
                   "provisional fact it supports. Answer with a JSON object "
                   "{\"links\": [{\"factum\": \"...\", \"evidence\": \"...\"}]}.";
        case TaskKind::Experience:
            return "For each supported fact-evidence pair in the case fragment, state "
                   "the commonsense experience that licenses the inference. Answer "
                   "with a JSON object {\"experiences\": [{\"factum\": \"...\", "
                   "\"evidence\": \"...\", \"experience\": \"...\"}]}.";
    }
    return "";
}

}  // namespace detail

/// Builds one record per (fragment, task) pair whose fragment contains at
/// least one relevant gold element; the output field serializes only elements
/// whose spans fall fully inside the fragment.
inline std::vector<InstructionRecord> export_instructions(const DatasetSplit& split, TaskKind task,
                                                          std::size_t max_tokens = 1500) {
    std::vector<InstructionRecord> records;
    for (const auto& rec : split.cases) {
        for (const Fragment& frag : fragment_case(rec.description, max_tokens)) {
            json output;
            if (task == TaskKind::Facts) {
                json arr = json::array();
                for (const auto& f : rec.gold.facta)
                    if (f.kind == FactumKind::Interim && detail::span_inside(f.span, frag.span))
                        arr.push_back(f.text);
                if (arr.empty()) continue;
                output = json{{"interim_probanda", std::move(arr)}};
            } else if (task == TaskKind::Evidence) {
                json arr = json::array();
                for (const auto& v : rec.gold.evidence)
                    if (detail::span_inside(v.span, frag.span)) arr.push_back(v.text);
                if (arr.empty()) continue;
                output = json{{"evidence", std::move(arr)}};
            } else {
                json arr = json::array();
                for (const auto& l : rec.gold.links) {
                    const Factum& f = lawreason::detail::factum_by_id(rec.gold, l.factum_id);
                    const EvidenceItem& v =
                        lawreason::detail::evidence_by_id(rec.gold, l.evidence_id);
                    if (!detail::span_inside(f.span, frag.span) ||
                        !detail::span_inside(v.span, frag.span))
                        continue;
                    if (task == TaskKind::Links) {
                        arr.push_back(json{{"factum", f.text}, {"evidence", v.text}});
                    } else {
                        for (const auto& e : l.experiences)
                            arr.push_back(json{{"factum", f.text},
                                               {"evidence", v.text},
                                               {"experience", e}});
                    }
                }
                if (arr.empty()) continue;
                output = task == TaskKind::Links ? json{{"links", std::move(arr)}}
                                                 : json{{"experiences", std::move(arr)}};
            }
            records.push_back(InstructionRecord{detail::instruction_for(task), frag.text,
                                                output.dump()});
        }
    }
    return records;
}

}  // namespace lawreason::corpus
