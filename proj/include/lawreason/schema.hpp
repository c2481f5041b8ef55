#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lawreason/text.hpp"

// The reasoning-tree data model: evidence sentences at the leaves, interim
// probanda in the middle, a single ultimate probandum at the root, inference
// links carrying experiences, and a staged validator that reports findings
// instead of throwing.

namespace lawreason {

// ============================================================================
// Domain types
// ============================================================================

/// Half-open character-offset range [start, end) into a case description.
/// Offsets count Unicode codepoints, which is encoding-stable for CJK text.
struct Span {
    std::size_t start = 0;
    std::size_t end = 0;

    bool operator==(const Span&) const = default;
    auto operator<=>(const Span&) const = default;
};

enum class FactumKind { Interim, Ultimate };

inline const char* factum_kind_name(FactumKind k) {
    return k == FactumKind::Interim ? "interim" : "ultimate";
}

inline std::optional<FactumKind> factum_kind_from_name(std::string_view s) {
    if (s == "interim") return FactumKind::Interim;
    if (s == "ultimate") return FactumKind::Ultimate;
    return std::nullopt;
}

/// A sentence-level leaf of the tree. The span is optional so text-only
/// predictions (whose sentences may not occur verbatim in the case) load.
struct EvidenceItem {
    std::string id;
    std::string text;
    std::optional<Span> span;

    bool operator==(const EvidenceItem&) const = default;
};

/// A fact to be proven. Interim facta may carry extraction spans; the
/// ultimate factum is synthesized and never does.
struct Factum {
    std::string id;
    FactumKind kind = FactumKind::Interim;
    std::string text;
    std::optional<Span> span;

    bool operator==(const Factum&) const = default;
};

/// Directed support relation evidence -> interim factum, with the ordered
/// experience strings licensing the inference (possibly none).
struct InferenceLink {
    std::string factum_id;
    std::string evidence_id;
    std::vector<std::string> experiences;

    bool operator==(const InferenceLink&) const = default;
};

/// Directed support relation interim factum -> ultimate factum.
struct FactEdge {
    std::string child_id;
    std::string parent_id;

    bool operator==(const FactEdge&) const = default;
};

struct ReasoningTree {
    std::vector<Factum> facta;
    std::vector<EvidenceItem> evidence;
    std::vector<InferenceLink> links;
    std::vector<FactEdge> edges;

    bool operator==(const ReasoningTree&) const = default;
};

// ============================================================================
// Validation
// ============================================================================

enum class Severity { Error, Warning };

inline const char* severity_name(Severity s) {
    return s == Severity::Error ? "error" : "warning";
}

/// One validation finding. `code` is a stable machine-readable slug;
/// `subject_id` names the offending element when there is one.
struct Finding {
    Severity severity = Severity::Error;
    std::string code;
    std::string message;
    std::string subject_id;

    bool operator==(const Finding&) const = default;
};

struct ValidationReport {
    std::vector<Finding> findings;

    bool ok() const {
        return std::none_of(findings.begin(), findings.end(),
                            [](const Finding& f) { return f.severity == Severity::Error; });
    }
    std::size_t error_count() const {
        return static_cast<std::size_t>(std::count_if(
            findings.begin(), findings.end(),
            [](const Finding& f) { return f.severity == Severity::Error; }));
    }
    std::size_t warning_count() const { return findings.size() - error_count(); }

    std::string to_string() const {
        std::ostringstream os;
        for (const auto& f : findings) {
            os << severity_name(f.severity) << " [" << f.code << "]";
            if (!f.subject_id.empty()) os << " (" << f.subject_id << ")";
            os << ": " << f.message << '\n';
        }
        return os.str();
    }
};

/// Thrown by operations that require an error-free tree.
class InvalidTree : public std::runtime_error {
public:
    explicit InvalidTree(ValidationReport report)
        : std::runtime_error("invalid reasoning tree:\n" + report.to_string()),
          report_(std::move(report)) {}

    const ValidationReport& report() const { return report_; }

private:
    ValidationReport report_;
};

namespace detail {

inline void add(ValidationReport& r, Severity sev, std::string code, std::string subject,
                std::string message) {
    r.findings.push_back(
        Finding{sev, std::move(code), std::move(message), std::move(subject)});
}

}  // namespace detail

/// Checks every structural invariant of the tree and, when the case text is
/// supplied, span/text consistency against it. Findings are data, never
/// exceptions. Validation is staged so that a root-cause failure (a dangling
/// id, a cycle, a wrong root count) is reported alone rather than alongside
/// the pile of downstream violations it implies:
///   stage A — id integrity (duplicates, dangling references); errors stop here
///   stage B — graph shape (cycles first, then root count, edge/link kinds,
///             per-interim edge counts, duplicate links, texts, spans)
///   stage C — span vs. case text (only when case_text is given)
inline ValidationReport validate_tree(const ReasoningTree& tree,
                                      std::optional<std::string_view> case_text = std::nullopt) {
    ValidationReport report;

    // ---- stage A: id integrity ---------------------------------------------
    std::unordered_map<std::string, const Factum*> facta_by_id;
    std::unordered_map<std::string, const EvidenceItem*> evidence_by_id;
    for (const auto& f : tree.facta) {
        if (!facta_by_id.emplace(f.id, &f).second)
            detail::add(report, Severity::Error, "duplicate-id", f.id,
                        "duplicate factum id \"" + f.id + "\"");
    }
    for (const auto& v : tree.evidence) {
        if (facta_by_id.count(v.id) || !evidence_by_id.emplace(v.id, &v).second)
            detail::add(report, Severity::Error, "duplicate-id", v.id,
                        "duplicate evidence id \"" + v.id + "\"");
    }
    for (const auto& l : tree.links) {
        if (!facta_by_id.count(l.factum_id))
            detail::add(report, Severity::Error, "dangling-factum-ref", l.factum_id,
                        "link references missing factum id \"" + l.factum_id + "\"");
        if (!evidence_by_id.count(l.evidence_id))
            detail::add(report, Severity::Error, "dangling-evidence-ref", l.evidence_id,
                        "dangling evidence reference: link names missing evidence id \"" +
                            l.evidence_id + "\"");
    }
    for (const auto& e : tree.edges) {
        if (!facta_by_id.count(e.child_id))
            detail::add(report, Severity::Error, "dangling-edge-ref", e.child_id,
                        "edge references missing child factum id \"" + e.child_id + "\"");
        if (!facta_by_id.count(e.parent_id))
            detail::add(report, Severity::Error, "dangling-edge-ref", e.parent_id,
                        "edge references missing parent factum id \"" + e.parent_id + "\"");
    }
    if (!report.ok()) return report;

    // ---- stage B: graph shape ----------------------------------------------
    // Cycles first: a cyclic input violates the edge-kind rules almost by
    // construction, and reporting those too would bury the root cause.
    {
        std::unordered_map<std::string, std::vector<std::string>> out;
        for (const auto& l : tree.links) out[l.evidence_id].push_back(l.factum_id);
        for (const auto& e : tree.edges) out[e.child_id].push_back(e.parent_id);

        enum class Color { White, Gray, Black };
        std::unordered_map<std::string, Color> color;
        auto all_ids = [&] {
            std::vector<std::string> ids;
            for (const auto& f : tree.facta) ids.push_back(f.id);
            for (const auto& v : tree.evidence) ids.push_back(v.id);
            return ids;
        }();
        for (const auto& id : all_ids) color[id] = Color::White;

        bool cyclic = false;
        std::string cycle_node;
        // Iterative DFS; (node, next-child-index) frames.
        for (const auto& start : all_ids) {
            if (cyclic) break;
            if (color[start] != Color::White) continue;
            std::vector<std::pair<std::string, std::size_t>> stack{{start, 0}};
            color[start] = Color::Gray;
            while (!stack.empty() && !cyclic) {
                auto& [node, idx] = stack.back();
                const auto& succ = out[node];
                if (idx < succ.size()) {
                    const std::string& next = succ[idx++];
                    if (color[next] == Color::Gray) {
                        cyclic = true;
                        cycle_node = next;
                    } else if (color[next] == Color::White) {
                        color[next] = Color::Gray;
                        stack.emplace_back(next, 0);
                    }
                } else {
                    color[node] = Color::Black;
                    stack.pop_back();
                }
            }
        }
        if (cyclic) {
            detail::add(report, Severity::Error, "cycle", cycle_node,
                        "support graph contains a cycle through \"" + cycle_node + "\"");
            return report;
        }
    }

    // Root count: exactly one ultimate factum. Everything after this assumes
    // a unique root, so a wrong count is reported alone.
    {
        std::vector<const Factum*> ultimates;
        for (const auto& f : tree.facta)
            if (f.kind == FactumKind::Ultimate) ultimates.push_back(&f);
        if (ultimates.empty()) {
            detail::add(report, Severity::Error, "no-ultimate", "",
                        "no ultimate factum: the tree has no root");
            return report;
        }
        if (ultimates.size() > 1) {
            std::string ids;
            for (const auto* u : ultimates) {
                if (!ids.empty()) ids += ", ";
                ids += u->id;
            }
            detail::add(report, Severity::Error, "multiple-roots", ultimates[1]->id,
                        "multiple roots: " + std::to_string(ultimates.size()) +
                            " ultimate facta (" + ids + ")");
            return report;
        }
    }

    // Element-level checks. Text that is only whitespace counts as empty.
    for (const auto& f : tree.facta) {
        if (text::collapse_whitespace(f.text).empty())
            detail::add(report, Severity::Error, "empty-text", f.id,
                        "factum \"" + f.id + "\" has empty text");
        if (f.span && f.span->start >= f.span->end)
            detail::add(report, Severity::Error, "span-invalid", f.id,
                        "factum \"" + f.id + "\" has an empty or inverted span");
        if (f.kind == FactumKind::Ultimate && f.span)
            detail::add(report, Severity::Error, "ultimate-span", f.id,
                        "ultimate factum \"" + f.id + "\" must not carry a span");
    }
    for (const auto& v : tree.evidence) {
        if (text::collapse_whitespace(v.text).empty())
            detail::add(report, Severity::Error, "empty-text", v.id,
                        "evidence \"" + v.id + "\" has empty text");
        if (v.span && v.span->start >= v.span->end)
            detail::add(report, Severity::Error, "span-invalid", v.id,
                        "evidence \"" + v.id + "\" has an empty or inverted span");
    }

    // Link kinds and duplicates.
    {
        std::set<std::pair<std::string, std::string>> seen;
        for (const auto& l : tree.links) {
            const Factum* f = facta_by_id.at(l.factum_id);
            if (f->kind != FactumKind::Interim)
                detail::add(report, Severity::Error, "link-factum-kind", l.factum_id,
                            "link targets non-interim factum \"" + l.factum_id + "\"");
            if (!seen.emplace(l.factum_id, l.evidence_id).second)
                detail::add(report, Severity::Error, "duplicate-link",
                            l.factum_id + "->" + l.evidence_id,
                            "duplicate link (" + l.factum_id + ", " + l.evidence_id + ")");
        }
    }

    // Edge kinds and per-interim edge counts.
    {
        std::unordered_map<std::string, std::size_t> edge_count;
        for (const auto& e : tree.edges) {
            const Factum* child = facta_by_id.at(e.child_id);
            const Factum* parent = facta_by_id.at(e.parent_id);
            if (child->kind != FactumKind::Interim)
                detail::add(report, Severity::Error, "edge-child-kind", e.child_id,
                            "edge child \"" + e.child_id + "\" is not an interim factum");
            if (parent->kind != FactumKind::Ultimate)
                detail::add(report, Severity::Error, "edge-parent-kind", e.parent_id,
                            "edge parent \"" + e.parent_id + "\" is not the ultimate factum");
            ++edge_count[e.child_id];
        }
        for (const auto& f : tree.facta) {
            if (f.kind != FactumKind::Interim) continue;
            const std::size_t n = edge_count.count(f.id) ? edge_count.at(f.id) : 0;
            if (n != 1)
                detail::add(report, Severity::Error, "edge-count", f.id,
                            "interim factum \"" + f.id + "\" has " + std::to_string(n) +
                                " edges to the root (expected exactly 1)");
        }
    }

    // Support coverage: interim facta without evidence and evidence without
    // links are tolerated as warnings so partially annotated data loads.
    {
        std::unordered_set<std::string> supported, used_evidence;
        for (const auto& l : tree.links) {
            supported.insert(l.factum_id);
            used_evidence.insert(l.evidence_id);
        }
        for (const auto& f : tree.facta)
            if (f.kind == FactumKind::Interim && !supported.count(f.id))
                detail::add(report, Severity::Warning, "unsupported-interim", f.id,
                            "interim factum \"" + f.id + "\" has no supporting evidence");
        for (const auto& v : tree.evidence)
            if (!used_evidence.count(v.id))
                detail::add(report, Severity::Warning, "unlinked-evidence", v.id,
                            "evidence \"" + v.id + "\" supports no factum");
    }

    // ---- stage C: spans against the case text ------------------------------
    if (case_text && report.ok()) {
        const std::size_t len = text::length_codepoints(*case_text);
        auto check_span = [&](const std::string& id, const std::string& body,
                              const std::optional<Span>& span) {
            if (!span) return;
            if (span->end > len) {
                detail::add(report, Severity::Error, "span-bounds", id,
                            "span [" + std::to_string(span->start) + ", " +
                                std::to_string(span->end) + ") of \"" + id +
                                "\" exceeds case text length " + std::to_string(len));
                return;  // slicing out of bounds is meaningless; skip the text check
            }
            const std::string slice =
                text::substr_codepoints(*case_text, span->start, span->end);
            if (text::collapse_whitespace(slice) != text::collapse_whitespace(body))
                detail::add(report, Severity::Error, "span-text-mismatch", id,
                            "span of \"" + id + "\" selects \"" + slice +
                                "\" which does not match the recorded text");
        };
        for (const auto& f : tree.facta) check_span(f.id, f.text, f.span);
        for (const auto& v : tree.evidence) check_span(v.id, v.text, v.span);
    }

    return report;
}

// ============================================================================
// Set representations
// ============================================================================

/// The single relation kind used in triples and quadruples.
inline constexpr const char* kSupportsRelation = "supports";

struct Triple {
    std::string factum_text;
    std::string relation;
    std::string evidence_text;

    bool operator==(const Triple&) const = default;
    auto operator<=>(const Triple&) const = default;
};

struct Quadruple {
    std::string factum_text;
    std::string relation;
    std::string evidence_text;
    std::optional<std::string> experience;

    bool operator==(const Quadruple&) const = default;
};

namespace detail {

inline void require_valid(const ReasoningTree& tree) {
    ValidationReport report = validate_tree(tree);
    if (!report.ok()) throw InvalidTree(std::move(report));
}

inline const Factum& factum_by_id(const ReasoningTree& tree, const std::string& id) {
    for (const auto& f : tree.facta)
        if (f.id == id) return f;
    throw std::logic_error("factum id not found: " + id);
}

inline const EvidenceItem& evidence_by_id(const ReasoningTree& tree, const std::string& id) {
    for (const auto& v : tree.evidence)
        if (v.id == id) return v;
    throw std::logic_error("evidence id not found: " + id);
}

/// Links sorted by (factum_id, evidence_id) for order-stable projections.
inline std::vector<const InferenceLink*> sorted_links(const ReasoningTree& tree) {
    std::vector<const InferenceLink*> out;
    out.reserve(tree.links.size());
    for (const auto& l : tree.links) out.push_back(&l);
    std::sort(out.begin(), out.end(), [](const InferenceLink* a, const InferenceLink* b) {
        return std::tie(a->factum_id, a->evidence_id) < std::tie(b->factum_id, b->evidence_id);
    });
    return out;
}

}  // namespace detail

/// Pointer to the tree's single ultimate factum, or nullptr when the tree is
/// malformed (zero or several roots).
inline const Factum* find_ultimate(const ReasoningTree& tree) {
    const Factum* found = nullptr;
    for (const auto& f : tree.facta) {
        if (f.kind != FactumKind::Ultimate) continue;
        if (found) return nullptr;
        found = &f;
    }
    return found;
}

/// One (factum text, "supports", evidence text) triple per inference link.
/// Throws InvalidTree when the tree has validation errors.
inline std::set<Triple> to_triples(const ReasoningTree& tree) {
    detail::require_valid(tree);
    std::set<Triple> out;
    for (const auto& l : tree.links) {
        out.insert(Triple{detail::factum_by_id(tree, l.factum_id).text, kSupportsRelation,
                          detail::evidence_by_id(tree, l.evidence_id).text});
    }
    return out;
}

/// One quadruple per experience on each link; links without experiences
/// contribute a single quadruple with no experience. Output is sorted by
/// (factum_id, evidence_id, experience position) and therefore stable under
/// permutation of the tree's link list.
inline std::vector<Quadruple> to_quadruples(const ReasoningTree& tree) {
    detail::require_valid(tree);
    std::vector<Quadruple> out;
    for (const InferenceLink* l : detail::sorted_links(tree)) {
        const std::string& ft = detail::factum_by_id(tree, l->factum_id).text;
        const std::string& vt = detail::evidence_by_id(tree, l->evidence_id).text;
        if (l->experiences.empty()) {
            out.push_back(Quadruple{ft, kSupportsRelation, vt, std::nullopt});
        } else {
            for (const auto& e : l->experiences)
                out.push_back(Quadruple{ft, kSupportsRelation, vt, e});
        }
    }
    return out;
}

/// Assembles and validates a tree in one step; errors abort construction.
inline ReasoningTree build_tree(std::vector<Factum> facta, std::vector<EvidenceItem> evidence,
                                std::vector<InferenceLink> links, std::vector<FactEdge> edges) {
    ReasoningTree tree{std::move(facta), std::move(evidence), std::move(links), std::move(edges)};
    ValidationReport report = validate_tree(tree);
    if (!report.ok()) throw InvalidTree(std::move(report));
    return tree;
}

}  // namespace lawreason
