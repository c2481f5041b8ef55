#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "lawreason/corpus.hpp"
#include "lawreason/rouge.hpp"
#include "lawreason/schema.hpp"
#include "lawreason/text.hpp"

// The four-part metric suite: fact-generation score (best-match Rouge
// anchored on gold), evidence triple precision/recall/F, experience scoring
// over quadruples, and the comprehensive structure score — plus the greedy
// alignment machinery that makes set intersections computable on free text.
//
// Scale conventions: s_fact, s_exp and s_c are reported on a 0-100 scale;
// pre/rec/f_evi are fractions in [0,1] (the rendered table scales them by
// 100 for display).

namespace lawreason::metrics {

using nlohmann::json;

class MissingCase : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyGold : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ============================================================================
// Alignment
// ============================================================================

struct AlignedPair {
    std::size_t gold_index = 0;
    std::size_t pred_index = 0;
    std::string gold_id;   // empty when aligning bare texts
    std::string pred_id;   // empty when aligning bare texts
    double score = 0.0;    // Rouge-L f1 of the pair

    bool operator==(const AlignedPair&) const = default;
};

struct FactAlignment {
    std::vector<AlignedPair> pairs;
    double tau = 0.5;

    const AlignedPair* for_pred(std::size_t pred_index) const {
        for (const auto& p : pairs)
            if (p.pred_index == pred_index) return &p;
        return nullptr;
    }
    const AlignedPair* for_gold(std::size_t gold_index) const {
        for (const auto& p : pairs)
            if (p.gold_index == gold_index) return &p;
        return nullptr;
    }
};

/// Greedy one-to-one matching by descending Rouge-L f1; ties broken by
/// (gold index, pred index) ascending; pairs scoring below tau discarded.
inline FactAlignment align_texts(const std::vector<std::string>& gold,
                                 const std::vector<std::string>& pred, double tau = 0.5) {
    if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("align_texts: tau must be in [0,1]");
    struct Candidate {
        double score;
        std::size_t gold_index;
        std::size_t pred_index;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(gold.size() * pred.size());
    for (std::size_t g = 0; g < gold.size(); ++g)
        for (std::size_t p = 0; p < pred.size(); ++p) {
            const double s =
                rouge::score_text(gold[g], pred[p], rouge::Variant::RougeL).f1;
            if (s >= tau) candidates.push_back(Candidate{s, g, p});
        }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return std::tie(a.gold_index, a.pred_index) < std::tie(b.gold_index, b.pred_index);
    });
    FactAlignment out;
    out.tau = tau;
    std::vector<bool> gold_used(gold.size(), false), pred_used(pred.size(), false);
    for (const auto& c : candidates) {
        if (gold_used[c.gold_index] || pred_used[c.pred_index]) continue;
        gold_used[c.gold_index] = true;
        pred_used[c.pred_index] = true;
        out.pairs.push_back(AlignedPair{c.gold_index, c.pred_index, "", "", c.score});
    }
    return out;
}

/// align_texts over factum texts, with the matched ids filled in.
inline FactAlignment align_facts(const std::vector<Factum>& gold, const std::vector<Factum>& pred,
                                 double tau = 0.5) {
    std::vector<std::string> gold_texts, pred_texts;
    gold_texts.reserve(gold.size());
    pred_texts.reserve(pred.size());
    for (const auto& f : gold) gold_texts.push_back(f.text);
    for (const auto& f : pred) pred_texts.push_back(f.text);
    FactAlignment out = align_texts(gold_texts, pred_texts, tau);
    for (auto& p : out.pairs) {
        p.gold_id = gold[p.gold_index].id;
        p.pred_id = pred[p.pred_index].id;
    }
    return out;
}

// ============================================================================
// Fact generation score
// ============================================================================

/// Mean over the gold facts of the best Rouge f1 against any predicted fact,
/// scaled to 0-100. Empty gold scores 100 against empty predictions and 0
/// otherwise; empty predictions against non-empty gold score 0. With
/// `symmetric`, the mean of both anchoring directions is returned.
inline double score_facts(const std::vector<std::string>& gold_facta,
                          const std::vector<std::string>& pred_facta, rouge::Variant variant,
                          bool symmetric = false) {
    auto anchored = [&](const std::vector<std::string>& anchor,
                        const std::vector<std::string>& other) -> double {
        if (anchor.empty()) return other.empty() ? 100.0 : 0.0;
        if (other.empty()) return 0.0;
        double total = 0.0;
        for (const auto& a : anchor) {
            double best = 0.0;
            for (const auto& o : other)
                best = std::max(best, rouge::score_text(a, o, variant).f1);
            total += best;
        }
        return total / static_cast<double>(anchor.size()) * 100.0;
    };
    const double forward = anchored(gold_facta, pred_facta);
    if (!symmetric) return forward;
    return (forward + anchored(pred_facta, gold_facta)) / 2.0;
}

inline std::vector<std::string> factum_texts(const ReasoningTree& tree) {
    std::vector<std::string> out;
    out.reserve(tree.facta.size());
    for (const auto& f : tree.facta) out.push_back(f.text);
    return out;
}

inline std::vector<Factum> interim_facta(const ReasoningTree& tree) {
    std::vector<Factum> out;
    for (const auto& f : tree.facta)
        if (f.kind == FactumKind::Interim) out.push_back(f);
    return out;
}

// ============================================================================
// Evidence triple score
// ============================================================================

struct MatcherSpec {
    enum class Kind { Exact, Aligned };
    Kind kind = Kind::Aligned;
    double tau = 0.5;

    bool operator==(const MatcherSpec&) const = default;
};

inline const char* matcher_kind_name(MatcherSpec::Kind k) {
    return k == MatcherSpec::Kind::Exact ? "exact" : "aligned";
}

inline std::optional<MatcherSpec::Kind> matcher_kind_from_name(std::string_view s) {
    if (s == "exact") return MatcherSpec::Kind::Exact;
    if (s == "aligned") return MatcherSpec::Kind::Aligned;
    return std::nullopt;
}

/// Precision/recall/F over support triples, as fractions, plus the raw set
/// sizes so corpus-level (micro) scores can be summed across cases.
struct EvidenceScores {
    double pre = 0.0;
    double rec = 0.0;
    double f_evi = 0.0;
    std::size_t intersection = 0;
    std::size_t gold_size = 0;
    std::size_t pred_size = 0;

    bool operator==(const EvidenceScores&) const = default;
};

namespace detail {

inline void require_valid(const ReasoningTree& tree) {
    ValidationReport r = validate_tree(tree);
    if (!r.ok()) throw InvalidTree(std::move(r));
}

inline EvidenceScores scores_from_counts(std::size_t intersection, std::size_t gold_size,
                                         std::size_t pred_size) {
    EvidenceScores s;
    s.intersection = intersection;
    s.gold_size = gold_size;
    s.pred_size = pred_size;
    if (gold_size == 0 && pred_size == 0) {
        s.pre = s.rec = s.f_evi = 1.0;
        return s;
    }
    s.pre = pred_size > 0 ? static_cast<double>(intersection) / static_cast<double>(pred_size)
                          : 0.0;
    s.rec = gold_size > 0 ? static_cast<double>(intersection) / static_cast<double>(gold_size)
                          : 0.0;
    s.f_evi = rouge::f1_of(s.pre, s.rec);
    return s;
}

/// Triple keys under the Exact matcher: normalized factum and evidence text.
inline std::set<std::pair<std::string, std::string>> exact_keys(const ReasoningTree& tree) {
    std::set<std::pair<std::string, std::string>> keys;
    for (const Triple& t : to_triples(tree))
        keys.emplace(text::normalize(t.factum_text), text::normalize(t.evidence_text));
    return keys;
}

}  // namespace detail

/// Triple-set precision/recall/F between gold and predicted trees.
///
/// Exact matcher: triples equal when both the factum text and the evidence
/// text match after normalization (trim, collapse whitespace, strip terminal
/// punctuation).
///
/// Aligned matcher: predicted facta are first aligned one-to-one to gold
/// facta (greedy Rouge-L, threshold tau); a predicted triple is rewritten to
/// its aligned gold factum id (unaligned facta can never match) and evidence
/// is compared by normalized text.
///
/// Conventions: both sides empty -> 1/1/1; predicted empty against non-empty
/// gold -> 0/0/0.
inline EvidenceScores score_evidence(const ReasoningTree& gold, const ReasoningTree& pred,
                                     const MatcherSpec& matcher = {}) {
    detail::require_valid(gold);
    detail::require_valid(pred);

    if (matcher.kind == MatcherSpec::Kind::Exact) {
        const auto gold_keys = detail::exact_keys(gold);
        const auto pred_keys = detail::exact_keys(pred);
        std::size_t inter = 0;
        for (const auto& k : pred_keys) inter += gold_keys.count(k);
        return detail::scores_from_counts(inter, gold_keys.size(), pred_keys.size());
    }

    const FactAlignment alignment =
        align_facts(interim_facta(gold), interim_facta(pred), matcher.tau);
    std::unordered_map<std::string, std::string> pred_to_gold;
    for (const auto& p : alignment.pairs) pred_to_gold[p.pred_id] = p.gold_id;

    std::set<std::pair<std::string, std::string>> gold_keys, pred_keys;
    for (const auto& l : gold.links)
        gold_keys.emplace(l.factum_id,
                          text::normalize(lawreason::detail::evidence_by_id(gold, l.evidence_id).text));
    for (const auto& l : pred.links) {
        const auto it = pred_to_gold.find(l.factum_id);
        // Unaligned predicted facta keep a sentinel key that can never match
        // a gold key but still counts toward |pred|.
        const std::string factum_key =
            it != pred_to_gold.end() ? it->second : "\x01unaligned:" + l.factum_id;
        pred_keys.emplace(factum_key,
                          text::normalize(lawreason::detail::evidence_by_id(pred, l.evidence_id).text));
    }
    std::size_t inter = 0;
    for (const auto& k : pred_keys) inter += gold_keys.count(k);
    return detail::scores_from_counts(inter, gold_keys.size(), pred_keys.size());
}

// ============================================================================
// Experience score
// ============================================================================

/// Experience agreement for one matched relation: both absent -> 1, exactly
/// one absent -> 0, both present -> Rouge f1 of the pair.
inline double r_exp(const std::optional<std::string>& gold_experience,
                    const std::optional<std::string>& pred_experience, rouge::Variant variant) {
    if (!gold_experience && !pred_experience) return 1.0;
    if (!gold_experience || !pred_experience) return 0.0;
    return rouge::score_text(*gold_experience, *pred_experience, variant).f1;
}

namespace detail {

/// Experience candidates for one link: its experiences, or a single absent
/// experience when it has none.
inline std::vector<std::optional<std::string>> experience_candidates(
    const std::vector<std::string>& experiences) {
    std::vector<std::optional<std::string>> out;
    if (experiences.empty()) {
        out.push_back(std::nullopt);
    } else {
        for (const auto& e : experiences) out.push_back(e);
    }
    return out;
}

}  // namespace detail

/// Scores predicted experience quadruples against gold, 0-100. Each predicted
/// quadruple is located in gold by aligning its factum endpoint (greedy
/// Rouge-L, threshold tau) and matching the evidence endpoint by normalized
/// text; a located quadruple scores the best r_exp over the gold link's
/// experience candidates, an unlocated one scores 0. The mean over the t
/// predicted quadruples is returned; with t = 0 the score is 100 exactly when
/// gold has no quadruples either.
inline double score_experience(const ReasoningTree& gold, const ReasoningTree& pred,
                               rouge::Variant variant, double tau = 0.5) {
    detail::require_valid(gold);
    detail::require_valid(pred);

    std::size_t t = 0;
    for (const auto& l : pred.links) t += std::max<std::size_t>(1, l.experiences.size());
    if (t == 0) return gold.links.empty() ? 100.0 : 0.0;

    const FactAlignment alignment =
        align_facts(interim_facta(gold), interim_facta(pred), tau);
    std::unordered_map<std::string, std::string> pred_to_gold;
    for (const auto& p : alignment.pairs) pred_to_gold[p.pred_id] = p.gold_id;

    std::map<std::pair<std::string, std::string>, const InferenceLink*> gold_by_key;
    for (const auto& l : gold.links)
        gold_by_key[{l.factum_id,
                     text::normalize(lawreason::detail::evidence_by_id(gold, l.evidence_id).text)}] = &l;

    double total = 0.0;
    for (const auto& l : pred.links) {
        const InferenceLink* gold_link = nullptr;
        const auto it = pred_to_gold.find(l.factum_id);
        if (it != pred_to_gold.end()) {
            const auto git = gold_by_key.find(
                {it->second,
                 text::normalize(lawreason::detail::evidence_by_id(pred, l.evidence_id).text)});
            if (git != gold_by_key.end()) gold_link = git->second;
        }
        const auto pred_cands = detail::experience_candidates(l.experiences);
        if (!gold_link) continue;  // every quadruple of this link contributes 0
        const auto gold_cands = detail::experience_candidates(gold_link->experiences);
        for (const auto& pe : pred_cands) {
            double best = 0.0;
            for (const auto& ge : gold_cands) best = std::max(best, r_exp(ge, pe, variant));
            total += best;
        }
    }
    return total / static_cast<double>(t) * 100.0;
}

// ============================================================================
// Comprehensive structure score
// ============================================================================

/// One directed support relation with its endpoint texts: evidence -> interim
/// factum for links, interim -> ultimate factum for edges. Edges carry no
/// experiences (their candidate list is the single absent experience).
struct Relation {
    std::string src_text;
    std::string dst_text;
    std::vector<std::string> experiences;

    bool operator==(const Relation&) const = default;
};

/// The tree's relations in a deterministic order: links sorted by
/// (factum_id, evidence_id), then edges sorted by (child_id, parent_id).
inline std::vector<Relation> relations_of(const ReasoningTree& tree) {
    std::vector<Relation> out;
    for (const InferenceLink* l : lawreason::detail::sorted_links(tree))
        out.push_back(Relation{lawreason::detail::evidence_by_id(tree, l->evidence_id).text,
                               lawreason::detail::factum_by_id(tree, l->factum_id).text,
                               l->experiences});
    std::vector<const FactEdge*> edges;
    for (const auto& e : tree.edges) edges.push_back(&e);
    std::sort(edges.begin(), edges.end(), [](const FactEdge* a, const FactEdge* b) {
        return std::tie(a->child_id, a->parent_id) < std::tie(b->child_id, b->parent_id);
    });
    for (const FactEdge* e : edges)
        out.push_back(Relation{lawreason::detail::factum_by_id(tree, e->child_id).text,
                               lawreason::detail::factum_by_id(tree, e->parent_id).text,
                               {}});
    return out;
}

/// Mean of the endpoint Rouge f1 scores of two relations.
inline double rouge_sum(const Relation& gold, const Relation& pred, rouge::Variant variant) {
    return (rouge::score_text(gold.src_text, pred.src_text, variant).f1 +
            rouge::score_text(gold.dst_text, pred.dst_text, variant).f1) /
           2.0;
}

/// For each predicted relation, the index of the gold relation with the
/// highest rouge_sum (ties resolved to the lowest gold index).
inline std::vector<std::size_t> comprehensive_matches(const std::vector<Relation>& gold,
                                                      const std::vector<Relation>& pred,
                                                      rouge::Variant variant) {
    std::vector<std::size_t> out;
    out.reserve(pred.size());
    for (const auto& p : pred) {
        std::size_t best_index = 0;
        double best_score = -1.0;
        for (std::size_t g = 0; g < gold.size(); ++g) {
            const double s = rouge_sum(gold[g], p, variant);
            if (s > best_score) {
                best_score = s;
                best_index = g;
            }
        }
        out.push_back(best_index);
    }
    return out;
}

/// Overall structure score, 0-100. Every predicted relation is matched to its
/// best gold relation by rouge_sum; the summand per prediction is
/// rouge_sum + the best experience agreement between the two relations'
/// candidate lists, the sum is divided by max(|pred|, |gold|), and the result
/// is halved and scaled so that gold-vs-gold scores exactly 100.
inline double score_comprehensive(const ReasoningTree& gold, const ReasoningTree& pred,
                                  rouge::Variant variant = rouge::Variant::RougeL) {
    detail::require_valid(gold);
    detail::require_valid(pred);
    const std::vector<Relation> gold_rels = relations_of(gold);
    if (gold_rels.empty()) throw EmptyGold("comprehensive score undefined: gold has no relations");
    const std::vector<Relation> pred_rels = relations_of(pred);
    if (pred_rels.empty()) return 0.0;

    const std::vector<std::size_t> match = comprehensive_matches(gold_rels, pred_rels, variant);
    double total = 0.0;
    for (std::size_t p = 0; p < pred_rels.size(); ++p) {
        const Relation& gr = gold_rels[match[p]];
        const Relation& pr = pred_rels[p];
        double best_exp = 0.0;
        for (const auto& ge : detail::experience_candidates(gr.experiences))
            for (const auto& pe : detail::experience_candidates(pr.experiences))
                best_exp = std::max(best_exp, r_exp(ge, pe, variant));
        total += rouge_sum(gr, pr, variant) + best_exp;
    }
    const double denom = static_cast<double>(std::max(gold_rels.size(), pred_rels.size()));
    return total / denom / 2.0 * 100.0;
}

// ============================================================================
// Whole-split evaluation
// ============================================================================

struct PerVariant {
    double rouge1 = 0.0;
    double rouge2 = 0.0;
    double rougel = 0.0;

    bool operator==(const PerVariant&) const = default;
};

struct EvaluateConfig {
    MatcherSpec matcher;
    rouge::Variant comprehensive_variant = rouge::Variant::RougeL;
    bool symmetric_facts = false;

    bool operator==(const EvaluateConfig&) const = default;
};

struct CaseScores {
    PerVariant s_fact;
    double pre = 0.0;
    double rec = 0.0;
    double f_evi = 0.0;
    PerVariant s_exp;
    double s_c = 0.0;
    std::size_t evidence_intersection = 0;
    std::size_t evidence_gold = 0;
    std::size_t evidence_pred = 0;
    std::vector<std::string> notices;

    bool operator==(const CaseScores&) const = default;
};

struct AggregateScores {
    PerVariant s_fact;
    double pre = 0.0;
    double rec = 0.0;
    double f_evi = 0.0;
    PerVariant s_exp;
    double s_c = 0.0;

    bool operator==(const AggregateScores&) const = default;
};

struct MetricReport {
    EvaluateConfig config;
    std::map<std::string, CaseScores> per_case;
    AggregateScores aggregate;   // arithmetic mean of per-case values
    double micro_pre = 0.0;      // corpus-level sums of the evidence counts
    double micro_rec = 0.0;
    double micro_f_evi = 0.0;

    bool operator==(const MetricReport&) const = default;
};

namespace detail {

inline PerVariant per_variant(const std::function<double(rouge::Variant)>& f) {
    return PerVariant{f(rouge::Variant::Rouge1), f(rouge::Variant::Rouge2),
                      f(rouge::Variant::RougeL)};
}

}  // namespace detail

/// Scores one prediction (or its absence) against one gold tree.
inline CaseScores score_case(const ReasoningTree& gold, const ReasoningTree* pred,
                             const EvaluateConfig& config) {
    CaseScores out;
    if (relations_of(gold).empty())
        throw EmptyGold("comprehensive score undefined: gold has no relations");
    if (!pred) {
        // Missing prediction: the empty-prediction conventions of each score.
        out.s_fact = detail::per_variant([&](rouge::Variant) {
            return gold.facta.empty() ? 100.0 : 0.0;
        });
        const std::size_t gold_size = config.matcher.kind == MatcherSpec::Kind::Exact
                                          ? detail::exact_keys(gold).size()
                                          : gold.links.size();
        const EvidenceScores ev = detail::scores_from_counts(0, gold_size, 0);
        out.pre = ev.pre;
        out.rec = ev.rec;
        out.f_evi = ev.f_evi;
        out.evidence_intersection = ev.intersection;
        out.evidence_gold = ev.gold_size;
        out.evidence_pred = ev.pred_size;
        out.s_exp = detail::per_variant([&](rouge::Variant) {
            return gold.links.empty() ? 100.0 : 0.0;
        });
        out.s_c = 0.0;
        out.notices.push_back("no prediction for this case; scored as empty");
        return out;
    }

    detail::require_valid(*pred);
    const std::vector<std::string> gold_texts = factum_texts(gold);
    const std::vector<std::string> pred_texts = factum_texts(*pred);
    out.s_fact = detail::per_variant([&](rouge::Variant v) {
        return score_facts(gold_texts, pred_texts, v, config.symmetric_facts);
    });
    const EvidenceScores ev = score_evidence(gold, *pred, config.matcher);
    out.pre = ev.pre;
    out.rec = ev.rec;
    out.f_evi = ev.f_evi;
    out.evidence_intersection = ev.intersection;
    out.evidence_gold = ev.gold_size;
    out.evidence_pred = ev.pred_size;
    out.s_exp = detail::per_variant([&](rouge::Variant v) {
        return score_experience(gold, *pred, v, config.matcher.tau);
    });
    out.s_c = score_comprehensive(gold, *pred, config.comprehensive_variant);
    return out;
}

/// Scores every gold case against the prediction with the same case_id. Gold
/// cases without a prediction are scored under the empty-prediction
/// conventions and annotated with a notice; a prediction whose case_id does
/// not appear in the gold split is an error.
inline MetricReport evaluate(const corpus::DatasetSplit& gold,
                             const std::vector<corpus::PredictionRecord>& predictions,
                             const EvaluateConfig& config = {}) {
    std::unordered_map<std::string, const corpus::PredictionRecord*> by_id;
    for (const auto& p : predictions) {
        if (!gold.find(p.case_id))
            throw MissingCase("prediction for unknown case \"" + p.case_id + "\"");
        if (!by_id.emplace(p.case_id, &p).second)
            throw corpus::FormatError("duplicate prediction for case \"" + p.case_id + "\"");
    }

    MetricReport report;
    report.config = config;
    std::size_t inter_sum = 0, gold_sum = 0, pred_sum = 0;
    for (const auto& c : gold.cases) {
        const auto it = by_id.find(c.case_id);
        const ReasoningTree* pred = it != by_id.end() ? &it->second->predicted : nullptr;
        CaseScores scores = score_case(c.gold, pred, config);
        inter_sum += scores.evidence_intersection;
        gold_sum += scores.evidence_gold;
        pred_sum += scores.evidence_pred;
        report.per_case.emplace(c.case_id, std::move(scores));
    }

    const double k = static_cast<double>(report.per_case.size());
    if (k > 0) {
        AggregateScores& agg = report.aggregate;
        for (const auto& [id, s] : report.per_case) {
            agg.s_fact.rouge1 += s.s_fact.rouge1;
            agg.s_fact.rouge2 += s.s_fact.rouge2;
            agg.s_fact.rougel += s.s_fact.rougel;
            agg.pre += s.pre;
            agg.rec += s.rec;
            agg.f_evi += s.f_evi;
            agg.s_exp.rouge1 += s.s_exp.rouge1;
            agg.s_exp.rouge2 += s.s_exp.rouge2;
            agg.s_exp.rougel += s.s_exp.rougel;
            agg.s_c += s.s_c;
        }
        agg.s_fact.rouge1 /= k;
        agg.s_fact.rouge2 /= k;
        agg.s_fact.rougel /= k;
        agg.pre /= k;
        agg.rec /= k;
        agg.f_evi /= k;
        agg.s_exp.rouge1 /= k;
        agg.s_exp.rouge2 /= k;
        agg.s_exp.rougel /= k;
        agg.s_c /= k;
    }
    const EvidenceScores micro = detail::scores_from_counts(inter_sum, gold_sum, pred_sum);
    report.micro_pre = micro.pre;
    report.micro_rec = micro.rec;
    report.micro_f_evi = micro.f_evi;
    return report;
}

// ============================================================================
// Report serialization and rendering
// ============================================================================

inline json per_variant_to_json(const PerVariant& v) {
    return json{{"rouge1", v.rouge1}, {"rouge2", v.rouge2}, {"rougel", v.rougel}};
}

inline PerVariant per_variant_from_json(const json& j) {
    return PerVariant{j.at("rouge1").get<double>(), j.at("rouge2").get<double>(),
                      j.at("rougel").get<double>()};
}

inline json config_to_json(const EvaluateConfig& c) {
    return json{{"matcher", matcher_kind_name(c.matcher.kind)},
                {"tau", c.matcher.tau},
                {"comprehensive_variant", rouge::variant_name(c.comprehensive_variant)},
                {"symmetric_facts", c.symmetric_facts}};
}

inline EvaluateConfig config_from_json(const json& j) {
    EvaluateConfig c;
    if (j.contains("matcher")) {
        const auto kind = matcher_kind_from_name(j.at("matcher").get<std::string>());
        if (!kind)
            throw corpus::FormatError("unknown matcher \"" + j.at("matcher").get<std::string>() +
                                      "\"");
        c.matcher.kind = *kind;
    }
    if (j.contains("tau")) c.matcher.tau = j.at("tau").get<double>();
    if (j.contains("comprehensive_variant")) {
        const std::string name = j.at("comprehensive_variant").get<std::string>();
        if (name == "rouge1")
            c.comprehensive_variant = rouge::Variant::Rouge1;
        else if (name == "rouge2")
            c.comprehensive_variant = rouge::Variant::Rouge2;
        else if (name == "rougel")
            c.comprehensive_variant = rouge::Variant::RougeL;
        else
            throw corpus::FormatError("unknown rouge variant \"" + name + "\"");
    }
    if (j.contains("symmetric_facts")) c.symmetric_facts = j.at("symmetric_facts").get<bool>();
    return c;
}

inline json report_to_json(const MetricReport& r) {
    json per_case = json::object();
    for (const auto& [id, s] : r.per_case) {
        per_case[id] = json{{"s_fact", per_variant_to_json(s.s_fact)},
                            {"pre", s.pre},
                            {"rec", s.rec},
                            {"f_evi", s.f_evi},
                            {"s_exp", per_variant_to_json(s.s_exp)},
                            {"s_c", s.s_c},
                            {"evidence_counts",
                             json{{"intersection", s.evidence_intersection},
                                  {"gold", s.evidence_gold},
                                  {"pred", s.evidence_pred}}},
                            {"notices", s.notices}};
    }
    return json{{"config", config_to_json(r.config)},
                {"per_case", std::move(per_case)},
                {"aggregate", json{{"s_fact", per_variant_to_json(r.aggregate.s_fact)},
                                   {"pre", r.aggregate.pre},
                                   {"rec", r.aggregate.rec},
                                   {"f_evi", r.aggregate.f_evi},
                                   {"s_exp", per_variant_to_json(r.aggregate.s_exp)},
                                   {"s_c", r.aggregate.s_c}}},
                {"micro", json{{"pre", r.micro_pre}, {"rec", r.micro_rec}, {"f_evi", r.micro_f_evi}}}};
}

inline MetricReport report_from_json(const json& j) {
    MetricReport r;
    r.config = config_from_json(j.at("config"));
    for (const auto& [id, js] : j.at("per_case").items()) {
        CaseScores s;
        s.s_fact = per_variant_from_json(js.at("s_fact"));
        s.pre = js.at("pre").get<double>();
        s.rec = js.at("rec").get<double>();
        s.f_evi = js.at("f_evi").get<double>();
        s.s_exp = per_variant_from_json(js.at("s_exp"));
        s.s_c = js.at("s_c").get<double>();
        const json& counts = js.at("evidence_counts");
        s.evidence_intersection = counts.at("intersection").get<std::size_t>();
        s.evidence_gold = counts.at("gold").get<std::size_t>();
        s.evidence_pred = counts.at("pred").get<std::size_t>();
        for (const auto& n : js.at("notices")) s.notices.push_back(n.get<std::string>());
        r.per_case.emplace(id, std::move(s));
    }
    const json& agg = j.at("aggregate");
    r.aggregate.s_fact = per_variant_from_json(agg.at("s_fact"));
    r.aggregate.pre = agg.at("pre").get<double>();
    r.aggregate.rec = agg.at("rec").get<double>();
    r.aggregate.f_evi = agg.at("f_evi").get<double>();
    r.aggregate.s_exp = per_variant_from_json(agg.at("s_exp"));
    r.aggregate.s_c = agg.at("s_c").get<double>();
    const json& micro = j.at("micro");
    r.micro_pre = micro.at("pre").get<double>();
    r.micro_rec = micro.at("rec").get<double>();
    r.micro_f_evi = micro.at("f_evi").get<double>();
    return r;
}

/// Plain-text score table. Columns follow the fixed order
/// S_fact-1,2,l | Pre, Rec, F_evi | S_exp-1,2,l | S_c; the fraction-valued
/// evidence scores are shown on the same 0-100 scale as the rest.
inline std::string render_table(const MetricReport& r) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    const int name_w = [&] {
        std::size_t w = 9;  // "aggregate"
        for (const auto& [id, s] : r.per_case) w = std::max(w, id.size());
        return static_cast<int>(w);
    }();
    auto header = [&] {
        os << std::left << std::setw(name_w) << "case" << std::right;
        for (const char* col : {"S_fact-1", "S_fact-2", "S_fact-l", "Pre", "Rec", "F_evi",
                                "S_exp-1", "S_exp-2", "S_exp-l", "S_c"})
            os << "  " << std::setw(8) << col;
        os << '\n';
    };
    auto row = [&](const std::string& name, const PerVariant& s_fact, double pre, double rec,
                   double f_evi, const PerVariant& s_exp, double s_c) {
        os << std::left << std::setw(name_w) << name << std::right;
        for (double v : {s_fact.rouge1, s_fact.rouge2, s_fact.rougel, pre * 100.0, rec * 100.0,
                         f_evi * 100.0, s_exp.rouge1, s_exp.rouge2, s_exp.rougel, s_c})
            os << "  " << std::setw(8) << v;
        os << '\n';
    };
    header();
    for (const auto& [id, s] : r.per_case)
        row(id, s.s_fact, s.pre, s.rec, s.f_evi, s.s_exp, s.s_c);
    row("aggregate", r.aggregate.s_fact, r.aggregate.pre, r.aggregate.rec, r.aggregate.f_evi,
        r.aggregate.s_exp, r.aggregate.s_c);
    os << "micro-evidence  Pre " << r.micro_pre * 100.0 << "  Rec " << r.micro_rec * 100.0
       << "  F_evi " << r.micro_f_evi * 100.0 << '\n';
    return os.str();
}

}  // namespace lawreason::metrics
