#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lawreason/text.hpp"

// Rouge-1/2/L scoring over token sequences, the primitive under every metric
// in this library. Tokenization is character-level for CJK text and
// whitespace-word-level otherwise; Latin letters are lowercased.

namespace lawreason::rouge {

enum class Mode { Character, Word };
enum class Variant { Rouge1, Rouge2, RougeL };

inline const char* variant_name(Variant v) {
    switch (v) {
        case Variant::Rouge1: return "rouge1";
        case Variant::Rouge2: return "rouge2";
        case Variant::RougeL: return "rougel";
    }
    return "rouge?";
}

struct TokenSequence {
    std::vector<std::string> tokens;
    Mode mode = Mode::Word;
};

struct Score {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

inline double f1_of(double p, double r) {
    return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

/// Character mode for any text containing CJK scalars, Word mode otherwise.
inline Mode detect_mode(std::string_view s) {
    return text::contains_cjk(s) ? Mode::Character : Mode::Word;
}

inline TokenSequence tokenize(std::string_view s, Mode mode) {
    TokenSequence seq;
    seq.mode = mode;
    const auto cps = text::decode_utf8(s);
    if (mode == Mode::Character) {
        for (char32_t cp : cps) {
            if (text::is_space(cp)) continue;
            std::string tok;
            text::append_utf8(tok, text::lower_latin(cp));
            seq.tokens.push_back(std::move(tok));
        }
    } else {
        std::string tok;
        for (char32_t cp : cps) {
            if (text::is_space(cp)) {
                if (!tok.empty()) seq.tokens.push_back(std::move(tok));
                tok.clear();
            } else {
                text::append_utf8(tok, text::lower_latin(cp));
            }
        }
        if (!tok.empty()) seq.tokens.push_back(std::move(tok));
    }
    return seq;
}

inline TokenSequence tokenize(std::string_view s) {
    return tokenize(s, detect_mode(s));
}

namespace detail {

inline std::vector<std::string> ngrams(const std::vector<std::string>& tokens, int n) {
    std::vector<std::string> grams;
    if (tokens.size() < static_cast<std::size_t>(n)) return grams;
    grams.reserve(tokens.size() - n + 1);
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string g = tokens[i];
        for (int j = 1; j < n; ++j) {
            g.push_back('\x1f');
            g += tokens[i + j];
        }
        grams.push_back(std::move(g));
    }
    return grams;
}

}  // namespace detail

/// Rouge-N with clipped counts: overlap is the per-gram multiset
/// intersection. Both n-gram sets empty scores 1 (vacuous match); exactly
/// one empty scores 0.
inline Score rouge_n(const TokenSequence& reference, const TokenSequence& hypothesis, int n) {
    const auto ref_grams = detail::ngrams(reference.tokens, n);
    const auto hyp_grams = detail::ngrams(hypothesis.tokens, n);
    if (ref_grams.empty() && hyp_grams.empty()) return {1.0, 1.0, 1.0};
    if (ref_grams.empty() || hyp_grams.empty()) return {0.0, 0.0, 0.0};

    std::unordered_map<std::string, int> ref_counts;
    for (const auto& g : ref_grams) ++ref_counts[g];
    std::size_t overlap = 0;
    for (const auto& g : hyp_grams) {
        auto it = ref_counts.find(g);
        if (it != ref_counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    Score s;
    s.precision = static_cast<double>(overlap) / static_cast<double>(hyp_grams.size());
    s.recall = static_cast<double>(overlap) / static_cast<double>(ref_grams.size());
    s.f1 = f1_of(s.precision, s.recall);
    return s;
}

namespace detail {

inline std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0), curr(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1])
                curr[j] = prev[j - 1] + 1;
            else
                curr[j] = std::max(prev[j], curr[j - 1]);
        }
        std::swap(prev, curr);
    }
    return prev[b.size()];
}

}  // namespace detail

/// Rouge-L from longest common subsequence length: precision = L/|hyp|,
/// recall = L/|ref|. Empty-side conventions as in rouge_n.
inline Score rouge_l(const TokenSequence& reference, const TokenSequence& hypothesis) {
    if (reference.tokens.empty() && hypothesis.tokens.empty()) return {1.0, 1.0, 1.0};
    if (reference.tokens.empty() || hypothesis.tokens.empty()) return {0.0, 0.0, 0.0};
    const std::size_t lcs = detail::lcs_length(reference.tokens, hypothesis.tokens);
    Score s;
    s.precision = static_cast<double>(lcs) / static_cast<double>(hypothesis.tokens.size());
    s.recall = static_cast<double>(lcs) / static_cast<double>(reference.tokens.size());
    s.f1 = f1_of(s.precision, s.recall);
    return s;
}

inline Score score(const TokenSequence& reference, const TokenSequence& hypothesis, Variant v) {
    switch (v) {
        case Variant::Rouge1: return rouge_n(reference, hypothesis, 1);
        case Variant::Rouge2: return rouge_n(reference, hypothesis, 2);
        case Variant::RougeL: return rouge_l(reference, hypothesis);
    }
    return {};
}

/// Scores a text pair. Without an explicit mode, Character is used when
/// either side contains CJK scalars.
inline Score score_text(std::string_view reference, std::string_view hypothesis, Variant v,
                        std::optional<Mode> mode = std::nullopt) {
    const Mode m = mode.value_or(
        (text::contains_cjk(reference) || text::contains_cjk(hypothesis)) ? Mode::Character
                                                                          : Mode::Word);
    return score(tokenize(reference, m), tokenize(hypothesis, m), v);
}

}  // namespace lawreason::rouge
