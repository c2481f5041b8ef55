#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Text utilities shared across the library: UTF-8 decoding, code-point
// level slicing (spans are code-point offsets, stable for CJK text),
// sentence segmentation and the normalization used by the metrics.

namespace lawreason::text {

// ----------------------------------------------------------------------------
// UTF-8
// ----------------------------------------------------------------------------

inline constexpr char32_t kReplacementChar = 0xFFFD;

/// Decodes UTF-8 into code points. Invalid byte sequences decode to U+FFFD
/// one byte at a time, so decoding never fails.
inline std::vector<char32_t> decode_utf8(std::string_view s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    std::size_t i = 0;
    const auto cont = [&](std::size_t idx) {
        return idx < s.size() && (static_cast<unsigned char>(s[idx]) & 0xC0) == 0x80;
    };
    while (i < s.size()) {
        const unsigned char b0 = static_cast<unsigned char>(s[i]);
        if (b0 < 0x80) {
            out.push_back(b0);
            i += 1;
        } else if ((b0 & 0xE0) == 0xC0 && cont(i + 1)) {
            char32_t cp = (static_cast<char32_t>(b0 & 0x1F) << 6) |
                          (static_cast<unsigned char>(s[i + 1]) & 0x3F);
            out.push_back(cp < 0x80 ? kReplacementChar : cp);
            i += 2;
        } else if ((b0 & 0xF0) == 0xE0 && cont(i + 1) && cont(i + 2)) {
            char32_t cp = (static_cast<char32_t>(b0 & 0x0F) << 12) |
                          ((static_cast<unsigned char>(s[i + 1]) & 0x3F) << 6) |
                          (static_cast<unsigned char>(s[i + 2]) & 0x3F);
            out.push_back(cp < 0x800 || (cp >= 0xD800 && cp <= 0xDFFF) ? kReplacementChar : cp);
            i += 3;
        } else if ((b0 & 0xF8) == 0xF0 && cont(i + 1) && cont(i + 2) && cont(i + 3)) {
            char32_t cp = (static_cast<char32_t>(b0 & 0x07) << 18) |
                          ((static_cast<unsigned char>(s[i + 1]) & 0x3F) << 12) |
                          ((static_cast<unsigned char>(s[i + 2]) & 0x3F) << 6) |
                          (static_cast<unsigned char>(s[i + 3]) & 0x3F);
            out.push_back(cp < 0x10000 || cp > 0x10FFFF ? kReplacementChar : cp);
            i += 4;
        } else {
            out.push_back(kReplacementChar);
            i += 1;
        }
    }
    return out;
}

inline void append_utf8(std::string& out, char32_t cp) {
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = kReplacementChar;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline std::string encode_utf8(const std::vector<char32_t>& cps) {
    std::string out;
    out.reserve(cps.size() * 3);
    for (char32_t cp : cps) append_utf8(out, cp);
    return out;
}

inline std::size_t length_codepoints(std::string_view s) {
    return decode_utf8(s).size();
}

/// Substring by code-point offsets, [begin, end). Offsets past the end clamp.
inline std::string substr_codepoints(std::string_view s, std::size_t begin, std::size_t end) {
    const auto cps = decode_utf8(s);
    if (begin > cps.size()) begin = cps.size();
    if (end > cps.size()) end = cps.size();
    std::string out;
    for (std::size_t i = begin; i < end; ++i) append_utf8(out, cps[i]);
    return out;
}

// ----------------------------------------------------------------------------
// Character classes
// ----------------------------------------------------------------------------

inline bool is_space(char32_t cp) {
    switch (cp) {
        case U' ': case U'\t': case U'\n': case U'\r': case U'\f': case U'\v':
        case 0x00A0:  // no-break space
        case 0x3000:  // ideographic space
            return true;
        default:
            return false;
    }
}

/// Han ideographs, kana, hangul, CJK punctuation and fullwidth forms.
inline bool is_cjk(char32_t cp) {
    return (cp >= 0x2E80 && cp <= 0x303F) ||   // radicals, CJK punctuation
           (cp >= 0x3040 && cp <= 0x30FF) ||   // hiragana, katakana
           (cp >= 0x3400 && cp <= 0x4DBF) ||   // ideograph extension A
           (cp >= 0x4E00 && cp <= 0x9FFF) ||   // unified ideographs
           (cp >= 0xAC00 && cp <= 0xD7AF) ||   // hangul syllables
           (cp >= 0xF900 && cp <= 0xFAFF) ||   // compatibility ideographs
           (cp >= 0xFF00 && cp <= 0xFFEF) ||   // halfwidth/fullwidth forms
           (cp >= 0x20000 && cp <= 0x2FA1F);   // extensions B+
}

inline bool contains_cjk(std::string_view s) {
    for (char32_t cp : decode_utf8(s))
        if (is_cjk(cp)) return true;
    return false;
}

inline char32_t lower_latin(char32_t cp) {
    if (cp >= U'A' && cp <= U'Z') return cp + 32;
    return cp;
}

// Sentence-terminal punctuation: CJK and Latin terminators.
inline bool is_sentence_terminal(char32_t cp) {
    switch (cp) {
        case 0x3002:  // 。
        case 0xFF01:  // ！
        case 0xFF1F:  // ？
        case U'!': case U'?': case U'.':
            return true;
        default:
            return false;
    }
}

// Closing quotes and brackets that may trail a sentence terminator.
inline bool is_closing_quote(char32_t cp) {
    switch (cp) {
        case 0x300D:  // 」
        case 0x300F:  // 』
        case 0x201D:  // ”
        case 0x2019:  // ’
        case 0xFF09:  // ）
        case U'"': case U'\'': case U')':
            return true;
        default:
            return false;
    }
}

// ----------------------------------------------------------------------------
// Sentence segmentation
// ----------------------------------------------------------------------------

/// Half-open [begin, end) code-point range within the text it was cut from.
struct SentenceSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// Splits text into consecutive sentence spans covering the whole input.
/// A sentence ends after a terminator plus any closing quotes plus any
/// trailing whitespace; text without a final terminator forms a last span.
inline std::vector<SentenceSpan> split_sentences(std::string_view s) {
    const auto cps = decode_utf8(s);
    std::vector<SentenceSpan> spans;
    std::size_t begin = 0;
    std::size_t i = 0;
    while (i < cps.size()) {
        if (is_sentence_terminal(cps[i])) {
            ++i;
            while (i < cps.size() && is_closing_quote(cps[i])) ++i;
            while (i < cps.size() && is_space(cps[i])) ++i;
            spans.push_back({begin, i});
            begin = i;
        } else {
            ++i;
        }
    }
    if (begin < cps.size()) spans.push_back({begin, cps.size()});
    return spans;
}

// ----------------------------------------------------------------------------
// Normalization
// ----------------------------------------------------------------------------

/// Collapses whitespace runs to single spaces and trims the ends.
inline std::string collapse_whitespace(std::string_view s) {
    const auto cps = decode_utf8(s);
    std::string out;
    bool pending_space = false;
    bool seen_nonspace = false;
    for (char32_t cp : cps) {
        if (is_space(cp)) {
            pending_space = seen_nonspace;
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        seen_nonspace = true;
        append_utf8(out, cp);
    }
    return out;
}

/// Metric-side normalization: trim, collapse whitespace, strip terminal
/// punctuation and closing quotes from the end.
inline std::string normalize(std::string_view s) {
    auto cps = decode_utf8(collapse_whitespace(s));
    while (!cps.empty() && (is_sentence_terminal(cps.back()) || is_closing_quote(cps.back())))
        cps.pop_back();
    while (!cps.empty() && is_space(cps.back())) cps.pop_back();
    return encode_utf8(cps);
}

}  // namespace lawreason::text
