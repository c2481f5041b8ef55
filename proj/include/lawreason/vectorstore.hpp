#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lawreason/text.hpp"

// Labeled embedded texts behind the knowledge-search tool: an embedding
// provider abstraction, a deterministic offline feature-hashing embedder,
// an immutable vector store with JSON persistence, and cosine top-k search.

namespace lawreason::vectorstore {

using nlohmann::json;

class ProviderError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ============================================================================
// Embedding providers
// ============================================================================

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    /// Stable identifier; stores remember it and refuse queries from a
    /// different provider.
    virtual std::string provider_id() const = 0;
    virtual std::size_t dimension() const = 0;
    /// Deterministic within a provider: same text, same vector.
    virtual std::vector<double> embed(std::string_view text) const = 0;
};

/// Offline deterministic embedder: codepoint n-grams (n = 1..3) are hashed
/// (FNV-1a) into a fixed number of buckets and the bucket counts are
/// L2-normalized. No model weights, no network — identical texts embed
/// identically forever, which is what the test suite needs.
class HashingEmbedder : public EmbeddingProvider {
public:
    explicit HashingEmbedder(std::size_t dimension = 256) : dimension_(dimension) {
        if (dimension_ == 0) throw std::invalid_argument("embedder dimension must be >= 1");
    }

    std::string provider_id() const override {
        return "hashing-ngram-v1-d" + std::to_string(dimension_);
    }
    std::size_t dimension() const override { return dimension_; }

    std::vector<double> embed(std::string_view s) const override {
        std::vector<double> v(dimension_, 0.0);
        const auto cps = text::decode_utf8(s);
        std::vector<char32_t> kept;
        kept.reserve(cps.size());
        for (char32_t cp : cps)
            if (!text::is_space(cp)) kept.push_back(text::lower_latin(cp));
        for (std::size_t n = 1; n <= 3; ++n) {
            if (kept.size() < n) break;
            for (std::size_t i = 0; i + n <= kept.size(); ++i) {
                std::uint64_t h = 1469598103934665603ull;  // FNV-1a offset basis
                for (std::size_t j = 0; j < n; ++j) {
                    const auto cp = static_cast<std::uint32_t>(kept[i + j]);
                    for (int byte = 0; byte < 4; ++byte) {
                        h ^= (cp >> (8 * byte)) & 0xffu;
                        h *= 1099511628211ull;  // FNV prime
                    }
                }
                v[h % dimension_] += 1.0;
            }
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        if (norm > 0.0) {
            norm = std::sqrt(norm);
            for (double& x : v) x /= norm;
        }
        return v;
    }

private:
    std::size_t dimension_;
};

// ============================================================================
// Store
// ============================================================================

struct Entry {
    std::string text;
    bool label = false;  // true: this text belongs to the target class
    std::vector<double> vector;

    bool operator==(const Entry&) const = default;
};

struct SearchHit {
    std::string text;
    bool label = false;
    double cosine = 0.0;

    bool operator==(const SearchHit&) const = default;
};

/// Immutable once built; safe to share across threads.
class VectorStore {
public:
    VectorStore(std::vector<Entry> entries, std::size_t dimension, std::string provider_id)
        : entries_(std::move(entries)),
          dimension_(dimension),
          provider_id_(std::move(provider_id)) {
        for (const auto& e : entries_)
            if (e.vector.size() != dimension_)
                throw ProviderError("vector store entry dimension mismatch");
    }

    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    std::size_t dimension() const { return dimension_; }
    const std::string& provider_id() const { return provider_id_; }

    json to_json() const {
        json entries = json::array();
        for (const auto& e : entries_)
            entries.push_back(json{{"text", e.text}, {"label", e.label}, {"vector", e.vector}});
        return json{{"provider_id", provider_id_},
                    {"dimension", dimension_},
                    {"entries", std::move(entries)}};
    }

    static VectorStore from_json(const json& j) {
        if (!j.is_object() || !j.contains("provider_id") || !j.contains("dimension") ||
            !j.contains("entries"))
            throw ProviderError("vector store file needs provider_id, dimension, entries");
        std::vector<Entry> entries;
        for (const auto& je : j.at("entries")) {
            Entry e;
            e.text = je.at("text").get<std::string>();
            e.label = je.at("label").get<bool>();
            for (const auto& x : je.at("vector")) e.vector.push_back(x.get<double>());
            entries.push_back(std::move(e));
        }
        return VectorStore(std::move(entries), j.at("dimension").get<std::size_t>(),
                           j.at("provider_id").get<std::string>());
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ProviderError("cannot write vector store: " + path.string());
        out << to_json().dump() << '\n';
    }

    static VectorStore load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ProviderError("cannot open vector store: " + path.string());
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw ProviderError("malformed vector store " + path.string() + ": " + e.what());
        }
        return from_json(j);
    }

private:
    std::vector<Entry> entries_;
    std::size_t dimension_;
    std::string provider_id_;
};

/// Embeds every (text, label) item into a new immutable store. Duplicate
/// texts are allowed and all stored.
inline VectorStore index_texts(const std::vector<std::pair<std::string, bool>>& items,
                               const EmbeddingProvider& provider) {
    if (items.empty()) throw ProviderError("index_texts: no items to index");
    std::vector<Entry> entries;
    entries.reserve(items.size());
    for (const auto& [t, label] : items) {
        Entry e;
        e.text = t;
        e.label = label;
        e.vector = provider.embed(t);
        if (e.vector.size() != provider.dimension())
            throw ProviderError("provider returned a vector of the wrong dimension");
        entries.push_back(std::move(e));
    }
    return VectorStore(std::move(entries), provider.dimension(), provider.provider_id());
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Top-k entries by descending cosine similarity to the query text; ties keep
/// insertion order; returns min(k, store size) hits. The provider must be the
/// one the store was built with.
inline std::vector<SearchHit> query_similar(const VectorStore& store, std::string_view query_text,
                                            const EmbeddingProvider& provider, std::size_t k = 5) {
    if (k < 1) throw std::invalid_argument("query_similar: k must be >= 1");
    if (provider.provider_id() != store.provider_id())
        throw ProviderError("vector store was built with provider \"" + store.provider_id() +
                            "\" but queried with \"" + provider.provider_id() + "\"");
    const std::vector<double> q = provider.embed(query_text);
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(store.size());
    for (std::size_t i = 0; i < store.size(); ++i)
        scored.emplace_back(cosine(q, store.entries()[i].vector), i);
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<SearchHit> hits;
    const std::size_t take = std::min(k, scored.size());
    hits.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        const Entry& e = store.entries()[scored[i].second];
        hits.push_back(SearchHit{e.text, e.label, scored[i].first});
    }
    return hits;
}

}  // namespace lawreason::vectorstore
