#pragma once

// Binary term-complex features, relevance weighting, RSV ranking and the
// tie-aware average search length.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "corpus.hpp"
#include "error.hpp"
#include "grammar.hpp"
#include "parser.hpp"

namespace grevo {

/// Sparse binary incidence: per document, the ascending indices of the
/// features it contains.
struct FeatureMatrix
{
    std::vector<std::string> features;
    std::vector<std::vector<std::uint32_t>> documents;

    std::size_t feature_count() const { return features.size(); }
    std::size_t document_count() const { return documents.size(); }

    std::vector<std::uint8_t> incidence(std::size_t doc) const
    {
        std::vector<std::uint8_t> v(features.size(), 0);
        for (auto f : documents[doc]) v[f] = 1;
        return v;
    }
};

/// Builds the matrix from each document's rendered features (any order,
/// duplicates allowed). Features are ordered lexicographically.
inline FeatureMatrix make_feature_matrix(const std::vector<std::vector<std::string>>& per_document)
{
    FeatureMatrix m;
    for (const auto& doc : per_document) m.features.insert(m.features.end(), doc.begin(), doc.end());
    std::sort(m.features.begin(), m.features.end());
    m.features.erase(std::unique(m.features.begin(), m.features.end()), m.features.end());

    std::unordered_map<std::string_view, std::uint32_t> id;
    id.reserve(m.features.size());
    for (std::size_t i = 0; i < m.features.size(); ++i) id.emplace(m.features[i], static_cast<std::uint32_t>(i));

    m.documents.reserve(per_document.size());
    for (const auto& doc : per_document) {
        std::vector<std::uint32_t> v;
        v.reserve(doc.size());
        for (const auto& f : doc) v.push_back(id.at(f));
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        m.documents.push_back(std::move(v));
    }
    return m;
}

/// Rendered term complexes of one document.
inline std::vector<std::string> document_features(const Document& doc, const Gene& gene, std::size_t depth)
{
    std::vector<std::string> out;
    for (const auto& s : doc.sentences) {
        const Chart chart = parse_chart(s, gene);
        for (const auto& c : term_complexes(chart, select_cover(chart), depth)) out.push_back(c.render());
    }
    return out;
}

inline FeatureMatrix extract_features(const Corpus& corpus, const Gene& gene, std::size_t depth)
{
    std::vector<std::vector<std::string>> per_doc;
    per_doc.reserve(corpus.size());
    for (const auto& d : corpus.documents()) per_doc.push_back(document_features(d, gene, depth));
    return make_feature_matrix(per_doc);
}

struct RetrievalModel
{
    std::vector<double> p;
    std::vector<double> q;
    /// log[p(1-q) / (q(1-p))], natural log.
    std::vector<double> weight;
    std::size_t relevant = 0;
    std::size_t total = 0;
};

/// Retrospective estimates with the 0.5 correction:
/// p = (r + .5)/(R + 1), q = (n - r + .5)/(N - R + 1).
inline RetrievalModel estimate_weights(const FeatureMatrix& m, const std::vector<bool>& relevant)
{
    if (relevant.size() != m.document_count()) throw ConfigError("relevance vector size mismatch");
    const std::size_t N = relevant.size();
    const auto R = static_cast<std::size_t>(std::count(relevant.begin(), relevant.end(), true));
    if (R == 0 || R == N) throw ConfigError("relevant set must be non-empty and not the whole collection");

    std::vector<std::size_t> r(m.feature_count(), 0), n(m.feature_count(), 0);
    for (std::size_t d = 0; d < N; ++d)
        for (auto f : m.documents[d]) {
            ++n[f];
            if (relevant[d]) ++r[f];
        }

    RetrievalModel model;
    model.relevant = R;
    model.total = N;
    model.p.resize(m.feature_count());
    model.q.resize(m.feature_count());
    model.weight.resize(m.feature_count());
    const double Rd = static_cast<double>(R), Nd = static_cast<double>(N);
    for (std::size_t i = 0; i < m.feature_count(); ++i) {
        const double ri = static_cast<double>(r[i]), ni = static_cast<double>(n[i]);
        const double p = (ri + 0.5) / (Rd + 1.0);
        const double q = (ni - ri + 0.5) / (Nd - Rd + 1.0);
        model.p[i] = p;
        model.q[i] = q;
        model.weight[i] = std::log((p * (1.0 - q)) / (q * (1.0 - p)));
    }
    return model;
}

/// Sum of weights of present features, in feature order.
inline double rsv(std::span<const std::uint8_t> incidence, const RetrievalModel& model)
{
    if (incidence.size() != model.weight.size()) throw ConfigError("incidence length does not match the model");
    double s = 0.0;
    for (std::size_t i = 0; i < incidence.size(); ++i)
        if (incidence[i]) s += model.weight[i];
    return s;
}

/// Same as rsv() over a sparse index list (ascending), bit for bit.
inline double rsv_sparse(std::span<const std::uint32_t> present, const RetrievalModel& model)
{
    double s = 0.0;
    for (auto f : present) s += model.weight[f];
    return s;
}

struct RankedDocument
{
    std::size_t document = 0;
    double rsv = 0.0;
    std::size_t tie_group = 0;
    bool relevant = false;
};

/// Documents by RSV descending; equal scores share a tie group.
struct Ranking
{
    std::vector<RankedDocument> entries;
};

/// Scores within this relative distance of the previous one in sorted order
/// join its tie group; it absorbs summation-order rounding only.
inline constexpr double tie_tolerance = 1e-9;

inline Ranking rank_scores(std::span<const double> scores, const std::vector<bool>& relevant)
{
    if (scores.size() != relevant.size()) throw ConfigError("score and relevance vectors differ in size");
    Ranking r;
    r.entries.reserve(scores.size());
    for (std::size_t d = 0; d < scores.size(); ++d) r.entries.push_back({d, scores[d], 0, relevant[d]});
    std::stable_sort(r.entries.begin(), r.entries.end(),
                     [](const RankedDocument& a, const RankedDocument& b) { return a.rsv > b.rsv; });
    std::size_t group = 0;
    for (std::size_t i = 0; i < r.entries.size(); ++i) {
        if (i > 0) {
            const double a = r.entries[i - 1].rsv, b = r.entries[i].rsv;
            const double scale = std::max({1.0, std::abs(a), std::abs(b)});
            if (a - b > tie_tolerance * scale) ++group;
        }
        r.entries[i].tie_group = group;
    }
    return r;
}

inline Ranking rank_documents(const FeatureMatrix& m, const RetrievalModel& model, const std::vector<bool>& relevant)
{
    std::vector<double> scores(m.document_count());
    for (std::size_t d = 0; d < scores.size(); ++d) scores[d] = rsv_sparse(m.documents[d], model);
    return rank_scores(scores, relevant);
}

/// Expected mean 1-based rank of the relevant documents when each tie group
/// is ordered uniformly at random: a relevant document in a group occupying
/// ranks a..b contributes (a + b) / 2.
inline double asl(const Ranking& ranking)
{
    double total = 0.0;
    std::size_t count = 0;
    const auto& e = ranking.entries;
    std::size_t i = 0;
    while (i < e.size()) {
        std::size_t j = i;
        std::size_t rel = 0;
        while (j < e.size() && e[j].tie_group == e[i].tie_group) rel += e[j++].relevant ? 1 : 0;
        const double a = static_cast<double>(i + 1), b = static_cast<double>(j);
        total += static_cast<double>(rel) * (a + b) / 2.0;
        count += rel;
        i = j;
    }
    if (count == 0) throw ConfigError("asl needs at least one relevant document");
    return total / static_cast<double>(count);
}

/// Per-group ASL, each group in turn taken as the relevant set.
inline std::vector<double> group_asl(const FeatureMatrix& m, std::span<const std::size_t> doc_groups,
                                     std::size_t groups)
{
    std::vector<double> out;
    std::vector<bool> relevant_vec(doc_groups.size());
    for (std::size_t g = 0; g < groups; ++g) {
        for (std::size_t d = 0; d < doc_groups.size(); ++d) relevant_vec[d] = doc_groups[d] == g;
        const auto model = estimate_weights(m, relevant_vec);
        out.push_back(asl(rank_documents(m, model, relevant_vec)));
    }
    return out;
}

inline std::vector<std::size_t> document_groups(const Corpus& corpus)
{
    std::vector<std::size_t> g;
    for (const auto& d : corpus.documents()) g.push_back(d.group);
    return g;
}

inline double mean_asl(const FeatureMatrix& m, std::span<const std::size_t> doc_groups, std::size_t groups)
{
    if (groups < 2) throw ConfigError("mean_asl needs at least 2 groups");
    double s = 0.0;
    for (double v : group_asl(m, doc_groups, groups)) s += v;
    return s / static_cast<double>(groups);
}

inline double mean_asl(const Corpus& corpus, const Gene& gene, std::size_t depth)
{
    const auto groups = document_groups(corpus);
    return mean_asl(extract_features(corpus, gene, depth), groups, corpus.groups());
}

} // namespace grevo
