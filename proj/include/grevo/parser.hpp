#pragma once

// Exhaustive bottom-up chart parsing under a gene, fewest-rules derivation
// per (symbol, span) cell, greedy cover selection and term-complex reading.
//
// There is no start symbol: every constituent over every span is recorded,
// and a sentence is read through a left-to-right cover of its longest
// constituents.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "grammar.hpp"

namespace grevo {

/// Separator used when rendering term complexes.
inline constexpr std::string_view complex_separator = "—";

struct Edge
{
    Symbol symbol = 0;
    std::size_t start = 0;
    std::size_t end = 0;
    /// Rule applications in the cheapest derivation; 0 for lexical edges.
    int rule_count = 0;
    /// Rule table index of the cheapest derivation's top rule; empty for lexical edges.
    std::optional<std::size_t> rule;
    /// Lexicon slot (0 or 1) a lexical edge came from.
    int tag_slot = -1;
    /// Chart edge indices of the children, left to right.
    std::vector<std::size_t> children;

    std::size_t length() const { return end - start; }
    bool is_lexical() const { return !rule.has_value(); }
};

class Chart
{
public:
    const Sentence& sentence() const { return sentence_; }

    /// Ordered by (start, end, symbol).
    std::span<const Edge> edges() const { return edges_; }
    const Edge& edge(std::size_t i) const { return edges_[i]; }

    /// Index of the edge for (symbol, [start, end)), if derivable.
    std::optional<std::size_t> find(Symbol symbol, std::size_t start, std::size_t end) const
    {
        if (start >= end || end > sentence_.size() || symbol >= num_symbols_) return std::nullopt;
        const auto v = index_[cell(symbol, start, end)];
        if (v < 0) return std::nullopt;
        return static_cast<std::size_t>(v);
    }

    /// Every rule application performed: one per (rule slot, span, split)
    /// whose children are all derivable, whether or not it won its cell.
    std::size_t total_rule_applications() const { return applications_; }

    /// Positions whose term is absent from the lexicon.
    const std::vector<std::size_t>& unknown_terms() const { return unknown_; }

    /// Length in terms of the longest edge; 0 if the chart is empty.
    std::size_t max_span() const
    {
        std::size_t best = 0;
        for (const auto& e : edges_) best = std::max(best, e.length());
        return best;
    }

private:
    friend Chart parse_chart(const Sentence&, const Gene&);

    std::size_t cell(Symbol symbol, std::size_t start, std::size_t end) const
    {
        const std::size_t n = sentence_.size();
        return (start * n + (end - start - 1)) * num_symbols_ + symbol;
    }

    Sentence sentence_;
    std::size_t num_symbols_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::int32_t> index_;
    std::size_t applications_ = 0;
    std::vector<std::size_t> unknown_;
};

inline Chart parse_chart(const Sentence& sentence, const Gene& gene)
{
    const GeneConfig& cfg = gene.config();
    const std::size_t n = sentence.size();
    const std::size_t S = cfg.num_nonterminals;

    Chart chart;
    chart.sentence_ = sentence;
    chart.num_symbols_ = S;
    chart.index_.assign(n * n * S, -1);
    if (n == 0) return chart;

    // While building, children hold cell ids; they become edge indices at the end.
    auto& edges = chart.edges_;
    auto& index = chart.index_;
    auto cell = [&](Symbol sym, std::size_t start, std::size_t end) { return chart.cell(sym, start, end); };
    auto cost_of = [&](std::size_t c) -> int { return index[c] < 0 ? -1 : edges[static_cast<std::size_t>(index[c])].rule_count; };

    auto offer = [&](Symbol sym, std::size_t start, std::size_t end, int cost, std::size_t rule,
                     const std::vector<std::size_t>& child_cells) {
        const std::size_t c = cell(sym, start, end);
        if (index[c] < 0) {
            index[c] = static_cast<std::int32_t>(edges.size());
            edges.push_back(Edge{sym, start, end, cost, rule, -1, child_cells});
            return true;
        }
        Edge& e = edges[static_cast<std::size_t>(index[c])];
        if (cost < e.rule_count) {
            e.rule_count = cost;
            e.rule = rule;
            e.children = child_cells;
            return true;
        }
        return false;
    };

    const auto rules = gene.rules();
    std::vector<std::size_t> unary, multi;
    for (std::size_t r = 0; r < rules.size(); ++r) (rules[r].rhs.size() == 1 ? unary : multi).push_back(r);

    std::vector<std::size_t> child_cells;
    for (std::size_t len = 1; len <= n; ++len) {
        for (std::size_t start = 0; start + len <= n; ++start) {
            const std::size_t end = start + len;
            if (len == 1) {
                if (auto t = gene.find_term(sentence[start])) {
                    const TagPair& tags = gene.tags(*t);
                    for (int slot = 0; slot < 2; ++slot) {
                        const std::size_t c = cell(tags[slot], start, end);
                        if (index[c] >= 0) continue;
                        index[c] = static_cast<std::int32_t>(edges.size());
                        edges.push_back(Edge{tags[slot], start, end, 0, std::nullopt, slot, {}});
                    }
                } else {
                    chart.unknown_.push_back(start);
                }
            }

            // Rules with 2+ rhs symbols: every split into contiguous non-empty
            // sub-spans, all strictly shorter, so already complete.
            for (std::size_t r : multi) {
                const auto& rhs = rules[r].rhs;
                const std::size_t k = rhs.size();
                if (k > len) continue;
                child_cells.assign(k, 0);
                // depth-first over boundaries; pos = next rhs slot, at = its start
                auto match = [&](auto&& self, std::size_t pos, std::size_t at, int cost) -> void {
                    const std::size_t remaining = k - pos - 1;
                    const std::size_t last_end = pos + 1 == k ? end : end - remaining;
                    const std::size_t first_end = pos + 1 == k ? end : at + 1;
                    for (std::size_t e = first_end; e <= last_end; ++e) {
                        const std::size_t c = cell(rhs[pos], at, e);
                        const int cc = cost_of(c);
                        if (cc < 0) continue;
                        child_cells[pos] = c;
                        if (pos + 1 == k) {
                            ++chart.applications_;
                            offer(rules[r].lhs, start, end, 1 + cost + cc, r, child_cells);
                        } else {
                            self(self, pos + 1, e, cost + cc);
                        }
                    }
                };
                match(match, 0, start, 0);
            }

            // Unary rules stay within the span; relax to a fixpoint.
            if (!unary.empty()) {
                bool changed = true;
                child_cells.assign(1, 0);
                while (changed) {
                    changed = false;
                    for (std::size_t r : unary) {
                        const std::size_t c = cell(rules[r].rhs[0], start, end);
                        const int cc = cost_of(c);
                        if (cc < 0) continue;
                        child_cells[0] = c;
                        changed |= offer(rules[r].lhs, start, end, 1 + cc, r, child_cells);
                    }
                }
                for (std::size_t r : unary)
                    if (index[cell(rules[r].rhs[0], start, end)] >= 0) ++chart.applications_;
            }
        }
    }

    // Canonical order, then translate child cell ids to edge indices.
    std::vector<std::size_t> order(edges.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const Edge& x = edges[a];
        const Edge& y = edges[b];
        if (x.start != y.start) return x.start < y.start;
        if (x.end != y.end) return x.end < y.end;
        return x.symbol < y.symbol;
    });
    std::vector<Edge> sorted;
    sorted.reserve(edges.size());
    for (std::size_t i : order) sorted.push_back(std::move(edges[i]));
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const Edge& e = sorted[i];
        index[cell(e.symbol, e.start, e.end)] = static_cast<std::int32_t>(i);
    }
    for (auto& e : sorted)
        for (auto& ch : e.children) ch = static_cast<std::size_t>(index[ch]);
    edges = std::move(sorted);
    return chart;
}

// ---------------------------------------------------------------------------
// Cover selection

struct Cover
{
    /// Chart edge indices, left to right, pairwise disjoint.
    std::vector<std::size_t> constituents;
    /// Term positions under no constituent.
    std::vector<std::size_t> uncovered;
};

/// Greedy left to right: longest edge at each position, then fewest rules,
/// then lowest symbol id. Positions with no edge stay uncovered.
inline Cover select_cover(const Chart& chart)
{
    Cover cover;
    const std::size_t n = chart.sentence().size();
    const auto edges = chart.edges();
    std::size_t e = 0;
    std::size_t pos = 0;
    while (pos < n) {
        while (e < edges.size() && edges[e].start < pos) ++e;
        std::optional<std::size_t> best;
        for (std::size_t i = e; i < edges.size() && edges[i].start == pos; ++i) {
            if (!best) {
                best = i;
                continue;
            }
            const Edge& a = edges[i];
            const Edge& b = edges[*best];
            if (a.end != b.end ? a.end > b.end
                               : a.rule_count != b.rule_count ? a.rule_count < b.rule_count : a.symbol < b.symbol)
                best = i;
        }
        if (best) {
            cover.constituents.push_back(*best);
            pos = edges[*best].end;
        } else {
            cover.uncovered.push_back(pos);
            ++pos;
        }
    }
    return cover;
}

// ---------------------------------------------------------------------------
// Term complexes

struct TermComplex
{
    std::string term;
    /// Innermost (part of speech) first.
    std::vector<Symbol> tags;

    std::string render() const
    {
        std::string s = term;
        for (Symbol t : tags) {
            s += complex_separator;
            s += std::to_string(t);
        }
        return s;
    }

    friend bool operator==(const TermComplex&, const TermComplex&) = default;
};

/// One complex per term, in sentence order. Each covered term collects up to
/// `depth` labels walking up from its POS edge inside its constituent.
inline std::vector<TermComplex> term_complexes(const Chart& chart, const Cover& cover, std::size_t depth)
{
    const Sentence& s = chart.sentence();
    std::vector<TermComplex> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out[i].term = s[i];
    if (depth == 0) return out;

    std::vector<Symbol> path;
    auto walk = [&](auto&& self, std::size_t idx) -> void {
        const Edge& e = chart.edge(idx);
        path.push_back(e.symbol);
        if (e.is_lexical()) {
            auto& tags = out[e.start].tags;
            for (std::size_t k = 0; k < depth && k < path.size(); ++k) tags.push_back(path[path.size() - 1 - k]);
        } else {
            for (std::size_t c : e.children) self(self, c);
        }
        path.pop_back();
    };
    for (std::size_t c : cover.constituents) walk(walk, c);
    return out;
}

// ---------------------------------------------------------------------------
// Parse-quality statistics

/// Mean over all sentences of the longest edge's span length.
inline double ampl(const Corpus& corpus, const Gene& gene)
{
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& d : corpus.documents())
        for (const auto& s : d.sentences) {
            total += static_cast<double>(parse_chart(s, gene).max_span());
            ++count;
        }
    return count == 0 ? 0.0 : total / static_cast<double>(count);
}

/// Total rule applications over all sentences of the corpus.
inline std::size_t nsp(const Corpus& corpus, const Gene& gene)
{
    std::size_t total = 0;
    for (const auto& d : corpus.documents())
        for (const auto& s : d.sentences) total += parse_chart(s, gene).total_rule_applications();
    return total;
}

/// Indented tree: symbol ids at internal nodes, "<pos> <term>" at leaves.
inline std::string render_tree(const Chart& chart, std::size_t edge_index)
{
    std::string out;
    auto rec = [&](auto&& self, std::size_t idx, std::size_t indent) -> void {
        const Edge& e = chart.edge(idx);
        out.append(indent, ' ');
        out += std::to_string(e.symbol);
        if (e.is_lexical()) {
            out += ' ';
            out += chart.sentence()[e.start];
        }
        out += '\n';
        for (std::size_t c : e.children) self(self, c, indent + 2);
    };
    rec(rec, edge_index, 0);
    return out;
}

/// Index of the longest edge (fewest rules, then lowest start and symbol on ties).
inline std::optional<std::size_t> largest_edge(const Chart& chart)
{
    std::optional<std::size_t> best;
    const auto edges = chart.edges();
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (!best || edges[i].length() > edges[*best].length() ||
            (edges[i].length() == edges[*best].length() && edges[i].rule_count < edges[*best].rule_count))
            best = i;
    }
    return best;
}

} // namespace grevo
