#pragma once

// Synthetic corpora generated from a hidden ground-truth grammar.
//
// Truth file format (one directive per line, "%" starts a comment):
//
//   start S
//   topicality 0.7                 optional, default 0.7
//   max_depth 64                   optional derivation depth cap
//   rule S -> NP VP                alternatives are chosen uniformly ...
//   rule NP -> Det Noun PP : 0.5   ... or by the weight after ':'
//   words Det the a an             shared word list of a category
//   words Noun@2 memory recall     words preferred by documents of group 2
//
// A category with group pools picks from the document's own pool with
// probability `topicality`, otherwise uniformly from all of its words.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "error.hpp"
#include "grammar.hpp"
#include "rng.hpp"

namespace grevo {

struct TruthRule
{
    std::string lhs;
    std::vector<std::string> rhs;
    double weight = 1.0;
    std::size_t line = 0;

    std::string describe() const
    {
        std::string s = lhs + " ->";
        for (const auto& r : rhs) s += " " + r;
        return s + " (line " + std::to_string(line) + ")";
    }
};

struct WordCategory
{
    std::vector<std::string> shared;
    std::map<std::size_t, std::vector<std::string>> pools;

    std::vector<std::string> all_words() const
    {
        std::vector<std::string> out = shared;
        for (const auto& [g, words] : pools) out.insert(out.end(), words.begin(), words.end());
        return out;
    }
};

class GroundTruth
{
public:
    std::string start;
    double topicality = 0.7;
    std::size_t max_depth = 64;
    std::vector<TruthRule> rules;
    std::map<std::string, WordCategory> categories;

    bool is_category(const std::string& s) const { return categories.count(s) > 0; }

    std::vector<std::size_t> alternatives(const std::string& lhs) const
    {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < rules.size(); ++i)
            if (rules[i].lhs == lhs) out.push_back(i);
        return out;
    }

    /// Nonterminal names in first-appearance order.
    std::vector<std::string> nonterminals() const
    {
        std::vector<std::string> out;
        for (const auto& r : rules)
            if (std::find(out.begin(), out.end(), r.lhs) == out.end()) out.push_back(r.lhs);
        return out;
    }

    void validate() const
    {
        if (start.empty()) throw ConfigError("truth grammar has no start symbol");
        if (!(topicality >= 0.0 && topicality <= 1.0)) throw ConfigError("topicality must lie in [0,1]");
        const auto nts = nonterminals();
        auto known_nt = [&](const std::string& s) { return std::find(nts.begin(), nts.end(), s) != nts.end(); };
        if (!known_nt(start) && !is_category(start)) throw ConfigError("start symbol " + start + " is undefined");
        for (const auto& r : rules) {
            if (is_category(r.lhs)) throw ConfigError(r.lhs + " is both a word category and a nonterminal");
            if (r.rhs.empty()) throw ConfigError("empty rule " + r.describe());
            if (!(r.weight > 0.0)) throw ConfigError("rule weight must be > 0: " + r.describe());
            for (const auto& s : r.rhs)
                if (!known_nt(s) && !is_category(s)) throw ConfigError("undefined symbol " + s + " in " + r.describe());
        }
        for (const auto& [name, cat] : categories)
            if (cat.all_words().empty()) throw ConfigError("category " + name + " has no words");
    }

    /// The truth grammar as a gene: categories become parts of speech,
    /// nonterminals phrase-level symbols; short rule lists are padded by
    /// repeating the first alternative. Symbol ids follow category name
    /// order, then nonterminal first appearance.
    Gene to_gene(std::shared_ptr<const Vocabulary> vocabulary) const
    {
        std::map<std::string, Symbol> ids;
        Symbol next = 0;
        for (const auto& [name, cat] : categories) ids[name] = next++;
        const auto nts = nonterminals();
        for (const auto& nt : nts) ids[nt] = next++;

        GeneConfig cfg;
        cfg.num_pos = categories.size();
        cfg.num_nonterminals = categories.size() + nts.size();
        cfg.rules_per_lhs = 1;
        cfg.rhs_mode = RhsMode::TruncatedPoisson;
        for (const auto& nt : nts) cfg.rules_per_lhs = std::max(cfg.rules_per_lhs, alternatives(nt).size());

        std::vector<Rule> table;
        for (const auto& nt : nts) {
            const auto alts = alternatives(nt);
            for (std::size_t k = 0; k < cfg.rules_per_lhs; ++k) {
                const TruthRule& tr = rules[alts[k < alts.size() ? k : 0]];
                Rule r{ids[nt], {}};
                for (const auto& s : tr.rhs) r.rhs.push_back(ids[s]);
                table.push_back(std::move(r));
            }
        }

        std::map<std::string, std::vector<Symbol>> word_tags;
        for (const auto& [name, cat] : categories)
            for (const auto& w : cat.all_words()) {
                auto& v = word_tags[w];
                if (std::find(v.begin(), v.end(), ids[name]) == v.end()) v.push_back(ids[name]);
            }
        std::vector<TagPair> tags;
        for (const auto& term : *vocabulary) {
            auto it = word_tags.find(term);
            if (it == word_tags.end()) throw ConfigError("term " + term + " is not produced by the truth grammar");
            if (it->second.size() > 2) throw ConfigError("word " + term + " belongs to more than two categories");
            tags.push_back({it->second[0], it->second.back()});
        }
        return Gene(cfg, std::move(vocabulary), std::move(table), std::move(tags));
    }

    /// Symbol id of the start symbol in to_gene().
    Symbol start_symbol_id() const
    {
        Symbol id = 0;
        for (const auto& [name, cat] : categories) {
            if (name == start) return id;
            ++id;
        }
        for (const auto& nt : nonterminals()) {
            if (nt == start) return id;
            ++id;
        }
        throw ConfigError("start symbol is undefined");
    }
};

inline GroundTruth read_truth(std::istream& in, const std::string& source)
{
    GroundTruth t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto pct = line.find('%'); pct != std::string::npos) line.erase(pct);
        const auto f = detail::split_ws(line);
        if (f.empty()) continue;
        if (f[0] == "start" && f.size() == 2) {
            t.start = f[1];
        } else if (f[0] == "topicality" && f.size() == 2) {
            t.topicality = detail::parse_double(f[1], source, lineno);
        } else if (f[0] == "max_depth" && f.size() == 2) {
            t.max_depth = detail::parse_size(f[1], source, lineno);
        } else if (f[0] == "rule") {
            if (f.size() < 4 || f[2] != "->") throw FormatError(source, lineno, "expected 'rule <lhs> -> <symbols...>'");
            TruthRule r{f[1], {}, 1.0, lineno};
            std::size_t i = 3;
            for (; i < f.size() && f[i] != ":"; ++i) r.rhs.push_back(f[i]);
            if (i < f.size()) {
                if (i + 2 != f.size()) throw FormatError(source, lineno, "expected one weight after ':'");
                r.weight = detail::parse_double(f[i + 1], source, lineno);
            }
            if (r.rhs.empty()) throw FormatError(source, lineno, "rule has an empty right hand side");
            t.rules.push_back(std::move(r));
        } else if (f[0] == "words" && f.size() >= 3) {
            std::string name = f[1];
            std::optional<std::size_t> group;
            if (auto at = name.find('@'); at != std::string::npos) {
                group = detail::parse_size(name.substr(at + 1), source, lineno);
                name.erase(at);
            }
            auto& cat = t.categories[name];
            auto& dest = group ? cat.pools[*group] : cat.shared;
            for (std::size_t i = 2; i < f.size(); ++i) {
                const Sentence tok = tokenize(f[i]);
                if (tok.size() != 1 || tok[0] != f[i])
                    throw FormatError(source, lineno, "word '" + f[i] + "' is not a normalized term");
                dest.push_back(f[i]);
            }
        } else {
            throw FormatError(source, lineno, "unknown directive '" + f[0] + "'");
        }
    }
    try {
        t.validate();
    } catch (const ConfigError& e) {
        throw FormatError(source, lineno, e.what());
    }
    return t;
}

inline GroundTruth load_truth(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw FormatError(path, 0, "cannot open truth grammar");
    return read_truth(in, path);
}

/// One sentence from the truth grammar for a document of `group`.
inline Sentence generate_sentence(const GroundTruth& truth, std::size_t group, Rng& rng)
{
    Sentence out;
    auto pick_word = [&](const WordCategory& cat) -> const std::string& {
        auto pool = cat.pools.find(group);
        if (pool != cat.pools.end() && !pool->second.empty() && rng.bernoulli(truth.topicality))
            return pool->second[rng.uniform_index(pool->second.size())];
        const std::size_t total = cat.shared.size() + [&] {
            std::size_t n = 0;
            for (const auto& [g, w] : cat.pools) n += w.size();
            return n;
        }();
        std::size_t k = rng.uniform_index(total);
        if (k < cat.shared.size()) return cat.shared[k];
        k -= cat.shared.size();
        for (const auto& [g, w] : cat.pools) {
            if (k < w.size()) return w[k];
            k -= w.size();
        }
        return cat.shared.front(); // unreachable
    };
    auto expand = [&](auto&& self, const std::string& sym, std::size_t depth, const TruthRule* via) -> void {
        if (auto c = truth.categories.find(sym); c != truth.categories.end()) {
            out.terms.push_back(pick_word(c->second));
            return;
        }
        if (depth > truth.max_depth)
            throw ConfigError("derivation depth cap exceeded expanding rule " + (via ? via->describe() : sym));
        const auto alts = truth.alternatives(sym);
        double total = 0.0;
        for (std::size_t a : alts) total += truth.rules[a].weight;
        double u = rng.uniform01() * total;
        std::size_t chosen = alts.back();
        for (std::size_t a : alts) {
            if (u < truth.rules[a].weight) {
                chosen = a;
                break;
            }
            u -= truth.rules[a].weight;
        }
        const TruthRule& r = truth.rules[chosen];
        for (const auto& s : r.rhs) self(self, s, depth + 1, &r);
    };
    expand(expand, truth.start, 0, nullptr);
    return out;
}

/// Documents are ordered group-major with ids "g<group>-d<k>".
inline Corpus synth_corpus(const GroundTruth& truth, std::size_t groups, std::size_t docs_per_group,
                           std::size_t sentences_per_doc, Rng& rng)
{
    truth.validate();
    if (groups < 2) throw ConfigError("synth_corpus needs at least 2 groups");
    if (docs_per_group == 0 || sentences_per_doc == 0) throw ConfigError("synth_corpus needs documents and sentences");
    std::vector<Document> docs;
    for (std::size_t g = 0; g < groups; ++g)
        for (std::size_t k = 0; k < docs_per_group; ++k) {
            Document d{"g" + std::to_string(g) + "-d" + std::to_string(k), g, {}};
            for (std::size_t s = 0; s < sentences_per_doc; ++s) d.sentences.push_back(generate_sentence(truth, g, rng));
            docs.push_back(std::move(d));
        }
    return Corpus(std::move(docs), groups);
}

} // namespace grevo
