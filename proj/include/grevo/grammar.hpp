#pragma once

// Genes: a fixed-shape table of production rules plus a two-tag lexicon.
//
// Symbols share one integer namespace. Ids [0, num_pos) are parts of speech
// and only expand to terms through the lexicon; ids [num_pos,
// num_nonterminals) are phrase-level and own `rules_per_lhs` rule slots each.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "rng.hpp"

namespace grevo {

using Symbol = std::uint16_t;

enum class RhsMode { Fixed2, TruncatedPoisson };

inline std::string to_string(RhsMode m) { return m == RhsMode::Fixed2 ? "fixed-2" : "truncated-poisson"; }

inline RhsMode parse_rhs_mode(std::string_view s)
{
    if (s == "fixed-2") return RhsMode::Fixed2;
    if (s == "truncated-poisson") return RhsMode::TruncatedPoisson;
    throw ConfigError("unknown rhs_mode '" + std::string(s) + "'");
}

struct GeneConfig
{
    std::size_t num_pos = 10;
    std::size_t num_nonterminals = 20;
    std::size_t rules_per_lhs = 5;
    RhsMode rhs_mode = RhsMode::Fixed2;
    double poisson_mean = 1.8;
    std::size_t tag_depth = 2;
    double p_rule_mutate = 0.20;
    double p_tag_mutate = 0.20;
    bool learn_rules = true;
    bool learn_tags = true;

    std::size_t num_phrase() const { return num_nonterminals - num_pos; }
    std::size_t rule_count() const { return num_phrase() * rules_per_lhs; }
    bool is_pos(Symbol s) const { return s < num_pos; }

    void validate() const
    {
        if (num_pos == 0) throw ConfigError("num_pos must be >= 1");
        if (num_pos > num_nonterminals) throw ConfigError("num_pos must be <= num_nonterminals");
        if (num_nonterminals > std::numeric_limits<Symbol>::max()) throw ConfigError("num_nonterminals too large");
        if (rules_per_lhs < 1) throw ConfigError("rules_per_lhs must be >= 1");
        if (!(poisson_mean > 0.0) || !std::isfinite(poisson_mean)) throw ConfigError("poisson_mean must be > 0");
        if (tag_depth > 2) throw ConfigError("tag_depth must be 0, 1 or 2");
        auto prob = [](double p, const char* name) {
            if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0,1]");
        };
        prob(p_rule_mutate, "p_rule_mutate");
        prob(p_tag_mutate, "p_tag_mutate");
    }

    friend bool operator==(const GeneConfig&, const GeneConfig&) = default;
};

struct Rule
{
    Symbol lhs = 0;
    std::vector<Symbol> rhs;

    friend bool operator==(const Rule&, const Rule&) = default;
};

using TagPair = std::array<Symbol, 2>;
using Vocabulary = std::vector<std::string>;

class Gene
{
public:
    Gene() = default;

    /// Rules must be in slot order: lhs ascending, slot ascending.
    /// `vocabulary` must be sorted and duplicate-free.
    Gene(GeneConfig config, std::shared_ptr<const Vocabulary> vocabulary, std::vector<Rule> rules,
         std::vector<TagPair> tags)
        : config_(config), vocab_(std::move(vocabulary)), rules_(std::move(rules)), tags_(std::move(tags))
    {
        validate();
    }

    const GeneConfig& config() const { return config_; }
    const Vocabulary& vocabulary() const { return *vocab_; }
    const std::shared_ptr<const Vocabulary>& shared_vocabulary() const { return vocab_; }

    std::span<const Rule> rules() const { return rules_; }
    const Rule& rule(std::size_t index) const { return rules_[index]; }
    std::size_t rule_index(Symbol lhs, std::size_t slot) const
    {
        return (lhs - config_.num_pos) * config_.rules_per_lhs + slot;
    }

    std::span<const TagPair> tags() const { return tags_; }
    const TagPair& tags(std::size_t term_index) const { return tags_[term_index]; }

    std::optional<std::size_t> find_term(std::string_view term) const
    {
        auto it = std::lower_bound(vocab_->begin(), vocab_->end(), term);
        if (it == vocab_->end() || *it != term) return std::nullopt;
        return static_cast<std::size_t>(it - vocab_->begin());
    }

    void set_rhs(std::size_t rule_index, std::vector<Symbol> rhs) { rules_[rule_index].rhs = std::move(rhs); }
    void set_tags(std::size_t term_index, TagPair t) { tags_[term_index] = t; }
    void set_config(const GeneConfig& c)
    {
        if (c.num_pos != config_.num_pos || c.num_nonterminals != config_.num_nonterminals ||
            c.rules_per_lhs != config_.rules_per_lhs)
            throw ConfigError("set_config cannot change the gene shape");
        config_ = c;
    }

    /// Throws ConfigError describing the first broken invariant.
    void validate() const
    {
        config_.validate();
        if (!vocab_) throw ConfigError("gene has no vocabulary");
        if (!std::is_sorted(vocab_->begin(), vocab_->end()) ||
            std::adjacent_find(vocab_->begin(), vocab_->end()) != vocab_->end())
            throw ConfigError("gene vocabulary must be sorted and distinct");
        if (rules_.size() != config_.rule_count()) throw ConfigError("rule table is not full");
        for (std::size_t i = 0; i < rules_.size(); ++i) {
            const Rule& r = rules_[i];
            if (r.lhs != config_.num_pos + i / config_.rules_per_lhs)
                throw ConfigError("rule " + std::to_string(i) + " has the wrong lhs for its slot");
            if (r.rhs.empty()) throw ConfigError("rule " + std::to_string(i) + " has an empty rhs");
            if (config_.rhs_mode == RhsMode::Fixed2 && r.rhs.size() != 2)
                throw ConfigError("rule " + std::to_string(i) + " must have 2 rhs symbols in fixed-2 mode");
            for (Symbol s : r.rhs)
                if (s >= config_.num_nonterminals) throw ConfigError("rhs symbol out of range");
        }
        if (tags_.size() != vocab_->size()) throw ConfigError("lexicon size does not match vocabulary");
        for (const auto& t : tags_)
            if (t[0] >= config_.num_pos || t[1] >= config_.num_pos) throw ConfigError("tag out of range");
    }

    /// FNV-1a over rules and tags; the key of the fitness memo.
    std::uint64_t content_hash() const
    {
        std::uint64_t h = 14695981039346656037ull;
        auto mix = [&h](std::uint64_t v) {
            for (int i = 0; i < 8; ++i) {
                h ^= (v >> (8 * i)) & 0xff;
                h *= 1099511628211ull;
            }
        };
        for (const auto& r : rules_) {
            mix(r.rhs.size());
            for (Symbol s : r.rhs) mix(s);
        }
        for (const auto& t : tags_) mix((std::uint64_t{t[0]} << 16) | t[1]);
        return h;
    }

    /// Same rules, tags and vocabulary; config probabilities are not compared.
    bool same_content(const Gene& o) const
    {
        return rules_ == o.rules_ && tags_ == o.tags_ && (vocab_ == o.vocab_ || *vocab_ == *o.vocab_);
    }

    friend bool operator==(const Gene& a, const Gene& b) { return a.config_ == b.config_ && a.same_content(b); }

private:
    GeneConfig config_;
    std::shared_ptr<const Vocabulary> vocab_;
    std::vector<Rule> rules_;
    std::vector<TagPair> tags_;
};

inline std::shared_ptr<const Vocabulary> make_vocabulary(Vocabulary terms)
{
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    return std::make_shared<const Vocabulary>(std::move(terms));
}

inline std::vector<Symbol> random_rhs(const GeneConfig& config, Rng& rng)
{
    std::size_t len = 2;
    if (config.rhs_mode == RhsMode::TruncatedPoisson) {
        do {
            len = rng.poisson(config.poisson_mean);
        } while (len == 0);
    }
    std::vector<Symbol> rhs(len);
    for (auto& s : rhs) s = static_cast<Symbol>(rng.uniform_index(config.num_nonterminals));
    return rhs;
}

inline Symbol random_pos(const GeneConfig& config, Rng& rng)
{
    return static_cast<Symbol>(rng.uniform_index(config.num_pos));
}

inline Gene random_gene(const GeneConfig& config, std::shared_ptr<const Vocabulary> vocabulary, Rng& rng)
{
    config.validate();
    if (!vocabulary || vocabulary->empty()) throw ConfigError("random_gene needs a non-empty vocabulary");
    std::vector<Rule> rules;
    rules.reserve(config.rule_count());
    for (std::size_t p = 0; p < config.num_phrase(); ++p)
        for (std::size_t k = 0; k < config.rules_per_lhs; ++k)
            rules.push_back(Rule{static_cast<Symbol>(config.num_pos + p), random_rhs(config, rng)});
    std::vector<TagPair> tags(vocabulary->size());
    for (auto& t : tags) {
        t[0] = random_pos(config, rng);
        t[1] = random_pos(config, rng);
    }
    return Gene(config, std::move(vocabulary), std::move(rules), std::move(tags));
}

// ---------------------------------------------------------------------------
// Seed categories

struct SeedCategory
{
    int label = 0;
    std::vector<std::string> terms;
    /// When set, the category also claims every numeric token in the vocabulary.
    bool numeric = false;
};

/// A token counts as numeric when it has a digit and only digits or . , - / %.
inline bool is_numeric_token(std::string_view s)
{
    bool digit = false;
    for (char c : s) {
        if (c >= '0' && c <= '9')
            digit = true;
        else if (std::string_view(".,-/%").find(c) == std::string_view::npos)
            return false;
    }
    return digit;
}

inline std::vector<SeedCategory> default_seed_categories()
{
    return {
        {1, {"above", "below", "on", "in", "near", "through", "with"}, false},
        {2, {"or", "and"}, false},
        {3, {"i", "you", "he", "she", "it", "we", "they"}, false},
        {4, {"a", "an", "the"}, false},
        {5, {}, true},
    };
}

/// Category terms that occur in the vocabulary, as term indices (ascending).
inline std::vector<std::size_t> category_term_indices(const SeedCategory& cat, const Gene& gene,
                                                      std::vector<std::string>* missing = nullptr)
{
    std::vector<std::size_t> out;
    for (const auto& t : cat.terms) {
        if (auto idx = gene.find_term(t))
            out.push_back(*idx);
        else if (missing)
            missing->push_back(t);
    }
    if (cat.numeric) {
        const auto& vocab = gene.vocabulary();
        for (std::size_t i = 0; i < vocab.size(); ++i)
            if (is_numeric_token(vocab[i])) out.push_back(i);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Give every term of each category the same random POS in both tag slots.
/// Category terms absent from the vocabulary are appended to `missing`.
inline Gene seed_lexicon(const Gene& gene, std::span<const SeedCategory> categories, Rng& rng,
                         std::vector<std::string>* missing = nullptr)
{
    Gene out = gene;
    for (const auto& cat : categories) {
        const Symbol pos = random_pos(gene.config(), rng);
        for (std::size_t idx : category_term_indices(cat, gene, missing)) out.set_tags(idx, {pos, pos});
    }
    return out;
}

/// Per category: the largest fraction of its terms carrying one common POS in
/// either tag slot. NaN for a category with no terms in the vocabulary.
inline std::vector<double> cluster_persistence(const Gene& gene, std::span<const SeedCategory> categories)
{
    std::vector<double> out;
    for (const auto& cat : categories) {
        const auto idx = category_term_indices(cat, gene);
        if (idx.empty()) {
            out.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        std::vector<std::size_t> counts(gene.config().num_pos, 0);
        for (std::size_t i : idx) {
            const auto& t = gene.tags(i);
            ++counts[t[0]];
            if (t[1] != t[0]) ++counts[t[1]];
        }
        const auto best = *std::max_element(counts.begin(), counts.end());
        out.push_back(static_cast<double>(best) / static_cast<double>(idx.size()));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gene file format

namespace detail {

inline std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& source, std::size_t line)
{
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw FormatError(source, line, "bad number '" + s + "'");
    return v;
}

inline std::size_t parse_size(const std::string& s, const std::string& source, std::size_t line)
{
    std::size_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw FormatError(source, line, "bad integer '" + s + "'");
    return v;
}

inline std::vector<std::string> fields(const std::string& line)
{
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
}

} // namespace detail

inline void write_config_block(std::ostream& out, const GeneConfig& c)
{
    out << "config\n"
        << "  num_pos " << c.num_pos << '\n'
        << "  num_nonterminals " << c.num_nonterminals << '\n'
        << "  rules_per_lhs " << c.rules_per_lhs << '\n'
        << "  rhs_mode " << to_string(c.rhs_mode) << '\n'
        << "  poisson_mean " << detail::format_double(c.poisson_mean) << '\n'
        << "  tag_depth " << c.tag_depth << '\n'
        << "  p_rule_mutate " << detail::format_double(c.p_rule_mutate) << '\n'
        << "  p_tag_mutate " << detail::format_double(c.p_tag_mutate) << '\n'
        << "  learn_rules " << (c.learn_rules ? 1 : 0) << '\n'
        << "  learn_tags " << (c.learn_tags ? 1 : 0) << '\n'
        << "end\n";
}

inline void write_gene(std::ostream& out, const Gene& gene)
{
    write_config_block(out, gene.config());
    for (const auto& r : gene.rules()) {
        out << "rule " << r.lhs << " ->";
        for (Symbol s : r.rhs) out << ' ' << s;
        out << '\n';
    }
    const auto& vocab = gene.vocabulary();
    for (std::size_t i = 0; i < vocab.size(); ++i)
        out << "tag " << vocab[i] << ' ' << gene.tags(i)[0] << ' ' << gene.tags(i)[1] << '\n';
}

inline std::string gene_to_string(const Gene& gene)
{
    std::ostringstream os;
    write_gene(os, gene);
    return os.str();
}

inline Gene read_gene(std::istream& in, const std::string& source)
{
    GeneConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    enum class State { Start, Config, Body } state = State::Start;
    struct RawRule
    {
        std::size_t lhs;
        std::vector<Symbol> rhs;
        std::size_t line;
    };
    std::vector<RawRule> raw_rules;
    std::vector<std::pair<std::string, TagPair>> raw_tags;

    auto symbol = [&](const std::string& s) {
        const auto v = detail::parse_size(s, source, lineno);
        if (v > std::numeric_limits<Symbol>::max()) throw FormatError(source, lineno, "symbol out of range");
        return static_cast<Symbol>(v);
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto f = detail::fields(line);
        if (f.empty() || f[0][0] == '%') continue;
        switch (state) {
        case State::Start:
            if (f.size() != 1 || f[0] != "config") throw FormatError(source, lineno, "expected 'config'");
            state = State::Config;
            break;
        case State::Config:
            if (f.size() == 1 && f[0] == "end") {
                try {
                    cfg.validate();
                } catch (const ConfigError& e) {
                    throw FormatError(source, lineno, e.what());
                }
                state = State::Body;
                break;
            }
            if (f.size() != 2) throw FormatError(source, lineno, "expected '<key> <value>'");
            if (f[0] == "num_pos")
                cfg.num_pos = detail::parse_size(f[1], source, lineno);
            else if (f[0] == "num_nonterminals")
                cfg.num_nonterminals = detail::parse_size(f[1], source, lineno);
            else if (f[0] == "rules_per_lhs")
                cfg.rules_per_lhs = detail::parse_size(f[1], source, lineno);
            else if (f[0] == "rhs_mode") {
                try {
                    cfg.rhs_mode = parse_rhs_mode(f[1]);
                } catch (const ConfigError& e) {
                    throw FormatError(source, lineno, e.what());
                }
            } else if (f[0] == "poisson_mean")
                cfg.poisson_mean = detail::parse_double(f[1], source, lineno);
            else if (f[0] == "tag_depth")
                cfg.tag_depth = detail::parse_size(f[1], source, lineno);
            else if (f[0] == "p_rule_mutate")
                cfg.p_rule_mutate = detail::parse_double(f[1], source, lineno);
            else if (f[0] == "p_tag_mutate")
                cfg.p_tag_mutate = detail::parse_double(f[1], source, lineno);
            else if (f[0] == "learn_rules")
                cfg.learn_rules = detail::parse_size(f[1], source, lineno) != 0;
            else if (f[0] == "learn_tags")
                cfg.learn_tags = detail::parse_size(f[1], source, lineno) != 0;
            else
                throw FormatError(source, lineno, "unknown config key '" + f[0] + "'");
            break;
        case State::Body:
            if (f[0] == "rule") {
                if (f.size() < 4 || f[2] != "->") throw FormatError(source, lineno, "expected 'rule <lhs> -> <rhs...>'");
                RawRule r{symbol(f[1]), {}, lineno};
                for (std::size_t i = 3; i < f.size(); ++i) r.rhs.push_back(symbol(f[i]));
                raw_rules.push_back(std::move(r));
            } else if (f[0] == "tag") {
                if (f.size() != 4) throw FormatError(source, lineno, "expected 'tag <term> <pos1> <pos2>'");
                raw_tags.push_back({f[1], TagPair{symbol(f[2]), symbol(f[3])}});
            } else {
                throw FormatError(source, lineno, "unknown line '" + f[0] + "'");
            }
            break;
        }
    }
    if (state != State::Body) throw FormatError(source, lineno, "missing config block");

    // rules: group by lhs, keeping file order within an lhs
    std::vector<Rule> rules(cfg.rule_count());
    std::vector<std::size_t> filled(cfg.num_phrase(), 0);
    for (const auto& r : raw_rules) {
        if (r.lhs < cfg.num_pos || r.lhs >= cfg.num_nonterminals)
            throw FormatError(source, r.line, "rule lhs must be a phrase-level symbol");
        const std::size_t p = r.lhs - cfg.num_pos;
        if (filled[p] == cfg.rules_per_lhs) throw FormatError(source, r.line, "too many rules for lhs");
        rules[p * cfg.rules_per_lhs + filled[p]++] = Rule{static_cast<Symbol>(r.lhs), r.rhs};
    }
    for (std::size_t p = 0; p < filled.size(); ++p)
        if (filled[p] != cfg.rules_per_lhs)
            throw FormatError(source, lineno, "lhs " + std::to_string(p + cfg.num_pos) + " has too few rules");

    std::sort(raw_tags.begin(), raw_tags.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    Vocabulary vocab;
    std::vector<TagPair> tags;
    for (auto& [term, t] : raw_tags) {
        if (!vocab.empty() && vocab.back() == term) throw FormatError(source, lineno, "duplicate tag line for '" + term + "'");
        vocab.push_back(term);
        tags.push_back(t);
    }
    try {
        return Gene(cfg, std::make_shared<const Vocabulary>(std::move(vocab)), std::move(rules), std::move(tags));
    } catch (const ConfigError& e) {
        throw FormatError(source, lineno, e.what());
    }
}

inline Gene load_gene(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw FormatError(path, 0, "cannot open gene file");
    return read_gene(in, path);
}

inline void save_gene(const std::string& path, const Gene& gene)
{
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write gene file " + path);
    write_gene(out, gene);
}

} // namespace grevo
