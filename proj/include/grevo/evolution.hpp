#pragma once

// Three-gene steady-state evolution: two parents, one offspring per
// generation, constant-probability mutation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "corpus.hpp"
#include "error.hpp"
#include "grammar.hpp"
#include "parser.hpp"
#include "retrieval.hpp"
#include "rng.hpp"

namespace grevo {

enum class FitnessMeasure { Asl, Ampl, Nsp, Combined };

inline std::string to_string(FitnessMeasure m)
{
    switch (m) {
    case FitnessMeasure::Asl: return "asl";
    case FitnessMeasure::Ampl: return "ampl";
    case FitnessMeasure::Nsp: return "nsp";
    case FitnessMeasure::Combined: return "combined";
    }
    return "?";
}

inline FitnessMeasure parse_fitness_measure(std::string_view s)
{
    if (s == "asl") return FitnessMeasure::Asl;
    if (s == "ampl") return FitnessMeasure::Ampl;
    if (s == "nsp") return FitnessMeasure::Nsp;
    if (s == "combined") return FitnessMeasure::Combined;
    throw ConfigError("unknown fitness measure '" + std::string(s) + "'");
}

/// Larger is always fitter; ASL enters negated.
struct FitnessSpec
{
    FitnessMeasure measure = FitnessMeasure::Ampl;

    bool needs_asl() const { return measure == FitnessMeasure::Asl || measure == FitnessMeasure::Combined; }
};

/// -ASL + AMPL/100.
inline double combined_fitness(double asl_value, double ampl_value) { return -asl_value + ampl_value / 100.0; }

struct Evaluation
{
    double fitness = 0.0;
    /// NaN when the measure did not require a retrieval pass.
    double asl = std::numeric_limits<double>::quiet_NaN();
    double ampl = 0.0;
    std::size_t nsp = 0;
};

/// One pass over the corpus: parse every sentence once and derive AMPL, NSP
/// and (when asked) the mean ASL over groups.
inline Evaluation evaluate_gene(const Corpus& corpus, const Gene& gene, const FitnessSpec& spec,
                                bool always_asl = false)
{
    const bool want_asl = always_asl || spec.needs_asl();
    const std::size_t depth = gene.config().tag_depth;
    Evaluation ev;
    double span_total = 0.0;
    std::size_t sentences = 0;
    std::vector<std::vector<std::string>> per_doc;
    if (want_asl) per_doc.reserve(corpus.size());
    for (const auto& doc : corpus.documents()) {
        std::vector<std::string> feats;
        for (const auto& s : doc.sentences) {
            const Chart chart = parse_chart(s, gene);
            span_total += static_cast<double>(chart.max_span());
            ev.nsp += chart.total_rule_applications();
            ++sentences;
            if (want_asl)
                for (const auto& c : term_complexes(chart, select_cover(chart), depth)) feats.push_back(c.render());
        }
        if (want_asl) per_doc.push_back(std::move(feats));
    }
    ev.ampl = sentences ? span_total / static_cast<double>(sentences) : 0.0;
    if (want_asl) ev.asl = mean_asl(make_feature_matrix(per_doc), document_groups(corpus), corpus.groups());

    switch (spec.measure) {
    case FitnessMeasure::Asl: ev.fitness = -ev.asl; break;
    case FitnessMeasure::Ampl: ev.fitness = ev.ampl; break;
    case FitnessMeasure::Nsp: ev.fitness = static_cast<double>(ev.nsp); break;
    case FitnessMeasure::Combined: ev.fitness = combined_fitness(ev.asl, ev.ampl); break;
    }
    return ev;
}

inline double fitness(const Gene& gene, const Corpus& corpus, const FitnessSpec& spec)
{
    return evaluate_gene(corpus, gene, spec).fitness;
}

/// Memoizes evaluations by gene content; each distinct gene is parsed once.
class Evaluator
{
public:
    Evaluator(const Corpus& corpus, FitnessSpec spec, bool always_asl = false)
        : corpus_(&corpus), spec_(spec), always_asl_(always_asl)
    {}

    const FitnessSpec& spec() const { return spec_; }

    const Evaluation& evaluate(const Gene& gene)
    {
        auto& bucket = memo_[gene.content_hash()];
        for (const auto& [g, ev] : bucket)
            if (g.same_content(gene)) return ev;
        ++computed_;
        bucket.emplace_back(gene, evaluate_gene(*corpus_, gene, spec_, always_asl_));
        return bucket.back().second;
    }

    /// Number of distinct genes evaluated so far.
    std::size_t computed() const { return computed_; }

private:
    const Corpus* corpus_;
    FitnessSpec spec_;
    bool always_asl_;
    std::unordered_map<std::uint64_t, std::vector<std::pair<Gene, Evaluation>>> memo_;
    std::size_t computed_ = 0;
};

// ---------------------------------------------------------------------------
// Variation

inline void check_compatible(const Gene& a, const Gene& b)
{
    const auto& x = a.config();
    const auto& y = b.config();
    if (x.num_pos != y.num_pos || x.num_nonterminals != y.num_nonterminals || x.rules_per_lhs != y.rules_per_lhs ||
        x.rhs_mode != y.rhs_mode)
        throw ConfigError("crossover parents have different gene shapes");
    if (a.shared_vocabulary() != b.shared_vocabulary() && a.vocabulary() != b.vocabulary())
        throw ConfigError("crossover parents have different vocabularies");
}

/// Uniform crossover: every rule slot and every lexicon entry comes whole
/// from a parent chosen with probability 1/2. A component that is not being
/// learned is copied from parent1 without consuming randomness.
inline Gene crossover(const Gene& parent1, const Gene& parent2, Rng& rng)
{
    check_compatible(parent1, parent2);
    const GeneConfig& cfg = parent1.config();
    Gene child = parent1;
    if (cfg.learn_rules)
        for (std::size_t i = 0; i < cfg.rule_count(); ++i)
            if (rng.uniform_index(2) == 1) child.set_rhs(i, parent2.rule(i).rhs);
    if (cfg.learn_tags)
        for (std::size_t t = 0; t < parent1.vocabulary().size(); ++t)
            if (rng.uniform_index(2) == 1) child.set_tags(t, parent2.tags(t));
    return child;
}

/// Optional replacement for random_rhs when a rule slot mutates. Unset by
/// default; fitness-weighted fragment recombination plugs in here.
using RhsProposer = std::function<std::vector<Symbol>(const Gene& gene, std::size_t rule_index, Rng& rng)>;

/// Each rule slot is redrawn with probability p_rule_mutate (same lhs), each
/// tag slot with probability p_tag_mutate. Probabilities and learn flags come
/// from `config`.
inline Gene mutate(const Gene& gene, const GeneConfig& config, Rng& rng, const RhsProposer& proposer = {})
{
    Gene out = gene;
    if (config.learn_rules)
        for (std::size_t i = 0; i < gene.rules().size(); ++i)
            if (rng.bernoulli(config.p_rule_mutate))
                out.set_rhs(i, proposer ? proposer(out, i, rng) : random_rhs(config, rng));
    if (config.learn_tags)
        for (std::size_t t = 0; t < gene.vocabulary().size(); ++t) {
            TagPair tags = gene.tags(t);
            bool changed = false;
            for (auto& slot : tags)
                if (rng.bernoulli(config.p_tag_mutate)) {
                    slot = random_pos(config, rng);
                    changed = true;
                }
            if (changed) out.set_tags(t, tags);
        }
    return out;
}

// ---------------------------------------------------------------------------
// Population and generation loop

struct Member
{
    Gene gene;
    std::optional<Evaluation> eval;
};

/// Slots 0 and 1 are the parents, slot 2 the offspring.
struct Population
{
    std::array<Member, 3> members;

    const Member& parent1() const { return members[0]; }
    const Member& parent2() const { return members[1]; }
    const Member& offspring() const { return members[2]; }
};

struct StepResult
{
    Population next;
    /// Population index (1 or 2) of the parent displaced by the offspring;
    /// 0 when the offspring was the least fit and was discarded.
    int which_replaced = 0;
};

/// Fitness order with incumbents first on ties: parent1, parent2, offspring.
inline std::array<std::size_t, 3> fitness_order(const Population& pop)
{
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return pop.members[a].eval->fitness > pop.members[b].eval->fitness;
    });
    return order;
}

inline StepResult step_generation(const Population& pop, const GeneConfig& config, Rng& rng,
                                  const RhsProposer& proposer = {})
{
    for (const auto& m : pop.members)
        if (!m.eval) throw ConfigError("step_generation requires all three genes to be evaluated");
    const auto order = fitness_order(pop);
    StepResult r;
    r.which_replaced = order[2] == 2 ? 0 : static_cast<int>(order[2]) + 1;
    r.next.members[0] = pop.members[order[0]];
    r.next.members[1] = pop.members[order[1]];
    r.next.members[2] =
        Member{mutate(crossover(r.next.members[0].gene, r.next.members[1].gene, rng), config, rng, proposer), {}};
    return r;
}

struct GeneStats
{
    double fitness = 0.0;
    double asl = std::numeric_limits<double>::quiet_NaN();
    double ampl = 0.0;
    std::size_t nsp = 0;
};

struct GenerationRecord
{
    std::size_t generation = 0;
    /// Population slots as evaluated this generation (before sorting).
    std::array<GeneStats, 3> genes;
    /// The fittest gene after sorting, i.e. next generation's parent 1.
    GeneStats best;
    double best_so_far = 0.0;
    int which_replaced = 0;
    std::uint64_t rng_digest = 0;
};

struct RunOptions
{
    /// Seed categories applied to the initial gene; empty for none.
    std::vector<SeedCategory> seed_categories;
    /// Evaluate ASL even when the measure does not need it.
    bool always_asl = false;
    RhsProposer rhs_proposer;
    /// Called after each generation's record is made, with the sorted population.
    std::function<void(const GenerationRecord&, const Population&)> on_generation;
};

struct RunResult
{
    std::vector<GenerationRecord> records;
    Gene initial;
    Gene best;
};

inline GeneStats to_stats(const Evaluation& e) { return {e.fitness, e.asl, e.ampl, e.nsp}; }

/// Build one random (optionally category-seeded) gene, clone it into all
/// three slots, and iterate `generations` times. Generation g's record
/// describes the population after its offspring has been evaluated.
inline RunResult run(const Corpus& corpus, const GeneConfig& config, const FitnessSpec& spec, std::size_t generations,
                     std::uint64_t seed, const RunOptions& options = {})
{
    if (generations < 1) throw ConfigError("generations must be >= 1");
    config.validate();
    Rng rng(seed);
    auto vocab = std::make_shared<const Vocabulary>(corpus.vocabulary());
    Gene initial = random_gene(config, vocab, rng);
    if (!options.seed_categories.empty()) initial = seed_lexicon(initial, options.seed_categories, rng);

    Evaluator evaluator(corpus, spec, options.always_asl);
    Population pop;
    for (auto& m : pop.members) m = Member{initial, {}};

    RunResult result;
    result.initial = initial;
    result.records.reserve(generations);
    double best_so_far = -std::numeric_limits<double>::infinity();
    for (std::size_t g = 1; g <= generations; ++g) {
        for (auto& m : pop.members)
            if (!m.eval) m.eval = evaluator.evaluate(m.gene);

        GenerationRecord rec;
        rec.generation = g;
        for (std::size_t i = 0; i < 3; ++i) {
            rec.genes[i] = to_stats(*pop.members[i].eval);
            best_so_far = std::max(best_so_far, rec.genes[i].fitness);
        }
        const auto order = fitness_order(pop);
        rec.best = rec.genes[order[0]];
        rec.best_so_far = best_so_far;
        rec.which_replaced = order[2] == 2 ? 0 : static_cast<int>(order[2]) + 1;

        if (g == generations) {
            rec.rng_digest = rng.state_digest();
            result.best = pop.members[order[0]].gene;
            result.records.push_back(rec);
            if (options.on_generation) {
                Population sorted;
                for (std::size_t i = 0; i < 3; ++i) sorted.members[i] = pop.members[order[i]];
                options.on_generation(rec, sorted);
            }
            break;
        }
        StepResult step = step_generation(pop, config, rng, options.rhs_proposer);
        rec.rng_digest = rng.state_digest();
        result.records.push_back(rec);
        if (options.on_generation) options.on_generation(rec, step.next);
        pop = std::move(step.next);
    }
    return result;
}

} // namespace grevo
