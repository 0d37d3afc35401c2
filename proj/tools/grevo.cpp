// grevo: evolve grammars and tags, parse and rank corpora from the shell.
//
//   grevo corpus validate <path>
//   grevo corpus synth --seed N --groups G --docs D --sents S --truth <file> -o <path>
//   grevo gene random --corpus <path> --seed N -o <gene> [--seed-categories]
//   grevo parse --gene <file> --corpus <path>
//   grevo rank --gene <file> --corpus <path> [--depth n]
//   grevo evolve run --config <file> [overrides]
//   grevo evolve sweep --axis <name> --values <list> [--config <file>] [overrides]
//
// Exit status: 0 success, 1 configuration or input error, 2 runtime failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <grevo/corpus.hpp>
#include <grevo/error.hpp>
#include <grevo/evolution.hpp>
#include <grevo/grammar.hpp>
#include <grevo/harness.hpp>
#include <grevo/parser.hpp>
#include <grevo/retrieval.hpp>
#include <grevo/synth.hpp>

namespace {

using namespace grevo;

struct EvolveFlags
{
    std::string config;
    std::string corpus;
    std::optional<std::uint64_t> seed;
    std::string seeds;
    std::optional<std::size_t> generations;
    std::string fitness;
    std::optional<double> mutation_rate;
    std::optional<std::size_t> rules_per_lhs;
    std::string learn;
    bool first_sentence_only = false;
    bool seed_categories = false;
    std::string out;
    std::optional<std::size_t> snapshot_every;
};

void add_evolve_flags(CLI::App* cmd, EvolveFlags& f)
{
    cmd->add_option("--config", f.config, "key = value experiment config file");
    cmd->add_option("--corpus", f.corpus, "corpus file (overrides config)");
    cmd->add_option("--seed", f.seed, "single RNG seed");
    cmd->add_option("--seeds", f.seeds, "comma-separated seed list");
    cmd->add_option("--generations", f.generations);
    cmd->add_option("--fitness", f.fitness, "asl|ampl|nsp|combined");
    cmd->add_option("--mutation-rate", f.mutation_rate, "rule and tag mutation probability");
    cmd->add_option("--rules-per-lhs", f.rules_per_lhs);
    cmd->add_option("--learn", f.learn, "rules|tags|both");
    cmd->add_flag("--first-sentence-only", f.first_sentence_only);
    cmd->add_flag("--seed-categories", f.seed_categories, "seed the initial lexicon with the five term categories");
    cmd->add_option("-o,--out", f.out, "output directory");
    cmd->add_option("--snapshot-every", f.snapshot_every, "write the best gene every k generations");
}

ExperimentSpec build_spec(const EvolveFlags& f)
{
    ExperimentSpec spec = f.config.empty() ? ExperimentSpec{} : load_experiment_config(f.config);
    if (!f.corpus.empty()) spec.corpus_path = f.corpus;
    if (f.seed) spec.seeds = {*f.seed};
    if (!f.seeds.empty()) apply_setting(spec, "seeds", f.seeds);
    if (f.generations) spec.generations = *f.generations;
    if (!f.fitness.empty()) apply_setting(spec, "fitness", f.fitness);
    if (f.mutation_rate) spec.config.p_rule_mutate = spec.config.p_tag_mutate = *f.mutation_rate;
    if (f.rules_per_lhs) spec.config.rules_per_lhs = *f.rules_per_lhs;
    if (!f.learn.empty()) apply_learn_flags(spec.config, f.learn);
    if (f.first_sentence_only) spec.first_sentence_only = true;
    if (f.seed_categories) spec.seed_categories = true;
    if (!f.out.empty()) spec.output_dir = f.out;
    if (f.snapshot_every) spec.snapshot_every = *f.snapshot_every;
    if (spec.corpus_path.empty()) throw ConfigError("no corpus given (config key 'corpus' or --corpus)");
    if (spec.output_dir.empty()) throw ConfigError("no output directory given (config key 'output_dir' or --out)");
    return spec;
}

void print_summary(const SweepResult& r)
{
    for (const auto& v : r.values) {
        const auto& rows = r.aggregates.at(v);
        if (rows.empty()) continue;
        std::cout << v << ": median final fitness " << format_sig9(rows.back().fitness) << ", AMPL "
                  << format_sig9(rows.front().ampl) << " -> " << format_sig9(rows.back().ampl) << '\n';
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Evolve context-free rules and POS tags by genetic search"};
    app.require_subcommand(1);

    // corpus
    auto* corpus_cmd = app.add_subcommand("corpus", "validate or generate corpora");
    corpus_cmd->require_subcommand(1);
    std::string validate_path;
    auto* validate_cmd = corpus_cmd->add_subcommand("validate", "check a corpus file");
    validate_cmd->add_option("path", validate_path)->required();

    std::uint64_t synth_seed = 1;
    std::size_t synth_groups = 5, synth_docs = 20, synth_sents = 5;
    std::string synth_truth, synth_out;
    std::optional<double> synth_topicality;
    auto* synth_cmd = corpus_cmd->add_subcommand("synth", "generate a corpus from a truth grammar");
    synth_cmd->add_option("--seed", synth_seed);
    synth_cmd->add_option("--groups", synth_groups);
    synth_cmd->add_option("--docs", synth_docs, "documents per group");
    synth_cmd->add_option("--sents", synth_sents, "sentences per document");
    synth_cmd->add_option("--truth", synth_truth, "truth grammar file")->required();
    synth_cmd->add_option("--topicality", synth_topicality, "probability of drawing from the group's own pool");
    synth_cmd->add_option("-o,--out", synth_out, "output corpus path")->required();

    // gene
    auto* gene_cmd = app.add_subcommand("gene", "create genes");
    gene_cmd->require_subcommand(1);
    std::string gr_corpus, gr_out, gr_config;
    std::uint64_t gr_seed = 1;
    bool gr_seeded = false;
    auto* gene_random = gene_cmd->add_subcommand("random", "write a random gene over a corpus vocabulary");
    gene_random->add_option("--corpus", gr_corpus)->required();
    gene_random->add_option("--seed", gr_seed);
    gene_random->add_option("--config", gr_config, "experiment config supplying gene settings");
    gene_random->add_flag("--seed-categories", gr_seeded);
    gene_random->add_option("-o,--out", gr_out)->required();

    // parse
    std::string parse_gene, parse_corpus;
    bool parse_first = false;
    auto* parse_cmd = app.add_subcommand("parse", "per-sentence maximum parse length and largest-edge tree");
    parse_cmd->add_option("--gene", parse_gene)->required();
    parse_cmd->add_option("--corpus", parse_corpus)->required();
    parse_cmd->add_flag("--first-sentence-only", parse_first);

    // rank
    std::string rank_gene, rank_corpus, rank_out;
    std::optional<std::size_t> rank_depth;
    auto* rank_cmd = app.add_subcommand("rank", "per-group RSV rankings as CSV");
    rank_cmd->add_option("--gene", rank_gene)->required();
    rank_cmd->add_option("--corpus", rank_corpus)->required();
    rank_cmd->add_option("--depth", rank_depth, "tag depth (default: the gene's)");
    rank_cmd->add_option("-o,--out", rank_out, "output file (default stdout)");

    // evolve
    auto* evolve_cmd = app.add_subcommand("evolve", "run evolution experiments");
    evolve_cmd->require_subcommand(1);
    EvolveFlags run_flags, sweep_flags;
    auto* run_cmd = evolve_cmd->add_subcommand("run", "one configuration over one or more seeds");
    add_evolve_flags(run_cmd, run_flags);
    std::string sweep_axis, sweep_values;
    auto* sweep_cmd = evolve_cmd->add_subcommand("sweep", "vary one axis over a list of values");
    add_evolve_flags(sweep_cmd, sweep_flags);
    sweep_cmd->add_option("--axis", sweep_axis, "mutation_rate|rules_per_lhs|fitness_measure|learn_flags")->required();
    sweep_cmd->add_option("--values", sweep_values, "comma-separated values")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (validate_cmd->parsed()) {
            const Corpus c = load_corpus(validate_path);
            std::cout << "ok: " << c.size() << " documents, " << c.groups() << " groups, " << c.sentence_count()
                      << " sentences, " << c.vocabulary().size() << " terms\n";
        } else if (synth_cmd->parsed()) {
            GroundTruth truth = load_truth(synth_truth);
            if (synth_topicality) truth.topicality = *synth_topicality;
            Rng rng(synth_seed);
            save_corpus(synth_out, synth_corpus(truth, synth_groups, synth_docs, synth_sents, rng));
        } else if (gene_random->parsed()) {
            const ExperimentSpec spec = gr_config.empty() ? ExperimentSpec{} : load_experiment_config(gr_config);
            const Corpus c = load_corpus(gr_corpus);
            Rng rng(gr_seed);
            Gene g = random_gene(spec.config, std::make_shared<const Vocabulary>(c.vocabulary()), rng);
            if (gr_seeded) {
                std::vector<std::string> missing;
                const auto cats = default_seed_categories();
                g = seed_lexicon(g, cats, rng, &missing);
                for (const auto& m : missing) std::cerr << "warning: seed term '" << m << "' not in vocabulary\n";
            }
            save_gene(gr_out, g);
        } else if (parse_cmd->parsed()) {
            const Gene g = load_gene(parse_gene);
            const Corpus c = load_corpus(parse_corpus, parse_first);
            for (const auto& d : c.documents())
                for (std::size_t i = 0; i < d.sentences.size(); ++i) {
                    const Chart chart = parse_chart(d.sentences[i], g);
                    std::cout << "# " << d.id << ' ' << i << " max_parse_length=" << chart.max_span() << '\n';
                    if (auto e = largest_edge(chart)) std::cout << render_tree(chart, *e);
                }
        } else if (rank_cmd->parsed()) {
            const Gene g = load_gene(rank_gene);
            const Corpus c = load_corpus(rank_corpus);
            const std::size_t depth = rank_depth.value_or(g.config().tag_depth);
            if (depth > 2) throw ConfigError("depth must be 0, 1 or 2");
            const FeatureMatrix m = extract_features(c, g, depth);
            std::ofstream file;
            if (!rank_out.empty()) {
                file.open(rank_out);
                if (!file) throw ConfigError("cannot write " + rank_out);
            }
            std::ostream& out = rank_out.empty() ? std::cout : file;
            out << "group,doc_id,rsv,rank,relevant\n";
            for (std::size_t grp = 0; grp < c.groups(); ++grp) {
                std::vector<bool> rel;
                for (const auto& d : c.documents()) rel.push_back(d.group == grp);
                const Ranking r = rank_documents(m, estimate_weights(m, rel), rel);
                for (std::size_t k = 0; k < r.entries.size(); ++k) {
                    const auto& e = r.entries[k];
                    out << grp << ',' << c.documents()[e.document].id << ',' << format_sig9(e.rsv) << ',' << k + 1
                        << ',' << (e.relevant ? 1 : 0) << '\n';
                }
            }
        } else if (run_cmd->parsed() || sweep_cmd->parsed()) {
            ExperimentSpec spec = build_spec(run_cmd->parsed() ? run_flags : sweep_flags);
            if (sweep_cmd->parsed()) {
                spec.axis = parse_sweep_axis(sweep_axis);
                spec.values = detail::split_list(sweep_values);
            } else {
                spec.axis = SweepAxis::None;
            }
            spec.validate();
            const Corpus c = load_corpus(spec.corpus_path, spec.first_sentence_only);
            print_summary(run_experiment(spec, c));
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
