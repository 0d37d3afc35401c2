#pragma once

// Experiment configuration, sweeps over one axis and seeds, CSV telemetry.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "corpus.hpp"
#include "error.hpp"
#include "evolution.hpp"
#include "grammar.hpp"

namespace grevo {

enum class SweepAxis { None, MutationRate, RulesPerLhs, FitnessMeasure, LearnFlags };

inline SweepAxis parse_sweep_axis(std::string_view s)
{
    if (s == "none") return SweepAxis::None;
    if (s == "mutation_rate") return SweepAxis::MutationRate;
    if (s == "rules_per_lhs") return SweepAxis::RulesPerLhs;
    if (s == "fitness_measure") return SweepAxis::FitnessMeasure;
    if (s == "learn_flags") return SweepAxis::LearnFlags;
    throw ConfigError("unknown sweep axis '" + std::string(s) + "'");
}

inline std::string to_string(SweepAxis a)
{
    switch (a) {
    case SweepAxis::None: return "none";
    case SweepAxis::MutationRate: return "mutation_rate";
    case SweepAxis::RulesPerLhs: return "rules_per_lhs";
    case SweepAxis::FitnessMeasure: return "fitness_measure";
    case SweepAxis::LearnFlags: return "learn_flags";
    }
    return "?";
}

/// "rules" | "tags" | "both"
inline void apply_learn_flags(GeneConfig& c, std::string_view v)
{
    if (v == "rules") {
        c.learn_rules = true;
        c.learn_tags = false;
    } else if (v == "tags") {
        c.learn_rules = false;
        c.learn_tags = true;
    } else if (v == "both") {
        c.learn_rules = c.learn_tags = true;
    } else {
        throw ConfigError("learn must be rules, tags or both (got '" + std::string(v) + "')");
    }
}

struct ExperimentSpec
{
    std::string corpus_path;
    GeneConfig config;
    FitnessSpec fitness;
    std::size_t generations = 100;
    std::vector<std::uint64_t> seeds{1};
    SweepAxis axis = SweepAxis::None;
    std::vector<std::string> values;
    bool first_sentence_only = false;
    bool seed_categories = false;
    std::size_t smoothing_window = 5;
    /// Write the best gene every k generations (0 disables snapshots).
    std::size_t snapshot_every = 0;
    std::string output_dir;
    /// 0 means EVOLVE_THREADS or 1.
    std::size_t threads = 0;

    void validate() const
    {
        config.validate();
        if (generations < 1) throw ConfigError("generations must be >= 1");
        if (seeds.empty()) throw ConfigError("seed list must not be empty");
        if (smoothing_window < 1) throw ConfigError("smoothing_window must be >= 1");
        if (axis != SweepAxis::None && values.empty()) throw ConfigError("sweep axis needs values");
        for (const auto& v : values) {
            GeneConfig c = config;
            FitnessSpec f = fitness;
            apply_sweep_value(axis, v, c, f);
            c.validate();
        }
    }

    static void apply_sweep_value(SweepAxis axis, const std::string& v, GeneConfig& c, FitnessSpec& f)
    {
        switch (axis) {
        case SweepAxis::None: break;
        case SweepAxis::MutationRate: {
            const double p = detail::parse_double(v, "sweep value", 0);
            if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("mutation rate " + v + " outside [0,1]");
            c.p_rule_mutate = c.p_tag_mutate = p;
            break;
        }
        case SweepAxis::RulesPerLhs: c.rules_per_lhs = detail::parse_size(v, "sweep value", 0); break;
        case SweepAxis::FitnessMeasure: f.measure = parse_fitness_measure(v); break;
        case SweepAxis::LearnFlags: apply_learn_flags(c, v); break;
        }
    }
};

namespace detail {

inline std::string trim(std::string s)
{
    auto ws = [](unsigned char c) { return std::isspace(c); };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
    return s;
}

inline std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline bool parse_bool(const std::string& v)
{
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError("expected a boolean, got '" + v + "'");
}

} // namespace detail

/// Apply one `key = value` setting to an ExperimentSpec. Throws ConfigError on an
/// unknown key or bad value.
inline void apply_setting(ExperimentSpec& spec, const std::string& key, const std::string& value)
{
    auto num = [&] { return detail::parse_double(value, key, 0); };
    auto count = [&] { return detail::parse_size(value, key, 0); };
    try {
        if (key == "corpus") spec.corpus_path = value;
        else if (key == "first_sentence_only") spec.first_sentence_only = detail::parse_bool(value);
        else if (key == "generations") spec.generations = count();
        else if (key == "seed") spec.seeds = {count()};
        else if (key == "seeds") {
            spec.seeds.clear();
            for (const auto& s : detail::split_list(value)) spec.seeds.push_back(detail::parse_size(s, key, 0));
        } else if (key == "fitness") spec.fitness.measure = parse_fitness_measure(value);
        else if (key == "mutation_rate") spec.config.p_rule_mutate = spec.config.p_tag_mutate = num();
        else if (key == "rule_mutation_rate") spec.config.p_rule_mutate = num();
        else if (key == "tag_mutation_rate") spec.config.p_tag_mutate = num();
        else if (key == "rules_per_lhs") spec.config.rules_per_lhs = count();
        else if (key == "num_pos") spec.config.num_pos = count();
        else if (key == "num_nonterminals") spec.config.num_nonterminals = count();
        else if (key == "rhs_mode") spec.config.rhs_mode = parse_rhs_mode(value);
        else if (key == "poisson_mean") spec.config.poisson_mean = num();
        else if (key == "tag_depth") spec.config.tag_depth = count();
        else if (key == "learn") apply_learn_flags(spec.config, value);
        else if (key == "seed_categories") spec.seed_categories = detail::parse_bool(value);
        else if (key == "smoothing_window") spec.smoothing_window = count();
        else if (key == "snapshot_every") spec.snapshot_every = count();
        else if (key == "output_dir") spec.output_dir = value;
        else if (key == "threads") spec.threads = count();
        else if (key == "axis") spec.axis = parse_sweep_axis(value);
        else if (key == "values") spec.values = detail::split_list(value);
        else throw ConfigError("unknown config key '" + key + "'");
    } catch (const FormatError& e) {
        throw ConfigError(key + ": bad value '" + value + "'");
    }
}

/// UTF-8 `key = value` lines; '#' starts a comment.
inline ExperimentSpec read_experiment_config(std::istream& in, const std::string& source,
                                             ExperimentSpec spec = {})
{
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError(source, lineno, "expected 'key = value'");
        try {
            apply_setting(spec, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw FormatError(source, lineno, e.what());
        }
    }
    return spec;
}

inline ExperimentSpec load_experiment_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    return read_experiment_config(in, path);
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_sig9(double v)
{
    if (std::isnan(v)) return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline constexpr const char* run_csv_header = "generation,fitness,asl,ampl,nsp,best_so_far,which_replaced";

/// One row per generation describing the fittest gene.
struct CsvRow
{
    double generation;
    double fitness;
    double asl;
    double ampl;
    double nsp;
    double best_so_far;
    double which_replaced;
};

inline CsvRow to_row(const GenerationRecord& r)
{
    return {static_cast<double>(r.generation), r.best.fitness, r.best.asl, r.best.ampl,
            static_cast<double>(r.best.nsp), r.best_so_far, static_cast<double>(r.which_replaced)};
}

inline void write_rows(std::ostream& out, const std::vector<CsvRow>& rows)
{
    out << run_csv_header << '\n';
    for (const auto& r : rows)
        out << format_sig9(r.generation) << ',' << format_sig9(r.fitness) << ',' << format_sig9(r.asl) << ','
            << format_sig9(r.ampl) << ',' << format_sig9(r.nsp) << ',' << format_sig9(r.best_so_far) << ','
            << format_sig9(r.which_replaced) << '\n';
}

inline std::string run_csv(const std::vector<GenerationRecord>& records)
{
    std::vector<CsvRow> rows;
    for (const auto& r : records) rows.push_back(to_row(r));
    std::ostringstream os;
    write_rows(os, rows);
    return os.str();
}

// ---------------------------------------------------------------------------
// Aggregation

/// Median of the non-NaN values; NaN if there are none.
inline double median(std::vector<double> v)
{
    v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }), v.end());
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

inline std::vector<CsvRow> aggregate_medians(const std::vector<const std::vector<GenerationRecord>*>& runs)
{
    std::vector<CsvRow> out;
    if (runs.empty()) return out;
    const std::size_t gens = runs.front()->size();
    for (const auto* r : runs)
        if (r->size() != gens) throw ConfigError("runs differ in generation count");
    for (std::size_t g = 0; g < gens; ++g) {
        std::vector<CsvRow> col;
        for (const auto* r : runs) col.push_back(to_row((*r)[g]));
        auto med = [&](double CsvRow::*field) {
            std::vector<double> v;
            for (const auto& c : col) v.push_back(c.*field);
            return median(std::move(v));
        };
        out.push_back({med(&CsvRow::generation), med(&CsvRow::fitness), med(&CsvRow::asl), med(&CsvRow::ampl),
                       med(&CsvRow::nsp), med(&CsvRow::best_so_far), med(&CsvRow::which_replaced)});
    }
    return out;
}

/// Centered moving average; the window shrinks at the series ends.
inline std::vector<double> moving_average(const std::vector<double>& x, std::size_t window)
{
    std::vector<double> out(x.size());
    const std::size_t left = (window - 1) / 2, right = window / 2;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::size_t a = i >= left ? i - left : 0;
        const std::size_t b = std::min(x.size() - 1, i + right);
        double s = 0.0;
        std::size_t n = 0;
        for (std::size_t k = a; k <= b; ++k)
            if (!std::isnan(x[k])) {
                s += x[k];
                ++n;
            }
        out[i] = n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

inline std::vector<CsvRow> smooth_rows(const std::vector<CsvRow>& rows, std::size_t window)
{
    auto column = [&](double CsvRow::*field) {
        std::vector<double> v;
        for (const auto& r : rows) v.push_back(r.*field);
        return moving_average(v, window);
    };
    const auto fit = column(&CsvRow::fitness), asl_c = column(&CsvRow::asl), ampl_c = column(&CsvRow::ampl),
               nsp_c = column(&CsvRow::nsp), best = column(&CsvRow::best_so_far);
    std::vector<CsvRow> out = rows;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out[i].fitness = fit[i];
        out[i].asl = asl_c[i];
        out[i].ampl = ampl_c[i];
        out[i].nsp = nsp_c[i];
        out[i].best_so_far = best[i];
    }
    return out;
}

/// Distinct best-gene AMPL values among the first `horizon` generations.
inline std::size_t distinct_ampl_count(const std::vector<GenerationRecord>& records, std::size_t horizon)
{
    if (horizon > records.size()) throw ConfigError("horizon exceeds the number of records");
    std::set<double> seen;
    for (std::size_t i = 0; i < horizon; ++i) seen.insert(records[i].best.ampl);
    return seen.size();
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRun
{
    std::string value;
    std::uint64_t seed = 0;
    RunResult result;
};

struct SweepResult
{
    /// Ordered by sweep value, then seed.
    std::vector<SweepRun> runs;
    /// Per sweep value, per-generation medians across seeds.
    std::map<std::string, std::vector<CsvRow>> aggregates;
    std::vector<std::string> values;
};

inline std::size_t worker_count(std::size_t requested)
{
    if (requested) return requested;
    if (const char* env = std::getenv("EVOLVE_THREADS")) {
        try {
            const auto n = std::stoul(env);
            if (n > 0) return n;
        } catch (const std::exception&) {
        }
    }
    return 1;
}

inline std::string file_label(const std::string& value)
{
    std::string s = value;
    for (auto& c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-' && c != '_') c = '_';
    return s;
}

/// Run every (sweep value, seed) pair and, when output_dir is set, write
///   runs/<value>_seed<seed>.csv, aggregate_<value>.csv, smoothed_<value>.csv
/// and genes/<value>_seed<seed>_gen<g>.gene snapshots.
inline SweepResult run_experiment(const ExperimentSpec& spec, const Corpus& corpus)
{
    spec.validate();
    SweepResult result;
    result.values = spec.axis == SweepAxis::None ? std::vector<std::string>{"base"} : spec.values;
    const std::vector<SeedCategory> categories =
        spec.seed_categories ? default_seed_categories() : std::vector<SeedCategory>{};

    struct Job
    {
        std::string value;
        std::uint64_t seed;
        GeneConfig config;
        FitnessSpec fitness;
    };
    std::vector<Job> jobs;
    for (const auto& v : result.values)
        for (auto seed : spec.seeds) {
            Job j{v, seed, spec.config, spec.fitness};
            if (spec.axis != SweepAxis::None) ExperimentSpec::apply_sweep_value(spec.axis, v, j.config, j.fitness);
            jobs.push_back(std::move(j));
        }

    // snapshots are collected in memory and written after all runs finish
    std::vector<std::vector<std::pair<std::size_t, std::string>>> snapshots(jobs.size());
    result.runs.resize(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                const Job& j = jobs[i];
                RunOptions opts;
                opts.seed_categories = categories;
                if (spec.snapshot_every > 0)
                    opts.on_generation = [&, i](const GenerationRecord& rec, const Population& pop) {
                        if (rec.generation % spec.snapshot_every == 0)
                            snapshots[i].emplace_back(rec.generation, gene_to_string(pop.parent1().gene));
                    };
                result.runs[i] = SweepRun{j.value, j.seed, run(corpus, j.config, j.fitness, spec.generations, j.seed, opts)};
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t nthreads = std::min(worker_count(spec.threads), jobs.size());
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
            throw std::runtime_error("run failed (value " + jobs[i].value + ", seed " + std::to_string(jobs[i].seed) +
                                     "): " + e.what());
        }
    }

    for (const auto& v : result.values) {
        std::vector<const std::vector<GenerationRecord>*> members;
        for (const auto& r : result.runs)
            if (r.value == v) members.push_back(&r.result.records);
        result.aggregates[v] = aggregate_medians(members);
    }

    if (!spec.output_dir.empty()) {
        namespace fs = std::filesystem;
        const fs::path root(spec.output_dir);
        fs::create_directories(root / "runs");
        if (spec.snapshot_every > 0) fs::create_directories(root / "genes");
        auto write = [](const fs::path& p, const std::string& text) {
            std::ofstream out(p, std::ios::binary);
            if (!out) throw std::runtime_error("cannot write " + p.string());
            out << text;
        };
        for (std::size_t i = 0; i < result.runs.size(); ++i) {
            const auto& r = result.runs[i];
            const std::string stem = file_label(r.value) + "_seed" + std::to_string(r.seed);
            write(root / "runs" / (stem + ".csv"), run_csv(r.result.records));
            for (const auto& [gen, text] : snapshots[i])
                write(root / "genes" / (stem + "_gen" + std::to_string(gen) + ".gene"), text);
        }
        for (const auto& v : result.values) {
            std::ostringstream agg, sm;
            write_rows(agg, result.aggregates[v]);
            write_rows(sm, smooth_rows(result.aggregates[v], spec.smoothing_window));
            write(root / ("aggregate_" + file_label(v) + ".csv"), agg.str());
            write(root / ("smoothed_" + file_label(v) + ".csv"), sm.str());
        }
    }
    return result;
}

} // namespace grevo
