#include "app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>

#include "CLI11.hpp"
#include "crowdvote/binary_exchange.hpp"
#include "crowdvote/calibrated.hpp"
#include "crowdvote/csv.hpp"
#include "crowdvote/degroot.hpp"
#include "crowdvote/format.hpp"
#include "crowdvote/parallel.hpp"
#include "crowdvote/reanalysis.hpp"
#include "report.hpp"

#ifndef CROWDVOTE_VERSION
#define CROWDVOTE_VERSION "unknown"
#endif

namespace crowdvote::app {

namespace {

namespace fs = std::filesystem;
using report::Json;
using report::Report;
using report::Table;

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Options shared by every command

struct CommonOptions {
    std::uint64_t seed = 0;
    CLI::Option* seed_option = nullptr;
    std::string out;
    std::string format = "csv";
    unsigned jobs = 1;
};

void add_common(CLI::App& cmd, CommonOptions& o, bool stochastic) {
    if (stochastic) {
        o.seed_option =
            cmd.add_option("--seed", o.seed, "64-bit seed; generated and recorded when omitted");
    }
    cmd.add_option("--out", o.out, "Output file, '-' for stdout (default: <command>.<format> in "
                                   "$CROWDVOTE_OUTPUT_DIR or the working directory)");
    cmd.add_option("--format", o.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    cmd.add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
}

struct SeedChoice {
    std::uint64_t value;
    bool generated;
};

SeedChoice resolve_seed(const CommonOptions& o) {
    if (o.seed_option && o.seed_option->count() > 0) return {o.seed, false};
    std::random_device rd;
    const std::uint64_t hi = rd();
    return {(hi << 32) ^ rd(), true};
}

Json provenance(const std::string& command, Json config, std::optional<SeedChoice> seed) {
    Json p = Json::object();
    p["tool"] = "crowdvote";
    p["version"] = CROWDVOTE_VERSION;
    p["command"] = command;
    if (seed) {
        p["seed"] = seed->value;
        p["seed_source"] = seed->generated ? "generated" : "explicit";
    }
    p["config"] = std::move(config);
    return p;
}

void write_output(const Report& rep, const CommonOptions& o, const std::string& stem,
                  std::ostream& out, std::ostream& err) {
    const auto format = report::parse_format(o.format);
    const std::string bytes = report::emit_report(rep, format);
    if (o.out == "-") {
        out << bytes;
        out.flush();
        return;
    }
    fs::path path = o.out;
    if (path.empty()) {
        const char* dir = std::getenv("CROWDVOTE_OUTPUT_DIR");
        path = fs::path(dir && *dir ? dir : ".") / (stem + "." + report::extension(format));
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot open output file: " + path.string());
    file << bytes;
    file.close();
    if (!file) throw IoError("failed writing output file: " + path.string());
    err << "wrote " << path.string() << '\n';
}

std::vector<double> parse_number_list(const std::string& text, const char* what) {
    std::vector<double> values;
    for (const auto& field : csv::split_line(text)) {
        const auto v = parse_double(field);
        if (!v) throw UsageError(std::string("invalid number in ") + what + ": '" + field + "'");
        values.push_back(*v);
    }
    return values;
}

// ---------------------------------------------------------------------------
// simulate-binary

struct BinaryOptions {
    std::size_t n = 1000;
    double share = 0.6;
    double f_min = 0.2;
    double f_maj = 0.0;
    std::size_t steps = 50;
    std::size_t runs = 100;
    std::string weights = "uniform";
};

void add_binary_options(CLI::App& cmd, BinaryOptions& o) {
    cmd.add_option("--n", o.n, "Population size")->check(CLI::PositiveNumber)->capture_default_str();
    cmd.add_option("--share", o.share, "Expected initial share holding opinion 1")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    cmd.add_option("--f-min", o.f_min, "Flip probability for minority agents")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    cmd.add_option("--f-maj", o.f_maj, "Flip probability for majority agents")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    cmd.add_option("--steps", o.steps, "Synchronous update steps")->check(CLI::PositiveNumber)->capture_default_str();
    cmd.add_option("--runs", o.runs, "Independent runs")->check(CLI::PositiveNumber)->capture_default_str();
    cmd.add_option("--weights", o.weights, "uniform or random influence weights")
        ->check(CLI::IsMember({"uniform", "random"}))
        ->capture_default_str();
}

Report run_binary(const BinaryOptions& o, const CommonOptions& common) {
    const auto seed = resolve_seed(common);
    const FlipRates rates{o.f_min, o.f_maj};

    struct RunResult {
        std::vector<double> share;
        std::vector<double> weighted;
        Belief initial_majority = 0;
    };
    std::vector<RunResult> runs(o.runs);
    parallel_for(o.runs, common.jobs, [&](std::size_t r) {
        Rng rng(derive_seed(seed.value, r));
        std::vector<double> weights;
        if (o.weights == "random") weights = random_weights(o.n, rng);
        const auto pop = BinaryPopulation::sample(o.n, o.share, std::move(weights), rates, rng);
        runs[r].initial_majority = majority_opinion(pop);
        auto traj = simulate(pop, o.steps, rng);
        runs[r].share = std::move(traj.share_history);
        runs[r].weighted = std::move(traj.weighted_share_history);
    });

    const double count = static_cast<double>(o.runs);
    Table trajectory{"trajectory",
                     {"step", "mean_share_ones", "sd_share_ones", "mean_weighted_vote",
                      "mean_initial_majority_share", "unanimous_fraction"},
                     {}};
    double tail_sum = 0.0;
    std::size_t tail_points = 0;
    const std::size_t tail_start = (3 * o.steps) / 4;
    for (std::size_t t = 0; t <= o.steps; ++t) {
        double s = 0.0, sq = 0.0, w = 0.0, maj = 0.0, unanimous = 0.0;
        for (const auto& run : runs) {
            const double x = run.share[t];
            s += x;
            sq += x * x;
            w += run.weighted[t];
            maj += run.initial_majority ? x : 1.0 - x;
            if (x == 0.0 || x == 1.0) unanimous += 1.0;
        }
        const double m = s / count;
        const double var = o.runs > 1 ? std::max(0.0, (sq - count * m * m) / (count - 1.0)) : 0.0;
        trajectory.add({t, m, std::sqrt(var), w / count, maj / count, unanimous / count});
        if (t >= tail_start) {
            tail_sum += m;
            ++tail_points;
        }
    }

    Table per_run{"runs", {"run", "initial_majority", "initial_share", "final_share",
                           "unanimous_on_initial_majority", "monotone"},
                  {}};
    std::size_t absorbed = 0;
    std::size_t monotone_runs = 0;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const auto& run = runs[r];
        const double target = run.initial_majority ? 1.0 : 0.0;
        const bool absorbed_here = run.share.back() == target;
        bool monotone = true;
        for (std::size_t t = 1; t < run.share.size(); ++t) {
            const double delta = run.share[t] - run.share[t - 1];
            if (run.initial_majority ? delta < 0.0 : delta > 0.0) monotone = false;
        }
        absorbed += absorbed_here;
        monotone_runs += monotone;
        per_run.add({r, run.initial_majority, run.share.front(), run.share.back(), absorbed_here, monotone});
    }

    Json equilibrium = nullptr;
    if (o.f_min + o.f_maj > 0.0) equilibrium = equilibrium_share(o.f_min, o.f_maj);

    Report rep;
    rep.provenance = provenance("simulate-binary",
                                Json{{"n", o.n},
                                     {"share", o.share},
                                     {"f_min", o.f_min},
                                     {"f_maj", o.f_maj},
                                     {"steps", o.steps},
                                     {"runs", o.runs},
                                     {"weights", o.weights}},
                                seed);
    rep.summary = Json{{"equilibrium_share", equilibrium},
                       {"tail_start_step", tail_start},
                       {"tail_mean_share_ones", tail_sum / static_cast<double>(tail_points)},
                       {"final_mean_share_ones", trajectory.rows.back()[1]},
                       {"absorbed_fraction", static_cast<double>(absorbed) / count},
                       {"monotone_fraction", static_cast<double>(monotone_runs) / count}};
    rep.tables.push_back(std::move(trajectory));
    rep.tables.push_back(std::move(per_run));
    return rep;
}

// ---------------------------------------------------------------------------
// simulate-degroot / figdata a1

struct ConsistencyOptions {
    std::string preset;
    std::size_t n = 0;
    std::size_t rounds = 0;
    std::size_t runs = 0;
    std::string distribution;
    double resolution = 0.0;
    std::string policy;
    CLI::Option* n_opt = nullptr;
    CLI::Option* rounds_opt = nullptr;
    CLI::Option* runs_opt = nullptr;
    CLI::Option* distribution_opt = nullptr;
    CLI::Option* resolution_opt = nullptr;
    CLI::Option* policy_opt = nullptr;
};

void add_consistency_options(CLI::App& cmd, ConsistencyOptions& o) {
    cmd.add_option("--preset", o.preset, "ec3-n100, ec3-n1000, sec325-n1000 or paper");
    o.n_opt = cmd.add_option("--n", o.n, "Group size (default 1000)")->check(CLI::Range(2, 100'000'000));
    o.rounds_opt = cmd.add_option("--rounds", o.rounds, "Averaging rounds (default 10)");
    o.runs_opt = cmd.add_option("--runs", o.runs, "Monte Carlo runs (default 10000)")->check(CLI::PositiveNumber);
    o.distribution_opt = cmd.add_option("--distribution", o.distribution, "normal or lognormal");
    o.resolution_opt = cmd.add_option("--resolution", o.resolution, "Quantile grid step (default 0.05)");
    o.policy_opt = cmd.add_option("--policy", o.policy, "unchanged-as-grow or strict");
}

ConsistencyConfig consistency_config(const ConsistencyOptions& o, const CommonOptions& common,
                                     std::uint64_t seed) {
    ConsistencyConfig cfg = o.preset.empty() ? ConsistencyConfig{} : consistency_preset(o.preset);
    if (o.n_opt->count()) cfg.n = o.n;
    if (o.rounds_opt->count()) cfg.rounds = o.rounds;
    if (o.runs_opt->count()) cfg.runs = o.runs;
    if (o.distribution_opt->count()) cfg.distribution = parse_belief_distribution(o.distribution);
    if (o.resolution_opt->count()) cfg.resolution = o.resolution;
    if (o.policy_opt->count()) cfg.policy = parse_unchanged_policy(o.policy);
    cfg.seed = seed;
    cfg.jobs = common.jobs;
    return cfg;
}

Json consistency_json(const ConsistencyOptions& o, const ConsistencyConfig& cfg) {
    return Json{{"preset", o.preset.empty() ? Json(nullptr) : Json(o.preset)},
                {"n", cfg.n},
                {"rounds", cfg.rounds},
                {"runs", cfg.runs},
                {"distribution", to_string(cfg.distribution)},
                {"resolution", cfg.resolution},
                {"policy", to_string(cfg.policy)},
                {"network", "complete, uniform self-weights"}};
}

double steps_from_mean(const ConsistencyTable& table, const ThresholdConsistency& row) {
    // rounded so grid points print as whole steps
    return std::round(1e9 * std::abs(row.level - table.mean_level) / table.resolution) / 1e9;
}

Json consistency_summary(const ConsistencyTable& table) {
    std::optional<double> near, far;
    for (const auto& row : table.rows) {
        // 2 - 1e-9 keeps a grid point exactly two steps away in the far band
        auto& band = steps_from_mean(table, row) < 2.0 - 1e-9 ? near : far;
        band = std::min(band.value_or(1.0), row.consistency());
    }
    return Json{{"mean_level", table.mean_level},
                {"min_consistency_within_2_steps", near ? Json(*near) : Json(nullptr)},
                {"min_consistency_beyond_2_steps", far ? Json(*far) : Json(nullptr)}};
}

Report run_consistency(const ConsistencyOptions& o, const CommonOptions& common, bool figure) {
    const auto seed = resolve_seed(common);
    const auto cfg = consistency_config(o, common, seed.value);
    const auto table = short_term_consistency(cfg);

    Report rep;
    rep.provenance = provenance(figure ? "figdata a1" : "simulate-degroot", consistency_json(o, cfg), seed);
    rep.summary = consistency_summary(table);
    if (figure) {
        Table t{"fig_a1", {"level", "steps_from_mean", "consistency"}, {}};
        for (const auto& row : table.rows) t.add({row.level, steps_from_mean(table, row), row.consistency()});
        rep.tables.push_back(std::move(t));
        return rep;
    }
    Table t{"consistency",
            {"level", "threshold", "steps_from_mean", "runs", "matched", "unmatched", "boundary",
             "unchanged", "consistency"},
            {}};
    for (const auto& row : table.rows) {
        t.add({row.level, row.threshold, steps_from_mean(table, row), row.runs, row.matched,
               row.unmatched, row.boundary, row.unchanged, row.consistency()});
    }
    rep.tables.push_back(std::move(t));
    return rep;
}

// ---------------------------------------------------------------------------
// simulate-calibrated / figdata fig2

struct CalibratedOptions {
    std::size_t n = 20;
    std::size_t rounds = 2;
    std::size_t runs = 2000;
    std::string curve;
    std::string grid;
    std::string variant = "both";
};

void add_calibrated_options(CLI::App& cmd, CalibratedOptions& o) {
    cmd.add_option("--n", o.n, "Group size")->check(CLI::Range(2, 1'000'000))->capture_default_str();
    cmd.add_option("--rounds", o.rounds, "Revision rounds")->check(CLI::PositiveNumber)->capture_default_str();
    cmd.add_option("--runs", o.runs, "Monte Carlo runs per grid point")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd.add_option("--curve", o.curve, "Revision curve file (default: built-in curve)");
    cmd.add_option("--grid", o.grid, "Comma-separated initial accuracies (default 0.05..0.95)");
    cmd.add_option("--variant", o.variant, "plain, modified or both")
        ->check(CLI::IsMember({"plain", "modified", "both"}))
        ->capture_default_str();
}

ResponseSweepConfig calibrated_config(const CalibratedOptions& o, const CommonOptions& common,
                                      std::uint64_t seed) {
    ResponseSweepConfig cfg;
    cfg.n = o.n;
    cfg.rounds = o.rounds;
    cfg.runs = o.runs;
    cfg.seed = seed;
    cfg.jobs = common.jobs;
    if (!o.grid.empty()) cfg.grid = parse_number_list(o.grid, "--grid");
    if (!o.curve.empty()) {
        if (!fs::exists(o.curve)) throw IoError("cannot open curve file: " + o.curve);
        cfg.curve = RevisionCurve::load(o.curve);
        // a plain two-column file gets the default accuracy modifier for the modified variant
        if (!cfg.curve.has_accuracy_adjustment()) {
            cfg.curve = cfg.curve.with_modifier(RevisionCurve::default_modifier());
        }
    }
    if (o.variant == "plain") cfg.variants = {CurveVariant::Plain};
    if (o.variant == "modified") cfg.variants = {CurveVariant::AccuracyModified};
    return cfg;
}

Json calibrated_json(const CalibratedOptions& o, const ResponseSweepConfig& cfg) {
    Json knots = Json::array();
    for (const auto& k : cfg.curve.knots()) knots.push_back(Json::array({k.disagreement, k.probability}));
    Json accurate = Json::array();
    Json inaccurate = Json::array();
    for (const auto& k : cfg.curve.knots()) {
        accurate.push_back(cfg.curve.probability(k.disagreement, true));
        inaccurate.push_back(cfg.curve.probability(k.disagreement, false));
    }
    Json variants = Json::array();
    for (auto v : cfg.variants) variants.push_back(to_string(v));
    return Json{{"n", cfg.n},
                {"rounds", cfg.rounds},
                {"runs", cfg.runs},
                {"grid", cfg.grid.empty() ? default_accuracy_grid() : cfg.grid},
                {"variants", std::move(variants)},
                {"curve_source", o.curve.empty() ? std::string("built-in") : o.curve},
                {"curve_knots", std::move(knots)},
                {"curve_if_accurate", std::move(accurate)},
                {"curve_if_inaccurate", std::move(inaccurate)}};
}

Report run_calibrated(const CalibratedOptions& o, const CommonOptions& common, bool figure) {
    const auto seed = resolve_seed(common);
    const auto cfg = calibrated_config(o, common, seed.value);
    const auto points = accuracy_response_curve(cfg);

    Report rep;
    rep.provenance = provenance(figure ? "figdata fig2" : "simulate-calibrated", calibrated_json(o, cfg), seed);
    if (!figure) {
        Table t{"response", {"initial_accuracy", "variant", "mean_change", "stderr_change", "runs"}, {}};
        for (const auto& p : points) {
            t.add({p.initial_accuracy, to_string(p.variant), p.mean_change, p.stderr_change, p.runs});
        }
        rep.tables.push_back(std::move(t));
        return rep;
    }

    // wide form: one row per grid point, one column pair per variant
    Table t{"fig2", {"initial_accuracy"}, {}};
    for (auto v : cfg.variants) {
        t.columns.push_back(std::string(to_string(v)) + "_mean_change");
        t.columns.push_back(std::string(to_string(v)) + "_stderr");
    }
    const std::size_t per_point = cfg.variants.size();
    for (std::size_t i = 0; i < points.size(); i += per_point) {
        std::vector<Json> row{points[i].initial_accuracy};
        for (std::size_t k = 0; k < per_point; ++k) {
            row.push_back(points[i + k].mean_change);
            row.push_back(points[i + k].stderr_change);
        }
        t.add(std::move(row));
    }
    rep.tables.push_back(std::move(t));
    return rep;
}

// ---------------------------------------------------------------------------
// reanalyze / figdata fig3

struct ReanalyzeOptions {
    std::string input;
    double resolution = 0.01;
    std::string policy = "unchanged-as-grow";
    std::string table_resolutions = "0.01,0.05,0.10";
};

void add_reanalyze_options(CLI::App& cmd, ReanalyzeOptions& o, bool with_table) {
    cmd.add_option("--input", o.input, "Trial file (dataset,trial_id,subject_id,question_id,truth,"
                                       "pre_estimate,post_estimate)")
        ->required();
    cmd.add_option("--resolution", o.resolution, "Quantile grid step")->capture_default_str();
    cmd.add_option("--policy", o.policy, "unchanged-as-grow or strict")->capture_default_str();
    if (with_table) {
        cmd.add_option("--table-resolutions", o.table_resolutions,
                       "Comma-separated grid steps for the resolution table")
            ->capture_default_str();
    }
}

TrialParseResult read_trials(const std::string& path) {
    if (!fs::is_regular_file(path)) throw IoError("cannot open trial file: " + path);
    auto parsed = load_trials(path);
    if (parsed.trials.empty()) throw std::runtime_error("no usable trials in " + path);
    return parsed;
}

void warn_all(const std::vector<std::string>& warnings, std::ostream& err) {
    for (const auto& w : warnings) err << "warning: " << w << '\n';
}

Report run_reanalyze(const ReanalyzeOptions& o, const CommonOptions& common, std::ostream& err) {
    const auto policy = parse_unchanged_policy(o.policy);
    const auto resolutions = parse_number_list(o.table_resolutions, "--table-resolutions");
    quantile_grid(o.resolution);
    for (double r : resolutions) quantile_grid(r);

    auto parsed = read_trials(o.input);
    const auto& trials = parsed.trials;

    std::map<std::string, std::vector<Trial>> by_dataset;
    for (const auto& t : trials) by_dataset[t.dataset_id].push_back(t);

    Table datasets{"datasets",
                   {"dataset_id", "trials", "trials_scored", "mean_fit", "stderr_fit",
                    "mean_fit_unchanged_as_grow", "mean_fit_strict", "between_fraction",
                    "between_fraction_trial_mean", "mean_improved_fraction"},
                   {}};
    auto add_dataset_row = [&](const std::vector<Trial>& group, const std::string& label) {
        const auto s = dataset_fit(group, o.resolution, policy, label, common.jobs);
        const auto lenient = dataset_fit(group, o.resolution, UnchangedPolicy::CountsAsGrow, label, common.jobs);
        const auto strict = dataset_fit(group, o.resolution, UnchangedPolicy::Strict, label, common.jobs);
        datasets.add({s.dataset_id, group.size(), s.trials_scored, s.mean_fit, s.stderr_fit,
                      lenient.mean_fit, strict.mean_fit, s.between_fraction,
                      s.between_fraction_trial_mean, s.mean_improved_fraction});
    };
    for (const auto& [name, group] : by_dataset) add_dataset_row(group, name);
    if (by_dataset.size() > 1) add_dataset_row(trials, "all");

    const auto summary = dataset_fit(trials, o.resolution, policy, {}, common.jobs);

    Table trial_table{"trials",
                      {"dataset_id", "trial_id", "subjects", "counted", "matched", "unchanged", "fit",
                       "mean_improved", "between_count"},
                      {}};
    for (const auto& f : summary.trials) {
        trial_table.add({f.dataset_id, f.trial_id, f.subjects, f.counted, f.matched, f.unchanged,
                         f.fit ? Json(*f.fit) : Json(nullptr), f.mean_improved, f.between_count});
    }

    const auto res_table = resolution_table(trials, resolutions, policy);
    Table resolution{"resolution", {"dataset_id", "resolution", "mean_fit", "stderr_fit"}, {}};
    for (const auto& row : res_table.rows) {
        for (std::size_t k = 0; k < res_table.resolutions.size(); ++k) {
            resolution.add({row.dataset_id, res_table.resolutions[k], row.mean_fit[k], row.stderr_fit[k]});
        }
    }

    std::vector<std::string> warnings = parsed.warnings;
    warnings.insert(warnings.end(), summary.warnings.begin(), summary.warnings.end());
    warn_all(warnings, err);
    Table warning_table{"warnings", {"message"}, {}};
    for (const auto& w : warnings) warning_table.add({w});

    Report rep;
    rep.provenance = provenance("reanalyze",
                                Json{{"input", o.input},
                                     {"trials", trials.size()},
                                     {"resolution", o.resolution},
                                     {"policy", to_string(policy)},
                                     {"table_resolutions", resolutions}},
                                std::nullopt);
    rep.summary = report::to_json(summary);
    rep.tables.push_back(std::move(datasets));
    rep.tables.push_back(std::move(resolution));
    rep.tables.push_back(std::move(trial_table));
    rep.tables.push_back(std::move(warning_table));
    return rep;
}

Report run_fig3(const ReanalyzeOptions& o, std::ostream& err) {
    const auto policy = parse_unchanged_policy(o.policy);
    quantile_grid(o.resolution);
    const auto parsed = read_trials(o.input);
    warn_all(parsed.warnings, err);
    const auto fig = figure3_bins(parsed.trials, o.resolution, policy);

    Table grow{"grow", {"initial_accuracy", "mean_change", "records"}, {}};
    for (const auto& b : fig.grow) grow.add({b.initial_accuracy, b.mean_change, b.records});
    Table shrink{"shrink", {"initial_accuracy", "mean_change", "records"}, {}};
    for (const auto& b : fig.shrink) shrink.add({b.initial_accuracy, b.mean_change, b.records});
    Table split{"fit_by_improvement",
                {"initial_accuracy", "improved_fit", "improved_records", "unimproved_fit",
                 "unimproved_records"},
                {}};
    auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
    for (const auto& b : fig.fit_by_improvement) {
        split.add({b.initial_accuracy, opt(b.improved_fit), b.improved_records, opt(b.unimproved_fit),
                   b.unimproved_records});
    }

    Report rep;
    rep.provenance = provenance("figdata fig3",
                                Json{{"input", o.input},
                                     {"trials", parsed.trials.size()},
                                     {"resolution", o.resolution},
                                     {"policy", to_string(policy)}},
                                std::nullopt);
    rep.tables.push_back(std::move(grow));
    rep.tables.push_back(std::move(shrink));
    rep.tables.push_back(std::move(split));
    return rep;
}

// ---------------------------------------------------------------------------
// synth-trials

struct SynthOptions {
    SyntheticTrialConfig cfg;
    std::string distribution = "lognormal";
};

void add_synth_options(CLI::App& cmd, SynthOptions& o) {
    cmd.add_option("--trials", o.cfg.trials, "Number of trials")->check(CLI::PositiveNumber)->capture_default_str();
    cmd.add_option("--n-min", o.cfg.n_min, "Smallest group")->capture_default_str();
    cmd.add_option("--n-max", o.cfg.n_max, "Largest group")->capture_default_str();
    cmd.add_option("--rounds", o.cfg.rounds, "Averaging rounds; 0 runs to consensus")->capture_default_str();
    cmd.add_option("--spread-tolerance", o.cfg.spread_tolerance, "Consensus stopping spread")
        ->capture_default_str();
    cmd.add_option("--distribution", o.distribution, "normal or lognormal")->capture_default_str();
    cmd.add_option("--scale", o.cfg.scale, "Estimate scale")->capture_default_str();
    cmd.add_option("--dataset", o.cfg.dataset_id, "Dataset label")->capture_default_str();
}

Report run_synth(SynthOptions o, const CommonOptions& common) {
    const auto seed = resolve_seed(common);
    o.cfg.seed = seed.value;
    o.cfg.distribution = parse_belief_distribution(o.distribution);
    const auto trials = synthesize_trials(o.cfg);

    Table t{"trials",
            {"dataset", "trial_id", "subject_id", "question_id", "truth", "pre_estimate", "post_estimate"},
            {}};
    for (const auto& trial : trials) {
        for (std::size_t i = 0; i < trial.pre.size(); ++i) {
            t.add({trial.dataset_id, trial.trial_id, std::to_string(i + 1), trial.question_id, trial.truth,
                   trial.pre[i], trial.post[i]});
        }
    }
    Report rep;
    rep.provenance = provenance("synth-trials",
                                Json{{"trials", o.cfg.trials},
                                     {"n_min", o.cfg.n_min},
                                     {"n_max", o.cfg.n_max},
                                     {"rounds", o.cfg.rounds},
                                     {"spread_tolerance", o.cfg.spread_tolerance},
                                     {"distribution", to_string(o.cfg.distribution)},
                                     {"scale", o.cfg.scale},
                                     {"dataset", o.cfg.dataset_id},
                                     {"network", "complete, uniform self-weights"}},
                                seed);
    rep.tables.push_back(std::move(t));
    return rep;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Majority amplification under social influence: simulations and trial reanalysis",
                 "crowdvote"};
    app.set_version_flag("--version", CROWDVOTE_VERSION);
    app.require_subcommand(1);

    std::function<void()> action;

    CommonOptions binary_common;
    BinaryOptions binary;
    auto* cmd_binary = app.add_subcommand("simulate-binary", "Binary vote exchange trajectories");
    add_binary_options(*cmd_binary, binary);
    add_common(*cmd_binary, binary_common, true);
    cmd_binary->callback([&] {
        action = [&] { write_output(run_binary(binary, binary_common), binary_common, "simulate-binary", out, err); };
    });

    CommonOptions degroot_common;
    ConsistencyOptions degroot;
    auto* cmd_degroot =
        app.add_subcommand("simulate-degroot", "Short-term consistency of the vote-change predictor");
    add_consistency_options(*cmd_degroot, degroot);
    add_common(*cmd_degroot, degroot_common, true);
    cmd_degroot->callback([&] {
        action = [&] {
            write_output(run_consistency(degroot, degroot_common, false), degroot_common, "simulate-degroot", out, err);
        };
    });

    CommonOptions calibrated_common;
    CalibratedOptions calibrated;
    auto* cmd_calibrated =
        app.add_subcommand("simulate-calibrated", "Accuracy response of the calibrated flip model");
    add_calibrated_options(*cmd_calibrated, calibrated);
    add_common(*cmd_calibrated, calibrated_common, true);
    cmd_calibrated->callback([&] {
        action = [&] {
            write_output(run_calibrated(calibrated, calibrated_common, false), calibrated_common,
                         "simulate-calibrated", out, err);
        };
    });

    CommonOptions reanalyze_common;
    ReanalyzeOptions reanalyze;
    auto* cmd_reanalyze = app.add_subcommand("reanalyze", "Score the vote-change predictor on trial data");
    add_reanalyze_options(*cmd_reanalyze, reanalyze, true);
    add_common(*cmd_reanalyze, reanalyze_common, false);
    cmd_reanalyze->callback([&] {
        action = [&] {
            write_output(run_reanalyze(reanalyze, reanalyze_common, err), reanalyze_common, "reanalyze", out, err);
        };
    });

    CommonOptions synth_common;
    SynthOptions synth;
    auto* cmd_synth = app.add_subcommand("synth-trials", "Generate trial data from the averaging model");
    add_synth_options(*cmd_synth, synth);
    add_common(*cmd_synth, synth_common, true);
    cmd_synth->callback([&] {
        action = [&] { write_output(run_synth(synth, synth_common), synth_common, "synth-trials", out, err); };
    });

    auto* cmd_fig = app.add_subcommand("figdata", "Plot-ready tables");
    cmd_fig->require_subcommand(1);

    CommonOptions fig2_common;
    CalibratedOptions fig2;
    auto* cmd_fig2 = cmd_fig->add_subcommand("fig2", "Change in group accuracy against initial accuracy");
    add_calibrated_options(*cmd_fig2, fig2);
    add_common(*cmd_fig2, fig2_common, true);
    cmd_fig2->callback([&] {
        action = [&] { write_output(run_calibrated(fig2, fig2_common, true), fig2_common, "figdata-fig2", out, err); };
    });

    CommonOptions fig3_common;
    ReanalyzeOptions fig3;
    auto* cmd_fig3 = cmd_fig->add_subcommand("fig3", "Binned accuracy change by predicted direction");
    add_reanalyze_options(*cmd_fig3, fig3, false);
    add_common(*cmd_fig3, fig3_common, false);
    cmd_fig3->callback([&] {
        action = [&] { write_output(run_fig3(fig3, err), fig3_common, "figdata-fig3", out, err); };
    });

    CommonOptions a1_common;
    ConsistencyOptions a1;
    auto* cmd_a1 = cmd_fig->add_subcommand("a1", "Consistency against threshold level");
    add_consistency_options(*cmd_a1, a1);
    add_common(*cmd_a1, a1_common, true);
    cmd_a1->callback([&] {
        action = [&] { write_output(run_consistency(a1, a1_common, true), a1_common, "figdata-a1", out, err); };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (action) action();
        return 0;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"crowdvote"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace crowdvote::app
