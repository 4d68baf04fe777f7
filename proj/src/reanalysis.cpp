#include "crowdvote/reanalysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <utility>

#include "crowdvote/csv.hpp"
#include "crowdvote/format.hpp"
#include "crowdvote/parallel.hpp"
#include "crowdvote/random.hpp"

namespace crowdvote {

Trial::Trial(std::string dataset, std::string trial, std::string question, double truth_value,
             EstimateVector pre_values, EstimateVector post_values)
    : dataset_id(std::move(dataset)),
      trial_id(std::move(trial)),
      question_id(std::move(question)),
      truth(truth_value),
      pre(std::move(pre_values)),
      post(std::move(post_values)) {
    if (pre.size() != post.size()) throw std::invalid_argument("pre/post length mismatch");
    if (pre.size() < 2) throw std::invalid_argument("a trial needs at least two subjects");
    if (!std::isfinite(truth)) throw std::invalid_argument("truth must be finite");
}

TrialParseError::TrialParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

constexpr const char* kColumns[] = {"dataset",  "trial_id",     "subject_id",   "question_id",
                                    "truth",    "pre_estimate", "post_estimate"};
enum Column { kDataset, kTrial, kSubject, kQuestion, kTruth, kPre, kPost, kColumnCount };

struct PendingTrial {
    std::string question_id;
    double truth = 0.0;
    std::size_t first_line = 0;
    std::vector<std::string> subjects;
    std::vector<double> pre;
    std::vector<double> post;
    std::size_t dropped = 0;
};

std::optional<double> finite_value(std::string_view field) {
    const auto v = parse_double(field);
    if (!v || !std::isfinite(*v)) return std::nullopt;
    return v;
}

}  // namespace

TrialParseResult parse_trials(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::size_t> index(kColumnCount, 0);
    std::size_t width = 0;
    bool have_header = false;

    std::map<std::pair<std::string, std::string>, PendingTrial> pending;

    while (std::getline(in, line)) {
        ++line_no;
        if (csv::trim(line).empty() || line.front() == '#') continue;
        auto fields = csv::split_line(line);
        for (auto& f : fields) f = csv::trim(f);

        if (!have_header) {
            width = fields.size();
            for (int c = 0; c < kColumnCount; ++c) {
                const auto it = std::find(fields.begin(), fields.end(), kColumns[c]);
                if (it == fields.end()) {
                    throw TrialParseError(line_no, std::string("malformed header: missing column '") +
                                                       kColumns[c] + "'");
                }
                index[c] = static_cast<std::size_t>(it - fields.begin());
            }
            have_header = true;
            continue;
        }

        if (fields.size() != width) {
            throw TrialParseError(line_no, "expected " + std::to_string(width) + " fields, found " +
                                               std::to_string(fields.size()));
        }
        const auto truth = finite_value(fields[index[kTruth]]);
        if (!truth) {
            throw TrialParseError(line_no, "non-numeric truth '" + fields[index[kTruth]] + "'");
        }
        const auto key = std::make_pair(fields[index[kDataset]], fields[index[kTrial]]);
        auto [it, inserted] = pending.try_emplace(key);
        PendingTrial& t = it->second;
        if (inserted) {
            t.question_id = fields[index[kQuestion]];
            t.truth = *truth;
            t.first_line = line_no;
        } else if (t.question_id != fields[index[kQuestion]] || t.truth != *truth) {
            throw TrialParseError(line_no, "trial '" + key.second +
                                               "' mixes questions or truth values (first seen line " +
                                               std::to_string(t.first_line) + ")");
        }

        const auto pre = finite_value(fields[index[kPre]]);
        const auto post = finite_value(fields[index[kPost]]);
        if (!pre || !post) {
            ++t.dropped;
            continue;
        }
        t.subjects.push_back(fields[index[kSubject]]);
        t.pre.push_back(*pre);
        t.post.push_back(*post);
    }
    if (!have_header) throw TrialParseError(line_no, "malformed header: input is empty");

    TrialParseResult result;
    for (auto& [key, t] : pending) {
        const std::string label = key.first + "/" + key.second;
        if (t.dropped > 0) {
            result.warnings.push_back(label + ": dropped " + std::to_string(t.dropped) +
                                      " subject(s) with incomplete estimates");
        }
        if (t.pre.size() < 2) {
            result.warnings.push_back(label + ": skipped, fewer than two complete subjects");
            continue;
        }
        Trial trial(key.first, key.second, t.question_id, t.truth,
                    EstimateVector(std::move(t.pre)), EstimateVector(std::move(t.post)));
        trial.subject_ids = std::move(t.subjects);
        result.trials.push_back(std::move(trial));
    }
    return result;
}

TrialParseResult load_trials(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trial file: " + path);
    return parse_trials(in);
}

void write_trials(std::ostream& out, const std::vector<Trial>& trials) {
    out << "dataset,trial_id,subject_id,question_id,truth,pre_estimate,post_estimate\n";
    for (const auto& t : trials) {
        for (std::size_t i = 0; i < t.pre.size(); ++i) {
            const std::string subject =
                i < t.subject_ids.size() ? t.subject_ids[i] : std::to_string(i + 1);
            out << csv::escape(t.dataset_id) << ',' << csv::escape(t.trial_id) << ','
                << csv::escape(subject) << ',' << csv::escape(t.question_id) << ','
                << format_double(t.truth) << ',' << format_double(t.pre[i]) << ','
                << format_double(t.post[i]) << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// Sweeps

TrialSweep sweep_trial(const Trial& trial, double resolution, UnchangedPolicy policy) {
    const auto grid = quantile_grid(resolution);

    DecisionContext ctx;
    ctx.truth = trial.truth;
    ctx.pre_median = median(trial.pre);
    ctx.pre_mean = mean(trial.pre);
    ctx.post_value = mean(trial.post);

    TrialSweep sweep;
    if (spread(trial.pre) == 0.0) {
        sweep.warnings.push_back(trial.dataset_id + "/" + trial.trial_id +
                                 ": all pre estimates identical; every threshold is a boundary");
    }
    sweep.records.reserve(grid.size());
    for (double p : grid) {
        SweepRecord rec;
        rec.p = p;
        rec.threshold = quantile(trial.pre, p);
        ctx.threshold = rec.threshold;
        rec.prediction = predict_vote_change(ctx);
        if (rec.threshold != trial.truth) {
            rec.pre_accuracy = binary_accuracy(trial.pre, rec.threshold, trial.truth);
            rec.post_accuracy = binary_accuracy(trial.post, rec.threshold, trial.truth);
        }
        if (rec.threshold != ctx.pre_median) {
            rec.majority_change =
                realized_majority_change(trial.pre, trial.post, rec.threshold, ctx.pre_median);
        }
        rec.counted = rec.prediction != VoteChangePrediction::Boundary && rec.pre_accuracy;
        rec.matched = rec.counted && prediction_matches(rec.prediction, *rec.majority_change, policy);
        sweep.records.push_back(rec);
    }
    return sweep;
}

namespace {

TrialFit fit_trial(const Trial& trial, double resolution, UnchangedPolicy policy,
                   std::vector<std::string>& warnings) {
    const TrialSweep sweep = sweep_trial(trial, resolution, policy);
    warnings.insert(warnings.end(), sweep.warnings.begin(), sweep.warnings.end());

    TrialFit fit;
    fit.dataset_id = trial.dataset_id;
    fit.trial_id = trial.trial_id;
    for (const auto& r : sweep.records) {
        if (!r.counted) continue;
        ++fit.counted;
        if (r.matched) ++fit.matched;
        if (*r.majority_change == MajorityChange::Unchanged) ++fit.unchanged;
    }
    if (fit.counted > 0) {
        fit.fit = static_cast<double>(fit.matched) / static_cast<double>(fit.counted);
    }

    const double m = median(trial.pre);
    const double pre_mean = mean(trial.pre);
    const double post_mean = mean(trial.post);
    const double lo = std::min(m, post_mean);
    const double hi = std::max(m, post_mean);
    fit.subjects = trial.pre.size();
    fit.between_count = static_cast<std::size_t>(std::count_if(
        trial.pre.begin(), trial.pre.end(), [&](double x) { return lo < x && x < hi; }));
    fit.mean_improved = std::abs(post_mean - trial.truth) < std::abs(pre_mean - trial.truth);
    return fit;
}

std::string common_dataset(const std::vector<Trial>& trials) {
    for (const auto& t : trials) {
        if (t.dataset_id != trials.front().dataset_id) return "all";
    }
    return trials.front().dataset_id;
}

}  // namespace

DatasetSummary dataset_fit(const std::vector<Trial>& trials, double resolution,
                           UnchangedPolicy policy, std::string dataset_label, unsigned jobs) {
    if (trials.empty()) throw std::invalid_argument("empty trial set");

    DatasetSummary s;
    s.dataset_id = dataset_label.empty() ? common_dataset(trials) : std::move(dataset_label);
    s.resolution = resolution;
    s.policy = policy;
    s.trials.resize(trials.size());

    std::vector<std::vector<std::string>> warnings(trials.size());
    parallel_for(trials.size(), jobs, [&](std::size_t i) {
        s.trials[i] = fit_trial(trials[i], resolution, policy, warnings[i]);
    });
    for (auto& w : warnings) s.warnings.insert(s.warnings.end(), w.begin(), w.end());

    double fit_sum = 0.0;
    double fit_sq = 0.0;
    std::size_t subjects = 0;
    std::size_t between = 0;
    double between_trial_sum = 0.0;
    std::size_t improved = 0;
    for (const auto& f : s.trials) {
        if (f.fit) {
            ++s.trials_scored;
            fit_sum += *f.fit;
            fit_sq += *f.fit * *f.fit;
        }
        subjects += f.subjects;
        between += f.between_count;
        between_trial_sum += static_cast<double>(f.between_count) / static_cast<double>(f.subjects);
        if (f.mean_improved) ++improved;
    }
    if (s.trials_scored > 0) {
        const double k = static_cast<double>(s.trials_scored);
        s.mean_fit = fit_sum / k;
        if (s.trials_scored > 1) {
            const double var = std::max(0.0, (fit_sq - k * s.mean_fit * s.mean_fit) / (k - 1.0));
            s.stderr_fit = std::sqrt(var / k);
        }
    }
    const double n_trials = static_cast<double>(trials.size());
    s.between_fraction = static_cast<double>(between) / static_cast<double>(subjects);
    s.between_fraction_trial_mean = between_trial_sum / n_trials;
    s.mean_improved_fraction = static_cast<double>(improved) / n_trials;
    return s;
}

ResolutionTable resolution_table(const std::vector<Trial>& trials, std::vector<double> resolutions,
                                 UnchangedPolicy policy) {
    if (trials.empty()) throw std::invalid_argument("empty trial set");
    std::map<std::string, std::vector<Trial>> by_dataset;
    for (const auto& t : trials) by_dataset[t.dataset_id].push_back(t);

    ResolutionTable table;
    table.resolutions = std::move(resolutions);
    for (const auto& [name, group] : by_dataset) {
        ResolutionRow row;
        row.dataset_id = name;
        for (double r : table.resolutions) {
            const auto summary = dataset_fit(group, r, policy, name);
            row.mean_fit.push_back(summary.mean_fit);
            row.stderr_fit.push_back(summary.stderr_fit);
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

Figure3Data figure3_bins(const std::vector<Trial>& trials, double resolution,
                         UnchangedPolicy policy) {
    if (trials.empty()) throw std::invalid_argument("empty trial set");
    const auto grid = quantile_grid(resolution);
    const std::size_t steps = grid.size() + 1;

    // Indexed by k, where the nominal initial accuracy is k / steps.
    struct Accumulator {
        double change_sum = 0.0;
        std::size_t records = 0;
    };
    struct FitAccumulator {
        std::size_t matched = 0;
        std::size_t counted = 0;
    };
    std::vector<Accumulator> grow(steps + 1);
    std::vector<Accumulator> shrink(steps + 1);
    std::vector<FitAccumulator> improved(steps + 1);
    std::vector<FitAccumulator> unimproved(steps + 1);

    for (const auto& trial : trials) {
        const TrialSweep sweep = sweep_trial(trial, resolution, policy);
        const bool mean_improved = std::abs(mean(trial.post) - trial.truth) <
                                   std::abs(mean(trial.pre) - trial.truth);
        for (std::size_t g = 0; g < sweep.records.size(); ++g) {
            const auto& r = sweep.records[g];
            if (!r.counted) continue;
            const std::size_t k = g + 1;
            const std::size_t bin = trial.truth > r.threshold ? steps - k : k;
            auto& acc = r.prediction == VoteChangePrediction::Grow ? grow[bin] : shrink[bin];
            acc.change_sum += *r.post_accuracy - *r.pre_accuracy;
            ++acc.records;
            auto& fit = mean_improved ? improved[bin] : unimproved[bin];
            ++fit.counted;
            if (r.matched) ++fit.matched;
        }
    }

    Figure3Data out;
    out.resolution = resolution;
    const double denom = static_cast<double>(steps);
    for (std::size_t k = 1; k < steps; ++k) {
        const double x = static_cast<double>(k) / denom;
        if (grow[k].records > 0) {
            out.grow.push_back({x, grow[k].change_sum / static_cast<double>(grow[k].records),
                                grow[k].records});
        }
        if (shrink[k].records > 0) {
            out.shrink.push_back({x, shrink[k].change_sum / static_cast<double>(shrink[k].records),
                                  shrink[k].records});
        }
        if (improved[k].counted + unimproved[k].counted == 0) continue;
        FitSplitBin split;
        split.initial_accuracy = x;
        split.improved_records = improved[k].counted;
        split.unimproved_records = unimproved[k].counted;
        if (improved[k].counted > 0) {
            split.improved_fit = static_cast<double>(improved[k].matched) /
                                 static_cast<double>(improved[k].counted);
        }
        if (unimproved[k].counted > 0) {
            split.unimproved_fit = static_cast<double>(unimproved[k].matched) /
                                   static_cast<double>(unimproved[k].counted);
        }
        out.fit_by_improvement.push_back(split);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic trials

std::vector<Trial> synthesize_trials(const SyntheticTrialConfig& config) {
    if (config.n_min < 2 || config.n_max < config.n_min) {
        throw std::invalid_argument("synthetic group sizes must satisfy 2 <= n_min <= n_max");
    }
    std::vector<Trial> out;
    out.reserve(config.trials);
    const std::size_t width = std::to_string(config.trials).size();

    for (std::size_t t = 0; t < config.trials; ++t) {
        Rng rng(derive_seed(config.seed, t));
        std::normal_distribution<double> standard(0.0, 1.0);
        auto draw = [&] {
            const double z = standard(rng);
            return config.scale *
                   (config.distribution == BeliefDistribution::LogNormal ? std::exp(z) : z);
        };

        const std::size_t span = config.n_max - config.n_min + 1;
        const std::size_t n = config.n_min + static_cast<std::size_t>(rng() % span);
        std::vector<double> pre(n);
        for (auto& b : pre) b = draw();
        std::vector<double> self(n);
        for (auto& s : self) s = uniform01(rng);
        const double truth = draw();

        const auto weights = WeightMatrix::self_weight_complete(std::move(self));
        EstimateVector initial(std::move(pre));
        EstimateVector post = config.rounds == 0
                                  ? run_to_consensus(weights, initial, config.spread_tolerance)
                                  : degroot_run(DeGrootSystem(initial, weights, config.rounds));

        std::string id = std::to_string(t + 1);
        id.insert(0, width - id.size(), '0');
        out.emplace_back(config.dataset_id, "t" + id, "q" + id, truth, std::move(initial),
                         std::move(post));
    }
    return out;
}

}  // namespace crowdvote
