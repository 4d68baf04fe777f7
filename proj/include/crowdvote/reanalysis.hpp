#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "crowdvote/degroot.hpp"
#include "crowdvote/stats.hpp"

namespace crowdvote {

/// One group answering one question, with index-aligned pre/post estimates.
struct Trial {
    Trial(std::string dataset_id, std::string trial_id, std::string question_id, double truth,
          EstimateVector pre, EstimateVector post);

    std::string dataset_id;
    std::string trial_id;
    std::string question_id;
    double truth;
    EstimateVector pre;
    EstimateVector post;

    /// Per-subject identifiers, when known. Written back out by write_trials.
    std::vector<std::string> subject_ids;
};

struct TrialParseResult {
    std::vector<Trial> trials;  // sorted by (dataset_id, trial_id)
    std::vector<std::string> warnings;
};

/// Thrown for malformed input; `line` is the 1-based line of the offending row.
class TrialParseError : public std::runtime_error {
public:
    TrialParseError(std::size_t line, const std::string& what);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Reads rows of dataset,trial_id,subject_id,question_id,truth,pre_estimate,post_estimate.
/// Subjects with a missing or non-numeric estimate are dropped from both
/// vectors; trials left with fewer than two subjects are skipped with a warning.
TrialParseResult parse_trials(std::istream& in);
TrialParseResult load_trials(const std::string& path);

void write_trials(std::ostream& out, const std::vector<Trial>& trials);

struct SweepRecord {
    double p = 0.0;
    double threshold = 0.0;  // quantile(pre, p)
    std::optional<double> pre_accuracy;
    std::optional<double> post_accuracy;
    VoteChangePrediction prediction = VoteChangePrediction::Boundary;
    std::optional<MajorityChange> majority_change;
    bool counted = false;  // false on Boundary or when truth == threshold
    bool matched = false;
};

struct TrialSweep {
    std::vector<SweepRecord> records;
    std::vector<std::string> warnings;
};

/// Scores the vote-change predictor at thresholds T = quantile(pre, p) over
/// the grid resolution..1-resolution, with M = median(pre), C = mean(post).
TrialSweep sweep_trial(const Trial& trial, double resolution,
                       UnchangedPolicy policy = UnchangedPolicy::CountsAsGrow);

struct TrialFit {
    std::string dataset_id;
    std::string trial_id;
    std::size_t counted = 0;
    std::size_t matched = 0;
    std::size_t unchanged = 0;  // counted records whose majority share did not move
    std::optional<double> fit;  // matched / counted; empty when nothing was counted
    bool mean_improved = false;
    std::size_t subjects = 0;
    std::size_t between_count = 0;  // subjects whose pre estimate lies strictly between M and C
};

struct DatasetSummary {
    std::string dataset_id;  // "all" when pooling datasets
    double resolution = 0.01;
    UnchangedPolicy policy = UnchangedPolicy::CountsAsGrow;
    std::vector<TrialFit> trials;
    std::size_t trials_scored = 0;    // trials with at least one counted record
    double mean_fit = 0.0;            // mean over scored trials
    double stderr_fit = 0.0;          // sample sd / sqrt(trials_scored)
    double between_fraction = 0.0;    // pooled over subjects
    double between_fraction_trial_mean = 0.0;
    double mean_improved_fraction = 0.0;
    std::vector<std::string> warnings;
};

DatasetSummary dataset_fit(const std::vector<Trial>& trials, double resolution,
                           UnchangedPolicy policy = UnchangedPolicy::CountsAsGrow,
                           std::string dataset_label = {}, unsigned jobs = 1);

struct ResolutionRow {
    std::string dataset_id;
    std::vector<double> mean_fit;  // one per resolution
    std::vector<double> stderr_fit;
};

struct ResolutionTable {
    std::vector<double> resolutions;
    std::vector<ResolutionRow> rows;  // sorted by dataset_id
};

ResolutionTable resolution_table(const std::vector<Trial>& trials,
                                 std::vector<double> resolutions = {0.01, 0.05, 0.10},
                                 UnchangedPolicy policy = UnchangedPolicy::CountsAsGrow);

struct AccuracyBin {
    double initial_accuracy = 0.0;
    double mean_change = 0.0;  // post_accuracy - pre_accuracy
    std::size_t records = 0;
};

struct FitSplitBin {
    double initial_accuracy = 0.0;
    std::optional<double> improved_fit;
    std::size_t improved_records = 0;
    std::optional<double> unimproved_fit;
    std::size_t unimproved_records = 0;
};

struct Figure3Data {
    double resolution = 0.01;
    std::vector<AccuracyBin> grow;    // records predicted to grow
    std::vector<AccuracyBin> shrink;  // records predicted to shrink
    std::vector<FitSplitBin> fit_by_improvement;
};

/// Bins counted records by nominal initial accuracy (p, or 1 - p when the
/// truth lies above the threshold).
Figure3Data figure3_bins(const std::vector<Trial>& trials, double resolution,
                         UnchangedPolicy policy = UnchangedPolicy::CountsAsGrow);

// ---------------------------------------------------------------------------
// Synthetic trials from the numeric-exchange model

struct SyntheticTrialConfig {
    std::size_t trials = 200;
    std::size_t n_min = 5;
    std::size_t n_max = 40;
    std::size_t rounds = 0;  // 0 runs each group to consensus
    double spread_tolerance = 1e-8;
    BeliefDistribution distribution = BeliefDistribution::LogNormal;
    double scale = 100.0;
    std::string dataset_id = "synthetic";
    std::uint64_t seed = 0;
};

/// Pre estimates and truth are drawn from scale * distribution; self-weights are
/// uniform on [0, 1) over a complete network.
std::vector<Trial> synthesize_trials(const SyntheticTrialConfig& config);

}  // namespace crowdvote
