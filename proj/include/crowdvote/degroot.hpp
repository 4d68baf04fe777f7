#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crowdvote/stats.hpp"

namespace crowdvote {

/// Row-stochastic influence matrix W (W[i][j] = weight agent i places on j).
///
/// Two storage forms share one interface: a dense N x N matrix, and a
/// complete network where agent i keeps self-weight s_i and splits 1 - s_i
/// equally among the other N - 1 agents. The second form applies in O(N).
class WeightMatrix {
public:
    static WeightMatrix dense(std::size_t n, std::vector<double> row_major);
    static WeightMatrix self_weight_complete(std::vector<double> self_weights);
    static WeightMatrix uniform(std::size_t n);
    static WeightMatrix identity(std::size_t n);

    std::size_t size() const noexcept { return n_; }
    double at(std::size_t i, std::size_t j) const;
    bool is_dense() const noexcept { return kind_ == Kind::Dense; }

    /// W * b
    std::vector<double> apply(std::span<const double> b) const;
    /// pi * W (row vector on the left)
    std::vector<double> apply_left(std::span<const double> pi) const;

    /// Every agent reaches every other through positive weights.
    bool is_irreducible() const;
    bool has_positive_diagonal() const;

    std::vector<double> to_dense() const;

private:
    enum class Kind { Dense, SelfWeightComplete };
    WeightMatrix(Kind kind, std::size_t n, std::vector<double> data);
    void validate() const;

    Kind kind_;
    std::size_t n_;
    std::vector<double> data_;  // row-major N*N, or N self-weights
};

struct DeGrootSystem {
    DeGrootSystem(EstimateVector beliefs, WeightMatrix weights, std::size_t rounds = 0);

    EstimateVector beliefs;
    WeightMatrix weights;
    std::size_t rounds;
};

/// B' = W B
EstimateVector degroot_step(const DeGrootSystem& sys);
EstimateVector degroot_step(const WeightMatrix& weights, const EstimateVector& beliefs);

/// W^R B_0
EstimateVector degroot_run(const DeGrootSystem& sys);

struct PowerIterationOptions {
    double tolerance = 1e-12;
    std::size_t max_iterations = 1'000'000;
};

/// Stationary row vector pi = pi W, sum(pi) = 1. Throws std::domain_error
/// ("no unique consensus") unless W is irreducible with a positive diagonal
/// entry, and std::runtime_error when iteration fails to converge.
std::vector<double> stationary_distribution(const WeightMatrix& weights,
                                            PowerIterationOptions options = {});

/// Asymptotic consensus belief C = pi . B_0.
double consensus_value(const DeGrootSystem& sys, PowerIterationOptions options = {});

/// Iterates until max - min belief < spread_tolerance. Returns the beliefs and
/// writes the number of updates taken to `iterations` when given.
EstimateVector run_to_consensus(const WeightMatrix& weights, const EstimateVector& beliefs,
                                double spread_tolerance = 1e-8,
                                std::size_t max_iterations = 10'000'000,
                                std::size_t* iterations = nullptr);

double spread(const EstimateVector& beliefs);

struct DecisionContext {
    double threshold = 0.0;   // T
    double truth = 0.0;       // theta
    double pre_median = 0.0;  // M
    double pre_mean = 0.0;    // mu
    double post_value = 0.0;  // C: consensus, or post-exchange mean in the short term
};

enum class VoteChangePrediction { Grow, Shrink, Boundary };
enum class MajorityChange { Grew, Shrank, Unchanged };

/// Shrink iff the threshold falls strictly between M and C; Boundary on a tie
/// with either; Grow otherwise.
VoteChangePrediction predict_vote_change(const DecisionContext& ctx);

/// M < mu < C < T < theta, or the mirrored chain.
bool decoupling_case(const DecisionContext& ctx);

/// Realised change in the share of the initial majority side. The side is
/// the one holding the pre-exchange median, so an exact 50/50 split still has
/// a well-defined reference side. Requires threshold != pre_median.
MajorityChange realized_majority_change(const EstimateVector& pre, const EstimateVector& post,
                                        double threshold, double pre_median);

enum class UnchangedPolicy {
    CountsAsGrow,  // an unchanged majority is consistent with a Grow prediction
    Strict,        // an unchanged majority matches neither prediction
};

bool prediction_matches(VoteChangePrediction prediction, MajorityChange outcome,
                        UnchangedPolicy policy);

const char* to_string(VoteChangePrediction p);
const char* to_string(MajorityChange c);
const char* to_string(UnchangedPolicy p);
UnchangedPolicy parse_unchanged_policy(const std::string& name);

// ---------------------------------------------------------------------------
// Short-term consistency experiment

enum class BeliefDistribution { Normal, LogNormal };

BeliefDistribution parse_belief_distribution(const std::string& name);
const char* to_string(BeliefDistribution d);

/// Quantile function of the standard form of the distribution.
double distribution_quantile(BeliefDistribution d, double p);
/// Level p at which the distribution quantile equals its mean.
double distribution_mean_level(BeliefDistribution d);

/// Grid resolution, 2*resolution, ..., 1 - resolution.
std::vector<double> quantile_grid(double resolution);

struct ConsistencyConfig {
    std::size_t n = 1000;
    std::size_t rounds = 10;
    std::size_t runs = 10'000;
    BeliefDistribution distribution = BeliefDistribution::Normal;
    double resolution = 0.05;
    UnchangedPolicy policy = UnchangedPolicy::CountsAsGrow;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
};

/// Named configurations: ec3-n100, ec3-n1000, sec325-n1000 (alias "paper").
ConsistencyConfig consistency_preset(const std::string& name);

struct ThresholdConsistency {
    double level = 0.0;      // threshold as a quantile level of the initial distribution
    double threshold = 0.0;  // the threshold in belief units
    std::size_t runs = 0;
    std::size_t matched = 0;
    std::size_t unmatched = 0;
    std::size_t boundary = 0;
    std::size_t unchanged = 0;  // non-boundary runs whose majority share did not move

    /// matched / (matched + unmatched); 1 when every run was Boundary.
    double consistency() const;
};

struct ConsistencyTable {
    double mean_level = 0.5;
    double resolution = 0.05;
    std::vector<ThresholdConsistency> rows;
};

ConsistencyTable short_term_consistency(const ConsistencyConfig& config);

}  // namespace crowdvote
