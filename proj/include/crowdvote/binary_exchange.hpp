#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "crowdvote/random.hpp"

namespace crowdvote {

using Belief = std::uint8_t;  // 0 or 1

struct FlipRates {
    double f_min = 0.0;  // flip probability for agents outside the weighted majority
    double f_maj = 0.0;  // flip probability for agents holding the weighted majority
};

/// Agents holding binary beliefs, each carrying an influence weight W_i.
/// Weights are non-negative and sum to one.
class BinaryPopulation {
public:
    BinaryPopulation(std::vector<Belief> beliefs, std::vector<double> weights, FlipRates rates,
                     std::optional<Belief> truth = std::nullopt);

    /// Equal influence, W_i = 1/N.
    static BinaryPopulation with_uniform_weights(std::vector<Belief> beliefs, FlipRates rates,
                                                 std::optional<Belief> truth = std::nullopt);

    /// Beliefs drawn i.i.d. Bernoulli(p). An empty `weights` means uniform.
    static BinaryPopulation sample(std::size_t n, double p, std::vector<double> weights,
                                   FlipRates rates, Rng& rng);

    std::size_t size() const noexcept { return beliefs_.size(); }
    const std::vector<Belief>& beliefs() const noexcept { return beliefs_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    const FlipRates& rates() const noexcept { return rates_; }
    const std::optional<Belief>& truth() const noexcept { return truth_; }

    BinaryPopulation with_beliefs(std::vector<Belief> beliefs) const;

private:
    std::vector<Belief> beliefs_;
    std::vector<double> weights_;
    FlipRates rates_;
    std::optional<Belief> truth_;
};

struct BinaryTrajectory {
    std::vector<double> share_history;           // unweighted share holding 1, per step
    std::vector<double> weighted_share_history;  // S per step
    std::vector<Belief> final_beliefs;
};

/// Normalised uniform[0,1) draws; a convenience for heterogeneous-influence runs.
std::vector<double> random_weights(std::size_t n, Rng& rng);

/// S = sum_i W_i * B_i.
double weighted_vote(const BinaryPopulation& pop);

/// 1 iff S > 0.5.
Belief majority_opinion(const BinaryPopulation& pop);

/// Unweighted fraction of agents holding belief 1.
double share_of_ones(const BinaryPopulation& pop);

/// Fraction holding the population's truth. Throws if no truth is set.
double accuracy(const BinaryPopulation& pop);

/// One synchronous update: the majority is evaluated on the pre-step state and
/// every agent flips independently.
BinaryPopulation step(const BinaryPopulation& pop, Rng& rng);

BinaryTrajectory simulate(const BinaryPopulation& pop, std::size_t steps, Rng& rng);

/// Large-population equilibrium share of the majority opinion, f_min / (f_min + f_maj).
double equilibrium_share(double f_min, double f_maj);

/// pi / (1 - pi) > r.
bool weighted_majority_holds(double pi, double r);

/// Unweighted majority view of a population: which opinion holds a strict
/// head-count majority, its share Pi, and R = mean minority weight / mean
/// majority weight.
struct InfluenceBalance {
    Belief majority = 1;
    double pi = 0.0;
    double ratio = 0.0;
};

/// Throws if the head count is tied or the majority's mean weight is zero.
InfluenceBalance influence_balance(const BinaryPopulation& pop);

}  // namespace crowdvote
