#include "crowdvote/binary_exchange.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace crowdvote {

namespace {

constexpr double kWeightSumTolerance = 1e-9;

void check_probability(double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
    }
}

}  // namespace

BinaryPopulation::BinaryPopulation(std::vector<Belief> beliefs, std::vector<double> weights,
                                   FlipRates rates, std::optional<Belief> truth)
    : beliefs_(std::move(beliefs)), weights_(std::move(weights)), rates_(rates), truth_(truth) {
    if (beliefs_.empty()) {
        throw std::invalid_argument("population must contain at least one agent");
    }
    if (beliefs_.size() != weights_.size()) {
        throw std::invalid_argument("beliefs and weights differ in length");
    }
    for (Belief b : beliefs_) {
        if (b > 1) throw std::invalid_argument("beliefs must be 0 or 1");
    }
    double total = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw std::invalid_argument("weights must be finite and non-negative");
        }
        total += w;
    }
    if (std::abs(total - 1.0) > kWeightSumTolerance) {
        throw std::invalid_argument("weights must sum to 1 (got " + std::to_string(total) + ")");
    }
    check_probability(rates_.f_min, "f_min");
    check_probability(rates_.f_maj, "f_maj");
    if (truth_ && *truth_ > 1) throw std::invalid_argument("truth must be 0 or 1");
}

BinaryPopulation BinaryPopulation::with_uniform_weights(std::vector<Belief> beliefs,
                                                        FlipRates rates,
                                                        std::optional<Belief> truth) {
    const std::size_t n = beliefs.size();
    std::vector<double> weights(n, n == 0 ? 0.0 : 1.0 / static_cast<double>(n));
    return BinaryPopulation(std::move(beliefs), std::move(weights), rates, truth);
}

BinaryPopulation BinaryPopulation::sample(std::size_t n, double p, std::vector<double> weights,
                                          FlipRates rates, Rng& rng) {
    check_probability(p, "initial share");
    std::vector<Belief> beliefs(n);
    for (auto& b : beliefs) b = bernoulli(rng, p) ? 1 : 0;
    if (weights.empty()) return with_uniform_weights(std::move(beliefs), rates);
    return BinaryPopulation(std::move(beliefs), std::move(weights), rates);
}

BinaryPopulation BinaryPopulation::with_beliefs(std::vector<Belief> beliefs) const {
    return BinaryPopulation(std::move(beliefs), weights_, rates_, truth_);
}

std::vector<double> random_weights(std::size_t n, Rng& rng) {
    std::vector<double> w(n);
    double total = 0.0;
    for (auto& x : w) {
        x = uniform01(rng);
        total += x;
    }
    if (total <= 0.0) return std::vector<double>(n, 1.0 / static_cast<double>(n));
    for (auto& x : w) x /= total;
    return w;
}

double weighted_vote(const BinaryPopulation& pop) {
    const auto& b = pop.beliefs();
    const auto& w = pop.weights();
    // Equal weights: report the head-count share itself so S = 0.5 ties stay exact.
    if (std::all_of(w.begin(), w.end(), [&](double x) { return x == w.front(); })) {
        return share_of_ones(pop);
    }
    double s = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (b[i]) s += w[i];
    }
    return s;
}

Belief majority_opinion(const BinaryPopulation& pop) {
    return weighted_vote(pop) > 0.5 ? 1 : 0;
}

double share_of_ones(const BinaryPopulation& pop) {
    const auto& b = pop.beliefs();
    const auto ones = std::accumulate(b.begin(), b.end(), std::size_t{0});
    return static_cast<double>(ones) / static_cast<double>(b.size());
}

double accuracy(const BinaryPopulation& pop) {
    if (!pop.truth()) throw std::logic_error("population has no truth value");
    const double ones = share_of_ones(pop);
    return *pop.truth() == 1 ? ones : 1.0 - ones;
}

BinaryPopulation step(const BinaryPopulation& pop, Rng& rng) {
    const Belief majority = majority_opinion(pop);
    const FlipRates& rates = pop.rates();
    std::vector<Belief> next = pop.beliefs();
    for (auto& b : next) {
        const double p = (b == majority) ? rates.f_maj : rates.f_min;
        if (bernoulli(rng, p)) b = 1 - b;
    }
    return pop.with_beliefs(std::move(next));
}

BinaryTrajectory simulate(const BinaryPopulation& pop, std::size_t steps, Rng& rng) {
    if (steps == 0) throw std::invalid_argument("steps must be at least 1");
    BinaryTrajectory traj;
    traj.share_history.reserve(steps + 1);
    traj.weighted_share_history.reserve(steps + 1);

    BinaryPopulation current = pop;
    traj.share_history.push_back(share_of_ones(current));
    traj.weighted_share_history.push_back(weighted_vote(current));
    for (std::size_t t = 0; t < steps; ++t) {
        current = step(current, rng);
        traj.share_history.push_back(share_of_ones(current));
        traj.weighted_share_history.push_back(weighted_vote(current));
    }
    traj.final_beliefs = current.beliefs();
    return traj;
}

double equilibrium_share(double f_min, double f_maj) {
    check_probability(f_min, "f_min");
    check_probability(f_maj, "f_maj");
    if (f_min + f_maj <= 0.0) throw std::invalid_argument("no dynamics");
    if (f_maj == 0.0) return 1.0;
    return f_min / (f_min + f_maj);
}

bool weighted_majority_holds(double pi, double r) {
    if (!(pi > 0.0 && pi < 1.0)) {
        throw std::invalid_argument("majority share must lie strictly inside (0, 1)");
    }
    if (!(r >= 0.0)) throw std::invalid_argument("weight ratio must be non-negative");
    return pi / (1.0 - pi) > r;
}

InfluenceBalance influence_balance(const BinaryPopulation& pop) {
    const auto& b = pop.beliefs();
    const auto& w = pop.weights();
    const std::size_t n = b.size();
    const auto ones = std::accumulate(b.begin(), b.end(), std::size_t{0});
    if (2 * ones == n) throw std::invalid_argument("no strict head-count majority");

    InfluenceBalance out;
    out.majority = 2 * ones > n ? 1 : 0;
    const std::size_t n_maj = out.majority ? ones : n - ones;
    const std::size_t n_min = n - n_maj;

    double w_maj = 0.0;
    double w_min = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        (b[i] == out.majority ? w_maj : w_min) += w[i];
    }
    if (w_maj <= 0.0) throw std::invalid_argument("majority carries zero weight");

    out.pi = static_cast<double>(n_maj) / static_cast<double>(n);
    const double mean_maj = w_maj / static_cast<double>(n_maj);
    const double mean_min = n_min == 0 ? 0.0 : w_min / static_cast<double>(n_min);
    out.ratio = mean_min / mean_maj;
    return out;
}

}  // namespace crowdvote
