#include "crowdvote/degroot.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

#include "crowdvote/parallel.hpp"
#include "crowdvote/random.hpp"

namespace crowdvote {

namespace {

constexpr double kRowSumTolerance = 1e-9;

// Reachability over positive entries, following edges i -> j (forward) or
// j -> i (reverse).
std::vector<bool> reachable_from_zero(const WeightMatrix& w, bool reverse) {
    const std::size_t n = w.size();
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        for (std::size_t v = 0; v < n; ++v) {
            const double weight = reverse ? w.at(v, u) : w.at(u, v);
            if (weight > 0.0 && !seen[v]) {
                seen[v] = true;
                stack.push_back(v);
            }
        }
    }
    return seen;
}

}  // namespace

// ---------------------------------------------------------------------------
// WeightMatrix

WeightMatrix::WeightMatrix(Kind kind, std::size_t n, std::vector<double> data)
    : kind_(kind), n_(n), data_(std::move(data)) {
    validate();
}

WeightMatrix WeightMatrix::dense(std::size_t n, std::vector<double> row_major) {
    if (n == 0) throw std::invalid_argument("weight matrix must have at least one agent");
    if (row_major.size() != n * n) {
        throw std::invalid_argument("weight matrix data has wrong size");
    }
    return WeightMatrix(Kind::Dense, n, std::move(row_major));
}

WeightMatrix WeightMatrix::self_weight_complete(std::vector<double> self_weights) {
    const std::size_t n = self_weights.size();
    if (n == 0) throw std::invalid_argument("weight matrix must have at least one agent");
    return WeightMatrix(Kind::SelfWeightComplete, n, std::move(self_weights));
}

WeightMatrix WeightMatrix::uniform(std::size_t n) {
    return dense(n, std::vector<double>(n * n, 1.0 / static_cast<double>(n)));
}

WeightMatrix WeightMatrix::identity(std::size_t n) {
    std::vector<double> data(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) data[i * n + i] = 1.0;
    return dense(n, std::move(data));
}

void WeightMatrix::validate() const {
    for (double x : data_) {
        if (!std::isfinite(x) || x < 0.0) {
            throw std::invalid_argument("weights must be finite and non-negative");
        }
    }
    if (kind_ == Kind::SelfWeightComplete) {
        for (double s : data_) {
            if (s > 1.0) throw std::invalid_argument("self-weight exceeds 1");
        }
        if (n_ == 1 && data_[0] != 1.0) {
            throw std::invalid_argument("a single agent must place all weight on itself");
        }
        return;
    }
    for (std::size_t i = 0; i < n_; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n_; ++j) row += data_[i * n_ + j];
        if (std::abs(row - 1.0) > kRowSumTolerance) {
            std::ostringstream msg;
            msg << "row " << i << " of weight matrix sums to " << row << ", expected 1";
            throw std::invalid_argument(msg.str());
        }
    }
}

double WeightMatrix::at(std::size_t i, std::size_t j) const {
    if (kind_ == Kind::Dense) return data_[i * n_ + j];
    if (i == j) return data_[i];
    return (1.0 - data_[i]) / static_cast<double>(n_ - 1);
}

std::vector<double> WeightMatrix::apply(std::span<const double> b) const {
    if (b.size() != n_) throw std::invalid_argument("belief vector length mismatch");
    std::vector<double> out(n_, 0.0);
    if (kind_ == Kind::Dense) {
        for (std::size_t i = 0; i < n_; ++i) {
            const double* row = data_.data() + i * n_;
            double acc = 0.0;
            for (std::size_t j = 0; j < n_; ++j) acc += row[j] * b[j];
            out[i] = acc;
        }
        return out;
    }
    if (n_ == 1) return {b[0]};
    double total = 0.0;
    for (double x : b) total += x;
    const double others = static_cast<double>(n_ - 1);
    for (std::size_t i = 0; i < n_; ++i) {
        const double s = data_[i];
        out[i] = s * b[i] + (1.0 - s) * (total - b[i]) / others;
    }
    return out;
}

std::vector<double> WeightMatrix::apply_left(std::span<const double> pi) const {
    if (pi.size() != n_) throw std::invalid_argument("row vector length mismatch");
    std::vector<double> out(n_, 0.0);
    if (kind_ == Kind::Dense) {
        for (std::size_t i = 0; i < n_; ++i) {
            const double* row = data_.data() + i * n_;
            const double weight = pi[i];
            for (std::size_t j = 0; j < n_; ++j) out[j] += weight * row[j];
        }
        return out;
    }
    if (n_ == 1) return {pi[0]};
    // (pi W)_j = pi_j s_j + (sum_i pi_i (1 - s_i) - pi_j (1 - s_j)) / (N - 1)
    double spill = 0.0;
    for (std::size_t i = 0; i < n_; ++i) spill += pi[i] * (1.0 - data_[i]);
    const double others = static_cast<double>(n_ - 1);
    for (std::size_t j = 0; j < n_; ++j) {
        const double s = data_[j];
        out[j] = pi[j] * s + (spill - pi[j] * (1.0 - s)) / others;
    }
    return out;
}

bool WeightMatrix::is_irreducible() const {
    if (n_ == 1) return true;
    if (kind_ == Kind::SelfWeightComplete) {
        return std::all_of(data_.begin(), data_.end(), [](double s) { return s < 1.0; });
    }
    const auto fwd = reachable_from_zero(*this, false);
    const auto rev = reachable_from_zero(*this, true);
    return std::all_of(fwd.begin(), fwd.end(), [](bool b) { return b; }) &&
           std::all_of(rev.begin(), rev.end(), [](bool b) { return b; });
}

bool WeightMatrix::has_positive_diagonal() const {
    for (std::size_t i = 0; i < n_; ++i) {
        if (at(i, i) > 0.0) return true;
    }
    return false;
}

std::vector<double> WeightMatrix::to_dense() const {
    if (kind_ == Kind::Dense) return data_;
    std::vector<double> out(n_ * n_);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) out[i * n_ + j] = at(i, j);
    return out;
}

// ---------------------------------------------------------------------------
// Dynamics

DeGrootSystem::DeGrootSystem(EstimateVector b, WeightMatrix w, std::size_t r)
    : beliefs(std::move(b)), weights(std::move(w)), rounds(r) {
    if (beliefs.size() != weights.size()) {
        throw std::invalid_argument("belief vector and weight matrix differ in size");
    }
}

EstimateVector degroot_step(const WeightMatrix& weights, const EstimateVector& beliefs) {
    return EstimateVector(weights.apply(beliefs.values()));
}

EstimateVector degroot_step(const DeGrootSystem& sys) {
    return degroot_step(sys.weights, sys.beliefs);
}

EstimateVector degroot_run(const DeGrootSystem& sys) {
    EstimateVector b = sys.beliefs;
    for (std::size_t r = 0; r < sys.rounds; ++r) b = degroot_step(sys.weights, b);
    return b;
}

std::vector<double> stationary_distribution(const WeightMatrix& weights,
                                            PowerIterationOptions options) {
    if (!weights.is_irreducible() || !weights.has_positive_diagonal()) {
        throw std::domain_error("no unique consensus");
    }
    const std::size_t n = weights.size();
    std::vector<double> pi(n, 1.0 / static_cast<double>(n));
    double residual = 0.0;
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
        std::vector<double> next = weights.apply_left(pi);
        double total = 0.0;
        for (double x : next) total += x;
        residual = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            next[j] /= total;
            residual = std::max(residual, std::abs(next[j] - pi[j]));
        }
        pi = std::move(next);
        if (residual < options.tolerance) return pi;
    }
    std::ostringstream msg;
    msg << "power iteration did not converge after " << options.max_iterations
        << " iterations (residual " << residual << ")";
    throw std::runtime_error(msg.str());
}

double consensus_value(const DeGrootSystem& sys, PowerIterationOptions options) {
    const auto pi = stationary_distribution(sys.weights, options);
    double c = 0.0;
    for (std::size_t i = 0; i < pi.size(); ++i) c += pi[i] * sys.beliefs[i];
    return c;
}

double spread(const EstimateVector& beliefs) {
    const auto [lo, hi] = std::minmax_element(beliefs.begin(), beliefs.end());
    return *hi - *lo;
}

EstimateVector run_to_consensus(const WeightMatrix& weights, const EstimateVector& beliefs,
                                double spread_tolerance, std::size_t max_iterations,
                                std::size_t* iterations) {
    EstimateVector b = beliefs;
    std::size_t it = 0;
    while (spread(b) >= spread_tolerance) {
        if (it == max_iterations) {
            std::ostringstream msg;
            msg << "beliefs failed to reach consensus after " << max_iterations
                << " updates (spread " << spread(b) << ")";
            throw std::runtime_error(msg.str());
        }
        b = degroot_step(weights, b);
        ++it;
    }
    if (iterations) *iterations = it;
    return b;
}

// ---------------------------------------------------------------------------
// Predictors

VoteChangePrediction predict_vote_change(const DecisionContext& ctx) {
    const double t = ctx.threshold;
    const double m = ctx.pre_median;
    const double c = ctx.post_value;
    if (t == m || t == c) return VoteChangePrediction::Boundary;
    if ((c < t && t < m) || (m < t && t < c)) return VoteChangePrediction::Shrink;
    return VoteChangePrediction::Grow;
}

bool decoupling_case(const DecisionContext& ctx) {
    const double m = ctx.pre_median;
    const double mu = ctx.pre_mean;
    const double c = ctx.post_value;
    const double t = ctx.threshold;
    const double theta = ctx.truth;
    return (m < mu && mu < c && c < t && t < theta) || (theta < t && t < c && c < mu && mu < m);
}

MajorityChange realized_majority_change(const EstimateVector& pre, const EstimateVector& post,
                                        double threshold, double pre_median) {
    if (pre.size() != post.size()) throw std::invalid_argument("pre/post length mismatch");
    if (threshold == pre_median) {
        throw std::invalid_argument("threshold ties the median; no majority side");
    }
    const bool majority_above = pre_median > threshold;
    auto on_side = [&](const EstimateVector& v) {
        return std::count_if(v.begin(), v.end(),
                             [&](double x) { return (x > threshold) == majority_above; });
    };
    const auto before = on_side(pre);
    const auto after = on_side(post);
    if (after > before) return MajorityChange::Grew;
    if (after < before) return MajorityChange::Shrank;
    return MajorityChange::Unchanged;
}

bool prediction_matches(VoteChangePrediction prediction, MajorityChange outcome,
                        UnchangedPolicy policy) {
    switch (prediction) {
        case VoteChangePrediction::Grow:
            return outcome == MajorityChange::Grew ||
                   (outcome == MajorityChange::Unchanged &&
                    policy == UnchangedPolicy::CountsAsGrow);
        case VoteChangePrediction::Shrink:
            return outcome == MajorityChange::Shrank;
        case VoteChangePrediction::Boundary:
            return false;
    }
    return false;
}

const char* to_string(VoteChangePrediction p) {
    switch (p) {
        case VoteChangePrediction::Grow: return "grow";
        case VoteChangePrediction::Shrink: return "shrink";
        case VoteChangePrediction::Boundary: return "boundary";
    }
    return "?";
}

const char* to_string(MajorityChange c) {
    switch (c) {
        case MajorityChange::Grew: return "grew";
        case MajorityChange::Shrank: return "shrank";
        case MajorityChange::Unchanged: return "unchanged";
    }
    return "?";
}

const char* to_string(UnchangedPolicy p) {
    return p == UnchangedPolicy::Strict ? "strict" : "unchanged-as-grow";
}

UnchangedPolicy parse_unchanged_policy(const std::string& name) {
    if (name == "unchanged-as-grow" || name == "default") return UnchangedPolicy::CountsAsGrow;
    if (name == "strict") return UnchangedPolicy::Strict;
    throw std::invalid_argument("unknown unchanged policy: " + name);
}

// ---------------------------------------------------------------------------
// Short-term consistency experiment

BeliefDistribution parse_belief_distribution(const std::string& name) {
    if (name == "normal") return BeliefDistribution::Normal;
    if (name == "lognormal") return BeliefDistribution::LogNormal;
    throw std::invalid_argument("invalid distribution name: " + name);
}

const char* to_string(BeliefDistribution d) {
    return d == BeliefDistribution::Normal ? "normal" : "lognormal";
}

double distribution_quantile(BeliefDistribution d, double p) {
    const boost::math::normal_distribution<double> standard;
    const double z = boost::math::quantile(standard, p);
    return d == BeliefDistribution::Normal ? z : std::exp(z);
}

double distribution_mean_level(BeliefDistribution d) {
    if (d == BeliefDistribution::Normal) return 0.5;
    // mean of the standard log-normal is exp(1/2), i.e. z = 1/2
    const boost::math::normal_distribution<double> standard;
    return boost::math::cdf(standard, 0.5);
}

std::vector<double> quantile_grid(double resolution) {
    if (!(resolution > 0.0 && resolution < 1.0)) {
        throw std::invalid_argument("grid resolution must lie in (0, 1)");
    }
    const double steps = std::round(1.0 / resolution);
    if (std::abs(steps * resolution - 1.0) > 1e-9 || steps < 2.0) {
        throw std::invalid_argument("grid resolution must divide the unit interval");
    }
    const auto k_max = static_cast<std::size_t>(steps);
    std::vector<double> grid;
    grid.reserve(k_max - 1);
    for (std::size_t k = 1; k < k_max; ++k) {
        grid.push_back(static_cast<double>(k) / steps);
    }
    return grid;
}

ConsistencyConfig consistency_preset(const std::string& name) {
    ConsistencyConfig c;
    c.rounds = 10;
    c.distribution = BeliefDistribution::Normal;
    c.resolution = 0.05;
    if (name == "ec3-n100") {
        c.n = 100;
        c.runs = 1000;
    } else if (name == "ec3-n1000") {
        c.n = 1000;
        c.runs = 1000;
    } else if (name == "sec325-n1000" || name == "paper") {
        c.n = 1000;
        c.runs = 10'000;
    } else {
        throw std::invalid_argument("unknown preset: " + name);
    }
    return c;
}

double ThresholdConsistency::consistency() const {
    const std::size_t scored = matched + unmatched;
    return scored == 0 ? 1.0 : static_cast<double>(matched) / static_cast<double>(scored);
}

namespace {

struct RunOutcome {
    std::vector<VoteChangePrediction> prediction;
    std::vector<MajorityChange> outcome;
};

RunOutcome consistency_run(const ConsistencyConfig& config, const std::vector<double>& thresholds,
                           std::uint64_t run) {
    Rng rng(derive_seed(config.seed, run));
    std::normal_distribution<double> standard(0.0, 1.0);

    std::vector<double> initial(config.n);
    for (auto& b : initial) {
        b = standard(rng);
        if (config.distribution == BeliefDistribution::LogNormal) b = std::exp(b);
    }
    std::vector<double> self(config.n);
    for (auto& s : self) s = uniform01(rng);

    const DeGrootSystem sys(EstimateVector(std::move(initial)),
                            WeightMatrix::self_weight_complete(std::move(self)), config.rounds);
    const EstimateVector post = degroot_run(sys);

    DecisionContext ctx;
    ctx.pre_median = median(sys.beliefs);
    ctx.pre_mean = mean(sys.beliefs);
    ctx.post_value = mean(post);

    RunOutcome out;
    out.prediction.reserve(thresholds.size());
    out.outcome.reserve(thresholds.size());
    for (double t : thresholds) {
        ctx.threshold = t;
        const auto p = predict_vote_change(ctx);
        out.prediction.push_back(p);
        out.outcome.push_back(p == VoteChangePrediction::Boundary
                                  ? MajorityChange::Unchanged
                                  : realized_majority_change(sys.beliefs, post, t, ctx.pre_median));
    }
    return out;
}

}  // namespace

ConsistencyTable short_term_consistency(const ConsistencyConfig& config) {
    if (config.n < 2) throw std::invalid_argument("consistency experiment needs n >= 2");
    if (config.runs < 1) throw std::invalid_argument("consistency experiment needs runs >= 1");

    ConsistencyTable table;
    table.mean_level = distribution_mean_level(config.distribution);
    table.resolution = config.resolution;

    const auto levels = quantile_grid(config.resolution);
    std::vector<double> thresholds;
    thresholds.reserve(levels.size());
    for (double p : levels) thresholds.push_back(distribution_quantile(config.distribution, p));

    std::vector<RunOutcome> outcomes(config.runs);
    parallel_for(config.runs, config.jobs,
                 [&](std::size_t run) { outcomes[run] = consistency_run(config, thresholds, run); });

    table.rows.resize(levels.size());
    for (std::size_t k = 0; k < levels.size(); ++k) {
        auto& row = table.rows[k];
        row.level = levels[k];
        row.threshold = thresholds[k];
        row.runs = config.runs;
        for (const auto& run : outcomes) {
            const auto p = run.prediction[k];
            const auto o = run.outcome[k];
            if (p == VoteChangePrediction::Boundary) {
                ++row.boundary;
                continue;
            }
            if (o == MajorityChange::Unchanged) ++row.unchanged;
            if (prediction_matches(p, o, config.policy)) {
                ++row.matched;
            } else {
                ++row.unmatched;
            }
        }
    }
    return table;
}

}  // namespace crowdvote
