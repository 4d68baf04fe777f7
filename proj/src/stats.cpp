#include "crowdvote/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace crowdvote {

EstimateVector::EstimateVector(std::initializer_list<double> values)
    : EstimateVector(std::vector<double>(values)) {}

EstimateVector::EstimateVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) {
        throw std::invalid_argument("empty estimate vector");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw std::invalid_argument("non-finite estimate at index " + std::to_string(i));
        }
    }
}

double mean(const EstimateVector& values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

double median(const EstimateVector& values) {
    return quantile(values, 0.5);
}

double quantile(const EstimateVector& values, double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("quantile level must lie in [0, 1]");
    }
    std::vector<double> sorted = values.vector();
    std::sort(sorted.begin(), sorted.end());

    const double h = static_cast<double>(sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    if (frac == 0.0) return sorted[lo];
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double vote_share_above(const EstimateVector& values, double threshold) {
    const auto above = std::count_if(values.begin(), values.end(),
                                     [threshold](double v) { return v > threshold; });
    return static_cast<double>(above) / static_cast<double>(values.size());
}

double binary_accuracy(const EstimateVector& values, double threshold, double truth) {
    if (truth == threshold) {
        throw std::invalid_argument("undefined correct side");
    }
    const bool truth_above = truth > threshold;
    const auto correct = std::count_if(values.begin(), values.end(), [&](double v) {
        return (v > threshold) == truth_above;
    });
    return static_cast<double>(correct) / static_cast<double>(values.size());
}

Decomposition diversity_decomposition(const EstimateVector& values, double truth) {
    if (!std::isfinite(truth)) {
        throw std::invalid_argument("truth must be finite");
    }
    const double centre = mean(values);
    const double n = static_cast<double>(values.size());

    Decomposition d;
    d.group_error = (centre - truth) * (centre - truth);
    for (double v : values) {
        d.avg_individual_error += (v - truth) * (v - truth);
        d.diversity += (v - centre) * (v - centre);
    }
    d.avg_individual_error /= n;
    d.diversity /= n;
    return d;
}

}  // namespace crowdvote
