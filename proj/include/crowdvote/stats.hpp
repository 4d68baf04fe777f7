#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace crowdvote {

/// Ordered, finite, non-empty sequence of numeric estimates. Subject order is
/// preserved so that pre/post vectors stay index-aligned.
class EstimateVector {
public:
    EstimateVector(std::initializer_list<double> values);
    explicit EstimateVector(std::vector<double> values);

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    std::span<const double> values() const noexcept { return values_; }
    const std::vector<double>& vector() const noexcept { return values_; }

    auto begin() const noexcept { return values_.begin(); }
    auto end() const noexcept { return values_.end(); }

    friend bool operator==(const EstimateVector&, const EstimateVector&) = default;

private:
    std::vector<double> values_;
};

/// Squared-error decomposition of a crowd estimate:
/// group_error = avg_individual_error - diversity.
struct Decomposition {
    double group_error = 0.0;
    double avg_individual_error = 0.0;
    double diversity = 0.0;
};

double mean(const EstimateVector& values);
double median(const EstimateVector& values);

/// Linearly interpolated order statistic at rank (n-1)*p.
double quantile(const EstimateVector& values, double p);

/// Fraction of values strictly greater than the threshold.
double vote_share_above(const EstimateVector& values, double threshold);

/// Fraction of values on the same side of `threshold` as `truth`, using the
/// strict "above" rule for both. Throws when truth == threshold.
double binary_accuracy(const EstimateVector& values, double threshold, double truth);

Decomposition diversity_decomposition(const EstimateVector& values, double truth);

}  // namespace crowdvote
