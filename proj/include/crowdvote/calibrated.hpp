#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "crowdvote/random.hpp"

namespace crowdvote {

/// Probability that an individual revises a binary vote as a function of the
/// fraction of peers who disagree with it. Piecewise linear between knots,
/// constant beyond the outermost knots.
class RevisionCurve {
public:
    struct Knot {
        double disagreement;
        double probability;
    };

    /// Multipliers on the flip probability for accurate and inaccurate agents;
    /// the product is clamped to [0, 1].
    struct AccuracyModifier {
        double if_accurate = 1.0;
        double if_inaccurate = 1.0;
    };

    explicit RevisionCurve(std::vector<Knot> knots,
                           std::optional<AccuracyModifier> modifier = std::nullopt);

    /// Separate tables for accurate and inaccurate agents over the same
    /// disagreement knots. The unconditioned curve is their pointwise mean.
    static RevisionCurve conditioned(std::vector<Knot> accurate, std::vector<Knot> inaccurate);

    /// Curve digitised from the pilot conformity experiment, with the
    /// accuracy modifier that reproduces the 13% / 21% revision split.
    static RevisionCurve default_curve();

    /// Delimited table: disagreement,probability[,accuracy_flag]. Lines
    /// starting with '#' and a leading non-numeric header row are skipped.
    static RevisionCurve parse(std::istream& in);
    static RevisionCurve load(const std::string& path);

    /// Writes the table form accepted by parse().
    void write(std::ostream& out) const;

    /// `is_accurate` selects the accuracy-conditioned probability when the
    /// curve carries a modifier or conditioned tables; nullopt gives the
    /// unconditioned curve.
    double probability(double disagreement, std::optional<bool> is_accurate = std::nullopt) const;

    const std::vector<Knot>& knots() const noexcept { return knots_; }
    bool has_accuracy_adjustment() const noexcept { return modifier_ || conditioned_; }
    RevisionCurve without_accuracy_adjustment() const;
    RevisionCurve with_modifier(AccuracyModifier modifier) const;

    /// 13/17 for accurate agents and 21/17 for inaccurate ones: keeps the mean
    /// multiplier at one while matching the observed 13% vs 21% revision rates.
    static AccuracyModifier default_modifier();

private:
    struct ConditionedTables {
        std::vector<Knot> accurate;
        std::vector<Knot> inaccurate;
    };

    std::vector<Knot> knots_;
    std::optional<AccuracyModifier> modifier_;
    std::optional<ConditionedTables> conditioned_;
};

double revision_prob(const RevisionCurve& curve, double disagreement,
                     std::optional<bool> is_accurate = std::nullopt);

enum class CurveVariant {
    Plain,             // unconditioned curve
    AccuracyModified,  // flip probability depends on whether the agent is accurate
};

const char* to_string(CurveVariant v);

struct CalibratedGroupConfig {
    std::size_t n = 20;
    std::size_t rounds = 2;
    double initial_accurate_share = 0.5;
    RevisionCurve curve = RevisionCurve::default_curve();
    std::size_t runs = 1;
    std::uint64_t seed = 0;
};

struct GroupOutcome {
    double initial_accuracy = 0.0;
    double final_accuracy = 0.0;
};

/// round(initial_accurate_share * n) agents start accurate. In each round the
/// agents observe the other n - 1 votes and flip synchronously.
GroupOutcome simulate_group(const CalibratedGroupConfig& config, Rng& rng,
                            CurveVariant variant = CurveVariant::Plain);

struct ResponseSweepConfig {
    std::vector<double> grid;  // initial accurate shares; default 0.05..0.95
    std::size_t n = 20;
    std::size_t rounds = 2;
    std::size_t runs = 2000;
    RevisionCurve curve = RevisionCurve::default_curve();
    std::vector<CurveVariant> variants{CurveVariant::Plain, CurveVariant::AccuracyModified};
    std::uint64_t seed = 0;
    unsigned jobs = 1;
};

struct ResponsePoint {
    double initial_accuracy = 0.0;
    double mean_change = 0.0;
    double stderr_change = 0.0;
    std::size_t runs = 0;
    CurveVariant variant = CurveVariant::Plain;
};

std::vector<double> default_accuracy_grid();

/// Monte Carlo mean of final - initial accuracy per grid point and variant.
/// Run r uses the same random stream at every grid point and variant.
std::vector<ResponsePoint> accuracy_response_curve(const ResponseSweepConfig& config);

}  // namespace crowdvote
