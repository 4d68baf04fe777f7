#include "crowdvote/calibrated.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "crowdvote/csv.hpp"
#include "crowdvote/format.hpp"
#include "crowdvote/parallel.hpp"

namespace crowdvote {

namespace {

void validate_knots(const std::vector<RevisionCurve::Knot>& knots) {
    if (knots.size() < 2) throw std::invalid_argument("revision curve needs at least two knots");
    for (std::size_t i = 0; i < knots.size(); ++i) {
        const auto& k = knots[i];
        if (!(k.disagreement >= 0.0 && k.disagreement <= 1.0)) {
            throw std::invalid_argument("knot disagreement must lie in [0, 1]");
        }
        if (!(k.probability >= 0.0 && k.probability <= 1.0)) {
            throw std::invalid_argument("knot probability must lie in [0, 1]");
        }
        if (i > 0 && !(k.disagreement > knots[i - 1].disagreement)) {
            throw std::invalid_argument("knot disagreements must be strictly increasing");
        }
    }
}

double interpolate(const std::vector<RevisionCurve::Knot>& knots, double x) {
    if (x <= knots.front().disagreement) return knots.front().probability;
    if (x >= knots.back().disagreement) return knots.back().probability;
    const auto hi = std::upper_bound(knots.begin(), knots.end(), x,
                                     [](double v, const auto& k) { return v < k.disagreement; });
    const auto lo = hi - 1;
    const double t = (x - lo->disagreement) / (hi->disagreement - lo->disagreement);
    return lo->probability + t * (hi->probability - lo->probability);
}

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

}  // namespace

RevisionCurve::RevisionCurve(std::vector<Knot> knots, std::optional<AccuracyModifier> modifier)
    : knots_(std::move(knots)), modifier_(modifier) {
    validate_knots(knots_);
    if (modifier_ && (!(modifier_->if_accurate >= 0.0) || !(modifier_->if_inaccurate >= 0.0))) {
        throw std::invalid_argument("accuracy multipliers must be non-negative");
    }
}

RevisionCurve RevisionCurve::conditioned(std::vector<Knot> accurate, std::vector<Knot> inaccurate) {
    validate_knots(accurate);
    validate_knots(inaccurate);
    if (accurate.size() != inaccurate.size()) {
        throw std::invalid_argument("conditioned tables must share their disagreement knots");
    }
    std::vector<Knot> pooled;
    pooled.reserve(accurate.size());
    for (std::size_t i = 0; i < accurate.size(); ++i) {
        if (accurate[i].disagreement != inaccurate[i].disagreement) {
            throw std::invalid_argument("conditioned tables must share their disagreement knots");
        }
        pooled.push_back({accurate[i].disagreement,
                          0.5 * (accurate[i].probability + inaccurate[i].probability)});
    }
    RevisionCurve curve(std::move(pooled));
    curve.conditioned_ = ConditionedTables{std::move(accurate), std::move(inaccurate)};
    return curve;
}

RevisionCurve::AccuracyModifier RevisionCurve::default_modifier() {
    return {13.0 / 17.0, 21.0 / 17.0};
}

RevisionCurve RevisionCurve::default_curve() {
    // Keep in sync with data/default_revision_curve.csv.
    return RevisionCurve(
        {
            {0.0, 0.0},
            {0.1, 0.03},
            {0.2, 0.04},
            {0.3, 0.04},
            {0.4, 0.05},
            {0.5, 0.07},
            {0.6, 0.14},
            {0.7, 0.22},
            {0.8, 0.24},
            {0.9, 0.58},
        },
        default_modifier());
}

RevisionCurve RevisionCurve::parse(std::istream& in) {
    std::vector<Knot> plain;
    std::vector<Knot> accurate;
    std::vector<Knot> inaccurate;
    std::optional<std::size_t> columns;
    std::string line;
    std::size_t line_no = 0;
    bool seen_data = false;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string trimmed = csv::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        const auto fields = csv::split_line(trimmed);
        const auto x = parse_double(fields[0]);
        if (!x) {
            if (!seen_data) {
                seen_data = true;  // header row
                continue;
            }
            throw std::invalid_argument("curve line " + std::to_string(line_no) +
                                        ": non-numeric disagreement");
        }
        seen_data = true;
        if (fields.size() != 2 && fields.size() != 3) {
            throw std::invalid_argument("curve line " + std::to_string(line_no) +
                                        ": expected 2 or 3 columns");
        }
        if (columns && *columns != fields.size()) {
            throw std::invalid_argument("curve line " + std::to_string(line_no) +
                                        ": inconsistent column count");
        }
        columns = fields.size();
        const auto p = parse_double(fields[1]);
        if (!p) {
            throw std::invalid_argument("curve line " + std::to_string(line_no) +
                                        ": non-numeric probability");
        }
        if (fields.size() == 2) {
            plain.push_back({*x, *p});
            continue;
        }
        const std::string flag = csv::trim(fields[2]);
        if (flag == "1" || flag == "true" || flag == "accurate") {
            accurate.push_back({*x, *p});
        } else if (flag == "0" || flag == "false" || flag == "inaccurate") {
            inaccurate.push_back({*x, *p});
        } else {
            throw std::invalid_argument("curve line " + std::to_string(line_no) +
                                        ": accuracy flag must be 0 or 1");
        }
    }
    if (columns == std::size_t{3}) return conditioned(std::move(accurate), std::move(inaccurate));
    return RevisionCurve(std::move(plain));
}

RevisionCurve RevisionCurve::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open curve file: " + path);
    return parse(in);
}

void RevisionCurve::write(std::ostream& out) const {
    if (conditioned_) {
        out << "disagreement,probability,accuracy_flag\n";
        for (const auto& k : conditioned_->accurate)
            out << format_double(k.disagreement) << ',' << format_double(k.probability) << ",1\n";
        for (const auto& k : conditioned_->inaccurate)
            out << format_double(k.disagreement) << ',' << format_double(k.probability) << ",0\n";
        return;
    }
    out << "disagreement,probability\n";
    for (const auto& k : knots_)
        out << format_double(k.disagreement) << ',' << format_double(k.probability) << '\n';
}

double RevisionCurve::probability(double disagreement, std::optional<bool> is_accurate) const {
    if (!(disagreement >= 0.0 && disagreement <= 1.0)) {
        throw std::invalid_argument("disagreement must lie in [0, 1]");
    }
    if (is_accurate && conditioned_) {
        return interpolate(*is_accurate ? conditioned_->accurate : conditioned_->inaccurate,
                           disagreement);
    }
    const double base = interpolate(knots_, disagreement);
    if (is_accurate && modifier_) {
        return clamp01(base * (*is_accurate ? modifier_->if_accurate : modifier_->if_inaccurate));
    }
    return base;
}

RevisionCurve RevisionCurve::without_accuracy_adjustment() const {
    return RevisionCurve(knots_);
}

RevisionCurve RevisionCurve::with_modifier(AccuracyModifier modifier) const {
    return RevisionCurve(knots_, modifier);
}

double revision_prob(const RevisionCurve& curve, double disagreement,
                     std::optional<bool> is_accurate) {
    return curve.probability(disagreement, is_accurate);
}

const char* to_string(CurveVariant v) {
    return v == CurveVariant::Plain ? "plain" : "accuracy-modified";
}

GroupOutcome simulate_group(const CalibratedGroupConfig& config, Rng& rng, CurveVariant variant) {
    if (config.n < 2) throw std::invalid_argument("calibrated group needs n >= 2");
    if (config.rounds < 1) throw std::invalid_argument("calibrated group needs rounds >= 1");
    if (!(config.initial_accurate_share >= 0.0 && config.initial_accurate_share <= 1.0)) {
        throw std::invalid_argument("initial accurate share must lie in [0, 1]");
    }

    const std::size_t n = config.n;
    const auto k = static_cast<std::size_t>(
        std::llround(config.initial_accurate_share * static_cast<double>(n)));
    std::vector<bool> accurate(n, false);
    std::fill(accurate.begin(), accurate.begin() + static_cast<std::ptrdiff_t>(k), true);

    const double others = static_cast<double>(n - 1);
    std::size_t n_accurate = k;
    GroupOutcome out;
    out.initial_accuracy = static_cast<double>(k) / static_cast<double>(n);

    for (std::size_t round = 0; round < config.rounds; ++round) {
        // disagreement seen by an accurate / inaccurate agent this round
        const double seen_by_accurate = static_cast<double>(n - n_accurate) / others;
        const double seen_by_inaccurate = static_cast<double>(n_accurate) / others;
        std::size_t next_accurate = n_accurate;
        std::vector<bool> next = accurate;
        for (std::size_t i = 0; i < n; ++i) {
            const bool is_acc = accurate[i];
            const double x = is_acc ? seen_by_accurate : seen_by_inaccurate;
            const double p = variant == CurveVariant::AccuracyModified
                                 ? config.curve.probability(x, is_acc)
                                 : config.curve.probability(x);
            if (bernoulli(rng, p)) {
                next[i] = !is_acc;
                next_accurate = is_acc ? next_accurate - 1 : next_accurate + 1;
            }
        }
        accurate = std::move(next);
        n_accurate = next_accurate;
    }
    out.final_accuracy = static_cast<double>(n_accurate) / static_cast<double>(n);
    return out;
}

std::vector<double> default_accuracy_grid() {
    std::vector<double> grid;
    for (int k = 1; k <= 19; ++k) grid.push_back(k / 20.0);
    return grid;
}

std::vector<ResponsePoint> accuracy_response_curve(const ResponseSweepConfig& config) {
    const std::vector<double> grid = config.grid.empty() ? default_accuracy_grid() : config.grid;
    for (double g : grid) {
        if (!(g >= 0.0 && g <= 1.0)) throw std::invalid_argument("grid must lie within [0, 1]");
    }
    if (config.runs < 1) throw std::invalid_argument("sweep needs runs >= 1");

    struct Cell {
        std::size_t point;
        CurveVariant variant;
    };
    std::vector<Cell> cells;
    for (std::size_t g = 0; g < grid.size(); ++g)
        for (auto v : config.variants) cells.push_back({g, v});

    std::vector<ResponsePoint> out(cells.size());
    parallel_for(cells.size(), config.jobs, [&](std::size_t c) {
        CalibratedGroupConfig group;
        group.n = config.n;
        group.rounds = config.rounds;
        group.initial_accurate_share = grid[cells[c].point];
        group.curve = config.curve;

        double sum = 0.0;
        double sum_sq = 0.0;
        double initial = 0.0;
        for (std::size_t r = 0; r < config.runs; ++r) {
            Rng rng(derive_seed(config.seed, r));
            const auto result = simulate_group(group, rng, cells[c].variant);
            const double change = result.final_accuracy - result.initial_accuracy;
            initial = result.initial_accuracy;
            sum += change;
            sum_sq += change * change;
        }
        const double runs = static_cast<double>(config.runs);
        const double m = sum / runs;
        const double var = config.runs > 1 ? std::max(0.0, (sum_sq - runs * m * m) / (runs - 1.0))
                                           : 0.0;
        out[c] = ResponsePoint{initial, m, std::sqrt(var / runs), config.runs, cells[c].variant};
    });
    return out;
}

}  // namespace crowdvote
