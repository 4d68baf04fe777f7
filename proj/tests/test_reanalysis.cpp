#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "crowdvote/random.hpp"
#include "crowdvote/reanalysis.hpp"

using namespace crowdvote;

namespace {

constexpr const char* kHeader = "dataset,trial_id,subject_id,question_id,truth,pre_estimate,post_estimate\n";

TrialParseResult parse(const std::string& text) {
    std::istringstream in(text);
    return parse_trials(in);
}

SyntheticTrialConfig synthetic(std::size_t trials, std::uint64_t seed, std::size_t rounds = 0) {
    SyntheticTrialConfig cfg;
    cfg.trials = trials;
    cfg.seed = seed;
    cfg.rounds = rounds;
    return cfg;
}

}  // namespace

TEST_CASE("trial validation") {
    CHECK_THROWS_AS(Trial("d", "t", "q", 1.0, EstimateVector{1, 2}, EstimateVector{1}),
                    std::invalid_argument);
    CHECK_THROWS_AS(Trial("d", "t", "q", 1.0, EstimateVector{1}, EstimateVector{1}),
                    std::invalid_argument);
    CHECK_THROWS_AS(Trial("d", "t", "q", NAN, EstimateVector{1, 2}, EstimateVector{1, 2}),
                    std::invalid_argument);
}

TEST_CASE("parse trials") {
    SUBCASE("three complete rows make one trial") {
        const auto r = parse(std::string(kHeader) +
                             "becker,1,a,q1,10,5,7\nbecker,1,b,q1,10,9,8\nbecker,1,c,q1,10,12,10\n");
        REQUIRE(r.trials.size() == 1);
        const auto& t = r.trials.front();
        CHECK(t.pre == EstimateVector{5, 9, 12});
        CHECK(t.post == EstimateVector{7, 8, 10});
        CHECK(t.truth == 10.0);
        CHECK(t.question_id == "q1");
        CHECK(t.subject_ids == std::vector<std::string>{"a", "b", "c"});
        CHECK(r.warnings.empty());
    }
    SUBCASE("a blank post estimate drops the subject from both vectors") {
        const auto r = parse(std::string(kHeader) +
                             "d,1,a,q,10,5,7\nd,1,b,q,10,9,\nd,1,c,q,10,12,10\n");
        REQUIRE(r.trials.size() == 1);
        CHECK(r.trials[0].pre == EstimateVector{5, 12});
        CHECK(r.trials[0].post == EstimateVector{7, 10});
        CHECK(r.warnings.size() == 1);
    }
    SUBCASE("trials left with one subject are skipped") {
        const auto r = parse(std::string(kHeader) + "d,1,a,q,10,5,7\nd,1,b,q,10,x,3\nd,2,a,q,1,1,1\nd,2,b,q,1,2,2\n");
        REQUIRE(r.trials.size() == 1);
        CHECK(r.trials[0].trial_id == "2");
        CHECK(r.warnings.size() == 2);
    }
    SUBCASE("columns may come in any order, with extras") {
        const auto r = parse("post_estimate,pre_estimate,truth,question_id,notes,subject_id,trial_id,dataset\n"
                             "7,5,10,q,x,a,1,d\n8,9,10,q,y,b,1,d\n");
        REQUIRE(r.trials.size() == 1);
        CHECK(r.trials[0].pre == EstimateVector{5, 9});
    }
    SUBCASE("output is sorted by dataset then trial") {
        const auto r = parse(std::string(kHeader) +
                             "z,2,a,q,1,1,1\nz,2,b,q,1,2,2\na,9,a,q,1,1,1\na,9,b,q,1,2,2\nz,1,a,q,1,1,1\nz,1,b,q,1,2,2\n");
        REQUIRE(r.trials.size() == 3);
        CHECK(r.trials[0].dataset_id == "a");
        CHECK(r.trials[1].trial_id == "1");
        CHECK(r.trials[2].trial_id == "2");
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(parse("dataset,trial_id,subject_id\n"), TrialParseError);
        CHECK_THROWS_AS(parse(""), TrialParseError);
        try {
            parse(std::string(kHeader) + "d,1,a,q,10,5,7\nd,1,b,q,ten,5,7\n");
            FAIL("expected a parse error");
        } catch (const TrialParseError& e) {
            CHECK(e.line() == 3);
            CHECK(std::string(e.what()).find("line 3") == 0);
        }
        CHECK_THROWS_AS(parse(std::string(kHeader) + "d,1,a,q,10,5\n"), TrialParseError);
        CHECK_THROWS_AS(parse(std::string(kHeader) + "d,1,a,q,10,5,7\nd,1,b,q2,10,5,7\n"),
                        TrialParseError);
        CHECK_THROWS_AS(load_trials("/nonexistent/trials.csv"), std::runtime_error);
    }
}

TEST_CASE("write/parse round trip") {
    auto trials = synthesize_trials(synthetic(12, 3, 2));
    trials.front().subject_ids.assign(trials.front().pre.size(), "s,with comma");
    std::ostringstream out;
    write_trials(out, trials);
    const auto back = parse(out.str());
    REQUIRE(back.trials.size() == trials.size());
    for (std::size_t i = 0; i < trials.size(); ++i) {
        CHECK(back.trials[i].trial_id == trials[i].trial_id);
        CHECK(back.trials[i].question_id == trials[i].question_id);
        CHECK(back.trials[i].truth == trials[i].truth);
        CHECK(back.trials[i].pre == trials[i].pre);
        CHECK(back.trials[i].post == trials[i].post);
    }
    CHECK(back.trials.front().subject_ids.front() == "s,with comma");
}

TEST_CASE("sweep with post = pre records no change") {
    const EstimateVector pre{3, 8, 1, 9, 4, 12, 6};
    const Trial t("d", "t", "q", 5.5, pre, pre);
    const auto sweep = sweep_trial(t, 0.05);
    REQUIRE(sweep.records.size() == 19);
    for (const auto& r : sweep.records) {
        CHECK(r.threshold == quantile(pre, r.p));
        if (r.threshold == median(pre)) {
            CHECK_FALSE(r.majority_change.has_value());
            CHECK_FALSE(r.counted);
        } else {
            REQUIRE(r.majority_change.has_value());
            CHECK(*r.majority_change == MajorityChange::Unchanged);
        }
    }
}

TEST_CASE("degenerate trials warn and count nothing") {
    const Trial t("d", "t", "q", 1.0, EstimateVector{2, 2, 2}, EstimateVector{2, 2, 2});
    const auto sweep = sweep_trial(t, 0.1);
    CHECK_FALSE(sweep.warnings.empty());
    for (const auto& r : sweep.records) {
        CHECK(r.prediction == VoteChangePrediction::Boundary);
        CHECK_FALSE(r.counted);
    }
    const auto summary = dataset_fit({t}, 0.1);
    CHECK(summary.trials_scored == 0);
    CHECK_FALSE(summary.trials.front().fit.has_value());
    CHECK_FALSE(summary.warnings.empty());
    CHECK_THROWS_AS(dataset_fit({}, 0.1), std::invalid_argument);
}

TEST_CASE("calories trial: a wrong majority below 600 grows") {
    // 50 subjects; 74% below 600 before talking, 84% after; mean after 466
    std::vector<double> pre;
    std::vector<double> post;
    for (int i = 0; i < 37; ++i) pre.push_back(300 + 7.0 * i);
    for (int i = 0; i < 13; ++i) pre.push_back(650 + 40.0 * i);
    for (int i = 0; i < 42; ++i) post.push_back(380 + 2.0 * i);
    for (int i = 0; i < 8; ++i) post.push_back(620 + 5.0 * i);
    const double shift = 466.0 - mean(EstimateVector(post));
    for (auto& x : post) x += shift;
    const Trial t("d", "calories", "q", 729, EstimateVector(pre), EstimateVector(post));

    DecisionContext ctx;
    ctx.threshold = 600;
    ctx.truth = t.truth;
    ctx.pre_median = median(t.pre);
    ctx.pre_mean = mean(t.pre);
    ctx.post_value = mean(t.post);
    CHECK(ctx.post_value == doctest::Approx(466));
    CHECK(binary_accuracy(t.pre, 600, t.truth) == doctest::Approx(0.26));
    CHECK(binary_accuracy(t.post, 600, t.truth) == doctest::Approx(0.16));
    CHECK(predict_vote_change(ctx) == VoteChangePrediction::Grow);
    CHECK(realized_majority_change(t.pre, t.post, 600, ctx.pre_median) == MajorityChange::Grew);
}

TEST_CASE("uniform-matrix and converged synthetic trials fit at 100%") {
    Rng rng(17);
    std::vector<Trial> trials;
    for (int k = 0; k < 40; ++k) {
        const std::size_t n = 3 + static_cast<std::size_t>(k % 15);
        std::vector<double> pre(n);
        for (auto& x : pre) x = 100.0 * uniform01(rng);
        const EstimateVector b(pre);
        const auto post = degroot_run(DeGrootSystem(b, WeightMatrix::uniform(n), 1));
        trials.emplace_back("uniform", "u" + std::to_string(k), "q", 100.0 * uniform01(rng), b, post);
    }
    const auto uni = dataset_fit(trials, 0.01);
    CHECK(uni.trials_scored == trials.size());
    CHECK(uni.mean_fit == 1.0);

    const auto converged = synthesize_trials(synthetic(60, 5));
    for (auto res : {0.01, 0.05, 0.10}) {
        const auto s = dataset_fit(converged, res, UnchangedPolicy::CountsAsGrow, {}, 2);
        CHECK(s.mean_fit == 1.0);
        CHECK(s.dataset_id == "synthetic");
    }
    const auto table = resolution_table({converged.front()});
    REQUIRE(table.rows.size() == 1);
    for (double f : table.rows[0].mean_fit) CHECK(f == 1.0);
}

TEST_CASE("property: threshold/accuracy duality") {
    const auto trials = synthesize_trials(synthetic(80, 11, 3));
    for (const auto& t : trials) {
        const double n = static_cast<double>(t.pre.size());
        for (const auto& r : sweep_trial(t, 0.05).records) {
            if (!r.pre_accuracy) continue;
            const double above = vote_share_above(t.pre, r.threshold);
            CHECK((std::abs(*r.pre_accuracy - above) < 1e-12 || std::abs(*r.pre_accuracy - (1.0 - above)) < 1e-12));
            const double d = std::min(std::abs(*r.pre_accuracy - r.p), std::abs(*r.pre_accuracy - (1.0 - r.p)));
            CHECK(d <= 1.0 / n + 1e-12);
        }
    }
}

TEST_CASE("dataset summary statistics") {
    const Trial a("d", "a", "q", 10, EstimateVector{1, 2, 9}, EstimateVector{4, 4, 4});
    const Trial b("d", "b", "q", 0, EstimateVector{1, 2, 3, 4}, EstimateVector{3, 3, 3, 3});
    const auto s = dataset_fit({a, b}, 0.1);
    // a: M = 2, C = 4, nobody strictly between; b: M = 2.5, C = 3, nobody between
    CHECK(s.between_fraction == 0.0);
    // a moved towards 10 (mean 4 -> 4: not improved); b moved away from 0
    CHECK(s.mean_improved_fraction == 0.0);

    const Trial c("d", "c", "q", 10, EstimateVector{1, 2, 3, 12}, EstimateVector{6, 6, 6, 6});
    const auto s2 = dataset_fit({a, c}, 0.1);
    // c: M = 2.5, C = 6, subject 3 between; pooled 1/7, trial mean 1/8
    CHECK(s2.between_fraction == doctest::Approx(1.0 / 7.0));
    CHECK(s2.between_fraction_trial_mean == doctest::Approx(1.0 / 8.0));
    CHECK(s2.mean_improved_fraction == 0.5);
    CHECK(s2.trials[1].mean_improved);

    const Trial other("e", "x", "q", 1, EstimateVector{1, 2}, EstimateVector{1, 2});
    CHECK(dataset_fit({a, other}, 0.1).dataset_id == "all");
    CHECK(dataset_fit({a, other}, 0.1, UnchangedPolicy::Strict, "pooled").dataset_id == "pooled");
    CHECK(resolution_table({a, other}).rows.size() == 2);
}

TEST_CASE("short-term synthetic trials stay resolution-stable") {
    const auto trials = synthesize_trials(synthetic(200, 21, 2));
    const auto table = resolution_table(trials);
    REQUIRE(table.rows.size() == 1);
    const auto& fit = table.rows[0].mean_fit;
    CHECK(fit[0] < 1.0);
    CHECK(std::abs(fit[1] - fit[0]) <= 0.03);
    CHECK(std::abs(fit[2] - fit[0]) <= 0.03);

    const auto strict = dataset_fit(trials, 0.05, UnchangedPolicy::Strict);
    const auto lenient = dataset_fit(trials, 0.05, UnchangedPolicy::CountsAsGrow);
    CHECK(strict.mean_fit <= lenient.mean_fit);
}

TEST_CASE("figure 3 bins") {
    const auto trials = synthesize_trials(synthetic(150, 8));
    const auto fig = figure3_bins(trials, 0.05);
    CHECK_FALSE(fig.grow.empty());
    CHECK_FALSE(fig.shrink.empty());
    std::size_t records = 0;
    for (const auto& b : fig.grow) {
        CHECK(b.initial_accuracy > 0.0);
        CHECK(b.initial_accuracy < 1.0);
        records += b.records;
    }
    for (const auto& b : fig.shrink) records += b.records;
    std::size_t split_records = 0;
    for (const auto& b : fig.fit_by_improvement) {
        split_records += b.improved_records + b.unimproved_records;
        // converged synthetic trials match everywhere
        if (b.improved_fit) CHECK(*b.improved_fit == 1.0);
        if (b.unimproved_fit) CHECK(*b.unimproved_fit == 1.0);
    }
    CHECK(records == split_records);

    std::size_t counted = 0;
    for (const auto& t : dataset_fit(trials, 0.05).trials) counted += t.counted;
    CHECK(records == counted);

    // Under consensus a grow prediction means the majority side did not lose
    // ground. Bins within 1/n_min of one half may hold records whose actual
    // majority is on the other side, so they are left out.
    for (const auto& b : fig.grow) {
        if (b.initial_accuracy > 0.7) CHECK(b.mean_change >= 0.0);
        if (b.initial_accuracy < 0.3) CHECK(b.mean_change <= 0.0);
    }
    for (const auto& b : fig.shrink) {
        if (b.initial_accuracy > 0.7) CHECK(b.mean_change < 0.0);
        if (b.initial_accuracy < 0.3) CHECK(b.mean_change > 0.0);
    }
}

TEST_CASE("fit does not depend on whether the trial mean improved") {
    const auto trials = synthesize_trials(synthetic(600, 31, 2));
    const auto s = dataset_fit(trials, 0.05);
    double sum[2] = {0, 0};
    double sq[2] = {0, 0};
    double k[2] = {0, 0};
    for (const auto& f : s.trials) {
        if (!f.fit) continue;
        const int g = f.mean_improved ? 1 : 0;
        sum[g] += *f.fit;
        sq[g] += *f.fit * *f.fit;
        k[g] += 1;
    }
    REQUIRE(k[0] > 30);
    REQUIRE(k[1] > 30);
    double m[2];
    double var[2];
    for (int g = 0; g < 2; ++g) {
        m[g] = sum[g] / k[g];
        var[g] = (sq[g] - k[g] * m[g] * m[g]) / (k[g] - 1);
    }
    const double se = std::sqrt(var[0] / k[0] + var[1] / k[1]);
    CHECK(std::abs(m[1] - m[0]) < 3.0 * se);
}
