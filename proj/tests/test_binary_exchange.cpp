#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crowdvote/binary_exchange.hpp"
#include "oracles.hpp"

using namespace crowdvote;

namespace {

std::vector<Belief> beliefs_with_share(std::size_t n, std::size_t ones) {
    std::vector<Belief> b(n, 0);
    std::fill(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(ones), 1);
    return b;
}

}  // namespace

TEST_CASE("population validation") {
    CHECK_THROWS_AS(BinaryPopulation({}, {}, {}), std::invalid_argument);
    CHECK_THROWS_AS(BinaryPopulation({1, 0}, {1.0}, {}), std::invalid_argument);
    CHECK_THROWS_AS(BinaryPopulation({1, 0}, {0.5, 0.6}, {}), std::invalid_argument);
    CHECK_THROWS_AS(BinaryPopulation({1, 2}, {0.5, 0.5}, {}), std::invalid_argument);
    CHECK_THROWS_AS(BinaryPopulation({1, 0}, {0.5, 0.5}, {1.5, 0.0}), std::invalid_argument);
    CHECK_NOTHROW(BinaryPopulation({1, 0}, {0.5, 0.5 + 5e-10}, {}));
}

TEST_CASE("weighted vote") {
    const BinaryPopulation pop({1, 0, 1}, {0.5, 0.3, 0.2}, {});
    CHECK(weighted_vote(pop) == doctest::Approx(0.7));
    CHECK(majority_opinion(pop) == 1);

    const auto zeros = BinaryPopulation::with_uniform_weights({0, 0, 0, 0}, {});
    CHECK(weighted_vote(zeros) == 0.0);

    // S = 0.5 exactly resolves to opinion 0
    const auto tie = BinaryPopulation::with_uniform_weights(beliefs_with_share(10, 5), {});
    CHECK(weighted_vote(tie) == 0.5);
    CHECK(majority_opinion(tie) == 0);
}

TEST_CASE("property: uniform weights give the head-count share exactly") {
    Rng rng(3);
    for (std::size_t n = 1; n <= 300; n += 7) {
        const auto pop = BinaryPopulation::sample(n, uniform01(rng), {}, {}, rng);
        CHECK(weighted_vote(pop) == share_of_ones(pop));
    }
}

TEST_CASE("step") {
    Rng rng(1);
    SUBCASE("f_maj = 0 leaves a unanimous majority untouched") {
        const auto pop = BinaryPopulation::with_uniform_weights(std::vector<Belief>(50, 1), {0.7, 0.0});
        for (int i = 0; i < 100; ++i) CHECK(step(pop, rng).beliefs() == pop.beliefs());
    }
    SUBCASE("f_min = 1, f_maj = 0 converts every minority agent at once") {
        const auto pop = BinaryPopulation::with_uniform_weights(beliefs_with_share(9, 6), {1.0, 0.0});
        const auto next = step(pop, rng);
        CHECK(share_of_ones(next) == 1.0);
    }
    SUBCASE("one-step expectation 0.6 + 0.4 * 0.2 = 0.68") {
        const auto pop =
            BinaryPopulation::with_uniform_weights(beliefs_with_share(1000, 600), {0.2, 0.0});
        double total = 0.0;
        for (int i = 0; i < 1000; ++i) {
            Rng r(derive_seed(99, static_cast<std::uint64_t>(i)));
            total += share_of_ones(step(pop, r));
        }
        CHECK(std::abs(total / 1000.0 - 0.68) <= 0.01);
    }
    SUBCASE("deterministic given seed") {
        const auto pop =
            BinaryPopulation::with_uniform_weights(beliefs_with_share(200, 120), {0.3, 0.1});
        Rng a(42), b(42);
        CHECK(step(pop, a).beliefs() == step(pop, b).beliefs());
    }
}

TEST_CASE("simulate") {
    SUBCASE("history length and constant trajectory without dynamics") {
        const auto pop =
            BinaryPopulation::with_uniform_weights(beliefs_with_share(40, 25), {0.0, 0.0});
        Rng rng(2);
        const auto traj = simulate(pop, 30, rng);
        REQUIRE(traj.share_history.size() == 31);
        REQUIRE(traj.weighted_share_history.size() == 31);
        for (double s : traj.share_history) CHECK(s == 0.625);
        CHECK(traj.final_beliefs == pop.beliefs());
    }
    SUBCASE("f_maj = 0 drives every run to unanimity, monotonically") {
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            Rng rng(seed);
            const std::size_t n = 5 + 2 * (seed % 20);
            std::size_t ones = 0;
            BinaryPopulation pop = BinaryPopulation::with_uniform_weights({0}, {});
            do {
                pop = BinaryPopulation::sample(n, 0.3 + 0.4 * uniform01(rng), {}, {0.25, 0.0}, rng);
                ones = static_cast<std::size_t>(std::llround(share_of_ones(pop) * double(n)));
            } while (2 * ones == n);
            const bool majority_one = 2 * ones > n;
            const auto traj = simulate(pop, 200, rng);
            for (std::size_t t = 1; t < traj.share_history.size(); ++t) {
                if (majority_one) {
                    CHECK(traj.share_history[t] >= traj.share_history[t - 1]);
                } else {
                    CHECK(traj.share_history[t] <= traj.share_history[t - 1]);
                }
            }
            CHECK(traj.share_history.back() == (majority_one ? 1.0 : 0.0));
        }
    }
    SUBCASE("long-run share near f_min / (f_min + f_maj) = 0.75") {
        double avg = 0.0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            Rng rng(seed);
            const auto pop =
                BinaryPopulation::with_uniform_weights(beliefs_with_share(1000, 600), {0.3, 0.1});
            const auto traj = simulate(pop, 200, rng);
            double s = 0.0;
            for (std::size_t t = 151; t <= 200; ++t) s += traj.share_history[t];
            avg += s / 50.0;
        }
        CHECK(std::abs(avg / 10.0 - 0.75) <= 0.02);
    }
    CHECK_THROWS_AS(
        [] {
            Rng rng(0);
            simulate(BinaryPopulation::with_uniform_weights({1}, {}), 0, rng);
        }(),
        std::invalid_argument);
}

TEST_CASE("property: f_min > f_maj > 0 keeps the initial majority on average") {
    const std::size_t runs = 500;
    std::vector<double> mean_share(201, 0.0);
    for (std::size_t r = 0; r < runs; ++r) {
        Rng rng(derive_seed(2024, r));
        const auto pop =
            BinaryPopulation::with_uniform_weights(beliefs_with_share(1000, 550), {0.2, 0.1});
        const auto traj = simulate(pop, 200, rng);
        for (std::size_t t = 0; t <= 200; ++t) mean_share[t] += traj.share_history[t];
    }
    for (double s : mean_share) CHECK(s / static_cast<double>(runs) > 0.5);
}

TEST_CASE("equilibrium share") {
    CHECK(equilibrium_share(0.2, 0.2) == 0.5);
    CHECK(equilibrium_share(0.4, 0.0) == 1.0);
    CHECK(equilibrium_share(0.3, 0.1) == doctest::Approx(0.75));
    CHECK_THROWS_WITH_AS(equilibrium_share(0.0, 0.0), "no dynamics", std::invalid_argument);
    CHECK_THROWS_AS(equilibrium_share(-0.1, 0.2), std::invalid_argument);
}

TEST_CASE("weighted majority inequality") {
    CHECK(weighted_majority_holds(0.6, 1.0));
    CHECK_FALSE(weighted_majority_holds(0.6, 2.0));
    CHECK_THROWS_AS(weighted_majority_holds(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(weighted_majority_holds(1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(weighted_majority_holds(0.5, -1.0), std::invalid_argument);

    const BinaryPopulation pop({1, 1, 1, 0, 0}, {0.1, 0.1, 0.1, 0.35, 0.35}, {});
    const auto balance = influence_balance(pop);
    CHECK(balance.majority == 1);
    CHECK(balance.pi == doctest::Approx(0.6));
    CHECK(balance.ratio == doctest::Approx(3.5));
    CHECK_FALSE(weighted_majority_holds(balance.pi, balance.ratio));
    CHECK(majority_opinion(pop) == 0);

    CHECK_THROWS_AS(influence_balance(BinaryPopulation::with_uniform_weights({1, 0}, {})),
                    std::invalid_argument);
    CHECK_THROWS_AS(influence_balance(BinaryPopulation({1, 1, 0}, {0.0, 0.0, 1.0}, {})),
                    std::invalid_argument);
}

TEST_CASE("exhaustive: weighted majority iff pi/(1-pi) > R on an eighths grid, N <= 6") {
    constexpr int grid = 8;
    std::size_t checked = 0;
    for (int n = 1; n <= 6; ++n) {
        oracle::for_each_composition(grid, n, [&](const std::vector<int>& k) {
            std::vector<double> w(k.size());
            for (std::size_t i = 0; i < k.size(); ++i) w[i] = k[i] / double(grid);
            for (unsigned mask = 0; mask < (1u << n); ++mask) {
                std::vector<Belief> b(static_cast<std::size_t>(n));
                int ones = 0;
                for (int i = 0; i < n; ++i) {
                    b[static_cast<std::size_t>(i)] = (mask >> i) & 1u;
                    ones += (mask >> i) & 1u;
                }
                if (2 * ones == n || ones == 0 || ones == n) continue;
                const Belief majority = 2 * ones > n ? 1 : 0;
                const int exact = oracle::weighted_majority_exact(k, b, majority, grid);
                if (exact == 0) continue;
                const BinaryPopulation pop(b, w, {});
                int k_majority = 0;
                for (int i = 0; i < n; ++i)
                    if (b[static_cast<std::size_t>(i)] == majority) k_majority += k[static_cast<std::size_t>(i)];
                if (k_majority == 0) continue;
                const auto bal = influence_balance(pop);
                CHECK(weighted_majority_holds(bal.pi, bal.ratio) == (exact > 0));
                ++checked;
            }
        });
    }
    CHECK(checked > 1000);
}
