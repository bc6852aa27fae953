#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "divprem/instances.hpp"
#include "divprem/oracle.hpp"
#include "divprem/valuation.hpp"
#include "testutil.hpp"

#include <cmath>
#include <vector>

using namespace divprem;
using doctest::Approx;

TEST_CASE("grid convolution: equal exponentials split near the middle") {
    ExponentialUtility u1(2.0), u2(2.0);
    const Utility* members[] = {&u1, &u2};
    oracle::GridSpec grid{-1.0, 2.0, 1e-3, 100'000'000};
    oracle::ConvolutionScan scan = oracle::grid_sup_convolution(members, 1.0, grid);
    CHECK(scan.split[0] == Approx(0.5).epsilon(2e-3));
    CHECK(scan.split[1] == Approx(0.5).epsilon(2e-3));
    ConvolutionResult analytic = sup_convolution(members, 1.0);
    CHECK(scan.value <= analytic.value + 1e-12);
    CHECK(analytic.value - scan.value <= scan.tolerance);
}

TEST_CASE("grid convolution with a single member is the identity") {
    ExponentialUtility u(1.3);
    const Utility* members[] = {&u};
    oracle::GridSpec grid{-1.0, 1.0, 0.1, 1000};
    oracle::ConvolutionScan scan = oracle::grid_sup_convolution(members, 0.7, grid);
    CHECK(scan.value == u.value(0.7));
    CHECK(scan.split[0] == 0.7);
    CHECK(scan.tolerance == 0.0);
}

TEST_CASE("a deliberately coarse grid undershoots the analytic value") {
    ExponentialUtility u1(1.0), u2(2.0);
    const Utility* members[] = {&u1, &u2};
    oracle::GridSpec grid{-1.0, 1.0, 0.5, 1000};
    oracle::ConvolutionScan scan = oracle::grid_sup_convolution(members, 0.8, grid);
    ConvolutionResult analytic = sup_convolution(members, 0.8);
    CHECK(scan.value < analytic.value);
    CHECK(analytic.value - scan.value <= scan.tolerance);
}

TEST_CASE("grid convolution enforces member and budget limits") {
    ExponentialUtility u(1.0);
    const Utility* four[] = {&u, &u, &u, &u};
    oracle::GridSpec grid{-1.0, 1.0, 0.1, 1000};
    CHECK_THROWS_AS(oracle::grid_sup_convolution(four, 0.0, grid), Error);
    const Utility* three[] = {&u, &u, &u};
    oracle::GridSpec tiny{-1.0, 1.0, 1e-3, 100};
    CHECK_THROWS_AS(oracle::grid_sup_convolution(three, 0.0, tiny), Error);
    oracle::GridSpec bad{1.0, -1.0, 0.1, 1000};
    CHECK_THROWS_AS(oracle::grid_sup_convolution(three, 0.0, bad), Error);
}

TEST_CASE("allocation scan: zero risk optimizes to the zero allocation") {
    ScenarioTree tree = testutil::two_leaf_tree(0.5);
    RandomVariable zero{1, {0.0, 0.0}};
    ExponentialUtility u(1.0);
    std::vector<std::vector<const Utility*>> agents{{&u, &u}};
    oracle::GridSpec grid{-0.5, 0.5, 0.01, 10'000'000};
    oracle::AllocationScan scan = oracle::grid_allocation_search(tree, zero, agents, grid);
    CHECK(std::abs(scan.objective) <= 1e-4);
    for (int s = 0; s <= 1; ++s)
        for (double v : scan.allocation[0].at(s)) CHECK(std::abs(v) <= 0.011);
}

TEST_CASE("allocation scan matches the closed-form utility on the coin flip") {
    ScenarioTree tree = testutil::two_leaf_tree(0.5);
    RandomVariable z{1, {1.0, 0.0}};
    RiskAversionSchedule s = RiskAversionSchedule::constant(1.0, 1, 1);
    double analytic = utility_U(tree, z, s, 0).values[0];

    ExponentialUtility u(1.0);
    std::vector<std::vector<const Utility*>> agents{{&u, &u}};
    oracle::GridSpec grid{-2.0, 2.0, 1e-3, 100'000'000};
    oracle::AllocationScan scan = oracle::grid_allocation_search(tree, z, agents, grid);
    CHECK(std::abs(scan.objective - analytic) <= 1e-3);
    CHECK(scan.objective <= analytic + 1e-12);
    CHECK(analytic - scan.objective <= scan.tolerance);
    // The optimizer's marginal-utility process is approximately a martingale.
    CHECK(scan.martingale_residual <= 2e-3);
}

TEST_CASE("two-agent allocation scan stays consistent with the reduction") {
    ScenarioTree tree = testutil::two_leaf_tree(0.5);
    RandomVariable z{1, {1.0, -0.5}};
    RiskAversionSchedule s = RiskAversionSchedule::constant(2.0, 2, 1);
    double analytic = utility_U(tree, z, s, 0).values[0];

    ExponentialUtility u(2.0);
    std::vector<std::vector<const Utility*>> agents{{&u, &u}, {&u, &u}};
    oracle::GridSpec grid{-0.6, 0.8, 0.02, 50'000'000};
    oracle::AllocationScan scan = oracle::grid_allocation_search(tree, z, agents, grid);
    CHECK(scan.objective <= analytic + 1e-12);
    CHECK(analytic - scan.objective <= scan.tolerance);
    CHECK(std::abs(scan.objective - analytic) <= 5e-3);
}

TEST_CASE("allocation scan budget guard trips on impossible grids") {
    ScenarioTree tree = testutil::binomial_tree(2);
    RandomVariable z{2, std::vector<double>(4, 0.0)};
    ExponentialUtility u(1.0);
    std::vector<std::vector<const Utility*>> agents{{&u, &u, &u}};
    oracle::GridSpec grid{-1.0, 1.0, 1e-3, 1'000'000};
    CHECK_THROWS_AS(oracle::grid_allocation_search(tree, z, agents, grid), Error);
}

TEST_CASE("perturbing the grid optimizer is never a Pareto improvement") {
    ScenarioTree tree = testutil::two_leaf_tree(0.5);
    RandomVariable z{1, {1.0, 0.0}};
    ExponentialUtility u(1.0);
    std::vector<std::vector<const Utility*>> agents{{&u, &u}};
    oracle::GridSpec grid{-2.0, 2.0, 1e-3, 100'000'000};
    oracle::AllocationScan scan = oracle::grid_allocation_search(tree, z, agents, grid);
    std::vector<double> base = oracle::utility_components(tree, agents, scan.allocation);

    for (int node = 0; node < 2; ++node)
        for (double delta : {-0.05, 0.05}) {
            auto perturbed = scan.allocation;
            perturbed[0].at(0)[0] += delta;           // shift the time-0 slot
            perturbed[0].at(1)[node] -= delta;        // rebalance one leaf
            std::vector<double> other =
                oracle::utility_components(tree, agents, perturbed);
            bool all_ge = true, some_strict = false;
            for (std::size_t k = 0; k < base.size(); ++k) {
                if (other[k] < base[k] - 1e-9) all_ge = false;
                if (other[k] > base[k] + 1e-9) some_strict = true;
            }
            CHECK_FALSE((all_ge && some_strict));
        }
}

TEST_CASE("duality gap: zero at the trivial optimum, positive off-optimum") {
    ScenarioTree tree = testutil::two_leaf_tree(0.5);
    ExponentialUtility u(1.0);
    std::vector<const Utility*> per_time{&u, &u};

    RandomVariable zero{1, {0.0, 0.0}};
    AdaptedProcess x0{0, {{0.0}, {0.0, 0.0}}};
    AdaptedProcess ones{0, {{1.0}, {1.0, 1.0}}};
    oracle::GapReport trivial = oracle::duality_gap(tree, zero, per_time, x0, ones);
    CHECK(trivial.gap == Approx(0.0).epsilon(1e-15));
    CHECK(trivial.allocation_residual == 0.0);
    CHECK(trivial.martingale_residual == 0.0);

    RandomVariable z{1, {1.0, 0.0}};
    RiskAversionSchedule s = RiskAversionSchedule::constant(1.0, 1, 1);
    AllocationResult opt = optimal_allocation(tree, z, s, 0);
    oracle::GapReport suboptimal =
        oracle::duality_gap(tree, z, per_time, opt.allocation, ones);
    CHECK(suboptimal.gap > 1e-3); // M = 1 is not the optimal dual point
}

TEST_CASE("duality gap vanishes at the closed-form optimal pair") {
    instances::Rng rng(101);
    for (int rep = 0; rep < 20; ++rep) {
        ScenarioTree tree = instances::random_tree(rng);
        RandomVariable z = instances::random_payoff(rng, tree);
        RiskAversionSchedule s = instances::random_schedule(rng, tree.horizon());
        AllocationResult opt = optimal_allocation(tree, z, s, 0);

        std::vector<ExponentialUtility> owned;
        owned.reserve(tree.horizon() + 1);
        for (int t = 0; t <= tree.horizon(); ++t)
            owned.emplace_back(s.aggregate_alpha(t));
        std::vector<const Utility*> per_time;
        for (const auto& u : owned) per_time.push_back(&u);

        oracle::GapReport g =
            oracle::duality_gap(tree, z, per_time, opt.allocation, opt.dual_martingale);
        CHECK(std::abs(g.gap) < 1e-8);
        CHECK(g.allocation_residual < 1e-9);
        CHECK(g.martingale_residual < 1e-9);
    }
}

TEST_CASE("weak duality holds for random feasible pairs") {
    instances::Rng rng(103);
    for (int rep = 0; rep < 10; ++rep) {
        ScenarioTree tree = instances::random_tree(rng);
        RandomVariable z = instances::random_payoff(rng, tree);
        RiskAversionSchedule s = instances::random_schedule(rng, tree.horizon());
        std::vector<ExponentialUtility> owned;
        owned.reserve(tree.horizon() + 1);
        for (int t = 0; t <= tree.horizon(); ++t)
            owned.emplace_back(s.aggregate_alpha(t));
        std::vector<const Utility*> per_time;
        for (const auto& u : owned) per_time.push_back(&u);

        for (int k = 0; k < 50; ++k) {
            AdaptedProcess x = instances::random_allocation(rng, tree, z);
            AdaptedProcess m = instances::random_positive_martingale(rng, tree);
            oracle::GapReport g = oracle::duality_gap(tree, z, per_time, x, m);
            CHECK(g.gap >= -1e-10);
            CHECK(g.allocation_residual < 1e-10);
            CHECK(g.martingale_residual < 1e-12);
        }
    }
}

TEST_CASE("duality gap rejects nonpositive martingales and reports violations") {
    ScenarioTree tree = testutil::two_leaf_tree(0.5);
    ExponentialUtility u(1.0);
    std::vector<const Utility*> per_time{&u, &u};
    RandomVariable z{1, {1.0, 0.0}};
    AdaptedProcess x{0, {{0.0}, {1.0, 0.0}}};
    AdaptedProcess bad{0, {{1.0}, {2.0, -0.1}}};
    CHECK_THROWS_AS(oracle::duality_gap(tree, z, per_time, x, bad), Error);

    // An infeasible allocation is reported through the residual, not thrown.
    AdaptedProcess off{0, {{0.3}, {1.0, 0.0}}};
    AdaptedProcess ones{0, {{1.0}, {1.0, 1.0}}};
    oracle::GapReport g = oracle::duality_gap(tree, z, per_time, off, ones);
    CHECK(g.allocation_residual == Approx(0.3).epsilon(1e-12));
}
