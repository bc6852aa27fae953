#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "divprem/instances.hpp"
#include "divprem/numerics.hpp"
#include "divprem/oracle.hpp"
#include "divprem/valuation.hpp"
#include "testutil.hpp"

#include <cmath>
#include <vector>

using namespace divprem;
using doctest::Approx;

namespace {

RiskAversionSchedule unit_schedule(int T) {
    return RiskAversionSchedule::constant(1.0, 1, T);
}

RandomVariable coin_payoff() { return RandomVariable{1, {1.0, 0.0}}; }

} // namespace

TEST_CASE("value process of a constant payoff is that constant") {
    ScenarioTree tree = testutil::binomial_tree(3, 0.4);
    RandomVariable z{3, std::vector<double>(8, 2.5)};
    AdaptedProcess v = value_process(tree, z, unit_schedule(3));
    for (int t = 0; t <= 3; ++t)
        for (double x : v.at(t)) CHECK(x == 2.5); // exact pass-through
}

TEST_CASE("two-leaf value: V_0 = -log((e^{-1}+1)/2)") {
    ScenarioTree tree = testutil::two_leaf_tree(0.5);
    AdaptedProcess v = value_process(tree, coin_payoff(), unit_schedule(1));
    double expected = -std::log((std::exp(-1.0) + 1.0) / 2.0); // 0.379885493042
    CHECK(v.at(0)[0] == Approx(expected).epsilon(1e-14));
    CHECK(v.at(0)[0] == Approx(0.379885493042).epsilon(1e-10));
}

TEST_CASE("value process sits below the conditional expectation") {
    instances::Rng rng(31);
    for (int rep = 0; rep < 30; ++rep) {
        ScenarioTree tree = instances::random_tree(rng);
        RandomVariable z = instances::random_payoff(rng, tree);
        RiskAversionSchedule s = instances::random_schedule(rng, tree.horizon());
        AdaptedProcess v = value_process(tree, z, s);
        AdaptedProcess e = condexp_process(tree, z);
        for (int t = 0; t <= tree.horizon(); ++t)
            for (std::size_t k = 0; k < v.at(t).size(); ++k)
                CHECK(v.at(t)[k] <= e.at(t)[k] + 1e-12);
    }
}

TEST_CASE("two-leaf premium: H_0 = log((e+1)/2)") {
    ScenarioTree tree = testutil::two_leaf_tree(0.5);
    AdaptedProcess h = premium_process(tree, coin_payoff(), unit_schedule(1));
    double expected = std::log((std::exp(1.0) + 1.0) / 2.0); // 0.620114506958
    CHECK(h.at(0)[0] == Approx(expected).epsilon(1e-14));
    CHECK(h.at(0)[0] == Approx(0.620114506958).epsilon(1e-10));
}

TEST_CASE("premium of a time-measurable payoff is that payoff, exactly") {
    instances::Rng rng(37);
    for (int rep = 0; rep < 25; ++rep) {
        ScenarioTree tree = instances::random_tree(rng);
        RiskAversionSchedule s = instances::random_schedule(rng, tree.horizon());
        int t = rng.uniform_int(0, tree.horizon());
        RandomVariable k{t, {}};
        k.values.resize(tree.slice(t).size());
        for (double& x : k.values) x = rng.uniform(-2.0, 2.0);
        AdaptedProcess h = premium_process(tree, extend_to_leaves(tree, k), s);
        for (std::size_t i = 0; i < k.values.size(); ++i)
            CHECK(h.at(t)[i] == k.values[i]); // exact, dyadic sibling probabilities
    }
}

TEST_CASE("premium equals the reflected value process") {
    instances::Rng rng(41);
    for (int rep = 0; rep < 30; ++rep) {
        ScenarioTree tree = instances::random_tree(rng);
        RandomVariable z = instances::random_payoff(rng, tree);
        RiskAversionSchedule s = instances::random_schedule(rng, tree.horizon());
        AdaptedProcess h = premium_process(tree, z, s);
        RandomVariable neg = z;
        for (double& x : neg.values) x = -x;
        AdaptedProcess v = value_process(tree, neg, s);
        for (int t = 0; t <= tree.horizon(); ++t)
            for (std::size_t k = 0; k < h.at(t).size(); ++k)
                CHECK(std::abs(h.at(t)[k] + v.at(t)[k]) <= 1e-12);
    }
}

TEST_CASE("translation invariance of the premium") {
    instances::Rng rng(43);
    for (int rep = 0; rep < 30; ++rep) {
        ScenarioTree tree = instances::random_tree(rng);
        RandomVariable z = instances::random_payoff(rng, tree);
        RiskAversionSchedule s = instances::random_schedule(rng, tree.horizon());
        double c = rng.uniform(-3.0, 3.0);
        RandomVariable shifted = z;
        for (double& x : shifted.values) x += c;
        AdaptedProcess h0 = premium_process(tree, z, s);
        AdaptedProcess h1 = premium_process(tree, shifted, s);
        CHECK(std::abs(h1.at(0)[0] - h0.at(0)[0] - c) <= 1e-12);
    }
}

TEST_CASE("utility of zero risk is zero; constants give the closed form") {
    ScenarioTree tree = testutil::binomial_tree(2);
    RiskAversionSchedule s = unit_schedule(2);
    RandomVariable zero{2, std::vector<double>(4, 0.0)};
    RandomVariable u0 = utility_U(tree, zero, s, 0);
    CHECK(u0.values[0] == 0.0);

    RandomVariable c{2, std::vector<double>(4, 1.7)};
    for (int t = 0; t <= 2; ++t) {
        RandomVariable ut = utility_U(tree, c, s, t);
        double beta = s.beta(t);
        for (double v : ut.values)
            CHECK(v == Approx(-std::expm1(-beta * 1.7) / beta).epsilon(1e-14));
    }
}

TEST_CASE("utility concavity and premium convexity under mixing") {
    instances::Rng rng(47);
    for (int rep = 0; rep < 25; ++rep) {
        ScenarioTree tree = instances::random_tree(rng);
        RiskAversionSchedule s = instances::random_schedule(rng, tree.horizon());
        RandomVariable x = instances::random_payoff(rng, tree);
        RandomVariable y = instances::random_payoff(rng, tree);
        for (double a : {0.25, 0.5, 0.75}) {
            RandomVariable mix{tree.horizon(), {}};
            mix.values.resize(x.values.size());
            for (std::size_t k = 0; k < mix.values.size(); ++k)
                mix.values[k] = a * x.values[k] + (1.0 - a) * y.values[k];

            double u_mix = utility_U(tree, mix, s, 0).values[0];
            double u_x = utility_U(tree, x, s, 0).values[0];
            double u_y = utility_U(tree, y, s, 0).values[0];
            CHECK(u_mix >= a * u_x + (1.0 - a) * u_y - 1e-10);

            double h_mix = premium_process(tree, mix, s).at(0)[0];
            double h_x = premium_process(tree, x, s).at(0)[0];
            double h_y = premium_process(tree, y, s).at(0)[0];
            CHECK(h_mix <= a * h_x + (1.0 - a) * h_y + 1e-10);
        }
    }
}

TEST_CASE("monotonicity and risk loading of the premium") {
    instances::Rng rng(53);
    for (int rep = 0; rep < 25; ++rep) {
        ScenarioTree tree = instances::random_tree(rng);
        RiskAversionSchedule s = instances::random_schedule(rng, tree.horizon());
        RandomVariable z1 = instances::random_payoff(rng, tree);
        RandomVariable z2 = z1;
        for (double& v : z2.values) v -= rng.uniform(0.0, 1.0);

        AdaptedProcess h1 = premium_process(tree, z1, s);
        AdaptedProcess h2 = premium_process(tree, z2, s);
        CHECK(h1.at(0)[0] >= h2.at(0)[0] - 1e-12);

        AdaptedProcess e = condexp_process(tree, z1);
        for (int t = 0; t <= tree.horizon(); ++t)
            for (std::size_t k = 0; k < h1.at(t).size(); ++k)
                CHECK(h1.at(t)[k] >= e.at(t)[k] - 1e-12);
    }
}

TEST_CASE("H_t(-.) is a time-consistent dynamic convex risk measure") {
    instances::Rng rng(59);
    ScenarioTree tree = instances::random_tree(rng);
    RiskAversionSchedule s = instances::random_schedule(rng, tree.horizon());
    auto rho0 = [&](const RandomVariable& z) {
        RandomVariable neg = z;
        for (double& v : neg.values) v = -v;
        return premium_process(tree, neg, s).at(0)[0];
    };

    RandomVariable x = instances::random_payoff(rng, tree);
    RandomVariable y = x;
    for (double& v : y.values) v += rng.uniform(0.0, 0.5); // y >= x
    CHECK(rho0(x) >= rho0(y) - 1e-12); // antimonotone

    RandomVariable other = instances::random_payoff(rng, tree);
    RandomVariable mix = x;
    for (std::size_t k = 0; k < mix.values.size(); ++k)
        mix.values[k] = 0.5 * (x.values[k] + other.values[k]);
    CHECK(rho0(mix) <= 0.5 * rho0(x) + 0.5 * rho0(other) + 1e-10); // convex

    double c = 0.8;
    RandomVariable shifted = x;
    for (double& v : shifted.values) v += c;
    CHECK(rho0(shifted) == Approx(rho0(x) - c).epsilon(1e-12)); // cash additive
}

TEST_CASE("optimal allocation of zero risk is zero") {
    ScenarioTree tree = testutil::binomial_tree(2);
    RandomVariable zero{2, std::vector<double>(4, 0.0)};
    AllocationResult r = optimal_allocation(tree, zero, unit_schedule(2), 0);
    for (int s = 0; s <= 2; ++s)
        for (double x : r.allocation.at(s)) CHECK(x == 0.0);
}

TEST_CASE("two-leaf optimal allocation: X_0 = V_0 / 2, X_1 = Z - X_0") {
    ScenarioTree tree = testutil::two_leaf_tree(0.5);
    RandomVariable z = coin_payoff();
    RiskAversionSchedule s = unit_schedule(1); // beta_0 = 1/2, beta_1 = 1
    AdaptedProcess v = value_process(tree, z, s);
    AllocationResult r = optimal_allocation(tree, z, s, 0);

    CHECK(r.allocation.at(0)[0] == Approx(0.5 * v.at(0)[0]).epsilon(1e-14));
    for (std::size_t k = 0; k < 2; ++k)
        CHECK(r.allocation.at(1)[k] ==
              Approx(z.values[k] - r.allocation.at(0)[0]).epsilon(1e-12));
    CHECK(r.diagnostics.allocation_sum_residual <= 1e-12);
    CHECK(r.diagnostics.martingale_residual <= 1e-12);
}

TEST_CASE("martingale certificate and per-agent split on randomized trees") {
    instances::Rng rng(61);
    for (int rep = 0; rep < 30; ++rep) {
        ScenarioTree tree = instances::random_tree(rng);
        RandomVariable z = instances::random_payoff(rng, tree);
        RiskAversionSchedule s = instances::random_schedule(rng, tree.horizon());
        int t = rng.uniform_int(0, tree.horizon() - 1);
        AllocationResult r = optimal_allocation(tree, z, s, t);

        CHECK(is_martingale(tree, r.dual_martingale, 1e-10).ok);
        CHECK(r.diagnostics.allocation_sum_residual <= 1e-9);
        CHECK(r.diagnostics.duality_gap <= 1e-9);

        // Marginal utilities of the split equal the dual martingale.
        for (int s2 = t; s2 <= tree.horizon(); ++s2)
            for (std::size_t k = 0; k < r.allocation.at(s2).size(); ++k) {
                double sum = 0.0;
                for (int i = 0; i < s.agents(); ++i) {
                    double xi = r.agent_allocation[i].at(s2)[k];
                    ExponentialUtility ui(s.alpha(i, s2));
                    CHECK(std::abs(ui.marginal(xi) - r.dual_martingale.at(s2)[k]) <=
                          1e-10);
                    sum += xi;
                }
                CHECK(sum == Approx(r.allocation.at(s2)[k]).epsilon(1e-10));
            }
    }
}

TEST_CASE("residual allocation sums to H_t(Z) - Z along every path") {
    SUBCASE("constant payoff gives the zero allocation") {
        ScenarioTree tree = testutil::binomial_tree(2);
        RandomVariable z{2, std::vector<double>(4, 3.0)};
        AdaptedProcess x = residual_allocation(tree, z, unit_schedule(2), 0);
        for (int s = 0; s <= 2; ++s)
            for (double v : x.at(s)) CHECK(v == 0.0);
    }
    SUBCASE("two-leaf telescope: X_1 = H_0 - Z") {
        ScenarioTree tree = testutil::two_leaf_tree(0.5);
        RandomVariable z = coin_payoff();
        RiskAversionSchedule s = unit_schedule(1);
        AdaptedProcess h = premium_process(tree, z, s);
        AdaptedProcess x = residual_allocation(tree, z, s, 0);
        CHECK(x.at(0)[0] == 0.0);
        for (std::size_t k = 0; k < 2; ++k)
            CHECK(x.at(1)[k] == Approx(h.at(0)[0] - z.values[k]).epsilon(1e-12));
    }
    SUBCASE("randomized trees, pathwise sum within 1e-9") {
        instances::Rng rng(67);
        for (int rep = 0; rep < 25; ++rep) {
            ScenarioTree tree = instances::random_tree(rng);
            RandomVariable z = instances::random_payoff(rng, tree);
            RiskAversionSchedule s = instances::random_schedule(rng, tree.horizon());
            int t = rng.uniform_int(0, tree.horizon() - 1);
            AdaptedProcess h = premium_process(tree, z, s);
            AdaptedProcess x = residual_allocation(tree, z, s, t);
            for (double v : x.at(t)) CHECK(v == 0.0);
            for (int leaf : tree.leaves()) {
                double sum = 0.0;
                for (int s2 = t; s2 <= tree.horizon(); ++s2)
                    sum += x.at(s2)[tree.node(tree.ancestor_at(leaf, s2)).slot];
                double expected = h.at(t)[tree.node(tree.ancestor_at(leaf, t)).slot] -
                                  z.values[tree.node(leaf).slot];
                CHECK(sum == Approx(expected).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("time consistency across horizons") {
    instances::Rng rng(71);
    for (int rep = 0; rep < 25; ++rep) {
        ScenarioTree tree = instances::random_tree(rng);
        RandomVariable z = instances::random_payoff(rng, tree);
        RiskAversionSchedule s = instances::random_schedule(rng, tree.horizon());
        CHECK(check_time_consistency(tree, z, s, 0, 0) == 0.0);
        for (int t = 0; t < tree.horizon(); ++t)
            for (int tau = 0; t + tau <= tree.horizon(); ++tau)
                CHECK(check_time_consistency(tree, z, s, t, tau) < 1e-10);
    }
}

TEST_CASE("perturbing beta at one step breaks time consistency") {
    ScenarioTree tree = testutil::binomial_tree(2, 0.5);
    RandomVariable z = testutil::up_count_payoff(tree);
    RiskAversionSchedule original = unit_schedule(2);
    RiskAversionSchedule perturbed{{{1.0, 1.0, 2.5}}};

    AdaptedProcess inner = premium_process(tree, z, perturbed);
    RandomVariable k = extend_to_leaves(tree, inner.slice_rv(1));
    AdaptedProcess outer = premium_process(tree, k, original);
    AdaptedProcess direct = premium_process(tree, z, original);
    CHECK(std::abs(outer.at(0)[0] - direct.at(0)[0]) > 1e-6);
}

TEST_CASE("dual objective: identities and rejection paths") {
    ScenarioTree tree = testutil::two_leaf_tree(0.5);
    RiskAversionSchedule s = unit_schedule(1);
    AdaptedProcess ones{0, {{1.0}, {1.0, 1.0}}};

    RandomVariable zero{1, {0.0, 0.0}};
    CHECK(dual_objective(tree, ones, zero, s, 0).values[0] ==
          Approx(0.0).epsilon(1e-15));

    RandomVariable z = coin_payoff();
    double at_one = dual_objective(tree, ones, z, s, 0).values[0];
    CHECK(at_one == Approx(expectation(tree, z)).epsilon(1e-14));
    CHECK(at_one >= utility_U(tree, z, s, 0).values[0] - 1e-12);

    AdaptedProcess negative{0, {{1.0}, {-0.5, 2.5}}};
    CHECK_THROWS_AS(dual_objective(tree, negative, z, s, 0), Error);
    AdaptedProcess drifting{0, {{0.5}, {1.0, 1.0}}};
    CHECK_THROWS_AS(dual_objective(tree, drifting, z, s, 0), Error);
}

TEST_CASE("strong duality at the closed-form optimizer") {
    instances::Rng rng(73);
    for (int rep = 0; rep < 25; ++rep) {
        ScenarioTree tree = instances::random_tree(rng);
        RandomVariable z = instances::random_payoff(rng, tree);
        RiskAversionSchedule s = instances::random_schedule(rng, tree.horizon());
        AllocationResult r = optimal_allocation(tree, z, s, 0);
        RandomVariable dual = dual_objective(tree, r.dual_martingale, z, s, 0);
        RandomVariable u = utility_U(tree, z, s, 0);
        CHECK(std::abs(dual.values[0] - u.values[0]) <= 1e-9);
    }
}

TEST_CASE("premium representation by relative-entropy-penalized martingales") {
    instances::Rng rng(79);
    for (int rep = 0; rep < 15; ++rep) {
        ScenarioTree tree = instances::random_tree(rng);
        RandomVariable z = instances::random_payoff(rng, tree);
        RiskAversionSchedule s = instances::random_schedule(rng, tree.horizon());
        double h0 = premium_process(tree, z, s).at(0)[0];
        for (int k = 0; k < 20; ++k) {
            AdaptedProcess m =
                instances::random_positive_martingale(rng, tree, 0, true);
            RandomVariable mz{tree.horizon(), m.at(tree.horizon())};
            for (std::size_t i = 0; i < mz.values.size(); ++i)
                mz.values[i] *= z.values[i];
            double bound = expectation(tree, mz);
            for (int t = 0; t <= tree.horizon(); ++t) {
                RandomVariable ent{t, m.at(t)};
                for (double& v : ent.values) v = v * std::log(v);
                bound -= expectation(tree, ent) / s.aggregate_alpha(t);
            }
            CHECK(bound <= h0 + 1e-9);
        }
    }
}

TEST_CASE("degenerate filtration reduces to the one-step premium formula") {
    // Everything resolves at t = 1; chains continue to T = 3.
    TreeSpec spec;
    spec.horizon = 3;
    spec.nodes.push_back({"r", 0, std::nullopt, 1.0});
    const char* branches[] = {"a", "b", "c"};
    double probs[] = {0.25, 0.25, 0.5};
    for (int b = 0; b < 3; ++b) {
        std::string id = std::string("r.") + branches[b];
        spec.nodes.push_back({id, 1, std::string("r"), probs[b]});
        std::string prev = id;
        for (int t = 2; t <= 3; ++t) {
            std::string next = prev + ".x";
            spec.nodes.push_back({next, t, prev, 1.0});
            prev = next;
        }
    }
    ScenarioTree tree = ScenarioTree::build(spec);
    RandomVariable z{3, {0.9, -0.4, 1.6}};
    RiskAversionSchedule s = RiskAversionSchedule::constant(1.3, 1, 3);

    double h0 = premium_process(tree, z, s).at(0)[0];
    double beta1 = s.beta(1);
    double acc = 0.0;
    for (int leaf : tree.leaves())
        acc += tree.node(leaf).path_prob *
               std::exp(beta1 * z.values[tree.node(leaf).slot]);
    CHECK(h0 == Approx(std::log(acc) / beta1).epsilon(1e-12));
}

TEST_CASE("general solver reproduces the exponential closed form") {
    instances::Rng rng(83);
    for (int rep = 0; rep < 10; ++rep) {
        instances::TreeOptions opt;
        opt.max_horizon = 3;
        opt.max_leaves = 10;
        ScenarioTree tree = instances::random_tree(rng, opt);
        RandomVariable z = instances::random_payoff(rng, tree);
        RiskAversionSchedule s = instances::random_schedule(rng, tree.horizon());

        std::vector<ExponentialUtility> owned;
        owned.reserve(tree.horizon() + 1);
        for (int t = 0; t <= tree.horizon(); ++t)
            owned.emplace_back(s.aggregate_alpha(t));
        std::vector<const Utility*> per_time;
        for (const auto& u : owned) per_time.push_back(&u);

        GeneralSolveResult g = general_allocation_solve(tree, z, per_time, 0);
        CHECK(g.converged);
        CHECK(g.max_residual <= 1e-8);

        AllocationResult closed = optimal_allocation(tree, z, s, 0);
        for (int t = 0; t <= tree.horizon(); ++t)
            for (std::size_t k = 0; k < g.allocation.at(t).size(); ++k)
                CHECK(std::abs(g.allocation.at(t)[k] - closed.allocation.at(t)[k]) <=
                      1e-7);
    }
}

TEST_CASE("general solver: zero risk gives the unit martingale") {
    ScenarioTree tree = testutil::binomial_tree(2);
    RandomVariable zero{2, std::vector<double>(4, 0.0)};
    ExponentialUtility u1(1.0);
    MixedExponentialUtility u2(0.4, 0.7, 1.8);
    std::vector<const Utility*> per_time{&u1, &u2, &u1};
    GeneralSolveResult g = general_allocation_solve(tree, zero, per_time, 0);
    CHECK(g.converged);
    for (int t = 0; t <= 2; ++t)
        for (std::size_t k = 0; k < g.martingale.at(t).size(); ++k) {
            CHECK(g.martingale.at(t)[k] == Approx(1.0).epsilon(1e-10));
            CHECK(std::abs(g.allocation.at(t)[k]) <= 1e-10);
        }
}

TEST_CASE("general solver matches the grid oracle on a mixed family") {
    ScenarioTree tree = testutil::two_leaf_tree(0.5);
    RandomVariable z{1, {0.8, -0.3}};
    MixedExponentialUtility u0(0.4, 0.7, 1.8);
    ExponentialUtility u1(1.3);
    std::vector<const Utility*> per_time{&u0, &u1};

    GeneralSolveResult g = general_allocation_solve(tree, z, per_time, 0);
    CHECK(g.converged);
    CHECK(is_martingale(tree, g.martingale, 1e-9).ok);

    double primal = 0.0;
    for (int t = 0; t <= 1; ++t) {
        RandomVariable u{t, g.allocation.at(t)};
        for (double& v : u.values) v = per_time[t]->value(v);
        primal += expectation(tree, u);
    }

    std::vector<std::vector<const Utility*>> agents{{&u0, &u1}};
    oracle::GridSpec grid{-1.0, 1.0, 1e-3, 100'000'000};
    oracle::AllocationScan scan = oracle::grid_allocation_search(tree, z, agents, grid);
    CHECK(scan.objective <= primal + 1e-9);
    CHECK(primal - scan.objective <= scan.tolerance);
    CHECK(std::abs(scan.allocation[0].at(0)[0] - g.allocation.at(0)[0]) <= 2e-3);
}

TEST_CASE("no feasible perturbation Pareto-dominates the optimal allocation") {
    ScenarioTree tree = testutil::two_leaf_tree(0.5);
    RandomVariable z{1, {1.0, -0.5}};
    RiskAversionSchedule s = RiskAversionSchedule::constant(2.0, 2, 1);
    AllocationResult r = optimal_allocation(tree, z, s, 0);

    ExponentialUtility u(2.0);
    std::vector<std::vector<const Utility*>> agents{{&u, &u}, {&u, &u}};
    std::vector<double> base =
        oracle::utility_components(tree, agents, r.agent_allocation);

    auto dominates = [&](const std::vector<double>& other) {
        bool some_strict = false;
        for (std::size_t k = 0; k < base.size(); ++k) {
            if (other[k] < base[k] - 1e-9) return false;
            if (other[k] > base[k] + 1e-9) some_strict = true;
        }
        return some_strict;
    };

    // Local perturbations moving mass between the agents' terminal slots.
    for (int agent = 0; agent < 2; ++agent)
        for (int node = 0; node < 2; ++node)
            for (double delta : {-0.1, -0.02, 0.02, 0.1}) {
                auto perturbed = r.agent_allocation;
                perturbed[agent].at(1)[node] += delta;
                perturbed[(agent + 1) % 2].at(1)[node] -= delta;
                CHECK_FALSE(
                    dominates(oracle::utility_components(tree, agents, perturbed)));
            }

    // Random feasible alternatives.
    instances::Rng rng(89);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<AdaptedProcess> alt(2);
        for (int i = 0; i < 2; ++i) {
            alt[i].start = 0;
            alt[i].values = {{rng.uniform(-0.5, 0.5)}, {0.0, 0.0}};
        }
        for (int leaf = 0; leaf < 2; ++leaf) {
            alt[0].at(1)[leaf] = rng.uniform(-0.5, 0.5);
            alt[1].at(1)[leaf] =
                z.values[leaf] - alt[0].at(1)[leaf] - alt[0].at(0)[0] - alt[1].at(0)[0];
        }
        CHECK_FALSE(dominates(oracle::utility_components(tree, agents, alt)));
    }
}

TEST_CASE("valuation rejects mismatched inputs") {
    ScenarioTree tree = testutil::two_leaf_tree(0.5);
    RiskAversionSchedule s = unit_schedule(1);
    RandomVariable wrong_time{0, {1.0}};
    CHECK_THROWS_AS(premium_process(tree, wrong_time, s), Error);
    RandomVariable wrong_size{1, {1.0}};
    CHECK_THROWS_AS(premium_process(tree, wrong_size, s), Error);
    RiskAversionSchedule longer = unit_schedule(2);
    CHECK_THROWS_AS(premium_process(tree, coin_payoff(), longer), Error);
    CHECK_THROWS_AS(check_time_consistency(tree, coin_payoff(), s, 1, 1), Error);
}

TEST_CASE("entropic recursions stay finite for large exponents") {
    ScenarioTree tree = testutil::two_leaf_tree(0.5);
    RandomVariable big{1, {700.0, 0.0}};
    RiskAversionSchedule s = unit_schedule(1);
    double h0 = premium_process(tree, big, s).at(0)[0];
    CHECK(std::isfinite(h0));
    CHECK(h0 >= expectation(tree, big));
    CHECK(h0 <= 700.0);
    double v0 = value_process(tree, big, s).at(0)[0];
    CHECK(std::isfinite(v0));
}
