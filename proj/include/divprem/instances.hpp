#ifndef DIVPREM_INSTANCES_HPP
#define DIVPREM_INSTANCES_HPP

#include "divprem/insurance.hpp"
#include "divprem/scenario_tree.hpp"
#include "divprem/schedule.hpp"

#include <cstdint>
#include <random>

namespace divprem::instances {

// Deterministic across platforms: draws come straight from mt19937_64 words,
// never through the (implementation-defined) standard distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    double uniform() { return (next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int uniform_int(int lo, int hi) { // inclusive bounds
        return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
    }

private:
    std::mt19937_64 engine_;
};

struct TreeOptions {
    int min_horizon = 1;
    int max_horizon = 4;
    int max_leaves = 16;
    int max_children = 3;
};

// Random tree with dyadic transition probabilities (multiples of 1/64), so
// sibling probabilities sum to exactly one in floating point.
ScenarioTree random_tree(Rng& rng, const TreeOptions& options = {});

RandomVariable random_payoff(Rng& rng, const ScenarioTree& tree, double lo = -1.0,
                             double hi = 1.0);

RiskAversionSchedule random_schedule(Rng& rng, int horizon, int max_agents = 3,
                                     double lo = 0.5, double hi = 2.0);

InsurancePortfolio random_portfolio(Rng& rng, int max_contracts = 3,
                                    int max_horizon = 4);

// Feasible allocation: uniform draws on [t, T-1], terminal slot absorbs.
AdaptedProcess random_allocation(Rng& rng, const ScenarioTree& tree,
                                 const RandomVariable& z, int t = 0,
                                 double spread = 1.0);

// Positive martingale on [t, T] from exponentiated terminal noise; when
// normalized, M_t = 1 on every time-t node.
AdaptedProcess random_positive_martingale(Rng& rng, const ScenarioTree& tree,
                                          int t = 0, bool normalized = false);

} // namespace divprem::instances

#endif // DIVPREM_INSTANCES_HPP
