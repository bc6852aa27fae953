#ifndef DIVPREM_ASYMPTOTICS_HPP
#define DIVPREM_ASYMPTOTICS_HPP

#include "divprem/scenario_tree.hpp"
#include "divprem/schedule.hpp"

#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace divprem {

struct SweepPoint {
    double param = 0.0;          // n or m
    double premium = 0.0;        // H_0
    double reference = 0.0;      // E[Z]
    double expansion_term = 0.0; // (1/2) sum_t beta_t E[(dZ_t)^2]
    double residual = 0.0;       // premium - reference - expansion_term
};

struct SweepReport {
    std::vector<SweepPoint> points;
    // Slope of log(premium - reference) against log(param); NaN when fewer
    // than two points carry a positive gap.
    double loglog_slope = 0.0;
    // residual(param) / residual(2 param) for every doubling pair in the grid.
    std::vector<double> residual_ratios;
};

// Premium of Z under n identical agents with per-slot aversion base_alpha,
// for each n in the grid.  With constant alpha the induced schedule is
// beta_t = base_alpha / (n (T - t + 1)); premiums decrease toward E[Z].
SweepReport large_n_sweep(const ScenarioTree& tree, const RandomVariable& z,
                          double base_alpha, std::span<const int> n_grid);

// Same sweep with the second-order residual and its doubling ratios filled;
// the residual is premium - E[Z] - (1/2) sum_t beta_t E[(dZ_t)^2].
SweepReport expansion_check(const ScenarioTree& tree, const RandomVariable& z,
                            double base_alpha, std::span<const int> n_grid);

using PayoffGenerator =
    std::function<std::pair<ScenarioTree, RandomVariable>(int m)>;

// Premium of a fixed-law payoff on trees with m time slots, for each m in the
// grid; tracks the gap premium - E[Z] as the time grid refines.
SweepReport time_refinement_sweep(const PayoffGenerator& generator,
                                  std::span<const int> m_grid, double alpha);

// Two-point payoff resolved at the first step and carried unchanged through m
// slots: the law of Z does not depend on m, only the number of allocation
// slots does.
std::pair<ScenarioTree, RandomVariable> coin_flip_payoff(int m, double p = 0.5,
                                                         double low = 0.0,
                                                         double high = 1.0);

// Partial sum of the divergence condition for n identical exponential agents:
// n/alpha * ((1 + delta) log(1 + delta) - delta).  Grows without bound in n
// for every delta > 0.
double divergence_partial_sum(double alpha, int n, double delta);

} // namespace divprem

#endif // DIVPREM_ASYMPTOTICS_HPP
