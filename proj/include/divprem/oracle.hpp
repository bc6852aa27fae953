#ifndef DIVPREM_ORACLE_HPP
#define DIVPREM_ORACLE_HPP

#include "divprem/scenario_tree.hpp"
#include "divprem/utility.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace divprem::oracle {

// Exhaustive-search window: every free decision variable ranges over
// [lo, lo + step, ..., hi]; the scan refuses to start past the cell budget.
struct GridSpec {
    double lo = -1.0;
    double hi = 1.0;
    double step = 0.01;
    std::uint64_t budget = 50'000'000;

    int points() const;
};

struct ConvolutionScan {
    double value = 0.0;
    std::vector<double> split;
    double tolerance = 0.0; // grid-step bound derived from u' over the box
};

// Exhaustive maximization of sum_i u_i(x_i) subject to sum_i x_i = x; the
// last member absorbs the budget constraint.  n <= 3.
ConvolutionScan grid_sup_convolution(std::span<const Utility* const> members,
                                     double x, const GridSpec& grid);

struct AllocationScan {
    double objective = 0.0;
    std::vector<AdaptedProcess> allocation; // per agent, over [0, T]
    double tolerance = 0.0;
    double martingale_residual = 0.0; // of the first agent's marginal process
};

// Exhaustive search over nodewise allocation values at time 0; the last
// agent's terminal slot absorbs the pathwise budget constraint.
// utilities[i][s] supplies agent i's time-s preference.
AllocationScan grid_allocation_search(
    const ScenarioTree& tree, const RandomVariable& z,
    const std::vector<std::vector<const Utility*>>& utilities, const GridSpec& grid);

// Conditional expected utility per (agent, time) pair at time 0,
// agent-major, for any feasible allocation.  Used by Pareto scans.
std::vector<double> utility_components(
    const ScenarioTree& tree,
    const std::vector<std::vector<const Utility*>>& utilities,
    const std::vector<AdaptedProcess>& allocation);

struct GapReport {
    double gap = 0.0;
    double allocation_residual = 0.0; // pathwise sum against Z
    double martingale_residual = 0.0;
};

// Weak-duality gap
//   [ sum_s E u*_s(M_s) + E M_T Z ] - sum_s E u_s(X_s)
// at time X.start, for a feasible allocation X and a positive martingale M.
// Nonnegative for every feasible pair; zero exactly at X_s = I_s(M_s).
// Constraint residuals are reported, not enforced.
GapReport duality_gap(const ScenarioTree& tree, const RandomVariable& z,
                      std::span<const Utility* const> per_time,
                      const AdaptedProcess& x, const AdaptedProcess& m);

} // namespace divprem::oracle

#endif // DIVPREM_ORACLE_HPP
