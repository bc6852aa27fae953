#ifndef DIVPREM_VALUATION_HPP
#define DIVPREM_VALUATION_HPP

#include "divprem/scenario_tree.hpp"
#include "divprem/schedule.hpp"
#include "divprem/utility.hpp"

#include <span>

namespace divprem {

// Entropic value process: V_T = Z and
//   V_t = -(1/beta_{t+1}) log E[exp(-beta_{t+1} V_{t+1}) | F_t].
// The exponent is max-shifted, so constants pass through exactly and
// beta * |Z| up to ~700 stays finite.
AdaptedProcess value_process(const ScenarioTree& tree, const RandomVariable& z,
                             const RiskAversionSchedule& schedule);

// Indifference premium process: H_T = Z and
//   H_t = (1/beta_{t+1}) log E[exp(beta_{t+1} H_{t+1}) | F_t].
// Satisfies H_t(Z) = -V_t(-Z) step for step.
AdaptedProcess premium_process(const ScenarioTree& tree, const RandomVariable& z,
                               const RiskAversionSchedule& schedule);

// U_t = (1/beta_t)(1 - exp(-beta_t V_t)) at one time slice.
RandomVariable utility_U(const ScenarioTree& tree, const RandomVariable& z,
                         const RiskAversionSchedule& schedule, int t);

// Same formula applied to every slice of a precomputed value process.
AdaptedProcess utility_process(const AdaptedProcess& value,
                               const RiskAversionSchedule& schedule);

struct Diagnostics {
    double martingale_residual = 0.0;     // certificate e^{-alpha_s X_s}
    double allocation_sum_residual = 0.0; // pathwise sum against Z
    double duality_gap = 0.0;             // dual objective at M-hat vs U_t
};

struct AllocationResult {
    int start = 0;
    AdaptedProcess allocation;                    // X-hat over [t, T]
    AdaptedProcess dual_martingale;               // M-hat = exp(-alpha_s X-hat_s)
    std::vector<AdaptedProcess> agent_allocation; // per-agent split
    Diagnostics diagnostics;
};

// Closed-form optimizer for exponential schedules:
//   X_s = (1/alpha_s) { beta_t V_t + sum_{r=t+1..s} beta_r (V_r - V_{r-1}) }
// along each path.  X sums pathwise to Z, exp(-alpha_s X_s) is a positive
// martingale, and the per-agent split I_{i,s}(M_s) equalizes marginals.
AllocationResult optimal_allocation(const ScenarioTree& tree, const RandomVariable& z,
                                    const RiskAversionSchedule& schedule, int t);

// Allocation of the residual risk H_t(Z) - Z:
//   X_t = 0,  X_s = -(1/alpha_s) sum_{r=t+1..s} beta_r (H_r - H_{r-1}).
AdaptedProcess residual_allocation(const ScenarioTree& tree, const RandomVariable& z,
                                   const RiskAversionSchedule& schedule, int t);

// max over time-t nodes of |H_t(Z) - H_t(H_{t+tau}(Z) as terminal payoff)|.
double check_time_consistency(const ScenarioTree& tree, const RandomVariable& z,
                              const RiskAversionSchedule& schedule, int t, int tau);

// Dual objective sum_{s=t..T} E[u*_s(M_s) | F_t] + E[M_T Z | F_t] for a
// positive martingale M on [t, T].  Rejects nonpositive or non-martingale
// inputs (residual above martingale_tol).
RandomVariable dual_objective(const ScenarioTree& tree, const AdaptedProcess& m,
                              const RandomVariable& z,
                              const RiskAversionSchedule& schedule, int t,
                              double martingale_tol = 1e-9);

struct GeneralSolveOptions {
    double tol = 1e-8;    // max pathwise residual of sum_s I_s(M_s) - Z
    int max_iterations = 80;
    int max_leaves = 4096;
};

struct GeneralSolveResult {
    AdaptedProcess allocation; // X_s = I_s(M_s)
    AdaptedProcess martingale; // M
    double max_residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Solves the monotone optimality system for general per-time utilities: find
// M_T > 0 on the leaves with M_s = E[M_T | F_s] and sum_s I_s(M_s) = Z along
// every path.  Damped Newton on log M_T from M_T = 1, with a componentwise
// bisection fallback; log-space iterates keep M positive.  On iteration
// exhaustion the best iterate is returned with converged = false.
// per_time[s] supplies u_s for s = t..T.
GeneralSolveResult general_allocation_solve(const ScenarioTree& tree,
                                            const RandomVariable& z,
                                            std::span<const Utility* const> per_time,
                                            int t,
                                            const GeneralSolveOptions& options = {});

struct ValuationResult {
    int start = 0;
    AdaptedProcess premium; // H over [0, T]
    AdaptedProcess value;   // V over [0, T]
    AdaptedProcess utility; // U over [0, T]
    AllocationResult allocation;
};

// One-call evaluation: premium, value and utility processes plus the optimal
// allocation with its certificates, all for the problem started at t.
ValuationResult evaluate(const ScenarioTree& tree, const RandomVariable& z,
                         const RiskAversionSchedule& schedule, int t = 0);

} // namespace divprem

#endif // DIVPREM_VALUATION_HPP
