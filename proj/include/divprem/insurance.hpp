#ifndef DIVPREM_INSURANCE_HPP
#define DIVPREM_INSURANCE_HPP

#include "divprem/scenario_tree.hpp"
#include "divprem/schedule.hpp"

#include <span>
#include <string>
#include <vector>

namespace divprem {

// Fixed-payment contract over an independent event time: the insurer pays the
// discounted amount payments[t-1] at time t if the event falls in (t-1, t].
// hazard[t] = P(event in (t, t+1] | no event through t), t = 0..T-1.
struct Contract {
    std::string id;
    std::vector<double> payments; // c_1..c_T
    std::vector<double> hazard;   // q_0..q_{T-1}, each in [0, 1)
};

struct InsurancePortfolio {
    int horizon = 0;
    RiskAversionSchedule schedule;
    std::vector<Contract> contracts;
};

void validate_portfolio(const InsurancePortfolio& portfolio);

// Backward multipliers per contract: log h_{i,t} for t = 1..T+1 with
// h_{i,T+1} = 1 and
//   h_{i,t} = [ exp(beta_t c_{i,t}) q_{i,t-1} + h_{i,t+1}^{beta_t} p_{i,t-1} ]^{1/beta_t}.
// Computed in the log domain with an overflow shift for large beta_t * c.
struct HTable {
    std::vector<std::vector<double>> log_h; // [contract][t-1], t = 1..T+1

    double log(int contract, int t) const { return log_h[contract][t - 1]; }
    double h(int contract, int t) const;
};

HTable h_recursion(const InsurancePortfolio& portfolio);

// Survival state of one contract at the evaluation time: 0 = no event yet,
// s >= 1 = event occurred in (s-1, s].
struct ContractState {
    int died_at = 0;
};

// Closed-form premium
//   H_t = sum_i { paid-to-date + 1(alive at t) log h_{i,t+1} },
// which at t = 0 reduces to sum_i log h_{i,1}.
double premium_closed_form(const InsurancePortfolio& portfolio, int t,
                           std::span<const ContractState> states);

// All-alive premium at time 0.
double premium_closed_form(const InsurancePortfolio& portfolio);

// Natural-filtration expansion of the portfolio into an explicit product
// scenario tree with the discounted loss attached at the leaves.  Per-node
// states are returned for cross-validation.  Bounded by n <= n_max and T <= 6.
struct ExpandedPortfolio {
    ScenarioTree tree;
    RandomVariable payoff;
    std::vector<std::vector<ContractState>> node_states; // by node index
};

ExpandedPortfolio hazard_to_tree(const InsurancePortfolio& portfolio, int n_max = 4);

} // namespace divprem

#endif // DIVPREM_INSURANCE_HPP
