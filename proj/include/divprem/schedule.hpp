#ifndef DIVPREM_SCHEDULE_HPP
#define DIVPREM_SCHEDULE_HPP

#include "divprem/errors.hpp"

#include <vector>

namespace divprem {

// Per-agent, per-time risk aversions alpha[i][s] > 0 for i = 0..n-1 and
// s = 0..T, together with the derived per-time aggregate
//   1/alpha_s = sum_i 1/alpha[i][s]
// and the modified schedule
//   1/beta_t = sum_{s=t..T} 1/alpha_s,
// which is strictly increasing in t with beta_T = alpha_T.
class RiskAversionSchedule {
public:
    explicit RiskAversionSchedule(std::vector<std::vector<double>> alpha);

    static RiskAversionSchedule constant(double alpha, int agents, int horizon);
    static RiskAversionSchedule per_time(const std::vector<double>& row, int agents = 1);

    int agents() const { return static_cast<int>(alpha_.size()); }
    int horizon() const { return static_cast<int>(alpha_[0].size()) - 1; }

    double alpha(int agent, int s) const { return alpha_[agent][s]; }
    double aggregate_alpha(int s) const { return aggregate_[s]; }
    double beta(int t) const { return beta_[t]; }

    const std::vector<double>& aggregate_alphas() const { return aggregate_; }
    const std::vector<double>& betas() const { return beta_; }

private:
    std::vector<std::vector<double>> alpha_; // [agent][time]
    std::vector<double> aggregate_;          // alpha_s
    std::vector<double> beta_;               // beta_t
};

} // namespace divprem

#endif // DIVPREM_SCHEDULE_HPP
