#include "divprem/schedule.hpp"

#include <cmath>
#include <string>

namespace divprem {

RiskAversionSchedule::RiskAversionSchedule(std::vector<std::vector<double>> alpha)
    : alpha_(std::move(alpha)) {
    if (alpha_.empty() || alpha_[0].empty())
        throw Error("risk aversion schedule: empty matrix");
    const std::size_t cols = alpha_[0].size();
    for (std::size_t i = 0; i < alpha_.size(); ++i) {
        if (alpha_[i].size() != cols)
            throw Error("risk aversion schedule: ragged matrix at row " + std::to_string(i));
        for (std::size_t s = 0; s < cols; ++s) {
            double a = alpha_[i][s];
            if (!std::isfinite(a) || a <= 0.0)
                throw Error("risk aversion alpha[" + std::to_string(i) + "][" +
                            std::to_string(s) + "] = " + std::to_string(a) +
                            ": entries must be positive and finite");
        }
    }

    aggregate_.resize(cols);
    for (std::size_t s = 0; s < cols; ++s) {
        double inv = 0.0;
        for (const auto& row : alpha_) inv += 1.0 / row[s];
        aggregate_[s] = 1.0 / inv;
    }

    beta_.resize(cols);
    double inv = 0.0;
    for (std::size_t t = cols; t-- > 0;) {
        inv += 1.0 / aggregate_[t];
        beta_[t] = 1.0 / inv;
    }
}

RiskAversionSchedule RiskAversionSchedule::constant(double alpha, int agents,
                                                    int horizon) {
    if (agents < 1) throw Error("risk aversion schedule: agents must be >= 1");
    if (horizon < 0) throw Error("risk aversion schedule: horizon must be >= 0");
    return RiskAversionSchedule(std::vector<std::vector<double>>(
        agents, std::vector<double>(horizon + 1, alpha)));
}

RiskAversionSchedule RiskAversionSchedule::per_time(const std::vector<double>& row,
                                                    int agents) {
    if (agents < 1) throw Error("risk aversion schedule: agents must be >= 1");
    return RiskAversionSchedule(std::vector<std::vector<double>>(agents, row));
}

} // namespace divprem
