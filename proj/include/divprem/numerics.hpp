#ifndef DIVPREM_NUMERICS_HPP
#define DIVPREM_NUMERICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <span>

namespace divprem {

// One-step entropic certainty equivalents.  Both shift the extreme value out
// of the exponent, so constants pass through exactly when the weights sum to
// one and exponent spreads up to ~1400 stay finite.

// (1/beta) log sum_i p_i exp(beta * v_i)
inline double entropic_up(double beta, std::span<const double> v,
                          std::span<const double> p) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        acc += p[i] * std::exp(beta * (v[i] - m));
    return m + std::log(acc) / beta;
}

// -(1/beta) log sum_i p_i exp(-beta * v_i)
inline double entropic_down(double beta, std::span<const double> v,
                            std::span<const double> p) {
    double m = std::numeric_limits<double>::infinity();
    for (double x : v) m = std::min(m, x);
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        acc += p[i] * std::exp(-beta * (v[i] - m));
    return m - std::log(acc) / beta;
}

// log(exp(a) + exp(b)) with -inf treated as an absent term.
inline double logaddexp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Round to 12 significant digits; reports and CLI output pass through this so
// repeated runs diff cleanly.
inline double sig12(double x) {
    if (!std::isfinite(x)) return x;
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return std::strtod(buf, nullptr);
}

struct LineFit {
    double slope = std::numeric_limits<double>::quiet_NaN();
    double intercept = std::numeric_limits<double>::quiet_NaN();
};

inline LineFit least_squares(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) return {};
    double xbar = 0.0, ybar = 0.0;
    for (std::size_t i = 0; i < n; ++i) { xbar += x[i]; ybar += y[i]; }
    xbar /= static_cast<double>(n);
    ybar /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - xbar) * (x[i] - xbar);
        sxy += (x[i] - xbar) * (y[i] - ybar);
    }
    if (sxx <= 0.0) return {};
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * xbar;
    return fit;
}

} // namespace divprem

#endif // DIVPREM_NUMERICS_HPP
