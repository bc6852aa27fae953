#include "divprem/utility.hpp"

#include "divprem/rootfind.hpp"

#include <cmath>

namespace divprem {

double Utility::inverse_marginal(double y) const {
    if (!(y > 0.0))
        throw Error("inverse_marginal: y must be positive, got " + std::to_string(y));
    auto f = [&](double z) { return marginal(z) - y; }; // decreasing in z
    RootResult r = find_root_decreasing(f, 0.0, 1.0, 1e-13 * std::max(1.0, y));
    if (!r.converged) throw Error("inverse_marginal: root search failed");
    return r.x;
}

double Utility::inverse_marginal_slope(double y) const {
    double h = 1e-6 * std::max(std::abs(y), 1e-3);
    if (y - h <= 0.0) h = 0.5 * y;
    return (inverse_marginal(y + h) - inverse_marginal(y - h)) / (2.0 * h);
}

double Utility::conjugate(double y) const {
    if (!(y > 0.0))
        throw Error("conjugate: y must be positive (the conjugate is +inf for y <= 0)");
    double x = inverse_marginal(y);
    return value(x) - y * x;
}

ExponentialUtility::ExponentialUtility(double alpha) : alpha_(alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw Error("exponential utility: alpha must be positive and finite");
}

double ExponentialUtility::value(double x) const {
    return -std::expm1(-alpha_ * x) / alpha_;
}

double ExponentialUtility::marginal(double x) const { return std::exp(-alpha_ * x); }

double ExponentialUtility::inverse_marginal(double y) const {
    if (!(y > 0.0))
        throw Error("inverse_marginal: y must be positive, got " + std::to_string(y));
    return -std::log(y) / alpha_;
}

double ExponentialUtility::inverse_marginal_slope(double y) const {
    return -1.0 / (alpha_ * y);
}

double ExponentialUtility::conjugate(double y) const {
    if (!(y > 0.0))
        throw Error("conjugate: y must be positive (the conjugate is +inf for y <= 0)");
    return (1.0 - y + y * std::log(y)) / alpha_;
}

MixedExponentialUtility::MixedExponentialUtility(double weight, double alpha1,
                                                 double alpha2)
    : weight_(weight), alpha1_(alpha1), alpha2_(alpha2) {
    if (!(weight > 0.0) || !(weight < 1.0))
        throw Error("mixed exponential utility: weight must lie in (0, 1)");
    if (!(alpha1 > 0.0) || !(alpha2 > 0.0) || !std::isfinite(alpha1) ||
        !std::isfinite(alpha2))
        throw Error("mixed exponential utility: alphas must be positive and finite");
}

double MixedExponentialUtility::value(double x) const {
    return -weight_ * std::expm1(-alpha1_ * x) / alpha1_ -
           (1.0 - weight_) * std::expm1(-alpha2_ * x) / alpha2_;
}

double MixedExponentialUtility::marginal(double x) const {
    return weight_ * std::exp(-alpha1_ * x) + (1.0 - weight_) * std::exp(-alpha2_ * x);
}

ConvolutionResult sup_convolution(std::span<const Utility* const> members, double x) {
    if (members.empty()) throw Error("sup_convolution: empty utility list");
    ConvolutionResult res;
    if (members.size() == 1) {
        res.value = members[0]->value(x);
        res.lambda = members[0]->marginal(x);
        res.split = {x};
        return res;
    }

    // lambda = exp(t); the constraint g(t) = sum_i I_i(exp(t)) - x is strictly
    // decreasing in t and vanishes at the optimal split.  t = 0 anchors at
    // lambda = 1 where every I_i is 0.
    auto g = [&](double t) {
        double lam = std::exp(t);
        double s = 0.0;
        for (const Utility* u : members) s += u->inverse_marginal(lam);
        return s - x;
    };
    RootResult r = find_root_decreasing(g, 0.0, 1.0, 1e-12);
    if (!r.converged)
        throw Error("sup_convolution: root bracketing failed at x = " + std::to_string(x));

    res.lambda = std::exp(r.x);
    res.split.reserve(members.size());
    for (const Utility* u : members) {
        double xi = u->inverse_marginal(res.lambda);
        res.split.push_back(xi);
        res.value += u->value(xi);
    }
    return res;
}

bool validate_utility(const Utility& u, std::string* why) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };

    if (std::abs(u.value(0.0)) > 1e-12) return fail("u(0) != 0");
    if (std::abs(u.marginal(0.0) - 1.0) > 1e-12) return fail("u'(0) != 1");

    double prev_m = std::numeric_limits<double>::infinity();
    for (double x = -8.0; x <= 8.0 + 1e-9; x += 0.5) {
        double m = u.marginal(x);
        if (!(m > 0.0)) return fail("u' not positive at x = " + std::to_string(x));
        if (!(m < prev_m)) return fail("u' not strictly decreasing at x = " + std::to_string(x));
        prev_m = m;
    }

    for (double x = -5.0; x <= 5.0 + 1e-9; x += 0.5) {
        double back = u.inverse_marginal(u.marginal(x));
        if (std::abs(back - x) > 1e-10)
            return fail("I(u'(x)) != x at x = " + std::to_string(x));
    }

    // Tail limits, probed on a doubling grid.
    double L = 1.0;
    bool upper = false, lower = false;
    for (int k = 0; k < 44 && !(upper && lower); ++k) {
        if (u.marginal(L) < 1e-10) upper = true;
        if (u.marginal(-L) > 1e10) lower = true;
        L *= 2.0;
    }
    if (!upper) return fail("u'(+inf) does not approach 0");
    if (!lower) return fail("u'(-inf) does not diverge");
    return true;
}

} // namespace divprem
