#ifndef DIVPREM_UTILITY_HPP
#define DIVPREM_UTILITY_HPP

#include "divprem/errors.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace divprem {

// Normalized risk preference: strictly increasing, strictly concave, with
// u(0) = 0, u'(0) = 1, u'(+inf) = 0, u'(-inf) = +inf.  Implementations may
// supply only value() and marginal(); the inverse marginal and the convex
// conjugate then fall back to monotone root finding.
class Utility {
public:
    virtual ~Utility() = default;

    virtual double value(double x) const = 0;
    virtual double marginal(double x) const = 0;

    // I(y) = (u')^{-1}(y), y > 0.
    virtual double inverse_marginal(double y) const;

    // dI/dy, used by Newton-type solvers.  Default is a central difference.
    virtual double inverse_marginal_slope(double y) const;

    // u*(y) = sup_x {u(x) - x y} = u(I(y)) - y I(y), y > 0.  Throws for
    // y <= 0, where the conjugate is +inf.
    virtual double conjugate(double y) const;
};

class ExponentialUtility final : public Utility {
public:
    explicit ExponentialUtility(double alpha);

    double value(double x) const override;
    double marginal(double x) const override;
    double inverse_marginal(double y) const override;
    double inverse_marginal_slope(double y) const override;
    double conjugate(double y) const override;

    double alpha() const { return alpha_; }

private:
    double alpha_;
};

// Convex combination of two normalized exponentials.  Keeps the normalization
// but has no closed-form inverse marginal, so it exercises the numeric path.
class MixedExponentialUtility final : public Utility {
public:
    MixedExponentialUtility(double weight, double alpha1, double alpha2);

    double value(double x) const override;
    double marginal(double x) const override;

private:
    double weight_;
    double alpha1_;
    double alpha2_;
};

struct ConvolutionResult {
    double value = 0.0;
    double lambda = 0.0; // common marginal utility at the optimal split
    std::vector<double> split;
};

// sup { sum_i u_i(x_i) : sum_i x_i = x }.  Finds the common marginal level
// lambda with sum_i I_i(lambda) = x by bisection on an exponentially expanded
// bracket followed by a secant polish (|constraint| <= 1e-12), then splits
// x_i = I_i(lambda).
ConvolutionResult sup_convolution(std::span<const Utility* const> members, double x);

// Samples the normalization axioms (u(0) = 0, u'(0) = 1, positivity and
// strict decrease of u', the tail limits, and I(u'(x)) = x on a grid).
// Returns false and fills `why` on the first violation.
bool validate_utility(const Utility& u, std::string* why = nullptr);

} // namespace divprem

#endif // DIVPREM_UTILITY_HPP
