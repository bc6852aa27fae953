#ifndef DIVPREM_ROOTFIND_HPP
#define DIVPREM_ROOTFIND_HPP

#include <cmath>
#include <functional>

namespace divprem {

struct RootResult {
    double x = 0.0;
    double f = 0.0;
    int iters = 0;
    bool converged = false;
};

// Root of a strictly decreasing continuous f.  Brackets by doubling steps away
// from x0, bisects, then polishes with safeguarded secant steps.  Converges
// when |f| <= ftol or the bracket width falls below xtol * (1 + |x|).
inline RootResult find_root_decreasing(const std::function<double(double)>& f,
                                       double x0, double scale, double ftol,
                                       double xtol = 1e-15, int maxit = 300) {
    RootResult r;
    double fx0 = f(x0);
    r.iters = 1;
    if (std::abs(fx0) <= ftol) {
        r.x = x0;
        r.f = fx0;
        r.converged = true;
        return r;
    }

    // f decreasing: f > 0 means the root lies to the right.
    double lo, hi, flo, fhi;
    double step = scale;
    if (fx0 > 0.0) {
        lo = x0; flo = fx0;
        hi = x0 + step; fhi = f(hi); ++r.iters;
        while (fhi > 0.0) {
            if (r.iters > maxit) { r.x = hi; r.f = fhi; return r; }
            lo = hi; flo = fhi;
            step *= 2.0;
            hi = x0 + step; fhi = f(hi); ++r.iters;
        }
    } else {
        hi = x0; fhi = fx0;
        lo = x0 - step; flo = f(lo); ++r.iters;
        while (flo < 0.0) {
            if (r.iters > maxit) { r.x = lo; r.f = flo; return r; }
            hi = lo; fhi = flo;
            step *= 2.0;
            lo = x0 - step; flo = f(lo); ++r.iters;
        }
    }

    double best = lo, fbest = flo;
    if (std::abs(fhi) < std::abs(fbest)) { best = hi; fbest = fhi; }
    bool use_secant = false;
    while (r.iters < maxit) {
        if (std::abs(fbest) <= ftol ||
            hi - lo <= xtol * (1.0 + std::abs(lo) + std::abs(hi))) {
            r.x = best; r.f = fbest; r.converged = true;
            return r;
        }
        // Alternate bisection with a secant proposal; bisecting every other
        // step keeps a stuck endpoint from stalling the bracket.
        double mid = 0.5 * (lo + hi);
        if (use_secant && flo != fhi) {
            double s = lo + flo * (hi - lo) / (flo - fhi);
            if (s > lo && s < hi) mid = s;
        }
        use_secant = !use_secant;
        double fm = f(mid); ++r.iters;
        if (std::abs(fm) < std::abs(fbest)) { best = mid; fbest = fm; }
        if (fm > 0.0) { lo = mid; flo = fm; }
        else { hi = mid; fhi = fm; }
    }
    r.x = best; r.f = fbest;
    r.converged = std::abs(fbest) <= ftol;
    return r;
}

} // namespace divprem

#endif // DIVPREM_ROOTFIND_HPP
