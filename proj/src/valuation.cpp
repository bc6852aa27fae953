#include "divprem/valuation.hpp"

#include "divprem/numerics.hpp"
#include "divprem/rootfind.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace divprem {

namespace {

void check_inputs(const ScenarioTree& tree, const RandomVariable& z,
                  const RiskAversionSchedule& schedule) {
    if (z.time != tree.horizon())
        throw Error("terminal payoff must live at the horizon " +
                    std::to_string(tree.horizon()) + ", got time " +
                    std::to_string(z.time));
    if (z.values.size() != tree.leaves().size())
        throw Error("terminal payoff has " + std::to_string(z.values.size()) +
                    " values but the tree has " + std::to_string(tree.leaves().size()) +
                    " leaves");
    if (schedule.horizon() != tree.horizon())
        throw Error("schedule horizon " + std::to_string(schedule.horizon()) +
                    " does not match tree horizon " + std::to_string(tree.horizon()));
}

void check_time(const ScenarioTree& tree, int t) {
    if (t < 0 || t > tree.horizon())
        throw Error("time " + std::to_string(t) + " outside [0, " +
                    std::to_string(tree.horizon()) + "]");
}

// Backward recursion with a per-node one-step entropic operator.
AdaptedProcess backward_entropic(const ScenarioTree& tree, const RandomVariable& z,
                                 const RiskAversionSchedule& schedule, bool up) {
    AdaptedProcess out;
    out.start = 0;
    out.values.resize(tree.horizon() + 1);
    out.values[tree.horizon()] = z.values;
    std::vector<double> vals, probs;
    for (int t = tree.horizon() - 1; t >= 0; --t) {
        double beta = schedule.beta(t + 1);
        auto& cur = out.values[t];
        cur.resize(tree.slice(t).size());
        const auto& nxt = out.values[t + 1];
        for (int idx : tree.slice(t)) {
            const TreeNode& n = tree.node(idx);
            vals.clear();
            probs.clear();
            for (int c : n.children) {
                vals.push_back(nxt[tree.node(c).slot]);
                probs.push_back(tree.node(c).prob);
            }
            cur[n.slot] = up ? entropic_up(beta, vals, probs)
                             : entropic_down(beta, vals, probs);
        }
    }
    return out;
}

} // namespace

AdaptedProcess value_process(const ScenarioTree& tree, const RandomVariable& z,
                             const RiskAversionSchedule& schedule) {
    check_inputs(tree, z, schedule);
    return backward_entropic(tree, z, schedule, /*up=*/false);
}

AdaptedProcess premium_process(const ScenarioTree& tree, const RandomVariable& z,
                               const RiskAversionSchedule& schedule) {
    check_inputs(tree, z, schedule);
    return backward_entropic(tree, z, schedule, /*up=*/true);
}

AdaptedProcess utility_process(const AdaptedProcess& value,
                               const RiskAversionSchedule& schedule) {
    AdaptedProcess u = value;
    for (int t = u.start; t <= u.end(); ++t) {
        double beta = schedule.beta(t);
        for (double& x : u.at(t)) x = -std::expm1(-beta * x) / beta;
    }
    return u;
}

namespace {

// Dual objective without input validation; the public entry point checks
// positivity and the martingale property first, while the allocation
// diagnostics use this directly so a bad certificate is reported, not thrown.
// The conjugate is continued to y = 0 by its limit 1/alpha, which absorbs
// martingale values that underflow at extreme payoffs.
RandomVariable dual_objective_value(const ScenarioTree& tree, const AdaptedProcess& m,
                                    const RandomVariable& z,
                                    const RiskAversionSchedule& schedule, int t) {
    const int T = tree.horizon();
    RandomVariable acc{t, std::vector<double>(tree.slice(t).size(), 0.0)};
    for (int s = t; s <= T; ++s) {
        double alpha_s = schedule.aggregate_alpha(s);
        RandomVariable conj{s, std::vector<double>(tree.slice(s).size())};
        for (std::size_t k = 0; k < conj.values.size(); ++k) {
            double y = m.at(s)[k];
            conj.values[k] = (1.0 - y + (y > 0.0 ? y * std::log(y) : 0.0)) / alpha_s;
        }
        RandomVariable cond = condexp(tree, conj, t);
        for (std::size_t k = 0; k < acc.values.size(); ++k)
            acc.values[k] += cond.values[k];
    }
    RandomVariable payoff{T, std::vector<double>(tree.leaves().size())};
    for (std::size_t k = 0; k < payoff.values.size(); ++k)
        payoff.values[k] = m.at(T)[k] * z.values[k];
    RandomVariable cond = condexp(tree, payoff, t);
    for (std::size_t k = 0; k < acc.values.size(); ++k)
        acc.values[k] += cond.values[k];
    return acc;
}

} // namespace

RandomVariable utility_U(const ScenarioTree& tree, const RandomVariable& z,
                         const RiskAversionSchedule& schedule, int t) {
    check_time(tree, t);
    AdaptedProcess v = value_process(tree, z, schedule);
    double beta = schedule.beta(t);
    RandomVariable u = v.slice_rv(t);
    for (double& x : u.values) x = -std::expm1(-beta * x) / beta;
    return u;
}

AllocationResult optimal_allocation(const ScenarioTree& tree, const RandomVariable& z,
                                    const RiskAversionSchedule& schedule, int t) {
    check_time(tree, t);
    AdaptedProcess v = value_process(tree, z, schedule);
    const int T = tree.horizon();
    const int n = schedule.agents();

    AllocationResult res;
    res.start = t;
    res.allocation.start = t;
    res.allocation.values.resize(T - t + 1);
    res.dual_martingale.start = t;
    res.dual_martingale.values.resize(T - t + 1);
    res.agent_allocation.assign(n, {});
    for (int i = 0; i < n; ++i) {
        res.agent_allocation[i].start = t;
        res.agent_allocation[i].values.resize(T - t + 1);
    }

    // cumulative[s] holds G = beta_t V_t + sum_{r=t+1..s} beta_r (V_r - V_{r-1})
    // along each path; then X_s = G / alpha_s and M_s = exp(-G).
    std::vector<std::vector<double>> cumulative(T - t + 1);
    for (int s = t; s <= T; ++s) {
        auto& g = cumulative[s - t];
        g.resize(tree.slice(s).size());
        for (int idx : tree.slice(s)) {
            const TreeNode& node = tree.node(idx);
            if (s == t) {
                g[node.slot] = schedule.beta(t) * v.at(t)[node.slot];
            } else {
                double parent_g = cumulative[s - t - 1][tree.node(node.parent).slot];
                double dv = v.at(s)[node.slot] - v.at(s - 1)[tree.node(node.parent).slot];
                g[node.slot] = parent_g + schedule.beta(s) * dv;
            }
        }
        double alpha_s = schedule.aggregate_alpha(s);
        auto& x = res.allocation.values[s - t];
        auto& m = res.dual_martingale.values[s - t];
        x.resize(g.size());
        m.resize(g.size());
        for (std::size_t k = 0; k < g.size(); ++k) {
            x[k] = g[k] / alpha_s;
            m[k] = std::exp(-g[k]);
        }
        for (int i = 0; i < n; ++i) {
            auto& xi = res.agent_allocation[i].values[s - t];
            xi.resize(g.size());
            double ai = schedule.alpha(i, s);
            for (std::size_t k = 0; k < g.size(); ++k) xi[k] = g[k] / ai;
        }
    }

    res.diagnostics.martingale_residual =
        is_martingale(tree, res.dual_martingale, 0.0).max_residual;

    double sum_res = 0.0;
    for (int leaf : tree.leaves()) {
        double sum = 0.0;
        for (int s = t; s <= T; ++s) {
            int anc = tree.ancestor_at(leaf, s);
            sum += res.allocation.at(s)[tree.node(anc).slot];
        }
        sum_res = std::max(sum_res, std::abs(sum - z.values[tree.node(leaf).slot]));
    }
    res.diagnostics.allocation_sum_residual = sum_res;

    RandomVariable dual = dual_objective_value(tree, res.dual_martingale, z, schedule, t);
    RandomVariable u = v.slice_rv(t);
    double beta_t = schedule.beta(t);
    double gap = 0.0;
    for (std::size_t k = 0; k < u.values.size(); ++k) {
        double ut = -std::expm1(-beta_t * u.values[k]) / beta_t;
        gap = std::max(gap, std::abs(dual.values[k] - ut));
    }
    res.diagnostics.duality_gap = gap;
    return res;
}

AdaptedProcess residual_allocation(const ScenarioTree& tree, const RandomVariable& z,
                                   const RiskAversionSchedule& schedule, int t) {
    check_time(tree, t);
    AdaptedProcess h = premium_process(tree, z, schedule);
    const int T = tree.horizon();

    AdaptedProcess out;
    out.start = t;
    out.values.resize(T - t + 1);
    std::vector<std::vector<double>> cumulative(T - t + 1);
    for (int s = t; s <= T; ++s) {
        auto& g = cumulative[s - t];
        g.resize(tree.slice(s).size());
        auto& x = out.values[s - t];
        x.resize(g.size());
        double alpha_s = schedule.aggregate_alpha(s);
        for (int idx : tree.slice(s)) {
            const TreeNode& node = tree.node(idx);
            if (s == t) {
                g[node.slot] = 0.0;
            } else {
                double parent_g = cumulative[s - t - 1][tree.node(node.parent).slot];
                double dh = h.at(s)[node.slot] - h.at(s - 1)[tree.node(node.parent).slot];
                g[node.slot] = parent_g + schedule.beta(s) * dh;
            }
            x[node.slot] = -g[node.slot] / alpha_s;
        }
    }
    return out;
}

double check_time_consistency(const ScenarioTree& tree, const RandomVariable& z,
                              const RiskAversionSchedule& schedule, int t, int tau) {
    check_time(tree, t);
    if (tau < 0 || t + tau > tree.horizon())
        throw Error("time consistency: t + tau = " + std::to_string(t + tau) +
                    " outside [0, " + std::to_string(tree.horizon()) + "]");
    AdaptedProcess h = premium_process(tree, z, schedule);
    RandomVariable inner = extend_to_leaves(tree, h.slice_rv(t + tau));
    AdaptedProcess h2 = premium_process(tree, inner, schedule);
    double residual = 0.0;
    for (std::size_t k = 0; k < h.at(t).size(); ++k)
        residual = std::max(residual, std::abs(h.at(t)[k] - h2.at(t)[k]));
    return residual;
}

RandomVariable dual_objective(const ScenarioTree& tree, const AdaptedProcess& m,
                              const RandomVariable& z,
                              const RiskAversionSchedule& schedule, int t,
                              double martingale_tol) {
    check_inputs(tree, z, schedule);
    check_time(tree, t);
    const int T = tree.horizon();
    if (m.start > t || m.end() < T)
        throw Error("dual candidate must cover [" + std::to_string(t) + ", " +
                    std::to_string(T) + "]");
    for (int s = t; s <= T; ++s)
        for (double y : m.at(s))
            if (!(y > 0.0)) throw Error("dual candidate must be strictly positive");
    MartingaleCheck mc = is_martingale(tree, m, martingale_tol);
    if (!mc.ok)
        throw Error("dual candidate is not a martingale: residual " +
                    std::to_string(mc.max_residual) + " > " +
                    std::to_string(martingale_tol));

    return dual_objective_value(tree, m, z, schedule, t);
}

namespace {

// Dense Gaussian elimination with partial pivoting; the solver trees are
// small, so no factorization library is warranted.
bool solve_dense(std::vector<std::vector<double>>& a, std::vector<double>& b) {
    const int n = static_cast<int>(b.size());
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (std::abs(a[pivot][col]) < 1e-300) return false;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (int r = col + 1; r < n; ++r) {
            double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (int col = n - 1; col >= 0; --col) {
        double s = b[col];
        for (int c = col + 1; c < n; ++c) s -= a[col][c] * b[c];
        b[col] = s / a[col][col];
    }
    return true;
}

} // namespace

GeneralSolveResult general_allocation_solve(const ScenarioTree& tree,
                                            const RandomVariable& z,
                                            std::span<const Utility* const> per_time,
                                            int t, const GeneralSolveOptions& options) {
    check_time(tree, t);
    const int T = tree.horizon();
    if (z.time != T || z.values.size() != tree.leaves().size())
        throw Error("terminal payoff must live on the leaves");
    if (static_cast<int>(per_time.size()) != T + 1)
        throw Error("per-time utility list must have horizon + 1 entries");
    for (int s = t; s <= T; ++s)
        if (per_time[s] == nullptr)
            throw Error("missing utility for time " + std::to_string(s));
    if (tree.leaf_count() > options.max_leaves)
        throw Error("tree too large for the dense solver: " +
                    std::to_string(tree.leaf_count()) + " leaves > " +
                    std::to_string(options.max_leaves));

    GeneralSolveResult result;
    result.martingale.start = t;
    result.martingale.values.resize(T - t + 1);
    result.allocation.start = t;
    result.allocation.values.resize(T - t + 1);
    for (int s = t; s <= T; ++s) {
        result.martingale.at(s).assign(tree.slice(s).size(), 1.0);
        result.allocation.at(s).assign(tree.slice(s).size(), 0.0);
    }

    // Each time-t node roots an independent subproblem.
    for (int rootIdx : tree.slice(t)) {
        std::vector<int> leaves_sub;
        for (int leaf : tree.leaves())
            if (tree.ancestor_at(leaf, t) == rootIdx) leaves_sub.push_back(leaf);
        const int nl = static_cast<int>(leaves_sub.size());
        const double root_pp = tree.node(rootIdx).path_prob;

        // Ancestors and conditional weights per subtree leaf.
        std::vector<std::vector<int>> anc(nl, std::vector<int>(T - t + 1));
        std::vector<double> w(nl);
        for (int l = 0; l < nl; ++l) {
            for (int s = t; s <= T; ++s) anc[l][s - t] = tree.ancestor_at(leaves_sub[l], s);
            w[l] = tree.node(leaves_sub[l]).path_prob / root_pp;
        }

        std::vector<double> logy(nl, 0.0);

        // M_s on the subtree from the current leaf values.
        auto compute_m = [&](const std::vector<double>& ly,
                             std::vector<std::vector<double>>& m_nodes) {
            for (int s = t; s <= T; ++s)
                m_nodes[s - t].assign(tree.slice(s).size(), 0.0);
            for (int l = 0; l < nl; ++l) {
                double y = std::exp(ly[l]);
                for (int s = t; s <= T; ++s) {
                    const TreeNode& v = tree.node(anc[l][s - t]);
                    m_nodes[s - t][v.slot] += y * tree.node(leaves_sub[l]).path_prob /
                                              tree.node(anc[l][s - t]).path_prob;
                }
            }
        };

        std::vector<std::vector<double>> m_nodes(T - t + 1);
        std::vector<double> res(nl);
        auto compute_residual = [&](const std::vector<double>& ly) {
            compute_m(ly, m_nodes);
            double worst = 0.0;
            for (int l = 0; l < nl; ++l) {
                double sum = 0.0;
                for (int s = t; s <= T; ++s)
                    sum += per_time[s]->inverse_marginal(
                        m_nodes[s - t][tree.node(anc[l][s - t]).slot]);
                res[l] = sum - z.values[tree.node(leaves_sub[l]).slot];
                worst = std::max(worst, std::abs(res[l]));
            }
            return worst;
        };

        double merit = compute_residual(logy);
        int iter = 0;
        std::vector<double> res_base, trial(nl);
        while (merit > options.tol && iter < options.max_iterations) {
            ++iter;
            res_base = res;

            // Jacobian of the residual in log-leaf coordinates.
            std::vector<std::vector<double>> jac(nl, std::vector<double>(nl, 0.0));
            for (int l = 0; l < nl; ++l) {
                for (int s = t; s <= T; ++s) {
                    const TreeNode& v = tree.node(anc[l][s - t]);
                    double slope =
                        per_time[s]->inverse_marginal_slope(m_nodes[s - t][v.slot]);
                    for (int k = 0; k < nl; ++k) {
                        if (anc[k][s - t] != anc[l][s - t]) continue;
                        double yk = std::exp(logy[k]);
                        jac[l][k] += slope * yk * tree.node(leaves_sub[k]).path_prob /
                                     v.path_prob;
                    }
                }
            }
            std::vector<double> step(nl);
            for (int l = 0; l < nl; ++l) step[l] = -res_base[l];
            bool solved = solve_dense(jac, step);

            bool accepted = false;
            if (solved) {
                double lambda = 1.0;
                for (int back = 0; back < 24 && !accepted; ++back) {
                    for (int l = 0; l < nl; ++l) trial[l] = logy[l] + lambda * step[l];
                    double m2 = compute_residual(trial);
                    if (m2 <= (1.0 - 1e-4 * lambda) * merit) {
                        logy = trial;
                        merit = m2;
                        accepted = true;
                    } else {
                        lambda *= 0.5;
                    }
                }
            }
            if (!accepted) {
                // Componentwise bisection sweep: each residual is strictly
                // decreasing in its own log-leaf value.
                for (int l = 0; l < nl; ++l) {
                    auto f = [&](double candidate) {
                        std::vector<double> probe = logy;
                        probe[l] = candidate;
                        compute_residual(probe);
                        return res[l];
                    };
                    RootResult rr = find_root_decreasing(f, logy[l], 1.0,
                                                         0.1 * options.tol, 1e-13, 120);
                    logy[l] = rr.x;
                }
                merit = compute_residual(logy);
            }
        }

        merit = compute_residual(logy);
        result.max_residual = std::max(result.max_residual, merit);
        result.iterations = std::max(result.iterations, iter);
        for (int s = t; s <= T; ++s) {
            for (int idx : tree.slice(s)) {
                if (tree.ancestor_at(idx, t) != rootIdx) continue;
                double mval = m_nodes[s - t][tree.node(idx).slot];
                result.martingale.at(s)[tree.node(idx).slot] = mval;
                result.allocation.at(s)[tree.node(idx).slot] =
                    per_time[s]->inverse_marginal(mval);
            }
        }
    }

    result.converged = result.max_residual <= options.tol;
    return result;
}

ValuationResult evaluate(const ScenarioTree& tree, const RandomVariable& z,
                         const RiskAversionSchedule& schedule, int t) {
    ValuationResult r;
    r.start = t;
    r.premium = premium_process(tree, z, schedule);
    r.value = value_process(tree, z, schedule);
    r.utility = utility_process(r.value, schedule);
    r.allocation = optimal_allocation(tree, z, schedule, t);
    return r;
}

} // namespace divprem
