#include "divprem/asymptotics.hpp"

#include "divprem/numerics.hpp"
#include "divprem/valuation.hpp"

#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace divprem {

namespace {

int thread_budget(std::size_t points) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("DIVPREM_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) hw = static_cast<unsigned>(v);
    }
    if (hw > points) hw = static_cast<unsigned>(points);
    return static_cast<int>(hw);
}

// Grid points are independent; each writes only its own slot, so the report
// is deterministic regardless of scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    int threads = thread_budget(count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&, w]() {
            try {
                for (std::size_t i = w; i < count; i += threads) fn(i);
            } catch (...) {
                std::scoped_lock lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

void fill_derived(SweepReport& report) {
    std::vector<double> lx, ly;
    for (const SweepPoint& pt : report.points) {
        double gap = pt.premium - pt.reference;
        if (gap > 0.0 && pt.param > 0.0) {
            lx.push_back(std::log(pt.param));
            ly.push_back(std::log(gap));
        }
    }
    report.loglog_slope = least_squares(lx, ly).slope;

    report.residual_ratios.clear();
    for (const SweepPoint& a : report.points)
        for (const SweepPoint& b : report.points)
            if (b.param == 2.0 * a.param && b.residual != 0.0)
                report.residual_ratios.push_back(a.residual / b.residual);
}

SweepReport n_sweep(const ScenarioTree& tree, const RandomVariable& z,
                    double base_alpha, std::span<const int> n_grid) {
    if (n_grid.empty()) throw Error("sweep grid is empty");
    for (int n : n_grid)
        if (n < 1) throw Error("sweep grid entries must be >= 1");

    const int T = tree.horizon();
    AdaptedProcess dz = martingale_differences(tree, z);
    std::vector<double> second_moment(T + 1, 0.0);
    for (int t = 1; t <= T; ++t) {
        RandomVariable sq{t, dz.at(t)};
        for (double& x : sq.values) x *= x;
        second_moment[t] = expectation(tree, sq);
    }
    const double reference = expectation(tree, z);

    SweepReport report;
    report.points.resize(n_grid.size());
    parallel_for(n_grid.size(), [&](std::size_t k) {
        int n = n_grid[k];
        RiskAversionSchedule schedule =
            RiskAversionSchedule::constant(base_alpha, n, T);
        AdaptedProcess h = premium_process(tree, z, schedule);
        SweepPoint pt;
        pt.param = n;
        pt.premium = h.at(0)[0];
        pt.reference = reference;
        for (int t = 1; t <= T; ++t)
            pt.expansion_term += 0.5 * schedule.beta(t) * second_moment[t];
        pt.residual = pt.premium - pt.reference - pt.expansion_term;
        report.points[k] = pt;
    });
    fill_derived(report);
    return report;
}

} // namespace

SweepReport large_n_sweep(const ScenarioTree& tree, const RandomVariable& z,
                          double base_alpha, std::span<const int> n_grid) {
    return n_sweep(tree, z, base_alpha, n_grid);
}

SweepReport expansion_check(const ScenarioTree& tree, const RandomVariable& z,
                            double base_alpha, std::span<const int> n_grid) {
    return n_sweep(tree, z, base_alpha, n_grid);
}

SweepReport time_refinement_sweep(const PayoffGenerator& generator,
                                  std::span<const int> m_grid, double alpha) {
    if (m_grid.empty()) throw Error("sweep grid is empty");
    for (int m : m_grid)
        if (m < 1) throw Error("sweep grid entries must be >= 1");

    SweepReport report;
    report.points.resize(m_grid.size());
    parallel_for(m_grid.size(), [&](std::size_t k) {
        int m = m_grid[k];
        auto [tree, z] = generator(m);
        if (tree.size() > 1'000'000)
            throw Error("tree-size budget exceeded at m = " + std::to_string(m) + ": " +
                        std::to_string(tree.size()) + " nodes");
        RiskAversionSchedule schedule =
            RiskAversionSchedule::constant(alpha, 1, tree.horizon());
        AdaptedProcess h = premium_process(tree, z, schedule);
        AdaptedProcess dz = martingale_differences(tree, z);
        SweepPoint pt;
        pt.param = m;
        pt.premium = h.at(0)[0];
        pt.reference = expectation(tree, z);
        for (int t = 1; t <= tree.horizon(); ++t) {
            RandomVariable sq{t, dz.at(t)};
            for (double& x : sq.values) x *= x;
            pt.expansion_term += 0.5 * schedule.beta(t) * expectation(tree, sq);
        }
        pt.residual = pt.premium - pt.reference - pt.expansion_term;
        report.points[k] = pt;
    });
    fill_derived(report);
    return report;
}

std::pair<ScenarioTree, RandomVariable> coin_flip_payoff(int m, double p, double low,
                                                         double high) {
    if (m < 1) throw Error("coin flip payoff: m must be >= 1");
    if (!(p > 0.0) || !(p < 1.0)) throw Error("coin flip payoff: p must lie in (0, 1)");
    TreeSpec spec;
    spec.horizon = m;
    spec.nodes.push_back({"r", 0, std::nullopt, 1.0});
    std::string down = "d1", up = "u1";
    spec.nodes.push_back({down, 1, std::string("r"), 1.0 - p});
    spec.nodes.push_back({up, 1, std::string("r"), p});
    for (int t = 2; t <= m; ++t) {
        std::string d2 = "d" + std::to_string(t), u2 = "u" + std::to_string(t);
        spec.nodes.push_back({d2, t, down, 1.0});
        spec.nodes.push_back({u2, t, up, 1.0});
        down = d2;
        up = u2;
    }
    ScenarioTree tree = ScenarioTree::build(spec);
    RandomVariable z{m, std::vector<double>(2)};
    z.values[tree.node(tree.index_of(down)).slot] = low;
    z.values[tree.node(tree.index_of(up)).slot] = high;
    return {std::move(tree), std::move(z)};
}

double divergence_partial_sum(double alpha, int n, double delta) {
    if (!(alpha > 0.0)) throw Error("divergence_partial_sum: alpha must be positive");
    if (!(delta > 0.0)) throw Error("divergence_partial_sum: delta must be positive");
    return n / alpha * ((1.0 + delta) * std::log1p(delta) - delta);
}

} // namespace divprem
