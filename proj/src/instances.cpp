#include "divprem/instances.hpp"

#include <cmath>
#include <string>

namespace divprem::instances {

ScenarioTree random_tree(Rng& rng, const TreeOptions& options) {
    const int T = rng.uniform_int(options.min_horizon, options.max_horizon);
    TreeSpec spec;
    spec.horizon = T;
    spec.nodes.push_back({"r", 0, std::nullopt, 1.0});

    std::vector<std::string> current{"r"};
    for (int t = 0; t < T; ++t) {
        std::vector<std::string> next;
        int width = static_cast<int>(current.size());
        for (const std::string& parent : current) {
            int k = rng.uniform_int(1, options.max_children);
            // Keep the slice within the leaf budget; later slices only grow.
            int allowed = options.max_leaves - (width - 1) -
                          static_cast<int>(next.size());
            if (k > allowed) k = std::max(1, allowed);
            --width;

            // Dyadic weights w_j/64 with every w_j >= 1 sum to exactly 1.
            std::vector<int> w(k, 1);
            for (int u = 0; u < 64 - k; ++u) ++w[rng.uniform_int(0, k - 1)];
            for (int j = 0; j < k; ++j) {
                std::string id = parent + "." + static_cast<char>('a' + j);
                spec.nodes.push_back({id, t + 1, parent, w[j] / 64.0});
                next.push_back(std::move(id));
            }
        }
        current = std::move(next);
    }
    return ScenarioTree::build(spec);
}

RandomVariable random_payoff(Rng& rng, const ScenarioTree& tree, double lo, double hi) {
    RandomVariable z;
    z.time = tree.horizon();
    z.values.resize(tree.leaves().size());
    for (double& v : z.values) v = rng.uniform(lo, hi);
    return z;
}

RiskAversionSchedule random_schedule(Rng& rng, int horizon, int max_agents, double lo,
                                     double hi) {
    int n = rng.uniform_int(1, max_agents);
    std::vector<std::vector<double>> alpha(n, std::vector<double>(horizon + 1));
    for (auto& row : alpha)
        for (double& a : row) a = rng.uniform(lo, hi);
    return RiskAversionSchedule(std::move(alpha));
}

InsurancePortfolio random_portfolio(Rng& rng, int max_contracts, int max_horizon) {
    int n = rng.uniform_int(1, max_contracts);
    int T = rng.uniform_int(1, max_horizon);
    InsurancePortfolio pf{T, RiskAversionSchedule::constant(rng.uniform(0.5, 2.0), 1, T),
                          {}};
    for (int i = 0; i < n; ++i) {
        Contract c;
        c.id = "c" + std::to_string(i);
        c.payments.resize(T);
        c.hazard.resize(T);
        for (double& x : c.payments) x = rng.uniform(0.0, 2.0);
        for (double& q : c.hazard) q = rng.uniform() < 0.15 ? 0.0 : rng.uniform(0.02, 0.6);
        pf.contracts.push_back(std::move(c));
    }
    return pf;
}

AdaptedProcess random_allocation(Rng& rng, const ScenarioTree& tree,
                                 const RandomVariable& z, int t, double spread) {
    const int T = tree.horizon();
    AdaptedProcess x;
    x.start = t;
    x.values.resize(T - t + 1);
    for (int s = t; s < T; ++s) {
        x.at(s).resize(tree.slice(s).size());
        for (double& v : x.at(s)) v = rng.uniform(-spread, spread);
    }
    x.at(T).resize(tree.leaves().size());
    for (int leaf : tree.leaves()) {
        double carried = 0.0;
        for (int s = t; s < T; ++s)
            carried += x.at(s)[tree.node(tree.ancestor_at(leaf, s)).slot];
        x.at(T)[tree.node(leaf).slot] = z.values[tree.node(leaf).slot] - carried;
    }
    return x;
}

AdaptedProcess random_positive_martingale(Rng& rng, const ScenarioTree& tree, int t,
                                          bool normalized) {
    RandomVariable terminal;
    terminal.time = tree.horizon();
    terminal.values.resize(tree.leaves().size());
    for (double& v : terminal.values) v = std::exp(rng.uniform(-1.0, 1.0));
    AdaptedProcess full = condexp_process(tree, terminal);

    AdaptedProcess m;
    m.start = t;
    m.values.assign(full.values.begin() + t, full.values.end());
    if (normalized) {
        for (int s = t; s <= tree.horizon(); ++s)
            for (int idx : tree.slice(s)) {
                int anc = tree.ancestor_at(idx, t);
                m.at(s)[tree.node(idx).slot] /= full.at(t)[tree.node(anc).slot];
            }
    }
    return m;
}

} // namespace divprem::instances
