#include "divprem/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace divprem::oracle {

int GridSpec::points() const {
    if (!(step > 0.0)) throw Error("grid step must be positive");
    if (!(hi > lo)) throw Error("grid range must be nonempty");
    return static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
}

ConvolutionScan grid_sup_convolution(std::span<const Utility* const> members,
                                     double x, const GridSpec& grid) {
    const int n = static_cast<int>(members.size());
    if (n < 1) throw Error("grid_sup_convolution: empty utility list");
    if (n > 3) throw Error("grid_sup_convolution: at most 3 members, got " +
                           std::to_string(n));

    ConvolutionScan best;
    if (n == 1) {
        best.value = members[0]->value(x);
        best.split = {x};
        best.tolerance = 0.0;
        return best;
    }

    const int pts = grid.points();
    std::uint64_t cells = 1;
    for (int d = 0; d < n - 1; ++d) {
        cells *= static_cast<std::uint64_t>(pts);
        if (cells > grid.budget)
            throw Error("grid budget exceeded: " + std::to_string(cells) + " cells > " +
                        std::to_string(grid.budget));
    }

    best.value = -std::numeric_limits<double>::infinity();
    best.split.assign(n, 0.0);
    std::vector<double> xs(n, 0.0);
    std::vector<int> odo(n - 1, 0);
    for (std::uint64_t cell = 0; cell < cells; ++cell) {
        double sum = 0.0;
        for (int d = 0; d < n - 1; ++d) {
            xs[d] = grid.lo + grid.step * odo[d];
            sum += xs[d];
        }
        xs[n - 1] = x - sum;
        double val = 0.0;
        for (int d = 0; d < n; ++d) val += members[d]->value(xs[d]);
        if (val > best.value) {
            best.value = val;
            best.split = xs;
        }
        for (int d = 0; d < n - 1; ++d) {
            if (++odo[d] < pts) break;
            odo[d] = 0;
        }
    }

    // Bound the grid suboptimality by the largest marginal over the box; the
    // absorbing member may leave the box by (n-1) range widths.
    double absorbed_lo = x - (n - 1) * std::max(std::abs(grid.lo), std::abs(grid.hi));
    double edge = std::min(grid.lo, absorbed_lo);
    double lip = 0.0;
    for (const Utility* u : members) lip = std::max(lip, u->marginal(edge));
    best.tolerance = (n - 1) * grid.step * lip;
    return best;
}

namespace {

struct Slot {
    int agent = 0;
    int time = 0;
    int node = 0; // tree node index
};

} // namespace

AllocationScan grid_allocation_search(
    const ScenarioTree& tree, const RandomVariable& z,
    const std::vector<std::vector<const Utility*>>& utilities, const GridSpec& grid) {
    const int T = tree.horizon();
    const int n = static_cast<int>(utilities.size());
    if (n < 1) throw Error("grid_allocation_search: no agents");
    for (const auto& row : utilities)
        if (static_cast<int>(row.size()) != T + 1)
            throw Error("grid_allocation_search: each agent needs horizon + 1 utilities");
    if (z.time != T || z.values.size() != tree.leaves().size())
        throw Error("grid_allocation_search: payoff must live on the leaves");

    // Free slots: every (agent, time, node) except the last agent's terminal
    // slot, which absorbs the pathwise constraint.
    std::vector<Slot> slots;
    for (int s = 0; s <= T; ++s)
        for (int i = 0; i < n; ++i) {
            if (i == n - 1 && s == T) continue;
            for (int idx : tree.slice(s)) slots.push_back({i, s, idx});
        }
    const int dims = static_cast<int>(slots.size());
    const int pts = grid.points();

    std::uint64_t cells = 1;
    for (int d = 0; d < dims; ++d) {
        cells *= static_cast<std::uint64_t>(pts);
        if (cells > grid.budget)
            throw Error("grid budget exceeded: >= " + std::to_string(cells) +
                        " cells > " + std::to_string(grid.budget));
    }

    // Per-leaf list of slots on its path, and per-slot probability weight.
    std::vector<std::vector<int>> leaf_slots(tree.leaves().size());
    for (int leaf : tree.leaves()) {
        auto& list = leaf_slots[tree.node(leaf).slot];
        for (int d = 0; d < dims; ++d)
            if (tree.ancestor_at(leaf, slots[d].time) == slots[d].node) list.push_back(d);
    }
    std::vector<double> weight(dims);
    for (int d = 0; d < dims; ++d) weight[d] = tree.node(slots[d].node).path_prob;

    const Utility* absorber = utilities[n - 1][T];
    std::vector<double> vals(dims, grid.lo);
    std::vector<int> odo(dims, 0);

    AllocationScan best;
    best.objective = -std::numeric_limits<double>::infinity();
    std::vector<double> best_vals;

    for (std::uint64_t cell = 0; cell < cells; ++cell) {
        double obj = 0.0;
        for (int d = 0; d < dims; ++d)
            obj += weight[d] * utilities[slots[d].agent][slots[d].time]->value(vals[d]);
        for (int leaf : tree.leaves()) {
            const TreeNode& ln = tree.node(leaf);
            double carried = 0.0;
            for (int d : leaf_slots[ln.slot]) carried += vals[d];
            obj += ln.path_prob * absorber->value(z.values[ln.slot] - carried);
        }
        if (obj > best.objective) {
            best.objective = obj;
            best_vals = vals;
        }
        for (int d = 0; d < dims; ++d) {
            if (++odo[d] < pts) {
                vals[d] = grid.lo + grid.step * odo[d];
                break;
            }
            odo[d] = 0;
            vals[d] = grid.lo;
        }
    }

    best.allocation.assign(n, {});
    for (int i = 0; i < n; ++i) {
        best.allocation[i].start = 0;
        best.allocation[i].values.resize(T + 1);
        for (int s = 0; s <= T; ++s)
            best.allocation[i].values[s].assign(tree.slice(s).size(), 0.0);
    }
    for (int d = 0; d < dims; ++d)
        best.allocation[slots[d].agent].at(slots[d].time)[tree.node(slots[d].node).slot] =
            best_vals[d];
    for (int leaf : tree.leaves()) {
        const TreeNode& ln = tree.node(leaf);
        double carried = 0.0;
        for (int d : leaf_slots[ln.slot]) carried += best_vals[d];
        best.allocation[n - 1].at(T)[ln.slot] = z.values[ln.slot] - carried;
    }

    double z_lo = *std::min_element(z.values.begin(), z.values.end());
    int max_path_slots = 0;
    for (const auto& list : leaf_slots)
        max_path_slots = std::max(max_path_slots, static_cast<int>(list.size()));
    double absorbed_lo =
        z_lo - max_path_slots * std::max(std::abs(grid.lo), std::abs(grid.hi));
    double lip = absorber->marginal(std::min(grid.lo, absorbed_lo));
    for (const auto& row : utilities)
        for (const Utility* u : row) lip = std::max(lip, u->marginal(grid.lo));
    best.tolerance = dims * grid.step * lip;

    AdaptedProcess marg = best.allocation[0];
    for (int s = 0; s <= T; ++s)
        for (double& v : marg.at(s)) v = utilities[0][s]->marginal(v);
    best.martingale_residual = is_martingale(tree, marg, 0.0).max_residual;
    return best;
}

std::vector<double> utility_components(
    const ScenarioTree& tree,
    const std::vector<std::vector<const Utility*>>& utilities,
    const std::vector<AdaptedProcess>& allocation) {
    const int T = tree.horizon();
    const int n = static_cast<int>(utilities.size());
    if (static_cast<int>(allocation.size()) != n)
        throw Error("utility_components: allocation/agents mismatch");
    std::vector<double> components;
    components.reserve(n * (T + 1));
    for (int i = 0; i < n; ++i) {
        for (int s = 0; s <= T; ++s) {
            RandomVariable u{s, allocation[i].at(s)};
            for (double& v : u.values) v = utilities[i][s]->value(v);
            components.push_back(expectation(tree, u));
        }
    }
    return components;
}

GapReport duality_gap(const ScenarioTree& tree, const RandomVariable& z,
                      std::span<const Utility* const> per_time,
                      const AdaptedProcess& x, const AdaptedProcess& m) {
    const int T = tree.horizon();
    if (static_cast<int>(per_time.size()) != T + 1)
        throw Error("duality_gap: per-time utility list must have horizon + 1 entries");
    if (x.start != m.start || x.end() != T || m.end() != T)
        throw Error("duality_gap: allocation and martingale must cover [t, horizon]");
    const int t = x.start;
    for (int s = t; s <= T; ++s)
        for (double y : m.at(s))
            if (!(y > 0.0)) throw Error("duality_gap: martingale must be strictly positive");

    GapReport report;
    report.martingale_residual = is_martingale(tree, m, 0.0).max_residual;
    for (int leaf : tree.leaves()) {
        double sum = 0.0;
        for (int s = t; s <= T; ++s)
            sum += x.at(s)[tree.node(tree.ancestor_at(leaf, s)).slot];
        report.allocation_residual = std::max(
            report.allocation_residual, std::abs(sum - z.values[tree.node(leaf).slot]));
    }

    double primal = 0.0, dual = 0.0;
    for (int s = t; s <= T; ++s) {
        RandomVariable u{s, x.at(s)};
        RandomVariable c{s, m.at(s)};
        for (double& v : u.values) v = per_time[s]->value(v);
        for (double& v : c.values) v = per_time[s]->conjugate(v);
        primal += expectation(tree, u);
        dual += expectation(tree, c);
    }
    RandomVariable mz{T, m.at(T)};
    for (std::size_t k = 0; k < mz.values.size(); ++k) mz.values[k] *= z.values[k];
    dual += expectation(tree, mz);

    report.gap = dual - primal;
    return report;
}

} // namespace divprem::oracle
