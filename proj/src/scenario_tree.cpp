#include "divprem/scenario_tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace divprem {

namespace {

std::string fmt_g(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

} // namespace

ScenarioTree ScenarioTree::build(const TreeSpec& spec) {
    if (spec.horizon < 1)
        throw Error("tree horizon must be >= 1, got " + std::to_string(spec.horizon));
    if (spec.nodes.empty()) throw Error("tree has no nodes");

    ScenarioTree tree;
    tree.horizon_ = spec.horizon;
    tree.nodes_.reserve(spec.nodes.size());

    for (const NodeSpec& ns : spec.nodes) {
        if (ns.id.empty()) throw Error("node with empty id");
        if (tree.index_.count(ns.id)) throw Error("duplicate node id '" + ns.id + "'");
        if (ns.time < 0 || ns.time > spec.horizon)
            throw Error("node '" + ns.id + "' at time " + std::to_string(ns.time) +
                        " outside [0, " + std::to_string(spec.horizon) + "]");
        TreeNode n;
        n.id = ns.id;
        n.time = ns.time;
        n.prob = ns.prob;
        tree.index_.emplace(n.id, static_cast<int>(tree.nodes_.size()));
        tree.nodes_.push_back(std::move(n));
    }

    int root = -1;
    for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
        const NodeSpec& ns = spec.nodes[i];
        TreeNode& n = tree.nodes_[i];
        if (!ns.parent) {
            if (n.time != 0)
                throw Error("parentless node '" + n.id + "' at time " +
                            std::to_string(n.time) + "; only the time-0 root may omit a parent");
            if (root >= 0)
                throw Error("multiple roots: '" + tree.nodes_[root].id + "' and '" + n.id + "'");
            root = static_cast<int>(i);
            n.prob = 1.0;
            continue;
        }
        auto it = tree.index_.find(*ns.parent);
        if (it == tree.index_.end())
            throw Error("dangling parent '" + *ns.parent + "' of node '" + n.id + "'");
        n.parent = it->second;
        const TreeNode& p = tree.nodes_[n.parent];
        if (n.time != p.time + 1)
            throw Error("time gap at node '" + n.id + "': time " + std::to_string(n.time) +
                        " but parent '" + p.id + "' is at time " + std::to_string(p.time));
        if (!std::isfinite(n.prob) || n.prob <= 0.0)
            throw Error("nonpositive probability " + fmt_g(n.prob) + " at node '" + n.id + "'");
        if (n.prob > 1.0)
            throw Error("probability " + fmt_g(n.prob) + " > 1 at node '" + n.id + "'");
    }
    if (root < 0) throw Error("tree has no root");

    tree.slices_.assign(spec.horizon + 1, {});
    for (int i = 0; i < tree.size(); ++i)
        tree.slices_[tree.nodes_[i].time].push_back(i);
    for (auto& s : tree.slices_)
        std::sort(s.begin(), s.end(), [&](int a, int b) {
            return tree.nodes_[a].id < tree.nodes_[b].id;
        });
    for (int t = 0; t <= spec.horizon; ++t) {
        if (tree.slices_[t].empty())
            throw Error("no nodes at time " + std::to_string(t));
        for (std::size_t k = 0; k < tree.slices_[t].size(); ++k)
            tree.nodes_[tree.slices_[t][k]].slot = static_cast<int>(k);
    }

    for (int t = 1; t <= spec.horizon; ++t)
        for (int idx : tree.slices_[t])
            tree.nodes_[tree.nodes_[idx].parent].children.push_back(idx);

    for (int t = 0; t < spec.horizon; ++t) {
        for (int idx : tree.slices_[t]) {
            const TreeNode& n = tree.nodes_[idx];
            if (n.children.empty())
                throw Error("leaf '" + n.id + "' at time " + std::to_string(n.time) +
                            " != horizon " + std::to_string(spec.horizon));
            double sum = 0.0;
            for (int c : n.children) sum += tree.nodes_[c].prob;
            if (std::abs(sum - 1.0) > kProbSumTol)
                throw Error("probability sum " + fmt_g(sum) + " != 1 at children of node '" +
                            n.id + "'");
        }
    }

    tree.nodes_[root].path_prob = 1.0;
    for (int t = 1; t <= spec.horizon; ++t)
        for (int idx : tree.slices_[t]) {
            TreeNode& n = tree.nodes_[idx];
            n.path_prob = tree.nodes_[n.parent].path_prob * n.prob;
        }

    return tree;
}

ScenarioTree build_tree(const TreeSpec& spec) { return ScenarioTree::build(spec); }

const std::vector<int>& ScenarioTree::slice(int t) const {
    if (t < 0 || t > horizon_)
        throw Error("slice time " + std::to_string(t) + " outside [0, " +
                    std::to_string(horizon_) + "]");
    return slices_[t];
}

int ScenarioTree::index_of(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? -1 : it->second;
}

int ScenarioTree::ancestor_at(int idx, int t) const {
    const TreeNode* n = &nodes_[idx];
    if (t > n->time)
        throw Error("ancestor_at: time " + std::to_string(t) + " above node time " +
                    std::to_string(n->time));
    while (n->time > t) {
        idx = n->parent;
        n = &nodes_[idx];
    }
    return idx;
}

namespace {

void check_slice_rv(const ScenarioTree& tree, const RandomVariable& x,
                    const char* what) {
    if (x.time < 0 || x.time > tree.horizon())
        throw Error(std::string(what) + ": variable time " + std::to_string(x.time) +
                    " outside [0, " + std::to_string(tree.horizon()) + "]");
    if (x.values.size() != tree.slice(x.time).size())
        throw Error(std::string(what) + ": variable has " + std::to_string(x.values.size()) +
                    " values but the time-" + std::to_string(x.time) + " slice has " +
                    std::to_string(tree.slice(x.time).size()) + " nodes");
}

// One backward averaging step from slice s to slice s-1.
std::vector<double> step_down(const ScenarioTree& tree, int s,
                              const std::vector<double>& cur) {
    std::vector<double> out(tree.slice(s - 1).size(), 0.0);
    for (int idx : tree.slice(s)) {
        const TreeNode& n = tree.node(idx);
        out[tree.node(n.parent).slot] += n.prob * cur[n.slot];
    }
    return out;
}

} // namespace

RandomVariable condexp(const ScenarioTree& tree, const RandomVariable& x, int t) {
    check_slice_rv(tree, x, "condexp");
    if (t > x.time)
        throw Error("condexp: target time " + std::to_string(t) +
                    " exceeds variable time " + std::to_string(x.time));
    if (t < 0) throw Error("condexp: negative target time");
    std::vector<double> cur = x.values;
    for (int s = x.time; s > t; --s) cur = step_down(tree, s, cur);
    return {t, std::move(cur)};
}

double expectation(const ScenarioTree& tree, const RandomVariable& x) {
    return condexp(tree, x, 0).values[0];
}

AdaptedProcess condexp_process(const ScenarioTree& tree, const RandomVariable& x) {
    check_slice_rv(tree, x, "condexp_process");
    AdaptedProcess p;
    p.start = 0;
    p.values.resize(x.time + 1);
    p.values[x.time] = x.values;
    for (int s = x.time; s > 0; --s) p.values[s - 1] = step_down(tree, s, p.values[s]);
    return p;
}

RandomVariable extend_to_leaves(const ScenarioTree& tree, const RandomVariable& x) {
    check_slice_rv(tree, x, "extend_to_leaves");
    RandomVariable out;
    out.time = tree.horizon();
    out.values.resize(tree.leaves().size());
    for (int idx : tree.leaves()) {
        int anc = tree.ancestor_at(idx, x.time);
        out.values[tree.node(idx).slot] = x.values[tree.node(anc).slot];
    }
    return out;
}

MartingaleCheck is_martingale(const ScenarioTree& tree, const AdaptedProcess& m,
                              double tol) {
    if (m.values.empty()) throw Error("is_martingale: empty process");
    if (m.start < 0 || m.end() > tree.horizon())
        throw Error("is_martingale: process window [" + std::to_string(m.start) + ", " +
                    std::to_string(m.end()) + "] outside [0, " +
                    std::to_string(tree.horizon()) + "]");
    for (int s = m.start; s <= m.end(); ++s)
        if (m.at(s).size() != tree.slice(s).size())
            throw Error("is_martingale: slice " + std::to_string(s) + " size mismatch");

    MartingaleCheck check;
    for (int s = m.start; s < m.end(); ++s) {
        const auto& cur = m.at(s);
        const auto& nxt = m.at(s + 1);
        for (int idx : tree.slice(s)) {
            const TreeNode& n = tree.node(idx);
            double e = 0.0;
            for (int c : n.children) e += tree.node(c).prob * nxt[tree.node(c).slot];
            check.max_residual = std::max(check.max_residual, std::abs(cur[n.slot] - e));
        }
    }
    check.ok = check.max_residual <= tol;
    return check;
}

AdaptedProcess martingale_differences(const ScenarioTree& tree,
                                      const RandomVariable& z) {
    check_slice_rv(tree, z, "martingale_differences");
    if (z.time < 1) throw Error("martingale_differences: variable time must be >= 1");
    AdaptedProcess e = condexp_process(tree, z);
    AdaptedProcess d;
    d.start = 1;
    d.values.resize(z.time);
    for (int t = 1; t <= z.time; ++t) {
        d.at(t).resize(tree.slice(t).size());
        for (int idx : tree.slice(t)) {
            const TreeNode& n = tree.node(idx);
            d.at(t)[n.slot] = e.at(t)[n.slot] - e.at(t - 1)[tree.node(n.parent).slot];
        }
    }
    return d;
}

} // namespace divprem
