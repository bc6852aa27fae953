#ifndef DIVPREM_SCENARIO_TREE_HPP
#define DIVPREM_SCENARIO_TREE_HPP

#include "divprem/errors.hpp"

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace divprem {

struct NodeSpec {
    std::string id;
    int time = 0;
    std::optional<std::string> parent; // absent for the root
    double prob = 1.0;                 // conditional transition probability
};

struct TreeSpec {
    int horizon = 0;
    std::vector<NodeSpec> nodes;
};

struct TreeNode {
    std::string id;
    int time = 0;
    int parent = -1;
    double prob = 1.0;      // P(node | parent), 1 for the root
    double path_prob = 1.0; // P(node)
    int slot = 0;           // position within the time slice
    std::vector<int> children;
};

// Finite filtered probability space as a rooted tree with strictly positive
// one-step transition probabilities.  Immutable after build; every query is a
// pure read, so concurrent use is safe.
class ScenarioTree {
public:
    static constexpr double kProbSumTol = 1e-12;

    static ScenarioTree build(const TreeSpec& spec);

    int horizon() const { return horizon_; }
    int size() const { return static_cast<int>(nodes_.size()); }
    const TreeNode& node(int idx) const { return nodes_[idx]; }

    // Node indices at time t, ordered lexicographically by id.
    const std::vector<int>& slice(int t) const;
    const std::vector<int>& leaves() const { return slices_[horizon_]; }
    int leaf_count() const { return static_cast<int>(leaves().size()); }
    int root() const { return slices_[0][0]; }

    int index_of(const std::string& id) const; // -1 when unknown
    int ancestor_at(int idx, int t) const;

private:
    ScenarioTree() = default;

    int horizon_ = 0;
    std::vector<TreeNode> nodes_;
    std::vector<std::vector<int>> slices_;
    std::unordered_map<std::string, int> index_;
};

ScenarioTree build_tree(const TreeSpec& spec);

// One real value per node of a single time slice, aligned with
// ScenarioTree::slice(time).  time == horizon makes it a terminal payoff.
struct RandomVariable {
    int time = 0;
    std::vector<double> values;
};

// One real value per node for every slice in [start, end()].
struct AdaptedProcess {
    int start = 0;
    std::vector<std::vector<double>> values;

    int end() const { return start + static_cast<int>(values.size()) - 1; }
    std::vector<double>& at(int t) { return values[t - start]; }
    const std::vector<double>& at(int t) const { return values[t - start]; }
    RandomVariable slice_rv(int t) const { return {t, values[t - start]}; }
};

// E[X | F_t] for t <= X.time.
RandomVariable condexp(const ScenarioTree& tree, const RandomVariable& x, int t);

// Unconditional expectation, condexp down to the root.
double expectation(const ScenarioTree& tree, const RandomVariable& x);

// The process (E[X | F_s])_{s=0..X.time}.
AdaptedProcess condexp_process(const ScenarioTree& tree, const RandomVariable& x);

// Constant continuation of a time-t variable to the terminal slice.
RandomVariable extend_to_leaves(const ScenarioTree& tree, const RandomVariable& x);

struct MartingaleCheck {
    bool ok = false;
    double max_residual = 0.0;
};

// max_s max_nodes |M_s - E[M_{s+1} | F_s]| against tol.
MartingaleCheck is_martingale(const ScenarioTree& tree, const AdaptedProcess& m,
                              double tol);

// Martingale differences of E[Z | F_t]: dZ_t = E[Z|F_t] - E[Z|F_{t-1}] at the
// parent, for t = 1..Z.time.  Telescopes to Z - E[Z] along every path.
AdaptedProcess martingale_differences(const ScenarioTree& tree,
                                      const RandomVariable& z);

} // namespace divprem

#endif // DIVPREM_SCENARIO_TREE_HPP
