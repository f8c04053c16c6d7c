#pragma once

#include <Eigen/Core>
#include <vector>

namespace cournot {

/// One node of a scenario tree. Nodes at depth 1 form the root layer and
/// carry the time-1 marginal; every other node carries the conditional
/// probability of its type value given the parent path.
struct TreeNode {
    int id = -1;
    int parent = -1;  // -1 at depth 1
    int depth = 1;    // 1-based time index
    double x = 0.0;   // type value at this time step
    double p = 1.0;   // conditional probability, in (0, 1]
};

/// Finitely supported type distribution on the N-step path space,
/// stored as a tree with per-node conditional probabilities.
///
/// Invariants enforced at construction:
///  - node ids are dense 0..size-1 and match their index,
///  - children probabilities of every internal node (and the root layer)
///    sum to 1 within 1e-12,
///  - every root-to-leaf path has exactly `horizon` nodes.
/// The tree is immutable afterwards.
class ScenarioTree {
public:
    ScenarioTree(int horizon, std::vector<TreeNode> nodes);

    int horizon() const { return horizon_; }
    int node_count() const { return static_cast<int>(nodes_.size()); }
    const TreeNode& node(int id) const;
    const std::vector<TreeNode>& nodes() const { return nodes_; }
    const std::vector<int>& children(int id) const;
    const std::vector<int>& roots() const { return roots_; }
    const std::vector<int>& nodes_at_depth(int depth) const;
    const std::vector<int>& leaves() const;
    bool is_leaf(int id) const;

    /// Node ids from the root down to `id`, inclusive.
    std::vector<int> path_to(int id) const;
    /// Type values x_{1:t} along the path to `id`.
    Eigen::VectorXd type_prefix(int id) const;
    /// Product of conditional probabilities along the path to `id`.
    double path_weight(int id) const;
    int max_branching() const { return max_branching_; }

    /// Deterministic single-path tree visiting the given values.
    static ScenarioTree chain(const Eigen::VectorXd& values);
    /// Product measure with an i.i.d. two-point marginal per step,
    /// each value with probability 1/2.
    static ScenarioTree bernoulli_product(int horizon, double lo = 0.0, double hi = 1.0);

private:
    int horizon_;
    std::vector<TreeNode> nodes_;
    std::vector<std::vector<int>> children_;
    std::vector<std::vector<int>> by_depth_;
    std::vector<int> roots_;
    std::vector<int> leaves_;
    std::vector<double> path_weight_;
    int max_branching_ = 0;

    void validate_and_index();
};

/// Weighted point of a discrete action distribution.
struct Atom {
    Eigen::VectorXd point;
    double weight = 0.0;
};

/// Finitely supported distribution on N-dimensional action paths.
/// Duplicate points (within 1e-12 per coordinate) are merged by weight
/// addition at construction; weights must sum to 1 within 1e-12.
class DiscreteMeasure {
public:
    DiscreteMeasure(int dim, std::vector<Atom> atoms);
    static DiscreteMeasure dirac(const Eigen::VectorXd& point);

    int dim() const { return dim_; }
    int size() const { return static_cast<int>(atoms_.size()); }
    const std::vector<Atom>& atoms() const { return atoms_; }

private:
    int dim_;
    std::vector<Atom> atoms_;
};

/// Policy storage: one action per tree node, keyed by node id. Because a
/// node encodes exactly the type history x_{1:t}, per-node storage is the
/// structural form of adaptedness.
class AdaptedMap {
public:
    explicit AdaptedMap(std::vector<double> actions) : actions_(std::move(actions)) {}

    int size() const { return static_cast<int>(actions_.size()); }
    double action(int node_id) const;
    const std::vector<double>& actions() const { return actions_; }

private:
    std::vector<double> actions_;
};

struct WeightedPath {
    Eigen::VectorXd path;
    double weight = 0.0;
};

/// One child branch of a conditional kernel.
struct Branch {
    double value = 0.0;
    double probability = 0.0;
};

/// All root-to-leaf paths with their weights (products of conditional
/// probabilities), ordered by leaf id. Weights sum to 1.
std::vector<WeightedPath> leaf_paths(const ScenarioTree& tree);

/// Vector of per-coordinate means of the measure.
Eigen::VectorXd marginal_means(const DiscreteMeasure& nu);

/// Image measure of the tree under a per-node action map: one atom per
/// leaf path, duplicates merged.
DiscreteMeasure pushforward(const ScenarioTree& tree, const AdaptedMap& map);

/// Children values and conditional probabilities of an internal node.
std::vector<Branch> conditional(const ScenarioTree& tree, int node_id);

/// The type distribution viewed as an action measure (identity actions).
DiscreteMeasure type_measure(const ScenarioTree& tree);

}  // namespace cournot
