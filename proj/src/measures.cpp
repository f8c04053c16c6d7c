#include "cournot/measures.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cournot/errors.hpp"

namespace cournot {

namespace {
constexpr double kProbTol = 1e-12;
constexpr double kPointMergeTol = 1e-12;
}  // namespace

ScenarioTree::ScenarioTree(int horizon, std::vector<TreeNode> nodes)
    : horizon_(horizon), nodes_(std::move(nodes)) {
    if (horizon_ < 1) throw StructuralError("tree horizon must be positive");
    if (nodes_.empty()) throw StructuralError("tree has no nodes");
    validate_and_index();
}

void ScenarioTree::validate_and_index() {
    const int n = node_count();
    children_.assign(n, {});
    by_depth_.assign(horizon_ + 1, {});
    path_weight_.assign(n, 0.0);

    for (int i = 0; i < n; ++i) {
        const TreeNode& nd = nodes_[i];
        const std::string tag = "node " + std::to_string(nd.id);
        if (nd.id != i)
            throw StructuralError(tag + ": ids must be dense integers 0..n-1 in order");
        if (nd.depth < 1 || nd.depth > horizon_)
            throw StructuralError(tag + ": depth " + std::to_string(nd.depth) +
                                  " outside 1.." + std::to_string(horizon_));
        if (!(nd.p > 0.0) || nd.p > 1.0)
            throw StructuralError(tag + ": probability must lie in (0,1]");
        if (!std::isfinite(nd.x)) throw StructuralError(tag + ": non-finite type value");
        if (nd.depth == 1) {
            if (nd.parent != -1) throw StructuralError(tag + ": depth-1 node cannot have a parent");
            roots_.push_back(nd.id);
        } else {
            if (nd.parent < 0 || nd.parent >= n)
                throw StructuralError(tag + ": parent id out of range");
            if (nodes_[nd.parent].depth != nd.depth - 1)
                throw StructuralError(tag + ": parent depth must be " +
                                      std::to_string(nd.depth - 1));
            children_[nd.parent].push_back(nd.id);
        }
        by_depth_[nd.depth].push_back(nd.id);
    }

    // Conditional probabilities must form kernels: the root layer and every
    // set of siblings sum to 1.
    double root_sum = 0.0;
    for (int r : roots_) root_sum += nodes_[r].p;
    if (std::abs(root_sum - 1.0) > kProbTol)
        throw StructuralError("root layer probabilities sum to " + std::to_string(root_sum));
    for (int i = 0; i < n; ++i) {
        if (nodes_[i].depth == horizon_) {
            if (!children_[i].empty())
                throw StructuralError("node " + std::to_string(i) + ": leaf depth node has children");
            leaves_.push_back(i);
            continue;
        }
        if (children_[i].empty())
            throw StructuralError("node " + std::to_string(i) + ": internal node has no children");
        double s = 0.0;
        for (int c : children_[i]) s += nodes_[c].p;
        if (std::abs(s - 1.0) > kProbTol)
            throw StructuralError("node " + std::to_string(i) +
                                  ": children probabilities sum to " + std::to_string(s));
    }

    for (int d = 1; d <= horizon_; ++d)
        for (int id : by_depth_[d])
            path_weight_[id] =
                (d == 1 ? nodes_[id].p : path_weight_[nodes_[id].parent] * nodes_[id].p);

    max_branching_ = static_cast<int>(roots_.size());
    for (int i = 0; i < n; ++i)
        max_branching_ = std::max(max_branching_, static_cast<int>(children_[i].size()));

    double leaf_sum = 0.0;
    for (int l : leaves_) leaf_sum += path_weight_[l];
    if (std::abs(leaf_sum - 1.0) > kProbTol)
        throw StructuralError("leaf path weights sum to " + std::to_string(leaf_sum));
}

const TreeNode& ScenarioTree::node(int id) const {
    if (id < 0 || id >= node_count())
        throw StructuralError("node id " + std::to_string(id) + " out of range");
    return nodes_[id];
}

const std::vector<int>& ScenarioTree::children(int id) const {
    node(id);
    return children_[id];
}

const std::vector<int>& ScenarioTree::nodes_at_depth(int depth) const {
    if (depth < 1 || depth > horizon_) throw DomainError("depth out of range");
    return by_depth_[depth];
}

const std::vector<int>& ScenarioTree::leaves() const { return leaves_; }

bool ScenarioTree::is_leaf(int id) const { return node(id).depth == horizon_; }

std::vector<int> ScenarioTree::path_to(int id) const {
    node(id);
    std::vector<int> path;
    for (int cur = id; cur != -1; cur = nodes_[cur].parent) path.push_back(cur);
    std::reverse(path.begin(), path.end());
    return path;
}

Eigen::VectorXd ScenarioTree::type_prefix(int id) const {
    const auto path = path_to(id);
    Eigen::VectorXd x(path.size());
    for (std::size_t i = 0; i < path.size(); ++i) x[static_cast<Eigen::Index>(i)] = nodes_[path[i]].x;
    return x;
}

double ScenarioTree::path_weight(int id) const {
    node(id);
    return path_weight_[id];
}

ScenarioTree ScenarioTree::chain(const Eigen::VectorXd& values) {
    std::vector<TreeNode> nodes;
    nodes.reserve(values.size());
    for (Eigen::Index t = 0; t < values.size(); ++t)
        nodes.push_back({static_cast<int>(t), static_cast<int>(t) - 1,
                         static_cast<int>(t) + 1, values[t], 1.0});
    return ScenarioTree(static_cast<int>(values.size()), std::move(nodes));
}

ScenarioTree ScenarioTree::bernoulli_product(int horizon, double lo, double hi) {
    std::vector<TreeNode> nodes;
    int next_id = 0;
    std::vector<int> frontier;
    for (double v : {lo, hi}) {
        nodes.push_back({next_id, -1, 1, v, 0.5});
        frontier.push_back(next_id++);
    }
    for (int d = 2; d <= horizon; ++d) {
        std::vector<int> next;
        for (int parent : frontier) {
            for (double v : {lo, hi}) {
                nodes.push_back({next_id, parent, d, v, 0.5});
                next.push_back(next_id++);
            }
        }
        frontier = std::move(next);
    }
    return ScenarioTree(horizon, std::move(nodes));
}

DiscreteMeasure::DiscreteMeasure(int dim, std::vector<Atom> atoms) : dim_(dim) {
    if (dim_ < 1) throw StructuralError("measure dimension must be positive");
    if (atoms.empty()) throw StructuralError("measure has no atoms");
    atoms_.reserve(atoms.size());
    double total = 0.0;
    for (auto& a : atoms) {
        if (a.point.size() != dim_)
            throw StructuralError("atom dimension mismatch: expected " + std::to_string(dim_));
        if (!(a.weight > 0.0)) throw StructuralError("atom weights must be positive");
        if (!a.point.allFinite()) throw StructuralError("atom has non-finite coordinates");
        total += a.weight;
        bool merged = false;
        for (auto& b : atoms_) {
            if (((a.point - b.point).cwiseAbs().maxCoeff() <= kPointMergeTol)) {
                b.weight += a.weight;
                merged = true;
                break;
            }
        }
        if (!merged) atoms_.push_back(std::move(a));
    }
    if (std::abs(total - 1.0) > kProbTol)
        throw StructuralError("atom weights sum to " + std::to_string(total));
}

DiscreteMeasure DiscreteMeasure::dirac(const Eigen::VectorXd& point) {
    return DiscreteMeasure(static_cast<int>(point.size()), {Atom{point, 1.0}});
}

double AdaptedMap::action(int node_id) const {
    if (node_id < 0 || node_id >= size())
        throw StructuralError("missing action for node " + std::to_string(node_id));
    return actions_[node_id];
}

std::vector<WeightedPath> leaf_paths(const ScenarioTree& tree) {
    std::vector<WeightedPath> out;
    out.reserve(tree.leaves().size());
    for (int leaf : tree.leaves())
        out.push_back({tree.type_prefix(leaf), tree.path_weight(leaf)});
    return out;
}

Eigen::VectorXd marginal_means(const DiscreteMeasure& nu) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(nu.dim());
    for (const Atom& a : nu.atoms()) m += a.weight * a.point;
    return m;
}

DiscreteMeasure pushforward(const ScenarioTree& tree, const AdaptedMap& map) {
    if (map.size() != tree.node_count())
        throw StructuralError("action map covers " + std::to_string(map.size()) +
                              " nodes, tree has " + std::to_string(tree.node_count()));
    std::vector<Atom> atoms;
    atoms.reserve(tree.leaves().size());
    for (int leaf : tree.leaves()) {
        const auto path = tree.path_to(leaf);
        Eigen::VectorXd y(path.size());
        for (std::size_t i = 0; i < path.size(); ++i)
            y[static_cast<Eigen::Index>(i)] = map.action(path[i]);
        atoms.push_back({std::move(y), tree.path_weight(leaf)});
    }
    return DiscreteMeasure(tree.horizon(), std::move(atoms));
}

std::vector<Branch> conditional(const ScenarioTree& tree, int node_id) {
    if (tree.is_leaf(node_id))
        throw DomainError("node " + std::to_string(node_id) + " is a leaf: no conditional kernel");
    std::vector<Branch> out;
    for (int c : tree.children(node_id)) out.push_back({tree.node(c).x, tree.node(c).p});
    return out;
}

DiscreteMeasure type_measure(const ScenarioTree& tree) {
    std::vector<Atom> atoms;
    for (const auto& wp : leaf_paths(tree)) atoms.push_back({wp.path, wp.weight});
    return DiscreteMeasure(tree.horizon(), std::move(atoms));
}

}  // namespace cournot
