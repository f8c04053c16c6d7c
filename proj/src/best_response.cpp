#include "cournot/best_response.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "cournot/contraction.hpp"
#include "cournot/errors.hpp"

namespace cournot {

namespace {

// Shared state of one backward solve. y_buf holds the realized action path
// under construction: slots [0, t-1) carry the prefix when working at depth
// t. Each public entry point builds its own engine, so concurrent calls do
// not share state.
class Engine {
public:
    Engine(const MeanFieldCost& cost, const DiscreteMeasure& nu, const ScenarioTree& tree,
           const SolveOptions& opt)
        : cost_(cost), nu_(nu), tree_(tree), opt_(opt), y_buf_(tree.horizon()) {
        if (cost_.dimension() != tree_.horizon())
            throw DomainError("cost dimension does not match tree horizon");
        if (nu_.dim() != tree_.horizon())
            throw DomainError("measure dimension does not match tree horizon");
        if (tree_.horizon() > opt_.max_depth)
            throw DomainError("tree horizon " + std::to_string(tree_.horizon()) +
                              " exceeds the nested-solver guard " +
                              std::to_string(opt_.max_depth) + " (raise max_depth to override)");
        if (tree_.max_branching() > opt_.max_branching)
            throw DomainError("tree branching " + std::to_string(tree_.max_branching()) +
                              " exceeds the nested-solver guard " +
                              std::to_string(opt_.max_branching) +
                              " (raise max_branching to override)");
        auto [lambda, kappa] = cost_.hessian_bounds();
        lambda_stage_ = stage_bounds(lambda, kappa, tree_.horizon()).lambda_k;
    }

    void require_stage_convexity(int depth) const {
        // Stage lower bounds shrink toward the root, so the queried stage
        // is the binding one for everything below it.
        if (!(1.0 + lambda_stage_[depth - 1] > 0.0))
            throw DomainError("stage " + std::to_string(depth) +
                              " objective is not strictly convex (1 + lambda_k <= 0)");
    }

    void load_prefix(const Eigen::VectorXd& y_prefix, int depth) {
        if (y_prefix.size() != depth - 1)
            throw DomainError("y_prefix must have length depth-1 = " + std::to_string(depth - 1));
        y_buf_.head(depth - 1) = y_prefix;
    }

    // Envelope derivative of the stage objective at `node` for action ybar,
    // prefix already loaded. Differentiation passes through every inner
    // argmin, leaving the terminal gradient averaged over realized optimal
    // continuations.
    double derivative(int node, double ybar) {
        const TreeNode& nd = tree_.node(node);
        const int t = nd.depth;
        y_buf_[t - 1] = ybar;
        double g = ybar - nd.x;
        if (t == tree_.horizon()) {
            g += cost_.gradient(y_buf_, nu_)[t - 1];
        } else {
            for (int c : tree_.children(node))
                g += tree_.node(c).p * subtree_gradient(c, t - 1);
        }
        return g;
    }

    // Stage objective value at (prefix, ybar); children solved to optimality.
    double objective(int node, double ybar) {
        const TreeNode& nd = tree_.node(node);
        return 0.5 * (nd.x - ybar) * (nd.x - ybar) + continuation_value(node, ybar);
    }

    // Safeguarded root find on the monotone stage derivative: secant steps
    // (exact for the quadratic family) alternate with bisection inside a
    // sign-changing bracket around x_t.
    double solve_root(int node) {
        const TreeNode& nd = tree_.node(node);
        double radius = opt_.initial_radius;
        double lo = nd.x - radius, hi = nd.x + radius;
        double g_lo = derivative(node, lo), g_hi = derivative(node, hi);
        int expansions = 0;
        while (g_lo > 0.0 || g_hi < 0.0) {
            if (++expansions > 60)
                throw NumericalError("stage solve at node " + std::to_string(node) +
                                     ": no sign change in bracket [" + std::to_string(lo) + ", " +
                                     std::to_string(hi) + "]");
            radius *= 2.0;
            if (g_lo > 0.0) {
                lo = nd.x - radius;
                g_lo = derivative(node, lo);
            }
            if (g_hi < 0.0) {
                hi = nd.x + radius;
                g_hi = derivative(node, hi);
            }
        }
        if (std::abs(g_lo) <= opt_.derivative_tol) return lo;
        if (std::abs(g_hi) <= opt_.derivative_tol) return hi;

        const double width_tol = opt_.bracket_tol * (1.0 + std::abs(nd.x));
        for (int it = 0; it < opt_.max_iterations; ++it) {
            double cand;
            const double denom = g_hi - g_lo;
            if (it % 2 == 0 && denom > 0.0 && std::isfinite(denom))
                cand = lo - g_lo * (hi - lo) / denom;
            else
                cand = 0.5 * (lo + hi);
            if (!(cand > lo && cand < hi)) cand = 0.5 * (lo + hi);
            const double g = derivative(node, cand);
            if (std::abs(g) <= opt_.derivative_tol) return cand;
            if (g < 0.0) {
                lo = cand;
                g_lo = g;
            } else {
                hi = cand;
                g_hi = g;
            }
            if (hi - lo <= width_tol) return 0.5 * (lo + hi);
        }
        throw NumericalError("stage solve at node " + std::to_string(node) +
                             " did not converge; last bracket [" + std::to_string(lo) + ", " +
                             std::to_string(hi) + "]");
    }

    // Opt value at `node` while recording actions along realized prefixes.
    double solve_and_record(int node, std::vector<double>& actions) {
        const TreeNode& nd = tree_.node(node);
        const int t = nd.depth;
        const double y_star = solve_root(node);
        actions[node] = y_star;
        y_buf_[t - 1] = y_star;
        double value = 0.5 * (nd.x - y_star) * (nd.x - y_star);
        if (t == tree_.horizon()) {
            value += cost_.value(y_buf_, nu_);
        } else {
            for (int c : tree_.children(node)) {
                value += tree_.node(c).p * solve_and_record(c, actions);
                y_buf_[t - 1] = y_star;  // slot above children is ours again
            }
        }
        return value;
    }

private:
    const MeanFieldCost& cost_;
    const DiscreteMeasure& nu_;
    const ScenarioTree& tree_;
    const SolveOptions& opt_;
    Eigen::VectorXd y_buf_;
    Eigen::VectorXd lambda_stage_;

    // Conditional expectation below `node` of gradient component `comp`
    // along realized optimal continuations; solves node's stage first.
    double subtree_gradient(int node, int comp) {
        const TreeNode& nd = tree_.node(node);
        const int t = nd.depth;
        const double y_star = solve_root(node);
        y_buf_[t - 1] = y_star;
        if (t == tree_.horizon()) return cost_.gradient(y_buf_, nu_)[comp];
        double g = 0.0;
        for (int c : tree_.children(node)) {
            g += tree_.node(c).p * subtree_gradient(c, comp);
            y_buf_[t - 1] = y_star;
        }
        return g;
    }

    // V[nu]_t at (prefix, ybar): terminal interaction at the horizon,
    // conditional expectation of child optimal values before it.
    double continuation_value(int node, double ybar) {
        const TreeNode& nd = tree_.node(node);
        const int t = nd.depth;
        y_buf_[t - 1] = ybar;
        if (t == tree_.horizon()) return cost_.value(y_buf_, nu_);
        double value = 0.0;
        for (int c : tree_.children(node)) {
            const TreeNode& cn = tree_.node(c);
            const double y_c = solve_root(c);
            value += cn.p * (0.5 * (cn.x - y_c) * (cn.x - y_c) + continuation_value(c, y_c));
            y_buf_[t - 1] = ybar;
        }
        return value;
    }
};

}  // namespace

StageSolution stage_minimize(const MeanFieldCost& cost, const DiscreteMeasure& nu,
                             const ScenarioTree& tree, int node_id,
                             const Eigen::VectorXd& y_prefix, const SolveOptions& options) {
    Engine engine(cost, nu, tree, options);
    const int depth = tree.node(node_id).depth;
    engine.require_stage_convexity(depth);
    engine.load_prefix(y_prefix, depth);
    const double y_star = engine.solve_root(node_id);
    engine.load_prefix(y_prefix, depth);
    return {y_star, engine.objective(node_id, y_star)};
}

double stage_objective(const MeanFieldCost& cost, const DiscreteMeasure& nu,
                       const ScenarioTree& tree, int node_id, const Eigen::VectorXd& y_prefix,
                       double y_bar, const SolveOptions& options) {
    Engine engine(cost, nu, tree, options);
    const int depth = tree.node(node_id).depth;
    engine.require_stage_convexity(depth);
    engine.load_prefix(y_prefix, depth);
    return engine.objective(node_id, y_bar);
}

double stage_derivative(const MeanFieldCost& cost, const DiscreteMeasure& nu,
                        const ScenarioTree& tree, int node_id, const Eigen::VectorXd& y_prefix,
                        double y_bar, const SolveOptions& options) {
    Engine engine(cost, nu, tree, options);
    const int depth = tree.node(node_id).depth;
    engine.require_stage_convexity(depth);
    engine.load_prefix(y_prefix, depth);
    return engine.derivative(node_id, y_bar);
}

BestResponse best_response(const ScenarioTree& tree, const MeanFieldCost& cost,
                           const DiscreteMeasure& nu, const SolveOptions& options) {
    Engine engine(cost, nu, tree, options);
    engine.require_stage_convexity(1);
    std::vector<double> actions(tree.node_count(),
                                std::numeric_limits<double>::quiet_NaN());
    double value = 0.0;
    for (int root : tree.roots())
        value += tree.node(root).p * engine.solve_and_record(root, actions);
    AdaptedMap map(std::move(actions));
    DiscreteMeasure response = pushforward(tree, map);
    return {std::move(map), value, std::move(response)};
}

const NodePolicy& AffinePolicy::at(int node_id) const {
    if (node_id < 0 || node_id >= size())
        throw StructuralError("no policy for node " + std::to_string(node_id));
    return coeffs_[node_id];
}

AdaptedMap AffinePolicy::evaluate(const ScenarioTree& tree, const Eigen::VectorXd& m) const {
    if (size() != tree.node_count())
        throw StructuralError("policy covers " + std::to_string(size()) + " nodes, tree has " +
                              std::to_string(tree.node_count()));
    std::vector<double> actions(tree.node_count(), 0.0);
    for (int depth = 1; depth <= tree.horizon(); ++depth) {
        for (int id : tree.nodes_at_depth(depth)) {
            const auto path = tree.path_to(id);
            const NodePolicy& pol = coeffs_[id];
            double y = pol.alpha * tree.node(id).x + pol.gamma.dot(m) + pol.delta;
            for (std::size_t s = 0; s + 1 < path.size(); ++s)
                y += pol.beta[static_cast<Eigen::Index>(s)] * actions[path[s]];
            actions[id] = y;
        }
    }
    return AdaptedMap(std::move(actions));
}

namespace {

// Quadratic value function 1/2 z^T H z + h^T z of z = (y_1..y_t, m_1..m_N);
// scalar constants are dropped, they never reach a first-order condition.
struct NodeQuad {
    Eigen::MatrixXd H;
    Eigen::VectorXd h;
};

class AffineEngine {
public:
    AffineEngine(const ScenarioTree& tree, const QuadraticMeanFieldCost& cost)
        : tree_(tree), cost_(cost), horizon_(tree.horizon()), policies_(tree.node_count()) {}

    std::vector<NodePolicy> run() {
        for (int root : tree_.roots()) eliminate(root);
        return std::move(policies_);
    }

private:
    const ScenarioTree& tree_;
    const QuadraticMeanFieldCost& cost_;
    int horizon_;
    std::vector<NodePolicy> policies_;

    // Returns the optimal value of the subtree at `node` as a quadratic
    // function of (y_1..y_{t-1}, m) after eliminating y_t, and stores the
    // node's affine policy.
    NodeQuad eliminate(int node) {
        const TreeNode& nd = tree_.node(node);
        const int t = nd.depth;
        const int n = horizon_;
        const Eigen::Index dim = t + n;  // (y_1..y_t, m)

        NodeQuad q;
        if (t == n) {
            q.H = Eigen::MatrixXd::Zero(dim, dim);
            q.H.topLeftCorner(n, n) = cost_.quadratic_term();
            q.H.topRightCorner(n, n) = cost_.mean_coupling();
            q.H.bottomLeftCorner(n, n) = cost_.mean_coupling().transpose();
            q.h = Eigen::VectorXd::Zero(dim);
            q.h.head(n) = cost_.linear_term();
        } else {
            q.H = Eigen::MatrixXd::Zero(dim, dim);
            q.h = Eigen::VectorXd::Zero(dim);
            for (int c : tree_.children(node)) {
                NodeQuad child = eliminate(c);
                q.H += tree_.node(c).p * child.H;
                q.h += tree_.node(c).p * child.h;
            }
        }

        // Stage cost 1/2 (x_t - y_t)^2.
        const Eigen::Index e = t - 1;  // index of y_t within z
        q.H(e, e) += 1.0;
        const double pivot = q.H(e, e);
        if (!(pivot > 0.0))
            throw DomainError("singular stage pivot at node " + std::to_string(node) +
                              " (1 + effective diagonal <= 0)");

        Eigen::VectorXd w(dim - 1);
        w.head(e) = q.H.col(e).head(e);
        w.tail(dim - 1 - e) = q.H.col(e).tail(dim - 1 - e);
        const double s_before = q.h(e);  // linear coefficient of y_t from V alone
        const double s = s_before - nd.x;

        NodePolicy pol;
        pol.alpha = 1.0 / pivot;
        pol.beta = -w.head(e) / pivot;
        pol.gamma = -w.tail(n) / pivot;
        pol.delta = -s_before / pivot;
        policies_[node] = std::move(pol);

        NodeQuad reduced;
        reduced.H.resize(dim - 1, dim - 1);
        reduced.H.topLeftCorner(e, e) = q.H.topLeftCorner(e, e);
        reduced.H.topRightCorner(e, dim - 1 - e) = q.H.topRightCorner(e, dim - 1 - e);
        reduced.H.bottomLeftCorner(dim - 1 - e, e) = q.H.bottomLeftCorner(dim - 1 - e, e);
        reduced.H.bottomRightCorner(dim - 1 - e, dim - 1 - e) =
            q.H.bottomRightCorner(dim - 1 - e, dim - 1 - e);
        reduced.H -= w * w.transpose() / pivot;
        reduced.h.resize(dim - 1);
        reduced.h.head(e) = q.h.head(e);
        reduced.h.tail(dim - 1 - e) = q.h.tail(dim - 1 - e);
        reduced.h -= (s / pivot) * w;
        return reduced;
    }
};

}  // namespace

AffineBestResponse best_response_affine(const ScenarioTree& tree,
                                        const QuadraticMeanFieldCost& cost,
                                        const Eigen::VectorXd& m) {
    const int n = tree.horizon();
    if (cost.dimension() != n) throw DomainError("cost dimension does not match tree horizon");
    if (m.size() != n) throw DomainError("means vector must have length " + std::to_string(n));

    AffinePolicy policy(AffineEngine(tree, cost).run());

    // Node actions are affine in the means vector: compose coefficients
    // down the tree, then average over path weights per depth.
    Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd offset = Eigen::VectorXd::Zero(n);
    std::vector<double> const_part(tree.node_count(), 0.0);
    std::vector<Eigen::VectorXd> mean_part(tree.node_count());
    for (int depth = 1; depth <= n; ++depth) {
        for (int id : tree.nodes_at_depth(depth)) {
            const auto path = tree.path_to(id);
            const NodePolicy& pol = policy.at(id);
            double c = pol.alpha * tree.node(id).x + pol.delta;
            Eigen::VectorXd d = pol.gamma;
            for (std::size_t s = 0; s + 1 < path.size(); ++s) {
                c += pol.beta[static_cast<Eigen::Index>(s)] * const_part[path[s]];
                d += pol.beta[static_cast<Eigen::Index>(s)] * mean_part[path[s]];
            }
            const_part[id] = c;
            mean_part[id] = d;
            offset[depth - 1] += tree.path_weight(id) * c;
            psi.row(depth - 1) += tree.path_weight(id) * d.transpose();
        }
    }

    AdaptedMap map = policy.evaluate(tree, m);
    return {std::move(policy), std::move(psi), std::move(offset), std::move(map)};
}

}  // namespace cournot
