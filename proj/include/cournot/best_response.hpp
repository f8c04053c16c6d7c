#pragma once

#include <Eigen/Core>
#include <vector>

#include "cournot/costs.hpp"
#include "cournot/measures.hpp"

namespace cournot {

/// Knobs of the generic backward solver. The derivative of a stage value
/// function requires solving every descendant stage, so the work grows
/// exponentially in the horizon; the depth/branching guards keep calls at
/// desk scale unless raised explicitly.
struct SolveOptions {
    int max_depth = 6;
    int max_branching = 4;
    int max_iterations = 100;       // root-finding budget per stage
    double derivative_tol = 1e-12;  // |g'| below this counts as stationary
    double bracket_tol = 1e-13;     // bracket width stop, scaled by (1 + |x_t|)
    double initial_radius = 1.0;    // first bracket half-width around x_t
};

struct StageSolution {
    double y_star = 0.0;
    double opt_value = 0.0;
};

/// Minimize ybar -> 1/2 (x_t - ybar)^2 + V[nu]_t(x_{1:t}, y_{1:t-1}, ybar)
/// at one tree node, where V[nu]_N = V[nu] and earlier V[nu]_t are the
/// conditional expectations of child optimal values. The stage derivative
/// is the envelope identity: differentiating through the inner argmins
/// leaves only the terminal gradient averaged over realized optimal
/// continuations, so each derivative evaluation solves the whole subtree.
///
/// Requires 1 + lambda_t > 0 for the certified stage lower bound lambda_t;
/// refuses otherwise.
StageSolution stage_minimize(const MeanFieldCost& cost, const DiscreteMeasure& nu,
                             const ScenarioTree& tree, int node_id,
                             const Eigen::VectorXd& y_prefix, const SolveOptions& options = {});

/// Stage objective value at an arbitrary action (children solved to
/// optimality); used by finite-difference checks and equilibrium
/// verification.
double stage_objective(const MeanFieldCost& cost, const DiscreteMeasure& nu,
                       const ScenarioTree& tree, int node_id, const Eigen::VectorXd& y_prefix,
                       double y_bar, const SolveOptions& options = {});

/// Envelope derivative of the stage objective at an arbitrary action.
double stage_derivative(const MeanFieldCost& cost, const DiscreteMeasure& nu,
                        const ScenarioTree& tree, int node_id, const Eigen::VectorXd& y_prefix,
                        double y_bar, const SolveOptions& options = {});

struct BestResponse {
    AdaptedMap map;
    double value = 0.0;  // expected total cost of the response
    DiscreteMeasure response_measure;
};

/// Causal best response to a fixed action distribution: builds the adapted
/// map root-to-leaf by stage_minimize along realized prefixes, aggregates
/// the expected cost, and pushes the type distribution forward.
BestResponse best_response(const ScenarioTree& tree, const MeanFieldCost& cost,
                           const DiscreteMeasure& nu, const SolveOptions& options = {});

/// Stage-t optimizer written as
///   y_t = alpha x_t + beta . (y_1..y_{t-1}) + gamma . m + delta.
struct NodePolicy {
    double alpha = 0.0;
    Eigen::VectorXd beta;   // loads on ancestor actions, length depth-1
    Eigen::VectorXd gamma;  // loads on the means vector, length N
    double delta = 0.0;
};

/// Per-node affine policies of the quadratic family; evaluating at a
/// concrete means vector reproduces an AdaptedMap.
class AffinePolicy {
public:
    explicit AffinePolicy(std::vector<NodePolicy> coeffs) : coeffs_(std::move(coeffs)) {}

    int size() const { return static_cast<int>(coeffs_.size()); }
    const NodePolicy& at(int node_id) const;
    AdaptedMap evaluate(const ScenarioTree& tree, const Eigen::VectorXd& m) const;

private:
    std::vector<NodePolicy> coeffs_;
};

struct AffineBestResponse {
    AffinePolicy policy;
    /// Affine action of the best-response map on means vectors:
    /// m[response to any nu with means m] = psi_matrix * m + psi_offset.
    /// Both are independent of the means the policy was queried at.
    Eigen::MatrixXd psi_matrix;
    Eigen::VectorXd psi_offset;
    AdaptedMap map;  // policy evaluated at the queried means
};

/// Closed-form backward elimination for quadratic costs: every stage
/// first-order condition is linear in (x_t, y_prefix, m), so the optimal
/// policy and the induced map on means are exact.
AffineBestResponse best_response_affine(const ScenarioTree& tree,
                                        const QuadraticMeanFieldCost& cost,
                                        const Eigen::VectorXd& m);

}  // namespace cournot
