#pragma once

#include <Eigen/Core>
#include <vector>

#include "cournot/best_response.hpp"
#include "cournot/costs.hpp"
#include "cournot/measures.hpp"

namespace cournot {

enum class SolveMethod { iteration, linear_system };

struct EquilibriumResult {
    DiscreteMeasure nu_hat;
    AdaptedMap map;
    int iterations = 0;
    std::vector<double> gaps;  // fixed-point residual per iteration
    bool converged = false;
    SolveMethod method = SolveMethod::iteration;
    double value = 0.0;  // equilibrium expected cost

    // Per-iteration trace for reporting: means of the iterate and the
    // expected cost of the response to it.
    std::vector<Eigen::VectorXd> mean_trace;
    std::vector<double> value_trace;
};

struct IterationOptions {
    double tol = 1e-10;
    int max_iter = 10000;
    double damping = 0.0;  // in [0,1); blends means, quadratic family only
    std::size_t w1_max_pairs = 4096;
    SolveOptions stage;
};

/// Fixed-point iteration nu <- response(nu). Iteration m reports the
/// residual gap_m = W1(response(nu_m), nu_m); the returned nu_hat is the
/// response at the first iterate whose residual is within tol, so a game
/// with a constant response map converges in one iteration from any start.
/// Divergence (gap growing more than tenfold over five steps) raises a
/// NumericalError carrying the gap trace.
EquilibriumResult solve_by_iteration(const ScenarioTree& tree, const MeanFieldCost& cost,
                                     const DiscreteMeasure& nu0,
                                     const IterationOptions& options = {});

/// Exact equilibrium of the quadratic family: the response acts affinely
/// on means vectors, so the equilibrium means solve
///   (I - psi_matrix) m* = psi_offset
/// and the equilibrium map is the affine policy at m*.
EquilibriumResult solve_quadratic(const ScenarioTree& tree, const QuadraticMeanFieldCost& cost);

struct VerificationReport {
    double w1_gap = 0.0;            // W1(response(nu_hat), nu_hat)
    Eigen::VectorXd node_residuals;  // |stage derivative| at candidate actions
    double max_residual = 0.0;
    double tol = 0.0;
    bool pass = false;
};

/// Recompute the best response to the candidate measure from scratch and
/// report the fixed-point gap plus per-node stationarity residuals.
VerificationReport verify_equilibrium(const ScenarioTree& tree, const MeanFieldCost& cost,
                                      const EquilibriumResult& candidate, double tol,
                                      const SolveOptions& stage = {});

/// Default initial iterate: the type distribution viewed on action space.
DiscreteMeasure default_initial_measure(const ScenarioTree& tree);

}  // namespace cournot
