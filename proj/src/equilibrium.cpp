#include "cournot/equilibrium.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <string>

#include "cournot/errors.hpp"
#include "cournot/wasserstein.hpp"

namespace cournot {

namespace {

double forward_value(const ScenarioTree& tree, const MeanFieldCost& cost, const AdaptedMap& map,
                     const DiscreteMeasure& nu) {
    double value = 0.0;
    for (int leaf : tree.leaves()) {
        const auto path = tree.path_to(leaf);
        Eigen::VectorXd x(path.size()), y(path.size());
        for (std::size_t i = 0; i < path.size(); ++i) {
            x[static_cast<Eigen::Index>(i)] = tree.node(path[i]).x;
            y[static_cast<Eigen::Index>(i)] = map.action(path[i]);
        }
        value += tree.path_weight(leaf) * total_cost(cost, x, y, nu);
    }
    return value;
}

[[noreturn]] void throw_divergence(const std::vector<double>& gaps) {
    std::ostringstream msg;
    msg << "fixed-point iteration diverged; gap trace:";
    for (double g : gaps) msg << " " << g;
    throw NumericalError(msg.str());
}

void check_divergence(const std::vector<double>& gaps) {
    const std::size_t m = gaps.size();
    if (m >= 6 && gaps[m - 1] > 10.0 * gaps[m - 6]) throw_divergence(gaps);
}

EquilibriumResult iterate_measures(const ScenarioTree& tree, const MeanFieldCost& cost,
                                   const DiscreteMeasure& nu0, const IterationOptions& opt) {
    BestResponse current = best_response(tree, cost, nu0, opt.stage);
    std::vector<double> gaps;
    std::vector<Eigen::VectorXd> mean_trace;
    std::vector<double> value_trace;
    for (int m = 1; m <= opt.max_iter; ++m) {
        BestResponse next = best_response(tree, cost, current.response_measure, opt.stage);
        const double gap =
            wasserstein1(next.response_measure, current.response_measure, opt.w1_max_pairs);
        gaps.push_back(gap);
        mean_trace.push_back(marginal_means(current.response_measure));
        value_trace.push_back(next.value);
        if (gap <= opt.tol) {
            return {std::move(next.response_measure), std::move(next.map),     m,
                    std::move(gaps),                  true,                    SolveMethod::iteration,
                    next.value,                       std::move(mean_trace),   std::move(value_trace)};
        }
        check_divergence(gaps);
        current = std::move(next);
    }
    return {std::move(current.response_measure), std::move(current.map), opt.max_iter,
            std::move(gaps),                     false,                  SolveMethod::iteration,
            current.value,                       std::move(mean_trace),  std::move(value_trace)};
}

// Damped iteration on means (quadratic family: the interaction sees the
// measure only through its means, so a point mass at the blended means is
// a faithful stand-in for the iterate).
EquilibriumResult iterate_means(const ScenarioTree& tree, const QuadraticMeanFieldCost& cost,
                                const DiscreteMeasure& nu0, const IterationOptions& opt) {
    Eigen::VectorXd m_in = marginal_means(nu0);
    BestResponse current = best_response(tree, cost, DiscreteMeasure::dirac(m_in), opt.stage);
    std::vector<double> gaps;
    std::vector<Eigen::VectorXd> mean_trace;
    std::vector<double> value_trace;
    for (int m = 1; m <= opt.max_iter; ++m) {
        const Eigen::VectorXd m_resp = marginal_means(current.response_measure);
        const Eigen::VectorXd m_next = (1.0 - opt.damping) * m_resp + opt.damping * m_in;
        BestResponse next = best_response(tree, cost, DiscreteMeasure::dirac(m_next), opt.stage);
        const double gap =
            wasserstein1(next.response_measure, current.response_measure, opt.w1_max_pairs);
        gaps.push_back(gap);
        mean_trace.push_back(m_in);
        value_trace.push_back(next.value);
        if (gap <= opt.tol) {
            return {std::move(next.response_measure), std::move(next.map),     m,
                    std::move(gaps),                  true,                    SolveMethod::iteration,
                    next.value,                       std::move(mean_trace),   std::move(value_trace)};
        }
        check_divergence(gaps);
        m_in = m_next;
        current = std::move(next);
    }
    return {std::move(current.response_measure), std::move(current.map), opt.max_iter,
            std::move(gaps),                     false,                  SolveMethod::iteration,
            current.value,                       std::move(mean_trace),  std::move(value_trace)};
}

}  // namespace

EquilibriumResult solve_by_iteration(const ScenarioTree& tree, const MeanFieldCost& cost,
                                     const DiscreteMeasure& nu0, const IterationOptions& opt) {
    if (!(opt.tol > 0.0)) throw DomainError("iteration tolerance must be positive");
    if (opt.max_iter < 1) throw DomainError("max_iter must be positive");
    if (!(opt.damping >= 0.0 && opt.damping < 1.0))
        throw DomainError("damping must lie in [0, 1)");
    if (nu0.dim() != tree.horizon())
        throw DomainError("initial measure dimension does not match tree horizon");
    if (opt.damping == 0.0) return iterate_measures(tree, cost, nu0, opt);
    const auto* quad = dynamic_cast<const QuadraticMeanFieldCost*>(&cost);
    if (quad == nullptr)
        throw DomainError("damping blends means and is defined for the quadratic family only");
    return iterate_means(tree, *quad, nu0, opt);
}

EquilibriumResult solve_quadratic(const ScenarioTree& tree, const QuadraticMeanFieldCost& cost) {
    const int n = tree.horizon();
    AffineBestResponse probe = best_response_affine(tree, cost, Eigen::VectorXd::Zero(n));

    const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - probe.psi_matrix;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    if (!lu.isInvertible())
        throw DomainError("degenerate model: I - psi_matrix is singular, no unique equilibrium");
    const Eigen::VectorXd m_star = lu.solve(probe.psi_offset);

    AdaptedMap map = probe.policy.evaluate(tree, m_star);
    DiscreteMeasure nu_hat = pushforward(tree, map);
    const double value = forward_value(tree, cost, map, nu_hat);

    // Post-hoc residual: respond once more at the computed equilibrium.
    AdaptedMap re = probe.policy.evaluate(tree, marginal_means(nu_hat));
    const double residual = wasserstein1(pushforward(tree, re), nu_hat);

    EquilibriumResult out{std::move(nu_hat), std::move(map),          1, {residual}, true,
                          SolveMethod::linear_system, value, {}, {}};
    out.mean_trace.push_back(m_star);
    out.value_trace.push_back(value);
    return out;
}

VerificationReport verify_equilibrium(const ScenarioTree& tree, const MeanFieldCost& cost,
                                      const EquilibriumResult& candidate, double tol,
                                      const SolveOptions& stage) {
    VerificationReport report;
    report.tol = tol;
    BestResponse response = best_response(tree, cost, candidate.nu_hat, stage);
    report.w1_gap = wasserstein1(response.response_measure, candidate.nu_hat);

    report.node_residuals.resize(tree.node_count());
    for (int id = 0; id < tree.node_count(); ++id) {
        const auto path = tree.path_to(id);
        Eigen::VectorXd prefix(path.size() - 1);
        for (std::size_t s = 0; s + 1 < path.size(); ++s)
            prefix[static_cast<Eigen::Index>(s)] = candidate.map.action(path[s]);
        report.node_residuals[id] = std::abs(stage_derivative(
            cost, candidate.nu_hat, tree, id, prefix, candidate.map.action(id), stage));
    }
    report.max_residual = report.node_residuals.maxCoeff();
    report.pass = (report.w1_gap <= tol);
    return report;
}

DiscreteMeasure default_initial_measure(const ScenarioTree& tree) { return type_measure(tree); }

}  // namespace cournot
