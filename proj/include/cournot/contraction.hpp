#pragma once

#include <Eigen/Core>
#include <string>

#include "cournot/costs.hpp"
#include "cournot/errors.hpp"

namespace cournot {

/// Hessian bounds of the backward value functions, stage by stage.
/// Index 0 holds stage k = 1; index N-1 holds stage k = N.
template <typename Scalar>
struct StageBoundsT {
    Eigen::Vector<Scalar, Eigen::Dynamic> lambda_k;
    Eigen::Vector<Scalar, Eigen::Dynamic> kappa_k;
};
using StageBounds = StageBoundsT<double>;

/// Stage bounds
///   lambda_k = (kappa + lambda - P_k (kappa - lambda)) / 2,
///   kappa_k  = (kappa + lambda + P_k (kappa - lambda)) / 2,
/// with P_k = (2k+1)(2k+3)...(2N-1) and the empty product P_N = 1, so that
/// (lambda_N, kappa_N) = (lambda, kappa). Backward inf-projection widens the
/// spread by one odd factor per stage.
template <typename Scalar>
StageBoundsT<Scalar> stage_bounds(Scalar lambda, Scalar kappa, int horizon) {
    if (horizon < 1) throw DomainError("stage_bounds: horizon must be positive");
    if (!(kappa >= lambda) || !(lambda >= Scalar(0)))
        throw DomainError("stage_bounds requires kappa >= lambda >= 0");
    StageBoundsT<Scalar> out;
    out.lambda_k.resize(horizon);
    out.kappa_k.resize(horizon);
    const Scalar sum = kappa + lambda;
    const Scalar gap = kappa - lambda;
    Scalar odd_product = Scalar(1);  // P_N
    for (int k = horizon; k >= 1; --k) {
        out.lambda_k[k - 1] = (sum - odd_product * gap) / Scalar(2);
        out.kappa_k[k - 1] = (sum + odd_product * gap) / Scalar(2);
        odd_product *= Scalar(2 * k - 1);  // extend to P_{k-1}
    }
    return out;
}

/// Lipschitz cascade L_N = L, L_k = ((1+kappa_{k+1})/(1+lambda_{k+1})) L_{k+1}.
template <typename Scalar>
Eigen::Vector<Scalar, Eigen::Dynamic> stage_lipschitz(
    Scalar lipschitz, const Eigen::Vector<Scalar, Eigen::Dynamic>& lambda_k,
    const Eigen::Vector<Scalar, Eigen::Dynamic>& kappa_k) {
    const Eigen::Index n = lambda_k.size();
    if (n < 1 || kappa_k.size() != n) throw DomainError("stage_lipschitz: bad stage vectors");
    if (lipschitz < Scalar(0)) throw DomainError("stage_lipschitz requires L >= 0");
    for (Eigen::Index k = 0; k < n; ++k)
        if (!(lambda_k[k] > Scalar(-1)))
            throw DomainError("stage_lipschitz: convexity failure, stage lower bound <= -1");
    Eigen::Vector<Scalar, Eigen::Dynamic> out(n);
    out[n - 1] = lipschitz;
    for (Eigen::Index k = n - 2; k >= 0; --k)
        out[k] = (Scalar(1) + kappa_k[k + 1]) / (Scalar(1) + lambda_k[k + 1]) * out[k + 1];
    return out;
}

/// Certified Lipschitz constant of the best-response map in W1,
///   rho = L_1/(1+lambda_1) * sum_{j=0}^{N-1} r^j,  r = (kappa_1-lambda_1)/(1+lambda_1).
/// The geometric sum is evaluated term by term; the equivalent closed-form
/// quotient has a removable singularity at r = 1.
template <typename Scalar>
Scalar contraction_factor(Scalar lipschitz_1, Scalar lambda_1, Scalar kappa_1, int horizon) {
    if (horizon < 1) throw DomainError("contraction_factor: horizon must be positive");
    if (!(lambda_1 > Scalar(-1)))
        throw DomainError("contraction_factor requires lambda_1 > -1");
    const Scalar r = (kappa_1 - lambda_1) / (Scalar(1) + lambda_1);
    Scalar geom = Scalar(0), term = Scalar(1);
    for (int j = 0; j < horizon; ++j) {
        geom += term;
        term *= r;
    }
    return lipschitz_1 / (Scalar(1) + lambda_1) * geom;
}

/// Stage constants and verdicts for one cost. `passes()` requires strict
/// convexity of every stage, the odd-product condition
///   kappa + lambda >= 3*5*...*(2N-1) * (kappa - lambda),
/// and rho < 1.
struct ContractionCertificate {
    int N = 0;
    double lambda = 0.0, kappa = 0.0, lipschitz = 0.0;
    Eigen::VectorXd lambda_k, kappa_k, lipschitz_k;
    double rho = 0.0;
    bool cond_odd_product_ok = false;
    bool cond_contraction_ok = false;
    bool convexity_ok = false;
    // Interpretation on record: the stage spread term is (kappa - lambda).
    std::string bounds_note = "stage bounds widen by odd multiples of the spread (kappa - lambda)";

    bool passes() const { return convexity_ok && cond_odd_product_ok && cond_contraction_ok; }
};

/// Assemble the full certificate for a cost over `horizon` stages.
ContractionCertificate certify(const MeanFieldCost& cost, int horizon);

}  // namespace cournot
