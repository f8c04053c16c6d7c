#include "cournot/contraction.hpp"

#include <limits>

namespace cournot {

ContractionCertificate certify(const MeanFieldCost& cost, int horizon) {
    if (horizon < 1) throw DomainError("certify: horizon must be positive");
    ContractionCertificate cert;
    cert.N = horizon;
    auto [lambda, kappa] = cost.hessian_bounds();
    cert.lambda = lambda;
    cert.kappa = kappa;
    cert.lipschitz = cost.measure_lipschitz();

    const StageBounds bounds = stage_bounds(lambda, kappa, horizon);
    cert.lambda_k = bounds.lambda_k;
    cert.kappa_k = bounds.kappa_k;

    cert.convexity_ok = (cert.lambda_k.minCoeff() > -1.0);

    double odd_product = 1.0;  // 3 * 5 * ... * (2N-1)
    for (int k = 1; k <= horizon - 1; ++k) odd_product *= static_cast<double>(2 * k + 1);
    cert.cond_odd_product_ok = (kappa + lambda >= odd_product * (kappa - lambda));

    if (cert.convexity_ok) {
        cert.lipschitz_k = stage_lipschitz(cert.lipschitz, cert.lambda_k, cert.kappa_k);
        cert.rho = contraction_factor(cert.lipschitz_k[0], cert.lambda_k[0], cert.kappa_k[0],
                                      horizon);
        cert.cond_contraction_ok = (cert.rho < 1.0);
    } else {
        cert.lipschitz_k = Eigen::VectorXd::Constant(horizon,
                                                     std::numeric_limits<double>::quiet_NaN());
        cert.rho = std::numeric_limits<double>::infinity();
        cert.cond_contraction_ok = false;
    }
    return cert;
}

}  // namespace cournot
