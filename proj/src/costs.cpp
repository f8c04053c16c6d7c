#include "cournot/costs.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "cournot/errors.hpp"

namespace cournot {

namespace {
constexpr double kSymTol = 1e-12;
}

QuadraticMeanFieldCost::QuadraticMeanFieldCost(Eigen::MatrixXd Q, Eigen::VectorXd b,
                                               Eigen::MatrixXd M, double c0)
    : Q_(std::move(Q)), b_(std::move(b)), M_(std::move(M)), c0_(c0) {
    check_shapes();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q_, Eigen::EigenvaluesOnly);
    lambda_ = es.eigenvalues().minCoeff();
    kappa_ = es.eigenvalues().maxCoeff();
    lipschitz_ = M_.cwiseAbs().rowwise().sum().maxCoeff();
}

QuadraticMeanFieldCost::QuadraticMeanFieldCost(Eigen::MatrixXd Q, Eigen::VectorXd b,
                                               Eigen::MatrixXd M, double c0, double lambda,
                                               double kappa, double lipschitz)
    : Q_(std::move(Q)),
      b_(std::move(b)),
      M_(std::move(M)),
      c0_(c0),
      lambda_(lambda),
      kappa_(kappa),
      lipschitz_(lipschitz) {
    check_shapes();
    if (kappa_ < lambda_) throw DomainError("hessian bounds require kappa >= lambda");
    if (lipschitz_ < 0.0) throw DomainError("measure Lipschitz constant must be >= 0");
}

void QuadraticMeanFieldCost::check_shapes() const {
    const Eigen::Index n = b_.size();
    if (n < 1) throw DomainError("quadratic cost dimension must be positive");
    if (Q_.rows() != n || Q_.cols() != n || M_.rows() != n || M_.cols() != n)
        throw DomainError("quadratic cost shapes disagree");
    if ((Q_ - Q_.transpose()).cwiseAbs().maxCoeff() > kSymTol)
        throw DomainError("quadratic term must be symmetric");
}

double QuadraticMeanFieldCost::value(const Eigen::VectorXd& y, const DiscreteMeasure& nu) const {
    return value_at_means(y, marginal_means(nu));
}

double QuadraticMeanFieldCost::value_at_means(const Eigen::VectorXd& y,
                                              const Eigen::VectorXd& m) const {
    if (y.size() != b_.size() || m.size() != b_.size())
        throw DomainError("quadratic cost: dimension mismatch");
    return 0.5 * y.dot(Q_ * y) + (b_ + M_ * m).dot(y) + c0_;
}

Eigen::VectorXd QuadraticMeanFieldCost::gradient(const Eigen::VectorXd& y,
                                                 const DiscreteMeasure& nu) const {
    return gradient_at_means(y, marginal_means(nu));
}

Eigen::VectorXd QuadraticMeanFieldCost::gradient_at_means(const Eigen::VectorXd& y,
                                                          const Eigen::VectorXd& m) const {
    if (y.size() != b_.size() || m.size() != b_.size())
        throw DomainError("quadratic cost: dimension mismatch");
    return Q_ * y + b_ + M_ * m;
}

Eigen::MatrixXd QuadraticMeanFieldCost::hessian(const Eigen::VectorXd& y,
                                                const DiscreteMeasure& nu) const {
    (void)y;
    (void)nu;
    return Q_;
}

Eigen::VectorXd QuadraticMeanFieldCost::measure_stats(const DiscreteMeasure& nu) const {
    if (nu.dim() != dimension()) throw DomainError("quadratic cost: measure dimension mismatch");
    return marginal_means(nu);
}

std::unique_ptr<MeanFieldCost> QuadraticMeanFieldCost::clone() const {
    return std::make_unique<QuadraticMeanFieldCost>(*this);
}

QuadraticMeanFieldCost price_impact_cost(const PriceImpactParams& params) {
    if (params.K < 0.5)
        throw DomainError("price impact requires K >= 1/2 (convexity lost at K = " +
                          std::to_string(params.K) + ")");
    if (params.A < 0.0) throw DomainError("price impact requires A >= 0");
    if (!(params.Q0 > 0.0)) throw DomainError("price impact requires Q0 > 0");
    if (params.N < 1) throw DomainError("price impact requires N >= 1");

    const int n = params.N;
    Eigen::MatrixXd Q = Eigen::MatrixXd::Constant(n, n, 2.0 * params.A);
    Q.diagonal().array() += 2.0 * params.K - 1.0;
    Eigen::VectorXd b =
        Eigen::VectorXd::Constant(n, -(params.S0 + 2.0 * params.A * params.Q0));
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k <= i; ++k) M(i, k) = 1.0;
    const double c0 = params.A * params.Q0 * params.Q0;
    const double lambda = 2.0 * params.K - 1.0;
    const double kappa = lambda + 2.0 * params.A * n;
    return QuadraticMeanFieldCost(std::move(Q), std::move(b), std::move(M), c0, lambda, kappa,
                                  static_cast<double>(n));
}

namespace {

class ScaledCost final : public MeanFieldCost {
public:
    ScaledCost(std::unique_ptr<MeanFieldCost> inner, double eps)
        : inner_(std::move(inner)), eps_(eps) {}

    int dimension() const override { return inner_->dimension(); }
    double value(const Eigen::VectorXd& y, const DiscreteMeasure& nu) const override {
        return eps_ * inner_->value(y, nu);
    }
    Eigen::VectorXd gradient(const Eigen::VectorXd& y, const DiscreteMeasure& nu) const override {
        return eps_ * inner_->gradient(y, nu);
    }
    Eigen::MatrixXd hessian(const Eigen::VectorXd& y, const DiscreteMeasure& nu) const override {
        return eps_ * inner_->hessian(y, nu);
    }
    Eigen::VectorXd measure_stats(const DiscreteMeasure& nu) const override {
        return inner_->measure_stats(nu);
    }
    std::pair<double, double> hessian_bounds() const override {
        auto [lo, hi] = inner_->hessian_bounds();
        return {eps_ * lo, eps_ * hi};
    }
    double measure_lipschitz() const override { return eps_ * inner_->measure_lipschitz(); }
    std::unique_ptr<MeanFieldCost> clone() const override {
        return std::make_unique<ScaledCost>(inner_->clone(), eps_);
    }

private:
    std::unique_ptr<MeanFieldCost> inner_;
    double eps_;
};

}  // namespace

std::unique_ptr<MeanFieldCost> scale_cost(const MeanFieldCost& cost, double eps) {
    if (!(eps >= 0.0 && eps <= 1.0)) throw DomainError("scale factor must lie in [0, 1]");
    if (const auto* q = dynamic_cast<const QuadraticMeanFieldCost*>(&cost)) {
        auto [lambda, kappa] = q->hessian_bounds();
        return std::make_unique<QuadraticMeanFieldCost>(
            eps * q->quadratic_term(), eps * q->linear_term(), eps * q->mean_coupling(),
            eps * q->constant_term(), eps * lambda, eps * kappa,
            eps * q->measure_lipschitz());
    }
    if (eps == 1.0) return cost.clone();
    return std::make_unique<ScaledCost>(cost.clone(), eps);
}

double total_cost(const MeanFieldCost& cost, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                  const DiscreteMeasure& nu) {
    if (x.size() != y.size() || static_cast<int>(y.size()) != cost.dimension() ||
        nu.dim() != cost.dimension())
        throw DomainError("total_cost: dimension mismatch");
    return 0.5 * (x - y).squaredNorm() + cost.value(y, nu);
}

QuadraticMeanFieldCost zero_cost(int dimension) {
    if (dimension < 1) throw DomainError("dimension must be positive");
    return QuadraticMeanFieldCost(Eigen::MatrixXd::Zero(dimension, dimension),
                                  Eigen::VectorXd::Zero(dimension),
                                  Eigen::MatrixXd::Zero(dimension, dimension), 0.0, 0.0, 0.0,
                                  0.0);
}

}  // namespace cournot
