#pragma once

#include <Eigen/Core>
#include <memory>
#include <utility>

#include "cournot/measures.hpp"

namespace cournot {

/// Mean-field interaction V[nu](y) entering the total cost
///   F(x, y, nu) = 1/2 ||x - y||^2 + V[nu](y).
///
/// Implementations expose exact derivatives in y plus the three constants
/// consumed by the contraction certificate:
///  - hessian_bounds(): (lambda, kappa) with
///        lambda I <= hessian(y, nu) <= kappa I  for all (y, nu),
///  - measure_lipschitz(): L with
///        ||gradient(y, nu) - gradient(y, nu')||_inf <= L W1(nu, nu').
class MeanFieldCost {
public:
    virtual ~MeanFieldCost() = default;

    virtual int dimension() const = 0;
    virtual double value(const Eigen::VectorXd& y, const DiscreteMeasure& nu) const = 0;
    virtual Eigen::VectorXd gradient(const Eigen::VectorXd& y, const DiscreteMeasure& nu) const = 0;
    virtual Eigen::MatrixXd hessian(const Eigen::VectorXd& y, const DiscreteMeasure& nu) const = 0;
    /// Summary of the measure that the evaluation actually depends on.
    virtual Eigen::VectorXd measure_stats(const DiscreteMeasure& nu) const = 0;
    virtual std::pair<double, double> hessian_bounds() const = 0;
    virtual double measure_lipschitz() const = 0;
    virtual std::unique_ptr<MeanFieldCost> clone() const = 0;
};

/// Quadratic family
///   V[nu](y) = 1/2 y^T Q y + (b + M m[nu])^T y + c0,
/// where m[nu] is the vector of marginal means. The measure enters only
/// through m[nu]; M couples actions to the population means.
class QuadraticMeanFieldCost final : public MeanFieldCost {
public:
    /// Constants derived from the data: hessian bounds are the extreme
    /// eigenvalues of Q, the measure Lipschitz constant is the maximum
    /// absolute row sum of M (moving unit W1 mass shifts each mean
    /// component by at most 1 under the l1 ground metric).
    QuadraticMeanFieldCost(Eigen::MatrixXd Q, Eigen::VectorXd b, Eigen::MatrixXd M, double c0);
    /// Same data with the constants supplied in closed form.
    QuadraticMeanFieldCost(Eigen::MatrixXd Q, Eigen::VectorXd b, Eigen::MatrixXd M, double c0,
                           double lambda, double kappa, double lipschitz);

    int dimension() const override { return static_cast<int>(b_.size()); }
    double value(const Eigen::VectorXd& y, const DiscreteMeasure& nu) const override;
    Eigen::VectorXd gradient(const Eigen::VectorXd& y, const DiscreteMeasure& nu) const override;
    Eigen::MatrixXd hessian(const Eigen::VectorXd& y, const DiscreteMeasure& nu) const override;
    Eigen::VectorXd measure_stats(const DiscreteMeasure& nu) const override;
    std::pair<double, double> hessian_bounds() const override { return {lambda_, kappa_}; }
    double measure_lipschitz() const override { return lipschitz_; }
    std::unique_ptr<MeanFieldCost> clone() const override;

    const Eigen::MatrixXd& quadratic_term() const { return Q_; }
    const Eigen::VectorXd& linear_term() const { return b_; }
    const Eigen::MatrixXd& mean_coupling() const { return M_; }
    double constant_term() const { return c0_; }

    /// Value/gradient at a precomputed means vector.
    double value_at_means(const Eigen::VectorXd& y, const Eigen::VectorXd& m) const;
    Eigen::VectorXd gradient_at_means(const Eigen::VectorXd& y, const Eigen::VectorXd& m) const;

private:
    Eigen::MatrixXd Q_;
    Eigen::VectorXd b_;
    Eigen::MatrixXd M_;
    double c0_;
    double lambda_, kappa_, lipschitz_;

    void check_shapes() const;
};

/// Optimal-liquidation game: an agent holding Q0 shares sells y_t shares
/// at each step against quadratic transaction costs (weight K), a terminal
/// inventory penalty (weight A), initial price S0, and permanent impact of
/// the population's mean selling schedule.
struct PriceImpactParams {
    double K = 1.0;   // transaction cost weight, >= 1/2
    double A = 0.0;   // inventory penalty, >= 0
    double S0 = 0.0;  // initial price
    double Q0 = 1.0;  // initial shares, > 0
    int N = 1;        // number of trading dates
};

/// Quadratic cost of the price-impact game:
///   Q = 2A 11^T + (2K-1) I,  b = -(S0 + 2A Q0) 1,
///   M lower-triangular of ones (cumulative means),  c0 = A Q0^2,
/// with hessian bounds (2K-1, 2K-1+2AN) and Lipschitz constant N.
QuadraticMeanFieldCost price_impact_cost(const PriceImpactParams& params);

/// Cost with the interaction replaced by eps * V, eps in [0, 1]. Bounds
/// and the Lipschitz constant scale linearly. Quadratic costs stay in the
/// quadratic family.
std::unique_ptr<MeanFieldCost> scale_cost(const MeanFieldCost& cost, double eps);

/// 1/2 ||x - y||^2 + V[nu](y).
double total_cost(const MeanFieldCost& cost, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                  const DiscreteMeasure& nu);

/// Quadratic cost with V identically zero.
QuadraticMeanFieldCost zero_cost(int dimension);

}  // namespace cournot
