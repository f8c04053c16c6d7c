#include <doctest.h>

#include <cmath>
#include <random>

#include "cournot/best_response.hpp"
#include "cournot/errors.hpp"
#include "cournot/verification.hpp"
#include "test_support.hpp"

using namespace cournot;

namespace {
Eigen::VectorXd vec1(double x) {
    Eigen::VectorXd v(1);
    v << x;
    return v;
}
}  // namespace

TEST_CASE("grid oracle hits an on-grid optimum exactly") {
    // Zero interaction: the stage objective is (x - y)^2/2 and x lies on
    // the grid.
    const QuadraticMeanFieldCost cost = zero_cost(1);
    const ScenarioTree tree = ScenarioTree::chain(vec1(0.5));
    const DiscreteMeasure nu = DiscreteMeasure::dirac(vec1(0.0));
    const GridSolution sol =
        grid_oracle_stage(cost, nu, tree, 0, Eigen::VectorXd(0), -1.0, 2.0, 6);
    CHECK(sol.y_grid == 0.5);
    CHECK(sol.value == 0.0);
}

TEST_CASE("grid oracle brackets the single-step optimum") {
    const QuadraticMeanFieldCost cost = price_impact_cost({1.0, 0.0, 0.0, 1.0, 1});
    const ScenarioTree tree = ScenarioTree::chain(vec1(1.0));
    const DiscreteMeasure nu = DiscreteMeasure::dirac(vec1(1.0 / 3.0));
    const GridSolution sol =
        grid_oracle_stage(cost, nu, tree, 0, Eigen::VectorXd(0), -2.0, 2.0, 40000);
    CHECK(std::abs(sol.y_grid - 1.0 / 3.0) <= 1e-4);
}

TEST_CASE("grid oracle ties break to the smaller action") {
    const QuadraticMeanFieldCost cost = zero_cost(1);
    const ScenarioTree tree = ScenarioTree::chain(vec1(0.5));
    const DiscreteMeasure nu = DiscreteMeasure::dirac(vec1(0.0));
    // Grid {0, 1}: both points cost 1/8; the smaller wins.
    const GridSolution sol =
        grid_oracle_stage(cost, nu, tree, 0, Eigen::VectorXd(0), 0.0, 1.0, 1);
    CHECK(sol.y_grid == 0.0);
}

TEST_CASE("grid oracle input validation") {
    const QuadraticMeanFieldCost cost = zero_cost(1);
    const ScenarioTree tree = ScenarioTree::chain(vec1(0.0));
    const DiscreteMeasure nu = DiscreteMeasure::dirac(vec1(0.0));
    CHECK_THROWS_AS(grid_oracle_stage(cost, nu, tree, 0, Eigen::VectorXd(0), 1.0, 1.0, 10),
                    DomainError);
    CHECK_THROWS_AS(grid_oracle_stage(cost, nu, tree, 0, Eigen::VectorXd(0), -1.0, 1.0, 2),
                    DomainError);
}

TEST_CASE("nested stage solves agree with the recursive grid oracle") {
    std::mt19937_64 rng(61);
    const double step = 1e-4;
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 1 + trial % 3;
        const ScenarioTree tree = testsupport::random_tree(rng, n, 2);
        const QuadraticMeanFieldCost cost = testsupport::random_psd_cost(rng, n);
        const DiscreteMeasure nu = testsupport::random_measure(rng, n);
        const int node = tree.roots()[0];
        const StageSolution newton = stage_minimize(cost, nu, tree, node, Eigen::VectorXd(0));
        const int steps = 64;
        const GridSolution grid = grid_oracle_stage(
            cost, nu, tree, node, Eigen::VectorXd(0), newton.y_star - 0.5 * steps * step,
            newton.y_star + 0.5 * steps * step, steps);
        CHECK(std::abs(newton.y_star - grid.y_grid) <= step);
        CHECK(newton.opt_value == doctest::Approx(grid.value).epsilon(1e-7));
    }
}

TEST_CASE("monotonicity integral of two point masses") {
    // sigma = delta_0 - delta_1 against the Gaussian kernel:
    // k(0,0) + k(1,1) - 2 k(0,1) = 2 (1 - e^{-1}).
    const DiscreteMeasure a = DiscreteMeasure::dirac(vec1(0.0));
    const DiscreteMeasure b = DiscreteMeasure::dirac(vec1(1.0));
    const double expected = 2.0 * (1.0 - std::exp(-1.0));
    CHECK(lasry_lions_integral(gaussian_kernel, a, b) ==
          doctest::Approx(expected).epsilon(1e-14));
    CHECK(lasry_lions_integral(gaussian_kernel, a, a) == 0.0);
}

TEST_CASE("monotonicity integral is a quadratic form in the signed difference") {
    std::mt19937_64 rng(62);
    for (int trial = 0; trial < 20; ++trial) {
        const int dim = 1 + trial % 3;
        const DiscreteMeasure a = testsupport::random_measure(rng, dim);
        const DiscreteMeasure b = testsupport::random_measure(rng, dim);
        CHECK(lasry_lions_integral(gaussian_kernel, a, b) ==
              doctest::Approx(lasry_lions_integral(gaussian_kernel, b, a)).epsilon(1e-13));
    }
}

TEST_CASE("sampled monotonicity stays strictly positive") {
    const MonotonicityReport report = monotonicity_probe(gaussian_kernel, 1234, 1000);
    CHECK(report.trials == 1000);
    CHECK(report.all_positive);
    CHECK(report.min_integral > 1e-12);

    // Same seed, same answer.
    const MonotonicityReport again = monotonicity_probe(gaussian_kernel, 1234, 1000);
    CHECK(again.min_integral == report.min_integral);
}

TEST_CASE("loop probe of the mean coupling term") {
    const LoopProbeResult probe = potential_loop_probe(1.0);
    CHECK(probe.segment_integrals[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(probe.segment_integrals[1]) <= 1e-12);
    CHECK(std::abs(probe.segment_integrals[2]) <= 1e-12);
    CHECK(std::abs(probe.segment_integrals[3]) <= 1e-12);
    CHECK(probe.loop_discrepancy == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(probe.quadrature_error <= 1e-9);

    const LoopProbeResult zero = potential_loop_probe(0.0);
    CHECK(zero.loop_discrepancy == doctest::Approx(0.0).epsilon(0).scale(1e-12));
}

TEST_CASE("loop discrepancy scales linearly in the corner parameter") {
    const double base = potential_loop_probe(1.0).loop_discrepancy;
    for (double t : {2.0, 5.0}) {
        const LoopProbeResult probe = potential_loop_probe(t);
        CHECK(probe.loop_discrepancy / t == doctest::Approx(base).epsilon(1e-9));
    }
}

TEST_CASE("separable part closes the loop") {
    for (double t : {1.0, 3.0}) {
        const LoopProbeResult probe = separable_loop_probe(t, {1.2, 0.7, 0.4, 1.5, 2});
        CHECK(std::abs(probe.loop_discrepancy) <= 1e-9);
        CHECK(probe.quadrature_error <= 1e-6);
    }
}
