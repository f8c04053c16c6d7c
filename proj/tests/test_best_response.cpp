#include <doctest.h>

#include <random>

#include "cournot/best_response.hpp"
#include "cournot/costs.hpp"
#include "cournot/errors.hpp"
#include "cournot/measures.hpp"
#include "test_support.hpp"

using namespace cournot;

namespace {

Eigen::VectorXd vec1(double x) {
    Eigen::VectorXd v(1);
    v << x;
    return v;
}

double forward_cost(const ScenarioTree& tree, const MeanFieldCost& cost, const AdaptedMap& map,
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

}  // namespace

TEST_CASE("zero interaction yields the identity response") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 1 + trial % 3;
        const ScenarioTree tree = testsupport::random_tree(rng, n, 2);
        const QuadraticMeanFieldCost cost = zero_cost(n);
        const DiscreteMeasure nu = testsupport::random_measure(rng, n);

        for (int id = 0; id < tree.node_count(); ++id) {
            const int depth = tree.node(id).depth;
            Eigen::VectorXd prefix = tree.type_prefix(id).head(depth - 1);
            const StageSolution sol = stage_minimize(cost, nu, tree, id, prefix);
            CHECK(sol.y_star == doctest::Approx(tree.node(id).x).epsilon(1e-12));
        }

        const BestResponse response = best_response(tree, cost, nu);
        CHECK(response.value == doctest::Approx(0.0).epsilon(0).scale(1e-12));
        for (int id = 0; id < tree.node_count(); ++id)
            CHECK(response.map.action(id) == doctest::Approx(tree.node(id).x).epsilon(1e-12));
    }
}

TEST_CASE("single-step liquidation stage solve") {
    // First-order condition y - x + (2K-1) y + m = 0, so y* = (x - m)/2 at
    // K=1, A=0, S0=0.
    const QuadraticMeanFieldCost cost = price_impact_cost({1.0, 0.0, 0.0, 1.0, 1});
    const ScenarioTree tree = ScenarioTree::chain(vec1(1.0));
    const DiscreteMeasure nu = DiscreteMeasure::dirac(vec1(1.0 / 3.0));
    const StageSolution sol = stage_minimize(cost, nu, tree, 0, Eigen::VectorXd(0));
    CHECK(sol.y_star == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("terminal-stage closed form of the two-step game") {
    const double K = 1.3, A = 0.4, S0 = 0.7, Q0 = 1.5;
    const ScenarioTree tree = ScenarioTree::bernoulli_product(2);
    const double y1 = 0.35;
    Eigen::VectorXd prefix(1);
    prefix << y1;
    Eigen::VectorXd means(2);
    means << 0.4, 0.6;
    const DiscreteMeasure nu = DiscreteMeasure::dirac(means);

    for (double eps : {1.0, 0.25, 1e-3}) {
        const auto cost = scale_cost(price_impact_cost({K, A, S0, Q0, 2}), eps);
        // Any depth-2 node will do; the formula depends on x_2 only.
        for (int id : tree.nodes_at_depth(2)) {
            const double x2 = tree.node(id).x;
            const double expected =
                (x2 + eps * (S0 - 2.0 * A * (y1 - Q0) - means[0] - means[1])) /
                (1.0 + eps * (2.0 * K + 2.0 * A - 1.0));
            const StageSolution sol = stage_minimize(*cost, nu, tree, id, prefix);
            CHECK(sol.y_star == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("best response fixed-point exhibition at N = 1") {
    const QuadraticMeanFieldCost cost = price_impact_cost({1.0, 0.0, 0.0, 1.0, 1});
    const ScenarioTree tree = ScenarioTree::chain(vec1(1.0));
    const BestResponse response =
        best_response(tree, cost, DiscreteMeasure::dirac(vec1(1.0 / 3.0)));
    REQUIRE(response.response_measure.size() == 1);
    CHECK(response.response_measure.atoms()[0].point[0] ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("vanishing interaction recovers the identity map on the Bernoulli tree") {
    const ScenarioTree tree = ScenarioTree::bernoulli_product(2);
    const auto cost = scale_cost(price_impact_cost({1.0, 0.1, 0.0, 1.0, 2}), 0.0);
    std::mt19937_64 rng(42);
    const DiscreteMeasure nu = testsupport::random_measure(rng, 2);
    const BestResponse response = best_response(tree, *cost, nu);
    for (int id = 0; id < tree.node_count(); ++id)
        CHECK(response.map.action(id) == doctest::Approx(tree.node(id).x).epsilon(1e-12));
    // Response measure equals the type distribution.
    CHECK(response.response_measure.size() == 4);
}

TEST_CASE("backward aggregate equals the forward path cost") {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 15; ++trial) {
        const int n = 1 + trial % 3;
        const ScenarioTree tree = testsupport::random_tree(rng, n, 2);
        const QuadraticMeanFieldCost cost = testsupport::random_psd_cost(rng, n);
        const DiscreteMeasure nu = testsupport::random_measure(rng, n);
        const BestResponse response = best_response(tree, cost, nu);
        const double forward = forward_cost(tree, cost, response.map, nu);
        CHECK(response.value == doctest::Approx(forward).epsilon(1e-9));
    }
}

TEST_CASE("single-node perturbations never improve the response") {
    std::mt19937_64 rng(44);
    const double h = 1e-3;
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 1 + trial % 3;
        const ScenarioTree tree = testsupport::random_tree(rng, n, 2);
        const QuadraticMeanFieldCost cost = testsupport::random_psd_cost(rng, n);
        const DiscreteMeasure nu = testsupport::random_measure(rng, n);
        const BestResponse response = best_response(tree, cost, nu);
        const double base = forward_cost(tree, cost, response.map, nu);
        for (int id = 0; id < tree.node_count(); ++id) {
            for (double sign : {-1.0, 1.0}) {
                std::vector<double> actions = response.map.actions();
                actions[id] += sign * h;
                const double perturbed =
                    forward_cost(tree, cost, AdaptedMap(std::move(actions)), nu);
                CHECK(perturbed >= base - 1e-12);
            }
        }
    }
}

TEST_CASE("envelope derivative matches central finite differences") {
    std::mt19937_64 rng(45);
    std::uniform_real_distribution<double> offset(-0.5, 0.5);
    const double h = 1e-5;
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 2 + trial % 2;
        const ScenarioTree tree = testsupport::random_tree(rng, n, 2);
        const QuadraticMeanFieldCost cost = testsupport::random_psd_cost(rng, n);
        const DiscreteMeasure nu = testsupport::random_measure(rng, n);
        const int node = tree.roots()[0];
        const double y = tree.node(node).x + offset(rng);
        const Eigen::VectorXd prefix(0);
        const double analytic = stage_derivative(cost, nu, tree, node, prefix, y);
        const double fd = (stage_objective(cost, nu, tree, node, prefix, y + h) -
                           stage_objective(cost, nu, tree, node, prefix, y - h)) /
                          (2.0 * h);
        CHECK(analytic == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("affine and generic responses agree on random quadratic instances") {
    std::mt19937_64 rng(46);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + trial % 3;
        const ScenarioTree tree = testsupport::random_tree(rng, n, 2);
        const QuadraticMeanFieldCost cost = testsupport::random_psd_cost(rng, n);
        const DiscreteMeasure nu = testsupport::random_measure(rng, n);
        const BestResponse generic = best_response(tree, cost, nu);
        const AffineBestResponse affine = best_response_affine(tree, cost, marginal_means(nu));
        for (int id = 0; id < tree.node_count(); ++id)
            CHECK(generic.map.action(id) ==
                  doctest::Approx(affine.map.action(id)).epsilon(1e-8));
        // The symbolic mean map reproduces the response means.
        const Eigen::VectorXd predicted =
            affine.psi_matrix * marginal_means(nu) + affine.psi_offset;
        const Eigen::VectorXd actual = marginal_means(generic.response_measure);
        CHECK((predicted - actual).cwiseAbs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("affine elimination closed forms") {
    SUBCASE("zero interaction gives the identity policy") {
        const ScenarioTree tree = ScenarioTree::bernoulli_product(2);
        const auto cost = scale_cost(price_impact_cost({1.0, 0.2, 0.3, 1.0, 2}), 0.0);
        const auto& quad = dynamic_cast<const QuadraticMeanFieldCost&>(*cost);
        const AffineBestResponse affine =
            best_response_affine(tree, quad, Eigen::VectorXd::Zero(2));
        CHECK(affine.psi_matrix.isZero(1e-14));
        CHECK(affine.psi_offset[0] == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(affine.psi_offset[1] == doctest::Approx(0.5).epsilon(1e-14));
    }

    SUBCASE("single-step mean map") {
        const double K = 1.4, A = 0.3, S0 = 0.2, Q0 = 2.0, x0 = 0.8;
        const QuadraticMeanFieldCost cost = price_impact_cost({K, A, S0, Q0, 1});
        const ScenarioTree tree = ScenarioTree::chain(vec1(x0));
        const AffineBestResponse affine =
            best_response_affine(tree, cost, Eigen::VectorXd::Zero(1));
        CHECK(affine.psi_matrix(0, 0) ==
              doctest::Approx(-1.0 / (2.0 * K + 2.0 * A)).epsilon(1e-14));
        CHECK(affine.psi_offset[0] ==
              doctest::Approx((x0 + S0 + 2.0 * A * Q0) / (2.0 * K + 2.0 * A)).epsilon(1e-14));
    }

    SUBCASE("coefficients approach the identity as the interaction vanishes") {
        const ScenarioTree tree = ScenarioTree::bernoulli_product(2);
        const auto cost = scale_cost(price_impact_cost({1.0, 0.2, 0.3, 1.0, 2}), 1e-9);
        const auto& quad = dynamic_cast<const QuadraticMeanFieldCost&>(*cost);
        const AffineBestResponse affine =
            best_response_affine(tree, quad, Eigen::VectorXd::Zero(2));
        for (int id : tree.nodes_at_depth(1)) {
            CHECK(affine.policy.at(id).alpha == doctest::Approx(1.0).epsilon(1e-7));
            CHECK(affine.policy.at(id).gamma.cwiseAbs().maxCoeff() <= 1e-7);
            CHECK(std::abs(affine.policy.at(id).delta) <= 1e-7);
        }
        for (int id : tree.nodes_at_depth(2))
            CHECK(affine.policy.at(id).beta.cwiseAbs().maxCoeff() <= 1e-7);
    }
}

TEST_CASE("solver guards and preconditions") {
    const ScenarioTree tree = ScenarioTree::bernoulli_product(2);
    const QuadraticMeanFieldCost cost = zero_cost(2);
    const DiscreteMeasure nu = DiscreteMeasure::dirac(Eigen::VectorXd::Zero(2));

    SolveOptions tight;
    tight.max_depth = 1;
    CHECK_THROWS_AS(best_response(tree, cost, nu, tight), DomainError);

    SolveOptions narrow;
    narrow.max_branching = 1;
    CHECK_THROWS_AS(best_response(tree, cost, nu, narrow), DomainError);

    // Prefix length must match the node depth.
    CHECK_THROWS_AS(stage_minimize(cost, nu, tree, 0, Eigen::VectorXd::Ones(1)), DomainError);
}
