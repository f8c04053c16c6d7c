#include <doctest.h>

#include <random>

#include "cournot/errors.hpp"
#include "cournot/measures.hpp"
#include "test_support.hpp"

using namespace cournot;

TEST_CASE("leaf paths of a single chain") {
    Eigen::VectorXd values(2);
    values << 0.0, 1.0;
    const ScenarioTree tree = ScenarioTree::chain(values);
    const auto paths = leaf_paths(tree);
    REQUIRE(paths.size() == 1);
    CHECK(paths[0].weight == 1.0);
    CHECK(paths[0].path[0] == 0.0);
    CHECK(paths[0].path[1] == 1.0);
}

TEST_CASE("leaf paths of the two-step Bernoulli product") {
    const ScenarioTree tree = ScenarioTree::bernoulli_product(2);
    const auto paths = leaf_paths(tree);
    REQUIRE(paths.size() == 4);
    double total = 0.0;
    for (const auto& wp : paths) {
        CHECK(wp.weight == doctest::Approx(0.25).epsilon(0));
        total += wp.weight;
        CHECK((wp.path[0] == 0.0 || wp.path[0] == 1.0));
        CHECK((wp.path[1] == 0.0 || wp.path[1] == 1.0));
    }
    CHECK(total == doctest::Approx(1.0).epsilon(0));
}

TEST_CASE("leaf path weights are products of conditionals") {
    std::vector<TreeNode> nodes{
        {0, -1, 1, 0.0, 0.3}, {1, -1, 1, 1.0, 0.7}, {2, 0, 2, 0.5, 1.0}, {3, 1, 2, -0.5, 1.0}};
    const ScenarioTree tree(2, std::move(nodes));
    const auto paths = leaf_paths(tree);
    REQUIRE(paths.size() == 2);
    CHECK(paths[0].weight == 0.3);
    CHECK(paths[1].weight == 0.7);

    // Exact product along random chains, reassociation dust only.
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const ScenarioTree t = testsupport::random_tree(rng, 3, 2);
        for (int leaf : t.leaves()) {
            double w = 1.0;
            for (int id : t.path_to(leaf)) w *= t.node(id).p;
            CHECK(std::abs(w - t.path_weight(leaf)) <= 1e-15);
        }
    }
}

TEST_CASE("marginal means") {
    Eigen::VectorXd p(2);
    p << 2.0, 3.0;
    CHECK(marginal_means(DiscreteMeasure::dirac(p)) == p);

    Eigen::VectorXd a(2), b(2);
    a << 0.0, 0.0;
    b << 1.0, 1.0;
    const DiscreteMeasure half(2, {{a, 0.5}, {b, 0.5}});
    CHECK(marginal_means(half)[0] == doctest::Approx(0.5));
    CHECK(marginal_means(half)[1] == doctest::Approx(0.5));

    std::vector<Atom> corners;
    for (double x : {0.0, 1.0})
        for (double y : {0.0, 1.0}) {
            Eigen::VectorXd v(2);
            v << x, y;
            corners.push_back({v, 0.25});
        }
    const DiscreteMeasure four(2, std::move(corners));
    CHECK(marginal_means(four)[0] == doctest::Approx(0.5));
    CHECK(marginal_means(four)[1] == doctest::Approx(0.5));
}

TEST_CASE("pushforward") {
    const ScenarioTree tree = ScenarioTree::bernoulli_product(2);

    SUBCASE("identity actions recover the four corners") {
        std::vector<double> actions(tree.node_count());
        for (int id = 0; id < tree.node_count(); ++id) actions[id] = tree.node(id).x;
        const DiscreteMeasure nu = pushforward(tree, AdaptedMap(actions));
        CHECK(nu.size() == 4);
        for (const Atom& a : nu.atoms()) CHECK(a.weight == doctest::Approx(0.25).epsilon(0));
    }

    SUBCASE("constant actions collapse to a point mass") {
        std::vector<double> actions(tree.node_count(), 0.0);
        const DiscreteMeasure nu = pushforward(tree, AdaptedMap(actions));
        CHECK(nu.size() == 1);
        CHECK(nu.atoms()[0].weight == 1.0);
        CHECK(nu.atoms()[0].point.isZero());
    }

    SUBCASE("equal prefixes merge") {
        // Both depth-1 branches map to 0.5, depth 2 keeps identity.
        std::vector<double> actions(tree.node_count());
        for (int id = 0; id < tree.node_count(); ++id)
            actions[id] = tree.node(id).depth == 1 ? 0.5 : tree.node(id).x;
        const DiscreteMeasure nu = pushforward(tree, AdaptedMap(actions));
        REQUIRE(nu.size() == 2);
        for (const Atom& a : nu.atoms()) {
            CHECK(a.weight == doctest::Approx(0.5).epsilon(0));
            CHECK(a.point[0] == 0.5);
        }
    }

    SUBCASE("mass is conserved on random trees and maps") {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> act(-3.0, 3.0);
        for (int trial = 0; trial < 30; ++trial) {
            const ScenarioTree t = testsupport::random_tree(rng, 1 + trial % 3, 3);
            std::vector<double> actions(t.node_count());
            for (double& a : actions) a = act(rng);
            const DiscreteMeasure nu = pushforward(t, AdaptedMap(actions));
            double total = 0.0;
            for (const Atom& a : nu.atoms()) total += a.weight;
            CHECK(std::abs(total - 1.0) <= 1e-12);
        }
    }

    SUBCASE("missing node action is a structural error") {
        CHECK_THROWS_AS(pushforward(tree, AdaptedMap(std::vector<double>(2, 0.0))),
                        StructuralError);
    }
}

TEST_CASE("conditional kernels") {
    const ScenarioTree bernoulli = ScenarioTree::bernoulli_product(2);
    const auto root_branch = conditional(bernoulli, bernoulli.roots()[0]);
    REQUIRE(root_branch.size() == 2);
    CHECK(root_branch[0].value == 0.0);
    CHECK(root_branch[0].probability == 0.5);
    CHECK(root_branch[1].value == 1.0);
    CHECK(root_branch[1].probability == 0.5);

    Eigen::VectorXd values(3);
    values << 0.0, 1.0, -1.0;
    const ScenarioTree chain = ScenarioTree::chain(values);
    const auto kernel = conditional(chain, 0);
    REQUIRE(kernel.size() == 1);
    CHECK(kernel[0].probability == 1.0);
    CHECK_THROWS_AS(conditional(chain, 2), DomainError);

    std::vector<TreeNode> nodes{
        {0, -1, 1, 0.0, 1.0}, {1, 0, 2, 2.0, 0.3}, {2, 0, 2, -2.0, 0.7}};
    const ScenarioTree two(2, std::move(nodes));
    const auto pair = conditional(two, 0);
    REQUIRE(pair.size() == 2);
    CHECK(pair[0].value == 2.0);
    CHECK(pair[0].probability == 0.3);
    CHECK(pair[1].value == -2.0);
    CHECK(pair[1].probability == 0.7);
}

TEST_CASE("tree validation names the offending node") {
    std::vector<TreeNode> bad{{0, -1, 1, 0.0, 0.5}, {1, -1, 1, 1.0, 0.4}};
    try {
        ScenarioTree tree(1, std::move(bad));
        FAIL("expected StructuralError");
    } catch (const StructuralError& e) {
        CHECK(std::string(e.what()).find("sum") != std::string::npos);
    }

    std::vector<TreeNode> orphan{{0, -1, 1, 0.0, 1.0}, {1, 5, 2, 1.0, 1.0}};
    CHECK_THROWS_AS(ScenarioTree(2, std::move(orphan)), StructuralError);

    std::vector<TreeNode> childless{{0, -1, 1, 0.0, 1.0}};
    CHECK_THROWS_AS(ScenarioTree(2, std::move(childless)), StructuralError);
}

TEST_CASE("duplicate atoms merge by weight addition") {
    Eigen::VectorXd p(1);
    p << 1.0;
    const DiscreteMeasure nu(1, {{p, 0.25}, {p, 0.75}});
    CHECK(nu.size() == 1);
    CHECK(nu.atoms()[0].weight == 1.0);

    CHECK_THROWS_AS(DiscreteMeasure(1, {{p, 0.5}}), StructuralError);  // mass 0.5
    CHECK_THROWS_AS(DiscreteMeasure(1, {{p, -1.0}, {p, 2.0}}), StructuralError);
}
