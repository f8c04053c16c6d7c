#pragma once

// Shared generators and independent oracles for the test suites. The
// oracles here deliberately avoid the library's solution paths: the 1-D
// transport cost comes from CDF integration, the 2x2 transport from
// endpoint enumeration of the single free variable.

#include <Eigen/Core>
#include <algorithm>
#include <random>
#include <vector>

#include "cournot/costs.hpp"
#include "cournot/measures.hpp"

namespace testsupport {

inline cournot::ScenarioTree random_tree(std::mt19937_64& rng, int horizon, int max_children) {
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    std::uniform_real_distribution<double> unit(0.05, 1.0);
    std::vector<cournot::TreeNode> nodes;
    int next_id = 0;
    std::vector<int> frontier;

    auto spawn = [&](int parent, int depth) {
        const int count = 1 + static_cast<int>(rng() % max_children);
        std::vector<double> probs(count);
        double total = 0.0;
        for (double& p : probs) {
            p = unit(rng);
            total += p;
        }
        double assigned = 0.0;
        std::vector<int> ids;
        for (int c = 0; c < count; ++c) {
            double p = probs[c] / total;
            if (c == count - 1) p = 1.0 - assigned;  // exact kernel sum
            assigned += p;
            nodes.push_back({next_id, parent, depth, coord(rng), p});
            ids.push_back(next_id++);
        }
        return ids;
    };

    frontier = spawn(-1, 1);
    for (int d = 2; d <= horizon; ++d) {
        std::vector<int> next;
        for (int parent : frontier) {
            auto kids = spawn(parent, d);
            next.insert(next.end(), kids.begin(), kids.end());
        }
        frontier = std::move(next);
    }
    return cournot::ScenarioTree(horizon, std::move(nodes));
}

/// Random quadratic cost with positive semidefinite curvature, so the
/// certificate preconditions (kappa >= lambda >= 0) hold.
inline cournot::QuadraticMeanFieldCost random_psd_cost(std::mt19937_64& rng, int n,
                                                       double curvature_scale = 0.6,
                                                       double coupling_scale = 0.3) {
    std::uniform_real_distribution<double> sym(-1.0, 1.0);
    Eigen::MatrixXd root = Eigen::MatrixXd::NullaryExpr(
        n, n, [&] { return curvature_scale * sym(rng); });
    Eigen::MatrixXd Q = root.transpose() * root;
    Eigen::VectorXd b = Eigen::VectorXd::NullaryExpr(n, [&] { return 0.5 * sym(rng); });
    Eigen::MatrixXd M = Eigen::MatrixXd::NullaryExpr(
        n, n, [&] { return coupling_scale * sym(rng); });
    return cournot::QuadraticMeanFieldCost(Q, b, M, 0.0);
}

inline cournot::DiscreteMeasure random_measure(std::mt19937_64& rng, int dim,
                                               int max_atoms = 4) {
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    std::uniform_real_distribution<double> mass(0.05, 1.0);
    const int k = 1 + static_cast<int>(rng() % max_atoms);
    std::vector<cournot::Atom> atoms;
    double total = 0.0;
    std::vector<double> weights(k);
    for (double& w : weights) {
        w = mass(rng);
        total += w;
    }
    double assigned = 0.0;
    for (int i = 0; i < k; ++i) {
        Eigen::VectorXd p(dim);
        for (int d = 0; d < dim; ++d) p[d] = coord(rng);
        double w = weights[i] / total;
        if (i == k - 1) w = 1.0 - assigned;
        assigned += w;
        atoms.push_back({std::move(p), w});
    }
    return cournot::DiscreteMeasure(dim, std::move(atoms));
}

/// 1-D transport cost by CDF integration: W1 = integral |F_mu - F_nu|.
inline double w1_cdf_oracle(const cournot::DiscreteMeasure& mu,
                            const cournot::DiscreteMeasure& nu) {
    struct Jump {
        double x;
        double dmu;
        double dnu;
    };
    std::vector<Jump> jumps;
    for (const auto& a : mu.atoms()) jumps.push_back({a.point[0], a.weight, 0.0});
    for (const auto& a : nu.atoms()) jumps.push_back({a.point[0], 0.0, a.weight});
    std::sort(jumps.begin(), jumps.end(), [](const Jump& a, const Jump& b) { return a.x < b.x; });
    double cost = 0.0, f_mu = 0.0, f_nu = 0.0;
    for (std::size_t i = 0; i + 1 <= jumps.size(); ++i) {
        f_mu += jumps[i].dmu;
        f_nu += jumps[i].dnu;
        if (i + 1 < jumps.size()) cost += std::abs(f_mu - f_nu) * (jumps[i + 1].x - jumps[i].x);
    }
    return cost;
}

/// Exact 2x2 transportation optimum: one free variable, affine objective,
/// so the optimum sits at an interval endpoint.
inline double w1_2x2_oracle(const cournot::DiscreteMeasure& mu,
                            const cournot::DiscreteMeasure& nu) {
    const double a1 = mu.atoms()[0].weight;
    const double b1 = nu.atoms()[0].weight;
    const double b2 = nu.atoms()[1].weight;
    auto dist = [&](int i, int j) {
        return (mu.atoms()[i].point - nu.atoms()[j].point).cwiseAbs().sum();
    };
    const double lo = std::max(0.0, a1 - b2);
    const double hi = std::min(a1, b1);
    auto cost_at = [&](double f11) {
        return f11 * dist(0, 0) + (a1 - f11) * dist(0, 1) + (b1 - f11) * dist(1, 0) +
               (b2 - (a1 - f11)) * dist(1, 1);
    };
    return std::min(cost_at(lo), cost_at(hi));
}

}  // namespace testsupport
