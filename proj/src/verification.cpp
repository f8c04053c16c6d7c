#include "cournot/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cournot/errors.hpp"

namespace cournot {

namespace {

// Derivative-free stage solver used for child stages of the oracle:
// uniform scans, re-bracketing around the incumbent, widening first when
// the incumbent sits on the bracket edge.
class GridEngine {
public:
    GridEngine(const MeanFieldCost& cost, const DiscreteMeasure& nu, const ScenarioTree& tree,
               const GridOracleOptions& opt)
        : cost_(cost), nu_(nu), tree_(tree), opt_(opt), y_buf_(tree.horizon()) {
        if (cost_.dimension() != tree_.horizon() || nu_.dim() != tree_.horizon())
            throw DomainError("grid oracle: dimensions do not match tree horizon");
        if (tree_.horizon() > opt_.max_depth)
            throw DomainError("grid oracle depth cap " + std::to_string(opt_.max_depth) +
                              " exceeded (raise max_depth to override)");
    }

    Eigen::VectorXd& prefix_buffer() { return y_buf_; }

    double objective(int node, double ybar) {
        const TreeNode& nd = tree_.node(node);
        y_buf_[nd.depth - 1] = ybar;
        double value = 0.5 * (nd.x - ybar) * (nd.x - ybar);
        if (nd.depth == tree_.horizon()) return value + cost_.value(y_buf_, nu_);
        for (int c : tree_.children(node)) {
            value += tree_.node(c).p * refined_opt(c);
            y_buf_[nd.depth - 1] = ybar;
        }
        return value;
    }

    GridSolution scan(int node, double lo, double hi, int steps) {
        const double step = (hi - lo) / steps;
        GridSolution best{lo, objective(node, lo)};
        for (int i = 1; i <= steps; ++i) {
            const double y = lo + i * step;
            const double v = objective(node, y);
            if (v < best.value) best = {y, v};
        }
        return best;
    }

private:
    const MeanFieldCost& cost_;
    const DiscreteMeasure& nu_;
    const ScenarioTree& tree_;
    const GridOracleOptions& opt_;
    Eigen::VectorXd y_buf_;

    double refined_opt(int node) {
        const TreeNode& nd = tree_.node(node);
        double center = nd.x;
        double half = opt_.child_radius;
        const int points = opt_.child_points;
        GridSolution best{center, 0.0};
        for (int level = 0; level < 80; ++level) {
            const double lo = center - half;
            const double step = 2.0 * half / (points - 1);
            best = {lo, objective(node, lo)};
            int best_index = 0;
            for (int i = 1; i < points; ++i) {
                const double y = lo + i * step;
                const double v = objective(node, y);
                if (v < best.value) {
                    best = {y, v};
                    best_index = i;
                }
            }
            if (best_index == 0 || best_index == points - 1) {
                center = best.y_grid;
                half *= 2.0;  // optimum on the edge: widen and retry
                continue;
            }
            if (step <= opt_.child_tol) return best.value;
            center = best.y_grid;
            half = step;  // incumbent is interior: the optimum is within one step
        }
        throw NumericalError("grid refinement at node " + std::to_string(node) +
                             " did not reach its tolerance");
    }
};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

DiscreteMeasure random_measure(std::mt19937_64& rng, int dim) {
    std::uniform_int_distribution<int> support(1, 4);
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    std::exponential_distribution<double> mass(1.0);
    const int k = support(rng);
    std::vector<Atom> atoms;
    atoms.reserve(k);
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
        Eigen::VectorXd p(dim);
        for (int d = 0; d < dim; ++d) p[d] = coord(rng);
        const double w = mass(rng) + 1e-3;
        total += w;
        atoms.push_back({std::move(p), w});
    }
    for (Atom& a : atoms) a.weight /= total;
    // Normalization leaves float dust; pin the largest weight so the sum
    // is exactly 1 for the measure invariant.
    double sum = 0.0;
    for (const Atom& a : atoms) sum += a.weight;
    atoms.front().weight += 1.0 - sum;
    return DiscreteMeasure(dim, std::move(atoms));
}

bool same_support(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    if (a.size() != b.size()) return false;
    for (int i = 0; i < a.size(); ++i) {
        if (a.atoms()[i].weight != b.atoms()[i].weight) return false;
        if (a.atoms()[i].point != b.atoms()[i].point) return false;
    }
    return true;
}

// ---- loop probe machinery -------------------------------------------------

struct SignedAtom {
    Eigen::Vector2d point;
    double weight;  // may be negative
};

// W[mu](y) evaluated from a raw weighted atom list (weights sum to 1).
using LoopTerm = std::function<double(const std::vector<SignedAtom>&, const Eigen::Vector2d&)>;

double mean_component(const std::vector<SignedAtom>& mu, int i) {
    double m = 0.0;
    for (const SignedAtom& a : mu) m += a.weight * a.point[i];
    return m;
}

// integral over [0,1] of t -> integral of W[(1-t) start + t end] d(end - start).
double segment_integrand(const LoopTerm& term, const Eigen::Vector2d& start,
                         const Eigen::Vector2d& end, double t) {
    std::vector<SignedAtom> mu{{start, 1.0 - t}, {end, t}};
    return term(mu, end) - term(mu, start);
}

double segment_closed_form(const LoopTerm& term, const Eigen::Vector2d& start,
                           const Eigen::Vector2d& end) {
    // Two-point Gauss-Legendre on [0,1]: exact for the polynomial (degree
    // <= 2 in t) integrands of these loops.
    const double offset = 0.5 / std::sqrt(3.0);
    return 0.5 * (segment_integrand(term, start, end, 0.5 - offset) +
                  segment_integrand(term, start, end, 0.5 + offset));
}

double segment_midpoint(const LoopTerm& term, const Eigen::Vector2d& start,
                        const Eigen::Vector2d& end, int n) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
        acc += segment_integrand(term, start, end, (i + 0.5) / n);
    return acc / n;
}

LoopProbeResult run_loop(const LoopTerm& term, double t_param) {
    const Eigen::Vector2d corner_a(t_param, 1.0);  // delta_T x delta_1
    const Eigen::Vector2d corner_b(t_param, 0.0);  // delta_T x delta_0
    const Eigen::Vector2d corner_c(0.0, 1.0);      // delta_0 x delta_1
    const Eigen::Vector2d corner_d(0.0, 0.0);      // delta_0 x delta_0

    const std::array<std::pair<Eigen::Vector2d, Eigen::Vector2d>, 4> segments{{
        {corner_b, corner_a},  // top:    E(A) - E(B)
        {corner_c, corner_a},  // right:  E(A) - E(C)
        {corner_d, corner_b},  // bottom: E(B) - E(D)
        {corner_d, corner_c},  // left:   E(C) - E(D)
    }};

    LoopProbeResult out;
    out.t_param = t_param;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        const auto& [start, end] = segments[s];
        out.segment_integrals[s] = segment_closed_form(term, start, end);
        const double quad = segment_midpoint(term, start, end, 1000);
        out.quadrature_error =
            std::max(out.quadrature_error, std::abs(out.segment_integrals[s] - quad));
    }
    out.loop_discrepancy = (out.segment_integrals[0] + out.segment_integrals[2]) -
                           (out.segment_integrals[1] + out.segment_integrals[3]);
    return out;
}

}  // namespace

GridSolution grid_oracle_stage(const MeanFieldCost& cost, const DiscreteMeasure& nu,
                               const ScenarioTree& tree, int node_id,
                               const Eigen::VectorXd& y_prefix, double lo, double hi, int steps,
                               const GridOracleOptions& options) {
    if (!(hi > lo)) throw DomainError("grid oracle requires hi > lo");
    if (steps < 3) throw DomainError("grid oracle requires steps >= 3");
    GridEngine engine(cost, nu, tree, options);
    const int depth = tree.node(node_id).depth;
    if (y_prefix.size() != depth - 1)
        throw DomainError("y_prefix must have length depth-1 = " + std::to_string(depth - 1));
    engine.prefix_buffer().head(depth - 1) = y_prefix;
    return engine.scan(node_id, lo, hi, steps);
}

double gaussian_kernel(const Eigen::VectorXd& y, const Eigen::VectorXd& z) {
    return std::exp(-(y - z).squaredNorm());
}

double lasry_lions_integral(const InteractionKernel& kernel, const DiscreteMeasure& nu,
                            const DiscreteMeasure& nu2) {
    if (nu.dim() != nu2.dim()) throw DomainError("monotonicity integral: dimension mismatch");
    // Quadratic form of the signed measure nu - nu2 under the kernel.
    std::vector<std::pair<const Atom*, double>> signed_atoms;
    for (const Atom& a : nu.atoms()) signed_atoms.emplace_back(&a, a.weight);
    for (const Atom& a : nu2.atoms()) signed_atoms.emplace_back(&a, -a.weight);
    double acc = 0.0;
    for (const auto& [ai, wi] : signed_atoms)
        for (const auto& [aj, wj] : signed_atoms) acc += wi * wj * kernel(ai->point, aj->point);
    return acc;
}

MonotonicityReport monotonicity_probe(const InteractionKernel& kernel, std::uint64_t seed,
                                      int trials) {
    if (trials < 1) throw DomainError("monotonicity probe needs at least one trial");
    MonotonicityReport report;
    report.trials = trials;
    report.min_integral = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < trials; ++trial) {
        std::mt19937_64 rng(splitmix64(seed + 0x51a3u * static_cast<std::uint64_t>(trial)));
        std::uniform_int_distribution<int> dim_dist(1, 3);
        const int dim = dim_dist(rng);
        DiscreteMeasure nu = random_measure(rng, dim);
        DiscreteMeasure nu2 = random_measure(rng, dim);
        for (int retry = 0; retry < 10 && same_support(nu, nu2); ++retry)
            nu2 = random_measure(rng, dim);
        report.min_integral = std::min(report.min_integral, lasry_lions_integral(kernel, nu, nu2));
    }
    report.all_positive = (report.min_integral > 1e-12);
    return report;
}

LoopProbeResult potential_loop_probe(double t_param) {
    const LoopTerm term = [](const std::vector<SignedAtom>& mu, const Eigen::Vector2d& y) {
        return mean_component(mu, 0) * y[1];
    };
    return run_loop(term, t_param);
}

LoopProbeResult separable_loop_probe(double t_param, const PriceImpactParams& params) {
    if (params.N != 2) throw DomainError("the loop probe is a two-step construction");
    const double k_weight = params.K - 0.5;
    const double s0 = params.S0;
    const double a_weight = params.A;
    const double q0 = params.Q0;
    // Full interaction of the two-step liquidation game minus the
    // m_1 * y_2 coupling; what remains is the derivative of an energy.
    const LoopTerm term = [=](const std::vector<SignedAtom>& mu, const Eigen::Vector2d& y) {
        const double m1 = mean_component(mu, 0);
        const double m2 = mean_component(mu, 1);
        const double inventory = q0 - y[0] - y[1];
        return k_weight * (y[0] * y[0] + y[1] * y[1]) - s0 * (y[0] + y[1]) +
               a_weight * inventory * inventory + m1 * y[0] + m2 * y[1];
    };
    return run_loop(term, t_param);
}

}  // namespace cournot
