#include "cournot/wasserstein.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cournot/errors.hpp"

namespace cournot {

namespace {

// Reduced costs below this threshold count as improving. Ground distances
// in this library are O(1)-O(10), so an absolute threshold is adequate.
constexpr double kReducedCostTol = 1e-12;

struct BasicArc {
    int i;  // supply index
    int j;  // demand index
    double flow;
};

// Primal simplex for the dense transportation problem
//   min sum_ij c_ij f_ij,  sum_j f_ij = a_i,  sum_i f_ij = b_j,  f >= 0.
// The basis is a spanning tree of the bipartite graph; the initial tree is
// the north-west-corner staircase. Entering and leaving arcs follow Bland's
// smallest-index rule, with an iteration cap as a final safety net against
// cycling in floating arithmetic.
class TransportSimplex {
public:
    TransportSimplex(const std::vector<double>& supply, const std::vector<double>& demand,
                     const Eigen::MatrixXd& cost)
        : n_(static_cast<int>(supply.size())),
          m_(static_cast<int>(demand.size())),
          cost_(cost) {
        northwest_corner(supply, demand);
    }

    double solve() {
        const long max_pivots = 50L * (n_ + m_) * (n_ + m_) + 1000;
        for (long pivot = 0; pivot < max_pivots; ++pivot) {
            compute_potentials();
            int ei = -1, ej = -1;
            if (!find_entering(ei, ej)) {
                double total = 0.0;
                for (const BasicArc& a : basis_) total += a.flow * cost_(a.i, a.j);
                return total;
            }
            pivot_on(ei, ej);
        }
        throw NumericalError("transport simplex exceeded its pivot budget");
    }

private:
    int n_, m_;
    const Eigen::MatrixXd& cost_;
    std::vector<BasicArc> basis_;
    std::vector<double> u_, v_;
    std::vector<char> is_basic_;  // n_*m_ flags

    int flat(int i, int j) const { return i * m_ + j; }

    void northwest_corner(std::vector<double> ra, std::vector<double> rb) {
        is_basic_.assign(static_cast<std::size_t>(n_) * m_, 0);
        basis_.reserve(n_ + m_ - 1);
        int i = 0, j = 0;
        while (true) {
            const double t = std::min(ra[i], rb[j]);
            basis_.push_back({i, j, std::max(t, 0.0)});
            is_basic_[flat(i, j)] = 1;
            ra[i] -= t;
            rb[j] -= t;
            if (i == n_ - 1 && j == m_ - 1) break;
            if (ra[i] == 0.0 && i < n_ - 1)
                ++i;
            else if (j < m_ - 1)
                ++j;
            else
                ++i;
        }
    }

    // Dual variables from u_i + v_j = c_ij on basic arcs, rooted at u_0 = 0.
    void compute_potentials() {
        u_.assign(n_, 0.0);
        v_.assign(m_, 0.0);
        std::vector<char> known_u(n_, 0), known_v(m_, 0);
        known_u[0] = 1;
        std::vector<char> done(basis_.size(), 0);
        bool progress = true;
        std::size_t remaining = basis_.size();
        while (remaining > 0 && progress) {
            progress = false;
            for (std::size_t k = 0; k < basis_.size(); ++k) {
                if (done[k]) continue;
                const BasicArc& a = basis_[k];
                if (known_u[a.i] && !known_v[a.j]) {
                    v_[a.j] = cost_(a.i, a.j) - u_[a.i];
                    known_v[a.j] = 1;
                } else if (known_v[a.j] && !known_u[a.i]) {
                    u_[a.i] = cost_(a.i, a.j) - v_[a.j];
                    known_u[a.i] = 1;
                } else if (!(known_u[a.i] && known_v[a.j])) {
                    continue;
                }
                done[k] = 1;
                --remaining;
                progress = true;
            }
        }
        if (remaining > 0) throw NumericalError("transport basis lost connectivity");
    }

    bool find_entering(int& ei, int& ej) const {
        for (int i = 0; i < n_; ++i) {
            for (int j = 0; j < m_; ++j) {
                if (is_basic_[flat(i, j)]) continue;
                if (cost_(i, j) - u_[i] - v_[j] < -kReducedCostTol) {
                    ei = i;
                    ej = j;
                    return true;
                }
            }
        }
        return false;
    }

    // The basis tree plus the entering arc contains a unique cycle. Walk the
    // tree path from supply node ei to demand node ej; arcs at even path
    // positions lose flow, odd positions gain, and the entering arc gains.
    void pivot_on(int ei, int ej) {
        const int nodes = n_ + m_;
        std::vector<std::vector<int>> adj(nodes);  // arc indices incident to node
        for (std::size_t k = 0; k < basis_.size(); ++k) {
            adj[basis_[k].i].push_back(static_cast<int>(k));
            adj[n_ + basis_[k].j].push_back(static_cast<int>(k));
        }
        std::vector<int> via_arc(nodes, -1), prev(nodes, -1);
        std::vector<char> seen(nodes, 0);
        std::vector<int> queue{ei};
        seen[ei] = 1;
        for (std::size_t qi = 0; qi < queue.size(); ++qi) {
            const int cur = queue[qi];
            if (cur == n_ + ej) break;
            for (int k : adj[cur]) {
                const int other = (cur < n_) ? n_ + basis_[k].j : basis_[k].i;
                if (seen[other]) continue;
                seen[other] = 1;
                via_arc[other] = k;
                prev[other] = cur;
                queue.push_back(other);
            }
        }
        if (!seen[n_ + ej]) throw NumericalError("transport basis lost connectivity");

        std::vector<int> path_arcs;  // from the ej end back to ei
        for (int cur = n_ + ej; cur != ei; cur = prev[cur]) path_arcs.push_back(via_arc[cur]);
        std::reverse(path_arcs.begin(), path_arcs.end());  // now ei -> ej order

        double theta = std::numeric_limits<double>::infinity();
        int leaving = -1;
        for (std::size_t pos = 0; pos < path_arcs.size(); ++pos) {
            if (pos % 2 != 0) continue;  // losing arcs
            const BasicArc& a = basis_[path_arcs[pos]];
            if (a.flow < theta) {
                theta = a.flow;
                leaving = path_arcs[pos];
            }
        }
        if (leaving < 0) throw NumericalError("transport pivot found no leaving arc");

        for (std::size_t pos = 0; pos < path_arcs.size(); ++pos) {
            BasicArc& a = basis_[path_arcs[pos]];
            a.flow += (pos % 2 == 0) ? -theta : theta;
            if (a.flow < 0.0) a.flow = 0.0;
        }
        BasicArc& out = basis_[leaving];
        is_basic_[flat(out.i, out.j)] = 0;
        out = {ei, ej, theta};
        is_basic_[flat(ei, ej)] = 1;
    }
};

// Deterministic total order so wasserstein1(a, b) == wasserstein1(b, a)
// exactly: the solver always sees the same (first, second) pair.
bool measure_before(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    for (int k = 0; k < a.size(); ++k) {
        const Atom& x = a.atoms()[k];
        const Atom& y = b.atoms()[k];
        for (int d = 0; d < a.dim(); ++d) {
            if (x.point[d] != y.point[d]) return x.point[d] < y.point[d];
        }
        if (x.weight != y.weight) return x.weight < y.weight;
    }
    return false;
}

}  // namespace

double wasserstein1(const DiscreteMeasure& nu, const DiscreteMeasure& nu2,
                    std::size_t max_pairs) {
    if (nu.dim() != nu2.dim())
        throw DomainError("wasserstein1: dimension mismatch " + std::to_string(nu.dim()) +
                          " vs " + std::to_string(nu2.dim()));
    const std::size_t pairs =
        static_cast<std::size_t>(nu.size()) * static_cast<std::size_t>(nu2.size());
    if (pairs > max_pairs)
        throw SizeError("wasserstein1: " + std::to_string(pairs) +
                        " atom pairs exceed cap " + std::to_string(max_pairs));

    const DiscreteMeasure& first = measure_before(nu2, nu) ? nu2 : nu;
    const DiscreteMeasure& second = (&first == &nu) ? nu2 : nu;

    const int n = first.size();
    const int m = second.size();
    Eigen::MatrixXd cost(n, m);
    std::vector<double> supply(n), demand(m);
    for (int i = 0; i < n; ++i) supply[i] = first.atoms()[i].weight;
    for (int j = 0; j < m; ++j) demand[j] = second.atoms()[j].weight;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            cost(i, j) = (first.atoms()[i].point - second.atoms()[j].point).cwiseAbs().sum();

    return TransportSimplex(supply, demand, cost).solve();
}

}  // namespace cournot
