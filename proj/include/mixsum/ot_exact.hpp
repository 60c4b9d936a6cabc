#pragma once

#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "mixsum/linalg.hpp"
#include "mixsum/measures.hpp"

namespace mixsum {

/// Coupling between a K1-point measure (rows, marginal alpha) and a K2-point
/// measure (columns, marginal beta).
struct TransportPlan {
    Matrix plan;
    Vector row_marginal;
    Vector col_marginal;
};

struct OtResult {
    double value;
    TransportPlan plan;
};

namespace detail {

/// Transportation simplex (network simplex on the complete bipartite graph).
/// Dantzig pricing, falling back to Bland's rule during long runs of
/// degenerate pivots so the method cannot cycle.
class TransportationSimplex {
public:
    TransportationSimplex(const Matrix& cost, std::vector<double> supply, std::vector<double> demand)
        : m_(static_cast<int>(supply.size())),
          n_(static_cast<int>(demand.size())),
          cost_(cost),
          supply_(std::move(supply)),
          demand_(std::move(demand)),
          flow_(static_cast<std::size_t>(m_) * n_, 0.0),
          basic_(static_cast<std::size_t>(m_) * n_, 0),
          adj_(m_ + n_) {
        double scale = 1.0;
        for (Eigen::Index i = 0; i < cost_.rows(); ++i)
            for (Eigen::Index j = 0; j < cost_.cols(); ++j) scale = std::max(scale, std::abs(cost_(i, j)));
        tol_ = 1e-13 * scale;
    }

    void solve() {
        northwest_corner();
        int degenerate_run = 0;
        const int bland_after = 2 * (m_ + n_);
        const long max_pivots = 50L * (m_ + n_) * (m_ + n_) + 1000;
        for (long pivot = 0;; ++pivot) {
            if (pivot > max_pivots) throw NumericalError("exact_discrete_wasserstein: pivot limit exceeded");
            compute_potentials();
            int enter = select_entering(degenerate_run >= bland_after);
            if (enter < 0) break;
            bool degenerate = pivot_on(enter, degenerate_run >= bland_after);
            degenerate_run = degenerate ? degenerate_run + 1 : 0;
        }
#ifndef NDEBUG
        compute_potentials();
        for (int i = 0; i < m_; ++i)
            for (int j = 0; j < n_; ++j)
                if (cost_(i, j) - u_[i] - v_[j] < -1e3 * tol_)
                    throw NumericalError("exact_discrete_wasserstein: complementary slackness violated");
#endif
    }

    double flow(int i, int j) const { return flow_[idx(i, j)]; }

private:
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * n_ + j; }

    void add_basic(int i, int j, double x) {
        basic_[idx(i, j)] = 1;
        flow_[idx(i, j)] = x;
        adj_[i].push_back(m_ + j);
        adj_[m_ + j].push_back(i);
    }

    void remove_basic(int i, int j) {
        basic_[idx(i, j)] = 0;
        flow_[idx(i, j)] = 0.0;
        std::erase(adj_[i], m_ + j);
        std::erase(adj_[m_ + j], i);
    }

    // Produces exactly m + n - 1 basic cells forming a spanning tree, inserting
    // zero-flow cells when a row and a column are exhausted together.
    void northwest_corner() {
        std::vector<double> a = supply_, b = demand_;
        int i = 0, j = 0;
        while (i < m_ && j < n_) {
            double x = std::min(a[i], b[j]);
            if (i == m_ - 1 && j == n_ - 1) x = a[i];  // absorbs rounding residue of the totals
            add_basic(i, j, std::max(x, 0.0));
            a[i] -= x;
            b[j] -= x;
            if (i == m_ - 1)
                ++j;
            else if (j == n_ - 1)
                ++i;
            else if (a[i] <= b[j])
                ++i;
            else
                ++j;
        }
    }

    void compute_potentials() {
        u_.assign(m_, 0.0);
        v_.assign(n_, 0.0);
        std::vector<char> seen(m_ + n_, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            int node = stack.back();
            stack.pop_back();
            for (int next : adj_[node]) {
                if (seen[next]) continue;
                seen[next] = 1;
                if (node < m_)
                    v_[next - m_] = cost_(node, next - m_) - u_[node];
                else
                    u_[next] = cost_(next, node - m_) - v_[node - m_];
                stack.push_back(next);
            }
        }
    }

    int select_entering(bool bland) const {
        int best = -1;
        double best_r = -tol_;
        for (int i = 0; i < m_; ++i)
            for (int j = 0; j < n_; ++j) {
                if (basic_[idx(i, j)]) continue;
                double r = cost_(i, j) - u_[i] - v_[j];
                if (r < best_r) {
                    if (bland) return static_cast<int>(idx(i, j));
                    best_r = r;
                    best = static_cast<int>(idx(i, j));
                }
            }
        return best;
    }

    // Returns true when the pivot moved zero mass.
    bool pivot_on(int enter, bool bland) {
        const int ei = enter / n_, ej = enter % n_;
        // Tree path from row node ei to column node ej.
        std::vector<int> parent(m_ + n_, -1);
        std::vector<char> seen(m_ + n_, 0);
        std::queue<int> q;
        q.push(ei);
        seen[ei] = 1;
        while (!q.empty()) {
            int node = q.front();
            q.pop();
            if (node == m_ + ej) break;
            for (int next : adj_[node])
                if (!seen[next]) {
                    seen[next] = 1;
                    parent[next] = node;
                    q.push(next);
                }
        }
        // Walk back from the column: edges alternate -, +, -, ..., - .
        std::vector<std::pair<int, int>> cells;
        for (int node = m_ + ej; node != ei; node = parent[node]) {
            int other = parent[node];
            int r = node < m_ ? node : other;
            int c = node < m_ ? other - m_ : node - m_;
            cells.emplace_back(r, c);
        }
        double theta = std::numeric_limits<double>::infinity();
        int leave = -1;
        for (std::size_t k = 0; k < cells.size(); k += 2) {
            auto [r, c] = cells[k];
            double x = flow_[idx(r, c)];
            int id = static_cast<int>(idx(r, c));
            if (x < theta || (x == theta && bland && id < leave)) {
                theta = x;
                leave = id;
            }
        }
        for (std::size_t k = 0; k < cells.size(); ++k) {
            auto [r, c] = cells[k];
            flow_[idx(r, c)] += (k % 2 == 0) ? -theta : theta;
        }
        remove_basic(leave / n_, leave % n_);
        add_basic(ei, ej, theta);
        return theta == 0.0;
    }

    int m_, n_;
    const Matrix& cost_;
    std::vector<double> supply_, demand_;
    std::vector<double> flow_;
    std::vector<char> basic_;
    std::vector<std::vector<int>> adj_;
    std::vector<double> u_, v_;
    double tol_;
};

}  // namespace detail

/// Exact optimal transport between discrete measures with the given cost.
/// Zero-weight atoms are removed before solving; the returned plan keeps the
/// original K1 x K2 shape.
inline OtResult exact_discrete_wasserstein(const Matrix& cost, std::span<const double> alpha,
                                           std::span<const double> beta) {
    const auto k1 = static_cast<Eigen::Index>(alpha.size()), k2 = static_cast<Eigen::Index>(beta.size());
    if (k1 == 0 || k2 == 0) throw ValidationError("exact_discrete_wasserstein: empty marginal");
    if (cost.rows() != k1 || cost.cols() != k2)
        throw ValidationError("exact_discrete_wasserstein: cost is " + std::to_string(cost.rows()) + "x" +
                              std::to_string(cost.cols()) + ", marginals are " + std::to_string(k1) + " and " +
                              std::to_string(k2));
    if (!cost.allFinite()) throw ValidationError("exact_discrete_wasserstein: non-finite cost");
    double sa = 0.0, sb = 0.0;
    for (double a : alpha) {
        if (!(a >= 0.0)) throw ValidationError("exact_discrete_wasserstein: negative row weight");
        sa += a;
    }
    for (double b : beta) {
        if (!(b >= 0.0)) throw ValidationError("exact_discrete_wasserstein: negative column weight");
        sb += b;
    }
    if (std::abs(sa - sb) > 1e-8)
        throw ValidationError("exact_discrete_wasserstein: infeasible marginals (sums " + std::to_string(sa) + " vs " +
                              std::to_string(sb) + ")");
    if (!(sa > 0.0)) throw ValidationError("exact_discrete_wasserstein: zero total mass");

    std::vector<int> rows, cols;
    std::vector<double> supply, demand;
    for (Eigen::Index i = 0; i < k1; ++i)
        if (alpha[i] > 0.0) {
            rows.push_back(static_cast<int>(i));
            supply.push_back(alpha[i]);
        }
    for (Eigen::Index j = 0; j < k2; ++j)
        if (beta[j] > 0.0) {
            cols.push_back(static_cast<int>(j));
            demand.push_back(beta[j] * (sa / sb));
        }
    Matrix reduced(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) reduced(i, j) = cost(rows[i], cols[j]);

    detail::TransportationSimplex solver(reduced, supply, demand);
    solver.solve();

    OtResult out{0.0, {Matrix::Zero(k1, k2), Vector(k1), Vector(k2)}};
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) {
            double x = solver.flow(static_cast<int>(i), static_cast<int>(j));
            if (x == 0.0) continue;
            out.plan.plan(rows[i], cols[j]) = x;
            out.value += x * reduced(i, j);
        }
    for (Eigen::Index i = 0; i < k1; ++i) out.plan.row_marginal[i] = alpha[i];
    for (Eigen::Index j = 0; j < k2; ++j) out.plan.col_marginal[j] = beta[j];
    return out;
}

namespace detail {

inline double trace_sqrt_psd(const Matrix& m) {
    Matrix s = 0.5 * (m + m.transpose());
    auto e = sym_eig(s);
    double t = 0.0;
    for (Eigen::Index k = 0; k < e.values.size(); ++k) t += std::sqrt(std::max(e.values[k], 0.0));
    return t;
}

inline double gaussian_w2_sq_with_root(const GaussianAtom& a, const Matrix& a_cov_sqrt, const GaussianAtom& b) {
    double mean_term = (a.mean() - b.mean()).squaredNorm();
    double bures = detail::trace_sqrt_psd(a_cov_sqrt * b.cov().matrix() * a_cov_sqrt);
    double value = mean_term + a.cov().matrix().trace() + b.cov().matrix().trace() - 2.0 * bures;
    return std::max(value, 0.0);
}

}  // namespace detail

/// Squared 2-Wasserstein distance between N(mu_a, S_a) and N(mu_b, S_b):
/// |mu_a - mu_b|^2 + tr S_a + tr S_b - 2 tr (S_a^1/2 S_b S_a^1/2)^1/2.
inline double gaussian_w2_sq(const GaussianAtom& a, const GaussianAtom& b) {
    if (a.dim() != b.dim()) throw ValidationError("gaussian_w2_sq: dimension mismatch");
    return detail::gaussian_w2_sq_with_root(a, matrix_sqrt(a.cov()).matrix(), b);
}

/// Mixture Wasserstein: discrete OT between mixing measures with Gaussian W2^2 costs.
inline double mixture_wasserstein_sq(const MixingMeasure& g1, const MixingMeasure& g2) {
    if (g1.dim() != g2.dim()) throw ValidationError("mixture_wasserstein_sq: dimension mismatch");
    Matrix cost(g1.size(), g2.size());
    for (std::size_t i = 0; i < g1.size(); ++i) {
        Matrix root = matrix_sqrt(g1.atom(i).cov()).matrix();
        for (std::size_t j = 0; j < g2.size(); ++j)
            cost(i, j) = detail::gaussian_w2_sq_with_root(g1.atom(i), root, g2.atom(j));
    }
    return exact_discrete_wasserstein(cost, g1.weights(), g2.weights()).value;
}

namespace detail {

inline double abs_pow(double x, double p) {
    x = std::abs(x);
    if (p == 2.0) return x * x;
    if (p == 1.0) return x;
    return std::pow(x, p);
}

}  // namespace detail

/// W_p^p between two sorted discrete 1D measures by a joint sweep over their
/// quantile functions. The loop is symmetric in its arguments, so swapping
/// them gives a bit-identical result.
inline double wasserstein_1d(double p, std::span<const double> x, std::span<const double> wx,
                             std::span<const double> y, std::span<const double> wy) {
    std::size_t i = 0, j = 0;
    const std::size_t nx = x.size(), ny = y.size();
    while (i < nx && wx[i] <= 0.0) ++i;
    while (j < ny && wy[j] <= 0.0) ++j;
    if (i == nx || j == ny) return 0.0;
    double rx = wx[i], ry = wy[j];
    double total = 0.0;
    for (;;) {
        double m = std::min(rx, ry);
        total += m * detail::abs_pow(x[i] - y[j], p);
        rx -= m;
        ry -= m;
        if (rx <= 0.0) {
            do ++i;
            while (i < nx && wx[i] <= 0.0);
            if (i == nx) break;
            rx = wx[i];
        }
        if (ry <= 0.0) {
            do ++j;
            while (j < ny && wy[j] <= 0.0);
            if (j == ny) break;
            ry = wy[j];
        }
    }
    return total;
}

inline double wasserstein_1d(double p, const Discrete1DMeasure& g1, const Discrete1DMeasure& g2) {
    if (!(p >= 1.0)) throw ValidationError("wasserstein_1d: p must be >= 1");
    return wasserstein_1d(p, g1.support(), g1.weights(), g2.support(), g2.weights());
}

}  // namespace mixsum
