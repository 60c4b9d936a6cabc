#pragma once

// Reference computations used only by the tests. None of these call into the
// library except for the value types they build.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mixsum/measures.hpp"

namespace oracle {

using mixsum::Matrix;
using mixsum::Vector;

inline Matrix random_orthonormal(int d, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = n(rng);
    Eigen::HouseholderQR<Matrix> qr(a);
    return qr.householderQ() * Matrix::Identity(d, d);
}

/// Q diag(lambda) Q^T with log10 eigenvalues spread over [-log10(cond)/2, log10(cond)/2].
inline Matrix random_spd(int d, double cond, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    Matrix q = random_orthonormal(d, rng);
    Vector lam(d);
    for (int i = 0; i < d; ++i) lam[i] = std::pow(cond, u(rng));
    Matrix s = q * lam.asDiagonal() * q.transpose();
    return 0.5 * (s + s.transpose());
}

inline Matrix random_symmetric(int d, double scale, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, scale);
    Matrix a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = n(rng);
    return a;
}

inline std::vector<double> random_simplex(int k, std::mt19937_64& rng) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> w(k);
    double s = 0.0;
    for (double& x : w) s += (x = e(rng) + 1e-3);
    for (double& x : w) x /= s;
    double rest = 1.0;
    for (int i = 0; i + 1 < k; ++i) rest -= w[i];
    w.back() = rest;
    return w;
}

inline mixsum::MixingMeasure random_measure(int k, int d, std::mt19937_64& rng, double spread = 3.0) {
    std::normal_distribution<double> n(0.0, spread);
    std::vector<mixsum::GaussianAtom> atoms;
    for (int i = 0; i < k; ++i) {
        Vector mu(d);
        for (int j = 0; j < d; ++j) mu[j] = n(rng);
        atoms.emplace_back(mu, mixsum::SpdMatrix(random_spd(d, 20.0, rng)));
    }
    return mixsum::MixingMeasure(random_simplex(k, rng), std::move(atoms));
}

/// Taylor series with scaling and squaring.
inline Matrix series_exp(const Matrix& a) {
    double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = norm > 0.5 ? static_cast<int>(std::ceil(std::log2(norm / 0.5))) : 0;
    Matrix x = a / std::ldexp(1.0, squarings);
    Matrix term = Matrix::Identity(a.rows(), a.cols()), sum = term;
    for (int k = 1; k < 30; ++k) {
        term = term * x / k;
        sum += term;
    }
    for (int i = 0; i < squarings; ++i) sum = sum * sum;
    return sum;
}

/// Min-cost transportation by successive shortest paths (Bellman-Ford on the
/// residual graph). Slow but independent of the simplex solver.
inline double ssp_transport(const Matrix& cost, std::vector<double> supply, std::vector<double> demand) {
    const int m = static_cast<int>(supply.size()), n = static_cast<int>(demand.size());
    Matrix flow = Matrix::Zero(m, n);
    const double eps = 1e-15;
    for (;;) {
        double left = 0.0;
        for (double s : supply) left += s;
        if (left <= 1e-13) break;
        // nodes: rows 0..m-1, cols m..m+n-1; sources are rows with supply left.
        std::vector<double> dist(m + n, std::numeric_limits<double>::infinity());
        std::vector<int> prev(m + n, -1);
        for (int i = 0; i < m; ++i)
            if (supply[i] > eps) dist[i] = 0.0;
        for (int it = 0; it < m + n; ++it) {
            bool changed = false;
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) {
                    if (dist[i] + cost(i, j) < dist[m + j] - 1e-12) {
                        dist[m + j] = dist[i] + cost(i, j);
                        prev[m + j] = i;
                        changed = true;
                    }
                    if (flow(i, j) > eps && dist[m + j] - cost(i, j) < dist[i] - 1e-12) {
                        dist[i] = dist[m + j] - cost(i, j);
                        prev[i] = m + j;
                        changed = true;
                    }
                }
            if (!changed) break;
        }
        int best = -1;
        for (int j = 0; j < n; ++j)
            if (demand[j] > eps && std::isfinite(dist[m + j]) && (best < 0 || dist[m + j] < dist[m + best])) best = j;
        if (best < 0) break;
        // Walk back to a row that still has supply; col <- row steps are
        // forward edges, row <- col steps undo existing flow.
        std::vector<int> path{m + best};
        while (prev[path.back()] != -1) {
            path.push_back(prev[path.back()]);
            if (path.size() > static_cast<std::size_t>(m + n)) throw std::logic_error("ssp_transport: cycle in residual graph");
        }
        const int src = path.back();
        double amount = std::min(supply[src], demand[best]);
        for (std::size_t k = 0; k + 1 < path.size(); ++k)
            if (path[k] < m) amount = std::min(amount, flow(path[k], path[k + 1] - m));
        for (std::size_t k = 0; k + 1 < path.size(); ++k) {
            if (path[k] >= m) flow(path[k + 1], path[k] - m) += amount;
            else flow(path[k], path[k + 1] - m) -= amount;
        }
        supply[src] -= amount;
        demand[best] -= amount;
    }
    return (flow.array() * cost.array()).sum();
}

/// Golden-section minimizer of a unimodal function on [lo, hi].
inline double golden_section(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi, c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < iters && b - a > 1e-12; ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

/// One-sample Kolmogorov-Smirnov p-value (asymptotic with small-n correction).
inline double ks_pvalue(std::vector<double> x, const std::function<double(double)>& cdf) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double f = cdf(x[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    double lam = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    if (lam < 0.3) return 1.0;  // Q_KS(0.3) > 0.99999; the series is unstable below
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lam * lam);
    return std::clamp(p, 0.0, 1.0);
}

/// Pairwise count of co-clustering disagreements over C(n, 2).
inline double brute_binder(const std::vector<int>& a, const std::vector<int>& b) {
    double bad = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            pairs += 1.0;
            if ((a[i] == a[j]) != (b[i] == b[j])) bad += 1.0;
        }
    return bad / pairs;
}

/// VI from plug-in entropies in long double.
inline double entropy_vi(const std::vector<int>& a, const std::vector<int>& b) {
    auto ent = [](const std::vector<long>& counts, long double n) {
        long double h = 0.0L;
        for (long c : counts)
            if (c > 0) h -= (c / n) * std::log(c / n);
        return h;
    };
    int ka = *std::max_element(a.begin(), a.end()) + 1, kb = *std::max_element(b.begin(), b.end()) + 1;
    std::vector<long> ca(ka), cb(kb), cab(static_cast<std::size_t>(ka) * kb);
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++ca[a[i]];
        ++cb[b[i]];
        ++cab[static_cast<std::size_t>(a[i]) * kb + b[i]];
    }
    long double n = static_cast<long double>(a.size());
    long double ha = ent(ca, n), hb = ent(cb, n), hab = ent(cab, n);
    return static_cast<double>(2.0L * hab - ha - hb);
}

/// ARI by counting agreeing pairs directly.
inline double pair_ari(const std::vector<int>& a, const std::vector<int>& b) {
    double both = 0.0, in_a = 0.0, in_b = 0.0, total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            bool sa = a[i] == a[j], sb = b[i] == b[j];
            total += 1.0;
            both += sa && sb;
            in_a += sa;
            in_b += sb;
        }
    double expected = in_a * in_b / total, max_index = 0.5 * (in_a + in_b);
    return (both - expected) / (max_index - expected);
}

}  // namespace oracle
