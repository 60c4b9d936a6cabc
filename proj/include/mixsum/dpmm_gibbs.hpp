#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "mixsum/core.hpp"
#include "mixsum/linalg.hpp"
#include "mixsum/measures.hpp"

namespace mixsum {

/// Normal-inverse-Wishart prior: Sigma ~ IW(psi, nu), mu | Sigma ~ N(mu0, Sigma / lambda).
struct NiwParams {
    Vector mu0;
    double lambda;
    SpdMatrix psi;
    double nu;

    int dim() const { return static_cast<int>(mu0.size()); }

    void validate() const {
        const int d = dim();
        if (d < 1) throw ValidationError("NiwParams: empty mu0");
        if (psi.dim() != d)
            throw ValidationError("NiwParams: psi is " + std::to_string(psi.dim()) + "x" + std::to_string(psi.dim()) +
                                  " but mu0 has dimension " + std::to_string(d));
        if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("NiwParams: lambda must be > 0");
        if (!(nu > d - 1) || !std::isfinite(nu))
            throw ValidationError("NiwParams: nu must exceed d - 1 = " + std::to_string(d - 1));
        if (!mu0.allFinite()) throw ValidationError("NiwParams: non-finite mu0");
    }
};

struct DpmmHyper {
    NiwParams niw;
    double alpha = 1.0;  // DP concentration
    int truncation = 100;

    void validate() const {
        niw.validate();
        if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("DpmmHyper: alpha must be > 0");
        if (truncation < 1) throw ValidationError("DpmmHyper: truncation K must be >= 1");
    }
};

struct ChainConfig {
    int iters = 10000;
    int burn_in = 9000;
    int thin = 1;
    std::uint64_t seed = 1;

    void validate() const {
        if (burn_in < 0) throw ValidationError("ChainConfig: burn_in must be >= 0");
        if (iters <= burn_in) throw ValidationError("ChainConfig: iters must exceed burn_in");
        if (thin < 1) throw ValidationError("ChainConfig: thin must be >= 1");
    }

    int draws() const { return (iters - burn_in) / thin; }
};

/// Count, mean and centered scatter of the points in one cluster.
struct ClusterStats {
    int n = 0;
    Vector mean;
    Matrix scatter;
};

inline NiwParams niw_posterior(const NiwParams& prior, const ClusterStats& s) {
    if (s.n == 0) return prior;
    const double n = s.n, lam = prior.lambda;
    Vector diff = s.mean - prior.mu0;
    Matrix psi = prior.psi.matrix() + s.scatter + (lam * n / (lam + n)) * diff * diff.transpose();
    return NiwParams{(lam * prior.mu0 + n * s.mean) / (lam + n), lam + n, SpdMatrix(0.5 * (psi + psi.transpose())),
                     prior.nu + n};
}

inline double sample_gamma(double shape, Rng& rng) { return std::gamma_distribution<double>(shape, 1.0)(rng); }

inline double sample_beta(double a, double b, Rng& rng) {
    double x = sample_gamma(a, rng), y = sample_gamma(b, rng);
    return x / (x + y);
}

/// Sigma ~ IW(psi, nu) by Bartlett: with psi = U U^T and the Bartlett factor A
/// of a standard Wishart, Sigma = (U A^-T)(U A^-T)^T. Returns the factor B = U A^-T.
inline Matrix sample_inverse_wishart_factor(const SpdMatrix& psi, double nu, Rng& rng) {
    const int d = psi.dim();
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix a = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        a(i, i) = std::sqrt(2.0 * sample_gamma(0.5 * (nu - i), rng));
        for (int j = 0; j < i; ++j) a(i, j) = normal(rng);
    }
    Eigen::LLT<Matrix> llt(psi.matrix());
    if (llt.info() != Eigen::Success) throw NumericalError("inverse Wishart: scale is not positive definite");
    Matrix u = llt.matrixL();
    // A^-T is upper triangular: solve A^T X = I.
    Matrix a_inv_t = a.transpose().triangularView<Eigen::Upper>().solve(Matrix::Identity(d, d));
    return u * a_inv_t;
}

inline SpdMatrix sample_inverse_wishart(const SpdMatrix& psi, double nu, Rng& rng) {
    Matrix b = sample_inverse_wishart_factor(psi, nu, rng);
    Matrix s = b * b.transpose();
    return SpdMatrix(0.5 * (s + s.transpose()));
}

inline GaussianAtom sample_niw(const NiwParams& p, Rng& rng) {
    const int d = p.dim();
    Matrix b = sample_inverse_wishart_factor(p.psi, p.nu, rng);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector z(d);
    for (int i = 0; i < d; ++i) z[i] = normal(rng);
    Vector mu = p.mu0 + b * z / std::sqrt(p.lambda);
    Matrix s = b * b.transpose();
    return GaussianAtom(std::move(mu), SpdMatrix(0.5 * (s + s.transpose())));
}

/// Full state of the truncated blocked Gibbs chain.
struct GibbsState {
    std::vector<double> sticks;   // beta_1..beta_K, beta_K = 1
    std::vector<double> weights;  // stick-breaking weights
    LabelVector labels;           // 1-based
    std::vector<GaussianAtom> atoms;
    DpmmHyper hyper;

    int truncation() const { return hyper.truncation; }
    MixingMeasure measure() const { return MixingMeasure(weights, atoms); }

    std::vector<int> counts() const {
        std::vector<int> n(hyper.truncation, 0);
        for (int z : labels) ++n[z - 1];
        return n;
    }
};

/// w_k = beta_k prod_{j<k} (1 - beta_j); the last weight takes the remaining mass.
inline std::vector<double> stick_breaking_weights(const std::vector<double>& sticks) {
    std::vector<double> w(sticks.size());
    double remaining = 1.0, used = 0.0;
    for (std::size_t k = 0; k + 1 < sticks.size(); ++k) {
        w[k] = sticks[k] * remaining;
        used += w[k];
        remaining *= 1.0 - sticks[k];
    }
    w.back() = std::max(0.0, 1.0 - used);
    return w;
}

namespace detail {

inline std::vector<ClusterStats> cluster_stats(const DataMatrix& data, const LabelVector& labels, int k, int d) {
    std::vector<ClusterStats> stats(k, ClusterStats{0, Vector::Zero(d), Matrix::Zero(d, d)});
    for (int i = 0; i < data.n(); ++i) {
        auto& s = stats[labels[i] - 1];
        ++s.n;
        s.mean += data.rows().row(i).transpose();
    }
    for (auto& s : stats)
        if (s.n > 0) s.mean /= s.n;
    for (int i = 0; i < data.n(); ++i) {
        auto& s = stats[labels[i] - 1];
        Vector r = data.rows().row(i).transpose() - s.mean;
        s.scatter.noalias() += r * r.transpose();
    }
    return stats;
}

inline void check_data(const GibbsState& state, const DataMatrix& data) {
    if (data.dim() != state.hyper.niw.dim())
        throw ValidationError("Gibbs: data has dimension " + std::to_string(data.dim()) + " but the prior has " +
                              std::to_string(state.hyper.niw.dim()));
    if (static_cast<int>(state.labels.size()) != data.n())
        throw ValidationError("Gibbs: label count does not match the number of observations");
}

}  // namespace detail

/// beta_k ~ Beta(1 + n_k, alpha + sum_{j>k} n_j) for k < K, beta_K = 1.
inline void step_sticks(GibbsState& state, Rng& rng) {
    const int k = state.truncation();
    auto n = state.counts();
    long tail = 0;
    for (int c : n) tail += c;
    state.sticks.assign(k, 1.0);
    for (int j = 0; j + 1 < k; ++j) {
        tail -= n[j];
        state.sticks[j] = sample_beta(1.0 + n[j], state.hyper.alpha + static_cast<double>(tail), rng);
    }
    state.weights = stick_breaking_weights(state.sticks);
}

/// Every atom is redrawn from its NIW conditional; empty clusters use the prior.
inline void step_atoms(GibbsState& state, const DataMatrix& data, Rng& rng) {
    detail::check_data(state, data);
    const int k = state.truncation();
    auto stats = detail::cluster_stats(data, state.labels, k, data.dim());
    state.atoms.clear();
    state.atoms.reserve(k);
    for (int j = 0; j < k; ++j) state.atoms.push_back(sample_niw(niw_posterior(state.hyper.niw, stats[j]), rng));
}

/// z_i ~ Categorical(w_k N(y_i | mu_k, Sigma_k)), sampled in log space.
inline void step_labels(GibbsState& state, const DataMatrix& data, Rng& rng) {
    detail::check_data(state, data);
    const int k = state.truncation();
    std::vector<int> live;
    std::vector<double> log_w;
    std::vector<GaussianKernel> kernels;
    for (int j = 0; j < k; ++j) {
        if (state.weights[j] <= 0.0) continue;
        live.push_back(j);
        log_w.push_back(std::log(state.weights[j]));
        kernels.emplace_back(state.atoms[j]);
    }
    if (live.empty()) throw NumericalError("step_labels: every component has zero weight");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> lp(live.size());
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = data.rows();
    for (int i = 0; i < data.n(); ++i) {
        const double* y = rows.data() + static_cast<std::ptrdiff_t>(i) * data.dim();
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < live.size(); ++j) {
            lp[j] = log_w[j] + kernels[j].log_pdf(y);
            best = std::max(best, lp[j]);
        }
        if (!std::isfinite(best)) throw NumericalError("step_labels: all log-probabilities are -inf for point " + std::to_string(i + 1));
        double total = 0.0;
        for (double& v : lp) total += (v = std::exp(v - best));
        double u = unif(rng) * total;
        std::size_t pick = live.size() - 1;
        for (std::size_t j = 0; j < live.size(); ++j) {
            u -= lp[j];
            if (u < 0.0) {
                pick = j;
                break;
            }
        }
        state.labels[i] = live[pick] + 1;
    }
}

/// Uniform random labels, then sticks and atoms from the prior.
inline GibbsState initial_state(const DataMatrix& data, const DpmmHyper& hyper, Rng& rng) {
    hyper.validate();
    GibbsState state{{}, {}, LabelVector(data.n()), {}, hyper};
    std::uniform_int_distribution<int> pick(1, hyper.truncation);
    for (int& z : state.labels) z = pick(rng);
    GibbsState prior{{}, {}, {}, {}, hyper};
    step_sticks(prior, rng);
    step_atoms(prior, DataMatrix::empty(hyper.niw.dim()), rng);
    state.sticks = std::move(prior.sticks);
    state.weights = std::move(prior.weights);
    state.atoms = std::move(prior.atoms);
    return state;
}

struct PosteriorDraw {
    MixingMeasure measure;
    LabelVector labels;
    int iteration;
};

/// Blocked Gibbs chain. Each sweep updates sticks, atoms, then labels; iteration
/// t (1-based) is kept when t > burn_in and (t - burn_in) is a multiple of thin.
inline std::vector<PosteriorDraw> run_chain(const DataMatrix& data, const DpmmHyper& hyper, const ChainConfig& cfg) {
    cfg.validate();
    hyper.validate();
    if (data.dim() != hyper.niw.dim())
        throw ValidationError("run_chain: data has dimension " + std::to_string(data.dim()) + " but the prior has " +
                              std::to_string(hyper.niw.dim()));
    Rng rng = make_stream(cfg.seed, 0x9167b5);
    GibbsState state = initial_state(data, hyper, rng);
    std::vector<PosteriorDraw> draws;
    draws.reserve(cfg.draws());
    for (int t = 1; t <= cfg.iters; ++t) {
        step_sticks(state, rng);
        step_atoms(state, data, rng);
        step_labels(state, data, rng);
        if (t > cfg.burn_in && (t - cfg.burn_in) % cfg.thin == 0)
            draws.push_back(PosteriorDraw{state.measure(), state.labels, t});
    }
    return draws;
}

/// Draws of (sticks, atoms) given frozen labels, one measure per iteration.
inline std::vector<MixingMeasure> conditional_density_refresh(const LabelVector& labels, const DataMatrix& data,
                                                              const DpmmHyper& hyper, int refresh_iters,
                                                              std::uint64_t seed) {
    hyper.validate();
    if (refresh_iters < 1) throw ValidationError("conditional_density_refresh: refresh_iters must be >= 1");
    if (static_cast<int>(labels.size()) != data.n())
        throw ValidationError("conditional_density_refresh: label count does not match the data");
    for (int z : labels)
        if (z < 1 || z > hyper.truncation)
            throw ValidationError("conditional_density_refresh: label " + std::to_string(z) + " outside [1, K]");
    Rng rng = make_stream(seed, 0x7ef7e5);
    GibbsState state{{}, {}, labels, {}, hyper};
    std::vector<MixingMeasure> out;
    out.reserve(refresh_iters);
    for (int r = 0; r < refresh_iters; ++r) {
        step_sticks(state, rng);
        step_atoms(state, data, rng);
        out.push_back(state.measure());
    }
    return out;
}

}  // namespace mixsum
