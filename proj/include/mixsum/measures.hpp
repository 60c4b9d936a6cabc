#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mixsum/linalg.hpp"

namespace mixsum {

/// One mixture component theta = (mu, Sigma).
class GaussianAtom {
public:
    GaussianAtom(Vector mean, SpdMatrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
        if (mean_.size() != cov_.dim())
            throw ValidationError("GaussianAtom: mean has dimension " + std::to_string(mean_.size()) +
                                  " but covariance has dimension " + std::to_string(cov_.dim()));
        if (!mean_.allFinite()) throw ValidationError("GaussianAtom: non-finite mean");
    }

    int dim() const { return static_cast<int>(mean_.size()); }
    const Vector& mean() const { return mean_; }
    const SpdMatrix& cov() const { return cov_; }

private:
    Vector mean_;
    SpdMatrix cov_;
};

/// Finite mixing measure sum_k w_k delta_{theta_k}.
class MixingMeasure {
public:
    MixingMeasure(std::vector<double> weights, std::vector<GaussianAtom> atoms)
        : weights_(std::move(weights)), atoms_(std::move(atoms)) {
        if (atoms_.empty()) throw ValidationError("MixingMeasure: no atoms");
        if (weights_.size() != atoms_.size())
            throw ValidationError("MixingMeasure: " + std::to_string(weights_.size()) + " weights for " +
                                  std::to_string(atoms_.size()) + " atoms");
        double total = 0.0;
        for (double w : weights_) {
            if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("MixingMeasure: negative or non-finite weight");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-10)
            throw ValidationError("MixingMeasure: weights sum to " + std::to_string(total));
        for (const auto& a : atoms_)
            if (a.dim() != atoms_.front().dim()) throw ValidationError("MixingMeasure: atoms of mixed dimension");
    }

    std::size_t size() const { return atoms_.size(); }
    int dim() const { return atoms_.front().dim(); }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<GaussianAtom>& atoms() const { return atoms_; }
    double weight(std::size_t k) const { return weights_[k]; }
    const GaussianAtom& atom(std::size_t k) const { return atoms_[k]; }

private:
    std::vector<double> weights_;
    std::vector<GaussianAtom> atoms_;
};

/// Discrete measure on the real line with ascending support. Ties are allowed.
class Discrete1DMeasure {
public:
    Discrete1DMeasure(std::vector<double> support, std::vector<double> weights)
        : support_(std::move(support)), weights_(std::move(weights)) {
        if (support_.empty() || support_.size() != weights_.size())
            throw ValidationError("Discrete1DMeasure: support and weights must be non-empty and of equal length");
        if (!std::is_sorted(support_.begin(), support_.end()))
            throw ValidationError("Discrete1DMeasure: support is not sorted");
        double total = 0.0;
        for (double w : weights_) {
            if (!(w >= 0.0)) throw ValidationError("Discrete1DMeasure: negative weight");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-10)
            throw ValidationError("Discrete1DMeasure: weights sum to " + std::to_string(total));
    }

    std::size_t size() const { return support_.size(); }
    std::span<const double> support() const { return support_; }
    std::span<const double> weights() const { return weights_; }

private:
    std::vector<double> support_;
    std::vector<double> weights_;
};

/// 1-based cluster labels c_1..c_n.
using LabelVector = std::vector<int>;

/// n observations of dimension d, stored one per row.
class DataMatrix {
public:
    explicit DataMatrix(Matrix rows) : rows_(std::move(rows)) {
        if (rows_.rows() < 1 || rows_.cols() < 1) throw ValidationError("DataMatrix: need n >= 1 and d >= 1");
        if (!rows_.allFinite()) throw ValidationError("DataMatrix: non-finite entries");
    }

    /// A data set with no observations; only meaningful for prior-predictive runs.
    static DataMatrix empty(int d) { return DataMatrix(Matrix(0, d), 0); }

    int n() const { return static_cast<int>(rows_.rows()); }
    int dim() const { return static_cast<int>(rows_.cols()); }
    const Matrix& rows() const { return rows_; }
    Vector row(int i) const { return rows_.row(i).transpose(); }

private:
    DataMatrix(Matrix rows, int) : rows_(std::move(rows)) {}
    Matrix rows_;
};

/// Multivariate normal log-density with the Cholesky inverse cached as a dense
/// lower-triangular array, so evaluation avoids per-call allocation.
class GaussianKernel {
public:
    GaussianKernel(const Vector& mean, const Matrix& cov) : d_(static_cast<int>(mean.size())), mean_(mean) {
        Eigen::LLT<Matrix> llt(cov);
        if (llt.info() != Eigen::Success) throw NumericalError("GaussianKernel: covariance is not positive definite");
        Matrix l = llt.matrixL();
        Matrix linv = l.triangularView<Eigen::Lower>().solve(Matrix::Identity(d_, d_));
        linv_.resize(static_cast<std::size_t>(d_) * d_);
        double logdet = 0.0;
        for (int i = 0; i < d_; ++i) {
            logdet += 2.0 * std::log(l(i, i));
            for (int j = 0; j < d_; ++j) linv_[i * d_ + j] = linv(i, j);
        }
        log_norm_ = -0.5 * (d_ * std::log(2.0 * std::numbers::pi) + logdet);
    }

    explicit GaussianKernel(const GaussianAtom& a) : GaussianKernel(a.mean(), a.cov().matrix()) {}

    double log_pdf(const double* x) const {
        double q = 0.0;
        for (int i = 0; i < d_; ++i) {
            double z = 0.0;
            for (int j = 0; j <= i; ++j) z += linv_[i * d_ + j] * (x[j] - mean_[j]);
            q += z * z;
        }
        return log_norm_ - 0.5 * q;
    }

    double log_pdf(const Vector& x) const { return log_pdf(x.data()); }

private:
    int d_;
    Vector mean_;
    std::vector<double> linv_;
    double log_norm_;
};

/// Pushforward of G through a real-valued map of atoms.
inline Discrete1DMeasure project_1d(const MixingMeasure& g, const std::function<double(const GaussianAtom&)>& proj) {
    const std::size_t k = g.size();
    std::vector<double> values(k);
    for (std::size_t i = 0; i < k; ++i) values[i] = proj(g.atom(i));
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> support(k), weights(k);
    for (std::size_t i = 0; i < k; ++i) {
        support[i] = values[order[i]];
        weights[i] = g.weight(order[i]);
    }
    return Discrete1DMeasure(std::move(support), std::move(weights));
}

/// Drops atoms with weight below `floor` and renormalizes the rest.
inline MixingMeasure prune(const MixingMeasure& g, double floor) {
    if (!(floor >= 0.0 && floor < 1.0)) throw ValidationError("prune: floor must lie in [0, 1)");
    if (floor == 0.0) return g;
    std::vector<double> weights;
    std::vector<GaussianAtom> atoms;
    double kept = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (g.weight(k) < floor) continue;
        weights.push_back(g.weight(k));
        atoms.push_back(g.atom(k));
        kept += g.weight(k);
    }
    if (atoms.empty()) throw ValidationError("prune: every atom has weight below the floor");
    for (double& w : weights) w /= kept;
    return MixingMeasure(std::move(weights), std::move(atoms));
}

/// Mixture density f * G evaluated at arbitrary points.
class MixtureDensity {
public:
    explicit MixtureDensity(const MixingMeasure& g) : dim_(g.dim()) {
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (g.weight(k) <= 0.0) continue;
            log_weights_.push_back(std::log(g.weight(k)));
            kernels_.emplace_back(g.atom(k));
        }
    }

    int dim() const { return dim_; }

    double operator()(const double* x) const {
        double s = 0.0;
        for (std::size_t k = 0; k < kernels_.size(); ++k) s += std::exp(log_weights_[k] + kernels_[k].log_pdf(x));
        return s;
    }

    double operator()(const Vector& x) const {
        if (x.size() != dim_) throw ValidationError("mixture_density: point dimension mismatch");
        return (*this)(x.data());
    }

private:
    int dim_;
    std::vector<double> log_weights_;
    std::vector<GaussianKernel> kernels_;
};

inline double mixture_density(const MixingMeasure& g, const Vector& x) { return MixtureDensity(g)(x); }

}  // namespace mixsum
