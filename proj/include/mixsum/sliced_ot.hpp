#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mixsum/linalg.hpp"
#include "mixsum/measures.hpp"
#include "mixsum/ot_exact.hpp"

namespace mixsum {

enum class SlicedKind { vectorized, mix_sw, smix_w };

inline std::string to_string(SlicedKind k) {
    switch (k) {
        case SlicedKind::vectorized: return "vectorized";
        case SlicedKind::mix_sw: return "mix_sw";
        case SlicedKind::smix_w: return "smix_w";
    }
    return "?";
}

inline SlicedKind parse_sliced_kind(std::string_view s) {
    if (s == "vectorized" || s == "sw") return SlicedKind::vectorized;
    if (s == "mix_sw") return SlicedKind::mix_sw;
    if (s == "smix_w") return SlicedKind::smix_w;
    throw ValidationError("unknown sliced metric '" + std::string(s) + "' (expected vectorized, mix_sw or smix_w)");
}

struct VectorizedDirection {
    UnitVector v;  // on the sphere of dimension d(d+1) - 1
};

/// Velocity (w1 v, w2 A) of a generalized geodesic through (0, I).
struct MixSwDirection {
    UnitVector w;  // in R^2
    UnitVector v;
    SymmetricMatrix a;  // unit Frobenius norm
};

struct SMixWDirection {
    UnitVector w;  // in R^2
    UnitVector v;
};

using Direction = std::variant<VectorizedDirection, MixSwDirection, SMixWDirection>;

/// Stacks mu with the rows of Sigma: (mu, Sigma^(1), ..., Sigma^(d)).
inline Vector vec_embed(const GaussianAtom& atom) {
    const int d = atom.dim();
    Vector out(d + d * d);
    out.head(d) = atom.mean();
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out[d + i * d + j] = atom.cov()(i, j);
    return out;
}

inline GaussianAtom vec_unembed(const Vector& v, int d) {
    if (v.size() != d + d * d) throw ValidationError("vec_unembed: vector length does not match d(d+1)");
    Matrix cov(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) cov(i, j) = v[d + i * d + j];
    return GaussianAtom(v.head(d), SpdMatrix(cov));
}

/// Closed-form generalized geodesic projection w1 <mu, v> + w2 tr(A log Sigma).
inline double mix_sw_project(const GaussianAtom& atom, const MixSwDirection& dir) {
    if (atom.dim() != dir.v.dim() || atom.dim() != dir.a.dim())
        throw ValidationError("mix_sw_project: dimension mismatch");
    return dir.w[0] * atom.mean().dot(dir.v.vector()) +
           dir.w[1] * frobenius_inner(dir.a.matrix(), matrix_log(atom.cov()).matrix());
}

/// w1 <v, mu> + w2 log sqrt(v^T Sigma v).
inline double smix_project(const GaussianAtom& atom, const SMixWDirection& dir) {
    if (atom.dim() != dir.v.dim()) throw ValidationError("smix_project: dimension mismatch");
    const Vector& v = dir.v.vector();
    double var = std::max(v.dot(atom.cov().matrix() * v), kEigenFloor);
    return dir.w[0] * atom.mean().dot(v) + dir.w[1] * 0.5 * std::log(var);
}

/// A fixed, seeded set of L projection directions of one kind.
class DirectionSet {
public:
    DirectionSet(SlicedKind kind, int dim, std::vector<Direction> dirs) : kind_(kind), dim_(dim), dirs_(std::move(dirs)) {
        if (dirs_.empty()) throw ValidationError("DirectionSet: need at least one direction");
        const int d = dim_;
        const int f = feature_size(kind_, d);
        const int stride = coefficient_size(kind_, d);
        coef_.assign(dirs_.size() * static_cast<std::size_t>(stride), 0.0);
        for (std::size_t l = 0; l < dirs_.size(); ++l) {
            double* c = coef_.data() + l * stride;
            switch (kind_) {
                case SlicedKind::vectorized: {
                    const auto* dir = std::get_if<VectorizedDirection>(&dirs_[l]);
                    if (!dir || dir->v.dim() != f) throw ValidationError("DirectionSet: expected vectorized directions");
                    for (int i = 0; i < f; ++i) c[i] = dir->v[i];
                    break;
                }
                case SlicedKind::mix_sw: {
                    const auto* dir = std::get_if<MixSwDirection>(&dirs_[l]);
                    if (!dir || dir->v.dim() != d || dir->a.dim() != d || dir->w.dim() != 2)
                        throw ValidationError("DirectionSet: expected mix_sw directions");
                    for (int i = 0; i < d; ++i) c[i] = dir->w[0] * dir->v[i];
                    for (int i = 0; i < d; ++i)
                        for (int j = 0; j < d; ++j) c[d + i * d + j] = dir->w[1] * dir->a(i, j);
                    break;
                }
                case SlicedKind::smix_w: {
                    const auto* dir = std::get_if<SMixWDirection>(&dirs_[l]);
                    if (!dir || dir->v.dim() != d || dir->w.dim() != 2)
                        throw ValidationError("DirectionSet: expected smix_w directions");
                    for (int i = 0; i < d; ++i) c[i] = dir->v[i];
                    c[d] = dir->w[0];
                    c[d + 1] = dir->w[1];
                    break;
                }
            }
        }
    }

    /// L i.i.d. directions: w ~ U(S^1), v ~ U(S^{d-1}), A ~ U(unit symmetric).
    static DirectionSet sample(SlicedKind kind, int dim, int count, std::uint64_t seed) {
        if (dim < 1) throw ValidationError("DirectionSet: dimension must be >= 1");
        if (count < 1) throw ValidationError("DirectionSet: L must be >= 1");
        Rng rng = make_stream(seed, 0xd1ec7105ULL + static_cast<std::uint64_t>(kind));
        std::vector<Direction> dirs;
        dirs.reserve(count);
        for (int l = 0; l < count; ++l) {
            switch (kind) {
                case SlicedKind::vectorized:
                    dirs.emplace_back(VectorizedDirection{sample_unit_sphere(dim * (dim + 1), rng)});
                    break;
                case SlicedKind::mix_sw: {
                    auto w = sample_unit_sphere(2, rng);
                    auto v = sample_unit_sphere(dim, rng);
                    auto a = sample_unit_symmetric(dim, rng);
                    dirs.emplace_back(MixSwDirection{std::move(w), std::move(v), std::move(a)});
                    break;
                }
                case SlicedKind::smix_w: {
                    auto w = sample_unit_sphere(2, rng);
                    auto v = sample_unit_sphere(dim, rng);
                    dirs.emplace_back(SMixWDirection{std::move(w), std::move(v)});
                    break;
                }
            }
        }
        return DirectionSet(kind, dim, std::move(dirs));
    }

    /// Length of the per-atom feature vector: mu followed by a d x d matrix.
    static int feature_size(SlicedKind, int d) { return d + d * d; }

    /// Length of the per-direction coefficient block: (v, w1, w2) for smix_w,
    /// a linear functional on the features otherwise.
    static int coefficient_size(SlicedKind kind, int d) { return kind == SlicedKind::smix_w ? d + 2 : d + d * d; }

    SlicedKind kind() const { return kind_; }
    int dim() const { return dim_; }
    int size() const { return static_cast<int>(dirs_.size()); }
    const Direction& operator[](int l) const { return dirs_[l]; }
    const double* coefficients(int l) const {
        return coef_.data() + static_cast<std::size_t>(l) * coefficient_size(kind_, dim_);
    }

private:
    SlicedKind kind_;
    int dim_;
    std::vector<Direction> dirs_;
    std::vector<double> coef_;
};

/// Per-atom features a projection needs: (mu, vec Sigma) for vectorized and
/// smix_w, (mu, vec log Sigma) for mix_sw. Zero-weight atoms are dropped.
class PreparedMeasure {
public:
    PreparedMeasure(const MixingMeasure& g, SlicedKind kind) : kind_(kind), dim_(g.dim()) {
        const int d = dim_, f = DirectionSet::feature_size(kind, d);
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (g.weight(k) <= 0.0) continue;
            weights_.push_back(g.weight(k));
            const auto& atom = g.atom(k);
            std::size_t base = features_.size();
            features_.resize(base + f);
            for (int i = 0; i < d; ++i) features_[base + i] = atom.mean()[i];
            const Matrix s = kind == SlicedKind::mix_sw ? matrix_log(atom.cov()).matrix() : atom.cov().matrix();
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) features_[base + d + i * d + j] = s(i, j);
        }
    }

    SlicedKind kind() const { return kind_; }
    int dim() const { return dim_; }
    std::size_t size() const { return weights_.size(); }
    double weight(std::size_t k) const { return weights_[k]; }
    const double* features(std::size_t k) const {
        return features_.data() + k * DirectionSet::feature_size(kind_, dim_);
    }

private:
    SlicedKind kind_;
    int dim_;
    std::vector<double> weights_;
    std::vector<double> features_;
};

/// L sorted pushforward measures of one mixing measure.
class ProjectedMeasure {
public:
    ProjectedMeasure(const PreparedMeasure& g, const DirectionSet& dirs) : atoms_(g.size()), slices_(dirs.size()) {
        if (g.kind() != dirs.kind()) throw ValidationError("ProjectedMeasure: metric kind mismatch");
        if (g.dim() != dirs.dim()) throw ValidationError("ProjectedMeasure: dimension mismatch");
        const int d = g.dim(), f = DirectionSet::feature_size(g.kind(), d);
        support_.resize(atoms_ * slices_);
        weights_.resize(atoms_ * slices_);
        std::vector<double> values(atoms_);
        std::vector<std::size_t> order(atoms_);
        for (std::size_t l = 0; l < slices_; ++l) {
            const double* c = dirs.coefficients(static_cast<int>(l));
            for (std::size_t k = 0; k < atoms_; ++k) {
                const double* x = g.features(k);
                if (g.kind() == SlicedKind::smix_w) {
                    double mean = 0.0, var = 0.0;
                    for (int i = 0; i < d; ++i) {
                        mean += c[i] * x[i];
                        double row = 0.0;
                        for (int j = 0; j < d; ++j) row += x[d + i * d + j] * c[j];
                        var += c[i] * row;
                    }
                    values[k] = c[d] * mean + c[d + 1] * 0.5 * std::log(std::max(var, kEigenFloor));
                } else {
                    double s = 0.0;
                    for (int i = 0; i < f; ++i) s += c[i] * x[i];
                    values[k] = s;
                }
            }
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
            for (std::size_t k = 0; k < atoms_; ++k) {
                support_[l * atoms_ + k] = values[order[k]];
                weights_[l * atoms_ + k] = g.weight(order[k]);
            }
        }
    }

    ProjectedMeasure(const MixingMeasure& g, const DirectionSet& dirs) : ProjectedMeasure(PreparedMeasure(g, dirs.kind()), dirs) {}

    std::size_t slices() const { return slices_; }
    std::span<const double> support(std::size_t l) const { return {support_.data() + l * atoms_, atoms_}; }
    std::span<const double> weights(std::size_t l) const { return {weights_.data() + l * atoms_, atoms_}; }

private:
    std::size_t atoms_, slices_;
    std::vector<double> support_, weights_;
};

/// (1/L) sum_l W_p^p over matching slices.
inline double sliced_pp(const ProjectedMeasure& a, const ProjectedMeasure& b, double p) {
    if (a.slices() != b.slices()) throw ValidationError("sliced_pp: different direction counts");
    double total = 0.0;
    for (std::size_t l = 0; l < a.slices(); ++l)
        total += wasserstein_1d(p, a.support(l), a.weights(l), b.support(l), b.weights(l));
    return total / static_cast<double>(a.slices());
}

struct SlicedEstimate {
    double value;  // p-th power
    int L;
    double p;
    std::uint64_t seed;

    double root() const { return p == 1.0 ? value : std::pow(value, 1.0 / p); }
};

/// Sliced estimate over a caller-provided direction set. With the same set,
/// swapping the arguments gives the same value bit for bit.
inline double distance_between_samples(SlicedKind kind, double p, const DirectionSet& dirs, const MixingMeasure& g1,
                                       const MixingMeasure& g2) {
    if (kind != dirs.kind()) throw ValidationError("distance_between_samples: directions were sampled for another metric");
    if (!(p >= 1.0)) throw ValidationError("distance_between_samples: p must be >= 1");
    if (g1.dim() != g2.dim() || g1.dim() != dirs.dim())
        throw ValidationError("distance_between_samples: dimension mismatch");
    return sliced_pp(ProjectedMeasure(g1, dirs), ProjectedMeasure(g2, dirs), p);
}

/// Monte Carlo sliced distance with L fresh directions drawn from `seed`.
inline SlicedEstimate sliced_distance(SlicedKind kind, double p, int L, std::uint64_t seed, const MixingMeasure& g1,
                                      const MixingMeasure& g2) {
    if (g1.dim() != g2.dim())
        throw ValidationError("sliced_distance: dimension mismatch (" + std::to_string(g1.dim()) + " vs " +
                              std::to_string(g2.dim()) + ")");
    if (L < 1) throw ValidationError("sliced_distance: L must be >= 1");
    auto dirs = DirectionSet::sample(kind, g1.dim(), L, seed);
    return {distance_between_samples(kind, p, dirs, g1, g2), L, p, seed};
}

}  // namespace mixsum
