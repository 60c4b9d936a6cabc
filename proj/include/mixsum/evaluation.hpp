#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mixsum/core.hpp"
#include "mixsum/measures.hpp"
#include "mixsum/ot_exact.hpp"
#include "mixsum/sliced_ot.hpp"

namespace mixsum {

/// Rectangular grid of cells; cell c has center lo + (i + 1/2) h per axis,
/// with the last axis varying fastest.
struct GridSpec {
    std::vector<double> lo, hi;
    std::vector<int> resolution;

    /// Per-axis bounds (min - margin, max + margin) over the data.
    static GridSpec from_data(const DataMatrix& data, int resolution = 100, double margin = 1.0) {
        if (resolution < 1) throw ValidationError("GridSpec: resolution must be >= 1");
        if (data.n() < 1) throw ValidationError("GridSpec: no data to bound the grid");
        GridSpec g;
        for (int a = 0; a < data.dim(); ++a) {
            g.lo.push_back(data.rows().col(a).minCoeff() - margin);
            g.hi.push_back(data.rows().col(a).maxCoeff() + margin);
            g.resolution.push_back(resolution);
        }
        g.validate();
        return g;
    }

    void validate() const {
        if (lo.empty() || lo.size() != hi.size() || lo.size() != resolution.size())
            throw ValidationError("GridSpec: bounds and resolution must have one entry per axis");
        for (std::size_t a = 0; a < lo.size(); ++a) {
            if (!(hi[a] > lo[a]) || !std::isfinite(lo[a]) || !std::isfinite(hi[a]))
                throw ValidationError("GridSpec: axis " + std::to_string(a) + " has an empty range");
            if (resolution[a] < 1) throw ValidationError("GridSpec: resolution must be >= 1");
        }
    }

    int dim() const { return static_cast<int>(lo.size()); }
    double step(int a) const { return (hi[a] - lo[a]) / resolution[a]; }

    std::size_t cells() const {
        std::size_t c = 1;
        for (int r : resolution) c *= static_cast<std::size_t>(r);
        return c;
    }

    double cell_volume() const {
        double v = 1.0;
        for (int a = 0; a < dim(); ++a) v *= step(a);
        return v;
    }

    void center(std::size_t c, double* out) const {
        for (int a = dim() - 1; a >= 0; --a) {
            auto i = c % static_cast<std::size_t>(resolution[a]);
            c /= static_cast<std::size_t>(resolution[a]);
            out[a] = lo[a] + (static_cast<double>(i) + 0.5) * step(a);
        }
    }

    bool operator==(const GridSpec&) const = default;
};

struct DensityGrid {
    GridSpec spec;
    std::vector<double> values;  // density at each cell center, unnormalized

    double mass() const { return std::accumulate(values.begin(), values.end(), 0.0) * spec.cell_volume(); }
};

/// values[c] = f(center_c) for any callable f(const double*).
template <class F>
DensityGrid density_on_grid(const F& f, const GridSpec& spec, unsigned threads = 0) {
    spec.validate();
    DensityGrid g{spec, std::vector<double>(spec.cells())};
    parallel_for(g.values.size(), threads, [&](std::size_t c) {
        double x[16];
        std::vector<double> big;
        double* p = x;
        if (spec.dim() > 16) {
            big.resize(spec.dim());
            p = big.data();
        }
        spec.center(c, p);
        double v = f(static_cast<const double*>(p));
        if (!(v >= 0.0) || !std::isfinite(v)) throw NumericalError("density_on_grid: density is negative or non-finite");
        g.values[c] = v;
    });
    return g;
}

/// Grid of (1/R) sum_r (f * G_r), the averaged mixture density.
inline DensityGrid density_on_grid(const std::vector<MixingMeasure>& measures, const GridSpec& spec, unsigned threads = 0) {
    if (measures.empty()) throw ValidationError("density_on_grid: no measures");
    std::vector<MixtureDensity> dens;
    for (const auto& g : measures) {
        if (g.dim() != spec.dim()) throw ValidationError("density_on_grid: measure and grid dimensions differ");
        dens.emplace_back(g);
    }
    const double r = static_cast<double>(dens.size());
    return density_on_grid(
        [&](const double* x) {
            double s = 0.0;
            for (const auto& f : dens) s += f(x);
            return s / r;
        },
        spec, threads);
}

inline DensityGrid density_on_grid(const MixingMeasure& g, const GridSpec& spec, unsigned threads = 0) {
    return density_on_grid(std::vector<MixingMeasure>{g}, spec, threads);
}

namespace detail {

inline void require_same_grid(const DensityGrid& a, const DensityGrid& b, const char* what) {
    if (!(a.spec == b.spec) || a.values.size() != b.values.size())
        throw ValidationError(std::string(what) + ": densities live on different grids");
}

}  // namespace detail

/// 0.5 sum_c |A_c - B_c| vol; grid mass is not renormalized.
inline double tv_on_grid(const DensityGrid& a, const DensityGrid& b) {
    detail::require_same_grid(a, b, "tv_on_grid");
    double s = 0.0;
    for (std::size_t c = 0; c < a.values.size(); ++c) s += std::abs(a.values[c] - b.values[c]);
    return 0.5 * s * a.spec.cell_volume();
}

/// Sliced Wasserstein between grids viewed as discrete measures on the cell
/// centers, each renormalized to unit mass. Directions and the sort of the
/// projected centers are computed once and shared by every pair.
class GridSlicer {
public:
    GridSlicer(const GridSpec& spec, int L, std::uint64_t seed) : spec_(spec), L_(L) {
        spec_.validate();
        if (L < 1) throw ValidationError("GridSlicer: L must be >= 1");
        const int d = spec_.dim();
        const std::size_t n = spec_.cells();
        centers_.resize(n * d);
        for (std::size_t c = 0; c < n; ++c) spec_.center(c, centers_.data() + c * d);
        Rng rng = make_stream(seed, 0x6e1d5u);
        dirs_.resize(static_cast<std::size_t>(L) * d);
        order_.resize(static_cast<std::size_t>(L) * n);
        std::vector<double> proj(n);
        for (int l = 0; l < L; ++l) {
            auto v = sample_unit_sphere(d, rng);
            for (int a = 0; a < d; ++a) dirs_[l * d + a] = v[a];
            for (std::size_t c = 0; c < n; ++c) proj[c] = project(l, c);
            auto* ord = order_.data() + static_cast<std::size_t>(l) * n;
            std::iota(ord, ord + n, 0u);
            std::stable_sort(ord, ord + n, [&](std::uint32_t x, std::uint32_t y) { return proj[x] < proj[y]; });
        }
    }

    const GridSpec& spec() const { return spec_; }
    int size() const { return L_; }

    /// (1/L) sum_l W_p^p.
    double sw_pp(const DensityGrid& a, const DensityGrid& b, double p) const {
        detail::require_same_grid(a, b, "sw_on_grid");
        if (!(a.spec == spec_)) throw ValidationError("sw_on_grid: grid does not match the slicer");
        if (!(p >= 1.0)) throw ValidationError("sw_on_grid: p must be >= 1");
        const std::size_t n = spec_.cells();
        auto wa = normalized(a), wb = normalized(b);
        std::vector<double> s(n), sa(n), sb(n);
        double total = 0.0;
        for (int l = 0; l < L_; ++l) {
            const auto* ord = order_.data() + static_cast<std::size_t>(l) * n;
            for (std::size_t k = 0; k < n; ++k) {
                s[k] = project(l, ord[k]);
                sa[k] = wa[ord[k]];
                sb[k] = wb[ord[k]];
            }
            total += wasserstein_1d(p, s, sa, s, sb);
        }
        return total / L_;
    }

    double sw(const DensityGrid& a, const DensityGrid& b, double p) const {
        double v = sw_pp(a, b, p);
        return p == 1.0 ? v : std::pow(v, 1.0 / p);
    }

private:
    double project(int l, std::size_t c) const {
        const int d = spec_.dim();
        double s = 0.0;
        for (int a = 0; a < d; ++a) s += dirs_[l * d + a] * centers_[c * d + a];
        return s;
    }

    static std::vector<double> normalized(const DensityGrid& g) {
        double total = std::accumulate(g.values.begin(), g.values.end(), 0.0);
        if (!(total > 0.0)) throw ValidationError("sw_on_grid: grid has zero mass");
        std::vector<double> w(g.values.size());
        for (std::size_t c = 0; c < w.size(); ++c) w[c] = g.values[c] / total;
        return w;
    }

    GridSpec spec_;
    int L_;
    std::vector<double> centers_;
    std::vector<double> dirs_;
    std::vector<std::uint32_t> order_;
};

/// SW_p between grids (p-th root of the Monte Carlo average).
inline double sw_on_grid(const DensityGrid& a, const DensityGrid& b, int L = 1000, double p = 2.0, std::uint64_t seed = 1) {
    detail::require_same_grid(a, b, "sw_on_grid");
    return GridSlicer(a.spec, L, seed).sw(a, b, p);
}

struct NamedMeasure {
    std::string name;
    MixingMeasure measure;
};

struct MeasureLossConfig {
    double p = 2.0;
    int L = 100;
    std::uint64_t seed = 1;
    double prune_floor = 1e-8;
    std::vector<SlicedKind> metrics{SlicedKind::vectorized, SlicedKind::mix_sw, SlicedKind::smix_w};
    unsigned threads = 0;
};

struct MeasureLossRow {
    std::string method;
    std::vector<double> expected;  // per metric: ((1/M) sum_m D(G_hat, G_m))^(1/p), D the p-th power estimate
    std::vector<double> truth;     // per metric: D(G_hat, G*)^(1/p), empty without truth
};

/// Expected sliced loss of each candidate against the posterior draws, and
/// its distance to the truth. The mean is taken on the p-th power scale the
/// summarizer minimizes and then rooted, so with the summarizer's L, seed and
/// prune floor each metric's own summary attains its column minimum.
/// All candidates see the same directions for a metric.
inline std::vector<MeasureLossRow> mixing_measure_loss_table(const std::vector<NamedMeasure>& candidates,
                                                             const std::vector<MixingMeasure>& draws,
                                                             const std::optional<MixingMeasure>& truth,
                                                             const MeasureLossConfig& cfg) {
    if (draws.empty()) throw ValidationError("mixing_measure_loss_table: no draws");
    if (!(cfg.p >= 1.0)) throw ValidationError("mixing_measure_loss_table: p must be >= 1");
    const int d = draws.front().dim();
    auto root = [&](double v) { return cfg.p == 1.0 ? v : std::pow(v, 1.0 / cfg.p); };
    std::vector<MeasureLossRow> rows;
    for (const auto& c : candidates) {
        if (c.measure.dim() != d) throw ValidationError("mixing_measure_loss_table: dimension mismatch for " + c.name);
        rows.push_back({c.name, {}, {}});
    }
    for (SlicedKind kind : cfg.metrics) {
        auto dirs = DirectionSet::sample(kind, d, cfg.L, cfg.seed);
        auto project = [&](const MixingMeasure& g) {
            if (g.dim() != d) throw ValidationError("mixing_measure_loss_table: dimension mismatch");
            return ProjectedMeasure(PreparedMeasure(prune(g, cfg.prune_floor), kind), dirs);
        };
        std::vector<std::optional<ProjectedMeasure>> pd(draws.size());
        parallel_for(draws.size(), cfg.threads, [&](std::size_t m) { pd[m].emplace(project(draws[m])); });
        std::optional<ProjectedMeasure> pt;
        if (truth) pt.emplace(project(*truth));
        for (std::size_t r = 0; r < candidates.size(); ++r) {
            auto pc = project(candidates[r].measure);
            std::vector<double> dist(draws.size());
            parallel_for(draws.size(), cfg.threads, [&](std::size_t m) { dist[m] = sliced_pp(pc, *pd[m], cfg.p); });
            double s = 0.0;
            for (double v : dist) s += v;
            rows[r].expected.push_back(root(s / static_cast<double>(draws.size())));
            if (pt) rows[r].truth.push_back(root(sliced_pp(pc, *pt, cfg.p)));
        }
    }
    return rows;
}

struct SimulatedData {
    DataMatrix data;
    MixingMeasure truth;
    LabelVector labels;
};

/// Equal-weight mixture of N((+-2, +-2), 1.5^2 I_2).
inline MixingMeasure four_component_truth() {
    std::vector<GaussianAtom> atoms;
    for (auto [x, y] : {std::pair{-2.0, -2.0}, {2.0, -2.0}, {-2.0, 2.0}, {2.0, 2.0}})
        atoms.emplace_back(Vector{{x, y}}, SpdMatrix(2.25 * Matrix::Identity(2, 2)));
    return MixingMeasure(std::vector<double>(4, 0.25), std::move(atoms));
}

inline SimulatedData simulate_four_component(int n, std::uint64_t seed) {
    if (n < 1) throw ValidationError("simulate_four_component: n must be >= 1");
    auto truth = four_component_truth();
    Rng rng = make_stream(seed, 0x51a7);
    std::discrete_distribution<int> pick(truth.weights().begin(), truth.weights().end());
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix y(n, 2);
    LabelVector labels(n);
    for (int i = 0; i < n; ++i) {
        int k = pick(rng);
        labels[i] = k + 1;
        Eigen::LLT<Matrix> llt(truth.atom(k).cov().matrix());
        Vector z(2);
        z[0] = normal(rng);
        z[1] = normal(rng);
        y.row(i) = (truth.atom(k).mean() + llt.matrixL() * z).transpose();
    }
    return {DataMatrix(std::move(y)), std::move(truth), std::move(labels)};
}

}  // namespace mixsum
