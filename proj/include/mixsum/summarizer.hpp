#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mixsum/core.hpp"
#include "mixsum/measures.hpp"
#include "mixsum/sliced_ot.hpp"

namespace mixsum {

/// shared: one direction set for every pair. fresh: each unordered pair gets
/// its own directions, seeded from (seed, i, j).
enum class DirectionMode { shared, fresh };

inline std::string to_string(DirectionMode m) { return m == DirectionMode::shared ? "shared" : "fresh"; }

inline DirectionMode parse_direction_mode(std::string_view s) {
    if (s == "shared") return DirectionMode::shared;
    if (s == "fresh") return DirectionMode::fresh;
    throw ValidationError("unknown direction mode '" + std::string(s) + "' (expected shared or fresh)");
}

struct DistanceConfig {
    SlicedKind kind = SlicedKind::mix_sw;
    double p = 2.0;
    int L = 100;
    std::uint64_t seed = 1;
    double prune_floor = 1e-8;
    DirectionMode mode = DirectionMode::shared;
    unsigned threads = 0;

    void validate() const {
        if (!(p >= 1.0) || !std::isfinite(p)) throw ValidationError("DistanceConfig: p must be >= 1");
        if (L < 1) throw ValidationError("DistanceConfig: L must be >= 1");
        if (!(prune_floor >= 0.0 && prune_floor < 1.0))
            throw ValidationError("DistanceConfig: prune_floor must lie in [0, 1)");
    }
};

/// M x M matrix of sliced W_p^p estimates between posterior draws.
struct DistanceMatrix {
    std::size_t size;
    std::vector<double> values;  // row-major
    DistanceConfig config;

    double operator()(std::size_t i, std::size_t j) const { return values[i * size + j]; }
};

inline std::uint64_t pair_seed(std::uint64_t seed, std::size_t i, std::size_t j) {
    if (i > j) std::swap(i, j);
    return splitmix64(splitmix64(seed ^ splitmix64(i)) + j);
}

inline DistanceMatrix build_distance_matrix(const std::vector<MixingMeasure>& draws, const DistanceConfig& cfg) {
    cfg.validate();
    const std::size_t m = draws.size();
    if (m < 2) throw ValidationError("build_distance_matrix: need at least two draws");
    const int d = draws.front().dim();
    for (const auto& g : draws)
        if (g.dim() != d) throw ValidationError("build_distance_matrix: draws of mixed dimension");

    std::vector<PreparedMeasure> prepared;
    prepared.reserve(m);
    for (const auto& g : draws) prepared.emplace_back(prune(g, cfg.prune_floor), cfg.kind);

    DistanceMatrix out{m, std::vector<double>(m * m, 0.0), cfg};
    if (cfg.mode == DirectionMode::shared) {
        auto dirs = DirectionSet::sample(cfg.kind, d, cfg.L, cfg.seed);
        std::vector<std::optional<ProjectedMeasure>> projected(m);
        parallel_for(m, cfg.threads, [&](std::size_t i) { projected[i].emplace(prepared[i], dirs); });
        parallel_for(m, cfg.threads, [&](std::size_t i) {
            for (std::size_t j = i + 1; j < m; ++j) out.values[i * m + j] = sliced_pp(*projected[i], *projected[j], cfg.p);
        });
    } else {
        parallel_for(m, cfg.threads, [&](std::size_t i) {
            for (std::size_t j = i + 1; j < m; ++j) {
                auto dirs = DirectionSet::sample(cfg.kind, d, cfg.L, pair_seed(cfg.seed, i, j));
                out.values[i * m + j] = sliced_pp(ProjectedMeasure(prepared[i], dirs), ProjectedMeasure(prepared[j], dirs), cfg.p);
            }
        });
    }
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) out.values[j * m + i] = out.values[i * m + j];
    return out;
}

struct GreedySelection {
    std::size_t index;
    std::vector<double> row_averages;
};

/// argmin_i of the row averages; ties go to the lowest index.
inline GreedySelection greedy_select(const std::vector<double>& values, std::size_t m) {
    if (m == 0 || values.size() != m * m) throw ValidationError("greedy_select: expected a non-empty square matrix");
    GreedySelection out{0, std::vector<double>(m)};
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) s += values[i * m + j];
        out.row_averages[i] = s / static_cast<double>(m);
        if (out.row_averages[i] < out.row_averages[out.index]) out.index = i;
    }
    return out;
}

inline GreedySelection greedy_select(const DistanceMatrix& dist) { return greedy_select(dist.values, dist.size); }

/// c_i = argmax_k log w_k + log N(y_i | mu_k, Sigma_k), lowest k on ties.
inline LabelVector map_partition(const MixingMeasure& g, const DataMatrix& data) {
    if (g.dim() != data.dim())
        throw ValidationError("map_partition: measure has dimension " + std::to_string(g.dim()) + " but data has " +
                              std::to_string(data.dim()));
    std::vector<std::size_t> live;
    std::vector<double> log_w;
    std::vector<GaussianKernel> kernels;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (g.weight(k) <= 0.0) continue;
        live.push_back(k);
        log_w.push_back(std::log(g.weight(k)));
        kernels.emplace_back(g.atom(k));
    }
    LabelVector labels(data.n());
    for (int i = 0; i < data.n(); ++i) {
        Vector y = data.row(i);
        double best = -std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t j = 0; j < live.size(); ++j) {
            double v = log_w[j] + kernels[j].log_pdf(y);
            if (v > best) {
                best = v;
                arg = j;
            }
        }
        labels[i] = static_cast<int>(live[arg]) + 1;
    }
    return labels;
}

struct MeasureSummary {
    std::size_t index;
    MixingMeasure measure;
    LabelVector labels;
    double expected_loss;  // W_p^p scale
    std::vector<double> row_averages;

    MixtureDensity density() const { return MixtureDensity(measure); }
};

/// Best visited draw under the posterior expected sliced loss, with its MAP partition.
inline MeasureSummary summarize_posterior(const std::vector<MixingMeasure>& draws, const DataMatrix& data,
                                          const DistanceConfig& cfg) {
    if (draws.empty()) throw ValidationError("summarize_posterior: no draws");
    if (draws.size() == 1) return MeasureSummary{0, draws[0], map_partition(draws[0], data), 0.0, {0.0}};
    auto dist = build_distance_matrix(draws, cfg);
    auto sel = greedy_select(dist);
    double loss = sel.row_averages[sel.index];
    for (double r : sel.row_averages)
        if (r < loss) throw NumericalError("summarize_posterior: selected index is not a minimizer");
    return MeasureSummary{sel.index, draws[sel.index], map_partition(draws[sel.index], data), loss,
                          std::move(sel.row_averages)};
}

}  // namespace mixsum
