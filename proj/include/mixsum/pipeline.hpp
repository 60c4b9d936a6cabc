#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mixsum/core.hpp"
#include "mixsum/dpmm_gibbs.hpp"
#include "mixsum/evaluation.hpp"
#include "mixsum/measures.hpp"
#include "mixsum/partition_loss.hpp"
#include "mixsum/sliced_ot.hpp"
#include "mixsum/summarizer.hpp"

namespace mixsum {

/// Point-estimation methods: three measure-first (sliced loss over mixing
/// measures) and three partition-first (loss over label vectors).
enum class Method { sw, mix_sw, smix_w, binder, vi, omari };

inline constexpr std::array<Method, 6> kAllMethods{Method::sw,     Method::mix_sw, Method::smix_w,
                                                   Method::binder, Method::vi,     Method::omari};

inline std::string to_string(Method m) {
    switch (m) {
        case Method::sw: return "sw";
        case Method::mix_sw: return "mix_sw";
        case Method::smix_w: return "smix_w";
        case Method::binder: return "binder";
        case Method::vi: return "vi";
        case Method::omari: return "omari";
    }
    return "?";
}

inline Method parse_method(std::string_view s) {
    for (Method m : kAllMethods)
        if (s == to_string(m)) return m;
    if (s == "vectorized") return Method::sw;
    throw ValidationError("unknown method '" + std::string(s) + "' (expected sw, mix_sw, smix_w, binder, vi or omari)");
}

inline bool is_measure_first(Method m) { return m == Method::sw || m == Method::mix_sw || m == Method::smix_w; }

inline SlicedKind sliced_kind(Method m) {
    switch (m) {
        case Method::sw: return SlicedKind::vectorized;
        case Method::mix_sw: return SlicedKind::mix_sw;
        case Method::smix_w: return SlicedKind::smix_w;
        default: throw ValidationError("method " + to_string(m) + " is not a sliced metric");
    }
}

inline PartitionLoss partition_loss_kind(Method m) {
    switch (m) {
        case Method::binder: return PartitionLoss::binder;
        case Method::vi: return PartitionLoss::vi;
        case Method::omari: return PartitionLoss::omari;
        default: throw ValidationError("method " + to_string(m) + " is not a partition loss");
    }
}

/// Column label of a sliced metric in output tables.
inline std::string metric_label(SlicedKind k) { return k == SlicedKind::vectorized ? "sw" : to_string(k); }

struct SummaryConfig {
    double p = 2.0;
    int L = 100;
    std::uint64_t seed = 1;
    double prune_floor = 1e-8;
    DirectionMode mode = DirectionMode::shared;
    int refresh_iters = 10;
    unsigned threads = 0;
};

struct MethodSummary {
    Method method;
    std::size_t index;                     // selected posterior draw
    double expected_loss;                  // at the selected draw
    std::vector<double> expected_losses;   // per candidate draw
    LabelVector labels;                    // point estimate of the partition
    std::optional<MixingMeasure> measure;  // measure-first only
    std::vector<MixingMeasure> density_measures;  // F_hat is the average of f * G over these
};

inline std::vector<MixingMeasure> draw_measures(const std::vector<PosteriorDraw>& draws) {
    std::vector<MixingMeasure> out;
    out.reserve(draws.size());
    for (const auto& d : draws) out.push_back(d.measure);
    return out;
}

inline std::vector<LabelVector> draw_labels(const std::vector<PosteriorDraw>& draws) {
    std::vector<LabelVector> out;
    out.reserve(draws.size());
    for (const auto& d : draws) out.push_back(d.labels);
    return out;
}

/// Measure-first: best visited draw under the sliced loss, MAP labels, F_hat = f * G_hat.
/// Partition-first: best visited label vector, F_hat averaged over refreshed draws given it.
inline MethodSummary summarize_method(Method method, const std::vector<PosteriorDraw>& draws, const DataMatrix& data,
                                      const DpmmHyper& hyper, const SummaryConfig& cfg) {
    if (draws.empty()) throw ValidationError("summarize: no posterior draws");
    if (is_measure_first(method)) {
        DistanceConfig dc{sliced_kind(method), cfg.p, cfg.L, cfg.seed, cfg.prune_floor, cfg.mode, cfg.threads};
        auto s = summarize_posterior(draw_measures(draws), data, dc);
        return MethodSummary{method, s.index, s.expected_loss, std::move(s.row_averages), std::move(s.labels),
                             s.measure, {s.measure}};
    }
    auto s = greedy_partition_summary(partition_loss_kind(method), draw_labels(draws), cfg.threads);
    std::uint64_t refresh_seed = splitmix64(cfg.seed ^ (0x4ef4e5ULL + static_cast<std::uint64_t>(method)));
    auto refreshed = conditional_density_refresh(s.labels, data, hyper, cfg.refresh_iters, refresh_seed);
    double loss = s.expected_losses[s.index];
    return MethodSummary{method, s.index, loss, std::move(s.expected_losses), std::move(s.labels), std::nullopt,
                         std::move(refreshed)};
}

struct EvaluationConfig {
    int grid_resolution = 100;
    double grid_margin = 1.0;
    int eval_L = 1000;  // directions for SW between density grids
    double p = 2.0;
    std::uint64_t seed = 1;
    MeasureLossConfig measure_table;
    unsigned threads = 0;
};

struct Truth {
    MixingMeasure measure;
    LabelVector labels;
};

struct ClusteringRow {
    std::string method;
    int k_star;
    double expected_binder, expected_vi, expected_omari;
    std::optional<double> binder, vi, omari;  // against the true labels
};

struct DensityRow {
    std::string method;
    double expected_tv, expected_sw;
    std::optional<double> tv, sw;  // against the true density
};

struct EvaluationTables {
    std::vector<ClusteringRow> clustering;
    std::vector<DensityRow> density;
    std::vector<MeasureLossRow> mixing;
    std::vector<SlicedKind> metrics;
    bool has_truth = false;
};

inline int occupied_clusters(const LabelVector& z) { return static_cast<int>(std::set<int>(z.begin(), z.end()).size()); }

inline EvaluationTables evaluate_methods(const std::vector<MethodSummary>& summaries, const std::vector<PosteriorDraw>& draws,
                                         const DataMatrix& data, const std::optional<Truth>& truth,
                                         const EvaluationConfig& cfg) {
    if (summaries.empty()) throw ValidationError("evaluate: no summaries");
    if (draws.empty()) throw ValidationError("evaluate: no posterior draws");
    if (truth && static_cast<int>(truth->labels.size()) != data.n())
        throw ValidationError("evaluate: true labels do not match the number of observations");
    EvaluationTables out;
    out.has_truth = truth.has_value();
    out.metrics = cfg.measure_table.metrics;

    auto samples = draw_labels(draws);
    for (const auto& s : summaries) {
        if (static_cast<int>(s.labels.size()) != data.n())
            throw ValidationError("evaluate: labels of " + to_string(s.method) + " do not match the data");
        ClusteringRow row{to_string(s.method), occupied_clusters(s.labels),
                          expected_partition_loss(PartitionLoss::binder, s.labels, samples),
                          expected_partition_loss(PartitionLoss::vi, s.labels, samples),
                          expected_partition_loss(PartitionLoss::omari, s.labels, samples), {}, {}, {}};
        if (truth) {
            row.binder = binder_loss(s.labels, truth->labels);
            row.vi = vi_loss(s.labels, truth->labels);
            row.omari = omari_loss(s.labels, truth->labels);
        }
        out.clustering.push_back(row);
    }

    auto spec = GridSpec::from_data(data, cfg.grid_resolution, cfg.grid_margin);
    std::vector<DensityGrid> draw_grids;
    draw_grids.reserve(draws.size());
    for (const auto& d : draws) draw_grids.push_back(density_on_grid(d.measure, spec, cfg.threads));
    std::optional<DensityGrid> truth_grid;
    if (truth) truth_grid = density_on_grid(truth->measure, spec, cfg.threads);
    GridSlicer slicer(spec, cfg.eval_L, cfg.seed);
    const double m = static_cast<double>(draws.size());
    for (const auto& s : summaries) {
        auto grid = density_on_grid(s.density_measures, spec, cfg.threads);
        std::vector<double> tv(draws.size()), sw(draws.size());
        parallel_for(draws.size(), cfg.threads, [&](std::size_t i) {
            tv[i] = tv_on_grid(grid, draw_grids[i]);
            sw[i] = slicer.sw(grid, draw_grids[i], cfg.p);
        });
        DensityRow row{to_string(s.method), 0.0, 0.0, {}, {}};
        for (std::size_t i = 0; i < draws.size(); ++i) {
            row.expected_tv += tv[i];
            row.expected_sw += sw[i];
        }
        row.expected_tv /= m;
        row.expected_sw /= m;
        if (truth_grid) {
            row.tv = tv_on_grid(grid, *truth_grid);
            row.sw = slicer.sw(grid, *truth_grid, cfg.p);
        }
        out.density.push_back(row);
    }

    std::vector<NamedMeasure> candidates;
    for (const auto& s : summaries)
        if (s.measure) candidates.push_back({to_string(s.method), *s.measure});
    if (!candidates.empty()) {
        auto table_cfg = cfg.measure_table;
        table_cfg.threads = cfg.threads;
        std::optional<MixingMeasure> t;
        if (truth) t = truth->measure;
        out.mixing = mixing_measure_loss_table(candidates, draw_measures(draws), t, table_cfg);
    }
    return out;
}

/// First line of every emitted table.
inline std::string provenance_line(std::uint64_t config_hash, std::uint64_t seed) {
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash));
    return std::string("# config_hash=") + hash + " seed=" + std::to_string(seed) +
           " tv_grid_renormalized=false sw_grid_renormalized=true mixing_loss=root_of_mean_pth_power";
}

inline std::string clustering_csv(const EvaluationTables& t, const std::string& provenance) {
    std::ostringstream os;
    os << provenance << "\nmethod,k_star,expected_binder,expected_vi,expected_omari";
    if (t.has_truth) os << ",binder_truth,vi_truth,omari_truth";
    os << "\n";
    for (const auto& r : t.clustering) {
        os << r.method << "," << r.k_star << "," << format_double(r.expected_binder) << "," << format_double(r.expected_vi)
           << "," << format_double(r.expected_omari);
        if (t.has_truth)
            os << "," << format_double(r.binder.value()) << "," << format_double(r.vi.value()) << ","
               << format_double(r.omari.value());
        os << "\n";
    }
    return os.str();
}

inline std::string density_csv(const EvaluationTables& t, const std::string& provenance) {
    std::ostringstream os;
    os << provenance << "\nmethod,expected_tv,expected_sw";
    if (t.has_truth) os << ",tv_truth,sw_truth";
    os << "\n";
    for (const auto& r : t.density) {
        os << r.method << "," << format_double(r.expected_tv) << "," << format_double(r.expected_sw);
        if (t.has_truth) os << "," << format_double(r.tv.value()) << "," << format_double(r.sw.value());
        os << "\n";
    }
    return os.str();
}

inline std::string mixing_csv(const EvaluationTables& t, const std::string& provenance) {
    std::ostringstream os;
    os << provenance << "\nmethod";
    for (SlicedKind k : t.metrics) os << ",expected_" << metric_label(k);
    if (t.has_truth)
        for (SlicedKind k : t.metrics) os << "," << metric_label(k) << "_truth";
    os << "\n";
    for (const auto& r : t.mixing) {
        os << r.method;
        for (double v : r.expected) os << "," << format_double(v);
        for (double v : r.truth) os << "," << format_double(v);
        os << "\n";
    }
    return os.str();
}

/// Everything needed to go from data to the three tables.
struct ExperimentConfig {
    DpmmHyper hyper;
    ChainConfig chain;
    SummaryConfig summary;
    EvaluationConfig evaluation;
    std::vector<Method> methods{kAllMethods.begin(), kAllMethods.end()};

    /// One master seed drives the chain, the slicing directions and the refreshes.
    void set_seed(std::uint64_t seed) {
        chain.seed = seed;
        summary.seed = seed;
        evaluation.seed = seed;
        evaluation.measure_table.seed = seed;
    }

    void set_threads(unsigned threads) {
        summary.threads = threads;
        evaluation.threads = threads;
    }
};

inline DpmmHyper make_hyper(Vector mu0, Matrix psi, double lambda = 1.0, double nu = 4.0, double alpha = 1.0, int k = 100) {
    return DpmmHyper{NiwParams{std::move(mu0), lambda, SpdMatrix(psi), nu}, alpha, k};
}

/// Four-component simulation settings: mu0 = (0, 0), psi = I.
inline ExperimentConfig simulation_preset() {
    ExperimentConfig c{make_hyper(Vector::Zero(2), Matrix::Identity(2, 2)), {}, {}, {}};
    c.set_seed(1);
    return c;
}

/// Old Faithful settings: mu0 = (3, 70), psi = diag(4, 26).
inline ExperimentConfig old_faithful_preset() {
    Matrix psi = Matrix::Zero(2, 2);
    psi(0, 0) = 4.0;
    psi(1, 1) = 26.0;
    ExperimentConfig c{make_hyper(Vector{{3.0, 70.0}}, psi), {}, {}, {}};
    c.set_seed(1);
    return c;
}

struct ExperimentResult {
    std::vector<PosteriorDraw> draws;
    std::vector<MethodSummary> summaries;
    EvaluationTables tables;
};

inline ExperimentResult run_experiment(const DataMatrix& data, const std::optional<Truth>& truth, const ExperimentConfig& cfg) {
    ExperimentResult r;
    r.draws = run_chain(data, cfg.hyper, cfg.chain);
    for (Method m : cfg.methods) r.summaries.push_back(summarize_method(m, r.draws, data, cfg.hyper, cfg.summary));
    r.tables = evaluate_methods(r.summaries, r.draws, data, truth, cfg.evaluation);
    return r;
}

}  // namespace mixsum
