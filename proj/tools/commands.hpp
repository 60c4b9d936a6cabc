#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mixsum/io.hpp"
#include "mixsum/pipeline.hpp"

namespace mixsum::cli {

/// Command-line values that take precedence over the config file.
struct Overrides {
    std::optional<std::string> preset;
    std::optional<std::uint64_t> seed;
    std::optional<double> alpha, lambda, nu;
    std::optional<int> truncation;
    std::optional<int> iters, burn_in, thin;
    std::optional<std::vector<std::string>> methods;
    std::optional<double> p, prune_floor;
    std::optional<int> L, refresh_iters;
    std::optional<std::string> directions;
    std::optional<int> grid_resolution, eval_L;
    std::optional<std::vector<std::string>> metrics;
};

/// Effective settings after preset, config file and flags, in that order.
struct ResolvedConfig {
    std::string preset;
    std::uint64_t seed = 1;
    ExperimentConfig experiment;
    Json canonical;  // everything that affects results; threads excluded
    std::uint64_t hash = 0;

    std::string hash_hex() const;
};

ResolvedConfig resolve_config(const std::optional<std::string>& config_path, const Overrides& flags, unsigned threads);

/// Either a CSV path or the name of a bundled dataset.
struct DataSource {
    std::string path;
    std::string dataset;

    DataMatrix load() const;
    std::string describe() const;
};

struct SimulateArgs {
    int n = 200;
    std::uint64_t seed = 1;
    std::string out;
};

struct FitArgs {
    std::optional<std::string> config;
    Overrides flags;
    unsigned threads = 0;
    DataSource data;
    std::string out;
};

struct SummarizeArgs {
    std::optional<std::string> config;
    Overrides flags;
    unsigned threads = 0;
    DataSource data;
    std::string draws;
    std::string out;
};

struct EvaluateArgs {
    std::optional<std::string> config;
    Overrides flags;
    unsigned threads = 0;
    DataSource data;
    std::string draws;
    std::vector<std::string> summaries;  // files, or directories holding summary_<method>.json
    std::optional<std::string> truth, truth_labels;
    std::string out;
};

struct DistancesArgs {
    std::string a, b;
    std::string kind = "all";
    double p = 2.0;
    int L = 100;
    std::uint64_t seed = 1;
    bool exact = false;
};

void cmd_simulate(const SimulateArgs& args);
void cmd_fit(const FitArgs& args);
void cmd_summarize(const SummarizeArgs& args);
void cmd_evaluate(const EvaluateArgs& args);
/// Prints one JSON object to stdout.
void cmd_distances(const DistancesArgs& args);

}  // namespace mixsum::cli
