#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace mixsum;
using namespace mixsum::cli;

namespace {

struct Common {
    std::optional<std::string> config;
    Overrides flags;
    unsigned threads = 0;
    DataSource data;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option_function<std::string>("--config", [&c](const std::string& v) { c.config = v; },
                                          "JSON config file (applied after the preset)");
    sub->add_option_function<std::string>("--preset", [&c](const std::string& v) { c.flags.preset = v; },
                                          "simulation (default) or old_faithful");
    sub->add_option_function<std::uint64_t>("--seed", [&c](const std::uint64_t& v) { c.flags.seed = v; }, "master seed");
    sub->add_option("--data", c.data.path, "input CSV (header row optional)");
    sub->add_option("--dataset", c.data.dataset, "bundled dataset: old_faithful");
    sub->add_option("--threads", c.threads, "worker threads (0 = hardware concurrency)");

    auto& f = c.flags;
    sub->add_option_function<double>("--alpha", [&f](const double& v) { f.alpha = v; }, "DP concentration");
    sub->add_option_function<double>("--lambda", [&f](const double& v) { f.lambda = v; }, "NIW mean precision");
    sub->add_option_function<double>("--nu", [&f](const double& v) { f.nu = v; }, "NIW degrees of freedom");
    sub->add_option_function<int>("--truncation", [&f](const int& v) { f.truncation = v; }, "stick-breaking truncation K");
    sub->add_option_function<int>("--iters", [&f](const int& v) { f.iters = v; }, "Gibbs iterations");
    sub->add_option_function<int>("--burn-in", [&f](const int& v) { f.burn_in = v; }, "discarded iterations");
    sub->add_option_function<int>("--thin", [&f](const int& v) { f.thin = v; }, "keep every thin-th draw");
    sub->add_option_function<std::vector<std::string>>(
        "--methods", [&f](const std::vector<std::string>& v) { f.methods = v; },
        "subset of sw mix_sw smix_w binder vi omari")
        ->delimiter(',');
    sub->add_option_function<double>("--p", [&f](const double& v) { f.p = v; }, "Wasserstein order");
    sub->add_option_function<int>("--L", [&f](const int& v) { f.L = v; }, "projections per distance");
    sub->add_option_function<double>("--prune-floor", [&f](const double& v) { f.prune_floor = v; },
                                     "drop atoms with weight below this");
    sub->add_option_function<std::string>("--directions", [&f](const std::string& v) { f.directions = v; },
                                          "shared or fresh");
    sub->add_option_function<int>("--refresh-iters", [&f](const int& v) { f.refresh_iters = v; },
                                  "conditional refreshes for partition-first densities");
    sub->add_option_function<int>("--grid-resolution", [&f](const int& v) { f.grid_resolution = v; },
                                  "cells per axis for grid metrics");
    sub->add_option_function<int>("--eval-L", [&f](const int& v) { f.eval_L = v; }, "projections for grid SW");
    sub->add_option_function<std::vector<std::string>>(
        "--metrics", [&f](const std::vector<std::string>& v) { f.metrics = v; }, "subset of sw mix_sw smix_w")
        ->delimiter(',');
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Posterior summaries of Gaussian mixing measures"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "draw the four-component benchmark data set");
    simulate->add_option("--n", sim.n, "number of points")->capture_default_str();
    simulate->add_option("--seed", sim.seed, "seed")->capture_default_str();
    simulate->add_option("--out", sim.out, "output directory")->required();

    Common fit_c;
    std::string fit_out;
    auto* fit = app.add_subcommand("fit", "run the blocked Gibbs sampler and write draws.jsonl");
    add_common(fit, fit_c);
    fit->add_option("--out", fit_out, "output directory")->required();

    Common sum_c;
    std::string sum_draws, sum_out;
    auto* summarize = app.add_subcommand("summarize", "pick a representative draw per method");
    add_common(summarize, sum_c);
    summarize->add_option("--draws", sum_draws, "draws.jsonl from fit")->required();
    summarize->add_option("--out", sum_out, "output directory")->required();

    Common ev_c;
    EvaluateArgs ev;
    auto* evaluate = app.add_subcommand("evaluate", "write clustering, density and mixing tables");
    add_common(evaluate, ev_c);
    evaluate->add_option("--draws", ev.draws, "draws.jsonl from fit")->required();
    evaluate->add_option("--summaries", ev.summaries, "summary files or directories")->required();
    evaluate->add_option_function<std::string>("--truth", [&ev](const std::string& v) { ev.truth = v; },
                                               "true mixing measure (JSON)");
    evaluate->add_option_function<std::string>("--truth-labels", [&ev](const std::string& v) { ev.truth_labels = v; },
                                               "true labels (CSV)");
    evaluate->add_option("--out", ev.out, "output directory")->required();

    DistancesArgs dist;
    auto* distances = app.add_subcommand("distances", "sliced distances between two mixing measures");
    distances->add_option("a", dist.a, "first measure (JSON)")->required();
    distances->add_option("b", dist.b, "second measure (JSON)")->required();
    distances->add_option("--kind", dist.kind, "sw, mix_sw, smix_w or all")->capture_default_str();
    distances->add_option("--p", dist.p, "order")->capture_default_str();
    distances->add_option("--L", dist.L, "projections")->capture_default_str();
    distances->add_option("--seed", dist.seed, "direction seed")->capture_default_str();
    distances->add_flag("--exact", dist.exact, "also report the exact mixture W2");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (*simulate) {
            cmd_simulate(sim);
        } else if (*fit) {
            cmd_fit(FitArgs{fit_c.config, fit_c.flags, fit_c.threads, fit_c.data, fit_out});
        } else if (*summarize) {
            cmd_summarize(SummarizeArgs{sum_c.config, sum_c.flags, sum_c.threads, sum_c.data, sum_draws, sum_out});
        } else if (*evaluate) {
            ev.config = ev_c.config;
            ev.flags = ev_c.flags;
            ev.threads = ev_c.threads;
            ev.data = ev_c.data;
            cmd_evaluate(ev);
        } else if (*distances) {
            cmd_distances(dist);
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
