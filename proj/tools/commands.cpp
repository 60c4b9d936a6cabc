#include "commands.hpp"

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>

#include "mixsum/datasets.hpp"
#include "mixsum/ot_exact.hpp"

namespace fs = std::filesystem;

namespace mixsum::cli {

namespace {

// ---- config parsing ---------------------------------------------------------

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ValidationError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* a : allowed) known = known || it.key() == a;
        if (!known) throw ValidationError(where + ": unknown key \"" + it.key() + "\"");
    }
}

double get_double(const Json& j, const std::string& where) {
    if (!j.is_number()) throw ValidationError(where + ": expected a number");
    return j.get<double>();
}

int get_int(const Json& j, const std::string& where) {
    if (!j.is_number_integer()) throw ValidationError(where + ": expected an integer");
    return j.get<int>();
}

std::uint64_t get_seed(const Json& j, const std::string& where) {
    if (!j.is_number_unsigned()) throw ValidationError(where + ": expected a non-negative integer");
    return j.get<std::uint64_t>();
}

std::string get_string(const Json& j, const std::string& where) {
    if (!j.is_string()) throw ValidationError(where + ": expected a string");
    return j.get<std::string>();
}

std::vector<std::string> get_strings(const Json& j, const std::string& where) {
    if (!j.is_array()) throw ValidationError(where + ": expected an array of strings");
    std::vector<std::string> out;
    for (const auto& v : j) out.push_back(get_string(v, where));
    return out;
}

/// Runs `f(value, "section.key")` when `key` is present.
template <class F>
void with(const Json& section, const char* key, const std::string& where, F&& f) {
    if (section.contains(key)) f(section.at(key), where + "." + key);
}

ExperimentConfig preset_config(const std::string& name) {
    if (name == "simulation") return simulation_preset();
    if (name == "old_faithful") return old_faithful_preset();
    throw ValidationError("unknown preset '" + name + "' (expected simulation or old_faithful)");
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
    std::vector<Method> out;
    for (const auto& n : names) {
        Method m = parse_method(n);
        if (std::find(out.begin(), out.end(), m) != out.end()) throw ValidationError("method '" + n + "' listed twice");
        out.push_back(m);
    }
    if (out.empty()) throw ValidationError("at least one method is required");
    return out;
}

std::vector<SlicedKind> parse_metrics(const std::vector<std::string>& names) {
    std::vector<SlicedKind> out;
    for (const auto& n : names) {
        SlicedKind k = parse_sliced_kind(n);
        if (std::find(out.begin(), out.end(), k) != out.end()) throw ValidationError("metric '" + n + "' listed twice");
        out.push_back(k);
    }
    if (out.empty()) throw ValidationError("at least one metric is required");
    return out;
}

Matrix parse_matrix(const Json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ValidationError(where + ": expected a square nested array");
    const int d = static_cast<int>(j.size());
    Matrix m(d, d);
    for (int i = 0; i < d; ++i) {
        if (!j[i].is_array() || static_cast<int>(j[i].size()) != d)
            throw ValidationError(where + ": expected a square nested array");
        for (int c = 0; c < d; ++c) m(i, c) = get_double(j[i][c], where);
    }
    return m;
}

void apply_file(const Json& j, ExperimentConfig& c, std::uint64_t& seed) {
    check_keys(j, {"preset", "seed", "prior", "chain", "summary", "evaluation"}, "config");
    with(j, "seed", "config", [&](const Json& v, const std::string& w) { seed = get_seed(v, w); });
    if (j.contains("prior")) {
        const Json& s = j.at("prior");
        check_keys(s, {"mu0", "psi", "lambda", "nu", "alpha", "truncation"}, "config.prior");
        auto& h = c.hyper;
        with(s, "mu0", "config.prior", [&](const Json& v, const std::string& w) {
            if (!v.is_array() || v.empty()) throw ValidationError(w + ": expected an array of numbers");
            Vector mu(static_cast<int>(v.size()));
            for (int i = 0; i < mu.size(); ++i) mu[i] = get_double(v[i], w);
            h.niw.mu0 = mu;
        });
        with(s, "psi", "config.prior", [&](const Json& v, const std::string& w) { h.niw.psi = SpdMatrix(parse_matrix(v, w)); });
        with(s, "lambda", "config.prior", [&](const Json& v, const std::string& w) { h.niw.lambda = get_double(v, w); });
        with(s, "nu", "config.prior", [&](const Json& v, const std::string& w) { h.niw.nu = get_double(v, w); });
        with(s, "alpha", "config.prior", [&](const Json& v, const std::string& w) { h.alpha = get_double(v, w); });
        with(s, "truncation", "config.prior", [&](const Json& v, const std::string& w) { h.truncation = get_int(v, w); });
    }
    if (j.contains("chain")) {
        const Json& s = j.at("chain");
        check_keys(s, {"iters", "burn_in", "thin"}, "config.chain");
        with(s, "iters", "config.chain", [&](const Json& v, const std::string& w) { c.chain.iters = get_int(v, w); });
        with(s, "burn_in", "config.chain", [&](const Json& v, const std::string& w) { c.chain.burn_in = get_int(v, w); });
        with(s, "thin", "config.chain", [&](const Json& v, const std::string& w) { c.chain.thin = get_int(v, w); });
    }
    if (j.contains("summary")) {
        const Json& s = j.at("summary");
        check_keys(s, {"methods", "p", "L", "prune_floor", "directions", "refresh_iters"}, "config.summary");
        with(s, "methods", "config.summary",
             [&](const Json& v, const std::string& w) { c.methods = parse_methods(get_strings(v, w)); });
        with(s, "p", "config.summary", [&](const Json& v, const std::string& w) { c.summary.p = get_double(v, w); });
        with(s, "L", "config.summary", [&](const Json& v, const std::string& w) { c.summary.L = get_int(v, w); });
        with(s, "prune_floor", "config.summary",
             [&](const Json& v, const std::string& w) { c.summary.prune_floor = get_double(v, w); });
        with(s, "directions", "config.summary",
             [&](const Json& v, const std::string& w) { c.summary.mode = parse_direction_mode(get_string(v, w)); });
        with(s, "refresh_iters", "config.summary",
             [&](const Json& v, const std::string& w) { c.summary.refresh_iters = get_int(v, w); });
    }
    if (j.contains("evaluation")) {
        const Json& s = j.at("evaluation");
        check_keys(s, {"grid_resolution", "grid_margin", "eval_L", "metrics"}, "config.evaluation");
        auto& e = c.evaluation;
        with(s, "grid_resolution", "config.evaluation",
             [&](const Json& v, const std::string& w) { e.grid_resolution = get_int(v, w); });
        with(s, "grid_margin", "config.evaluation", [&](const Json& v, const std::string& w) { e.grid_margin = get_double(v, w); });
        with(s, "eval_L", "config.evaluation", [&](const Json& v, const std::string& w) { e.eval_L = get_int(v, w); });
        with(s, "metrics", "config.evaluation",
             [&](const Json& v, const std::string& w) { e.measure_table.metrics = parse_metrics(get_strings(v, w)); });
    }
}

void apply_flags(const Overrides& f, ExperimentConfig& c, std::uint64_t& seed) {
    if (f.seed) seed = *f.seed;
    if (f.alpha) c.hyper.alpha = *f.alpha;
    if (f.lambda) c.hyper.niw.lambda = *f.lambda;
    if (f.nu) c.hyper.niw.nu = *f.nu;
    if (f.truncation) c.hyper.truncation = *f.truncation;
    if (f.iters) c.chain.iters = *f.iters;
    if (f.burn_in) c.chain.burn_in = *f.burn_in;
    if (f.thin) c.chain.thin = *f.thin;
    if (f.methods) c.methods = parse_methods(*f.methods);
    if (f.p) c.summary.p = *f.p;
    if (f.L) c.summary.L = *f.L;
    if (f.prune_floor) c.summary.prune_floor = *f.prune_floor;
    if (f.directions) c.summary.mode = parse_direction_mode(*f.directions);
    if (f.refresh_iters) c.summary.refresh_iters = *f.refresh_iters;
    if (f.grid_resolution) c.evaluation.grid_resolution = *f.grid_resolution;
    if (f.eval_L) c.evaluation.eval_L = *f.eval_L;
    if (f.metrics) c.evaluation.measure_table.metrics = parse_metrics(*f.metrics);
}

void validate(const ExperimentConfig& c) {
    c.hyper.validate();
    c.chain.validate();
    DistanceConfig{SlicedKind::mix_sw, c.summary.p, c.summary.L, c.summary.seed, c.summary.prune_floor}.validate();
    if (c.summary.refresh_iters < 1) throw ValidationError("summary.refresh_iters must be >= 1");
    if (c.evaluation.grid_resolution < 1) throw ValidationError("evaluation.grid_resolution must be >= 1");
    if (!(c.evaluation.grid_margin >= 0.0)) throw ValidationError("evaluation.grid_margin must be >= 0");
    if (c.evaluation.eval_L < 1) throw ValidationError("evaluation.eval_L must be >= 1");
}

Json to_json(const Matrix& m) {
    Json rows = Json::array();
    for (int i = 0; i < m.rows(); ++i) {
        Json r = Json::array();
        for (int c = 0; c < m.cols(); ++c) r.push_back(m(i, c));
        rows.push_back(std::move(r));
    }
    return rows;
}

Json canonical_json(const ExperimentConfig& c, const std::string& preset, std::uint64_t seed) {
    const auto& niw = c.hyper.niw;
    Json methods = Json::array(), metrics = Json::array();
    for (Method m : c.methods) methods.push_back(to_string(m));
    for (SlicedKind k : c.evaluation.measure_table.metrics) metrics.push_back(metric_label(k));
    return Json{
        {"preset", preset},
        {"seed", seed},
        {"prior",
         {{"mu0", std::vector<double>(niw.mu0.data(), niw.mu0.data() + niw.mu0.size())},
          {"psi", to_json(niw.psi.matrix())},
          {"lambda", niw.lambda},
          {"nu", niw.nu},
          {"alpha", c.hyper.alpha},
          {"truncation", c.hyper.truncation}}},
        {"chain", {{"iters", c.chain.iters}, {"burn_in", c.chain.burn_in}, {"thin", c.chain.thin}}},
        {"summary",
         {{"methods", methods},
          {"p", c.summary.p},
          {"L", c.summary.L},
          {"prune_floor", c.summary.prune_floor},
          {"directions", to_string(c.summary.mode)},
          {"refresh_iters", c.summary.refresh_iters}}},
        {"evaluation",
         {{"grid_resolution", c.evaluation.grid_resolution},
          {"grid_margin", c.evaluation.grid_margin},
          {"eval_L", c.evaluation.eval_L},
          {"metrics", metrics}}},
    };
}

Json read_json_file(const std::string& path) {
    try {
        return Json::parse(read_text_file(path));
    } catch (const Json::parse_error& e) {
        throw ValidationError(path + ": invalid JSON: " + e.what());
    }
}

// ---- output helpers ---------------------------------------------------------

std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

std::string comment_line(std::uint64_t hash, std::uint64_t seed) {
    return "# config_hash=" + hex64(hash) + " seed=" + std::to_string(seed) + "\n";
}

fs::path prepare_dir(const std::string& out) {
    if (out.empty()) throw ValidationError("an output directory is required (--out)");
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create directory '" + out + "': " + ec.message());
    return fs::path(out);
}

void write_file(const fs::path& p, std::string_view text) {
    write_text_file(p.string(), text);
    std::cout << "wrote " << p.string() << "\n";
}

void warn_on_foreign_hash(const std::string& path, const Json& recorded, const ResolvedConfig& cfg) {
    if (recorded.is_string() && recorded != cfg.hash_hex())
        std::cerr << "warning: " << path << " has config_hash=" << recorded.get<std::string>() << ", this run uses "
                  << cfg.hash_hex() << "\n";
}

std::vector<PosteriorDraw> load_draws(const std::string& path, const ResolvedConfig& cfg) {
    if (path.empty()) throw ValidationError("a draws file is required (--draws)");
    const std::string text = read_text_file(path);
    auto draws = parse_draws_jsonl(text, path);
    // The first line is representative: fit stamps every line with the same hash.
    const auto lines = detail::csv_lines(text);
    const Json first = Json::parse(lines.front().second);
    if (first.contains("config_hash")) warn_on_foreign_hash(path, first["config_hash"], cfg);
    return draws;
}

std::string summary_name(Method m) { return "summary_" + to_string(m) + ".json"; }

Json summary_to_json(const MethodSummary& s, const std::vector<PosteriorDraw>& draws, const ResolvedConfig& cfg) {
    Json j{{"method", to_string(s.method)},
           {"config_hash", cfg.hash_hex()},
           {"seed", cfg.seed},
           {"index", s.index},
           {"iteration", draws[s.index].iteration},
           {"expected_loss", s.expected_loss},
           {"loss_scale", is_measure_first(s.method) ? "pth_power" : "loss"},
           {"expected_losses", s.expected_losses},
           {"labels", s.labels}};
    if (s.measure) {
        j["measure"] = measure_to_json(*s.measure);
    } else {
        Json ms = Json::array();
        for (const auto& g : s.density_measures) ms.push_back(measure_to_json(g));
        j["density_measures"] = std::move(ms);
    }
    return j;
}

MethodSummary summary_from_json(const Json& j, const std::string& where) {
    Method m = parse_method(get_string(detail::require_key(j, "method", where), where + ".method"));
    const Json& idx = detail::require_key(j, "index", where);
    if (!idx.is_number_unsigned()) throw ValidationError(where + ".index: expected a non-negative integer");
    MethodSummary s{m, idx.get<std::size_t>(), get_double(detail::require_key(j, "expected_loss", where), where),
                    detail::number_array(detail::require_key(j, "expected_losses", where), where + ".expected_losses"),
                    {}, std::nullopt, {}};
    for (const auto& v : detail::require_key(j, "labels", where)) s.labels.push_back(get_int(v, where + ".labels"));
    if (is_measure_first(m)) {
        s.measure = measure_from_json(detail::require_key(j, "measure", where), where + ".measure");
        s.density_measures = {*s.measure};
    } else {
        const Json& ms = detail::require_key(j, "density_measures", where);
        if (!ms.is_array() || ms.empty()) throw ValidationError(where + ".density_measures: expected a non-empty array");
        for (std::size_t r = 0; r < ms.size(); ++r)
            s.density_measures.push_back(measure_from_json(ms[r], where + ".density_measures[" + std::to_string(r) + "]"));
    }
    return s;
}

std::vector<std::string> expand_summaries(const std::vector<std::string>& inputs) {
    std::vector<std::string> files;
    for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
            for (Method m : kAllMethods) {
                auto p = fs::path(in) / summary_name(m);
                if (fs::exists(p)) files.push_back(p.string());
            }
        } else {
            files.push_back(in);
        }
    }
    return files;
}

}  // namespace

std::string ResolvedConfig::hash_hex() const { return hex64(hash); }

ResolvedConfig resolve_config(const std::optional<std::string>& config_path, const Overrides& flags, unsigned threads) {
    Json file = Json::object();
    if (config_path) file = read_json_file(*config_path);
    if (!file.is_object()) throw ValidationError("config: expected a JSON object");
    std::string preset = "simulation";
    if (file.contains("preset")) preset = get_string(file.at("preset"), "config.preset");
    if (flags.preset) preset = *flags.preset;
    ResolvedConfig r{preset, 1, preset_config(preset), Json::object(), 0};
    apply_file(file, r.experiment, r.seed);
    apply_flags(flags, r.experiment, r.seed);

    auto& c = r.experiment;
    c.set_seed(r.seed);
    c.set_threads(threads);
    c.evaluation.p = c.summary.p;
    c.evaluation.measure_table.p = c.summary.p;
    c.evaluation.measure_table.L = c.summary.L;
    c.evaluation.measure_table.prune_floor = c.summary.prune_floor;
    validate(c);

    r.canonical = canonical_json(c, r.preset, r.seed);
    r.hash = fnv1a64(r.canonical.dump());
    return r;
}

DataMatrix DataSource::load() const {
    if (!dataset.empty()) {
        if (!path.empty()) throw ValidationError("pass either --data or --dataset, not both");
        if (dataset == "old_faithful") return load_old_faithful();
        throw ValidationError("unknown dataset '" + dataset + "' (expected old_faithful)");
    }
    if (path.empty()) throw ValidationError("no input data: pass --data <csv> or --dataset old_faithful");
    return read_data_csv(path);
}

std::string DataSource::describe() const { return dataset.empty() ? path : "dataset:" + dataset; }

void cmd_simulate(const SimulateArgs& args) {
    auto sim = simulate_four_component(args.n, args.seed);
    auto dir = prepare_dir(args.out);
    Json cfg{{"command", "simulate"}, {"n", args.n}, {"seed", args.seed}};
    const std::uint64_t hash = fnv1a64(cfg.dump());
    const std::string head = comment_line(hash, args.seed);
    write_file(dir / "data.csv", head + data_to_csv(sim.data, {"x1", "x2"}));
    Json truth = measure_to_json(sim.truth);
    truth["config_hash"] = hex64(hash);
    truth["seed"] = args.seed;
    write_file(dir / "truth.json", truth.dump(2) + "\n");
    write_file(dir / "labels.csv", head + labels_to_csv(sim.labels));
}

void cmd_fit(const FitArgs& args) {
    auto cfg = resolve_config(args.config, args.flags, args.threads);
    auto data = args.data.load();
    auto dir = prepare_dir(args.out);
    auto start = std::chrono::steady_clock::now();
    auto draws = run_chain(data, cfg.experiment.hyper, cfg.experiment.chain);
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::string lines;
    for (const auto& d : draws) {
        Json j = draw_to_json(d);
        j["config_hash"] = cfg.hash_hex();
        lines += j.dump() + "\n";
    }
    write_file(dir / "draws.jsonl", lines);
    Json run{{"config", cfg.canonical},
             {"config_hash", cfg.hash_hex()},
             {"seed", cfg.seed},
             {"data", args.data.describe()},
             {"n", data.n()},
             {"dim", data.dim()},
             {"draws", draws.size()},
             {"wall_time_seconds", seconds}};
    write_file(dir / "run.json", run.dump(2) + "\n");
}

void cmd_summarize(const SummarizeArgs& args) {
    auto cfg = resolve_config(args.config, args.flags, args.threads);
    auto data = args.data.load();
    auto draws = load_draws(args.draws, cfg);
    auto dir = prepare_dir(args.out);
    const auto& c = cfg.experiment;
    for (Method m : c.methods) {
        auto s = summarize_method(m, draws, data, c.hyper, c.summary);
        write_file(dir / summary_name(m), summary_to_json(s, draws, cfg).dump(2) + "\n");
        write_file(dir / ("labels_" + to_string(m) + ".csv"), comment_line(cfg.hash, cfg.seed) + labels_to_csv(s.labels));
        std::cout << to_string(m) << ": draw " << s.index << " (iteration " << draws[s.index].iteration
                  << "), expected loss " << format_double(s.expected_loss) << ", " << occupied_clusters(s.labels)
                  << " clusters\n";
    }
}

void cmd_evaluate(const EvaluateArgs& args) {
    auto cfg = resolve_config(args.config, args.flags, args.threads);
    auto data = args.data.load();
    auto draws = load_draws(args.draws, cfg);
    auto files = expand_summaries(args.summaries);
    if (files.empty()) throw ValidationError("evaluate: no summaries given (--summaries <dir or files>)");
    std::vector<MethodSummary> summaries;
    std::set<Method> seen;
    for (const auto& f : files) {
        Json j = read_json_file(f);
        summaries.push_back(summary_from_json(j, f));
        if (!seen.insert(summaries.back().method).second)
            throw ValidationError(f + ": method " + to_string(summaries.back().method) + " appears twice");
        if (j.contains("config_hash")) warn_on_foreign_hash(f, j["config_hash"], cfg);
    }
    if (args.truth.has_value() != args.truth_labels.has_value())
        throw ValidationError("evaluate: --truth and --truth-labels must be given together");
    std::optional<Truth> truth;
    if (args.truth) truth = Truth{read_measure_json(*args.truth), read_labels_csv(*args.truth_labels)};

    auto tables = evaluate_methods(summaries, draws, data, truth, cfg.experiment.evaluation);
    auto dir = prepare_dir(args.out);
    const std::string head = provenance_line(cfg.hash, cfg.seed);
    write_file(dir / "clustering.csv", clustering_csv(tables, head));
    write_file(dir / "density.csv", density_csv(tables, head));
    write_file(dir / "mixing.csv", mixing_csv(tables, head));
}

/// Accepts a bare measure or a measure-first summary file.
MixingMeasure load_measure(const std::string& path) {
    Json j = read_json_file(path);
    if (j.is_object() && j.contains("measure")) return measure_from_json(j["measure"], path + ".measure");
    return measure_from_json(j, path);
}

void cmd_distances(const DistancesArgs& args) {
    auto a = load_measure(args.a), b = load_measure(args.b);
    std::vector<SlicedKind> kinds;
    if (args.kind == "all") kinds = {SlicedKind::vectorized, SlicedKind::mix_sw, SlicedKind::smix_w};
    else kinds = {parse_sliced_kind(args.kind)};
    Json results = Json::array();
    for (SlicedKind k : kinds) {
        auto est = sliced_distance(k, args.p, args.L, args.seed, a, b);
        results.push_back({{"kind", metric_label(k)}, {"value", est.value}, {"distance", est.root()}});
    }
    Json out{{"p", args.p}, {"L", args.L}, {"seed", args.seed}, {"sliced", std::move(results)}};
    if (args.exact) out["mixture_w2"] = std::sqrt(mixture_wasserstein_sq(a, b));
    std::cout << out.dump(2) << "\n";
}

}  // namespace mixsum::cli
