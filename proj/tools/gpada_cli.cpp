// gpada: active domain adaptation on feature vectors, driven by class-wise
// Gaussian-Process posterior variances.
//
// Subcommands: synth, run, gp-probe, eval, bench, report.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "gpada/gpada.hpp"

namespace fs = std::filesystem;
using namespace gpada;

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> strategy;
    std::vector<std::string> overrides;  // key=value
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required) {
    auto* c = cmd->add_option("--config", opts.config_path, "key=value config file");
    if (config_required) c->required();
    cmd->add_option("--seed", opts.seed, "override the run seed");
    cmd->add_option("--strategy", opts.strategy,
                    "override the strategy (gpas_plcs_ucs|gpas_ucs|gpas|random|entropy)");
    cmd->add_option("--set", opts.overrides, "extra key=value override, repeatable")
        ->take_all();
}

RunConfig resolve_config(const CommonOpts& opts) {
    RunConfig cfg = opts.config_path.empty() ? RunConfig{} : parse_config_file(opts.config_path);
    for (const std::string& kv : opts.overrides) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos) fail("--set expects key=value, got '" + kv + "'");
        apply_config_entry(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (opts.strategy) cfg.loop.strategy = strategy_from_string(*opts.strategy);
    if (opts.seed) cfg.loop.seed = *opts.seed;
    return cfg;
}

Dataset resolve_dataset(const RunConfig& cfg) {
    cfg.validate_sources();
    if (cfg.dataset_path) return load_dataset(*cfg.dataset_path);
    return generate_synthetic(*cfg.synth);
}

std::string ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail("cannot create output directory '" + dir + "': " + ec.message());
    return dir;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Active domain adaptation with GP posterior-variance querying"};
    app.require_subcommand(1);

    // --- synth ---
    CommonOpts synth_opts;
    std::string synth_out;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic domain-shift dataset CSV");
    add_common(synth_cmd, synth_opts, true);
    synth_cmd->add_option("--out", synth_out, "output dataset CSV path")->required();

    // --- run ---
    CommonOpts run_opts;
    std::string run_out;
    auto* run_cmd = app.add_subcommand("run", "run the adaptation loop, write metrics + checkpoint");
    add_common(run_cmd, run_opts, true);
    run_cmd->add_option("--out", run_out, "output directory")->required();

    // --- gp-probe ---
    CommonOpts probe_opts;
    std::string probe_out;
    auto* probe_cmd = app.add_subcommand("gp-probe", "emit per-sample posterior variances after warm-up");
    add_common(probe_cmd, probe_opts, true);
    probe_cmd->add_option("--out", probe_out, "output CSV path")->required();

    // --- eval ---
    std::string eval_model, eval_data, eval_split = "target_all";
    double eval_fraction = 0.2;
    std::uint64_t eval_seed = 0;
    auto* eval_cmd = app.add_subcommand("eval", "print a checkpoint's accuracy on a dataset split");
    eval_cmd->add_option("--model", eval_model, "model checkpoint path")->required();
    eval_cmd->add_option("--dataset", eval_data, "dataset CSV path")->required();
    eval_cmd->add_option("--split", eval_split, "target_all or target_eval");
    eval_cmd->add_option("--eval-fraction", eval_fraction, "held-out fraction for target_eval");
    eval_cmd->add_option("--seed", eval_seed, "seed that fixed the held-out split");

    // --- bench ---
    std::string bench_out;
    BenchConfig bench_cfg;
    auto* bench_cmd = app.add_subcommand("bench", "time the selection strategies, write a timing CSV");
    bench_cmd->add_option("--out", bench_out, "output CSV path")->required();
    bench_cmd->add_option("--n", bench_cfg.n_unlabeled, "unlabeled target pool size");
    bench_cmd->add_option("--dim", bench_cfg.dim, "feature dimensionality");
    bench_cmd->add_option("--classes", bench_cfg.num_classes, "number of classes");
    bench_cmd->add_option("--bench-rounds", bench_cfg.rounds, "selection rounds to time");
    bench_cmd->add_option("--budget", bench_cfg.per_round_budget, "per-round query budget");
    bench_cmd->add_option("--seed", bench_cfg.seed, "benchmark seed");

    // --- report ---
    std::string report_out;
    std::vector<std::string> report_inputs;
    auto* report_cmd = app.add_subcommand("report", "render accuracy-over-rounds SVG from metrics CSVs");
    report_cmd->add_option("--out", report_out, "output SVG path")->required();
    report_cmd->add_option("metrics", report_inputs, "metrics CSV files")->required()->expected(-1);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth_cmd) {
            RunConfig cfg = resolve_config(synth_opts);
            cfg.validate_sources();
            if (!cfg.synth) fail("synth: config must define synth_* keys");
            save_dataset(generate_synthetic(*cfg.synth), synth_out);
            std::cout << "wrote " << synth_out << "\n";
        } else if (*run_cmd) {
            RunConfig cfg = resolve_config(run_opts);
            Dataset ds = resolve_dataset(cfg);
            RunResult res = run_ada(cfg.loop, ds);
            ensure_out_dir(run_out);
            const std::string metrics_path = (fs::path(run_out) / "metrics.csv").string();
            const std::string model_path = (fs::path(run_out) / "model.csv").string();
            write_metrics_csv(metrics_path, res.rounds);
            save_model(res.model, model_path);
            std::cout << "strategy=" << to_string(cfg.loop.strategy)
                      << " final_accuracy=" << format_double(res.rounds.back().target_accuracy)
                      << " budget_spent=" << res.pool.budget_spent << "\n";
            std::cout << "wrote " << metrics_path << " and " << model_path << "\n";
        } else if (*probe_cmd) {
            RunConfig cfg = resolve_config(probe_opts);
            Dataset ds = resolve_dataset(cfg);
            cfg.loop.budget_fraction = 0.0;  // probe never queries
            cfg.loop.eval_fraction = 0.0;    // probe covers the whole target pool
            std::vector<PvRow> rows = AdaEngine(cfg.loop, ds).probe();
            std::ofstream out(probe_out, std::ios::binary);
            if (!out) fail("gp-probe: cannot write file '" + probe_out + "'");
            out << "id,pseudo_label,posterior_variance\n";
            for (const PvRow& r : rows)
                out << r.id << ',' << r.pseudo << ',' << format_double(r.pv) << "\n";
            if (!out) fail("gp-probe: write failure on '" + probe_out + "'");
            std::cout << "wrote " << probe_out << " (" << rows.size() << " rows)\n";
        } else if (*eval_cmd) {
            ModelState m = load_model(eval_model);
            Dataset ds = load_dataset(eval_data);
            double acc = 0.0;
            if (eval_split == "target_all")
                acc = evaluate(m, ds, EvalSplit::target_all);
            else if (eval_split == "target_eval")
                acc = evaluate(m, ds, EvalSplit::target_eval, eval_fraction, eval_seed);
            else
                fail("eval: unknown split '" + eval_split + "'");
            std::cout << "accuracy=" << format_double(acc) << "\n";
        } else if (*bench_cmd) {
            std::vector<BenchRow> rows = run_bench(bench_cfg);
            write_bench_csv(bench_out, rows);
            for (const BenchRow& r : rows)
                std::cout << r.strategy << " round " << r.round << ": " << format_double(r.selection_ms)
                          << " ms over " << r.candidates << " candidates\n";
            std::cout << "wrote " << bench_out << "\n";
        } else if (*report_cmd) {
            std::vector<std::pair<std::string, std::vector<RoundMetrics>>> series;
            for (const std::string& p : report_inputs)
                series.emplace_back(fs::path(p).stem().string(), read_metrics_csv(p));
            write_report_svg(report_out, series);
            std::cout << "wrote " << report_out << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
