// cablp_cli: run, sweep, recover, conditioning, plan, fit, plot.
#include "cablp/errors.hpp"
#include "cablp/harness.hpp"
#include "cablp/json_io.hpp"
#include "cablp/lowrank_recovery.hpp"
#include "cablp/orchestrator.hpp"
#include "cablp/phase1_sampling.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace cablp;

namespace {

struct Overrides {
    std::string config;
    std::string out;
    std::vector<std::uint64_t> seeds;
    std::vector<std::int64_t> horizons;
    std::string mode;
    bool traces = false;
};

Json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

ExperimentConfig load_config(const Overrides& o) {
    Json j = read_json(o.config);
    if (!o.seeds.empty()) {
        j["seeds"] = o.seeds;
        j.erase("seed_count");
    }
    if (!o.horizons.empty()) j["horizons"] = o.horizons;
    if (!o.mode.empty()) j["mode"] = o.mode;
    if (!o.out.empty()) j["out_dir"] = o.out;
    if (o.traces) j["write_traces"] = true;
    return experiment_config_from_json(j);
}

void add_common(CLI::App* app, Overrides& o, bool config_required = true) {
    auto* c = app->add_option("--config", o.config, "experiment JSON");
    if (config_required) c->required()->check(CLI::ExistingFile);
    app->add_option("--out", o.out, "output directory");
    app->add_option("--seeds", o.seeds, "seed list (overrides the config)")->delimiter(',');
    app->add_option("--horizons", o.horizons, "horizon list (overrides the config)")->delimiter(',');
    app->add_option("--mode", o.mode, "practical or theory")->check(CLI::IsMember({"practical", "theory"}));
}

void write_file(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << text;
}

int cmd_run(const Overrides& o) {
    const ExperimentConfig cfg = load_config(o);
    const std::int64_t n = cfg.horizons.front();
    const std::uint64_t seed = cfg.seeds.front();
    RunRecord rec;
    const CellResult cell = run_cell(cfg, n, seed, &rec);
    Json j = cell.status == "infeasible"
                 ? Json{{"status", cell.status}, {"message", cell.message}, {"n", n}, {"env_seed", seed}}
                 : to_json(rec, false);
    const fs::path dir(cfg.out_dir);
    write_file(dir / "run.json", j.dump(2) + "\n");
    if (cfg.write_traces && cell.status != "infeasible") {
        std::ostringstream os;
        write_trace_csv(os, rec, cfg.environment.k);
        write_file(dir / "trace.csv", os.str());
    }
    std::cout << j.dump(2) << '\n';
    return cell.status == "ok" ? 0 : 2;
}

int cmd_sweep(const Overrides& o) {
    const ExperimentConfig cfg = load_config(o);
    const SweepSummary s = run_experiment(cfg);
    std::cout << to_json(s).dump(2) << '\n';
    return s.failed_cells == 0 ? 0 : 2;
}

int cmd_recover(const Overrides& o) {
    const ExperimentConfig cfg = load_config(o);
    const std::uint64_t seed = cfg.seeds.front();
    Environment env = make_environment(cfg.environment, seed);
    const PracticalPlan& pp = cfg.practical;
    const SamplingPlan plan{pp.m_x, pp.m_phi, pp.epsilon, pp.n_resample};
    std::mt19937_64 rng(derive_seed(seed, 1));
    const SamplingSets sets = draw_sampling_sets(plan, env.d(), rng);
    MeasurementBundle bundle = collect_measurements(env, sets, plan);
    bundle.seed = seed;

    double lambda = pp.lambda_value;
    if (pp.lambda_rule == LambdaRule::relative) {
        lambda *= operator_norm(apply_adjoint(sets, bundle.y), cfg.solver.power_iters, cfg.solver.power_tol);
    } else if (pp.lambda_rule == LambdaRule::formula) {
        const double sigma_eff = env.sigma() / std::sqrt(static_cast<double>(plan.n_resample));
        lambda = compute_lambda({env.smoothness_constant(), plan.epsilon, env.d(), plan.m_x, plan.m_phi, env.k(),
                                 sigma_eff, cfg.constants.delta, cfg.constants.gamma});
    }
    Json j;
    j["measurements"] = to_json(bundle);
    try {
        j["recovery"] = to_json(recover_subspace(sets, bundle.y, lambda, env.k(), cfg.solver, &env.param_matrix()));
        j["status"] = "ok";
    } catch (const RankError& e) {
        j["status"] = "rank_collapse";
        j["message"] = e.what();
    }
    write_file(fs::path(cfg.out_dir) / "recovery.json", j.dump(2) + "\n");
    std::cout << j["status"].get<std::string>();
    if (j.contains("recovery")) std::cout << " subspace_error " << j["recovery"]["subspace_error"].get<double>();
    std::cout << '\n';
    return j["status"] == "ok" ? 0 : 2;
}

int cmd_conditioning(const Overrides& o, int samples) {
    const ExperimentConfig cfg = load_config(o);
    const Environment env = make_environment(cfg.environment, cfg.seeds.front());
    const Json j = to_json(estimate_conditioning(env, samples, derive_seed(cfg.seeds.front(), 3)));
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_plan(const Overrides& o) {
    const ExperimentConfig cfg = load_config(o);
    const Environment env = make_environment(cfg.environment, cfg.seeds.front());
    const double alpha = cfg.alpha;
    if (!(alpha > 0.0)) throw ConfigError("plan needs a declared alpha > 0 (see the conditioning subcommand)");
    Json out = Json::array();
    bool all_feasible = true;
    for (auto n : cfg.horizons) {
        const TheoryInputs in{static_cast<double>(n), env.d(), env.k(), env.sigma(), env.smoothness_constant(), alpha,
                              env.nu()};
        const TheoryParams tp = plan_parameters(in, cfg.constants);
        all_feasible = all_feasible && tp.feasible;
        out.push_back(to_json(tp));
    }
    std::cout << out.dump(2) << '\n';
    return all_feasible ? 0 : 2;
}

int cmd_fit(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw ConfigError("cannot open " + csv_path);
    const SweepSummary s = summarize(read_sweep_csv(in));
    std::cout << to_json(s).dump(2) << '\n';
    if (!s.fit) throw ConfigError("exponent fit needs at least 3 horizons with data");
    return s.failed_cells == 0 ? 0 : 2;
}

int cmd_plot(const std::string& input, const std::string& stem) {
    SweepSummary s;
    if (fs::path(input).extension() == ".csv") {
        std::ifstream in(input);
        if (!in) throw ConfigError("cannot open " + input);
        s = summarize(read_sweep_csv(in));
    } else {
        s = sweep_summary_from_json(read_json(input));
    }
    emit_plot_data(s, stem);
    std::cout << stem << ".svg\n" << stem << ".csv\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Continuum-armed bandit with low-rank subspace recovery"};
    app.require_subcommand(1);

    Overrides o;
    auto* run = app.add_subcommand("run", "one (n, seed) cell: first horizon and first seed");
    add_common(run, o);
    run->add_flag("--traces", o.traces, "write the per-round trace CSV");

    auto* sweep = app.add_subcommand("sweep", "every (n, seed) cell, sweep.csv and summary.json");
    add_common(sweep, o);
    sweep->add_flag("--traces", o.traces, "write per-round trace CSVs");

    auto* recover = app.add_subcommand("recover", "Phase 1 only with the practical plan");
    add_common(recover, o);

    int samples = 50'000;
    auto* cond = app.add_subcommand("conditioning", "Monte-Carlo estimate of alpha");
    add_common(cond, o);
    cond->add_option("--samples", samples, "sphere samples")->check(CLI::PositiveNumber);

    auto* plan = app.add_subcommand("plan", "theory-mode parameters for each horizon");
    add_common(plan, o);

    std::string csv_path;
    auto* fit = app.add_subcommand("fit", "exponent fit of a sweep CSV");
    fit->add_option("--csv", csv_path, "sweep.csv")->required()->check(CLI::ExistingFile);

    std::string plot_in, plot_stem = "regret";
    auto* plot = app.add_subcommand("plot", "SVG chart and CSV from a summary or sweep CSV");
    plot->add_option("--input", plot_in, "summary.json or sweep.csv")->required()->check(CLI::ExistingFile);
    plot->add_option("--out", plot_stem, "output stem (writes <stem>.svg and <stem>.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*run) return cmd_run(o);
        if (*sweep) return cmd_sweep(o);
        if (*recover) return cmd_recover(o);
        if (*cond) return cmd_conditioning(o, samples);
        if (*plan) return cmd_plan(o);
        if (*fit) return cmd_fit(csv_path);
        if (*plot) return cmd_plot(plot_in, plot_stem);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
