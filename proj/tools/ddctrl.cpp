#include "ddctrl/checks.hpp"
#include "ddctrl/experiment.hpp"
#include "ddctrl/io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <optional>
#include <random>

using namespace ddctrl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSolverFailure = 1;
constexpr int kExitConfig = 2;

int cmd_run(const std::string& scenario_path, const std::string& out_dir, std::optional<std::uint64_t> seed,
            std::optional<Index> trials, const std::string& format, int parallel, bool timing) {
    ExperimentConfig cfg = config_from_json(read_file(scenario_path));
    if (seed) cfg.seed = *seed;
    if (trials) cfg.trials = *trials;
    if (timing) cfg.record_timing = true;
    cfg.validate();

    const auto results = run_scenario(cfg, parallel);
    emit_results(results, cfg, format == "json" ? ResultFormat::json : ResultFormat::csv, out_dir);

    const auto failures = std::count_if(results.begin(), results.end(), [](const TrialResult& r) { return !r.ok; });
    std::cerr << "ddctrl: " << results.size() << " records, " << failures << " solver failures -> " << out_dir << "\n";
    for (const auto& r : results) {
        if (!r.ok) std::cerr << "  trial " << r.trial << " " << r.method << ": " << r.message << "\n";
    }
    return failures > 0 ? kExitSolverFailure : kExitOk;
}

int cmd_simulate(const std::string& plant, Index T, std::uint64_t seed, const std::string& out, double epsilon,
                 double sigma) {
    if (T < 1) throw Error(ErrorKind::config, "--T must be positive");
    Trajectory w = [&] {
        if (plant == "benchmark") {
            const StateSpaceModel model = make_benchmark_plant();
            std::mt19937_64 rng(seed);
            std::normal_distribution<double> normal(0.0, 1.0);
            Matrix u(T, 1);
            for (Index t = 0; t < T; ++t) u(t, 0) = normal(rng);
            return simulate_lti(model, Vector::Zero(model.states()), u);
        }
        LotkaVolterraParams p;
        p.epsilon = epsilon;
        p.validate();
        return collect_lv_data(p, p.equilibrium(), T, sigma, seed);
    }();
    write_file(out, trajectory_to_csv(w));
    return kExitOk;
}

int cmd_check() {
    int failed = 0;
    for (const auto& r : run_property_checks()) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
        if (!r.passed) ++failed;
    }
    return failed ? kExitSolverFailure : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Direct and indirect data-driven predictive control experiments"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run an experiment scenario");
    std::string scenario_path, out_dir, format = "csv";
    std::optional<std::uint64_t> seed;
    std::optional<Index> trials;
    int parallel = 0;
    bool timing = false;
    run->add_option("--scenario", scenario_path, "scenario config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--seed", seed, "master seed (overrides the config)");
    run->add_option("--trials", trials, "trial count (overrides the config)")->check(CLI::PositiveNumber);
    run->add_option("--format", format, "results format")->check(CLI::IsMember({"csv", "json"}));
    run->add_option("--parallel", parallel, "worker threads (0 = OpenMP default)")->check(CLI::NonNegativeNumber);
    run->add_flag("--timing", timing, "record wall time per record (output is then not reproducible)");

    auto* sim = app.add_subcommand("simulate", "simulate a plant under its data-collection input");
    std::string plant = "benchmark", sim_out;
    Index T = 250;
    std::uint64_t sim_seed = 1;
    double epsilon = 0.0, sigma = 0.1;
    sim->add_option("--plant", plant, "plant")->check(CLI::IsMember({"benchmark", "lv"}));
    sim->add_option("--T", T, "samples")->required();
    sim->add_option("--seed", sim_seed, "seed");
    sim->add_option("--out", sim_out, "output CSV")->required();
    sim->add_option("--epsilon", epsilon, "Lotka-Volterra interpolation weight");
    sim->add_option("--sigma", sigma, "Lotka-Volterra input noise std");

    app.add_subcommand("check", "run the property suites");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (run->parsed()) return cmd_run(scenario_path, out_dir, seed, trials, format, parallel, timing);
        if (sim->parsed()) return cmd_simulate(plant, T, sim_seed, sim_out, epsilon, sigma);
        return cmd_check();
    } catch (const Error& e) {
        std::cerr << "ddctrl: " << to_string(e.kind()) << ": " << e.what() << "\n";
        return e.kind() == ErrorKind::config || e.kind() == ErrorKind::io ? kExitConfig : kExitSolverFailure;
    } catch (const std::exception& e) {
        std::cerr << "ddctrl: " << e.what() << "\n";
        return kExitSolverFailure;
    }
}
