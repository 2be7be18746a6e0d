#include "ddctrl/experiment.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace ddctrl;

TEST_CASE("parallel Hankel construction equals the serial kernel") {
    std::mt19937_64 rng(1);
    for (Index T : {30, 251, 1000}) {
        const Trajectory w(oracle::gaussian(rng, T, 2), oracle::gaussian(rng, T, 3));
        for (Index depth : {1, 7, 25}) CHECK(build_hankel(w, depth) == reference::build_hankel(w, depth));
    }
}

TEST_CASE("parallel scenario runner equals the serial reference") {
    ExperimentConfig c;
    c.lambdas = {1.0, 1e3};
    c.methods = {"direct_l1", "direct_two_norm", "spc", "subspace_id"};
    c.trials = 6;
    c.seed = 9;
    const std::string serial = results_to_csv(reference::run_scenario(c));
    for (int threads : {1, 2, 4}) CHECK(results_to_csv(run_scenario(c, threads)) == serial);
    CHECK(aggregate_to_csv(aggregate(run_scenario(c, 3))) == aggregate_to_csv(aggregate(reference::run_scenario(c))));
}

TEST_CASE("concurrent solves on one shared data object agree with solo solves") {
    std::mt19937_64 rng(2);
    const StateSpaceModel plant = make_benchmark_plant();
    const Trajectory w = add_measurement_noise(simulate_lti(plant, Vector::Zero(5), oracle::gaussian(rng, 250, 1)),
                                               0.05, 3);
    const DeepcData shared(partition_past_future(w, 5, 20));
    const ControlSpec spec = make_control_spec(ExperimentConfig{});
    const Trajectory w_ini = w.slice(100, 5);
    const std::vector<double> lambdas{0.0, 1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6};
    std::vector<Vector> par(lambdas.size());
#pragma omp parallel for num_threads(4)
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        par[i] = solve_deepc(shared, w_ini, spec, Regularizer::proj_two_norm_sq(lambdas[i])).u();
    }
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        const DeepcData own(partition_past_future(w, 5, 20));
        CHECK(solve_deepc(own, w_ini, spec, Regularizer::proj_two_norm_sq(lambdas[i])).u() == par[i]);
    }
}
