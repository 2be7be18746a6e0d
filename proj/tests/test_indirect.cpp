#include "ddctrl/deepc.hpp"
#include "ddctrl/experiment.hpp"
#include "ddctrl/indirect.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace ddctrl;

namespace {

Trajectory benchmark_data(std::uint64_t seed, Index T = 250) {
    std::mt19937_64 rng(seed);
    return simulate_lti(make_benchmark_plant(), Vector::Zero(5), oracle::gaussian(rng, T, 1));
}

double markov_mismatch(const StateSpaceModel& a, const StateSpaceModel& b, Index count) {
    const auto ha = a.markov_parameters(count), hb = b.markov_parameters(count);
    double num = 0.0, den = 0.0;
    for (Index k = 0; k < count; ++k) {
        num += (ha[static_cast<std::size_t>(k)] - hb[static_cast<std::size_t>(k)]).squaredNorm();
        den += hb[static_cast<std::size_t>(k)].squaredNorm();
    }
    return std::sqrt(num / den);
}

ControlSpec sine_spec() { return make_control_spec(ExperimentConfig{}); }

}  // namespace

TEST_CASE("predictor of a memoryless gain") {
    std::mt19937_64 rng(1);
    const Matrix u = oracle::gaussian(rng, 80, 1);
    const SpcPredictor K = fit_spc_predictor(partition_past_future(Trajectory(u, 2.0 * u), 3, 4));
    CHECK(K.Kp().rows() == 4);
    CHECK(K.Kp().cols() == 6);
    CHECK(K.Kf().cols() == 4);
    CHECK((K.Kf() - 2.0 * Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(K.Kp().cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("raw predictor is exact on noise-free data and equals the least-norm route") {
    const StateSpaceModel plant = make_benchmark_plant();
    const HankelPartition part = partition_past_future(benchmark_data(2), 5, 20);
    const SpcPredictor K = fit_spc_predictor(part);
    const Matrix M = part.regressor();
    const Matrix Mpinv = M.completeOrthogonalDecomposition().pseudoInverse();
    std::mt19937_64 rng(3);
    for (int k = 0; k < 50; ++k) {
        const Trajectory w = simulate_lti(plant, oracle::gaussian(rng, 5, 1).col(0), oracle::gaussian(rng, 25, 1));
        const Trajectory ini = w.slice(0, 5), fut = w.slice(5, 20);
        const Vector y = K.predict(ini, fut.stacked_inputs());
        CHECK((y - fut.stacked_outputs()).norm() <= 1e-6 * fut.stacked_outputs().norm());
        Vector rhs(30);
        rhs << ini.stacked_inputs(), ini.stacked_outputs(), fut.stacked_inputs();
        const Vector g_ln = Mpinv * rhs;
        CHECK((part.Yf * g_ln - y).norm() <= 1e-10 * (1.0 + y.norm()));
    }
}

TEST_CASE("rank truncation") {
    SpcPredictor d;
    d.K.resize(2, 4);
    d.K << 3, 0, 5, 0, 0, 1, 0, 6;
    d.tini = 1;
    d.horizon = 2;
    d.inputs = 1;
    d.outputs = 1;
    const SpcPredictor t = truncate_rank(d, 1);
    Matrix expect(2, 4);
    expect << 3, 0, 5, 0, 0, 0, 0, 6;
    CHECK((t.K - expect).norm() <= 1e-12);
    CHECK(t.rank_truncated);

    const SpcPredictor raw = fit_spc_predictor(partition_past_future(benchmark_data(4), 5, 20));
    CHECK((truncate_rank(raw, 10).K - raw.K).norm() <= 1e-12 * raw.K.norm());

    std::mt19937_64 rng(5);
    SpcPredictor r = raw;
    r.K.leftCols(10) = oracle::gaussian(rng, 20, 10);
    const Eigen::JacobiSVD<Matrix> svd(r.Kp());
    const Vector s = svd.singularValues();
    const SpcPredictor rt = truncate_rank(r, 4);
    CHECK((r.Kp() - rt.Kp()).norm() == doctest::Approx(s.tail(s.size() - 4).norm()).epsilon(1e-10));
    CHECK(oracle::jacobi_rank(rt.Kp(), 1e-10) <= 4);
    CHECK(rt.Kf() == r.Kf());
}

TEST_CASE("causality pattern") {
    SpcPredictor p;
    p.tini = 1;
    p.horizon = 2;
    p.inputs = 1;
    p.outputs = 1;
    p.K = Matrix::Ones(2, 4);
    const SpcPredictor c = enforce_causality(p);
    Matrix kf(2, 2);
    kf << 1, 0, 1, 1;
    CHECK(c.Kf() == kf);
    CHECK(c.causal);
    CHECK(enforce_causality(c).K == c.K);

    const SpcPredictor raw = fit_spc_predictor(partition_past_future(benchmark_data(6), 5, 20));
    const SpcPredictor rc = enforce_causality(raw);
    CHECK((rc.K - raw.K).norm() <= 1e-6);
    for (Index i = 0; i < 20; ++i) {
        for (Index j = i + 1; j < 20; ++j) CHECK(rc.Kf()(i, j) == 0.0);
    }
}

TEST_CASE("SPC control: feasible reference, zero data, and the projection limit") {
    const StateSpaceModel plant = make_benchmark_plant();
    const Trajectory data = benchmark_data(7);
    const SpcPredictor K = fit_spc_predictor(partition_past_future(data, 5, 20));
    std::mt19937_64 rng(8);
    const Vector x0 = oracle::gaussian(rng, 5, 1).col(0);
    const Trajectory w = simulate_lti(plant, x0, oracle::gaussian(rng, 25, 1));
    Vector x_start;
    simulate_lti(plant, x0, w.slice(0, 5).input_samples(), &x_start);
    Vector wts(2);
    wts << 0.01, 2000.0;
    const ControlSpec spec = ControlSpec::kron(5, 20, w.slice(5, 20), wts);
    const ControlResult r = solve_spc_control(K, w.slice(0, 5), spec);
    CHECK(realized_error(plant, r.u, x_start, spec, 0.0).cost <= 1e-6);

    const Trajectory zero_ini(Matrix::Zero(5, 1), Matrix::Zero(5, 1));
    const ControlSpec zspec = ControlSpec::kron(5, 20, Trajectory(Matrix::Zero(20, 1), Matrix::Zero(20, 1)), wts);
    CHECK(solve_spc_control(K, zero_ini, zspec).u.norm() <= 1e-12);

    const Trajectory noisy = add_measurement_noise(data, 0.05, 9);
    const HankelPartition part = partition_past_future(noisy, 5, 20);
    const ControlResult spc = solve_spc_control(fit_spc_predictor(part), w.slice(0, 5), sine_spec());
    const DeepcSolution dp =
        solve_deepc(DeepcData(part), w.slice(0, 5), sine_spec(), Regularizer::proj_two_norm_sq(1e12));
    CHECK((dp.u() - spc.u).norm() <= 1e-5 * spc.u.norm());
}

TEST_CASE("subspace identification on noise-free data") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const StateSpaceModel plant = make_random_plant(3, 1, 1, 40 + seed);
        std::mt19937_64 rng(seed);
        const Trajectory w = simulate_lti(plant, oracle::gaussian(rng, 3, 1).col(0), oracle::gaussian(rng, 200, 1));
        CHECK(markov_mismatch(subspace_id(w, 3, 4, 10), plant, 10) <= 1e-6);
        CHECK(markov_mismatch(subspace_id(w, 4, 4, 10), plant, 10) <= 1e-6);
    }
    // Three well separated modes of similar weight cannot be explained by one.
    StateSpaceModel three{Matrix::Zero(3, 3), Matrix::Ones(3, 1), Matrix::Ones(1, 3), Matrix::Zero(1, 1), 3, 3};
    three.A.diagonal() << 0.9, -0.7, 0.3;
    std::mt19937_64 rng(6);
    const Trajectory w = simulate_lti(three, Vector::Zero(3), oracle::gaussian(rng, 200, 1));
    CHECK(markov_mismatch(subspace_id(w, 3, 4, 10), three, 10) <= 1e-6);
    CHECK(markov_mismatch(subspace_id(w, 1, 4, 10), three, 10) > 1e-2);
}

TEST_CASE("subspace identification is invariant to the plant's state coordinates") {
    const StateSpaceModel plant = make_random_plant(3, 1, 1, 77);
    std::mt19937_64 rng(4);
    Matrix S = oracle::gaussian(rng, 3, 3);
    S += 3.0 * Matrix::Identity(3, 3);
    StateSpaceModel similar = plant;
    similar.A = S * plant.A * S.inverse();
    similar.B = S * plant.B;
    similar.C = plant.C * S.inverse();
    const Matrix u = oracle::gaussian(rng, 150, 1);
    const StateSpaceModel a = subspace_id(simulate_lti(plant, Vector::Zero(3), u), 3, 4, 10);
    const StateSpaceModel b = subspace_id(simulate_lti(similar, Vector::Zero(3), u), 3, 4, 10);
    CHECK(markov_mismatch(a, b, 12) <= 1e-8);
}

TEST_CASE("subspace identification rejects impossible orders") {
    const Trajectory w = benchmark_data(9, 60);
    CHECK_THROWS_AS(subspace_id(w, 30, 5, 20), Error);
    CHECK_THROWS_AS(subspace_id(benchmark_data(9, 40), 5, 5, 20), Error);
}

TEST_CASE("initial state estimation") {
    StateSpaceModel s{Matrix::Zero(2, 2), Matrix::Zero(2, 1), Matrix::Identity(2, 2), Matrix::Zero(2, 1), 2, 1};
    Matrix u = Matrix::Zero(1, 1), y(1, 2);
    y << 4, -3;
    const InitialState est = estimate_state(s, Trajectory(u, y));
    CHECK(est.x_ini(0) == doctest::Approx(4.0));
    CHECK(est.x_ini(1) == doctest::Approx(-3.0));

    const StateSpaceModel plant = make_random_plant(4, 1, 1, 81);
    std::mt19937_64 rng(2);
    const Vector x0 = oracle::gaussian(rng, 4, 1).col(0);
    const Trajectory w = simulate_lti(plant, x0, oracle::gaussian(rng, 6, 1));
    CHECK((estimate_initial_state(plant, w) - x0).norm() <= 1e-8);
    try {
        estimate_initial_state(plant, w.slice(0, 2));
        FAIL("expected an unobservable prefix");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::unobservable);
    }
    const InitialState ln = estimate_state(plant, w.slice(0, 2), StateEstimate::least_norm);
    CHECK(ln.x_ini.size() == 4);
}

TEST_CASE("certainty-equivalence control") {
    const StateSpaceModel plant = make_benchmark_plant();
    const Trajectory data = benchmark_data(10);
    std::mt19937_64 rng(11);
    const Trajectory w = simulate_lti(plant, oracle::gaussian(rng, 5, 1).col(0), oracle::gaussian(rng, 5, 1));
    const ControlSpec spec = sine_spec();
    const GroundTruth gt = ground_truth_optimum(plant, w, spec);

    const ControlResult exact = certainty_equivalence_control(plant, w, spec);
    CHECK((exact.u - gt.w_star.stacked_inputs()).norm() <= 1e-10 * (1.0 + exact.u.norm()));

    const ControlResult ident = certainty_equivalence_control(subspace_id(data, 5, 5, 20), w, spec);
    CHECK(std::abs(realized_error(plant, ident.u, gt.x_start, spec, gt.cost).error_pct) <= 1e-4);

    const ControlResult wrong =
        certainty_equivalence_control(subspace_id(data, 1, 5, 20), w, spec, StateEstimate::least_norm);
    CHECK(realized_error(plant, wrong.u, gt.x_start, spec, gt.cost).error_pct > 10.0);
}
