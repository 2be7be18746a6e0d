#include "ddctrl/checks.hpp"

#include "ddctrl/deepc.hpp"
#include "ddctrl/indirect.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

namespace ddctrl {

namespace {

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

Matrix gaussian(std::mt19937_64& rng, Index r, Index c) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix M(r, c);
    for (Index j = 0; j < c; ++j) {
        for (Index i = 0; i < r; ++i) M(i, j) = n(rng);
    }
    return M;
}

CheckResult lemma_check(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const Index tini = 3, L = 6;
    double worst = 0.0;
    int rank_failures = 0;
    for (int k = 0; k < 10; ++k) {
        const Index n = 2 + k % 4;
        const Index m = 1 + k % 2;
        const StateSpaceModel plant = make_random_plant(n, m, 1, seed + 31 * static_cast<std::uint64_t>(k));
        const Index depth = tini + L;
        const Index T = 4 * depth * (m + 1);
        const Trajectory wd = simulate_lti(plant, gaussian(rng, n, 1).col(0), gaussian(rng, T, m));
        const Matrix H = build_hankel(wd, depth);
        const PeCheck pe = check_pe_rank(wd, depth, SystemClass{m + 1, m, n, plant.lag});
        if (!pe.satisfied) ++rank_failures;
        for (int j = 0; j < 5; ++j) {
            const Trajectory w = simulate_lti(plant, gaussian(rng, n, 1).col(0), gaussian(rng, depth, m));
            const Vector target = w.stacked();
            const Vector g = least_squares(H, Matrix(target)).col(0);
            worst = std::max(worst, (H * g - target).norm() / target.norm());
        }
    }
    return {"fundamental lemma", rank_failures == 0 && worst <= 1e-8,
            "rank failures " + std::to_string(rank_failures) + ", worst span residual " + sci(worst)};
}

CheckResult projector_check(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        const Index r = 2 + k % 4;
        const Matrix M = gaussian(rng, 6, r) * gaussian(rng, r, 9);
        const Projector P = row_space_projector(M);
        worst = std::max({worst, (P.row_space * P.row_space - P.row_space).norm(),
                          (P.row_space - P.row_space.transpose()).norm(),
                          (M * P.row_space - M).norm() / M.norm()});
    }
    return {"row-space projector", worst <= 1e-10, "worst identity defect " + sci(worst)};
}

CheckResult qp_check(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    double worst_eq = 0.0, worst_l1 = 0.0;
    for (int k = 0; k < 20; ++k) {
        const Index n = 8, mrows = 3;
        const Matrix R = gaussian(rng, n, n);
        EqQP p{R.transpose() * R, gaussian(rng, n, 1).col(0), gaussian(rng, mrows, n), gaussian(rng, mrows, 1).col(0),
               Vector(), Vector()};
        const SolveReport eq = solve_eq_qp(p);
        worst_eq = std::max({worst_eq, (p.Q * eq.z + p.q + p.A.transpose() * eq.nu).norm(), (p.A * eq.z - p.b).norm()});
        const std::vector<bool> sel(static_cast<std::size_t>(n), true);
        const SolveReport l1 = solve_l1_qp(p, 0.5, sel);
        worst_l1 = std::max(worst_l1, check_l1_kkt(p, 0.5, sel, l1.z).optimality);
    }
    return {"QP optimality", worst_eq <= 1e-8 && worst_l1 <= 1e-6,
            "KKT residual " + sci(worst_eq) + ", l1 subgradient residual " + sci(worst_l1)};
}

CheckResult consistency_check(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const StateSpaceModel plant = make_benchmark_plant();
    const Index tini = 5, L = 20, T = 250;
    const Trajectory wd = simulate_lti(plant, Vector::Zero(5), gaussian(rng, T, 1));
    // Reference: a plant trajectory that continues a prefix, so c* = 0.
    Vector x_end;
    const Trajectory w_all = simulate_lti(plant, gaussian(rng, 5, 1).col(0), gaussian(rng, tini + L, 1), &x_end);
    const Trajectory w_ini = w_all.slice(0, tini);
    Vector xs;
    simulate_lti(plant, estimate_initial_state(plant, w_ini), w_ini.input_samples(), &xs);
    Vector wts(2);
    wts << 0.01, 2000.0;
    const ControlSpec spec = ControlSpec::kron(tini, L, w_all.slice(tini, L), wts);
    const DeepcData data(partition_past_future(wd, tini, L));

    double worst = 0.0;
    auto score = [&](const Vector& u) { worst = std::max(worst, realized_error(plant, u, xs, spec, 0.0).cost); };
    for (double lam : {0.0, 1.0, 1e4}) score(solve_deepc(data, w_ini, spec, Regularizer::proj_two_norm_sq(lam)).u());
    score(solve_deepc(data, w_ini, spec, Regularizer::one_norm(0.0)).u());
    score(solve_spc_control(fit_spc_predictor(data.partition()), w_ini, spec).u);
    score(certainty_equivalence_control(subspace_id(wd, 5, tini, L), w_ini, spec).u);
    return {"noise-free consistency", worst <= 1e-6, "worst realized cost " + sci(worst)};
}

}  // namespace

std::vector<CheckResult> run_property_checks(std::uint64_t seed) {
    std::vector<CheckResult> out;
    using Fn = CheckResult (*)(std::uint64_t);
    for (Fn fn : {lemma_check, projector_check, qp_check, consistency_check}) {
        try {
            out.push_back(fn(seed));
        } catch (const std::exception& e) {
            out.push_back({"(suite error)", false, e.what()});
        }
    }
    return out;
}

}  // namespace ddctrl
