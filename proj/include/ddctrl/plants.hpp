#pragma once

#include "ddctrl/signals.hpp"

#include <cstdint>

namespace ddctrl {

/// x(t+1) = A x(t) + B u(t), y(t) = C x(t) + D u(t).
struct StateSpaceModel {
    Matrix A;
    Matrix B;
    Matrix C;
    Matrix D;
    Index order = 0;
    Index lag = 0;

    Index states() const noexcept { return A.rows(); }
    Index inputs() const noexcept { return B.cols(); }
    Index outputs() const noexcept { return C.rows(); }

    /// Throws dimension_mismatch unless the four matrices are compatible with
    /// each other and with `order`.
    void validate() const;

    /// (D, CB, CAB, ..., C A^(k-2) B), each p x m.
    std::vector<Matrix> markov_parameters(Index count) const;
};

/// Extended observability matrix (C; CA; ...; C A^(depth-1)).
Matrix observability_matrix(const StateSpaceModel& model, Index depth);

/// Block lower-triangular Toeplitz matrix of Markov parameters so that
/// y = O x0 + G u over `depth` samples (u, y stacked time-major).
Matrix convolution_matrix(const StateSpaceModel& model, Index depth);

/// Smallest k with rank(O_k) = n, or -1 if the pair (A, C) is unobservable.
Index observability_index(const StateSpaceModel& model, double tol = 1e-10);

/// Simulates the model from x0. `u` is T x m; returns a Trajectory with m
/// inputs and p outputs. When `final_state` is given it receives x(T).
Trajectory simulate_lti(const StateSpaceModel& model, const Vector& x0, const Matrix& u,
                        Vector* final_state = nullptr);

/// Fixed stable 5th-order SISO plant shipped with the library: a lightly
/// damped pair (0.938 at +-0.576 rad), a fast oscillatory pair (0.549 at
/// +-2.562 rad) and a slow real pole at 0.93; unit DC gain, D = 0, CB = 0.
StateSpaceModel make_benchmark_plant();

/// Random stable, minimal plant with eigenvalues inside the disc of radius
/// `max_radius`. Used by tests and the lemma suite.
StateSpaceModel make_random_plant(Index order, Index inputs, Index outputs, std::uint64_t seed,
                                  double max_radius = 0.9);

struct LotkaVolterraParams {
    double a = 0.5;
    double b = 0.025;
    double c = 0.5;
    double d = 0.005;
    double dt = 0.01;
    double epsilon = 0.0;

    Vector equilibrium() const;
    void validate() const;
};

/// One step of eps * f_linear + (1 - eps) * f_nonlinear.
Vector lotka_volterra_step(const Vector& state, double u, const LotkaVolterraParams& p);

/// The linearization about the equilibrium as a state-space model acting on
/// deviations (x - xbar); C = I, D = 0.
StateSpaceModel lotka_volterra_linearization(const LotkaVolterraParams& p);

/// u(t_k) = 2 (sin t_k + sin 0.1 t_k)^2 + v(t_k), t_k = k dt, v ~ N(0, sigma^2).
Vector lotka_volterra_input(Index T, double dt, double sigma, std::uint64_t seed, Index offset = 0);

/// Applies `u` from x0; records (u, x1, x2) per sample, state before the step.
/// When `final_state` is given it receives the state after the last step.
Trajectory simulate_lotka_volterra(const LotkaVolterraParams& p, const Vector& x0, const Vector& u,
                                   Vector* final_state = nullptr);

Trajectory collect_lv_data(const LotkaVolterraParams& p, const Vector& x0, Index T, double input_sigma,
                           std::uint64_t seed);

}  // namespace ddctrl
