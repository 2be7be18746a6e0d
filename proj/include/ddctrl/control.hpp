#pragma once

#include "ddctrl/plants.hpp"
#include "ddctrl/solver.hpp"

#include <optional>

namespace ddctrl {

/// Finite-horizon tracking problem: minimize (w - w_r)' W (w - w_r) over a
/// length-L trajectory w that follows the prefix w_ini, optionally with a
/// per-channel box on w.
struct ControlSpec {
    Index tini = 0;
    Index horizon = 0;
    Trajectory reference;
    Matrix weight;  // qL x qL over the time-major stacked trajectory
    std::optional<Vector> lower;  // per channel, inputs first
    std::optional<Vector> upper;

    /// W = I_L kron diag(channel_weights).
    static ControlSpec kron(Index tini, Index horizon, Trajectory reference, const Vector& channel_weights);

    Index channels() const noexcept { return reference.channels(); }
    Index inputs() const noexcept { return reference.inputs(); }
    Index outputs() const noexcept { return reference.outputs(); }
    bool has_bounds() const noexcept { return lower.has_value() || upper.has_value(); }

    void validate() const;

    /// c_ctrl(w - w_r) for a length-L trajectory.
    double cost(const Trajectory& w) const;

    /// Box bounds stacked over the horizon (infinite where absent).
    Vector stacked_lower() const;
    Vector stacked_upper() const;
};

/// 0/1 matrices with w = S_u u + S_y y for time-major stacked u (mL), y (pL).
Matrix input_selector(Index inputs, Index outputs, Index horizon);
Matrix output_selector(Index inputs, Index outputs, Index horizon);

struct ControlResult {
    Vector u;  // stacked inputs over the horizon
    Vector y;  // predicted outputs
    double predicted_cost = 0.0;
    SolveReport report;

    Trajectory trajectory(Index inputs, Index outputs) const;
};

/// Tracking problem for an affine predictor y = F u + f0; honors the box
/// bounds of `spec` through the active-set path of the QP solver.
ControlResult solve_prediction_control(const Matrix& F, const Vector& f0, const ControlSpec& spec,
                                       const SolverOptions& opt = {});

/// Same problem for a state-space model started from `x_start` at the first
/// sample of the horizon.
ControlResult solve_model_control(const StateSpaceModel& model, const Vector& x_start, const ControlSpec& spec,
                                  const SolverOptions& opt = {});

/// 100 (c - c_star) / c_star; the absolute cost c when c_star < 1e-9.
double error_percentage(double cost, double c_star);

}  // namespace ddctrl
