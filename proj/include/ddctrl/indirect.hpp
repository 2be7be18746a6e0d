#pragma once

#include "ddctrl/control.hpp"

namespace ddctrl {

/// Multi-step predictor y = K (u_ini; y_ini; u) = Kp (u_ini; y_ini) + Kf u.
struct SpcPredictor {
    Matrix K;
    Index tini = 0;
    Index horizon = 0;
    Index inputs = 0;
    Index outputs = 0;
    bool rank_truncated = false;
    bool causal = false;

    Index past_cols() const noexcept { return (inputs + outputs) * tini; }
    Matrix Kp() const { return K.leftCols(past_cols()); }
    Matrix Kf() const { return K.rightCols(inputs * horizon); }
    /// Kp (u_ini; y_ini) for a length-Tini prefix.
    Vector free_response(const Trajectory& w_ini) const;
    Vector predict(const Trajectory& w_ini, const Vector& u) const;
};

/// K = Yf (Up; Yp; Uf)^+, the minimum-Frobenius-norm least-squares fit.
SpcPredictor fit_spc_predictor(const HankelPartition& part);

/// Best rank-n approximation of Kp; Kf untouched.
SpcPredictor truncate_rank(SpcPredictor pred, Index n);

/// Hard-zeros the blocks of Kf strictly above the block diagonal.
SpcPredictor enforce_causality(SpcPredictor pred);

ControlResult solve_spc_control(const SpcPredictor& pred, const Trajectory& w_ini, const ControlSpec& spec,
                                const SolverOptions& opt = {});

/// Subspace identification through the SVD of Kp: O = U_n S_n^(1/2), C and A
/// from O by a shift-invariance fit, then B, D and x0 jointly by least squares
/// on the measured outputs.
StateSpaceModel subspace_id(const Trajectory& w_d, Index n, Index tini, Index horizon);

enum class StateEstimate {
    strict,      // requires Tini >= lag and rank O_Tini = n
    least_norm,  // minimum-norm x_ini whenever rank O_Tini < n
};

struct InitialState {
    Vector x_ini;      // state at the first prefix sample
    Vector x_current;  // state after the prefix, i.e. at the first horizon sample
};

/// Least-squares solve of y_ini = O x + G u_ini.
InitialState estimate_state(const StateSpaceModel& model, const Trajectory& w_ini,
                            StateEstimate mode = StateEstimate::strict);

Vector estimate_initial_state(const StateSpaceModel& model, const Trajectory& w_ini);

/// Estimates the state from w_ini, then solves the tracking problem with the model.
ControlResult certainty_equivalence_control(const StateSpaceModel& model, const Trajectory& w_ini,
                                            const ControlSpec& spec, StateEstimate mode = StateEstimate::strict,
                                            const SolverOptions& opt = {});

}  // namespace ddctrl
