#pragma once

#include "ddctrl/control.hpp"

#include <memory>
#include <string>
#include <variant>

namespace ddctrl {

struct Regularizer {
    enum class Kind { none, one_norm, two_norm_sq, proj_two_norm_sq, hybrid };

    Kind kind = Kind::none;
    double lambda = 0.0;   // one_norm, two_norm_sq, proj weight; hybrid projection weight
    double lambda2 = 0.0;  // hybrid l1 weight

    static Regularizer none() { return {}; }
    static Regularizer one_norm(double l) { return {Kind::one_norm, l, 0.0}; }
    static Regularizer two_norm_sq(double l) { return {Kind::two_norm_sq, l, 0.0}; }
    static Regularizer proj_two_norm_sq(double l) { return {Kind::proj_two_norm_sq, l, 0.0}; }
    static Regularizer hybrid(double proj, double l1) { return {Kind::hybrid, proj, l1}; }

    void validate() const;
    std::string name() const;
};

Regularizer::Kind regularizer_kind_from_string(const std::string& s);

/// A Hankel partition with its row-space basis of M = (Up; Yp; Uf) computed
/// on first use and shared by all copies. Safe to share across threads.
class DeepcData {
public:
    explicit DeepcData(HankelPartition part);

    const HankelPartition& partition() const noexcept { return *part_; }
    /// Orthonormal [V_r V_k] with V_r spanning the row space of M.
    const RowSpaceBasis& row_space() const;
    /// Pi = V_r V_r' and I - Pi.
    Projector projector() const;

private:
    struct Cache;
    std::shared_ptr<const HankelPartition> part_;
    std::shared_ptr<Cache> cache_;
};

struct DeepcSolution {
    Trajectory w_star;
    Vector g_star;
    double predicted_cost = 0.0;
    SolveReport report;

    Vector u() const { return w_star.stacked_inputs(); }
    Vector y() const { return w_star.stacked_outputs(); }
};

/// Minimizes c_ctrl(w - w_r) + h(g) subject to (Up; Yp; Uf; Yf) g = (u_ini; y_ini; u; y)
/// and the box of `spec`. The projection regularizer is solved in the
/// coordinates of the row-space basis so that huge weights stay well posed.
DeepcSolution solve_deepc(const DeepcData& data, const Trajectory& w_ini, const ControlSpec& spec,
                          const Regularizer& reg, const SolverOptions& opt = {});

/// Residual of the stacked constraint H g = (w_ini; w_star), scaled by 1 + ||(w_ini; w_star)||.
double deepc_constraint_residual(const HankelPartition& part, const Trajectory& w_ini, const DeepcSolution& sol);

using TruePlant = std::variant<StateSpaceModel, LotkaVolterraParams>;

struct GroundTruth {
    Trajectory w_star;
    double cost = 0.0;
    Vector x_start;  // state at the first sample of the horizon
};

/// Optimal control with the true model: x_ini from w_ini by least squares,
/// propagated through the prefix, then the model-based QP.
GroundTruth ground_truth_optimum(const StateSpaceModel& model, const Trajectory& w_ini, const ControlSpec& spec);

struct Realized {
    Trajectory w_true;
    double cost = 0.0;
    double error_pct = 0.0;
};

/// Simulates the true plant from `x_start` under the stacked inputs and scores
/// the response against `c_star` (absolute cost when c_star < 1e-9).
Realized realized_error(const TruePlant& plant, const Vector& u_applied, const Vector& x_start,
                        const ControlSpec& spec, double c_star);

}  // namespace ddctrl
