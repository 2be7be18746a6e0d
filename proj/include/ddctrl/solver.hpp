#pragma once

#include "ddctrl/types.hpp"

#include <vector>

namespace ddctrl {

/// min 0.5 z'Qz + q'z  s.t.  Az = b,  lo <= z <= hi.
/// Empty `lo`/`hi` mean no bounds; infinite entries leave a side open.
struct EqQP {
    Matrix Q;
    Vector q;
    Matrix A;
    Vector b;
    Vector lo;
    Vector hi;

    Index size() const noexcept { return Q.rows(); }
    bool has_bounds() const noexcept { return lo.size() > 0 || hi.size() > 0; }
    void validate() const;
};

struct SolverOptions {
    double feas_tol = 1e-8;
    double opt_tol = 1e-6;
    int max_iter = 10000;
    double rho = 1.0;
    /// Record, per ADMM iteration, the objective of the best iterate so far that
    /// satisfies Az = b and the box (infinite until one exists).
    bool log_objective = false;
};

/// Residuals are scaled: the constraint residual is ||Az - b||_inf / (1 + ||b||_inf)
/// and the optimality residual is divided by 1 + max(||q||_inf, lambda).
struct SolveReport {
    Vector z;
    Vector nu;
    double objective = 0.0;
    double constraint_residual = 0.0;
    double optimality_residual = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_log;
};

/// Singular values below tol * sigma_max are treated as zero.
Matrix pseudo_inverse(const Matrix& A, double tol = 1e-10);

/// Minimum-norm minimizer of ||A X - B||_F.
Matrix least_squares(const Matrix& A, const Matrix& B, double tol = 1e-10);

struct Projector {
    Matrix row_space;  // Pi = M^+ M
    Matrix kernel;     // I - Pi
};

Projector row_space_projector(const Matrix& M, double tol = 1e-10);

/// Orthonormal basis [V_r V_k] of R^cols with V_r spanning the row space of M
/// and V_k its kernel; `rank` is the split column.
struct RowSpaceBasis {
    Matrix V;
    Index rank = 0;
};

RowSpaceBasis row_space_basis(const Matrix& M, double tol = 1e-10);

/// Null-space method on the KKT system; active-set outer loop when bounds are
/// present. Throws infeasible / unbounded errors.
SolveReport solve_eq_qp(const EqQP& p, const SolverOptions& opt = {});

/// Adds lambda * sum_{i : selected[i]} |z_i| to the objective. Solved by ADMM on
/// a consensus copy with periodic polishing on the detected support.
SolveReport solve_l1_qp(const EqQP& p, double lambda, const std::vector<bool>& selected,
                        const SolverOptions& opt = {});

/// Scaled residuals of a candidate point, shared by both solvers and the tests.
/// `nu` receives the least-squares equality multipliers.
struct KktCheck {
    double constraint = 0.0;
    double optimality = 0.0;
    Vector nu;
};

KktCheck check_l1_kkt(const EqQP& p, double lambda, const std::vector<bool>& selected, const Vector& z,
                      double zero_tol = 1e-9);

double l1_objective(const EqQP& p, double lambda, const std::vector<bool>& selected, const Vector& z);

}  // namespace ddctrl
