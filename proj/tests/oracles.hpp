#pragma once

#include "ddctrl/types.hpp"

#include <Eigen/Dense>

#include <random>
#include <vector>

namespace oracle {

using ddctrl::Index;
using ddctrl::Matrix;
using ddctrl::Vector;

inline Matrix gaussian(std::mt19937_64& rng, Index r, Index c) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix M(r, c);
    for (Index j = 0; j < c; ++j) {
        for (Index i = 0; i < r; ++i) M(i, j) = n(rng);
    }
    return M;
}

// Rank by full-pivoting LU, independent of the SVD used in the library.
inline Index lu_rank(const Matrix& M, double tol) {
    Eigen::FullPivLU<Matrix> lu(M);
    lu.setThreshold(tol);
    return lu.rank();
}

// Rank by one-sided Jacobi SVD with a relative threshold.
inline Index jacobi_rank(const Matrix& M, double tol) {
    Eigen::JacobiSVD<Matrix> svd(M);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    Index r = 0;
    for (Index i = 0; i < s.size(); ++i) r += s(i) > tol * s(0);
    return r;
}

// Textbook recursion x+ = Ax + Bu, y = Cx + Du; returns outputs row per sample.
inline Matrix simulate(const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& D, Vector x, const Matrix& u) {
    Matrix y(u.rows(), C.rows());
    for (Index t = 0; t < u.rows(); ++t) {
        y.row(t) = (C * x + D * u.row(t).transpose()).transpose();
        x = A * x + B * u.row(t).transpose();
    }
    return y;
}

// Solution of the unconstrained equality QP from the full KKT matrix.
inline Vector kkt_solve(const Matrix& Q, const Vector& q, const Matrix& A, const Vector& b) {
    const Index n = Q.rows(), m = A.rows();
    Matrix K = Matrix::Zero(n + m, n + m);
    K.topLeftCorner(n, n) = Q;
    K.topRightCorner(n, m) = A.transpose();
    K.bottomLeftCorner(m, n) = A;
    Vector rhs(n + m);
    rhs << -q, b;
    return K.fullPivLu().solve(rhs).head(n);
}

// Worst violation of the l1 subgradient condition at z, with the multiplier
// fitted by least squares on the coordinates that are free or nonzero.
inline double l1_subgradient_residual(const Matrix& Q, const Vector& q, const Matrix& A, double lambda,
                                      const std::vector<bool>& sel, const Vector& z, double zero_tol = 1e-9) {
    const Index n = z.size();
    const Vector grad = Q * z + q;
    auto sign = [](double v) { return v > 0 ? 1.0 : -1.0; };
    std::vector<Index> nz;
    for (Index i = 0; i < n; ++i) {
        if (!sel[static_cast<std::size_t>(i)] || std::abs(z(i)) > zero_tol) nz.push_back(i);
    }
    Matrix At(static_cast<Index>(nz.size()), A.rows());
    Vector rhs(static_cast<Index>(nz.size()));
    for (std::size_t j = 0; j < nz.size(); ++j) {
        const Index i = nz[j];
        At.row(static_cast<Index>(j)) = A.col(i).transpose();
        rhs(static_cast<Index>(j)) = -(grad(i) + (sel[static_cast<std::size_t>(i)] ? lambda * sign(z(i)) : 0.0));
    }
    const Vector nu = At.rows() && A.rows() ? Vector(At.completeOrthogonalDecomposition().solve(rhs))
                                            : Vector(Vector::Zero(A.rows()));
    const Vector g = grad + A.transpose() * nu;
    double worst = 0.0;
    for (Index i = 0; i < n; ++i) {
        if (!sel[static_cast<std::size_t>(i)]) worst = std::max(worst, std::abs(g(i)));
        else if (std::abs(z(i)) > zero_tol) worst = std::max(worst, std::abs(g(i) + lambda * sign(z(i))));
        else worst = std::max(worst, std::max(0.0, std::abs(g(i)) - lambda));
    }
    return worst;
}

inline double rel(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

}  // namespace oracle
