#include "ddctrl/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

namespace ddctrl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRankTol = 1e-10;

double inf_norm(const Vector& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }
double inf_norm(const Matrix& M) { return M.size() ? M.cwiseAbs().rowwise().sum().maxCoeff() : 0.0; }

Vector expand_bound(const Vector& v, Index n, double fill) {
    return v.size() ? v : Vector::Constant(n, fill);
}

// Rows of A that survive rank-revealing QR of A', with the matching entries of b.
struct IndependentRows {
    Matrix A;
    Vector b;
};

IndependentRows independent_rows(const Matrix& A, const Vector& b) {
    IndependentRows out;
    if (A.rows() == 0) {
        out.A.resize(0, A.cols());
        out.b.resize(0);
        return out;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(A.transpose());
    qr.setThreshold(kRankTol);
    const Index r = qr.rank();
    const auto& perm = qr.colsPermutation().indices();
    out.A.resize(r, A.cols());
    out.b.resize(r);
    for (Index i = 0; i < r; ++i) {
        out.A.row(i) = A.row(perm(i));
        out.b(i) = b(perm(i));
    }
    return out;
}

// Solves H t = -c for symmetric PSD H. Jacobi-equilibrated LDLT first; an
// eigen-decomposition pseudo-inverse when H is singular.
Vector solve_reduced(const Matrix& H, const Vector& c) {
    const Index k = H.rows();
    if (k == 0) return Vector(0);
    // Jacobi scaling; numerically zero diagonal entries of the Gram-type H are
    // not amplified so that the rank cut below still sees them as zero.
    const double dmax = std::max(H.diagonal().maxCoeff(), 0.0);
    Vector s(k);
    for (Index i = 0; i < k; ++i) {
        const double d = H(i, i);
        s(i) = d > kRankTol * kRankTol * dmax ? 1.0 / std::sqrt(d) : (dmax > 0.0 ? 1.0 / std::sqrt(dmax) : 1.0);
    }
    const Matrix Hs = s.asDiagonal() * H * s.asDiagonal();
    const Vector cs = s.cwiseProduct(c);

    Eigen::LDLT<Matrix> ldlt(Hs);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        const Vector D = ldlt.vectorD();
        const double dmax = D.cwiseAbs().maxCoeff();
        if (D.minCoeff() > 1e-12 * dmax) {
            const Vector ts = ldlt.solve(-cs);
            const double res = inf_norm(Vector(Hs * ts + cs));
            if (std::isfinite(res) && res <= 1e-9 * (inf_norm(cs) + inf_norm(Hs) * inf_norm(ts)) + 1e-300) {
                return s.cwiseProduct(ts);
            }
        }
    }

    Eigen::SelfAdjointEigenSolver<Matrix> eig(Hs);
    const Vector ev = eig.eigenvalues();
    const Matrix& V = eig.eigenvectors();
    const double emax = std::max(std::abs(ev.minCoeff()), std::abs(ev.maxCoeff()));
    const double cut = kRankTol * emax;
    if (ev.minCoeff() < -1e-8 * emax) {
        throw Error(ErrorKind::unbounded, "reduced Hessian is indefinite: the objective is unbounded below");
    }
    const Vector vc = V.transpose() * cs;
    Vector ts = Vector::Zero(k);
    double null_part = 0.0;
    for (Index i = 0; i < k; ++i) {
        if (ev(i) > cut) {
            ts -= V.col(i) * (vc(i) / ev(i));
        } else {
            null_part = std::max(null_part, std::abs(vc(i)));
        }
    }
    if (null_part > 1e-8 * std::max(1.0, inf_norm(cs))) {
        throw Error(ErrorKind::unbounded, "linear term has a component along a flat feasible direction", null_part);
    }
    return s.cwiseProduct(ts);
}

struct EqSolution {
    Vector z;
    Vector nu;
};

// Null-space method for min 0.5 z'Qz + q'z s.t. Az = b.
EqSolution solve_equality(const Matrix& Q, const Vector& q, const Matrix& A, const Vector& b) {
    const Index n = Q.rows();
    EqSolution out;
    if (A.rows() == 0) {
        out.z = solve_reduced(Q, q);
        out.nu.resize(0);
        return out;
    }

    Eigen::ColPivHouseholderQR<Matrix> qr(A.transpose());
    qr.setThreshold(kRankTol);
    const Index r = qr.rank();
    const auto& P = qr.colsPermutation();
    const Vector bp = P.transpose() * b;

    Vector z0 = Vector::Zero(n);
    Matrix Qf;
    if (r > 0) {
        Qf = qr.householderQ();
        const auto R1 = qr.matrixR().topLeftCorner(r, r).triangularView<Eigen::Upper>();
        const Vector s = R1.transpose().solve(bp.head(r));
        z0 = Qf.leftCols(r) * s;
    } else {
        Qf = Matrix::Identity(n, n);
    }
    const double infeas = inf_norm(Vector(A * z0 - b));
    if (infeas > 1e-8 * (inf_norm(b) + inf_norm(A) * inf_norm(z0)) + 1e-14) {
        throw Error(ErrorKind::infeasible,
                    "equality constraints are inconsistent (residual " + std::to_string(infeas) + ")", infeas);
    }

    const Matrix Z = Qf.rightCols(n - r);
    const Matrix QZ = Q * Z;
    const Matrix H = Z.transpose() * QZ;
    const Vector c = Z.transpose() * (Q * z0 + q);
    const Vector t = solve_reduced(H, c);
    out.z = z0 + Z * t;

    // A' nu = -(Qz + q) on the independent rows; redundant rows get zero.
    const Vector grad = Q * out.z + q;
    Vector mu = Vector::Zero(A.rows());
    if (r > 0) {
        const auto R1 = qr.matrixR().topLeftCorner(r, r).triangularView<Eigen::Upper>();
        mu.head(r) = R1.solve(Vector(-(Qf.leftCols(r).transpose() * grad)));
    }
    out.nu = P * mu;
    return out;
}

double quad_objective(const EqQP& p, const Vector& z) { return 0.5 * z.dot(p.Q * z) + p.q.dot(z); }

SolveReport finish_report(const EqQP& p, Vector z, double lambda, const std::vector<bool>& selected,
                          double zero_tol, const SolverOptions& opt, int iterations) {
    SolveReport rep;
    const KktCheck chk = check_l1_kkt(p, lambda, selected, z, zero_tol);
    rep.objective = l1_objective(p, lambda, selected, z);
    rep.z = std::move(z);
    rep.nu = chk.nu;
    rep.constraint_residual = chk.constraint;
    rep.optimality_residual = chk.optimality;
    rep.iterations = iterations;
    rep.converged = chk.constraint <= opt.feas_tol && chk.optimality <= opt.opt_tol;
    return rep;
}

// Fixes coordinates where `fixed_value` is finite and solves the remaining
// equality QP with an extra linear term.
Vector solve_with_fixed(const EqQP& p, const Vector& fixed_value, const Vector& extra_linear) {
    const Index n = p.size();
    std::vector<Index> free_idx;
    std::vector<Index> fix_idx;
    for (Index i = 0; i < n; ++i) {
        (std::isfinite(fixed_value(i)) ? fix_idx : free_idx).push_back(i);
    }
    Vector z = Vector::Zero(n);
    Vector zF(static_cast<Index>(fix_idx.size()));
    for (std::size_t k = 0; k < fix_idx.size(); ++k) {
        zF(static_cast<Index>(k)) = fixed_value(fix_idx[k]);
        z(fix_idx[k]) = fixed_value(fix_idx[k]);
    }
    if (free_idx.empty()) return z;

    const Index nf = static_cast<Index>(free_idx.size());
    Matrix Qff(nf, nf);
    Vector qf(nf);
    Matrix Af(p.A.rows(), nf);
    Vector bf = p.b;
    for (Index a = 0; a < nf; ++a) {
        const Index i = free_idx[static_cast<std::size_t>(a)];
        for (Index c = 0; c < nf; ++c) Qff(a, c) = p.Q(i, free_idx[static_cast<std::size_t>(c)]);
        double lin = p.q(i) + extra_linear(i);
        for (std::size_t k = 0; k < fix_idx.size(); ++k) lin += p.Q(i, fix_idx[k]) * zF(static_cast<Index>(k));
        qf(a) = lin;
        Af.col(a) = p.A.col(i);
    }
    for (std::size_t k = 0; k < fix_idx.size(); ++k) bf -= p.A.col(fix_idx[k]) * zF(static_cast<Index>(k));

    const EqSolution sol = solve_equality(Qff, qf, Af, bf);
    for (Index a = 0; a < nf; ++a) z(free_idx[static_cast<std::size_t>(a)]) = sol.z(a);
    return z;
}

// Primal-dual active set on the box; falls back to one change per iteration
// once an active set repeats.
SolveReport solve_boxed(const EqQP& p, const SolverOptions& opt) {
    const Index n = p.size();
    const Vector lo = expand_bound(p.lo, n, -kInf);
    const Vector hi = expand_bound(p.hi, n, kInf);
    const std::vector<bool> none(static_cast<std::size_t>(n), false);
    const Vector zero_linear = Vector::Zero(n);

    std::vector<int> state(static_cast<std::size_t>(n), 0);
    Vector z;
    try {
        z = solve_equality(p.Q, p.q, p.A, p.b).z;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::unbounded) throw;
        z = Vector::Zero(n);
        for (Index i = 0; i < n; ++i) {
            if (std::isfinite(lo(i))) state[static_cast<std::size_t>(i)] = -1;
            else if (std::isfinite(hi(i))) state[static_cast<std::size_t>(i)] = 1;
        }
    }

    const double scale = 1.0 + inf_norm(p.q);
    std::set<std::vector<int>> seen;
    bool single_change = false;
    const int max_outer = std::max(opt.max_iter, 1);
    for (int it = 1; it <= max_outer; ++it) {
        const double btol = opt.feas_tol * (1.0 + inf_norm(z));
        std::vector<std::pair<double, Index>> changes;
        for (Index i = 0; i < n; ++i) {
            if (state[static_cast<std::size_t>(i)] != 0) continue;
            if (z(i) < lo(i) - btol) changes.push_back({lo(i) - z(i), i});
            else if (z(i) > hi(i) + btol) changes.push_back({z(i) - hi(i), i});
        }
        if (it > 1) {
            const KktCheck chk = check_l1_kkt(p, 0.0, none, z);
            const Vector r = p.Q * z + p.q + (p.A.rows() ? Vector(p.A.transpose() * chk.nu) : Vector::Zero(n));
            for (Index i = 0; i < n; ++i) {
                const int s = state[static_cast<std::size_t>(i)];
                if (s == -1 && r(i) < -opt.opt_tol * scale) changes.push_back({-r(i), i});
                if (s == 1 && r(i) > opt.opt_tol * scale) changes.push_back({r(i), i});
            }
        }
        if (changes.empty() && it > 1) return finish_report(p, z, 0.0, none, 0.0, opt, it - 1);
        // A pattern whose fixed values leave Az = b unsolvable is skipped.
        auto pattern_solution = [&](const std::vector<int>& st) -> std::optional<Vector> {
            Vector fixed = Vector::Constant(n, kInf);
            for (Index i = 0; i < n; ++i) {
                const int s = st[static_cast<std::size_t>(i)];
                if (s == -1) fixed(i) = lo(i);
                if (s == 1) fixed(i) = hi(i);
            }
            try {
                Vector zz = solve_with_fixed(p, fixed, zero_linear);
                const double res = inf_norm(Vector(p.A * zz - p.b));
                if (res > 1e-8 * (1.0 + inf_norm(p.b) + inf_norm(p.A) * inf_norm(zz))) return std::nullopt;
                return zz;
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::infeasible) throw;
                return std::nullopt;
            }
        };
        auto toggled = [&](std::vector<int> st, Index i) {
            int& s = st[static_cast<std::size_t>(i)];
            s = s != 0 ? 0 : (z(i) < lo(i) ? -1 : 1);
            return st;
        };

        std::optional<Vector> next;
        if (!single_change) {
            std::vector<int> st = state;
            for (const auto& c : changes) st = toggled(st, c.second);
            if (seen.insert(st).second) {
                next = pattern_solution(st);
                if (next) state = st;
            }
            if (!next) single_change = true;
        }
        if (!next) {
            std::sort(changes.rbegin(), changes.rend());
            for (const auto& c : changes) {
                std::vector<int> st = toggled(state, c.second);
                next = pattern_solution(st);
                if (next) {
                    state = st;
                    seen.insert(st);
                    break;
                }
            }
        }
        if (!next) return finish_report(p, z, 0.0, none, 0.0, opt, it);
        z = *next;
    }
    return finish_report(p, z, 0.0, none, 0.0, opt, max_outer);
}

}  // namespace

void EqQP::validate() const {
    const Index n = Q.rows();
    if (Q.cols() != n || q.size() != n || A.cols() != n || b.size() != A.rows()) {
        throw Error(ErrorKind::dimension_mismatch, "QP data have incompatible shapes");
    }
    if ((lo.size() && lo.size() != n) || (hi.size() && hi.size() != n)) {
        throw Error(ErrorKind::dimension_mismatch, "QP bounds have the wrong length");
    }
    const double qn = Q.norm();
    if ((Q - Q.transpose()).norm() > 1e-12 * qn) {
        throw Error(ErrorKind::invalid_argument, "QP Hessian is not symmetric");
    }
    for (Index i = 0; i < lo.size() && i < hi.size(); ++i) {
        if (lo(i) > hi(i)) throw Error(ErrorKind::infeasible, "empty box: lo > hi at index " + std::to_string(i));
    }
}

Matrix pseudo_inverse(const Matrix& A, double tol) {
    if (A.size() == 0) return Matrix::Zero(A.cols(), A.rows());
    Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double cut = s.size() ? tol * s(0) : 0.0;
    Vector inv = Vector::Zero(s.size());
    for (Index i = 0; i < s.size(); ++i) {
        if (s(i) > cut) inv(i) = 1.0 / s(i);
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix least_squares(const Matrix& A, const Matrix& B, double tol) {
    if (A.rows() != B.rows()) throw Error(ErrorKind::dimension_mismatch, "least squares: row counts differ");
    if (A.size() == 0) return Matrix::Zero(A.cols(), B.cols());
    Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double cut = s.size() ? tol * s(0) : 0.0;
    Index r = 0;
    while (r < s.size() && s(r) > cut) ++r;
    const Matrix UtB = svd.matrixU().leftCols(r).transpose() * B;
    return svd.matrixV().leftCols(r) * (s.head(r).cwiseInverse().asDiagonal() * UtB);
}

RowSpaceBasis row_space_basis(const Matrix& M, double tol) {
    if (M.size() == 0) throw Error(ErrorKind::invalid_argument, "row space of an empty matrix");
    Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    const double cut = s.size() ? tol * s(0) : 0.0;
    RowSpaceBasis out;
    out.V = svd.matrixV();
    while (out.rank < s.size() && s(out.rank) > cut) ++out.rank;
    return out;
}

Projector row_space_projector(const Matrix& M, double tol) {
    const RowSpaceBasis basis = row_space_basis(M, tol);
    const auto Vr = basis.V.leftCols(basis.rank);
    Projector out;
    out.row_space = Vr * Vr.transpose();
    out.row_space = 0.5 * (out.row_space + out.row_space.transpose()).eval();
    out.kernel = Matrix::Identity(M.cols(), M.cols()) - out.row_space;
    return out;
}

double l1_objective(const EqQP& p, double lambda, const std::vector<bool>& selected, const Vector& z) {
    double obj = quad_objective(p, z);
    for (Index i = 0; i < z.size(); ++i) {
        if (selected.size() > static_cast<std::size_t>(i) && selected[static_cast<std::size_t>(i)]) {
            obj += lambda * std::abs(z(i));
        }
    }
    return obj;
}

KktCheck check_l1_kkt(const EqQP& p, double lambda, const std::vector<bool>& selected, const Vector& z,
                      double zero_tol) {
    const Index n = p.size();
    const Vector lo = expand_bound(p.lo, n, -kInf);
    const Vector hi = expand_bound(p.hi, n, kInf);
    KktCheck out;

    double viol = p.A.rows() ? inf_norm(Vector(p.A * z - p.b)) : 0.0;
    for (Index i = 0; i < n; ++i) viol = std::max({viol, lo(i) - z(i), z(i) - hi(i)});
    out.constraint = viol / (1.0 + inf_norm(p.b));

    // Allowed set for -(Qz + q + A'nu)_i: subdifferential of the l1 term plus
    // the normal cone of the box.
    const Vector grad = p.Q * z + p.q;
    Vector lower(n), upper(n);
    std::vector<Index> exact;
    const double ztol = zero_tol * (1.0 + inf_norm(z));
    for (Index i = 0; i < n; ++i) {
        const bool sel = i < static_cast<Index>(selected.size()) && selected[static_cast<std::size_t>(i)];
        double a = 0.0, b = 0.0;
        if (sel) {
            if (z(i) > ztol) a = b = lambda;
            else if (z(i) < -ztol) a = b = -lambda;
            else a = -lambda, b = lambda;
        }
        const bool at_lo = std::isfinite(lo(i)) && z(i) <= lo(i) + ztol;
        const bool at_hi = std::isfinite(hi(i)) && z(i) >= hi(i) - ztol;
        if (at_lo) a = -kInf;
        if (at_hi) b = kInf;
        lower(i) = a;
        upper(i) = b;
        if (a == b) exact.push_back(i);
    }

    out.nu = Vector::Zero(p.A.rows());
    if (p.A.rows() > 0 && !exact.empty()) {
        const Index ne = static_cast<Index>(exact.size());
        Matrix AtE(ne, p.A.rows());
        Vector rhs(ne);
        for (Index k = 0; k < ne; ++k) {
            const Index i = exact[static_cast<std::size_t>(k)];
            AtE.row(k) = p.A.col(i).transpose();
            rhs(k) = -(grad(i) + lower(i));
        }
        out.nu = Eigen::CompleteOrthogonalDecomposition<Matrix>(AtE).solve(rhs);
    }
    const Vector r = p.A.rows() ? Vector(grad + p.A.transpose() * out.nu) : grad;
    double dist = 0.0;
    for (Index i = 0; i < n; ++i) {
        const double v = -r(i);
        dist = std::max({dist, lower(i) - v, v - upper(i)});
    }
    out.optimality = dist / (1.0 + std::max(inf_norm(p.q), lambda));
    return out;
}

SolveReport solve_eq_qp(const EqQP& p, const SolverOptions& opt) {
    p.validate();
    if (p.has_bounds()) return solve_boxed(p, opt);

    const EqSolution sol = solve_equality(p.Q, p.q, p.A, p.b);
    SolveReport rep;
    rep.z = sol.z;
    rep.nu = sol.nu;
    rep.objective = quad_objective(p, sol.z);
    rep.constraint_residual = p.A.rows() ? inf_norm(Vector(p.A * sol.z - p.b)) / (1.0 + inf_norm(p.b)) : 0.0;
    const Vector r = p.A.rows() ? Vector(p.Q * sol.z + p.q + p.A.transpose() * sol.nu) : Vector(p.Q * sol.z + p.q);
    rep.optimality_residual = inf_norm(r) / (1.0 + inf_norm(p.q));
    rep.iterations = 1;
    rep.converged = rep.constraint_residual <= opt.feas_tol && rep.optimality_residual <= opt.opt_tol;
    return rep;
}

namespace {

class AdmmSystem {
public:
    AdmmSystem(const Matrix& Q, const Matrix& A, double rho) : Q_(Q), A_(A) { factor(rho); }

    void factor(double rho) {
        Matrix K = Q_;
        K.diagonal().array() += rho;
        llt_.compute(K);
        if (llt_.info() != Eigen::Success) {
            throw Error(ErrorKind::invalid_argument, "Q + rho I is not positive definite (Q not PSD?)");
        }
        if (A_.rows() > 0) {
            const Matrix W = llt_.matrixL().solve(A_.transpose());
            schur_.compute(W.transpose() * W);
        }
    }

    // argmin 0.5 x'Qx + q'x + rho/2 ||x - v||^2  s.t. Ax = b, with rhs = -q + rho v.
    Vector solve(const Vector& rhs, const Vector& b) const {
        Vector x = llt_.solve(rhs);
        if (A_.rows() > 0) {
            const Vector nu = schur_.solve(Vector(A_ * x - b));
            x -= llt_.solve(Vector(A_.transpose() * nu));
        }
        return x;
    }

private:
    const Matrix& Q_;
    const Matrix& A_;
    Eigen::LLT<Matrix> llt_;
    Eigen::LDLT<Matrix> schur_;
};

}  // namespace

SolveReport solve_l1_qp(const EqQP& p, double lambda, const std::vector<bool>& selected, const SolverOptions& opt) {
    p.validate();
    const Index n = p.size();
    if (!(lambda >= 0.0)) throw Error(ErrorKind::invalid_argument, "lambda must be nonnegative");
    if (static_cast<Index>(selected.size()) != n) {
        throw Error(ErrorKind::dimension_mismatch, "l1 selector length differs from the variable count");
    }
    const bool any_sel = std::any_of(selected.begin(), selected.end(), [](bool b) { return b; });
    if (lambda == 0.0 || !any_sel) {
        SolveReport rep = solve_eq_qp(p, opt);
        rep.objective = l1_objective(p, lambda, selected, rep.z);
        return rep;
    }

    const Vector lo = expand_bound(p.lo, n, -kInf);
    const Vector hi = expand_bound(p.hi, n, kInf);
    const IndependentRows rows = independent_rows(p.A, p.b);
    {
        // Feasibility certificate before iterating.
        const Vector z0 = rows.A.rows() ? Vector(least_squares(rows.A, Matrix(rows.b)).col(0)) : Vector(Vector::Zero(n));
        const double infeas = p.A.rows() ? inf_norm(Vector(p.A * z0 - p.b)) : 0.0;
        if (infeas > 1e-8 * (inf_norm(p.b) + inf_norm(p.A) * inf_norm(z0)) + 1e-14) {
            throw Error(ErrorKind::infeasible, "equality constraints are inconsistent", infeas);
        }
    }

    double rho = opt.rho;
    AdmmSystem sys(p.Q, rows.A, rho);
    Vector z = Vector::Zero(n);
    Vector u = Vector::Zero(n);
    Vector x = Vector::Zero(n);
    SolveReport best;
    best.objective = kInf;

    auto prox = [&](const Vector& v) {
        Vector out(n);
        const double t = lambda / rho;
        for (Index i = 0; i < n; ++i) {
            double w = v(i);
            if (selected[static_cast<std::size_t>(i)]) {
                w = w > t ? w - t : (w < -t ? w + t : 0.0);
            }
            out(i) = std::clamp(w, lo(i), hi(i));
        }
        return out;
    };

    // Support pattern of the consensus copy: 0 zero, +-1 sign, +-2 on a bound.
    auto pattern = [&](const Vector& v) {
        std::vector<signed char> pat(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) {
            signed char s = 0;
            if (v(i) == lo(i)) s = -2;
            else if (v(i) == hi(i)) s = 2;
            else if (selected[static_cast<std::size_t>(i)]) s = v(i) > 0 ? 1 : (v(i) < 0 ? -1 : 0);
            else s = 3;
            pat[static_cast<std::size_t>(i)] = s;
        }
        return pat;
    };

    auto polish = [&](const std::vector<signed char>& pat, SolveReport& out) {
        Vector fixed = Vector::Constant(n, kInf);
        Vector extra = Vector::Zero(n);
        for (Index i = 0; i < n; ++i) {
            const signed char s = pat[static_cast<std::size_t>(i)];
            if (s == 0) fixed(i) = 0.0;
            else if (s == -2) fixed(i) = lo(i);
            else if (s == 2) fixed(i) = hi(i);
            else if (s == 1 || s == -1) extra(i) = lambda * s;
        }
        Vector zp;
        try {
            zp = solve_with_fixed(p, fixed, extra);
        } catch (const Error&) {
            return false;
        }
        for (Index i = 0; i < n; ++i) {
            const signed char s = pat[static_cast<std::size_t>(i)];
            if ((s == 1 && zp(i) < 0.0) || (s == -1 && zp(i) > 0.0)) return false;
        }
        SolveReport rep = finish_report(p, zp, lambda, selected, 0.0, opt, 0);
        if (!rep.converged) return false;
        out = std::move(rep);
        return true;
    };

    std::vector<signed char> last_pattern;
    std::vector<signed char> polished_pattern;
    int stable = 0;
    const int check_every = 25;
    int it = 0;
    for (it = 1; it <= opt.max_iter; ++it) {
        x = sys.solve(Vector(-p.q + rho * (z - u)), rows.b);
        const Vector z_old = z;
        z = prox(Vector(x + u));
        u += x - z;

        // Incumbent: the best iterate that satisfies Ax = b and the box.
        if (((x - lo).array() >= -opt.feas_tol).all() && ((hi - x).array() >= -opt.feas_tol).all()) {
            const double f = l1_objective(p, lambda, selected, x);
            if (f < best.objective) {
                best.objective = f;
                best.z = x;
            }
        }
        if (opt.log_objective) best.objective_log.push_back(best.objective);

        auto pat = pattern(z);
        if (pat == last_pattern) {
            ++stable;
        } else {
            stable = 0;
            last_pattern = std::move(pat);
        }

        const double r_prim = inf_norm(Vector(x - z));
        const double r_dual = rho * inf_norm(Vector(z - z_old));
        const double eps_prim = opt.feas_tol * std::max({1.0, inf_norm(x), inf_norm(z)});
        const double eps_dual = opt.opt_tol * std::max(1.0, rho * inf_norm(u));
        const bool admm_done = r_prim <= eps_prim && r_dual <= eps_dual;

        if ((stable >= 50 || admm_done) && last_pattern != polished_pattern) {
            polished_pattern = last_pattern;
            SolveReport rep;
            if (polish(last_pattern, rep)) {
                rep.iterations = it;
                rep.objective_log = std::move(best.objective_log);
                return rep;
            }
        }
        if (admm_done) break;

        if (it % check_every == 0) {
            const double ratio = (r_prim / eps_prim) / std::max(r_dual / eps_dual, 1e-300);
            if (ratio > 10.0) {
                rho *= 2.0;
                u /= 2.0;
                sys.factor(rho);
            } else if (ratio < 0.1) {
                rho /= 2.0;
                u *= 2.0;
                sys.factor(rho);
            }
        }
    }
    SolveReport rep = finish_report(p, best.z.size() ? best.z : x, lambda, selected, opt.feas_tol, opt,
                                    std::min(it, opt.max_iter));
    rep.objective_log = std::move(best.objective_log);
    return rep;
}

}  // namespace ddctrl
