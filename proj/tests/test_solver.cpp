#include "ddctrl/solver.hpp"
#include "oracles.hpp"

#include <Eigen/Eigenvalues>
#include <doctest.h>

using namespace ddctrl;

namespace {

EqQP random_qp(std::mt19937_64& rng, Index n, Index m, Index rank_q) {
    const Matrix R = oracle::gaussian(rng, rank_q, n);
    return EqQP{R.transpose() * R + 1e-3 * Matrix::Identity(n, n), oracle::gaussian(rng, n, 1).col(0),
                oracle::gaussian(rng, m, n), oracle::gaussian(rng, m, 1).col(0), Vector(), Vector()};
}

std::vector<bool> all(Index n) { return std::vector<bool>(static_cast<std::size_t>(n), true); }

}  // namespace

TEST_CASE("least squares examples") {
    std::mt19937_64 rng(1);
    const Matrix B = oracle::gaussian(rng, 4, 2);
    CHECK((least_squares(Matrix::Identity(4, 4), B) - B).norm() <= 1e-14);

    Matrix A(2, 1), b(2, 1);
    A << 1, 1;
    b << 0, 2;
    CHECK(least_squares(A, b)(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("least squares is the minimum-norm normal-equations solution") {
    std::mt19937_64 rng(2);
    for (int k = 0; k < 20; ++k) {
        const Matrix A = oracle::gaussian(rng, 6, 3) * oracle::gaussian(rng, 3, 9);
        const Matrix B = A * oracle::gaussian(rng, 9, 2);
        const Matrix X = least_squares(A, B);
        CHECK((A.transpose() * A * X - A.transpose() * B).norm() <= 1e-10 * (1.0 + (A.transpose() * B).norm()));
        // Minimum norm: X lies in the row space of A.
        const Matrix X_cod = A.completeOrthogonalDecomposition().solve(B);
        CHECK(oracle::rel(X, X_cod) <= 1e-9);
    }
    const Matrix A = oracle::gaussian(rng, 10, 4);
    const Matrix B = oracle::gaussian(rng, 10, 1);
    const Matrix r = A * least_squares(A, B) - B;
    CHECK((A.transpose() * r).norm() <= 1e-10 * A.norm() * B.norm());
}

TEST_CASE("pseudo-inverse Penrose identities") {
    std::mt19937_64 rng(3);
    const Matrix A = oracle::gaussian(rng, 5, 2) * oracle::gaussian(rng, 2, 7);
    const Matrix P = pseudo_inverse(A);
    CHECK(oracle::rel(A * P * A, A) <= 1e-10);
    CHECK(oracle::rel(P * A * P, P) <= 1e-10);
    CHECK(((A * P) - (A * P).transpose()).norm() <= 1e-10);
    CHECK(((P * A) - (P * A).transpose()).norm() <= 1e-10);
}

TEST_CASE("row-space projector examples") {
    Matrix M(1, 2);
    M << 1, 1;
    const Projector P = row_space_projector(M);
    CHECK((P.row_space - Matrix::Constant(2, 2, 0.5)).norm() <= 1e-14);
    CHECK((P.row_space + P.kernel - Matrix::Identity(2, 2)).norm() == 0.0);

    std::mt19937_64 rng(4);
    const Matrix S = oracle::gaussian(rng, 4, 4);
    CHECK((row_space_projector(S).row_space - Matrix::Identity(4, 4)).norm() <= 1e-10);
}

TEST_CASE("row-space projector identities on random matrices") {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 50; ++k) {
        const Index r = 1 + k % 5;
        const Matrix M = oracle::gaussian(rng, 5, r) * oracle::gaussian(rng, r, 8);
        const Projector P = row_space_projector(M);
        CHECK((P.row_space * P.row_space - P.row_space).norm() <= 1e-10);
        CHECK((P.row_space - P.row_space.transpose()).norm() <= 1e-10);
        CHECK((M * P.row_space - M).norm() <= 1e-10 * M.norm());
        CHECK((M * P.kernel).norm() <= 1e-10 * M.norm());
        CHECK((P.row_space + P.kernel - Matrix::Identity(8, 8)).norm() == 0.0);
        const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(P.row_space).eigenvalues();
        for (Index i = 0; i < ev.size(); ++i) CHECK(std::min(std::abs(ev(i)), std::abs(ev(i) - 1.0)) <= 1e-8);
        const RowSpaceBasis B = row_space_basis(M);
        CHECK(B.rank == r);
        CHECK((B.V.transpose() * B.V - Matrix::Identity(8, 8)).norm() <= 1e-10);
    }
}

TEST_CASE("equality QP examples") {
    EqQP p{Matrix::Constant(1, 1, 2.0), Vector::Constant(1, -2.0), Matrix::Ones(1, 1), Vector::Zero(1), Vector(),
           Vector()};
    SolveReport r = solve_eq_qp(p);
    CHECK(r.converged);
    CHECK(r.z(0) == doctest::Approx(0.0));
    // (x - 1)^2 = x^2 - 2x + 1; the constant is outside the QP.
    CHECK(r.objective + 1.0 == doctest::Approx(1.0));

    EqQP s{2.0 * Matrix::Identity(2, 2), Vector::Zero(2), Matrix::Ones(1, 2), Vector::Constant(1, 2.0), Vector(),
           Vector()};
    r = solve_eq_qp(s);
    CHECK(r.z(0) == doctest::Approx(1.0));
    CHECK(r.z(1) == doctest::Approx(1.0));
}

TEST_CASE("equality QP agrees with the full KKT oracle") {
    std::mt19937_64 rng(6);
    for (int k = 0; k < 50; ++k) {
        const EqQP p = random_qp(rng, 10, 4, 10);
        const SolveReport r = solve_eq_qp(p);
        CHECK(r.converged);
        CHECK((p.Q * r.z + p.q + p.A.transpose() * r.nu).norm() <= 1e-8);
        CHECK((p.A * r.z - p.b).norm() <= 1e-10);
        CHECK(oracle::rel(r.z, oracle::kkt_solve(p.Q, p.q, p.A, p.b)) <= 1e-8);
    }
}

TEST_CASE("redundant equality rows are tolerated") {
    std::mt19937_64 rng(7);
    EqQP p = random_qp(rng, 6, 2, 6);
    Matrix A(3, 6);
    A << p.A, p.A.row(0) + p.A.row(1);
    Vector b(3);
    b << p.b, p.b(0) + p.b(1);
    const SolveReport ref = solve_eq_qp(p);
    p.A = A;
    p.b = b;
    const SolveReport r = solve_eq_qp(p);
    CHECK((r.z - ref.z).norm() <= 1e-9);
}

TEST_CASE("infeasible and unbounded problems are reported") {
    EqQP p{Matrix::Identity(2, 2), Vector::Zero(2), Matrix::Zero(2, 2), Vector::Zero(2), Vector(), Vector()};
    p.A << 1, 1, 1, 1;
    p.b << 1, 2;
    try {
        solve_eq_qp(p);
        FAIL("expected infeasible");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::infeasible);
        CHECK(e.residual() > 0.1);
    }
    EqQP u{Matrix::Zero(2, 2), Vector::Ones(2), Matrix::Zero(1, 2), Vector::Zero(1), Vector(), Vector()};
    u.A << 1, -1;
    try {
        solve_eq_qp(u);
        FAIL("expected unbounded");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::unbounded);
    }
}

TEST_CASE("box bounds: active-set result against a brute-force enumeration") {
    std::mt19937_64 rng(8);
    for (int k = 0; k < 20; ++k) {
        const Index n = 4;
        EqQP p = random_qp(rng, n, 1, n);
        p.lo = Vector::Constant(n, -0.3);
        p.hi = Vector::Constant(n, 0.3);
        p.b *= 0.1;
        SolveReport r;
        try {
            r = solve_eq_qp(p);
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::infeasible);
            continue;
        }
        // Enumerate every fix-to-lower / fix-to-upper / free pattern.
        double best = 1e300;
        int patterns = 1;
        for (Index i = 0; i < n; ++i) patterns *= 3;
        for (int code = 0; code < patterns; ++code) {
            int c = code;
            std::vector<Index> free_idx;
            Vector z = Vector::Zero(n);
            for (Index i = 0; i < n; ++i, c /= 3) {
                if (c % 3 == 0) free_idx.push_back(i);
                else z(i) = c % 3 == 1 ? -0.3 : 0.3;
            }
            const Index f = static_cast<Index>(free_idx.size());
            Matrix Qf(f, f), Af(p.A.rows(), f);
            Vector qf(f);
            for (Index a = 0; a < f; ++a) {
                for (Index b2 = 0; b2 < f; ++b2) Qf(a, b2) = p.Q(free_idx[a], free_idx[b2]);
                qf(a) = p.q(free_idx[a]) + (p.Q.row(free_idx[a]) * z)(0);
                Af.col(a) = p.A.col(free_idx[a]);
            }
            const Vector bf = p.b - p.A * z;
            if (f == 0) {
                if ((p.A * z - p.b).norm() > 1e-9) continue;
            } else {
                if (oracle::jacobi_rank(Af, 1e-12) < Af.rows()) continue;
                const Vector zf = oracle::kkt_solve(Qf, qf, Af, bf);
                for (Index a = 0; a < f; ++a) z(free_idx[a]) = zf(a);
            }
            if ((z.array() < -0.3 - 1e-12).any() || (z.array() > 0.3 + 1e-12).any()) continue;
            if ((p.A * z - p.b).norm() > 1e-9) continue;
            best = std::min(best, 0.5 * z.dot(p.Q * z) + p.q.dot(z));
        }
        CHECK(r.objective == doctest::Approx(best).epsilon(1e-8));
    }
}

TEST_CASE("l1 QP: soft threshold and lambda = 0") {
    EqQP p{Matrix::Ones(1, 1), Vector::Constant(1, -3.0), Matrix::Zero(0, 1), Vector::Zero(0), Vector(), Vector()};
    const SolveReport r = solve_l1_qp(p, 1.0, all(1));
    CHECK(r.converged);
    CHECK(r.z(0) == doctest::Approx(2.0).epsilon(1e-9));

    std::mt19937_64 rng(9);
    const EqQP q = random_qp(rng, 8, 3, 8);
    CHECK((solve_l1_qp(q, 0.0, all(8)).z - solve_eq_qp(q).z).norm() <= 1e-8);
}

TEST_CASE("l1 QP satisfies the coordinatewise subgradient condition") {
    std::mt19937_64 rng(10);
    for (int k = 0; k < 50; ++k) {
        const Index n = 4 + k % 7;
        const EqQP p = random_qp(rng, n, 1 + k % 3, k % 2 ? n : n / 2);
        std::vector<bool> sel = all(n);
        if (k % 3 == 0) sel[0] = false;
        const double lambda = 0.1 + 0.2 * (k % 5);
        const SolveReport r = solve_l1_qp(p, lambda, sel);
        CHECK(r.converged);
        // Independent check: nu from the coordinates that are not at zero.
        const Vector grad = p.Q * r.z + p.q;
        std::vector<Index> nz;
        for (Index i = 0; i < n; ++i) {
            if (!sel[static_cast<std::size_t>(i)] || std::abs(r.z(i)) > 1e-9) nz.push_back(i);
        }
        Matrix At(static_cast<Index>(nz.size()), p.A.rows());
        Vector rhs(static_cast<Index>(nz.size()));
        for (std::size_t j = 0; j < nz.size(); ++j) {
            const Index i = nz[j];
            At.row(static_cast<Index>(j)) = p.A.col(i).transpose();
            const double s = sel[static_cast<std::size_t>(i)] ? lambda * (r.z(i) > 0 ? 1.0 : -1.0) : 0.0;
            rhs(static_cast<Index>(j)) = -(grad(i) + s);
        }
        const Vector nu = At.rows() ? Vector(At.completeOrthogonalDecomposition().solve(rhs)) : Vector::Zero(p.A.rows());
        const Vector g = grad + p.A.transpose() * nu;
        double worst = 0.0;
        for (Index i = 0; i < n; ++i) {
            if (!sel[static_cast<std::size_t>(i)]) {
                worst = std::max(worst, std::abs(g(i)));
            } else if (std::abs(r.z(i)) > 1e-9) {
                worst = std::max(worst, std::abs(g(i) + lambda * (r.z(i) > 0 ? 1.0 : -1.0)));
            } else {
                worst = std::max(worst, std::max(0.0, std::abs(g(i)) - lambda));
            }
        }
        CHECK(worst <= 1e-6);
        CHECK(check_l1_kkt(p, lambda, sel, r.z).optimality <= 1e-6);
        CHECK((p.A * r.z - p.b).norm() <= 1e-8);
    }
}

TEST_CASE("l1 QP argmin is invariant to joint scaling") {
    std::mt19937_64 rng(11);
    for (int k = 0; k < 10; ++k) {
        EqQP p = random_qp(rng, 8, 2, 8);
        const SolveReport a = solve_l1_qp(p, 0.5, all(8));
        p.Q *= 7.0;
        p.q *= 7.0;
        const SolveReport b = solve_l1_qp(p, 3.5, all(8));
        CHECK((a.z - b.z).norm() <= 1e-8 * (1.0 + a.z.norm()));
    }
}

TEST_CASE("l1 QP objective log settles monotonically") {
    std::mt19937_64 rng(12);
    SolverOptions opt;
    opt.log_objective = true;
    int violations = 0;
    for (int k = 0; k < 10; ++k) {
        const EqQP p = random_qp(rng, 10, 3, 10);
        const SolveReport r = solve_l1_qp(p, 0.3, all(10), opt);
        REQUIRE(!r.objective_log.empty());
        for (std::size_t i = 6; i < r.objective_log.size(); ++i) {
            if (r.objective_log[i] > r.objective_log[i - 1] + 1e-9 * (1.0 + std::abs(r.objective_log[i - 1]))) {
                ++violations;
            }
        }
    }
    CHECK(violations == 0);
}

TEST_CASE("solvers are deterministic") {
    std::mt19937_64 rng(13);
    const EqQP p = random_qp(rng, 9, 3, 5);
    CHECK(solve_eq_qp(p).z == solve_eq_qp(p).z);
    CHECK(solve_l1_qp(p, 0.2, all(9)).z == solve_l1_qp(p, 0.2, all(9)).z);
}

TEST_CASE("non-converged l1 solve returns a flagged report") {
    std::mt19937_64 rng(14);
    const EqQP p = random_qp(rng, 30, 5, 30);
    SolverOptions opt;
    opt.max_iter = 2;
    const SolveReport r = solve_l1_qp(p, 0.5, all(30), opt);
    CHECK_FALSE(r.converged);
    CHECK(r.z.size() == 30);
}
