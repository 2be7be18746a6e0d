#include "ddctrl/plants.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace ddctrl {

void StateSpaceModel::validate() const {
    const Index n = A.rows();
    if (A.cols() != n || B.rows() != n || C.cols() != n || D.rows() != C.rows() || D.cols() != B.cols()) {
        throw Error(ErrorKind::dimension_mismatch, "state-space matrices have incompatible shapes");
    }
    if (order != n) {
        throw Error(ErrorKind::dimension_mismatch,
                    "declared order " + std::to_string(order) + " differs from A (" + std::to_string(n) + ")");
    }
    if (lag < 0) throw Error(ErrorKind::invalid_argument, "lag must be nonnegative");
}

std::vector<Matrix> StateSpaceModel::markov_parameters(Index count) const {
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(count));
    if (count < 1) return out;
    out.push_back(D);
    Matrix AkB = B;
    for (Index k = 1; k < count; ++k) {
        out.push_back(C * AkB);
        AkB = A * AkB;
    }
    return out;
}

Matrix observability_matrix(const StateSpaceModel& model, Index depth) {
    const Index p = model.outputs();
    Matrix O(p * depth, model.states());
    Matrix CAk = model.C;
    for (Index k = 0; k < depth; ++k) {
        O.middleRows(k * p, p) = CAk;
        CAk = CAk * model.A;
    }
    return O;
}

Matrix convolution_matrix(const StateSpaceModel& model, Index depth) {
    const Index p = model.outputs();
    const Index m = model.inputs();
    const auto h = model.markov_parameters(depth);
    Matrix G = Matrix::Zero(p * depth, m * depth);
    for (Index i = 0; i < depth; ++i) {
        for (Index j = 0; j <= i; ++j) G.block(i * p, j * m, p, m) = h[static_cast<std::size_t>(i - j)];
    }
    return G;
}

Index observability_index(const StateSpaceModel& model, double tol) {
    const Index n = model.states();
    if (n == 0) return 0;
    for (Index k = 1; k <= n; ++k) {
        if (numerical_rank(observability_matrix(model, k), tol) == n) return k;
    }
    return -1;
}

Trajectory simulate_lti(const StateSpaceModel& model, const Vector& x0, const Matrix& u, Vector* final_state) {
    model.validate();
    if (x0.size() != model.states()) throw Error(ErrorKind::dimension_mismatch, "x0 has the wrong size");
    if (u.cols() != model.inputs()) throw Error(ErrorKind::dimension_mismatch, "input has the wrong channel count");
    const Index T = u.rows();
    Matrix y(T, model.outputs());
    Vector x = x0;
    for (Index t = 0; t < T; ++t) {
        const Vector ut = u.row(t).transpose();
        y.row(t) = (model.C * x + model.D * ut).transpose();
        x = model.A * x + model.B * ut;
    }
    if (final_state) *final_state = x;
    return Trajectory(u, std::move(y));
}

StateSpaceModel make_benchmark_plant() {
    // Modal form: 0.938 at +-0.576 rad, 0.549 at +-2.562 rad, and 0.93.
    // Zeros 0.352 +- 0.586i and -0.531 (relative degree 2).
    StateSpaceModel s;
    s.A.resize(5, 5);
    s.A << 0.7866518691407748, -0.5109039408512379, 0, 0, 0,
           0.5109039408512379, 0.7866518691407748, 0, 0, 0,
           0, 0, -0.4593405130360402, -0.3006780555407851, 0,
           0, 0, 0.3006780555407851, -0.4593405130360402, 0,
           0, 0, 0, 0, 0.93;
    s.B.resize(5, 1);
    s.B << 1, 0, 1, 0, 1;
    s.C.resize(1, 5);
    s.C << -0.05478325422691898, 0.0215207183353219, -0.01613299640829378, -0.00165503791018801,
        0.07091625063521276;
    s.D = Matrix::Zero(1, 1);
    s.order = 5;
    s.lag = 5;
    return s;
}

StateSpaceModel make_random_plant(Index order, Index inputs, Index outputs, std::uint64_t seed, double max_radius) {
    if (order < 1 || inputs < 0 || outputs < 1) {
        throw Error(ErrorKind::invalid_argument, "random plant needs order >= 1 and outputs >= 1");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto gauss = [&](Index r, Index c) {
        Matrix M(r, c);
        for (Index j = 0; j < c; ++j) {
            for (Index i = 0; i < r; ++i) M(i, j) = normal(rng);
        }
        return M;
    };

    for (int attempt = 0; attempt < 100; ++attempt) {
        // Block-diagonal real modal form, then a random similarity transform.
        Matrix Am = Matrix::Zero(order, order);
        Index i = 0;
        while (i < order) {
            const double r = (0.2 + 0.8 * unif(rng)) * max_radius;
            if (i + 1 < order && unif(rng) < 0.5) {
                const double th = 0.1 + (3.0 - 0.1) * unif(rng);
                Am(i, i) = r * std::cos(th);
                Am(i, i + 1) = -r * std::sin(th);
                Am(i + 1, i) = r * std::sin(th);
                Am(i + 1, i + 1) = r * std::cos(th);
                i += 2;
            } else {
                Am(i, i) = (unif(rng) < 0.5 ? -1.0 : 1.0) * r;
                i += 1;
            }
        }
        const Matrix S = gauss(order, order) + 2.0 * Matrix::Identity(order, order);
        Eigen::FullPivLU<Matrix> lu(S);
        if (!lu.isInvertible() || lu.rcond() < 1e-3) continue;

        StateSpaceModel s;
        s.A = S * Am * lu.inverse();
        s.B = gauss(order, inputs);
        s.C = gauss(outputs, order);
        s.D = gauss(outputs, inputs);
        s.order = order;
        const Index idx = observability_index(s, 1e-8);
        if (idx < 0) continue;
        Matrix ctrb(order, order * std::max<Index>(inputs, 1));
        if (inputs > 0) {
            Matrix AkB = s.B;
            for (Index k = 0; k < order; ++k) {
                ctrb.middleCols(k * inputs, inputs) = AkB;
                AkB = s.A * AkB;
            }
            if (numerical_rank(ctrb, 1e-8) < order) continue;
        }
        s.lag = idx;
        return s;
    }
    throw Error(ErrorKind::invalid_argument, "could not draw a minimal random plant");
}

Vector LotkaVolterraParams::equilibrium() const {
    Vector xbar(2);
    xbar << c / d, a / b;
    return xbar;
}

void LotkaVolterraParams::validate() const {
    if (!(a > 0 && b > 0 && c > 0 && d > 0 && dt > 0)) {
        throw Error(ErrorKind::invalid_argument, "Lotka-Volterra parameters a, b, c, d, dt must be positive");
    }
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
        throw Error(ErrorKind::invalid_argument, "epsilon must lie in [0, 1]");
    }
}

Vector lotka_volterra_step(const Vector& state, double u, const LotkaVolterraParams& p) {
    const double x1 = state(0);
    const double x2 = state(1);
    const double xb1 = p.c / p.d;
    const double xb2 = p.a / p.b;

    const double nl1 = x1 + p.dt * (p.a * x1 - p.b * x1 * x2);
    const double nl2 = x2 + p.dt * (p.d * x1 * x2 - p.c * x2 + u);

    const double lin1 = x1 + p.dt * ((p.a - p.b * xb2) * (x1 - xb1) - p.b * xb1 * (x2 - xb2));
    const double lin2 = x2 + p.dt * (p.d * xb2 * (x1 - xb1) + (p.d * xb1 - p.c) * (x2 - xb2) + u);

    Vector next(2);
    next << p.epsilon * lin1 + (1.0 - p.epsilon) * nl1, p.epsilon * lin2 + (1.0 - p.epsilon) * nl2;
    return next;
}

StateSpaceModel lotka_volterra_linearization(const LotkaVolterraParams& p) {
    const double xb1 = p.c / p.d;
    const double xb2 = p.a / p.b;
    StateSpaceModel s;
    s.A.resize(2, 2);
    s.A << 1.0 + p.dt * (p.a - p.b * xb2), -p.dt * p.b * xb1,
           p.dt * p.d * xb2, 1.0 + p.dt * (p.d * xb1 - p.c);
    s.B.resize(2, 1);
    s.B << 0.0, p.dt;
    s.C = Matrix::Identity(2, 2);
    s.D = Matrix::Zero(2, 1);
    s.order = 2;
    s.lag = 1;
    return s;
}

Vector lotka_volterra_input(Index T, double dt, double sigma, std::uint64_t seed, Index offset) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector u(T);
    for (Index k = 0; k < T; ++k) {
        const double t = static_cast<double>(k + offset) * dt;
        const double s = std::sin(t) + std::sin(0.1 * t);
        const double v = sigma > 0.0 ? sigma * normal(rng) : 0.0;
        u(k) = 2.0 * s * s + v;
    }
    return u;
}

Trajectory simulate_lotka_volterra(const LotkaVolterraParams& p, const Vector& x0, const Vector& u,
                                   Vector* final_state) {
    p.validate();
    if (x0.size() != 2) throw Error(ErrorKind::dimension_mismatch, "Lotka-Volterra state has two entries");
    const Index T = u.size();
    Matrix y(T, 2);
    Vector x = x0;
    for (Index k = 0; k < T; ++k) {
        y.row(k) = x.transpose();
        x = lotka_volterra_step(x, u(k), p);
    }
    if (final_state) *final_state = x;
    return Trajectory(Matrix(u), std::move(y));
}

Trajectory collect_lv_data(const LotkaVolterraParams& p, const Vector& x0, Index T, double input_sigma,
                           std::uint64_t seed) {
    if (T < 1) throw Error(ErrorKind::invalid_argument, "T must be positive");
    return simulate_lotka_volterra(p, x0, lotka_volterra_input(T, p.dt, input_sigma, seed));
}

}  // namespace ddctrl
