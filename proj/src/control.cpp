#include "ddctrl/control.hpp"

#include <cmath>
#include <limits>

namespace ddctrl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCostFloor = 1e-9;

}  // namespace

ControlSpec ControlSpec::kron(Index tini, Index horizon, Trajectory reference, const Vector& channel_weights) {
    const Index q = reference.channels();
    if (channel_weights.size() != q) {
        throw Error(ErrorKind::dimension_mismatch, "channel weight count differs from the reference channels");
    }
    Matrix W = Matrix::Zero(q * horizon, q * horizon);
    for (Index t = 0; t < horizon; ++t) W.diagonal().segment(t * q, q) = channel_weights;
    return ControlSpec{tini, horizon, std::move(reference), std::move(W), std::nullopt, std::nullopt};
}

void ControlSpec::validate() const {
    if (tini < 1 || horizon < 1) throw Error(ErrorKind::invalid_argument, "Tini and L must be positive");
    if (reference.length() != horizon) {
        throw Error(ErrorKind::dimension_mismatch, "reference length differs from the horizon L");
    }
    const Index n = channels() * horizon;
    if (weight.rows() != n || weight.cols() != n) {
        throw Error(ErrorKind::dimension_mismatch, "weight must be qL x qL");
    }
    if ((weight - weight.transpose()).norm() > 1e-12 * weight.norm()) {
        throw Error(ErrorKind::invalid_argument, "weight is not symmetric");
    }
    if (weight.isDiagonal()) {
        if (weight.diagonal().minCoeff() < 0.0) throw Error(ErrorKind::invalid_argument, "weight is not PSD");
    } else {
        Eigen::LDLT<Matrix> ldlt(weight);
        if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() < -1e-12 * weight.norm()) {
            throw Error(ErrorKind::invalid_argument, "weight is not PSD");
        }
    }
    if (lower && lower->size() != channels()) throw Error(ErrorKind::dimension_mismatch, "lower bound size");
    if (upper && upper->size() != channels()) throw Error(ErrorKind::dimension_mismatch, "upper bound size");
    if (lower && upper && (lower->array() > upper->array()).any()) {
        throw Error(ErrorKind::invalid_argument, "box bounds define an empty set");
    }
}

double ControlSpec::cost(const Trajectory& w) const {
    if (w.length() != horizon || w.channels() != channels()) {
        throw Error(ErrorKind::dimension_mismatch, "trajectory does not match the control horizon");
    }
    const Vector e = w.stacked() - reference.stacked();
    return e.dot(weight * e);
}

Vector ControlSpec::stacked_lower() const {
    const Index q = channels();
    Vector out = Vector::Constant(q * horizon, -kInf);
    if (lower) {
        for (Index t = 0; t < horizon; ++t) out.segment(t * q, q) = *lower;
    }
    return out;
}

Vector ControlSpec::stacked_upper() const {
    const Index q = channels();
    Vector out = Vector::Constant(q * horizon, kInf);
    if (upper) {
        for (Index t = 0; t < horizon; ++t) out.segment(t * q, q) = *upper;
    }
    return out;
}

Matrix input_selector(Index inputs, Index outputs, Index horizon) {
    const Index q = inputs + outputs;
    Matrix S = Matrix::Zero(q * horizon, inputs * horizon);
    for (Index t = 0; t < horizon; ++t) {
        for (Index c = 0; c < inputs; ++c) S(t * q + c, t * inputs + c) = 1.0;
    }
    return S;
}

Matrix output_selector(Index inputs, Index outputs, Index horizon) {
    const Index q = inputs + outputs;
    Matrix S = Matrix::Zero(q * horizon, outputs * horizon);
    for (Index t = 0; t < horizon; ++t) {
        for (Index c = 0; c < outputs; ++c) S(t * q + inputs + c, t * outputs + c) = 1.0;
    }
    return S;
}

Trajectory ControlResult::trajectory(Index inputs, Index outputs) const {
    const Index L = inputs > 0 ? u.size() / inputs : y.size() / outputs;
    Matrix U(L, inputs);
    Matrix Y(L, outputs);
    for (Index t = 0; t < L; ++t) {
        U.row(t) = u.segment(t * inputs, inputs).transpose();
        Y.row(t) = y.segment(t * outputs, outputs).transpose();
    }
    return Trajectory(std::move(U), std::move(Y));
}

ControlResult solve_prediction_control(const Matrix& F, const Vector& f0, const ControlSpec& spec,
                                       const SolverOptions& opt) {
    spec.validate();
    const Index m = spec.inputs();
    const Index p = spec.outputs();
    const Index L = spec.horizon;
    if (F.rows() != p * L || F.cols() != m * L || f0.size() != p * L) {
        throw Error(ErrorKind::dimension_mismatch, "predictor shape does not match the control horizon");
    }
    const Matrix Su = input_selector(m, p, L);
    const Matrix Sy = output_selector(m, p, L);
    const Vector wr = spec.reference.stacked();
    const Matrix& W = spec.weight;

    ControlResult out;
    EqQP qp;
    if (!spec.has_bounds()) {
        // w = E u + e
        const Matrix E = Su + Sy * F;
        const Vector e = Sy * f0;
        const Matrix WE = W * E;
        qp.Q = 2.0 * E.transpose() * WE;
        qp.Q = 0.5 * (qp.Q + qp.Q.transpose()).eval();
        qp.q = 2.0 * WE.transpose() * (e - wr);
        qp.A.resize(0, m * L);
        qp.b.resize(0);
        out.report = solve_eq_qp(qp, opt);
        out.u = out.report.z;
    } else {
        // z = (u, y) with y - F u = f0 and the box on w.
        Matrix S(Su.rows(), m * L + p * L);
        S << Su, Sy;
        const Matrix WS = W * S;
        qp.Q = 2.0 * S.transpose() * WS;
        qp.Q = 0.5 * (qp.Q + qp.Q.transpose()).eval();
        qp.q = -2.0 * WS.transpose() * wr;
        qp.A.resize(p * L, m * L + p * L);
        qp.A << -F, Matrix::Identity(p * L, p * L);
        qp.b = f0;
        const Vector lo = spec.stacked_lower();
        const Vector hi = spec.stacked_upper();
        qp.lo.resize(m * L + p * L);
        qp.hi.resize(m * L + p * L);
        for (Index t = 0; t < L; ++t) {
            qp.lo.segment(t * m, m) = lo.segment(t * (m + p), m);
            qp.hi.segment(t * m, m) = hi.segment(t * (m + p), m);
            qp.lo.segment(m * L + t * p, p) = lo.segment(t * (m + p) + m, p);
            qp.hi.segment(m * L + t * p, p) = hi.segment(t * (m + p) + m, p);
        }
        out.report = solve_eq_qp(qp, opt);
        out.u = out.report.z.head(m * L);
    }
    out.y = F * out.u + f0;
    out.predicted_cost = spec.cost(out.trajectory(m, p));
    return out;
}

ControlResult solve_model_control(const StateSpaceModel& model, const Vector& x_start, const ControlSpec& spec,
                                  const SolverOptions& opt) {
    model.validate();
    if (model.inputs() != spec.inputs() || model.outputs() != spec.outputs()) {
        throw Error(ErrorKind::dimension_mismatch, "model channels differ from the control specification");
    }
    const Matrix O = observability_matrix(model, spec.horizon);
    const Matrix G = convolution_matrix(model, spec.horizon);
    return solve_prediction_control(G, O * x_start, spec, opt);
}

double error_percentage(double cost, double c_star) {
    if (c_star < kCostFloor) return cost;
    return 100.0 * (cost - c_star) / c_star;
}

}  // namespace ddctrl
