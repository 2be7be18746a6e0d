#include "ddctrl/indirect.hpp"

#include <algorithm>
#include <string>

#include <Eigen/SVD>

namespace ddctrl {

namespace {

Vector past_vector(const Trajectory& w_ini) {
    Vector v(w_ini.length() * w_ini.channels());
    v << w_ini.stacked_inputs(), w_ini.stacked_outputs();
    return v;
}

}  // namespace

Vector SpcPredictor::free_response(const Trajectory& w_ini) const {
    if (w_ini.length() != tini || w_ini.inputs() != inputs || w_ini.outputs() != outputs) {
        throw Error(ErrorKind::dimension_mismatch, "w_ini does not match the predictor");
    }
    return Kp() * past_vector(w_ini);
}

Vector SpcPredictor::predict(const Trajectory& w_ini, const Vector& u) const {
    if (u.size() != inputs * horizon) throw Error(ErrorKind::dimension_mismatch, "future input has the wrong length");
    return free_response(w_ini) + Kf() * u;
}

SpcPredictor fit_spc_predictor(const HankelPartition& part) {
    if (part.cols() < 1) throw Error(ErrorKind::invalid_argument, "empty Hankel partition");
    SpcPredictor pred;
    pred.tini = part.tini;
    pred.horizon = part.horizon;
    pred.inputs = part.inputs;
    pred.outputs = part.outputs;
    pred.K = least_squares(part.regressor().transpose(), part.Yf.transpose()).transpose();
    return pred;
}

SpcPredictor truncate_rank(SpcPredictor pred, Index n) {
    if (n < 0) throw Error(ErrorKind::invalid_argument, "rank must be nonnegative");
    const Matrix Kp = pred.Kp();
    Eigen::BDCSVD<Matrix> svd(Kp, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Index k = std::min<Index>(n, svd.singularValues().size());
    pred.K.leftCols(pred.past_cols()) = svd.matrixU().leftCols(k) * svd.singularValues().head(k).asDiagonal() *
                                        svd.matrixV().leftCols(k).transpose();
    pred.rank_truncated = true;
    return pred;
}

SpcPredictor enforce_causality(SpcPredictor pred) {
    const Index m = pred.inputs;
    const Index p = pred.outputs;
    const Index off = pred.past_cols();
    for (Index i = 0; i < pred.horizon; ++i) {
        for (Index j = i + 1; j < pred.horizon; ++j) pred.K.block(i * p, off + j * m, p, m).setZero();
    }
    pred.causal = true;
    return pred;
}

ControlResult solve_spc_control(const SpcPredictor& pred, const Trajectory& w_ini, const ControlSpec& spec,
                                const SolverOptions& opt) {
    if (spec.tini != pred.tini || spec.horizon != pred.horizon) {
        throw Error(ErrorKind::dimension_mismatch, "predictor horizons differ from the control specification");
    }
    return solve_prediction_control(pred.Kf(), pred.free_response(w_ini), spec, opt);
}

StateSpaceModel subspace_id(const Trajectory& w_d, Index n, Index tini, Index horizon) {
    const Index m = w_d.inputs();
    const Index p = w_d.outputs();
    if (n < 1) throw Error(ErrorKind::invalid_argument, "model order must be positive");
    if (p < 1) throw Error(ErrorKind::identifiability, "identification needs at least one output");
    if (horizon < 2) throw Error(ErrorKind::identifiability, "identification needs L >= 2 for the shift fit");
    const HankelPartition part = partition_past_future(w_d, tini, horizon);
    const Index rows = part.Up.rows() + part.Yp.rows() + part.Uf.rows();
    if (part.cols() < rows) {
        throw Error(ErrorKind::identifiability, "not enough data: " + std::to_string(part.cols()) +
                                                    " Hankel columns for " + std::to_string(rows) + " regressors");
    }
    const Index max_order = std::min(p * horizon, (m + p) * tini);
    if (n > max_order) {
        throw Error(ErrorKind::identifiability, "order " + std::to_string(n) + " exceeds rank bound " +
                                                    std::to_string(max_order) + " of Kp");
    }

    const SpcPredictor pred = fit_spc_predictor(part);
    Eigen::BDCSVD<Matrix> svd(pred.Kp(), Eigen::ComputeThinU);
    const Vector& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) throw Error(ErrorKind::identifiability, "past-to-future map is zero");
    const Matrix O = svd.matrixU().leftCols(n) * s.head(n).cwiseSqrt().asDiagonal();

    StateSpaceModel model;
    model.order = n;
    model.C = O.topRows(p);
    const Index k = p * (horizon - 1);
    model.A = least_squares(O.topRows(k), O.bottomRows(k));

    // y = Phi (x0; vec B; vec D), each regressor column simulated with A, C.
    const Index T = w_d.length();
    const Matrix& u = w_d.samples();
    const Index nparams = n + n * m + p * m;
    Matrix Phi = Matrix::Zero(T * p, nparams);
    for (Index i = 0; i < n; ++i) {
        Vector x = Vector::Unit(n, i);
        for (Index t = 0; t < T; ++t) {
            Phi.block(t * p, i, p, 1) = model.C * x;
            x = model.A * x;
        }
    }
    for (Index j = 0; j < m; ++j) {
        for (Index i = 0; i < n; ++i) {
            const Index col = n + j * n + i;
            Vector x = Vector::Zero(n);
            for (Index t = 0; t < T; ++t) {
                Phi.block(t * p, col, p, 1) = model.C * x;
                x = model.A * x;
                x(i) += u(t, j);
            }
        }
        for (Index r = 0; r < p; ++r) {
            const Index col = n + n * m + j * p + r;
            for (Index t = 0; t < T; ++t) Phi(t * p + r, col) = u(t, j);
        }
    }
    const Vector y = w_d.stacked_outputs();
    const Vector theta = least_squares(Phi, Matrix(y)).col(0);
    model.B = Eigen::Map<const Matrix>(theta.data() + n, n, m);
    model.D = Eigen::Map<const Matrix>(theta.data() + n + n * m, p, m);
    const Index lag = observability_index(model, 1e-10);
    model.lag = lag < 0 ? n : lag;
    return model;
}

InitialState estimate_state(const StateSpaceModel& model, const Trajectory& w_ini, StateEstimate mode) {
    model.validate();
    const Index tini = w_ini.length();
    if (w_ini.inputs() != model.inputs() || w_ini.outputs() != model.outputs()) {
        throw Error(ErrorKind::dimension_mismatch, "w_ini channels differ from the model");
    }
    const Matrix O = observability_matrix(model, tini);
    if (mode == StateEstimate::strict) {
        if (tini < model.lag) {
            throw Error(ErrorKind::unobservable, "prefix length " + std::to_string(tini) + " is shorter than the lag " +
                                                     std::to_string(model.lag));
        }
        if (model.states() > 0 && numerical_rank(O, 1e-10) < model.states()) {
            throw Error(ErrorKind::unobservable, "state is not observable from a length-" + std::to_string(tini) +
                                                     " prefix");
        }
    }
    const Matrix G = convolution_matrix(model, tini);
    const Vector rhs = w_ini.stacked_outputs() - G * w_ini.stacked_inputs();
    InitialState out;
    out.x_ini = model.states() > 0 ? Vector(least_squares(O, Matrix(rhs)).col(0)) : Vector(0);
    Vector x = out.x_ini;
    for (Index t = 0; t < tini; ++t) x = model.A * x + model.B * w_ini.samples().row(t).head(model.inputs()).transpose();
    out.x_current = x;
    return out;
}

Vector estimate_initial_state(const StateSpaceModel& model, const Trajectory& w_ini) {
    return estimate_state(model, w_ini, StateEstimate::strict).x_ini;
}

ControlResult certainty_equivalence_control(const StateSpaceModel& model, const Trajectory& w_ini,
                                            const ControlSpec& spec, StateEstimate mode, const SolverOptions& opt) {
    const InitialState st = estimate_state(model, w_ini, mode);
    return solve_model_control(model, st.x_current, spec, opt);
}

}  // namespace ddctrl
