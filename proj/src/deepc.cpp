#include "ddctrl/deepc.hpp"

#include "ddctrl/indirect.hpp"

#include <cmath>
#include <limits>
#include <mutex>

namespace ddctrl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const Vector& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

// Rows of (Uf; Yf) interleaved per sample, inputs first: w = F g.
Matrix future_map(const HankelPartition& P) {
    const Index m = P.inputs;
    const Index p = P.outputs;
    const Index q = m + p;
    Matrix F(q * P.horizon, P.cols());
    for (Index t = 0; t < P.horizon; ++t) {
        F.middleRows(t * q, m) = P.Uf.middleRows(t * m, m);
        F.middleRows(t * q + m, p) = P.Yf.middleRows(t * p, p);
    }
    return F;
}

// F' W F, exploiting a diagonal weight.
Matrix weighted_gram(const Matrix& F, const Matrix& W) {
    if (W.isDiagonal()) return F.transpose() * (W.diagonal().asDiagonal() * F);
    return F.transpose() * (W * F);
}

bool is_l1(const Regularizer& r) {
    return r.kind == Regularizer::Kind::one_norm || r.kind == Regularizer::Kind::hybrid;
}

}  // namespace

void Regularizer::validate() const {
    if (!(lambda >= 0.0) || !(lambda2 >= 0.0) || !std::isfinite(lambda) || !std::isfinite(lambda2)) {
        throw Error(ErrorKind::invalid_argument, "regularization weights must be finite and nonnegative");
    }
}

std::string Regularizer::name() const {
    switch (kind) {
        case Kind::none: return "none";
        case Kind::one_norm: return "one_norm";
        case Kind::two_norm_sq: return "two_norm_sq";
        case Kind::proj_two_norm_sq: return "proj_two_norm_sq";
        case Kind::hybrid: return "hybrid";
    }
    return "none";
}

Regularizer::Kind regularizer_kind_from_string(const std::string& s) {
    if (s == "none") return Regularizer::Kind::none;
    if (s == "one_norm") return Regularizer::Kind::one_norm;
    if (s == "two_norm_sq") return Regularizer::Kind::two_norm_sq;
    if (s == "proj_two_norm_sq") return Regularizer::Kind::proj_two_norm_sq;
    if (s == "hybrid") return Regularizer::Kind::hybrid;
    throw Error(ErrorKind::config, "unknown regularizer '" + s + "'");
}

struct DeepcData::Cache {
    std::once_flag once;
    RowSpaceBasis basis;
};

DeepcData::DeepcData(HankelPartition part)
    : part_(std::make_shared<const HankelPartition>(std::move(part))), cache_(std::make_shared<Cache>()) {
    if (part_->cols() < 1) throw Error(ErrorKind::horizon_exceeds_data, "Hankel partition has no columns");
}

const RowSpaceBasis& DeepcData::row_space() const {
    std::call_once(cache_->once, [this] { cache_->basis = row_space_basis(part_->regressor()); });
    return cache_->basis;
}

Projector DeepcData::projector() const {
    const RowSpaceBasis& b = row_space();
    const auto Vr = b.V.leftCols(b.rank);
    Projector out;
    out.row_space = Vr * Vr.transpose();
    out.kernel = Matrix::Identity(b.V.rows(), b.V.rows()) - out.row_space;
    return out;
}

DeepcSolution solve_deepc(const DeepcData& data, const Trajectory& w_ini, const ControlSpec& spec,
                          const Regularizer& reg, const SolverOptions& opt) {
    spec.validate();
    reg.validate();
    const HankelPartition& P = data.partition();
    if (P.tini != spec.tini || P.horizon != spec.horizon) {
        throw Error(ErrorKind::dimension_mismatch, "partition horizons differ from the control specification");
    }
    if (w_ini.length() != P.tini || w_ini.inputs() != P.inputs || w_ini.outputs() != P.outputs ||
        spec.inputs() != P.inputs || spec.outputs() != P.outputs) {
        throw Error(ErrorKind::dimension_mismatch, "w_ini or reference does not match the data channels");
    }
    const Index N = P.cols();
    const Index q = P.inputs + P.outputs;
    const Index L = P.horizon;

    Matrix F = future_map(P);
    Matrix Aeq = P.past();
    Vector beq(Aeq.rows());
    beq << w_ini.stacked_inputs(), w_ini.stacked_outputs();

    // Projection regularizer: work in zeta = V' g. The kernel block of (Up; Yp; Uf) V
    // is zero by construction and is set so exactly.
    const bool rotate = reg.kind == Regularizer::Kind::proj_two_norm_sq;
    const Matrix* V = nullptr;
    Index r = N;
    if (rotate) {
        const RowSpaceBasis& basis = data.row_space();
        V = &basis.V;
        r = basis.rank;
        F = (F * *V).eval();
        Aeq = (Aeq * *V).eval();
        Aeq.rightCols(N - r).setZero();
        for (Index t = 0; t < L; ++t) F.block(t * q, r, P.inputs, N - r).setZero();
    }

    Matrix R = Matrix::Zero(N, N);
    switch (reg.kind) {
        case Regularizer::Kind::none:
        case Regularizer::Kind::one_norm:
            break;
        case Regularizer::Kind::two_norm_sq:
            R.diagonal().setConstant(reg.lambda);
            break;
        case Regularizer::Kind::proj_two_norm_sq:
            R.diagonal().tail(N - r).setConstant(reg.lambda);
            break;
        case Regularizer::Kind::hybrid:
            if (reg.lambda > 0.0) R = reg.lambda * data.projector().kernel;
            break;
    }

    const Vector wr = spec.reference.stacked();
    const Matrix& W = spec.weight;
    EqQP qp;
    std::vector<bool> selected;
    if (!spec.has_bounds()) {
        qp.Q = 2.0 * (weighted_gram(F, W) + R);
        qp.q = -2.0 * (F.transpose() * (W * wr));
        qp.A = Aeq;
        qp.b = beq;
        selected.assign(static_cast<std::size_t>(N), true);
    } else {
        // z = (zeta, w) with F zeta - w = 0 and the box on w.
        const Index nw = q * L;
        qp.Q = Matrix::Zero(N + nw, N + nw);
        qp.Q.topLeftCorner(N, N) = 2.0 * R;
        qp.Q.bottomRightCorner(nw, nw) = 2.0 * W;
        qp.q = Vector::Zero(N + nw);
        qp.q.tail(nw) = -2.0 * (W * wr);
        qp.A = Matrix::Zero(Aeq.rows() + nw, N + nw);
        qp.A.topLeftCorner(Aeq.rows(), N) = Aeq;
        qp.A.bottomLeftCorner(nw, N) = F;
        qp.A.bottomRightCorner(nw, nw) = -Matrix::Identity(nw, nw);
        qp.b = Vector::Zero(Aeq.rows() + nw);
        qp.b.head(Aeq.rows()) = beq;
        qp.lo = Vector::Constant(N + nw, -kInf);
        qp.hi = Vector::Constant(N + nw, kInf);
        qp.lo.tail(nw) = spec.stacked_lower();
        qp.hi.tail(nw) = spec.stacked_upper();
        selected.assign(static_cast<std::size_t>(N + nw), false);
        std::fill(selected.begin(), selected.begin() + N, true);
    }
    qp.Q = 0.5 * (qp.Q + qp.Q.transpose()).eval();

    DeepcSolution sol{spec.reference, Vector(), 0.0, SolveReport{}};
    if (is_l1(reg)) {
        const double l1 = reg.kind == Regularizer::Kind::hybrid ? reg.lambda2 : reg.lambda;
        sol.report = solve_l1_qp(qp, l1, selected, opt);
    } else {
        sol.report = solve_eq_qp(qp, opt);
    }
    const Vector zeta = sol.report.z.head(N);
    sol.g_star = rotate ? Vector(*V * zeta) : zeta;
    const Vector w = future_map(P) * sol.g_star;
    sol.w_star = Trajectory::from_stacked(w, P.inputs, P.outputs);
    sol.predicted_cost = spec.cost(sol.w_star);
    return sol;
}

double deepc_constraint_residual(const HankelPartition& part, const Trajectory& w_ini, const DeepcSolution& sol) {
    Vector target(part.Up.rows() + part.Yp.rows() + part.Uf.rows() + part.Yf.rows());
    target << w_ini.stacked_inputs(), w_ini.stacked_outputs(), sol.w_star.stacked_inputs(),
        sol.w_star.stacked_outputs();
    Matrix H(target.size(), part.cols());
    H << part.Up, part.Yp, part.Uf, part.Yf;
    return inf_norm(Vector(H * sol.g_star - target)) / (1.0 + inf_norm(target));
}

GroundTruth ground_truth_optimum(const StateSpaceModel& model, const Trajectory& w_ini, const ControlSpec& spec) {
    const InitialState st = estimate_state(model, w_ini, StateEstimate::strict);
    const ControlResult res = solve_model_control(model, st.x_current, spec);
    return GroundTruth{res.trajectory(spec.inputs(), spec.outputs()), res.predicted_cost, st.x_current};
}

Realized realized_error(const TruePlant& plant, const Vector& u_applied, const Vector& x_start,
                        const ControlSpec& spec, double c_star) {
    const Index m = spec.inputs();
    const Index L = spec.horizon;
    if (u_applied.size() != m * L) throw Error(ErrorKind::dimension_mismatch, "applied input has the wrong length");
    Matrix U(L, m);
    for (Index t = 0; t < L; ++t) U.row(t) = u_applied.segment(t * m, m).transpose();

    Realized out{spec.reference, 0.0, 0.0};
    if (const auto* model = std::get_if<StateSpaceModel>(&plant)) {
        out.w_true = simulate_lti(*model, x_start, U);
    } else {
        const auto& lv = std::get<LotkaVolterraParams>(plant);
        out.w_true = simulate_lotka_volterra(lv, x_start, U.col(0));
    }
    out.cost = spec.cost(out.w_true);
    out.error_pct = error_percentage(out.cost, c_star);
    return out;
}

}  // namespace ddctrl
