#include "ddctrl/signals.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <string>

namespace ddctrl {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::horizon_exceeds_data: return "horizon-exceeds-data";
        case ErrorKind::dimension_mismatch: return "dimension-mismatch";
        case ErrorKind::invalid_argument: return "invalid-argument";
        case ErrorKind::infeasible: return "infeasible";
        case ErrorKind::unbounded: return "unbounded";
        case ErrorKind::unobservable: return "unobservable";
        case ErrorKind::identifiability: return "identifiability";
        case ErrorKind::config: return "config";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

namespace {

std::vector<Index> identity_map(Index q) {
    std::vector<Index> map(static_cast<std::size_t>(q));
    std::iota(map.begin(), map.end(), Index{0});
    return map;
}

}  // namespace

Trajectory::Trajectory(Matrix data, Index inputs, std::vector<Index> map)
    : data_(std::move(data)), m_(inputs), map_(std::move(map)) {
    if (data_.rows() < 1 || data_.cols() < 1) {
        throw Error(ErrorKind::invalid_argument, "trajectory needs T >= 1 and q >= 1");
    }
    if (m_ < 0 || m_ > data_.cols()) {
        throw Error(ErrorKind::invalid_argument, "trajectory input count exceeds channel count");
    }
}

Trajectory::Trajectory(Matrix inputs, Matrix outputs) {
    if (inputs.cols() > 0 && outputs.cols() > 0 && inputs.rows() != outputs.rows()) {
        throw Error(ErrorKind::dimension_mismatch, "input and output sample counts differ");
    }
    const Index T = inputs.cols() > 0 ? inputs.rows() : outputs.rows();
    if (T < 1 || inputs.cols() + outputs.cols() < 1) {
        throw Error(ErrorKind::invalid_argument, "trajectory needs T >= 1 and q >= 1");
    }
    data_.resize(T, inputs.cols() + outputs.cols());
    if (inputs.cols() > 0) data_.leftCols(inputs.cols()) = inputs;
    if (outputs.cols() > 0) data_.rightCols(outputs.cols()) = outputs;
    m_ = inputs.cols();
    map_ = identity_map(data_.cols());
}

Trajectory Trajectory::from_external(const Matrix& samples, const std::vector<Index>& input_channels) {
    const Index q = samples.cols();
    std::vector<bool> is_input(static_cast<std::size_t>(q), false);
    for (Index c : input_channels) {
        if (c < 0 || c >= q) throw Error(ErrorKind::invalid_argument, "input channel index out of range");
        if (is_input[static_cast<std::size_t>(c)]) {
            throw Error(ErrorKind::invalid_argument, "duplicate input channel index");
        }
        is_input[static_cast<std::size_t>(c)] = true;
    }
    std::vector<Index> map;
    map.reserve(static_cast<std::size_t>(q));
    std::vector<Index> sorted_inputs = input_channels;
    std::sort(sorted_inputs.begin(), sorted_inputs.end());
    for (Index c : sorted_inputs) map.push_back(c);
    for (Index c = 0; c < q; ++c) {
        if (!is_input[static_cast<std::size_t>(c)]) map.push_back(c);
    }
    Matrix data(samples.rows(), q);
    for (Index k = 0; k < q; ++k) data.col(k) = samples.col(map[static_cast<std::size_t>(k)]);
    return Trajectory(std::move(data), static_cast<Index>(input_channels.size()), std::move(map));
}

Trajectory Trajectory::from_stacked(const Vector& stacked, Index inputs, Index outputs) {
    const Index q = inputs + outputs;
    if (q < 1 || stacked.size() % q != 0) {
        throw Error(ErrorKind::dimension_mismatch, "stacked length is not a multiple of the channel count");
    }
    const Index T = stacked.size() / q;
    Matrix data(T, q);
    for (Index t = 0; t < T; ++t) data.row(t) = stacked.segment(t * q, q).transpose();
    return Trajectory(std::move(data), inputs, identity_map(q));
}

Matrix Trajectory::external_samples() const {
    Matrix out(data_.rows(), data_.cols());
    for (Index k = 0; k < data_.cols(); ++k) out.col(map_[static_cast<std::size_t>(k)]) = data_.col(k);
    return out;
}

Trajectory Trajectory::slice(Index begin, Index count) const {
    if (begin < 0 || count < 1 || begin + count > length()) {
        throw Error(ErrorKind::horizon_exceeds_data, "slice [" + std::to_string(begin) + ", " +
                                                         std::to_string(begin + count) + ") outside trajectory of length " +
                                                         std::to_string(length()));
    }
    return Trajectory(data_.middleRows(begin, count), m_, map_);
}

Vector Trajectory::stacked() const {
    const Index q = channels();
    Vector out(length() * q);
    for (Index t = 0; t < length(); ++t) out.segment(t * q, q) = data_.row(t).transpose();
    return out;
}

Vector Trajectory::stacked_inputs() const {
    Vector out(length() * m_);
    for (Index t = 0; t < length(); ++t) out.segment(t * m_, m_) = data_.row(t).head(m_).transpose();
    return out;
}

Vector Trajectory::stacked_outputs() const {
    const Index p = outputs();
    Vector out(length() * p);
    for (Index t = 0; t < length(); ++t) out.segment(t * p, p) = data_.row(t).tail(p).transpose();
    return out;
}

std::uint64_t Trajectory::fingerprint() const {
    // FNV-1a over the shape and the raw sample bytes.
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* bytes, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(bytes);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
    };
    const Index shape[3] = {data_.rows(), data_.cols(), m_};
    mix(shape, sizeof(shape));
    mix(data_.data(), static_cast<std::size_t>(data_.size()) * sizeof(double));
    return h;
}

Trajectory Trajectory::with_outputs(Matrix outputs_new) const {
    if (outputs_new.rows() != length() || outputs_new.cols() != outputs()) {
        throw Error(ErrorKind::dimension_mismatch, "replacement outputs have the wrong shape");
    }
    Matrix data = data_;
    data.rightCols(outputs()) = outputs_new;
    return Trajectory(std::move(data), m_, map_);
}

Trajectory Trajectory::with_inputs(Matrix inputs_new) const {
    if (inputs_new.rows() != length() || inputs_new.cols() != m_) {
        throw Error(ErrorKind::dimension_mismatch, "replacement inputs have the wrong shape");
    }
    Matrix data = data_;
    data.leftCols(m_) = inputs_new;
    return Trajectory(std::move(data), m_, map_);
}

void SystemClass::validate() const {
    if (q < 1 || m < 0 || m > q || n < 0 || lag < 0) {
        throw Error(ErrorKind::invalid_argument, "system class needs q >= 1, 0 <= m <= q, n >= 0, lag >= 0");
    }
    if (q > m && (lag > n || n > lag * (q - m))) {
        throw Error(ErrorKind::invalid_argument, "system class violates lag <= n <= lag (q - m)");
    }
}

namespace {

void check_depth(const Trajectory& w, Index depth) {
    if (depth < 1) throw Error(ErrorKind::invalid_argument, "Hankel depth must be positive");
    if (depth > w.length()) {
        throw Error(ErrorKind::horizon_exceeds_data, "Hankel depth " + std::to_string(depth) +
                                                         " exceeds data length " + std::to_string(w.length()));
    }
}

}  // namespace

Matrix build_hankel(const Trajectory& w, Index depth) {
    check_depth(w, depth);
    const Index q = w.channels();
    const Index cols = w.length() - depth + 1;
    const Matrix& s = w.samples();
    Matrix H(q * depth, cols);
#pragma omp parallel for schedule(static)
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < depth; ++i) {
            for (Index c = 0; c < q; ++c) H(i * q + c, j) = s(i + j, c);
        }
    }
    return H;
}

Matrix reference::build_hankel(const Trajectory& w, Index depth) {
    check_depth(w, depth);
    const Index q = w.channels();
    const Index cols = w.length() - depth + 1;
    Matrix H(q * depth, cols);
    for (Index i = 0; i < depth; ++i) {
        for (Index j = 0; j < cols; ++j) H.block(i * q, j, q, 1) = w.sample(i + j);
    }
    return H;
}

Matrix HankelPartition::regressor() const {
    Matrix M(Up.rows() + Yp.rows() + Uf.rows(), cols());
    M << Up, Yp, Uf;
    return M;
}

Matrix HankelPartition::past() const {
    Matrix P(Up.rows() + Yp.rows(), cols());
    P << Up, Yp;
    return P;
}

Matrix HankelPartition::reassemble() const {
    const Index q = inputs + outputs;
    const Index depth = tini + horizon;
    Matrix H(q * depth, cols());
    for (Index i = 0; i < depth; ++i) {
        const bool is_past = i < tini;
        const Index k = is_past ? i : i - tini;
        const Matrix& U = is_past ? Up : Uf;
        const Matrix& Y = is_past ? Yp : Yf;
        H.middleRows(i * q, inputs) = U.middleRows(k * inputs, inputs);
        H.middleRows(i * q + inputs, outputs) = Y.middleRows(k * outputs, outputs);
    }
    return H;
}

HankelPartition partition_past_future(const Trajectory& w, Index tini, Index horizon) {
    if (tini < 1 || horizon < 1) throw Error(ErrorKind::invalid_argument, "Tini and L must be positive");
    if (tini + horizon > w.length()) {
        throw Error(ErrorKind::horizon_exceeds_data, "Tini + L = " + std::to_string(tini + horizon) +
                                                         " exceeds data length " + std::to_string(w.length()));
    }
    const Matrix H = build_hankel(w, tini + horizon);
    const Index m = w.inputs();
    const Index p = w.outputs();
    const Index q = m + p;
    const Index N = H.cols();

    HankelPartition part;
    part.tini = tini;
    part.horizon = horizon;
    part.inputs = m;
    part.outputs = p;
    part.source_id = w.fingerprint();
    part.Up.resize(m * tini, N);
    part.Yp.resize(p * tini, N);
    part.Uf.resize(m * horizon, N);
    part.Yf.resize(p * horizon, N);
    for (Index i = 0; i < tini + horizon; ++i) {
        const bool is_past = i < tini;
        const Index k = is_past ? i : i - tini;
        Matrix& U = is_past ? part.Up : part.Uf;
        Matrix& Y = is_past ? part.Yp : part.Yf;
        U.middleRows(k * m, m) = H.middleRows(i * q, m);
        Y.middleRows(k * p, p) = H.middleRows(i * q + m, p);
    }
    return part;
}

Index numerical_rank(const Matrix& M, double tol) {
    if (M.size() == 0) throw Error(ErrorKind::invalid_argument, "numerical rank of an empty matrix");
    const Vector s = Eigen::BDCSVD<Matrix>(M).singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    const double cut = tol * s(0);
    return static_cast<Index>((s.array() > cut).count());
}

PeCheck check_pe_rank(const Trajectory& w, Index depth, const SystemClass& sys, double tol) {
    PeCheck out;
    out.expected = sys.m * depth + sys.n;
    out.rank = numerical_rank(build_hankel(w, depth), tol);
    out.satisfied = out.rank == out.expected;
    return out;
}

Index minimum_data_length(Index inputs, Index order, Index tini, Index horizon) {
    return (inputs + 1) * (tini + horizon + order) - 1;
}

}  // namespace ddctrl
