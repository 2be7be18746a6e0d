#pragma once

#include "ddctrl/types.hpp"

#include <cstdint>
#include <vector>

namespace ddctrl {

/// Finite multivariate time series with an input/output channel partition.
///
/// Samples are stored inputs-first: columns [0, m) are inputs and [m, q) are
/// outputs. `channel_map()[k]` gives the external position of stored column k,
/// so data arriving in any channel order can be round-tripped without ever
/// materializing the permutation matrix.
class Trajectory {
public:
    Trajectory(Matrix inputs, Matrix outputs);

    /// `samples` is T x q in external channel order; `input_channels` lists the
    /// external positions of the inputs.
    static Trajectory from_external(const Matrix& samples, const std::vector<Index>& input_channels);

    /// Inverse of `stacked()`: w = (w(0); w(1); ...) with inputs first per sample.
    static Trajectory from_stacked(const Vector& stacked, Index inputs, Index outputs);

    Index length() const noexcept { return data_.rows(); }
    Index channels() const noexcept { return data_.cols(); }
    Index inputs() const noexcept { return m_; }
    Index outputs() const noexcept { return data_.cols() - m_; }

    const Matrix& samples() const noexcept { return data_; }
    Matrix input_samples() const { return data_.leftCols(m_); }
    Matrix output_samples() const { return data_.rightCols(outputs()); }
    Vector sample(Index t) const { return data_.row(t).transpose(); }

    const std::vector<Index>& channel_map() const noexcept { return map_; }
    Matrix external_samples() const;

    Trajectory slice(Index begin, Index count) const;

    /// Time-major stacking (w(0); w(1); ...).
    Vector stacked() const;
    /// Time-major stacking of the inputs only, then of the outputs only.
    Vector stacked_inputs() const;
    Vector stacked_outputs() const;

    /// Content hash used as the trajectory id in derived objects.
    std::uint64_t fingerprint() const;

    Trajectory with_outputs(Matrix outputs) const;
    Trajectory with_inputs(Matrix inputs) const;

    friend bool operator==(const Trajectory& a, const Trajectory& b) {
        return a.m_ == b.m_ && a.map_ == b.map_ && a.data_ == b.data_;
    }

private:
    Trajectory(Matrix data, Index inputs, std::vector<Index> map);

    Matrix data_;
    Index m_ = 0;
    std::vector<Index> map_;
};

/// Complexity of an LTI class: channels q, inputs m, order n, lag l.
struct SystemClass {
    Index q = 1;
    Index m = 0;
    Index n = 0;
    Index lag = 0;

    void validate() const;
};

/// Depth-(Tini+L) Hankel matrix of a data trajectory split into past/future
/// input/output blocks. All blocks share the column count N = T - (Tini+L) + 1.
struct HankelPartition {
    Matrix Up;
    Matrix Yp;
    Matrix Uf;
    Matrix Yf;
    Index tini = 0;
    Index horizon = 0;
    Index inputs = 0;
    Index outputs = 0;
    std::uint64_t source_id = 0;

    Index cols() const noexcept { return Up.cols(); }
    /// (Up; Yp; Uf): the regressor of the least-squares predictor.
    Matrix regressor() const;
    /// (Up; Yp): the rows pinned by the initial trajectory.
    Matrix past() const;
    /// Rows reassembled in Hankel order, i.e. equal to build_hankel(w, Tini+L).
    Matrix reassemble() const;
};

/// Block Hankel matrix of depth `depth`: block (i, j) is sample w(i + j).
/// Columns are filled in parallel; `reference::build_hankel` is the serial twin.
Matrix build_hankel(const Trajectory& w, Index depth);

namespace reference {
Matrix build_hankel(const Trajectory& w, Index depth);
}

HankelPartition partition_past_future(const Trajectory& w, Index tini, Index horizon);

/// Count of singular values strictly above tol * sigma_max.
Index numerical_rank(const Matrix& M, double tol = 1e-8);

struct PeCheck {
    bool satisfied = false;
    Index rank = 0;
    Index expected = 0;
};

/// rank(H_L(w)) == m L + n at relative tolerance `tol`.
PeCheck check_pe_rank(const Trajectory& w, Index depth, const SystemClass& sys, double tol = 1e-8);

/// Smallest T for which a depth-(tini+horizon) Hankel matrix can reach rank
/// m (tini + horizon) + n: (m + 1)(tini + horizon + n) - 1.
Index minimum_data_length(Index inputs, Index order, Index tini, Index horizon);

}  // namespace ddctrl
