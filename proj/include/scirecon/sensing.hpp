#pragma once

#include <algorithm>
#include <string>

#include "scirecon/core.hpp"

namespace scirecon {

/// Integer dispersion step along the column axis, in pixels per channel.
struct ShiftSpec {
    int step = 2;
};

template <typename T>
struct DenseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<T> data;
    DenseMatrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, T(0)) {}
    T& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    T operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
};

/// Coded-aperture snapshot encoder. The cube is modulated by a fixed mask,
/// each channel is shifted `step` columns further than the previous one,
/// and all channels sum onto a single 2D sensor. Holds only the mask and
/// the geometry; the operator and its adjoint are applied matrix-free.
///
/// Immutable after construction and safe to share across threads.
template <typename T>
class SensingOperator {
  public:
    SensingOperator(Cube<T> mask, ShiftSpec shift, int cube_channels)
        : mask_(std::move(mask)), shift_(shift), channels_(cube_channels) {
        if (mask_.channels != 1) throw DimensionError("mask must be single-channel");
        if (channels_ < 1) throw DimensionError("cube must have at least one channel");
        if (shift_.step < 0) throw DimensionError("dispersion step must be nonnegative");
        if (!mask_.all_finite()) throw DimensionError("mask contains non-finite values");
        bool nonzero = false;
        for (T v : mask_.data) nonzero |= (v != T(0));
        if (!nonzero) throw DimensionError("mask is identically zero; operator is degenerate");
        build_hth_diag();
    }

    int cube_channels() const { return channels_; }
    int cube_rows() const { return mask_.rows; }
    int cube_cols() const { return mask_.cols; }
    int meas_rows() const { return mask_.rows; }
    int meas_cols() const { return mask_.cols + shift_.step * (channels_ - 1); }
    int shift_step() const { return shift_.step; }
    const Cube<T>& mask() const { return mask_; }

    /// y[u, v + d(m-1)] += M[u, v] * x[m, u, v], summed over channels.
    Cube<T> encode(const Cube<T>& x) const {
        check_cube(x);
        Cube<T> y(1, meas_rows(), meas_cols());
        const int nr = mask_.rows, nc = mask_.cols, d = shift_.step;
        parallel_for(nr, [&](int u) {
            T* yrow = y.plane(0) + static_cast<size_t>(u) * y.cols;
            const T* mrow = mask_.plane(0) + static_cast<size_t>(u) * nc;
            for (int m = 0; m < channels_; ++m) {
                const T* xrow = x.plane(m) + static_cast<size_t>(u) * nc;
                T* shifted = yrow + static_cast<size_t>(d) * m;
                for (int v = 0; v < nc; ++v) shifted[v] += mrow[v] * xrow[v];
            }
        });
        return y;
    }

    /// Exact algebraic transpose: out[m, u, v] = M[u, v] * y[u, v + d(m-1)].
    Cube<T> adjoint(const Cube<T>& y) const {
        check_measurement(y);
        Cube<T> x(channels_, mask_.rows, mask_.cols);
        const int nr = mask_.rows, nc = mask_.cols, d = shift_.step;
        parallel_for(channels_, [&](int m) {
            for (int u = 0; u < nr; ++u) {
                const T* yrow = y.plane(0) + static_cast<size_t>(u) * y.cols + static_cast<size_t>(d) * m;
                const T* mrow = mask_.plane(0) + static_cast<size_t>(u) * nc;
                T* xrow = x.plane(m) + static_cast<size_t>(u) * nc;
                for (int v = 0; v < nc; ++v) xrow[v] = mrow[v] * yrow[v];
            }
        });
        return x;
    }

    /// Diag(H Hᵀ) reshaped to the measurement plane. Column q of H has a
    /// single nonzero, so H Hᵀ is exactly diagonal with entries
    /// Σ_m M²[u, v' - d(m-1)].
    const Cube<T>& hth_diag() const { return hth_diag_; }

    /// Test-only: materialize H row by row. Vectorization is channel-major,
    /// then row, then column for the cube; row-major for the measurement.
    DenseMatrix<T> dense_oracle(size_t size_cap = 4096) const {
        size_t unknowns = static_cast<size_t>(channels_) * mask_.rows * mask_.cols;
        if (unknowns > size_cap)
            throw DimensionError("dense_oracle: instance exceeds size cap (" +
                                 std::to_string(unknowns) + " > " + std::to_string(size_cap) + ")");
        DenseMatrix<T> h(meas_rows() * meas_cols(), static_cast<int>(unknowns));
        const int nr = mask_.rows, nc = mask_.cols, d = shift_.step;
        for (int m = 0; m < channels_; ++m)
            for (int u = 0; u < nr; ++u)
                for (int v = 0; v < nc; ++v) {
                    int q = (m * nr + u) * nc + v;
                    int p = u * meas_cols() + v + d * m;
                    h(p, q) = mask_(0, u, v);
                }
        return h;
    }

    void check_cube(const Cube<T>& x) const {
        if (x.channels != channels_ || x.rows != mask_.rows || x.cols != mask_.cols)
            throw DimensionError("cube dimensions do not match operator");
    }

    void check_measurement(const Cube<T>& y) const {
        if (y.channels != 1 || y.rows != meas_rows() || y.cols != meas_cols())
            throw DimensionError("measurement dimensions do not match operator");
    }

  private:
    void build_hth_diag() {
        hth_diag_ = Cube<T>(1, meas_rows(), meas_cols());
        const int nr = mask_.rows, nc = mask_.cols, d = shift_.step;
        for (int u = 0; u < nr; ++u) {
            T* drow = hth_diag_.plane(0) + static_cast<size_t>(u) * hth_diag_.cols;
            const T* mrow = mask_.plane(0) + static_cast<size_t>(u) * nc;
            for (int m = 0; m < channels_; ++m)
                for (int v = 0; v < nc; ++v) drow[d * m + v] += mrow[v] * mrow[v];
        }
    }

    Cube<T> mask_;
    ShiftSpec shift_;
    int channels_;
    Cube<T> hth_diag_;
};

}  // namespace scirecon
