#include "scirecon/sensing.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

using scirecon::Cube;
using scirecon::DimensionError;
using scirecon::Rng;
using scirecon::SensingOperator;
using scirecon::ShiftSpec;

namespace {

Cube<double> random_cube(int ch, int rows, int cols, Rng& rng, double lo = 0.0, double hi = 1.0) {
    Cube<double> c(ch, rows, cols);
    for (auto& v : c.data) v = rng.uniform(lo, hi);
    return c;
}

SensingOperator<double> random_op(int ch, int rows, int cols, int step, Rng& rng) {
    Cube<double> mask(1, rows, cols);
    // Binary-ish mask with a few gray values, never all-zero.
    for (auto& v : mask.data) {
        double u = rng.uniform();
        v = u < 0.45 ? 0.0 : (u < 0.9 ? 1.0 : rng.uniform(0.2, 0.8));
    }
    mask.data[0] = 1.0;
    return SensingOperator<double>(std::move(mask), ShiftSpec{step}, ch);
}

}  // namespace

TEST(Sensing, TinyExampleByHand) {
    // 1 row, 2 cols, 2 channels, step 1, mask [1, 0.5].
    Cube<double> mask(1, 1, 2);
    mask(0, 0, 0) = 1.0;
    mask(0, 0, 1) = 0.5;
    SensingOperator<double> op(mask, ShiftSpec{1}, 2);

    ASSERT_EQ(op.meas_rows(), 1);
    ASSERT_EQ(op.meas_cols(), 3);

    Cube<double> x(2, 1, 2);
    const double a = 0.7, b = 0.3, c = 0.9, e = 0.2;
    x(0, 0, 0) = a;
    x(0, 0, 1) = b;
    x(1, 0, 0) = c;
    x(1, 0, 1) = e;

    Cube<double> y = op.encode(x);
    EXPECT_DOUBLE_EQ(y(0, 0, 0), a);
    EXPECT_DOUBLE_EQ(y(0, 0, 1), 0.5 * b + c);
    EXPECT_DOUBLE_EQ(y(0, 0, 2), 0.5 * e);

    const auto& diag = op.hth_diag();
    EXPECT_DOUBLE_EQ(diag(0, 0, 0), 1.0);
    EXPECT_DOUBLE_EQ(diag(0, 0, 1), 1.25);
    EXPECT_DOUBLE_EQ(diag(0, 0, 2), 0.25);

    Cube<double> meas(1, 1, 3);
    const double p = 0.11, q = 0.42, r = 0.83;
    meas(0, 0, 0) = p;
    meas(0, 0, 1) = q;
    meas(0, 0, 2) = r;
    Cube<double> back = op.adjoint(meas);
    EXPECT_DOUBLE_EQ(back(0, 0, 0), p);
    EXPECT_DOUBLE_EQ(back(0, 0, 1), 0.5 * q);
    EXPECT_DOUBLE_EQ(back(1, 0, 0), q);
    EXPECT_DOUBLE_EQ(back(1, 0, 1), 0.5 * r);

    auto h = op.dense_oracle();
    ASSERT_EQ(h.rows, 3);
    ASSERT_EQ(h.cols, 4);
    const double expected[3][4] = {
        {1.0, 0.0, 0.0, 0.0}, {0.0, 0.5, 1.0, 0.0}, {0.0, 0.0, 0.0, 0.5}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(h(i, j), expected[i][j]);
}

TEST(Sensing, MeasurementShape) {
    Rng rng(11);
    for (auto [ch, rows, cols, step] :
         {std::tuple{4, 5, 6, 2}, {1, 3, 3, 2}, {8, 4, 9, 1}, {3, 2, 2, 0}, {5, 1, 7, 3}}) {
        auto op = random_op(ch, rows, cols, step, rng);
        EXPECT_EQ(op.meas_rows(), rows);
        EXPECT_EQ(op.meas_cols(), cols + step * (ch - 1));
        auto y = op.encode(random_cube(ch, rows, cols, rng));
        EXPECT_EQ(y.rows, rows);
        EXPECT_EQ(y.cols, cols + step * (ch - 1));
    }
}

TEST(Sensing, Linearity) {
    Rng rng(23);
    auto op = random_op(3, 4, 5, 2, rng);
    auto x1 = random_cube(3, 4, 5, rng, -1.0, 1.0);
    auto x2 = random_cube(3, 4, 5, rng, -1.0, 1.0);
    double alpha = 1.7, beta = -0.4;
    Cube<double> mix(3, 4, 5);
    for (size_t i = 0; i < mix.data.size(); ++i)
        mix.data[i] = alpha * x1.data[i] + beta * x2.data[i];
    auto lhs = op.encode(mix);
    auto y1 = op.encode(x1);
    auto y2 = op.encode(x2);
    for (size_t i = 0; i < lhs.data.size(); ++i)
        EXPECT_NEAR(lhs.data[i], alpha * y1.data[i] + beta * y2.data[i], 1e-12);
}

TEST(Sensing, AdjointIdentity) {
    // <Hx, y> == <x, H'y> across random operators and vectors.
    Rng rng(37);
    for (int trial = 0; trial < 100; ++trial) {
        int ch = 1 + rng.uniform_int(6);
        int rows = 1 + rng.uniform_int(7);
        int cols = 1 + rng.uniform_int(7);
        int step = rng.uniform_int(4);
        auto op = random_op(ch, rows, cols, step, rng);
        auto x = random_cube(ch, rows, cols, rng, -1.0, 1.0);
        auto y = random_cube(1, op.meas_rows(), op.meas_cols(), rng, -1.0, 1.0);
        auto hx = op.encode(x);
        double lhs = scirecon::dot(hx.data, y.data);
        double rhs = scirecon::dot(x.data, op.adjoint(y).data);
        double scale = std::max(1e-30, scirecon::norm(hx) * scirecon::norm(y));
        EXPECT_LE(std::abs(lhs - rhs) / scale, 1e-10);
    }
}

TEST(Sensing, MatchesDenseOracle) {
    Rng rng(53);
    for (int trial = 0; trial < 20; ++trial) {
        int ch = 1 + rng.uniform_int(5);
        int rows = 1 + rng.uniform_int(6);
        int cols = 1 + rng.uniform_int(6);
        int step = rng.uniform_int(3);
        auto op = random_op(ch, rows, cols, step, rng);
        auto h = op.dense_oracle();

        Eigen::MatrixXd hm(h.rows, h.cols);
        for (int i = 0; i < h.rows; ++i)
            for (int j = 0; j < h.cols; ++j) hm(i, j) = h(i, j);

        auto x = random_cube(ch, rows, cols, rng, -1.0, 1.0);
        Eigen::VectorXd xv = Eigen::Map<const Eigen::VectorXd>(x.data.data(), x.data.size());
        Eigen::VectorXd yv = hm * xv;
        auto y = op.encode(x);
        for (int i = 0; i < h.rows; ++i) EXPECT_NEAR(y.data[i], yv(i), 1e-12);

        auto meas = random_cube(1, op.meas_rows(), op.meas_cols(), rng, -1.0, 1.0);
        Eigen::VectorXd mv = Eigen::Map<const Eigen::VectorXd>(meas.data.data(), meas.data.size());
        Eigen::VectorXd bv = hm.transpose() * mv;
        auto back = op.adjoint(meas);
        for (int j = 0; j < h.cols; ++j) EXPECT_NEAR(back.data[j], bv(j), 1e-12);

        // H H' must be exactly diagonal: every cube voxel lands on one pixel.
        Eigen::MatrixXd gram = hm * hm.transpose();
        const auto& diag = op.hth_diag();
        for (int i = 0; i < h.rows; ++i)
            for (int j = 0; j < h.rows; ++j) {
                if (i == j)
                    EXPECT_NEAR(gram(i, j), diag.data[i], 1e-12);
                else
                    EXPECT_EQ(gram(i, j), 0.0);
            }
    }
}

TEST(Sensing, DenseOracleSizeCap) {
    Rng rng(71);
    auto op = random_op(8, 16, 16, 2, rng);  // 2048 unknowns
    EXPECT_NO_THROW(op.dense_oracle());
    EXPECT_THROW(op.dense_oracle(2047), DimensionError);
    auto big = random_op(8, 24, 24, 2, rng);  // 4608 unknowns
    EXPECT_THROW(big.dense_oracle(), DimensionError);
}

TEST(Sensing, RejectsBadInputs) {
    Rng rng(89);
    auto op = random_op(3, 4, 5, 2, rng);
    EXPECT_THROW(op.encode(Cube<double>(3, 4, 6)), DimensionError);
    EXPECT_THROW(op.encode(Cube<double>(2, 4, 5)), DimensionError);
    EXPECT_THROW(op.adjoint(Cube<double>(1, 4, 5)), DimensionError);
    EXPECT_THROW(op.adjoint(Cube<double>(2, 4, op.meas_cols())), DimensionError);

    Cube<double> mask2(2, 4, 5);
    mask2.fill(1.0);
    EXPECT_THROW(SensingOperator<double>(mask2, ShiftSpec{1}, 3), DimensionError);
    Cube<double> zero(1, 4, 5);
    EXPECT_THROW(SensingOperator<double>(zero, ShiftSpec{1}, 3), DimensionError);
    Cube<double> ok(1, 4, 5);
    ok.fill(1.0);
    EXPECT_THROW(SensingOperator<double>(ok, ShiftSpec{-1}, 3), DimensionError);
    EXPECT_THROW(SensingOperator<double>(ok, ShiftSpec{1}, 0), DimensionError);
}

TEST(Sensing, DeterministicAcrossThreadCounts) {
    Rng rng(97);
    auto op = random_op(6, 32, 33, 2, rng);
    auto x = random_cube(6, 32, 33, rng);
    setenv("SCI_RECON_THREADS", "1", 1);
    auto y1 = op.encode(x);
    setenv("SCI_RECON_THREADS", "4", 1);
    auto y4 = op.encode(x);
    unsetenv("SCI_RECON_THREADS");
    ASSERT_EQ(y1.data.size(), y4.data.size());
    for (size_t i = 0; i < y1.data.size(); ++i) EXPECT_EQ(y1.data[i], y4.data[i]);
}
