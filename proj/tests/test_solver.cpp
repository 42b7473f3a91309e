#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "scirecon/solver.hpp"

using scirecon::ConfigError;
using scirecon::Cube;
using scirecon::DenoiserKind;
using scirecon::DenoiserSpec;
using scirecon::DimensionError;
using scirecon::InnerPlan;
using scirecon::Rng;
using scirecon::SensingOperator;
using scirecon::ShiftSpec;
using scirecon::SolverConfig;
using scirecon::SolverMode;

namespace {

SensingOperator<double> random_op(Rng& rng, int nl, int nr, int nc, int d) {
    Cube<double> mask(1, nr, nc);
    for (auto& v : mask.data) v = rng.uniform() < 0.4 ? 0.0 : rng.uniform(0.3, 1.0);
    mask.data[0] = 1.0;
    return SensingOperator<double>(mask, ShiftSpec{d}, nl);
}

Cube<double> random_cube(Rng& rng, int nl, int nr, int nc, double lo = 0.0, double hi = 1.0) {
    Cube<double> c(nl, nr, nc);
    for (auto& v : c.data) v = rng.uniform(lo, hi);
    return c;
}

Cube<double> nan_cube(int nl, int nr, int nc) {
    Cube<double> c(nl, nr, nc);
    c.fill(std::numeric_limits<double>::quiet_NaN());
    return c;
}

// Smooth two-ramp scene with a box, inside [0.05, 0.95].
Cube<double> synthetic_scene(int nl, int nr, int nc) {
    Cube<double> x(nl, nr, nc);
    for (int m = 0; m < nl; ++m)
        for (int u = 0; u < nr; ++u)
            for (int v = 0; v < nc; ++v) {
                double base = 0.15 + 0.5 * (static_cast<double>(u) / nr) *
                                         (static_cast<double>(m + 1) / nl);
                double ramp = 0.2 * static_cast<double>(v) / nc;
                double box = (u > nr / 4 && u < (3 * nr) / 4 && v > nc / 4 && v < (3 * nc) / 4)
                                 ? 0.15
                                 : 0.0;
                x(m, u, v) = base + ramp + box * (1.0 - 0.1 * m);
            }
    return x;
}

double quad_objective(const SensingOperator<double>& op, const Cube<double>& y,
                      const Cube<double>& p, const Cube<double>& b, const Cube<double>& u,
                      const Cube<double>& v, double mu, double eta, const Cube<double>& x) {
    Cube<double> hx = op.encode(x);
    double f = 0.0;
    for (size_t i = 0; i < y.data.size(); ++i) {
        double r = y.data[i] - hx.data[i];
        f += 0.5 * r * r;
    }
    for (size_t i = 0; i < x.data.size(); ++i) {
        if (mu > 0.0) {
            double r = x.data[i] - p.data[i] - b.data[i];
            f += 0.5 * mu * r * r;
        }
        if (eta > 0.0) {
            double r = x.data[i] - u.data[i] - v.data[i];
            f += 0.5 * eta * r * r;
        }
    }
    return f;
}

}  // namespace

TEST(XUpdate, EtaZeroNeverTouchesSplitAndIsExactOnConsistentData) {
    Rng rng(11);
    auto op = random_op(rng, 3, 6, 8, 1);
    auto p = random_cube(rng, 3, 6, 8);
    auto b = random_cube(rng, 3, 6, 8, -0.1, 0.1);
    Cube<double> s(3, 6, 8);
    for (size_t i = 0; i < s.data.size(); ++i) s.data[i] = p.data[i] + b.data[i];
    Cube<double> y = op.encode(s);

    auto u = nan_cube(3, 6, 8);
    auto v = nan_cube(3, 6, 8);
    Cube<double> x = scirecon::x_update(op, y, p, b, u, v, 0.7, 0.0);
    // consistent measurement: the correction term vanishes and x = p + b
    for (size_t i = 0; i < x.data.size(); ++i) EXPECT_EQ(x.data[i], s.data[i]);
}

TEST(XUpdate, MuZeroBranchUsesOnlyTheSplit) {
    Rng rng(12);
    auto op = random_op(rng, 2, 5, 7, 2);
    auto u = random_cube(rng, 2, 5, 7);
    auto v = random_cube(rng, 2, 5, 7, -0.1, 0.1);
    Cube<double> y(1, op.meas_rows(), op.meas_cols());
    for (auto& val : y.data) val = rng.uniform();

    auto p = nan_cube(2, 5, 7);
    auto b = nan_cube(2, 5, 7);
    Cube<double> x = scirecon::x_update(op, y, p, b, u, v, 0.0, 0.3);
    EXPECT_TRUE(x.all_finite());
}

TEST(XUpdate, ConsistentFixedPointWithBothBranches) {
    Rng rng(13);
    auto op = random_op(rng, 2, 6, 6, 1);
    auto s = random_cube(rng, 2, 6, 6);
    Cube<double> zero(2, 6, 6);
    Cube<double> y = op.encode(s);
    // mu = eta makes both convex weights exactly one half, so c == s bitwise
    Cube<double> x = scirecon::x_update(op, y, s, zero, s, zero, 0.01, 0.01);
    for (size_t i = 0; i < x.data.size(); ++i) EXPECT_EQ(x.data[i], s.data[i]);
}

TEST(XUpdate, RejectsDegenerateWeights) {
    Rng rng(14);
    auto op = random_op(rng, 2, 4, 4, 1);
    auto c = random_cube(rng, 2, 4, 4);
    Cube<double> y(1, op.meas_rows(), op.meas_cols());
    EXPECT_THROW(scirecon::x_update(op, y, c, c, c, c, 0.0, 0.0), ConfigError);
    EXPECT_THROW(scirecon::x_update(op, y, c, c, c, c, -0.1, 0.2), ConfigError);
    Cube<double> bad_y(1, op.meas_rows() + 1, op.meas_cols());
    EXPECT_THROW(scirecon::x_update(op, bad_y, c, c, c, c, 0.1, 0.0), DimensionError);
}

TEST(XUpdate, MatchesDenseSolveOnFiftyInstances) {
    for (int t = 0; t < 50; ++t) {
        Rng rng(900 + t);
        int nl = rng.uniform_int(1, 3), nr = rng.uniform_int(2, 4), nc = rng.uniform_int(2, 4);
        int d = rng.uniform_int(0, 2);
        auto op = random_op(rng, nl, nr, nc, d);
        auto p = random_cube(rng, nl, nr, nc);
        auto b = random_cube(rng, nl, nr, nc, -0.2, 0.2);
        auto u = random_cube(rng, nl, nr, nc);
        auto v = random_cube(rng, nl, nr, nc, -0.2, 0.2);
        Cube<double> y(1, op.meas_rows(), op.meas_cols());
        for (auto& val : y.data) val = rng.uniform();

        double mu = 0.0, eta = 0.0;
        switch (t % 3) {
            case 0: mu = rng.uniform(0.005, 0.5); break;
            case 1: eta = rng.uniform(0.005, 0.5); break;
            default: mu = rng.uniform(0.005, 0.5); eta = rng.uniform(0.005, 0.5); break;
        }
        Cube<double> x = scirecon::x_update(op, y, p, b, u, v, mu, eta);

        auto hd = op.dense_oracle();
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
            H(hd.data.data(), hd.rows, hd.cols);
        const int n = hd.cols;
        Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data.data(), y.data.size());
        Eigen::VectorXd rhs = H.transpose() * yv;
        for (int i = 0; i < n; ++i) {
            if (mu > 0.0) rhs[i] += mu * (p.data[i] + b.data[i]);
            if (eta > 0.0) rhs[i] += eta * (u.data[i] + v.data[i]);
        }
        Eigen::MatrixXd a = H.transpose() * H;
        a.diagonal().array() += mu + eta;
        Eigen::VectorXd xs = a.ldlt().solve(rhs);

        double num = 0.0, den = 0.0;
        for (int i = 0; i < n; ++i) {
            num += (x.data[i] - xs[i]) * (x.data[i] - xs[i]);
            den += xs[i] * xs[i];
        }
        EXPECT_LE(std::sqrt(num), 1e-8 * std::max(1e-30, std::sqrt(den))) << "instance " << t;
    }
}

TEST(XUpdate, PerturbationsNeverImproveTheObjective) {
    Rng rng(77);
    auto op = random_op(rng, 2, 4, 5, 1);
    auto p = random_cube(rng, 2, 4, 5);
    auto b = random_cube(rng, 2, 4, 5, -0.2, 0.2);
    auto u = random_cube(rng, 2, 4, 5);
    auto v = random_cube(rng, 2, 4, 5, -0.2, 0.2);
    Cube<double> y(1, op.meas_rows(), op.meas_cols());
    for (auto& val : y.data) val = rng.uniform();
    const double mu = 0.03, eta = 0.08;

    Cube<double> x = scirecon::x_update(op, y, p, b, u, v, mu, eta);
    double best = quad_objective(op, y, p, b, u, v, mu, eta, x);
    for (int t = 0; t < 20; ++t) {
        Cube<double> delta(2, 4, 5);
        for (auto& val : delta.data) val = rng.normal();
        double nrm = scirecon::norm(delta);
        Cube<double> xp = x;
        for (size_t i = 0; i < xp.data.size(); ++i)
            xp.data[i] += delta.data[i] * (1e-3 / nrm);
        EXPECT_GE(quad_objective(op, y, p, b, u, v, mu, eta, xp), best);
    }
}

TEST(SplitUpdates, UMatchesDenoiserDispatch) {
    Rng rng(21);
    auto x = random_cube(rng, 2, 8, 8);
    auto v = random_cube(rng, 2, 8, 8, -0.2, 0.2);

    DenoiserSpec ident;
    ident.kind = DenoiserKind::identity;
    Cube<double> u = scirecon::u_update(x, v, ident);
    for (size_t i = 0; i < u.data.size(); ++i) EXPECT_EQ(u.data[i], x.data[i] - v.data[i]);

    DenoiserSpec tv;
    tv.kind = DenoiserKind::tv;
    tv.sigma = 0.15;
    tv.iters = 40;
    Cube<double> z(2, 8, 8);
    for (size_t i = 0; i < z.data.size(); ++i) z.data[i] = x.data[i] - v.data[i];
    Cube<double> via_update = scirecon::u_update(x, v, tv);
    Cube<double> direct = scirecon::apply_denoiser(z, tv);
    for (size_t i = 0; i < z.data.size(); ++i) EXPECT_EQ(via_update.data[i], direct.data[i]);

    // constant input is a fixed point of the TV step
    Cube<double> flat(2, 8, 8, 0.37);
    Cube<double> zero(2, 8, 8);
    Cube<double> uf = scirecon::u_update(flat, zero, tv);
    for (double val : uf.data) EXPECT_EQ(val, 0.37);
}

TEST(SplitUpdates, DualRecursionsAreExactOnDyadicData) {
    Cube<double> v0(1, 2, 2, 0.5);
    Cube<double> x(1, 2, 2, 0.75);
    Cube<double> u(1, 2, 2, 0.75);
    Cube<double> same = scirecon::v_update(v0, x, u);
    for (double val : same.data) EXPECT_EQ(val, 0.5);  // x = u leaves v alone

    Cube<double> r(1, 2, 2, 0.25);
    Cube<double> zero(1, 2, 2);
    Cube<double> neg = scirecon::v_update(zero, r, zero);
    for (double val : neg.data) EXPECT_EQ(val, -0.25);

    Cube<double> v = v0;
    for (int i = 0; i < 3; ++i) scirecon::v_update(v, r, zero).data.swap(v.data);
    for (double val : v.data) EXPECT_EQ(val, 0.5 - 3 * 0.25);

    // b walks back exactly after +r then -r
    Cube<double> b0(1, 2, 2, 0.125);
    Cube<double> p(1, 2, 2, 0.5);
    Cube<double> xp(1, 2, 2, 0.75);   // x - p = +0.25
    Cube<double> xm(1, 2, 2, 0.25);   // x - p = -0.25
    Cube<double> b1 = scirecon::b_update(b0, xp, p);
    Cube<double> b2 = scirecon::b_update(b1, xm, p);
    for (double val : b2.data) EXPECT_EQ(val, 0.125);

    Cube<double> wrong(1, 3, 2);
    EXPECT_THROW(scirecon::v_update(v0, wrong, u), DimensionError);
    EXPECT_THROW(scirecon::b_update(b0, wrong, p), DimensionError);
}

TEST(SolverConfigChecks, DefaultsAndRejections) {
    SolverConfig dip;
    dip.mode = SolverMode::pnp_dip;
    auto r = scirecon::resolve_config(dip);
    EXPECT_EQ(r.eta, 0.0);
    EXPECT_EQ(r.eta_decay, 1.0);
    EXPECT_EQ(r.lambda, 0.0);

    SolverConfig diptv;
    diptv.mode = SolverMode::pnp_dip_tv;
    r = scirecon::resolve_config(diptv);
    EXPECT_EQ(r.eta, 0.01);
    EXPECT_EQ(r.eta_decay, 0.95);
    EXPECT_EQ(r.lambda, 0.001);

    SolverConfig tv;
    tv.mode = SolverMode::admm_tv;
    r = scirecon::resolve_config(tv);
    EXPECT_EQ(r.eta, 0.01);
    EXPECT_EQ(r.eta_decay, 1.0);

    SolverConfig bad = dip;
    bad.eta = 0.02;
    EXPECT_THROW(scirecon::resolve_config(bad), ConfigError);
    bad = dip;
    bad.lambda = 0.1;
    EXPECT_THROW(scirecon::resolve_config(bad), ConfigError);
    bad = dip;
    bad.mu = 0.0;
    EXPECT_THROW(scirecon::resolve_config(bad), ConfigError);
    bad = tv;
    bad.eta = 0.0;
    EXPECT_THROW(scirecon::resolve_config(bad), ConfigError);
    bad = diptv;
    bad.eta_decay = 1.5;
    EXPECT_THROW(scirecon::resolve_config(bad), ConfigError);
    bad = dip;
    bad.inner.cap = 1;
    bad.inner.base = 10;
    EXPECT_THROW(scirecon::resolve_config(bad), ConfigError);
    SolverConfig warm_tv;
    warm_tv.mode = SolverMode::admm_tv;
    warm_tv.warm_start = true;
    EXPECT_THROW(scirecon::resolve_config(warm_tv), ConfigError);

    EXPECT_THROW(scirecon::solver_mode_from_string("dip"), ConfigError);
    EXPECT_EQ(scirecon::solver_mode_from_string("pnp_dip_tv"), SolverMode::pnp_dip_tv);
    EXPECT_EQ(scirecon::to_string(SolverMode::sole_dip), "sole_dip");
}

TEST(SolverConfigChecks, InnerPlanSchedule) {
    InnerPlan plan{4, 3, 10};
    EXPECT_EQ(plan.iters_at(0), 4);
    EXPECT_EQ(plan.iters_at(1), 7);
    EXPECT_EQ(plan.iters_at(2), 10);
    EXPECT_EQ(plan.iters_at(9), 10);
}

TEST(InitialPrior, RawAndNormalizedForms)
{
    Rng rng(31);
    auto op = random_op(rng, 2, 4, 4, 1);
    Cube<double> y(1, op.meas_rows(), op.meas_cols());
    for (auto& val : y.data) val = rng.uniform();

    Cube<double> raw = scirecon::initial_prior(op, y, false, 0.01);
    Cube<double> adj = op.adjoint(y);
    for (size_t i = 0; i < raw.data.size(); ++i) EXPECT_EQ(raw.data[i], adj.data[i]);

    Cube<double> scaled = y;
    const auto& diag = op.hth_diag();
    for (size_t i = 0; i < scaled.data.size(); ++i)
        scaled.data[i] = y.data[i] / (diag.data[i] + 0.01);
    Cube<double> expect = op.adjoint(scaled);
    Cube<double> norm_init = scirecon::initial_prior(op, y, true, 0.01);
    for (size_t i = 0; i < expect.data.size(); ++i)
        EXPECT_EQ(norm_init.data[i], expect.data[i]);
}

TEST(Reconstruct, EtaDecayLawScheduleAndDeterminism) {
    Rng rng(41);
    Cube<double> truth = synthetic_scene(2, 16, 16);
    auto op = random_op(rng, 2, 16, 16, 1);
    Cube<double> y = op.encode(truth);

    SolverConfig cfg;
    cfg.mode = SolverMode::pnp_dip_tv;
    cfg.outer_iters = 5;
    cfg.inner = InnerPlan{4, 3, 8};
    cfg.levels = 2;
    cfg.widths = {6, 8};
    cfg.seed = 7;
    auto [x1, r1] = scirecon::reconstruct(cfg, op, y, &truth);

    ASSERT_EQ(r1.trace.size(), 5u);
    for (int k = 0; k < 5; ++k) {
        EXPECT_EQ(r1.trace[k].eta, 0.01 * std::pow(0.95, k));
        EXPECT_EQ(r1.trace[k].inner_iters, std::min(8, 4 + 3 * k));
        EXPECT_TRUE(std::isfinite(r1.trace[k].fidelity));
        EXPECT_TRUE(std::isfinite(r1.trace[k].psnr_db));
    }
    EXPECT_FALSE(r1.diverged);
    EXPECT_TRUE(x1.all_finite());
    for (double val : x1.data) {
        EXPECT_GE(val, 0.0);
        EXPECT_LE(val, 1.0);
    }
    EXPECT_EQ(r1.generator_steps, 4 + 7 + 8 + 8 + 8);
    EXPECT_EQ(r1.denoiser_calls, 5);

    auto [x2, r2] = scirecon::reconstruct(cfg, op, y, &truth);
    ASSERT_EQ(r2.trace.size(), r1.trace.size());
    for (size_t k = 0; k < r1.trace.size(); ++k) {
        EXPECT_EQ(r1.trace[k].fidelity, r2.trace[k].fidelity);
        EXPECT_EQ(r1.trace[k].prior_residual, r2.trace[k].prior_residual);
        EXPECT_EQ(r1.trace[k].inner_final_loss, r2.trace[k].inner_final_loss);
        EXPECT_EQ(r1.trace[k].psnr_db, r2.trace[k].psnr_db);
    }
    for (size_t i = 0; i < x1.data.size(); ++i) EXPECT_EQ(x1.data[i], x2.data[i]);

    SolverConfig other = cfg;
    other.seed = 8;
    auto [x3, r3] = scirecon::reconstruct(other, op, y, &truth);
    bool same = true;
    for (size_t i = 0; i < x1.data.size(); ++i) same &= (x1.data[i] == x3.data[i]);
    EXPECT_FALSE(same);
}

TEST(Reconstruct, ModeReductionAudits) {
    Rng rng(51);
    Cube<double> truth = synthetic_scene(2, 16, 16);
    auto op = random_op(rng, 2, 16, 16, 1);
    Cube<double> y = op.encode(truth);

    SolverConfig dip;
    dip.mode = SolverMode::pnp_dip;
    dip.outer_iters = 3;
    dip.inner = InnerPlan{3, 0, 3};
    dip.levels = 2;
    dip.widths = {6, 8};
    auto [xd, rd] = scirecon::reconstruct(dip, op, y);
    EXPECT_FALSE(rd.diverged);  // the poisoned split was never read
    EXPECT_TRUE(xd.all_finite());
    EXPECT_EQ(rd.denoiser_calls, 0);
    EXPECT_EQ(rd.generator_steps, 9);

    SolverConfig tv;
    tv.mode = SolverMode::admm_tv;
    tv.outer_iters = 4;
    auto [xt, rt] = scirecon::reconstruct(tv, op, y);
    EXPECT_FALSE(rt.diverged);
    EXPECT_EQ(rt.generator_steps, 0);  // no generator branch at all
    EXPECT_EQ(rt.denoiser_calls, 4);
    for (const auto& d : rt.trace) EXPECT_TRUE(std::isnan(d.inner_final_loss));

    SolverConfig sf;
    sf.mode = SolverMode::single_fidelity;
    sf.outer_iters = 3;
    sf.inner = InnerPlan{2, 0, 2};
    sf.levels = 2;
    sf.widths = {6, 8};
    auto [xs, rs] = scirecon::reconstruct(sf, op, y);
    EXPECT_FALSE(rs.diverged);
    EXPECT_EQ(rs.denoiser_calls, 0);  // identity x-step is free
    EXPECT_EQ(rs.generator_steps, 6);
    EXPECT_TRUE(xs.all_finite());
}

TEST(Reconstruct, SoleDipRunsOneLongLoop) {
    Rng rng(61);
    Cube<double> truth = synthetic_scene(2, 8, 8);
    auto op = random_op(rng, 2, 8, 8, 1);
    Cube<double> y = op.encode(truth);

    SolverConfig cfg;
    cfg.mode = SolverMode::sole_dip;
    cfg.sole_iters = 40;
    cfg.levels = 2;
    cfg.widths = {6, 8};
    auto [x, r] = scirecon::reconstruct(cfg, op, y, &truth);
    EXPECT_FALSE(r.diverged);
    ASSERT_EQ(r.trace.size(), 1u);
    EXPECT_EQ(r.trace[0].inner_iters, 40);
    EXPECT_EQ(r.generator_steps, 40);
    EXPECT_TRUE(std::isfinite(r.trace[0].inner_final_loss));
    EXPECT_TRUE(x.all_finite());

    // default budget: the inner plan summed over the outer iterations
    SolverConfig def = cfg;
    def.sole_iters = 0;
    def.outer_iters = 3;
    def.inner = InnerPlan{2, 1, 5};
    auto [x2, r2] = scirecon::reconstruct(def, op, y);
    EXPECT_EQ(r2.generator_steps, 2 + 3 + 4);
}

TEST(Reconstruct, DivergenceAbortsWithPartialReport) {
    Rng rng(71);
    auto op = random_op(rng, 2, 8, 8, 1);
    Cube<double> y(1, op.meas_rows(), op.meas_cols());
    y.fill(std::numeric_limits<double>::infinity());

    SolverConfig cfg;
    cfg.mode = SolverMode::pnp_dip;
    cfg.outer_iters = 5;
    cfg.inner = InnerPlan{2, 0, 2};
    cfg.levels = 2;
    cfg.widths = {6, 8};
    auto [x, r] = scirecon::reconstruct(cfg, op, y);
    EXPECT_TRUE(r.diverged);
    EXPECT_TRUE(r.trace.empty());
    EXPECT_NE(r.divergence_note.find("iteration 0"), std::string::npos);
    EXPECT_TRUE(std::isnan(r.final_fidelity));
}

TEST(Reconstruct, AdmmTvDrivesRelativeFidelityBelowFivePercent) {
    Rng rng(81);
    Cube<double> truth = synthetic_scene(4, 32, 32);
    Cube<double> mask(1, 32, 32);
    for (auto& v : mask.data) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
    mask.data[0] = 1.0;
    SensingOperator<double> op(mask, ShiftSpec{1}, 4);
    Cube<double> y = op.encode(truth);

    SolverConfig cfg;
    cfg.mode = SolverMode::admm_tv;
    cfg.outer_iters = 30;
    auto [x, r] = scirecon::reconstruct(cfg, op, y, &truth);
    EXPECT_FALSE(r.diverged);
    EXPECT_LT(r.final_rel_fidelity, 0.05);
    EXPECT_LT(r.trace.back().fidelity, r.trace.front().fidelity);
    EXPECT_TRUE(std::isfinite(r.final_psnr_db));
    EXPECT_TRUE(std::isfinite(r.final_ssim));
}

TEST(Reconstruct, WarmStartKeepsTheTvQuality) {
    Rng rng(91);
    Cube<double> truth = synthetic_scene(2, 16, 16);
    Cube<double> mask(1, 16, 16);
    for (auto& v : mask.data) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
    mask.data[0] = 1.0;
    SensingOperator<double> op(mask, ShiftSpec{1}, 2);
    Cube<double> y = op.encode(truth);

    SolverConfig cfg;
    cfg.mode = SolverMode::pnp_dip;
    cfg.outer_iters = 1;
    cfg.inner = InnerPlan{20, 0, 20};
    cfg.levels = 2;
    cfg.widths = {6, 8};
    cfg.warm_start = true;
    cfg.warm_iters = 12;
    auto [x, r] = scirecon::reconstruct(cfg, op, y, &truth);
    EXPECT_FALSE(r.diverged);
    ASSERT_EQ(r.warm_trace.size(), 12u);
    ASSERT_EQ(r.trace.size(), 1u);
    double warm_final = r.warm_trace.back().psnr_db;
    EXPECT_TRUE(std::isfinite(warm_final));
    EXPECT_GE(r.trace[0].psnr_db, warm_final - 0.5);
    bool has_warm_stage = false;
    for (const auto& [name, seconds] : r.stage_seconds) has_warm_stage |= (name == "warm_start");
    EXPECT_TRUE(has_warm_stage);
}
