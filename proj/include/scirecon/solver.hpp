#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scirecon/core.hpp"
#include "scirecon/dip.hpp"
#include "scirecon/metrics.hpp"
#include "scirecon/sensing.hpp"
#include "scirecon/tv.hpp"

namespace scirecon {

/// Reconstruction schemes. pnp_dip alternates a closed-form data projection
/// with a freshly trained generator; pnp_dip_tv adds a TV split on top;
/// single_fidelity keeps only the proximity projection on the x side;
/// sole_dip fits the generator to the measurement in one long loop; admm_tv
/// drops the generator branch entirely.
enum class SolverMode { pnp_dip, pnp_dip_tv, single_fidelity, sole_dip, admm_tv };

inline SolverMode solver_mode_from_string(const std::string& s) {
    if (s == "pnp_dip") return SolverMode::pnp_dip;
    if (s == "pnp_dip_tv") return SolverMode::pnp_dip_tv;
    if (s == "single_fidelity") return SolverMode::single_fidelity;
    if (s == "sole_dip") return SolverMode::sole_dip;
    if (s == "admm_tv") return SolverMode::admm_tv;
    throw ConfigError("unknown solver mode: " + s);
}

inline std::string to_string(SolverMode m) {
    switch (m) {
        case SolverMode::pnp_dip: return "pnp_dip";
        case SolverMode::pnp_dip_tv: return "pnp_dip_tv";
        case SolverMode::single_fidelity: return "single_fidelity";
        case SolverMode::sole_dip: return "sole_dip";
        case SolverMode::admm_tv: return "admm_tv";
    }
    throw ConfigError("unknown solver mode");
}

/// Generator training budget per outer iteration: min(cap, base + step·k).
/// Short early fits act as early stopping while the running iterate is still
/// coarse; later iterations earn longer fits.
struct InnerPlan {
    int base = 100;
    int step = 25;
    int cap = 900;
    int iters_at(int k) const { return std::min(cap, base + step * k); }
};

/// Negative eta / eta_decay / lambda mean "pick the mode default".
struct SolverConfig {
    SolverMode mode = SolverMode::pnp_dip;
    double mu = 0.01;    // proximity weight between x and the prior image
    double rho = 0.001;  // measurement-loss weight inside generator training
    double eta = -1.0;        // TV split weight; default 0.01 when the split exists, else 0
    double eta_decay = -1.0;  // per-outer-iteration factor; default 0.95 for pnp_dip_tv, else 1
    double lambda = -1.0;     // TV strength; the denoiser runs at sigma = lambda/eta
    int outer_iters = 80;
    InnerPlan inner;
    double lr = 0.001;
    long sole_iters = 0;  // 0: use the inner plan summed over outer_iters
    int tv_iters = 50;
    DenoiserKind u_denoiser = DenoiserKind::tv;
    DenoiserKind sf_denoiser = DenoiserKind::identity;  // single_fidelity x-step
    int levels = 3;
    std::vector<int> widths = {16, 32, 64};
    bool warm_start = false;  // seed the prior image with a TV-only run
    int warm_iters = 20;
    double warm_eta = 0.01;
    double warm_lambda = 0.001;
    bool normalized_init = false;  // divide the adjoint init by Diag(HHt) + mu
    uint64_t seed = 0;
};

inline bool uses_generator(SolverMode m) { return m != SolverMode::admm_tv; }

inline bool uses_tv_split(SolverMode m) {
    return m == SolverMode::pnp_dip_tv || m == SolverMode::admm_tv;
}

/// Fills mode defaults and rejects inconsistent combinations.
inline SolverConfig resolve_config(const SolverConfig& in) {
    SolverConfig cfg = in;
    const bool split = uses_tv_split(cfg.mode);
    if (cfg.eta < 0.0) cfg.eta = split ? 0.01 : 0.0;
    if (cfg.eta_decay < 0.0) cfg.eta_decay = cfg.mode == SolverMode::pnp_dip_tv ? 0.95 : 1.0;
    if (cfg.lambda < 0.0) cfg.lambda = split ? 0.001 : 0.0;

    if (!split && cfg.eta != 0.0)
        throw ConfigError("solver: eta requires a TV split (pnp_dip_tv or admm_tv)");
    if (cfg.mode == SolverMode::pnp_dip && cfg.lambda != 0.0)
        throw ConfigError("solver: pnp_dip runs without a TV term; lambda must be 0");
    if (split && !(cfg.eta > 0.0)) throw ConfigError("solver: the TV split needs eta > 0");
    if (!(cfg.eta_decay > 0.0) || cfg.eta_decay > 1.0)
        throw ConfigError("solver: eta_decay must lie in (0, 1]");
    if (cfg.lambda < 0.0) throw ConfigError("solver: lambda must be nonnegative");
    if (cfg.rho < 0.0) throw ConfigError("solver: rho must be nonnegative");
    const bool gen = uses_generator(cfg.mode) && cfg.mode != SolverMode::sole_dip;
    if (gen && !(cfg.mu > 0.0))
        throw ConfigError("solver: mu must be positive when the generator branch is active");
    if (cfg.mu < 0.0) throw ConfigError("solver: mu must be nonnegative");
    if (cfg.outer_iters < 1) throw ConfigError("solver: outer_iters must be positive");
    if (cfg.inner.base < 1 || cfg.inner.step < 0 || cfg.inner.cap < cfg.inner.base)
        throw ConfigError("solver: inner plan needs base >= 1, step >= 0, cap >= base");
    if (!(cfg.lr > 0.0)) throw ConfigError("solver: learning rate must be positive");
    if (cfg.sole_iters < 0) throw ConfigError("solver: sole_iters must be nonnegative");
    if (cfg.tv_iters < 1) throw ConfigError("solver: tv_iters must be positive");
    if (cfg.warm_start) {
        if (cfg.mode == SolverMode::admm_tv || cfg.mode == SolverMode::sole_dip)
            throw ConfigError("solver: warm start only applies to generator modes");
        if (cfg.warm_iters < 1 || !(cfg.warm_eta > 0.0) || cfg.warm_lambda < 0.0)
            throw ConfigError("solver: invalid warm start parameters");
    }
    return cfg;
}

template <typename T>
struct SolverState {
    Cube<T> x, u, v, b, p;
    int k = 0;
};

struct IterationDiag {
    int k = 0;
    double fidelity = 0.0;        // ||y - Hx||
    double prior_residual = 0.0;  // ||x - p - b|| with the freshest p, pre-update b
    double eta = 0.0;             // split weight used this iteration
    int inner_iters = 0;          // generator steps spent this iteration
    double inner_final_loss = std::numeric_limits<double>::quiet_NaN();
    double psnr_db = std::numeric_limits<double>::quiet_NaN();  // set when truth is supplied
};

struct RunReport {
    SolverConfig config;  // resolved values, defaults filled in
    std::vector<IterationDiag> trace;
    std::vector<IterationDiag> warm_trace;
    std::vector<std::pair<std::string, double>> stage_seconds;
    long denoiser_calls = 0;
    long generator_steps = 0;
    bool diverged = false;
    std::string divergence_note;
    double final_fidelity = std::numeric_limits<double>::quiet_NaN();
    double final_rel_fidelity = std::numeric_limits<double>::quiet_NaN();
    double final_psnr_db = std::numeric_limits<double>::quiet_NaN();
    double final_ssim = std::numeric_limits<double>::quiet_NaN();
    double total_seconds = 0.0;
};

namespace detail {

template <typename T>
double diff_norm(const Cube<T>& a, const Cube<T>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
        s += d * d;
    }
    return std::sqrt(s);
}

inline void add_stage(RunReport& report, const std::string& name, double seconds) {
    for (auto& [n, s] : report.stage_seconds)
        if (n == name) {
            s += seconds;
            return;
        }
    report.stage_seconds.emplace_back(name, seconds);
}

class StageTimer {
  public:
    StageTimer() : start_(std::chrono::steady_clock::now()) {}
    double lap() {
        auto now = std::chrono::steady_clock::now();
        double s = std::chrono::duration<double>(now - start_).count();
        start_ = now;
        return s;
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

template <typename T>
Cube<T> clipped_unit(const Cube<T>& x) {
    Cube<T> out = x;
    for (auto& v : out.data) v = std::min(T(1), std::max(T(0), v));
    return out;
}

}  // namespace detail

/// Exact minimizer of (1/2)||y − Hx||² + (mu/2)||x − p − b||² + (eta/2)||x − u − v||²,
/// via the diagonal structure of HHᵀ:
///   c = (mu(p + b) + eta(u + v)) / (mu + eta)
///   x = c + Hᵀ[(y − Hc) ⊘ (Diag(HHᵀ) + mu + eta)].
/// A zero-weight branch is skipped outright, so its cubes are never read.
template <typename T>
Cube<T> x_update(const SensingOperator<T>& op, const Cube<T>& y, const Cube<T>& p,
                 const Cube<T>& b, const Cube<T>& u, const Cube<T>& v, double mu, double eta) {
    if (mu < 0.0 || eta < 0.0) throw ConfigError("x_update: weights must be nonnegative");
    if (!(mu + eta > 0.0)) throw ConfigError("x_update: mu + eta must be positive");
    op.check_measurement(y);

    Cube<T> c(op.cube_channels(), op.cube_rows(), op.cube_cols());
    const size_t n = c.data.size();
    if (mu > 0.0 && eta > 0.0) {
        op.check_cube(p);
        op.check_cube(b);
        op.check_cube(u);
        op.check_cube(v);
        const T wm = static_cast<T>(mu / (mu + eta));
        const T we = static_cast<T>(eta / (mu + eta));
        for (size_t i = 0; i < n; ++i)
            c.data[i] = wm * (p.data[i] + b.data[i]) + we * (u.data[i] + v.data[i]);
    } else if (mu > 0.0) {
        op.check_cube(p);
        op.check_cube(b);
        for (size_t i = 0; i < n; ++i) c.data[i] = p.data[i] + b.data[i];
    } else {
        op.check_cube(u);
        op.check_cube(v);
        for (size_t i = 0; i < n; ++i) c.data[i] = u.data[i] + v.data[i];
    }

    Cube<T> residual = op.encode(c);
    const Cube<T>& diag = op.hth_diag();
    const T shift = static_cast<T>(mu + eta);
    for (size_t i = 0; i < residual.data.size(); ++i)
        residual.data[i] = (y.data[i] - residual.data[i]) / (diag.data[i] + shift);
    Cube<T> corr = op.adjoint(residual);
    for (size_t i = 0; i < n; ++i) c.data[i] += corr.data[i];
    return c;
}

/// u = D_sigma(x − v): proximal step of the TV term on the split variable.
template <typename T>
Cube<T> u_update(const Cube<T>& x, const Cube<T>& v, const DenoiserSpec& spec) {
    if (!x.same_shape(v)) throw DimensionError("u_update: shape mismatch");
    Cube<T> z(x.channels, x.rows, x.cols);
    for (size_t i = 0; i < z.data.size(); ++i) z.data[i] = x.data[i] - v.data[i];
    return apply_denoiser(z, spec);
}

/// Scaled dual ascent for the u = x constraint.
template <typename T>
Cube<T> v_update(const Cube<T>& v, const Cube<T>& x, const Cube<T>& u) {
    if (!v.same_shape(x) || !v.same_shape(u)) throw DimensionError("v_update: shape mismatch");
    Cube<T> out(v.channels, v.rows, v.cols);
    for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = v.data[i] - (x.data[i] - u.data[i]);
    return out;
}

/// Scaled dual ascent for the x = T(e) constraint.
template <typename T>
Cube<T> b_update(const Cube<T>& b, const Cube<T>& x, const Cube<T>& p) {
    if (!b.same_shape(x) || !b.same_shape(p)) throw DimensionError("b_update: shape mismatch");
    Cube<T> out(b.channels, b.rows, b.cols);
    for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = b.data[i] - (x.data[i] - p.data[i]);
    return out;
}

/// Adjoint image used to start the iteration, optionally rebalanced by the
/// per-pixel sensing weight.
template <typename T>
Cube<T> initial_prior(const SensingOperator<T>& op, const Cube<T>& y, bool normalized,
                      double mu) {
    if (!normalized) return op.adjoint(y);
    Cube<T> scaled = y;
    const Cube<T>& diag = op.hth_diag();
    for (size_t i = 0; i < scaled.data.size(); ++i)
        scaled.data[i] = y.data[i] / (diag.data[i] + static_cast<T>(mu));
    return op.adjoint(scaled);
}

/// Runs the configured scheme on one measurement. Numerical divergence does
/// not throw: the run stops and the report carries the partial trace with
/// diverged set. Invalid configurations throw up front.
template <typename T>
std::pair<Cube<T>, RunReport> reconstruct(const SolverConfig& user_cfg,
                                          const SensingOperator<T>& op, const Cube<T>& y,
                                          const Cube<T>* ground_truth = nullptr) {
    const SolverConfig cfg = resolve_config(user_cfg);
    op.check_measurement(y);
    if (ground_truth) op.check_cube(*ground_truth);

    RunReport report;
    report.config = cfg;
    detail::StageTimer total_clock;
    detail::StageTimer stage;

    const int nl = op.cube_channels(), nr = op.cube_rows(), nc = op.cube_cols();
    const bool gen_branch = cfg.mode != SolverMode::admm_tv && cfg.mode != SolverMode::sole_dip;
    const bool tv_branch = uses_tv_split(cfg.mode);

    auto finish = [&](Cube<T>&& out) {
        if (!report.diverged) {
            out = detail::clipped_unit(out);
            Cube<T> meas = op.encode(out);
            report.final_fidelity = detail::diff_norm(y, meas);
            double ynorm = norm(y);
            report.final_rel_fidelity = report.final_fidelity / std::max(1e-300, ynorm);
            if (ground_truth) {
                report.final_psnr_db = psnr(*ground_truth, out).average;
                if (out.rows >= 11 && out.cols >= 11)  // structural window must fit
                    report.final_ssim = ssim(*ground_truth, out).average;
            }
        }
        report.total_seconds = total_clock.lap();
        return std::make_pair(std::move(out), std::move(report));
    };

    std::optional<DipEngine<T>> engine;
    Cube<T> e;
    if (gen_branch || cfg.mode == SolverMode::sole_dip) {
        GeneratorConfig gcfg;
        gcfg.levels = cfg.levels;
        gcfg.widths = cfg.widths;
        gcfg.out_channels = nl;
        gcfg.rows = nr;
        gcfg.cols = nc;
        engine.emplace(gcfg);  // rejects widths/level/shape mismatches up front
        e = make_seed_input<T>(nl, nr, nc, derive_seed(cfg.seed, 0));
    }

    if (cfg.mode == SolverMode::sole_dip) {
        long iters = cfg.sole_iters;
        if (iters == 0)
            for (int k = 0; k < cfg.outer_iters; ++k) iters += cfg.inner.iters_at(k);
        DipLossSpec<T> lspec;
        lspec.mode = DipMode::sole;
        InnerSchedule sched{static_cast<int>(iters), derive_seed(cfg.seed, 1), cfg.lr};
        Cube<T> out(nl, nr, nc);
        stage.lap();
        try {
            auto res = engine->train(op, y, lspec, e, sched);
            report.generator_steps = iters;
            out = std::move(res.prior);
            IterationDiag d;
            d.k = 0;
            d.fidelity = detail::diff_norm(y, op.encode(out));
            d.inner_iters = static_cast<int>(iters);
            d.inner_final_loss = res.loss_trace.back();
            if (ground_truth) d.psnr_db = psnr(*ground_truth, detail::clipped_unit(out)).average;
            report.trace.push_back(d);
        } catch (const TrainingDivergence& td) {
            report.diverged = true;
            report.divergence_note = td.what();
            report.generator_steps = static_cast<long>(td.partial_trace.size());
        }
        detail::add_stage(report, "generator", stage.lap());
        return finish(std::move(out));
    }

    SolverState<T> st;
    stage.lap();
    if (cfg.warm_start) {
        SolverConfig wcfg;
        wcfg.mode = SolverMode::admm_tv;
        wcfg.outer_iters = cfg.warm_iters;
        wcfg.eta = cfg.warm_eta;
        wcfg.eta_decay = 1.0;
        wcfg.lambda = cfg.warm_lambda;
        wcfg.tv_iters = cfg.tv_iters;
        wcfg.normalized_init = cfg.normalized_init;
        wcfg.mu = cfg.mu;
        wcfg.seed = cfg.seed;
        auto [wx, wreport] = reconstruct(wcfg, op, y, ground_truth);
        report.warm_trace = std::move(wreport.trace);
        report.denoiser_calls += wreport.denoiser_calls;
        detail::add_stage(report, "warm_start", stage.lap());
        if (wreport.diverged) {
            report.diverged = true;
            report.divergence_note = "warm start diverged: " + wreport.divergence_note;
            return finish(std::move(wx));
        }
        st.p = std::move(wx);
    } else {
        st.p = initial_prior(op, y, cfg.normalized_init, cfg.mu);
        detail::add_stage(report, "init", stage.lap());
    }

    st.b = Cube<T>(nl, nr, nc);
    st.u = Cube<T>(nl, nr, nc);
    st.v = Cube<T>(nl, nr, nc);
    if (tv_branch) {
        st.u = st.p;
    } else {
        // poison the unused split so any accidental read surfaces immediately
        st.u.fill(std::numeric_limits<T>::quiet_NaN());
        st.v.fill(std::numeric_limits<T>::quiet_NaN());
    }

    auto abort_run = [&](int k, const std::string& what) {
        report.diverged = true;
        report.divergence_note = "iteration " + std::to_string(k) + ": " + what;
    };

    for (int k = 0; k < cfg.outer_iters; ++k) {
        st.k = k;
        const double eta_k = cfg.eta * std::pow(cfg.eta_decay, k);

        stage.lap();
        if (cfg.mode == SolverMode::single_fidelity) {
            Cube<T> z(nl, nr, nc);
            for (size_t i = 0; i < z.data.size(); ++i) z.data[i] = st.p.data[i] + st.b.data[i];
            DenoiserSpec dspec;
            dspec.kind = cfg.sf_denoiser;
            dspec.sigma = cfg.lambda / cfg.mu;
            dspec.iters = cfg.tv_iters;
            st.x = apply_denoiser(z, dspec);
            if (cfg.sf_denoiser != DenoiserKind::identity) ++report.denoiser_calls;
        } else {
            const double mu_eff = cfg.mode == SolverMode::admm_tv ? 0.0 : cfg.mu;
            st.x = x_update(op, y, st.p, st.b, st.u, st.v, mu_eff, eta_k);
        }
        detail::add_stage(report, "x_update", stage.lap());
        if (!st.x.all_finite()) {
            abort_run(k, "x became non-finite");
            break;
        }

        if (tv_branch) {
            DenoiserSpec dspec;
            dspec.kind = cfg.u_denoiser;
            dspec.sigma = eta_k > 0.0 ? cfg.lambda / eta_k : 0.0;
            dspec.iters = cfg.tv_iters;
            st.u = u_update(st.x, st.v, dspec);
            ++report.denoiser_calls;
            st.v = v_update(st.v, st.x, st.u);
            detail::add_stage(report, "tv_split", stage.lap());
        }

        IterationDiag d;
        d.k = k;
        d.eta = eta_k;

        if (gen_branch) {
            DipLossSpec<T> lspec;
            lspec.mode = cfg.mode == SolverMode::single_fidelity ? DipMode::single : DipMode::dual;
            lspec.rho = cfg.rho;
            lspec.mu = cfg.mu;
            lspec.x = &st.x;
            lspec.b = &st.b;
            InnerSchedule sched{cfg.inner.iters_at(k), derive_seed(cfg.seed, 1000 + k), cfg.lr};
            stage.lap();
            try {
                auto res = engine->train(op, y, lspec, e, sched);
                st.p = std::move(res.prior);
                d.inner_iters = sched.iters;
                d.inner_final_loss = res.loss_trace.back();
                report.generator_steps += sched.iters;
            } catch (const TrainingDivergence& td) {
                detail::add_stage(report, "generator", stage.lap());
                abort_run(k, std::string("generator training diverged: ") + td.what());
                break;
            }
            detail::add_stage(report, "generator", stage.lap());
        }

        d.fidelity = detail::diff_norm(y, op.encode(st.x));
        d.prior_residual = 0.0;
        {
            double s = 0.0;
            for (size_t i = 0; i < st.x.data.size(); ++i) {
                double r = static_cast<double>(st.x.data[i]) - st.p.data[i] - st.b.data[i];
                s += r * r;
            }
            d.prior_residual = std::sqrt(s);
        }

        if (gen_branch) st.b = b_update(st.b, st.x, st.p);

        if (!st.p.all_finite() || !st.b.all_finite() ||
            (tv_branch && (!st.u.all_finite() || !st.v.all_finite()))) {
            abort_run(k, "state became non-finite");
            break;
        }
        if (ground_truth)
            d.psnr_db = psnr(*ground_truth, detail::clipped_unit(st.x)).average;
        report.trace.push_back(d);
    }

    if (st.x.data.empty()) st.x = Cube<T>(nl, nr, nc);
    return finish(std::move(st.x));
}

}  // namespace scirecon
