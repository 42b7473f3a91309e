#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "scirecon/adam.hpp"
#include "scirecon/core.hpp"
#include "scirecon/generator.hpp"
#include "scirecon/sensing.hpp"

namespace scirecon {

enum class DipMode { dual, single, sole };

inline DipMode dip_mode_from_string(const std::string& s) {
    if (s == "dual") return DipMode::dual;
    if (s == "single") return DipMode::single;
    if (s == "sole") return DipMode::sole;
    throw ConfigError("unknown training loss mode: " + s);
}

/// Training objective for the generator.
///   dual:   (rho/2)·||y − H·t||² + (mu/2)·||x − t − b||²
///   single: (1/2)·||y − H·t||² + mu·||x − t − b||²
///   sole:   ||y − H·t||²
/// where t = T_Θ(e). Sole mode ignores x and b.
template <typename T>
struct DipLossSpec {
    DipMode mode = DipMode::dual;
    double rho = 0.001;
    double mu = 0.01;
    const Cube<T>* x = nullptr;
    const Cube<T>* b = nullptr;
};

/// Divergence signal carrying the loss history up to the failing step.
class TrainingDivergence : public DivergenceError {
  public:
    TrainingDivergence(const std::string& msg, std::vector<double> trace)
        : DivergenceError(msg), partial_trace(std::move(trace)) {}
    std::vector<double> partial_trace;
};

template <typename T>
struct InnerResult {
    Cube<T> prior;
    std::vector<double> loss_trace;
};

struct InnerSchedule {
    int iters = 100;
    uint64_t seed = 0;
    double lr = 0.001;
};

/// Owns the generator plan, workspace and scratch so repeated training loops
/// allocate nothing. One engine per concurrent run.
template <typename T>
class DipEngine {
  public:
    explicit DipEngine(const GeneratorConfig& cfg) : gen_(cfg) { gen_.prepare(ws_); }

    const Generator& generator() const { return gen_; }

    static void validate(const DipLossSpec<T>& spec, const GeneratorConfig& cfg) {
        if (spec.mode == DipMode::sole) return;
        if (!(spec.mu > 0.0)) throw ConfigError("training loss: mu must be positive");
        if (spec.rho < 0.0) throw ConfigError("training loss: rho must be nonnegative");
        if (!spec.x || !spec.b)
            throw ConfigError("training loss: proximity target and offset required");
        if (spec.x->channels != cfg.out_channels || spec.x->rows != cfg.rows ||
            spec.x->cols != cfg.cols || !spec.x->same_shape(*spec.b))
            throw DimensionError("training loss: proximity target shape mismatch");
    }

    double loss_and_grad(const std::vector<T>& params, const Cube<T>& e,
                         const SensingOperator<T>& op, const Cube<T>& y,
                         const DipLossSpec<T>& spec, std::vector<T>& grad_params) {
        validate(spec, gen_.config());
        op.check_measurement(y);
        gen_.forward(params, e, ws_);
        Cube<T> t = gen_.output_cube(ws_);

        Cube<T> r = op.encode(t);
        for (size_t i = 0; i < r.data.size(); ++i) r.data[i] -= y.data[i];
        double fid = sq_norm(r);

        double loss = 0.0;
        grad_t_.assign(t.data.size(), T(0));
        switch (spec.mode) {
            case DipMode::dual: {
                Cube<T> hr = op.adjoint(r);
                const T rho = static_cast<T>(spec.rho), mu = static_cast<T>(spec.mu);
                double prox = 0.0;
                for (size_t i = 0; i < grad_t_.size(); ++i) {
                    T q = spec.x->data[i] - t.data[i] - spec.b->data[i];
                    prox += static_cast<double>(q) * static_cast<double>(q);
                    grad_t_[i] = rho * hr.data[i] - mu * q;
                }
                loss = 0.5 * spec.rho * fid + 0.5 * spec.mu * prox;
                break;
            }
            case DipMode::single: {
                Cube<T> hr = op.adjoint(r);
                const T mu = static_cast<T>(spec.mu);
                double prox = 0.0;
                for (size_t i = 0; i < grad_t_.size(); ++i) {
                    T q = spec.x->data[i] - t.data[i] - spec.b->data[i];
                    prox += static_cast<double>(q) * static_cast<double>(q);
                    grad_t_[i] = hr.data[i] - T(2) * mu * q;
                }
                loss = 0.5 * fid + spec.mu * prox;
                break;
            }
            case DipMode::sole: {
                Cube<T> hr = op.adjoint(r);
                for (size_t i = 0; i < grad_t_.size(); ++i) grad_t_[i] = T(2) * hr.data[i];
                loss = fid;
                break;
            }
        }
        gen_.backward(params, e, ws_, grad_t_, grad_params);
        return loss;
    }

    InnerResult<T> train(const SensingOperator<T>& op, const Cube<T>& y,
                         const DipLossSpec<T>& spec, const Cube<T>& e,
                         const InnerSchedule& schedule) {
        if (schedule.iters < 1) throw ConfigError("inner loop needs at least one iteration");
        auto params = gen_.template init_params<T>(schedule.seed);
        AdamState<T> adam(params.size(), schedule.lr);
        std::vector<double> trace;
        trace.reserve(schedule.iters);
        for (int i = 0; i < schedule.iters; ++i) {
            double loss = loss_and_grad(params, e, op, y, spec, grad_params_);
            if (!std::isfinite(loss))
                throw TrainingDivergence("training loss became non-finite", std::move(trace));
            trace.push_back(loss);
            bool grad_ok = true;
            for (T g : grad_params_) grad_ok &= std::isfinite(static_cast<double>(g));
            if (!grad_ok)
                throw TrainingDivergence("training gradient became non-finite", std::move(trace));
            adam.step(params, grad_params_);
        }
        gen_.forward(params, e, ws_);
        Cube<T> prior = gen_.output_cube(ws_);
        if (!prior.all_finite())
            throw TrainingDivergence("prior image became non-finite", std::move(trace));
        return InnerResult<T>{std::move(prior), std::move(trace)};
    }

  private:
    Generator gen_;
    Generator::Workspace<T> ws_;
    std::vector<T> grad_t_;
    std::vector<T> grad_params_;
};

template <typename T>
std::pair<double, std::vector<T>> loss_and_grad(const std::vector<T>& params,
                                                const GeneratorConfig& cfg, const Cube<T>& e,
                                                const SensingOperator<T>& op, const Cube<T>& y,
                                                const DipLossSpec<T>& spec) {
    DipEngine<T> engine(cfg);
    std::vector<T> grad;
    double loss = engine.loss_and_grad(params, e, op, y, spec, grad);
    return {loss, std::move(grad)};
}

template <typename T>
InnerResult<T> train_inner_loop(const SensingOperator<T>& op, const Cube<T>& y,
                                const DipLossSpec<T>& spec, const GeneratorConfig& cfg,
                                const Cube<T>& e, const InnerSchedule& schedule) {
    DipEngine<T> engine(cfg);
    return engine.train(op, y, spec, e, schedule);
}

}  // namespace scirecon
