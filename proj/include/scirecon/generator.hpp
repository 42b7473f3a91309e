#pragma once

#include <cmath>
#include <cstring>
#include <vector>

#include "scirecon/core.hpp"

namespace scirecon {

/// Encoder-decoder generator without skip connections: per level a 3x3
/// convolution, leaky-rectifier (slope 0.1) and 2x2 average pooling on the
/// way down, a stride-2 transposed convolution (zero-stuffing + 3x3
/// convolution) and leaky-rectifier on the way up, then a final 3x3
/// convolution squashed through a logistic to (0,1). Input and output share
/// the cube shape.
struct GeneratorConfig {
    int levels = 3;
    std::vector<int> widths = {16, 32, 64};
    int out_channels = 0;  // spectral channels; the seed input has the same count
    int rows = 0;
    int cols = 0;
};

namespace detail {

template <typename T>
void pad1(const T* src, int ch, int h, int w, T* dst) {
    const int ph = h + 2, pw = w + 2;
    for (int c = 0; c < ch; ++c) {
        T* d = dst + static_cast<size_t>(c) * ph * pw;
        std::memset(d, 0, sizeof(T) * pw);
        std::memset(d + static_cast<size_t>(ph - 1) * pw, 0, sizeof(T) * pw);
        const T* s = src + static_cast<size_t>(c) * h * w;
        for (int i = 0; i < h; ++i) {
            T* row = d + static_cast<size_t>(i + 1) * pw;
            row[0] = T(0);
            std::memcpy(row + 1, s + static_cast<size_t>(i) * w, sizeof(T) * w);
            row[w + 1] = T(0);
        }
    }
}

// Same-size 3x3 correlation over a pre-padded input. Weights are laid out
// [cout][cin][9]; bias may be null. Each output channel is written by one
// worker with a fixed accumulation order.
template <typename T>
void conv3_forward(const T* padded, int cin, int h, int w, const T* weights, const T* bias,
                   int cout, T* out) {
    const int pw = w + 2;
    const size_t plane = static_cast<size_t>(h) * w;
    const size_t pplane = static_cast<size_t>(h + 2) * pw;
    parallel_for(cout, [&](int co) {
        T* oplane = out + static_cast<size_t>(co) * plane;
        T init = bias ? bias[co] : T(0);
        for (size_t i = 0; i < plane; ++i) oplane[i] = init;
        for (int ci = 0; ci < cin; ++ci) {
            const T* wk = weights + (static_cast<size_t>(co) * cin + ci) * 9;
            const T w00 = wk[0], w01 = wk[1], w02 = wk[2];
            const T w10 = wk[3], w11 = wk[4], w12 = wk[5];
            const T w20 = wk[6], w21 = wk[7], w22 = wk[8];
            const T* ip = padded + static_cast<size_t>(ci) * pplane;
            for (int i = 0; i < h; ++i) {
                const T* r0 = ip + static_cast<size_t>(i) * pw;
                const T* r1 = r0 + pw;
                const T* r2 = r1 + pw;
                T* orow = oplane + static_cast<size_t>(i) * w;
                for (int j = 0; j < w; ++j)
                    orow[j] += w00 * r0[j] + w01 * r0[j + 1] + w02 * r0[j + 2] +
                               w10 * r1[j] + w11 * r1[j + 1] + w12 * r1[j + 2] +
                               w20 * r2[j] + w21 * r2[j + 1] + w22 * r2[j + 2];
            }
        }
    });
}

// gW[co][ci][tap] = sum over the image of padded_in shifted by the tap times
// gout; gb[co] = sum of gout. Double accumulators keep single-precision
// training gradients clean.
template <typename T>
void conv3_grad_weights(const T* padded, int cin, int h, int w, const T* gout, int cout, T* gw,
                        T* gb) {
    const int pw = w + 2;
    const size_t plane = static_cast<size_t>(h) * w;
    const size_t pplane = static_cast<size_t>(h + 2) * pw;
    parallel_for(cout, [&](int co) {
        const T* gplane = gout + static_cast<size_t>(co) * plane;
        double bsum = 0.0;
        for (size_t i = 0; i < plane; ++i) bsum += static_cast<double>(gplane[i]);
        gb[co] = static_cast<T>(bsum);
        for (int ci = 0; ci < cin; ++ci) {
            const T* ip = padded + static_cast<size_t>(ci) * pplane;
            T* wk = gw + (static_cast<size_t>(co) * cin + ci) * 9;
            for (int ki = 0; ki < 3; ++ki)
                for (int kj = 0; kj < 3; ++kj) {
                    double acc = 0.0;
                    for (int i = 0; i < h; ++i) {
                        const T* irow = ip + static_cast<size_t>(i + ki) * pw + kj;
                        const T* grow = gplane + static_cast<size_t>(i) * w;
                        double rowacc = 0.0;
                        for (int j = 0; j < w; ++j)
                            rowacc += static_cast<double>(irow[j]) * static_cast<double>(grow[j]);
                        acc += rowacc;
                    }
                    wk[ki * 3 + kj] = static_cast<T>(acc);
                }
        }
    });
}

template <typename T>
void avgpool2(const T* in, int ch, int h, int w, T* out) {
    const int oh = h / 2, ow = w / 2;
    for (int c = 0; c < ch; ++c) {
        const T* ip = in + static_cast<size_t>(c) * h * w;
        T* op = out + static_cast<size_t>(c) * oh * ow;
        for (int i = 0; i < oh; ++i) {
            const T* r0 = ip + static_cast<size_t>(2 * i) * w;
            const T* r1 = r0 + w;
            T* orow = op + static_cast<size_t>(i) * ow;
            for (int j = 0; j < ow; ++j)
                orow[j] = T(0.25) * (r0[2 * j] + r0[2 * j + 1] + r1[2 * j] + r1[2 * j + 1]);
        }
    }
}

template <typename T>
void avgpool2_backward(const T* gout, int ch, int h, int w, T* gin) {
    const int oh = h / 2, ow = w / 2;
    for (int c = 0; c < ch; ++c) {
        const T* gp = gout + static_cast<size_t>(c) * oh * ow;
        T* ip = gin + static_cast<size_t>(c) * h * w;
        for (int i = 0; i < oh; ++i) {
            T* r0 = ip + static_cast<size_t>(2 * i) * w;
            T* r1 = r0 + w;
            const T* grow = gp + static_cast<size_t>(i) * ow;
            for (int j = 0; j < ow; ++j) {
                T g = T(0.25) * grow[j];
                r0[2 * j] = g;
                r0[2 * j + 1] = g;
                r1[2 * j] = g;
                r1[2 * j + 1] = g;
            }
        }
    }
}

// Zero-stuffing for the stride-2 transposed convolution: nonzeros land on
// even coordinates of a doubled grid.
template <typename T>
void stuff2(const T* in, int ch, int h, int w, T* out) {
    const int oh = 2 * h, ow = 2 * w;
    std::memset(out, 0, sizeof(T) * static_cast<size_t>(ch) * oh * ow);
    for (int c = 0; c < ch; ++c) {
        const T* ip = in + static_cast<size_t>(c) * h * w;
        T* op = out + static_cast<size_t>(c) * oh * ow;
        for (int i = 0; i < h; ++i) {
            const T* irow = ip + static_cast<size_t>(i) * w;
            T* orow = op + static_cast<size_t>(2 * i) * ow;
            for (int j = 0; j < w; ++j) orow[2 * j] = irow[j];
        }
    }
}

template <typename T>
void stuff2_backward(const T* gstuffed, int ch, int h, int w, T* gin) {
    const int ow = 2 * w;
    for (int c = 0; c < ch; ++c) {
        const T* gp = gstuffed + static_cast<size_t>(c) * (2 * h) * ow;
        T* ip = gin + static_cast<size_t>(c) * h * w;
        for (int i = 0; i < h; ++i) {
            const T* grow = gp + static_cast<size_t>(2 * i) * ow;
            T* irow = ip + static_cast<size_t>(i) * w;
            for (int j = 0; j < w; ++j) irow[j] = grow[2 * j];
        }
    }
}

template <typename T>
void leaky_relu_inplace(T* v, size_t n) {
    for (size_t i = 0; i < n; ++i) v[i] = v[i] > T(0) ? v[i] : T(0.1) * v[i];
}

// Multiplies the incoming gradient by the rectifier derivative, read off the
// activated value (the rectifier preserves sign).
template <typename T>
void leaky_relu_backward_inplace(const T* act, T* g, size_t n) {
    for (size_t i = 0; i < n; ++i) g[i] *= act[i] > T(0) ? T(1) : T(0.1);
}

template <typename T>
void logistic_inplace(T* v, size_t n) {
    const T lo = std::nextafter(T(0), T(1));
    const T hi = std::nextafter(T(1), T(0));
    for (size_t i = 0; i < n; ++i) {
        T s = T(1) / (T(1) + std::exp(-v[i]));
        // clamp to the open interval, but let NaN through so divergence
        // stays observable downstream
        v[i] = s != s ? s : std::min(hi, std::max(lo, s));
    }
}

}  // namespace detail

struct LayerPlan {
    bool transposed = false;  // zero-stuff the input before the 3x3 kernel
    bool pool_after = false;
    bool logistic = false;  // final squashing; leaky rectifier otherwise
    int cin = 0, cout = 0;
    int in_h = 0, in_w = 0;    // layer input dims (before stuffing)
    int out_h = 0, out_w = 0;  // activated output dims
    size_t w_off = 0, b_off = 0;
};

/// Shape plan and parameter layout for one GeneratorConfig. Templated
/// methods run in the caller's precision.
class Generator {
  public:
    explicit Generator(const GeneratorConfig& cfg) : cfg_(cfg) {
        if (cfg.levels < 1) throw ConfigError("generator: levels must be positive");
        if (static_cast<int>(cfg.widths.size()) != cfg.levels)
            throw ConfigError("generator: widths must list one channel count per level");
        for (int w : cfg.widths)
            if (w < 1) throw ConfigError("generator: widths must be positive");
        if (cfg.out_channels < 1) throw ConfigError("generator: output channels must be positive");
        const int factor = 1 << cfg.levels;
        if (cfg.rows < factor || cfg.cols < factor || cfg.rows % factor || cfg.cols % factor)
            throw DimensionError("generator: spatial dims must be divisible by 2^levels");

        const int L = cfg.levels;
        size_t off = 0;
        auto push = [&](bool transposed, bool pool, bool logistic, int cin, int cout, int ih,
                        int iw, int oh, int ow) {
            LayerPlan p;
            p.transposed = transposed;
            p.pool_after = pool;
            p.logistic = logistic;
            p.cin = cin;
            p.cout = cout;
            p.in_h = ih;
            p.in_w = iw;
            p.out_h = oh;
            p.out_w = ow;
            p.w_off = off;
            off += static_cast<size_t>(cin) * cout * 9;
            p.b_off = off;
            off += cout;
            plan_.push_back(p);
        };
        for (int i = 0; i < L; ++i) {
            int h = cfg.rows >> i, w = cfg.cols >> i;
            push(false, true, false, i == 0 ? cfg.out_channels : cfg.widths[i - 1],
                 cfg.widths[i], h, w, h, w);
        }
        for (int j = 0; j < L; ++j) {
            int h = cfg.rows >> (L - j), w = cfg.cols >> (L - j);
            int cin = j == 0 ? cfg.widths[L - 1] : plan_.back().cout;
            int cout = j < L - 1 ? cfg.widths[L - 2 - j] : cfg.widths[0];
            push(true, false, false, cin, cout, h, w, 2 * h, 2 * w);
        }
        push(false, false, true, cfg.widths[0], cfg.out_channels, cfg.rows, cfg.cols, cfg.rows,
             cfg.cols);
        n_params_ = off;
    }

    const GeneratorConfig& config() const { return cfg_; }
    size_t param_count() const { return n_params_; }
    const std::vector<LayerPlan>& plan() const { return plan_; }

    template <typename T>
    std::vector<T> init_params(uint64_t seed) const {
        std::vector<T> params(n_params_, T(0));
        Rng rng(seed);
        for (const auto& p : plan_) {
            double bound = std::sqrt(1.0 / (9.0 * p.cin));
            size_t nw = static_cast<size_t>(p.cin) * p.cout * 9;
            for (size_t i = 0; i < nw; ++i)
                params[p.w_off + i] = static_cast<T>(rng.uniform(-bound, bound));
            // biases stay zero
        }
        return params;
    }

    template <typename T>
    struct Workspace {
        std::vector<std::vector<T>> feat;    // activated output per layer
        std::vector<std::vector<T>> pooled;  // encoder pool outputs
        std::vector<std::vector<T>> gfeat;   // gradient buffers matching feat
        std::vector<T> padded, stuffed, gstuffed, gpooled, wflip;
    };

    template <typename T>
    void prepare(Workspace<T>& ws) const {
        const int L = cfg_.levels;
        ws.feat.resize(plan_.size());
        ws.gfeat.resize(plan_.size());
        ws.pooled.resize(L);
        size_t max_pad = 0, max_stuff = 0, max_w = 0, max_pool = 0;
        for (size_t l = 0; l < plan_.size(); ++l) {
            const auto& p = plan_[l];
            size_t feat_n = static_cast<size_t>(p.cout) * p.out_h * p.out_w;
            ws.feat[l].assign(feat_n, T(0));
            ws.gfeat[l].assign(feat_n, T(0));
            int conv_h = p.transposed ? 2 * p.in_h : p.in_h;
            int conv_w = p.transposed ? 2 * p.in_w : p.in_w;
            max_pad = std::max(max_pad,
                               static_cast<size_t>(p.cin) * (conv_h + 2) * (conv_w + 2));
            // input-gradient path pads the output-side gradient instead
            max_pad = std::max(max_pad,
                               static_cast<size_t>(p.cout) * (p.out_h + 2) * (p.out_w + 2));
            if (p.transposed)
                max_stuff = std::max(max_stuff,
                                     static_cast<size_t>(p.cin) * conv_h * conv_w);
            max_w = std::max(max_w, static_cast<size_t>(p.cin) * p.cout * 9);
            if (p.pool_after) {
                size_t pool_n = static_cast<size_t>(p.cout) * (p.out_h / 2) * (p.out_w / 2);
                ws.pooled[l].assign(pool_n, T(0));
                max_pool = std::max(max_pool, pool_n);
            }
        }
        ws.padded.assign(max_pad, T(0));
        ws.stuffed.assign(max_stuff, T(0));
        ws.gstuffed.assign(max_stuff, T(0));
        ws.gpooled.assign(max_pool, T(0));
        ws.wflip.assign(max_w, T(0));
    }

    // Runs the network; activations stay in the workspace for backward().
    // The final entry of ws.feat is the output in (0,1), cube-shaped.
    template <typename T>
    void forward(const std::vector<T>& params, const Cube<T>& e, Workspace<T>& ws) const {
        if (params.size() != n_params_) throw DimensionError("generator: parameter size mismatch");
        if (e.channels != cfg_.out_channels || e.rows != cfg_.rows || e.cols != cfg_.cols)
            throw DimensionError("generator: seed input shape mismatch");
        if (ws.feat.size() != plan_.size()) prepare(ws);

        for (size_t l = 0; l < plan_.size(); ++l) {
            const auto& p = plan_[l];
            const T* in = layer_input(e, ws, l);
            const T* conv_in = in;
            int conv_h = p.in_h, conv_w = p.in_w;
            if (p.transposed) {
                detail::stuff2(in, p.cin, p.in_h, p.in_w, ws.stuffed.data());
                conv_in = ws.stuffed.data();
                conv_h = 2 * p.in_h;
                conv_w = 2 * p.in_w;
            }
            detail::pad1(conv_in, p.cin, conv_h, conv_w, ws.padded.data());
            detail::conv3_forward(ws.padded.data(), p.cin, conv_h, conv_w,
                                  params.data() + p.w_off, params.data() + p.b_off, p.cout,
                                  ws.feat[l].data());
            size_t n = ws.feat[l].size();
            if (p.logistic)
                detail::logistic_inplace(ws.feat[l].data(), n);
            else
                detail::leaky_relu_inplace(ws.feat[l].data(), n);
            if (p.pool_after)
                detail::avgpool2(ws.feat[l].data(), p.cout, p.out_h, p.out_w,
                                 ws.pooled[l].data());
        }
    }

    // Reverse pass for d(loss)/d(params) given d(loss)/d(output). Requires
    // the workspace of the matching forward call.
    template <typename T>
    void backward(const std::vector<T>& params, const Cube<T>& e, Workspace<T>& ws,
                  const std::vector<T>& grad_out, std::vector<T>& grad_params) const {
        if (grad_out.size() != ws.feat.back().size())
            throw DimensionError("generator: output gradient shape mismatch");
        grad_params.assign(n_params_, T(0));
        ws.gfeat.back() = grad_out;
        for (int l = static_cast<int>(plan_.size()) - 1; l >= 0; --l) {
            const auto& p = plan_[l];
            T* g = ws.gfeat[l].data();
            const T* act = ws.feat[l].data();
            size_t n = ws.feat[l].size();
            if (p.logistic)
                for (size_t i = 0; i < n; ++i) g[i] *= act[i] * (T(1) - act[i]);
            else
                detail::leaky_relu_backward_inplace(act, g, n);

            const T* in = layer_input(e, ws, l);
            const T* conv_in = in;
            int conv_h = p.in_h, conv_w = p.in_w;
            if (p.transposed) {
                detail::stuff2(in, p.cin, p.in_h, p.in_w, ws.stuffed.data());
                conv_in = ws.stuffed.data();
                conv_h = 2 * p.in_h;
                conv_w = 2 * p.in_w;
            }
            detail::pad1(conv_in, p.cin, conv_h, conv_w, ws.padded.data());
            detail::conv3_grad_weights(ws.padded.data(), p.cin, conv_h, conv_w, g, p.cout,
                                       grad_params.data() + p.w_off,
                                       grad_params.data() + p.b_off);
            if (l == 0) break;

            // Gradient w.r.t. the layer input: correlate the output gradient
            // with the channel-swapped, spatially flipped kernels.
            const T* w = params.data() + p.w_off;
            for (int ci = 0; ci < p.cin; ++ci)
                for (int co = 0; co < p.cout; ++co)
                    for (int t = 0; t < 9; ++t)
                        ws.wflip[(static_cast<size_t>(ci) * p.cout + co) * 9 + t] =
                            w[(static_cast<size_t>(co) * p.cin + ci) * 9 + (8 - t)];
            detail::pad1(g, p.cout, conv_h, conv_w, ws.padded.data());
            bool prev_pooled = plan_[l - 1].pool_after;
            T* target = p.transposed
                            ? ws.gstuffed.data()
                            : (prev_pooled ? ws.gpooled.data() : ws.gfeat[l - 1].data());
            detail::conv3_forward(ws.padded.data(), p.cout, conv_h, conv_w, ws.wflip.data(),
                                  static_cast<const T*>(nullptr), p.cin, target);
            if (p.transposed) {
                T* dest = prev_pooled ? ws.gpooled.data() : ws.gfeat[l - 1].data();
                detail::stuff2_backward(ws.gstuffed.data(), p.cin, p.in_h, p.in_w, dest);
            }
            if (prev_pooled) {
                const auto& q = plan_[l - 1];
                detail::avgpool2_backward(ws.gpooled.data(), q.cout, q.out_h, q.out_w,
                                          ws.gfeat[l - 1].data());
            }
        }
    }

    template <typename T>
    Cube<T> output_cube(const Workspace<T>& ws) const {
        Cube<T> out(cfg_.out_channels, cfg_.rows, cfg_.cols);
        out.data = ws.feat.back();
        return out;
    }

  private:
    template <typename T>
    const T* layer_input(const Cube<T>& e, const Workspace<T>& ws, size_t l) const {
        if (l == 0) return e.data.data();
        const auto& prev = plan_[l - 1];
        return prev.pool_after ? ws.pooled[l - 1].data() : ws.feat[l - 1].data();
    }

    GeneratorConfig cfg_;
    std::vector<LayerPlan> plan_;
    size_t n_params_;
};

/// Frozen random seed input e with the cube's shape, i.i.d. uniform(0, 0.1).
template <typename T>
Cube<T> make_seed_input(int channels, int rows, int cols, uint64_t seed) {
    Cube<T> e(channels, rows, cols);
    Rng rng(seed);
    for (auto& v : e.data) v = static_cast<T>(rng.uniform(0.0, 0.1));
    return e;
}

template <typename T>
std::vector<T> init_generator(const GeneratorConfig& cfg, uint64_t seed) {
    return Generator(cfg).init_params<T>(seed);
}

template <typename T>
Cube<T> generator_forward(const std::vector<T>& params, const GeneratorConfig& cfg,
                          const Cube<T>& e) {
    Generator gen(cfg);
    typename Generator::Workspace<T> ws;
    gen.prepare(ws);
    gen.forward(params, e, ws);
    Cube<T> out = gen.output_cube(ws);
    if (!out.all_finite()) throw DivergenceError("generator produced non-finite values");
    return out;
}

}  // namespace scirecon
