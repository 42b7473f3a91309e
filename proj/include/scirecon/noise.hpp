#pragma once

#include <cmath>
#include <cstdint>

#include "scirecon/core.hpp"

namespace scirecon {

/// One Poisson draw with the given mean. Inversion by sequential search for
/// small means, Hormann's transformed rejection (PTRD) otherwise. Consumes a
/// variable number of uniforms, so callers that need reproducibility must
/// control the generator seed, not the call count.
inline int64_t poisson_sample(Rng& rng, double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 10.0) {
        double limit = std::exp(-mean);
        double prod = rng.uniform();
        int64_t k = 0;
        while (prod > limit) {
            prod *= rng.uniform();
            ++k;
        }
        return k;
    }
    const double smu = std::sqrt(mean);
    const double b = 0.931 + 2.53 * smu;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        double u = rng.uniform() - 0.5;
        double v = rng.uniform();
        double us = 0.5 - std::abs(u);
        double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<int64_t>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
        double rhs = kf * std::log(mean) - mean - std::lgamma(kf + 1.0);
        if (lhs <= rhs) return static_cast<int64_t>(kf);
    }
}

template <typename T>
double empirical_snr_db(const Cube<T>& clean, const Cube<T>& noisy) {
    double signal = sq_norm(clean);
    double err = 0.0;
    for (size_t i = 0; i < clean.data.size(); ++i) {
        double d = static_cast<double>(noisy.data[i]) - static_cast<double>(clean.data[i]);
        err += d * d;
    }
    if (err == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(signal / err);
}

template <typename T>
struct NoisyMeasurement {
    Cube<T> noisy;
    double achieved_snr_db = 0.0;
    double alpha = 0.0;
};

/// Photon-count corruption: ỹ = Poisson(α·y)/α. The flux scale α is found by
/// bisection so the realized SNR = 10·log10(Σy² / Σ(ỹ−y)²) lands within
/// tol_db of the target. Each probe replays the same generator seed, so the
/// search optimizes one fixed noise realization and the result is
/// deterministic given the seed.
template <typename T>
NoisyMeasurement<T> add_poisson_noise(const Cube<T>& y, double target_snr_db, uint64_t seed,
                                      double tol_db = 0.2) {
    for (T v : y.data)
        if (!(v >= T(0))) throw DimensionError("poisson noise requires a nonnegative measurement");
    if (target_snr_db < 5.0 || target_snr_db > 60.0)
        throw ConfigError("target SNR must lie in [5, 60] dB");
    double sum_y = 0.0, sum_y2 = 0.0;
    for (T v : y.data) {
        sum_y += static_cast<double>(v);
        sum_y2 += static_cast<double>(v) * static_cast<double>(v);
    }
    if (sum_y2 == 0.0) throw DimensionError("poisson noise requires a nonzero measurement");

    auto realize = [&](double alpha) {
        Rng rng(seed);
        Cube<T> out(y.channels, y.rows, y.cols);
        for (size_t i = 0; i < y.data.size(); ++i) {
            double mean = alpha * static_cast<double>(y.data[i]);
            out.data[i] = static_cast<T>(static_cast<double>(poisson_sample(rng, mean)) / alpha);
        }
        return out;
    };

    // Variance of Poisson(αy)/α is y/α per pixel, so E[noise energy] ≈ Σy/α
    // and α₀ = 10^(t/10)·Σy/Σy² already lands near the target.
    double log_alpha = std::log(std::pow(10.0, target_snr_db / 10.0) * sum_y / sum_y2);
    double lo = log_alpha - 4.0 * std::log(2.0);
    double hi = log_alpha + 4.0 * std::log(2.0);
    auto snr_at = [&](double la) { return empirical_snr_db(y, realize(std::exp(la))); };

    // SNR is monotone increasing in α; widen the bracket until it straddles.
    int widen = 0;
    while (snr_at(lo) > target_snr_db) {
        lo -= 4.0 * std::log(2.0);
        if (++widen > 16) throw DivergenceError("poisson noise: SNR bracket exhausted (low side)");
    }
    widen = 0;
    while (snr_at(hi) < target_snr_db) {
        hi += 4.0 * std::log(2.0);
        if (++widen > 16) throw DivergenceError("poisson noise: SNR bracket exhausted (high side)");
    }

    double best_la = log_alpha;
    double best_gap = std::abs(snr_at(best_la) - target_snr_db);
    for (int it = 0; it < 60 && best_gap > tol_db * 0.5; ++it) {
        double mid = 0.5 * (lo + hi);
        double s = snr_at(mid);
        double gap = std::abs(s - target_snr_db);
        if (gap < best_gap) {
            best_gap = gap;
            best_la = mid;
        }
        if (s < target_snr_db)
            lo = mid;
        else
            hi = mid;
    }
    if (best_gap > tol_db)
        throw DivergenceError("poisson noise: bisection could not reach the target SNR");

    NoisyMeasurement<T> result{realize(std::exp(best_la)), 0.0, std::exp(best_la)};
    result.achieved_snr_db = empirical_snr_db(y, result.noisy);
    return result;
}

}  // namespace scirecon
