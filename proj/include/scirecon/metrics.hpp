#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "scirecon/core.hpp"

namespace scirecon {

struct ChannelMetric {
    double average = 0.0;
    std::vector<double> per_channel;
    bool identical = false;  // MSE was zero on every channel
};

/// Per channel 10·log10(1/MSE), assuming unit peak, then the channel mean.
/// Channels with zero MSE contribute +inf and set the identical flag when
/// every channel is exact.
template <typename T>
ChannelMetric psnr(const Cube<T>& ref, const Cube<T>& est) {
    if (!ref.same_shape(est)) throw DimensionError("psnr: shape mismatch");
    ChannelMetric out;
    out.per_channel.resize(ref.channels);
    const size_t n = static_cast<size_t>(ref.rows) * ref.cols;
    int exact = 0;
    double sum = 0.0;
    for (int m = 0; m < ref.channels; ++m) {
        const T* a = ref.plane(m);
        const T* b = est.plane(m);
        double mse = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
            mse += d * d;
        }
        mse /= static_cast<double>(n);
        double v = mse == 0.0 ? std::numeric_limits<double>::infinity()
                              : 10.0 * std::log10(1.0 / mse);
        out.per_channel[m] = v;
        exact += mse == 0.0;
        sum += v;
    }
    out.identical = exact == ref.channels;
    out.average = exact > 0 ? std::numeric_limits<double>::infinity()
                            : sum / static_cast<double>(ref.channels);
    return out;
}

namespace detail {

inline const std::vector<double>& ssim_window() {
    // 11x11 Gaussian, sigma 1.5, normalized to unit sum.
    static const std::vector<double> w = [] {
        std::vector<double> v(121);
        double total = 0.0;
        for (int i = 0; i < 11; ++i)
            for (int j = 0; j < 11; ++j) {
                double di = i - 5, dj = j - 5;
                double g = std::exp(-(di * di + dj * dj) / (2.0 * 1.5 * 1.5));
                v[i * 11 + j] = g;
                total += g;
            }
        for (double& g : v) g /= total;
        return v;
    }();
    return w;
}

}  // namespace detail

/// Mean 2D SSIM per channel (11×11 Gaussian window, σ=1.5, K₁=0.01,
/// K₂=0.03, unit dynamic range, valid windows only), then the channel mean.
template <typename T>
ChannelMetric ssim(const Cube<T>& ref, const Cube<T>& est) {
    if (!ref.same_shape(est)) throw DimensionError("ssim: shape mismatch");
    if (ref.rows < 11 || ref.cols < 11)
        throw DimensionError("ssim: image smaller than the 11x11 window");
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    const auto& w = detail::ssim_window();
    ChannelMetric out;
    out.per_channel.resize(ref.channels);

    std::vector<double> means(ref.channels, 0.0);
    parallel_for(ref.channels, [&](int m) {
        const T* a = ref.plane(m);
        const T* b = est.plane(m);
        double total = 0.0;
        long count = 0;
        for (int i = 0; i + 11 <= ref.rows; ++i)
            for (int j = 0; j + 11 <= ref.cols; ++j) {
                double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
                for (int wi = 0; wi < 11; ++wi) {
                    const T* ra = a + static_cast<size_t>(i + wi) * ref.cols + j;
                    const T* rb = b + static_cast<size_t>(i + wi) * ref.cols + j;
                    const double* wr = w.data() + wi * 11;
                    for (int wj = 0; wj < 11; ++wj) {
                        double va = ra[wj], vb = rb[wj], g = wr[wj];
                        mu_a += g * va;
                        mu_b += g * vb;
                        aa += g * va * va;
                        bb += g * vb * vb;
                        ab += (va * vb) * g;  // product first: symmetric in a,b
                    }
                }
                double var_a = aa - mu_a * mu_a;
                double var_b = bb - mu_b * mu_b;
                double cov = ab - mu_a * mu_b;
                // min/max ordering keeps ssim(a,b) bit-identical to
                // ssim(b,a) even when the compiler fuses multiply-adds.
                double mu_lo = std::min(mu_a, mu_b), mu_hi = std::max(mu_a, mu_b);
                double var_lo = std::min(var_a, var_b), var_hi = std::max(var_a, var_b);
                double s = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2) /
                           ((mu_lo * mu_lo + mu_hi * mu_hi + c1) * (var_lo + var_hi + c2));
                total += s;
                ++count;
            }
        means[m] = total / static_cast<double>(count);
    });

    double sum = 0.0;
    for (int m = 0; m < ref.channels; ++m) {
        out.per_channel[m] = means[m];
        sum += means[m];
    }
    out.average = sum / static_cast<double>(ref.channels);
    bool same = true;
    for (size_t i = 0; i < ref.data.size(); ++i) same &= (ref.data[i] == est.data[i]);
    out.identical = same;
    return out;
}

struct Region {
    int row = 0;
    int col = 0;
    int height = 1;
    int width = 1;
};

/// Pearson correlation between the region-mean spectra of the two cubes.
template <typename T>
double spectral_correlation(const Cube<T>& ref, const Cube<T>& est, const Region& region) {
    if (!ref.same_shape(est)) throw DimensionError("spectral_correlation: shape mismatch");
    if (region.row < 0 || region.col < 0 || region.height < 1 || region.width < 1 ||
        region.row + region.height > ref.rows || region.col + region.width > ref.cols)
        throw DimensionError("spectral_correlation: region out of bounds");

    auto region_spectrum = [&](const Cube<T>& c) {
        std::vector<double> s(c.channels, 0.0);
        for (int m = 0; m < c.channels; ++m) {
            double total = 0.0;
            for (int i = region.row; i < region.row + region.height; ++i)
                for (int j = region.col; j < region.col + region.width; ++j)
                    total += static_cast<double>(c(m, i, j));
            s[m] = total / (static_cast<double>(region.height) * region.width);
        }
        return s;
    };
    auto a = region_spectrum(ref);
    auto b = region_spectrum(est);
    const int n = ref.channels;
    double ma = 0.0, mb = 0.0;
    for (int m = 0; m < n; ++m) {
        ma += a[m];
        mb += b[m];
    }
    ma /= n;
    mb /= n;
    double va = 0.0, vb = 0.0, cov = 0.0;
    for (int m = 0; m < n; ++m) {
        va += (a[m] - ma) * (a[m] - ma);
        vb += (b[m] - mb) * (b[m] - mb);
        cov += (a[m] - ma) * (b[m] - mb);
    }
    if (va == 0.0 || vb == 0.0)
        throw DimensionError("spectral_correlation: zero-variance spectrum");
    return cov / std::sqrt(va * vb);
}

}  // namespace scirecon
