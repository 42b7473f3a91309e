#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "scirecon/core.hpp"

namespace scirecon {

/// Seeded synthetic test content. Spatially the scenes are piecewise smooth
/// (a slow background gradient plus overlapping rectangles and ellipses) and
/// spectrally every region follows a smooth bump mixture, so edges exist in
/// space but never across adjacent channels. Handy for end-to-end runs; it is
/// synthetic content, not a stand-in for any measured dataset.
template <typename T>
Cube<T> make_scene(int channels, int rows, int cols, uint64_t seed) {
    Cube<T> cube(channels, rows, cols);
    Rng rng(derive_seed(seed, 0x5ce11e));

    struct Region {
        double cu, cv;    // centre, in unit coordinates
        double ru, rv;    // half extents
        bool rect;        // rectangle or ellipse support
        double amp;
        double mu1, s1, w1, mu2, s2, w2;  // spectral bump mixture
    };

    auto draw_spectrum = [&rng](Region& r) {
        r.mu1 = rng.uniform();
        r.s1 = rng.uniform(0.12, 0.45);
        r.w1 = rng.uniform(0.4, 1.0);
        r.mu2 = rng.uniform();
        r.s2 = rng.uniform(0.12, 0.45);
        r.w2 = rng.uniform(0.0, 0.6);
    };

    const int n_regions = 5 + rng.uniform_int(4);
    std::vector<Region> regions(n_regions);
    for (Region& r : regions) {
        r.cu = rng.uniform(0.1, 0.9);
        r.cv = rng.uniform(0.1, 0.9);
        r.ru = rng.uniform(0.08, 0.3);
        r.rv = rng.uniform(0.08, 0.3);
        r.rect = rng.uniform() < 0.5;
        r.amp = rng.uniform(0.35, 1.0);
        draw_spectrum(r);
    }
    Region background{};
    background.amp = rng.uniform(0.15, 0.35);
    draw_spectrum(background);
    const double tilt_u = rng.uniform(-0.2, 0.2);
    const double tilt_v = rng.uniform(-0.2, 0.2);

    auto bump = [](const Region& r, double t) {
        auto g = [](double t, double mu, double s) {
            double d = (t - mu) / s;
            return std::exp(-0.5 * d * d);
        };
        return (r.w1 * g(t, r.mu1, r.s1) + r.w2 * g(t, r.mu2, r.s2)) / (r.w1 + r.w2);
    };

    double lo = 1e300, hi = -1e300;
    for (int m = 0; m < channels; ++m) {
        const double t = channels > 1 ? static_cast<double>(m) / (channels - 1) : 0.5;
        for (int u = 0; u < rows; ++u) {
            const double fu = rows > 1 ? static_cast<double>(u) / (rows - 1) : 0.5;
            for (int v = 0; v < cols; ++v) {
                const double fv = cols > 1 ? static_cast<double>(v) / (cols - 1) : 0.5;
                double val = background.amp * bump(background, t) *
                             (1.0 + tilt_u * (fu - 0.5) + tilt_v * (fv - 0.5));
                for (const Region& r : regions) {
                    const double du = fu - r.cu, dv = fv - r.cv;
                    const bool inside =
                        r.rect ? (std::abs(du) < r.ru && std::abs(dv) < r.rv)
                               : ((du / r.ru) * (du / r.ru) + (dv / r.rv) * (dv / r.rv) < 1.0);
                    if (inside) val += r.amp * bump(r, t);
                }
                cube(m, u, v) = static_cast<T>(val);
                lo = std::min(lo, val);
                hi = std::max(hi, val);
            }
        }
    }

    // Map onto [0.05, 0.95] so simulated photon counts stay positive.
    if (hi > lo) {
        const double scale = 0.9 / (hi - lo);
        for (auto& x : cube.data) x = static_cast<T>(0.05 + scale * (static_cast<double>(x) - lo));
    } else {
        cube.fill(static_cast<T>(0.5));
    }
    return cube;
}

/// Textured variant: two band-limited random abundance fields mixed by smooth
/// spectral signatures, so every channel shares the same spatial texture while
/// the per-channel weights vary slowly. Spatial gradients are everywhere (hard
/// for purely spatial smoothing) but the spectral dimension is low rank.
template <typename T>
Cube<T> make_textured_scene(int channels, int rows, int cols, uint64_t seed) {
    Cube<T> cube(channels, rows, cols);

    auto smooth_field = [&](uint64_t salt, double sigma) {
        Rng rng(derive_seed(seed, salt));
        std::vector<double> raw(static_cast<size_t>(rows) * cols);
        for (auto& x : raw) x = rng.normal();
        const int rad = static_cast<int>(3.0 * sigma);
        std::vector<double> w(2 * rad + 1);
        double wsum = 0.0;
        for (int i = -rad; i <= rad; ++i) wsum += w[i + rad] = std::exp(-0.5 * (i / sigma) * (i / sigma));
        for (auto& x : w) x /= wsum;
        auto clampc = [&](int v) { return std::min(std::max(v, 0), cols - 1); };
        auto clampr = [&](int u) { return std::min(std::max(u, 0), rows - 1); };
        std::vector<double> tmp(raw.size()), out(raw.size());
        for (int u = 0; u < rows; ++u)
            for (int v = 0; v < cols; ++v) {
                double s = 0.0;
                for (int i = -rad; i <= rad; ++i) s += w[i + rad] * raw[u * cols + clampc(v + i)];
                tmp[u * cols + v] = s;
            }
        for (int u = 0; u < rows; ++u)
            for (int v = 0; v < cols; ++v) {
                double s = 0.0;
                for (int i = -rad; i <= rad; ++i) s += w[i + rad] * tmp[clampr(u + i) * cols + v];
                out[u * cols + v] = s;
            }
        return out;
    };

    const std::vector<double> fine = smooth_field(0xa11ce, 1.2);
    const std::vector<double> coarse = smooth_field(0xb0b, 1.8);

    auto band = [](double t, double mu, double s) {
        const double d = (t - mu) / s;
        return std::exp(-0.5 * d * d);
    };

    double lo = 1e300, hi = -1e300;
    for (int m = 0; m < channels; ++m) {
        const double t = channels > 1 ? static_cast<double>(m) / (channels - 1) : 0.5;
        const double s1 = band(t, 0.3, 0.25), s2 = band(t, 0.7, 0.3);
        for (size_t i = 0; i < fine.size(); ++i) {
            const double val = 0.4 + s1 * fine[i] + s2 * coarse[i];
            cube.data[static_cast<size_t>(m) * fine.size() + i] = static_cast<T>(val);
            lo = std::min(lo, val);
            hi = std::max(hi, val);
        }
    }

    if (hi > lo) {
        const double scale = 0.9 / (hi - lo);
        for (auto& x : cube.data) x = static_cast<T>(0.05 + scale * (static_cast<double>(x) - lo));
    } else {
        cube.fill(static_cast<T>(0.5));
    }
    return cube;
}

/// Random binary coding mask stored as a one-channel cube. open_fraction is
/// the probability of a cell passing light; the top-left cell is forced open
/// so the pattern is never fully opaque.
template <typename T>
Cube<T> make_mask(int rows, int cols, uint64_t seed, double open_fraction = 0.5) {
    if (!(open_fraction > 0.0) || open_fraction > 1.0)
        throw ConfigError("mask open fraction must lie in (0, 1]");
    Cube<T> mask(1, rows, cols);
    Rng rng(derive_seed(seed, 0x3a5f));
    for (auto& x : mask.data) x = rng.uniform() < 1.0 - open_fraction ? T(0) : T(1);
    mask.data[0] = T(1);
    return mask;
}

/// Evenly spaced channel wavelengths across the visible band, in nanometres.
inline std::vector<float> default_wavelengths(int channels) {
    if (channels < 1) throw ConfigError("wavelength grid needs at least one channel");
    std::vector<float> wl(channels);
    if (channels == 1) {
        wl[0] = 550.0f;
        return wl;
    }
    for (int m = 0; m < channels; ++m)
        wl[m] = static_cast<float>(450.0 + 200.0 * m / (channels - 1));
    return wl;
}

}  // namespace scirecon
