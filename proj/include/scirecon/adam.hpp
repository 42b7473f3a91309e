#pragma once

#include <cmath>
#include <vector>

#include "scirecon/core.hpp"

namespace scirecon {

/// Bias-corrected Adam. Moments live in the training precision; the scalar
/// corrections are computed in double.
template <typename T>
struct AdamState {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long t = 0;
    std::vector<T> m, v;

    explicit AdamState(size_t n, double learning_rate = 0.001)
        : lr(learning_rate), m(n, T(0)), v(n, T(0)) {}

    void step(std::vector<T>& params, const std::vector<T>& grad) {
        if (params.size() != m.size() || grad.size() != m.size())
            throw DimensionError("adam: parameter/gradient size mismatch");
        ++t;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        const T b1 = static_cast<T>(beta1), b2 = static_cast<T>(beta2);
        const T ob1 = static_cast<T>(1.0 - beta1), ob2 = static_cast<T>(1.0 - beta2);
        const T scale = static_cast<T>(lr / c1);
        const T vc = static_cast<T>(1.0 / c2);
        const T e = static_cast<T>(eps);
        for (size_t i = 0; i < params.size(); ++i) {
            T g = grad[i];
            m[i] = b1 * m[i] + ob1 * g;
            v[i] = b2 * v[i] + ob2 * g * g;
            params[i] -= scale * m[i] / (std::sqrt(v[i] * vc) + e);
        }
    }
};

}  // namespace scirecon
