#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace scirecon {

// Error categories the CLI maps to distinct exit codes.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dense 3D array stored channel-major, then row, then column. Spectral
/// cubes use all three axes; masks and measurements are single-channel.
template <typename T>
struct Cube {
    int channels = 0;
    int rows = 0;
    int cols = 0;
    std::vector<T> data;

    Cube() = default;
    Cube(int c, int r, int w, T fill = T(0))
        : channels(c), rows(r), cols(w), data(static_cast<size_t>(c) * r * w, fill) {
        if (c <= 0 || r <= 0 || w <= 0)
            throw DimensionError("Cube dimensions must be positive");
    }

    size_t size() const { return data.size(); }

    T& operator()(int m, int u, int v) {
        return data[(static_cast<size_t>(m) * rows + u) * cols + v];
    }
    T operator()(int m, int u, int v) const {
        return data[(static_cast<size_t>(m) * rows + u) * cols + v];
    }

    T* plane(int m) { return data.data() + static_cast<size_t>(m) * rows * cols; }
    const T* plane(int m) const { return data.data() + static_cast<size_t>(m) * rows * cols; }

    bool same_shape(const Cube& o) const {
        return channels == o.channels && rows == o.rows && cols == o.cols;
    }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    bool all_finite() const {
        for (T v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <typename U>
    Cube<U> cast() const {
        Cube<U> out(channels, rows, cols);
        for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

template <typename T>
double dot(const std::vector<T>& a, const std::vector<T>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i)
        s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return s;
}

template <typename T>
double dot(const Cube<T>& a, const Cube<T>& b) {
    return dot(a.data, b.data);
}

template <typename T>
double sq_norm(const std::vector<T>& a) {
    double s = 0.0;
    for (T v : a) s += static_cast<double>(v) * static_cast<double>(v);
    return s;
}

template <typename T>
double sq_norm(const Cube<T>& a) {
    return sq_norm(a.data);
}

template <typename T>
double norm(const Cube<T>& a) {
    return std::sqrt(sq_norm(a));
}

template <typename T>
Cube<T> clipped01(const Cube<T>& a) {
    Cube<T> out = a;
    for (T& v : out.data) v = std::min(T(1), std::max(T(0), v));
    return out;
}

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derive an independent stream seed from a base seed. Used so e.g. the
/// network re-init of outer iteration k has its own reproducible stream.
inline uint64_t derive_seed(uint64_t base, uint64_t stream) {
    return splitmix64(base ^ splitmix64(stream + 0x51u) ^ 0xa24baed4963ee407ULL);
}

/// Deterministic uniform generator. The raw engine output is mapped to
/// doubles by hand so sequences do not depend on the standard library's
/// distribution implementations.
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(splitmix64(seed ^ 0x853c49e6748fea9bULL)) {}

    uint64_t next_u64() {
        // xorshift128+ style step on splitmix-expanded state
        uint64_t x = state_;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        state_ = x;
        return x * 0x2545f4914f6cdd1dULL;
    }

    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        // Box-Muller; one value per call keeps the stream layout simple.
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(next_u64() % static_cast<uint64_t>(hi - lo + 1));
    }

    int uniform_int(int n) { return uniform_int(0, n - 1); }  // [0, n)

  private:
    uint64_t state_;
};

/// Worker budget: min(hardware threads, SCI_RECON_THREADS when set).
inline int thread_budget() {
    unsigned hw = std::thread::hardware_concurrency();
    int n = hw == 0 ? 1 : static_cast<int>(hw);
    if (const char* cap = std::getenv("SCI_RECON_THREADS")) {
        int c = std::atoi(cap);
        if (c >= 1 && c < n) n = c;
        if (c >= 1 && n < 1) n = 1;
    }
    return n < 1 ? 1 : n;
}

/// Static partition of [0, count) over worker threads. Each index is
/// processed by exactly one thread, so results never depend on the
/// schedule or the thread count.
template <typename F>
void parallel_for(int count, F&& fn, int max_threads = -1) {
    int budget = max_threads > 0 ? std::min(max_threads, thread_budget()) : thread_budget();
    int workers = std::min(budget, count);
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    int chunk = (count + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        int lo = w * chunk;
        int hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (int i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace scirecon
