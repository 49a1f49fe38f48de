#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace czsl {

using Vec = std::vector<double>;

// Row-major dense matrix, sized at construction.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

    double& operator()(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
    size_t size() const { return a.size(); }
};

inline double dot(const Vec& x, const Vec& y) {
    if (x.size() != y.size()) throw std::invalid_argument("dot: size mismatch");
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm(const Vec& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

inline void add_scaled(Vec& y, const Vec& x, double a) {
    if (x.size() != y.size()) throw std::invalid_argument("add_scaled: size mismatch");
    for (size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline Vec to_vec(std::span<const float> x) {
    return Vec(x.begin(), x.end());
}

// Single seeded generator per run; every random decision flows through one of these.
struct Rng {
    std::mt19937_64 g;

    explicit Rng(uint64_t seed) : g(seed) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(g); }
    double normal(double mu = 0.0, double sigma = 1.0) {
        return std::normal_distribution<double>(mu, sigma)(g);
    }
    // Uniform integer in [0, n).
    int64_t below(int64_t n) {
        return std::uniform_int_distribution<int64_t>(0, n - 1)(g);
    }
    int poisson(double mean) { return std::poisson_distribution<int>(mean)(g); }

    template <class T>
    void shuffle(std::vector<T>& v) {
        std::shuffle(v.begin(), v.end(), g);
    }
};

}  // namespace czsl
