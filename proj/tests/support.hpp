#pragma once

#include <random>

#include <catch_amalgamated.hpp>

#include "pscurv/pscurv.hpp"

namespace testing {

using pscurv::Mat;
using pscurv::Vec;

inline std::mt19937_64& rng() {
    static std::mt19937_64 g(20240517);
    return g;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }

inline Vec random_vec(int n, double scale) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = uniform(-scale, scale);
    return v;
}

inline Vec unit(int n, int j) {
    Vec e = Vec::Zero(n);
    e(j) = 1.0;
    return e;
}

// Central-difference gradient of a scalar function of the packed (lambda, xi).
template <class F>
Vec fd_gradient(F&& f, const Vec& x, double h) {
    Vec g(x.size());
    for (int i = 0; i < x.size(); ++i) {
        Vec a = x, b = x;
        a(i) += h;
        b(i) -= h;
        g(i) = (f(a) - f(b)) / (2.0 * h);
    }
    return g;
}

}  // namespace testing
