#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace pscurv {

// Truncated Taylor series c_0 + c_1 e + ... + c_N e^N, enough arithmetic to
// push exact derivatives through the cutoff profile.
class Jet {
public:
    explicit Jet(int order, double value = 0.0) : c_(order + 1, 0.0) { c_[0] = value; }
    static Jet variable(int order, double x0, double slope = 1.0) {
        Jet j(order, x0);
        if (order >= 1) j.c_[1] = slope;
        return j;
    }
    int order() const { return static_cast<int>(c_.size()) - 1; }
    double operator[](int k) const { return c_[k]; }
    double& operator[](int k) { return c_[k]; }
    // k-th derivative with respect to the base variable.
    double derivative(int k) const {
        double f = 1.0;
        for (int i = 2; i <= k; ++i) f *= i;
        return c_[k] * f;
    }

    friend Jet operator+(const Jet& a, const Jet& b) {
        Jet r(a.order());
        for (int k = 0; k <= a.order(); ++k) r.c_[k] = a.c_[k] + b.c_[k];
        return r;
    }
    friend Jet operator-(const Jet& a, const Jet& b) {
        Jet r(a.order());
        for (int k = 0; k <= a.order(); ++k) r.c_[k] = a.c_[k] - b.c_[k];
        return r;
    }
    friend Jet operator*(const Jet& a, const Jet& b) {
        Jet r(a.order());
        for (int k = 0; k <= a.order(); ++k)
            for (int i = 0; i <= k; ++i) r.c_[k] += a.c_[i] * b.c_[k - i];
        return r;
    }
    friend Jet operator*(double s, const Jet& a) {
        Jet r = a;
        for (auto& v : r.c_) v *= s;
        return r;
    }
    friend Jet operator/(const Jet& a, const Jet& b) {
        if (b.c_[0] == 0.0) throw std::domain_error("Jet division by zero");
        Jet r(a.order());
        for (int k = 0; k <= a.order(); ++k) {
            double s = a.c_[k];
            for (int i = 1; i <= k; ++i) s -= b.c_[i] * r.c_[k - i];
            r.c_[k] = s / b.c_[0];
        }
        return r;
    }
    friend Jet exp(const Jet& a) {
        Jet r(a.order(), std::exp(a.c_[0]));
        for (int k = 1; k <= a.order(); ++k) {
            double s = 0.0;
            for (int i = 1; i <= k; ++i) s += i * a.c_[i] * r.c_[k - i];
            r.c_[k] = s / k;
        }
        return r;
    }

private:
    std::vector<double> c_;
};

// Smooth monotone step: 0 for s <= 0, 1 for s >= 1, built from exp(-1/s).
// The jet carries derivatives with respect to whatever variable s was seeded with.
inline Jet smoothstep(const Jet& s) {
    const int N = s.order();
    const double s0 = s[0];
    if (s0 <= 0.0) return Jet(N, 0.0);
    if (s0 >= 1.0) return Jet(N, 1.0);
    const Jet one(N, 1.0);
    const Jet e1 = exp(Jet(N, -1.0) / s);
    const Jet e2 = exp(Jet(N, -1.0) / (one - s));
    return e1 / (e1 + e2);
}

inline double smoothstep(double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    const double e1 = std::exp(-1.0 / s), e2 = std::exp(-1.0 / (1.0 - s));
    return e1 / (e1 + e2);
}

}  // namespace pscurv
