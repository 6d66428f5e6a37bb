#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pscurv {

// Neumaier compensated accumulator. Keeps summation order-insensitive to
// within a couple of ulps, which is what makes repeated runs reproducible.
class KahanSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    KahanSum& operator+=(double x) {
        add(x);
        return *this;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Surface area of the unit sphere S^k sitting in R^{k+1}.
inline double sphere_area(int k) {
    if (k < 0) throw std::invalid_argument("sphere_area: negative dimension");
    const double h = 0.5 * (k + 1);
    return 2.0 * std::pow(std::numbers::pi, h) / std::tgamma(h);
}

// Integral of sin^m over [a, b], from the reduction
//   S_m = -sin^{m-1} cos / m + (m-1)/m S_{m-2}
// applied to the difference directly, so no antiderivative constant appears.
inline double sinpow_integral(int m, double a, double b) {
    if (m < 0) throw std::invalid_argument("sinpow_integral: m must be >= 0");
    const double sa = std::sin(a), ca = std::cos(a);
    const double sb = std::sin(b), cb = std::cos(b);
    double even = b - a;
    double odd = 2.0 * std::sin(0.5 * (a + b)) * std::sin(0.5 * (b - a));
    if (m == 0) return even;
    if (m == 1) return odd;
    double pa = sa, pb = sb;  // sin^{k-1} at each end, k = 2 first
    double prev_even = even, prev_odd = odd;
    double cur = 0.0;
    for (int k = 2; k <= m; ++k) {
        const double prev = (k % 2 == 0) ? prev_even : prev_odd;
        cur = -(pb * cb - pa * ca) / k + (double(k - 1) / k) * prev;
        if (k % 2 == 0)
            prev_even = cur;
        else
            prev_odd = cur;
        pa *= sa;
        pb *= sb;
    }
    return cur;
}

inline double relative_error(double got, double want) {
    const double d = std::abs(got - want);
    const double s = std::abs(want);
    return s > 0 ? d / s : d;
}

}  // namespace pscurv
