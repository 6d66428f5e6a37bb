#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "field.hpp"
#include "quadrature.hpp"

namespace pscurv {

// All kernel integrals below use z = (y - xi)/lambda, q = 1 + |z|^2 and
// z = tan(phi/2) w with w on S^{n-1}, where q^{-n} dz = 2^{-n} sin^{n-1}(phi) dphi dw,
// 1/q = cos^2(phi/2), z/q = sin(phi) w / 2.

struct RadialSample {
    double phi, t, s, c;  // tan(phi/2), sin(phi), cos^2(phi/2)
    double cosa, sina;    // angle between w and xi
    double rho;           // |y|
    double h;             // H(y)
};

struct SphereSample {
    double phi, t, s, c;
    const double* omega;
    Vec y;
    double h;
};

namespace detail {

// phi-locations where |xi + lambda tan(phi/2) w| crosses R, with xi = delta e, w.e = cos(alpha).
inline void crossing_angles(double R, double lambda, double delta, double cosa, std::vector<double>& out) {
    const double b = delta * cosa;
    const double disc = b * b - delta * delta + R * R;
    if (disc < 0) return;
    const double sq = std::sqrt(disc);
    for (double rho : {-b + sq, -b - sq}) {
        if (rho > 0) out.push_back(2.0 * std::atan(rho / lambda));
    }
}

inline double kernel_weight(int n, double s) { return std::pow(0.5, n) * std::pow(s, n - 1); }

}  // namespace detail

// int_{S^{n-1}} int_0^pi 2^{-n} sin^{n-1}(phi) cb dphi dw for a radial field with
// |xi| = delta, the integrand reduced to dependence on the angle alpha to xi.
template <class CB>
VecIntegral radial_engine(const ScalarField& f, double lambda, double delta, int K, int scale_channel, CB&& cb,
                          const QuadratureSpec& spec) {
    const int n = f.n;
    const std::vector<double> radii = f.breakpoints();
    const double area = sphere_area(n - 2);
    const QuadratureSpec inner_spec = spec.scaled(0.1);
    long evals = 0;
    std::vector<double> buf(K);

    auto inner = [&](double alpha, double* out) {
        const double cosa = std::cos(alpha), sina = std::sin(alpha);
        std::vector<double> pts{0.0, std::numbers::pi};
        for (double R : radii) detail::crossing_angles(R, lambda, delta, cosa, pts);
        std::sort(pts.begin(), pts.end());
        auto g = [&](double phi, double* o) {
            RadialSample sm;
            sm.phi = phi;
            sm.t = std::tan(0.5 * phi);
            sm.s = std::sin(phi);
            const double ch = std::cos(0.5 * phi);
            sm.c = ch * ch;
            sm.cosa = cosa;
            sm.sina = sina;
            const double rz = lambda * sm.t;
            sm.rho = std::sqrt(std::max(0.0, delta * delta + 2.0 * delta * rz * cosa + rz * rz));
            sm.h = f.radial_value(sm.rho);
            cb(sm, buf.data());
            const double w = detail::kernel_weight(n, sm.s);
            for (int k = 0; k < K; ++k) o[k] = w * buf[k];
        };
        const VecIntegral r = gk_adaptive(g, pts, K, scale_channel, inner_spec);
        evals += r.evaluations;
        const double wa = area * std::pow(sina, n - 2);
        for (int k = 0; k < K; ++k) out[k] = wa * r.value[k];
    };

    std::vector<double> apts{0.0, std::numbers::pi};
    for (double R : radii) {
        if (R < delta && R > 0) apts.push_back(std::acos(-std::sqrt(1.0 - (R / delta) * (R / delta))));
    }
    std::sort(apts.begin(), apts.end());
    VecIntegral out = gk_adaptive(inner, apts, K, scale_channel, spec);
    out.evaluations = evals;
    return out;
}

// Same integral for xi = 0, where nothing depends on the direction; cb sees cosa = 1.
template <class CB>
VecIntegral radial_engine_centered(const ScalarField& f, double lambda, int K, int scale_channel, CB&& cb,
                                   const QuadratureSpec& spec) {
    const int n = f.n;
    std::vector<double> pts{0.0, std::numbers::pi};
    for (double R : f.breakpoints())
        if (R > 0) pts.push_back(2.0 * std::atan(R / lambda));
    std::sort(pts.begin(), pts.end());
    const double area = sphere_area(n - 1);
    std::vector<double> buf(K);
    auto g = [&](double phi, double* o) {
        RadialSample sm;
        sm.phi = phi;
        sm.t = std::tan(0.5 * phi);
        sm.s = std::sin(phi);
        const double ch = std::cos(0.5 * phi);
        sm.c = ch * ch;
        sm.cosa = 1.0;
        sm.sina = 0.0;
        sm.rho = lambda * sm.t;
        sm.h = f.radial_value(sm.rho);
        cb(sm, buf.data());
        const double w = area * detail::kernel_weight(n, sm.s);
        for (int k = 0; k < K; ++k) o[k] = w * buf[k];
    };
    return gk_adaptive(g, pts, K, scale_channel, spec);
}

// Polar axis of the Mobius map x' -> unproject(xi + lambda P(x')), with P the
// projection from the north pole. The image is N(x') / (l0 + l.x') with N linear,
// where l0 = 1 + |xi|^2 + lambda^2, l = (2 lambda xi, lambda^2 - 1 - |xi|^2).
inline Vec bubble_axis(double lambda, const Vec& xi) {
    const int n = static_cast<int>(xi.size());
    Vec l(n + 1);
    l.head(n) = 2.0 * lambda * xi;
    l(n) = lambda * lambda - 1.0 - xi.squaredNorm();
    const double nl = l.norm();
    if (nl < 1e-300) return Vec::Unit(n + 1, n);
    return l / nl;
}

// int_{S^n} fn(x) dS with polar axis e: x = cos(th) e + sin(th) B v, v on S^{n-1}.
// Adaptive in th, fixed product rule of the given order in v.
template <class F>
VecIntegral integrate_sphere_axis(int n, const Vec& e, int K, int scale_channel, F&& fn, int order,
                                  const QuadratureSpec& spec) {
    // Householder reflection taking e_{n+1} to e; its first n columns span e-perp.
    Vec u = e - Vec::Unit(n + 1, n);
    Mat R = Mat::Identity(n + 1, n + 1);
    if (u.norm() > 1e-14) R -= 2.0 * u * u.transpose() / u.squaredNorm();
    const Mat B = R.leftCols(n);
    const SphereRule& rule = sphere_rule(n - 1, order);
    std::vector<double> buf(K);
    std::vector<KahanSum> acc(K);
    Vec x(n + 1), v(n);
    auto g = [&](double th, double* o) {
        const double ct = std::cos(th), st = std::sin(th);
        for (auto& a : acc) a = KahanSum();
        for (size_t i = 0; i < rule.size(); ++i) {
            v = Eigen::Map<const Vec>(rule.node(i), n);
            x = ct * e + st * (B * v);
            fn(x, buf.data());
            for (int k = 0; k < K; ++k) acc[k] += rule.weights[i] * buf[k];
        }
        const double jac = std::pow(st, n - 1);
        for (int k = 0; k < K; ++k) o[k] = jac * acc[k].value();
    };
    VecIntegral out = gk_adaptive(g, {0.0, 0.5 * std::numbers::pi, std::numbers::pi}, K, scale_channel, spec);
    out.evaluations *= static_cast<long>(rule.size());
    return out;
}

// Sphere-moment fields. With x' the bubble's point on S^n, q^{-n} dz = 2^{-n} dS(x') and
// H pulls back to P2(x') / (l0 + l.x')^2; every weight cb applies is a polynomial of
// degree <= 2 in x', so slices orthogonal to the Mobius axis are integrated exactly
// by a degree-5 rule and only the polar angle needs adaptivity.
template <class CB>
VecIntegral sphere_engine(const ScalarField& f, double lambda, const Vec& xi, int K, int scale_channel, CB&& cb,
                          const QuadratureSpec& spec) {
    const int n = f.n;
    const Vec e = bubble_axis(lambda, xi);
    const double pw = std::pow(0.5, n);
    SphereSample sm;
    sm.y.resize(n);
    Vec omega(n);
    sm.omega = omega.data();
    auto fn = [&](const Vec& x, double* o) {
        const double xn = x(n);
        sm.c = 0.5 * (1.0 - xn);
        sm.s = x.head(n).norm();
        sm.phi = std::atan2(sm.s, -xn);
        sm.t = sm.s / (1.0 - xn);
        if (sm.s > 0) omega = x.head(n) / sm.s;
        else omega = Vec::Unit(n, 0);
        sm.y = xi + (lambda / (1.0 - xn)) * x.head(n);
        sm.h = f.value(sm.y);
        cb(sm, o);
        for (int k = 0; k < K; ++k) o[k] *= pw;
    };
    return integrate_sphere_axis(n, e, K, scale_channel, fn, 5, spec);
}

// M_k = int H q^{-n-k} dz, v_k = int H z q^{-n-k} dz, T = int H z z^T q^{-n-2} dz.
struct KernelMoments {
    double M0 = 0, M1 = 0, M2 = 0;
    Vec v1, v2;
    Mat T;
    double L1 = 0;     // int |H| q^{-n} dz
    double error = 0;  // largest channel error estimate
    long evaluations = 0;
};

inline KernelMoments kernel_moments(const ScalarField& f, const BubbleParams& p, const QuadratureSpec& spec = {}) {
    f.validate();
    p.validate();
    spec.validate();
    const int n = f.n;
    if (p.dim() != n) throw std::invalid_argument("kernel_moments: dimension mismatch");
    KernelMoments m;
    m.v1 = Vec::Zero(n);
    m.v2 = Vec::Zero(n);
    m.T = Mat::Zero(n, n);
    const double delta = p.xi.norm();
    auto max_err = [](const VecIntegral& r) {
        double e = 0;
        for (double x : r.error) e = std::max(e, x);
        return e;
    };

    if (f.radial() && delta == 0.0) {
        auto cb = [](const RadialSample& s, double* o) {
            o[0] = s.h;
            o[1] = s.h * s.c;
            o[2] = s.h * s.c * s.c;
            o[3] = s.h * 0.25 * s.s * s.s;
            o[4] = std::abs(s.h);
        };
        const VecIntegral r = radial_engine_centered(f, p.lambda, 5, 4, cb, spec);
        m.M0 = r.value[0];
        m.M1 = r.value[1];
        m.M2 = r.value[2];
        m.T = (r.value[3] / n) * Mat::Identity(n, n);
        m.L1 = r.value[4];
        m.error = max_err(r);
        m.evaluations = r.evaluations;
        return m;
    }

    if (f.radial()) {
        auto cb = [n](const RadialSample& s, double* o) {
            o[0] = s.h;
            o[1] = s.h * s.c;
            o[2] = s.h * s.c * s.c;
            o[3] = s.h * 0.5 * s.s * s.cosa;
            o[4] = s.h * 0.5 * s.s * s.c * s.cosa;
            o[5] = s.h * 0.25 * s.s * s.s * s.cosa * s.cosa;
            o[6] = s.h * 0.25 * s.s * s.s * s.sina * s.sina / (n - 1);
            o[7] = std::abs(s.h);
        };
        const VecIntegral r = radial_engine(f, p.lambda, delta, 8, 7, cb, spec);
        const Vec e = p.xi / delta;
        m.M0 = r.value[0];
        m.M1 = r.value[1];
        m.M2 = r.value[2];
        m.v1 = r.value[3] * e;
        m.v2 = r.value[4] * e;
        const Mat P = e * e.transpose();
        m.T = r.value[5] * P + r.value[6] * (Mat::Identity(n, n) - P);
        m.L1 = r.value[7];
        m.error = max_err(r);
        m.evaluations = r.evaluations;
        return m;
    }

    const int K = 4 + 2 * n + n * (n + 1) / 2;
    auto cb = [n](const SphereSample& s, double* o) {
        o[0] = s.h;
        o[1] = s.h * s.c;
        o[2] = s.h * s.c * s.c;
        o[3] = std::abs(s.h);
        const double a = s.h * 0.5 * s.s;
        const double b = s.h * 0.25 * s.s * s.s;
        int k = 4;
        for (int d = 0; d < n; ++d) o[k++] = a * s.omega[d];
        for (int d = 0; d < n; ++d) o[k++] = a * s.c * s.omega[d];
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) o[k++] = b * s.omega[i] * s.omega[j];
    };
    const VecIntegral r = sphere_engine(f, p.lambda, p.xi, K, 3, cb, spec);
    m.M0 = r.value[0];
    m.M1 = r.value[1];
    m.M2 = r.value[2];
    m.L1 = r.value[3];
    int k = 4;
    for (int d = 0; d < n; ++d) m.v1(d) = r.value[k++];
    for (int d = 0; d < n; ++d) m.v2(d) = r.value[k++];
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) m.T(i, j) = m.T(j, i) = r.value[k++];
    m.error = max_err(r);
    m.evaluations = r.evaluations;
    return m;
}

// int H(y) (lambda/(lambda^2+|y-xi|^2))^power dy = lambda^{n-power} int H q^{-power} dz.
inline IntegralResult integrate_rn(const ScalarField& f, const BubbleParams& p, int power,
                                   const QuadratureSpec& spec = {}) {
    f.validate();
    p.validate();
    const int n = f.n;
    const int e = power - n;
    const double pre = std::pow(p.lambda, n - power);
    const double delta = p.xi.norm();
    VecIntegral r;
    if (f.radial()) {
        auto cb = [e](const RadialSample& s, double* o) {
            o[0] = s.h * std::pow(s.c, e);
            o[1] = std::abs(o[0]);
        };
        r = delta == 0.0 ? radial_engine_centered(f, p.lambda, 2, 1, cb, spec)
                         : radial_engine(f, p.lambda, delta, 2, 1, cb, spec);
    } else {
        auto cb = [e](const SphereSample& s, double* o) {
            o[0] = s.h * std::pow(s.c, e);
            o[1] = std::abs(o[0]);
        };
        r = sphere_engine(f, p.lambda, p.xi, 2, 1, cb, spec);
    }
    return IntegralResult{pre * r.value[0], pre * r.error[0], r.evaluations};
}

// int F(y) dy over R^n for a smooth callable with K channels, through
// y = c + scale tan(phi/2) w. Channel scale_channel must be a magnitude.
template <class F>
VecIntegral integrate_rn_smooth(int n, const Vec& center, double scale, int K, int scale_channel, F&& fn,
                                const QuadratureSpec& spec = {}) {
    const SphereRule& rule = sphere_rule(n - 1, spec.angular_order);
    std::vector<KahanSum> val(K), err(K);
    std::vector<double> buf(K);
    Vec y(n);
    long evals = 0;
    for (size_t i = 0; i < rule.size(); ++i) {
        const double* w = rule.node(i);
        auto g = [&](double phi, double* o) {
            const double t = std::tan(0.5 * phi);
            const double ch = std::cos(0.5 * phi);
            const double rz = scale * t;
            for (int d = 0; d < n; ++d) y(d) = center(d) + rz * w[d];
            fn(y, buf.data());
            const double jac = std::pow(scale, n) * std::pow(t, n - 1) * 0.5 / (ch * ch);
            for (int k = 0; k < K; ++k) o[k] = jac * buf[k];
        };
        const VecIntegral r = gk_adaptive(g, {0.0, 0.5 * std::numbers::pi, std::numbers::pi}, K, scale_channel,
                                          spec.scaled(0.1));
        evals += r.evaluations;
        for (int k = 0; k < K; ++k) {
            val[k] += rule.weights[i] * r.value[k];
            err[k] += rule.weights[i] * r.error[k];
        }
    }
    VecIntegral out;
    out.value.resize(K);
    out.error.resize(K);
    for (int k = 0; k < K; ++k) {
        out.value[k] = val[k].value();
        out.error[k] = err[k].value();
    }
    out.evaluations = evals;
    return out;
}

}  // namespace pscurv
