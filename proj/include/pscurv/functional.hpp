#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "bubble.hpp"
#include "field.hpp"
#include "moments.hpp"
#include "sphere.hpp"

namespace pscurv {

// Gradient and Hessian in the order (lambda, xi_1, ..., xi_n).
struct GradHess {
    double value = 0;
    Vec grad;
    Mat hess;
    double error = 0;  // quadrature error estimate carried from the moments
};

// Simplified Hessian entries valid at a critical point.
struct CriticalForms {
    double d2_lambda = 0;  // from M1, M2 only
    Vec d2_lambda_xi;      // from v2 only
    Mat d2_xi_xi;          // complete: the off-diagonal form, and -sum of diagonal equals d2_lambda
    double max_deviation = 0;  // largest |general - critical form| over the checked entries
};

inline double eval_G(const ScalarField& f, const BubbleParams& p, const QuadratureSpec& spec = {}) {
    return constants(f.n).c_bar_minus1 * integrate_rn(f, p, f.n, spec).value;
}

inline GradHess grad_hess_from_moments(int n, double lambda, const KernelMoments& m) {
    const double cb = constants(n).c_bar_minus1;
    const double l2 = lambda * lambda;
    GradHess g;
    g.value = cb * m.M0;
    g.grad.resize(n + 1);
    g.grad(0) = (n * cb / lambda) * (m.M0 - 2.0 * m.M1);
    g.grad.tail(n) = (2.0 * n * cb / lambda) * m.v1;
    g.hess.resize(n + 1, n + 1);
    g.hess(0, 0) = (cb / l2) * (n * (n - 1.0) * m.M0 - (4.0 * n * n + 2.0 * n) * m.M1 + 4.0 * n * (n + 1.0) * m.M2);
    const Vec lx = (cb / l2) * (2.0 * n * n * m.v1 - 4.0 * n * (n + 1.0) * m.v2);
    g.hess.block(0, 1, 1, n) = lx.transpose();
    g.hess.block(1, 0, n, 1) = lx;
    g.hess.block(1, 1, n, n) =
        (cb / l2) * (4.0 * n * (n + 1.0) * m.T - 2.0 * n * m.M1 * Mat::Identity(n, n));
    g.error = std::abs(cb) * m.error * (1.0 + 8.0 * n * (n + 1.0) / l2);
    return g;
}

inline Vec grad_G(const ScalarField& f, const BubbleParams& p, const QuadratureSpec& spec = {}) {
    return grad_hess_from_moments(f.n, p.lambda, kernel_moments(f, p, spec)).grad;
}

inline GradHess hess_G(const ScalarField& f, const BubbleParams& p, const QuadratureSpec& spec = {}) {
    return grad_hess_from_moments(f.n, p.lambda, kernel_moments(f, p, spec));
}

// The critical-point forms and how far the general entries are from them.
inline CriticalForms critical_forms(int n, double lambda, const KernelMoments& m, const GradHess& gh) {
    const double cb = constants(n).c_bar_minus1;
    const double l2 = lambda * lambda;
    CriticalForms c;
    c.d2_lambda = (cb / l2) * (-2.0 * n * (n + 2.0) * m.M1 + 4.0 * n * (n + 1.0) * m.M2);
    c.d2_lambda_xi = (cb / l2) * (-4.0 * n * (n + 1.0) * m.v2);
    c.d2_xi_xi = gh.hess.block(1, 1, n, n);
    double dev = std::abs(gh.hess(0, 0) - c.d2_lambda);
    dev = std::max(dev, (gh.hess.block(1, 0, n, 1) - c.d2_lambda_xi).cwiseAbs().maxCoeff());
    dev = std::max(dev, std::abs(c.d2_xi_xi.trace() + c.d2_lambda));
    c.max_deviation = dev;
    return c;
}

// Closed form for the indicator of an annulus at xi = 0:
// int_{annulus} (lambda/(lambda^2+r^2))^n dy = |S^{n-1}| 2^{-n} int sin^{n-1} over [phi_-, phi_+].
inline double annulus_kernel_mass(int n, const Annulus& ann, double lambda) {
    ann.validate();
    const double a = 2.0 * std::atan(ann.inner() / lambda);
    const double b = 2.0 * std::atan(ann.outer() / lambda);
    return sphere_area(n - 1) / std::pow(2.0, n) * sinpow_integral(n - 1, a, b);
}

inline double eval_G_annulus_closed(int n, const Annulus& ann, double lambda, double amplitude = 1.0) {
    return constants(n).c_bar_minus1 * amplitude * annulus_kernel_mass(n, ann, lambda);
}

// Exact lambda-derivative of the sine integral above, without the |S^{n-1}| 2^{-n} factor.
inline double dlambda_radial(int n, const Annulus& ann, double lambda) {
    ann.validate();
    const double Rb = ann.outer(), Rc = ann.inner();
    const double sp = std::sin(2.0 * std::atan(Rb / lambda));
    const double sm = std::sin(2.0 * std::atan(Rc / lambda));
    return -(2.0 * Rb / (Rb * Rb + lambda * lambda)) * std::pow(sp, n - 1) +
           (2.0 * Rc / (Rc * Rc + lambda * lambda)) * std::pow(sm, n - 1);
}

inline double lambda_M(const Annulus& ann) {
    ann.validate();
    return std::sqrt(ann.outer() * ann.inner());
}

// Integrals over S^n of H(lambda P(x) + xi) g(x), with x = (sin b w, cos b) and
// P(x) = cot(b/2) w the projection from the north pole.
template <class G>
VecIntegral sphere_side_integrals(const ScalarField& f, const BubbleParams& p, int K, G&& g,
                                  const QuadratureSpec& spec) {
    const int n = f.n;
    if (!f.radial()) {
        // x is already the bubble's point: the axis-aligned rule is exact on slices.
        std::vector<double> gbuf(K);
        auto fn = [&](const Vec& x, double* o) {
            const Vec y = p.xi + (p.lambda / (1.0 - x(n))) * x.head(n);
            const double h = f.value(y);
            g(x, gbuf.data());
            for (int k = 0; k < K; ++k) o[k] = h * gbuf[k];
            o[K] = std::abs(h);
        };
        return integrate_sphere_axis(n, bubble_axis(p.lambda, p.xi), K + 1, K, fn, 5, spec);
    }
    const SphereRule& rule = sphere_rule(n - 1, spec.angular_order);
    std::vector<double> pts{0.0, 0.5 * std::numbers::pi, std::numbers::pi};
    if (p.xi.norm() == 0.0) {
        for (double R : f.breakpoints())
            if (R > 0) pts.push_back(2.0 * std::atan(p.lambda / R));
    }
    std::sort(pts.begin(), pts.end());
    std::vector<KahanSum> val(K + 1);
    std::vector<double> gbuf(K);
    Vec x(n + 1), y(n);
    for (size_t i = 0; i < rule.size(); ++i) {
        const double* w = rule.node(i);
        auto fn = [&](double b, double* o) {
            const double sb = std::sin(b), cb = std::cos(b);
            const double ct = 1.0 / std::tan(0.5 * b);
            for (int d = 0; d < n; ++d) {
                x(d) = sb * w[d];
                y(d) = p.lambda * ct * w[d] + p.xi(d);
            }
            x(n) = cb;
            const double h = f.value(y);
            g(x, gbuf.data());
            const double jac = std::pow(sb, n - 1);
            for (int k = 0; k < K; ++k) o[k] = jac * h * gbuf[k];
            o[K] = jac * std::abs(h);
        };
        const VecIntegral r = gk_adaptive(fn, pts, K + 1, K, spec.scaled(0.1));
        for (int k = 0; k <= K; ++k) val[k] += rule.weights[i] * r.value[k];
    }
    VecIntegral out;
    out.value.resize(K + 1);
    out.error.assign(K + 1, 0.0);
    for (int k = 0; k <= K; ++k) out.value[k] = val[k].value();
    return out;
}

// Gradient as first moments of the pulled-back field on S^n:
// dG/dlambda = (n c/lambda) 2^{-n} int H x_{n+1}, dG/dxi_j = (n c/lambda) 2^{-n} int H x_j.
inline Vec sphere_moments_grad(const ScalarField& f, const BubbleParams& p, const QuadratureSpec& spec = {}) {
    f.validate();
    p.validate();
    const int n = f.n;
    auto g = [n](const Vec& x, double* o) {
        o[0] = x(n);
        for (int j = 0; j < n; ++j) o[j + 1] = x(j);
    };
    const VecIntegral r = sphere_side_integrals(f, p, n + 1, g, spec);
    const double pre = n * constants(n).c_bar_minus1 / p.lambda / std::pow(2.0, n);
    Vec out(n + 1);
    for (int k = 0; k <= n; ++k) out(k) = pre * r.value[k];
    return out;
}

// Second derivatives at (1, 0) as sphere moments, valid when (1, 0) is critical.
struct SphereHessianForms {
    Mat d2_xi_xi;    // off-diagonal entries from x_l x_j, diagonal from x_l^2 and the mass
    Vec d2_lambda_xi;
    double d2_lambda = 0;
};

inline SphereHessianForms sphere_hessian_forms(const ScalarField& f, const QuadratureSpec& spec = {}) {
    const int n = f.n;
    const BubbleParams p = BubbleParams::centered(n, 1.0);
    const int K = 2 + n + n * (n + 1) / 2;
    auto g = [n](const Vec& x, double* o) {
        o[0] = 1.0;
        o[1] = x(n) * x(n);
        int k = 2;
        for (int l = 0; l < n; ++l) o[k++] = x(l) * (1.0 - x(n));
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) o[k++] = x(i) * x(j);
    };
    const VecIntegral r = sphere_side_integrals(f, p, K, g, spec);
    const double cb = constants(n).c_bar_minus1;
    const double pw = std::pow(2.0, n);
    SphereHessianForms s;
    const double mass = r.value[0];
    s.d2_lambda = n * (n + 1.0) / pw * cb * (r.value[1] - mass / (n + 1.0));
    s.d2_lambda_xi.resize(n);
    int k = 2;
    for (int l = 0; l < n; ++l) s.d2_lambda_xi(l) = -n * (n + 1.0) / pw * cb * r.value[k++];
    s.d2_xi_xi.resize(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            const double xx = r.value[k++];
            if (i == j)
                s.d2_xi_xi(i, i) = -n / pw * cb * mass + n * (n + 1.0) / pw * cb * xx;
            else
                s.d2_xi_xi(i, j) = s.d2_xi_xi(j, i) = n * (n + 1.0) / pw * cb * xx;
        }
    }
    return s;
}

struct SymmetryReport {
    bool reflection_symmetric = false;  // H(..., -y_l, ...) = H(y) for every l
    bool inversion_symmetric = false;   // H(r, w) = H(1/r, w)
    bool critical_at_unit = false;      // gradient at (1, 0) numerically zero
    double grad_norm = 0;
    // Both sides of the two stability inequalities at (1, 0).
    std::vector<double> xi_lhs, xi_rhs;  // per l: int H q^{-n-1}  vs  2(n+1) int H y_l^2 q^{-n-2}
    double lambda_lhs = 0, lambda_rhs = 0;  // int H q^{-n-1}  vs  2(n+1)/(n+2) int H q^{-n-2}
    bool xi_strict = false;
    bool lambda_strict = false;
    bool certified = false;
};

inline SymmetryReport symmetry_stability_check(const ScalarField& f, const QuadratureSpec& spec = {},
                                               int samples = 200, unsigned seed = 7) {
    f.validate();
    const int n = f.n;
    SymmetryReport rep;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N01;
    std::uniform_real_distribution<double> U(0.05, 0.999);
    const double tol = 1e-12 * (1.0 + f.sup_bound());
    rep.reflection_symmetric = true;
    rep.inversion_symmetric = true;
    for (int s = 0; s < samples; ++s) {
        Vec w(n);
        for (int d = 0; d < n; ++d) w(d) = N01(rng);
        w.normalize();
        const double r = U(rng);
        const Vec y = r * w;
        const double h = f.value(y);
        for (int l = 0; l < n; ++l) {
            Vec yr = y;
            yr(l) = -yr(l);
            if (std::abs(f.value(yr) - h) > tol) rep.reflection_symmetric = false;
        }
        if (std::abs(f.value(w / r) - h) > tol) rep.inversion_symmetric = false;
    }
    const BubbleParams p = BubbleParams::centered(n, 1.0);
    const KernelMoments m = kernel_moments(f, p, spec);
    const GradHess gh = grad_hess_from_moments(n, 1.0, m);
    rep.grad_norm = gh.grad.norm();
    const double gscale = n * std::abs(constants(n).c_bar_minus1) * std::max(m.L1, 1e-300);
    rep.critical_at_unit = rep.grad_norm <= 1e-8 * gscale;
    rep.xi_strict = true;
    for (int l = 0; l < n; ++l) {
        rep.xi_lhs.push_back(m.M1);
        rep.xi_rhs.push_back(2.0 * (n + 1.0) * m.T(l, l));
        if (std::abs(rep.xi_lhs.back() - rep.xi_rhs.back()) <= 1e-8 * m.L1) rep.xi_strict = false;
    }
    rep.lambda_lhs = m.M1;
    rep.lambda_rhs = 2.0 * (n + 1.0) / (n + 2.0) * m.M2;
    rep.lambda_strict = std::abs(rep.lambda_lhs - rep.lambda_rhs) > 1e-8 * m.L1;
    rep.certified = rep.reflection_symmetric && rep.inversion_symmetric && rep.critical_at_unit && rep.xi_strict &&
                    rep.lambda_strict;
    return rep;
}

}  // namespace pscurv
