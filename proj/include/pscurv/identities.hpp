#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "bubble.hpp"
#include "field.hpp"
#include "moments.hpp"

namespace pscurv {

// K0 = (lambda / (lambda^2 + |y - xi|^2))^n throughout, Y = y - xi.

struct IdentityReport {
    std::string name;
    double lhs = 0;
    double rhs = 0;
    double residual = 0;  // |lhs - rhs|
    double scale = 0;     // integral of the integrand magnitudes
    double tol = 0;
    bool pass = false;
};

inline IdentityReport make_report(std::string name, double lhs, double rhs, double scale, double tol) {
    IdentityReport r{std::move(name), lhs, rhs, std::abs(lhs - rhs), scale, tol, false};
    r.pass = r.residual <= tol * scale;
    return r;
}

// Every weighted integral the identities need, from one quadrature pass.
struct BalanceIntegrals {
    double M0 = 0, M1 = 0;          // int H K0, int H (lambda^2/D) K0
    double abs_M0 = 0, abs_M1 = 0;
    Vec trans;                      // int H lambda^n (xi - y) D^{-n-1} dy
    double trans_scale = 0;
    double poh_radial = 0;          // int (Y . grad H) K0
    double poh_radial_scale = 0;
    Vec poh_trans;                  // int grad H K0
    double poh_trans_scale = 0;
    Vec mixed_dir;                  // unit direction e of the mixed identity
    double mixed_lhs = 0;           // int |Y|^2 d_e H K0
    double mixed_rhs = 0;           // 2 int Y_e (Y . grad H) K0
    double mixed_scale = 0;
    bool has_derivative = false;
};

namespace detail {

inline Vec unit(int n, int j) {
    Vec e = Vec::Zero(n);
    e(j) = 1.0;
    return e;
}

}  // namespace detail

inline BalanceIntegrals balance_integrals(const ScalarField& f, const BubbleParams& p, bool need_derivative,
                                          const QuadratureSpec& spec = {}) {
    f.validate();
    p.validate();
    spec.validate();
    const int n = f.n;
    if (p.dim() != n) throw std::invalid_argument("balance integrals: dimension mismatch");
    if (need_derivative && !f.differentiable())
        throw std::invalid_argument("identity needs a differentiable field; smooth the annulus or ladder first");
    const double lam = p.lambda;
    const double delta = p.xi.norm();
    BalanceIntegrals b;
    b.has_derivative = need_derivative;
    b.trans = Vec::Zero(n);
    b.poh_trans = Vec::Zero(n);
    b.mixed_dir = delta > 0 ? Vec(p.xi / delta) : detail::unit(n, 0);

    if (f.radial()) {
        // Radial fields reduce to the angle alpha between w and e; components
        // orthogonal to e vanish by symmetry about the e axis.
        auto cb = [&](const RadialSample& s, double* o) {
            const double hp = need_derivative && s.rho > 0 ? f.radial_derivative(s.rho) : 0.0;
            const double lt = lam * s.t;
            const double ydy = s.rho > 0 ? hp * lt * (delta * s.cosa + lt) / s.rho : 0.0;  // Y . grad H
            const double de = s.rho > 0 ? hp * (delta + lt * s.cosa) / s.rho : 0.0;        // d_e H
            o[0] = s.h;
            o[1] = s.h * s.c;
            o[2] = std::abs(s.h);
            o[3] = std::abs(s.h) * s.c;
            o[4] = -s.h * 0.5 * s.s * s.cosa / lam;
            o[5] = std::abs(s.h) * 0.5 * s.s / lam;
            o[6] = ydy;
            o[7] = std::abs(hp) * lt;
            o[8] = de;
            o[9] = std::abs(hp);
            o[10] = lt * lt * de;
            o[11] = 2.0 * lt * s.cosa * ydy;
            o[12] = 3.0 * std::abs(hp) * lt * lt;
            o[13] = std::abs(s.h) + std::abs(hp) * (lam + lt + 3.0 * lt * lt / lam);
        };
        const VecIntegral r = delta == 0.0 ? radial_engine_centered(f, lam, 14, 13, cb, spec)
                                           : radial_engine(f, lam, delta, 14, 13, cb, spec);
        b.M0 = r.value[0];
        b.M1 = r.value[1];
        b.abs_M0 = r.value[2];
        b.abs_M1 = r.value[3];
        b.trans_scale = r.value[5];
        b.poh_radial = r.value[6];
        b.poh_radial_scale = r.value[7];
        b.poh_trans_scale = r.value[9];
        b.mixed_scale = r.value[12];
        // At xi = 0 the odd moments vanish identically by antisymmetry.
        if (delta > 0) {
            b.trans = r.value[4] * b.mixed_dir;
            b.poh_trans = r.value[8] * b.mixed_dir;
            b.mixed_lhs = r.value[10];
            b.mixed_rhs = r.value[11];
        }
        return b;
    }

    const Vec e = b.mixed_dir;
    const int K = 12 + 2 * n;
    auto fn = [&](const Vec& y, double* o) {
        const Vec Y = y - p.xi;
        const double D = lam * lam + Y.squaredNorm();
        const double K0 = std::pow(lam / D, n);
        const double h = f.value(y);
        const Vec g = need_derivative ? f.gradient(y) : Vec::Zero(n);
        const double ydy = Y.dot(g);
        o[0] = h * K0;
        o[1] = h * K0 * lam * lam / D;
        o[2] = std::abs(o[0]);
        o[3] = std::abs(o[1]);
        o[4] = std::abs(h) * Y.norm() * K0 / D;
        o[5] = ydy * K0;
        o[6] = Y.norm() * g.norm() * K0;  // kink-free bound on |Y . grad H|
        o[7] = g.norm() * K0;
        o[8] = Y.squaredNorm() * g.dot(e) * K0;
        o[9] = 2.0 * Y.dot(e) * ydy * K0;
        o[10] = 3.0 * g.norm() * Y.squaredNorm() * K0;
        o[11] = o[2] + o[4] + o[6] + o[7] + o[10];
        for (int j = 0; j < n; ++j) {
            o[12 + j] = -h * Y(j) * K0 / D;
            o[12 + n + j] = g(j) * K0;
        }
    };
    const VecIntegral r = integrate_rn_smooth(n, p.xi, lam, K, 11, fn, spec);
    b.M0 = r.value[0];
    b.M1 = r.value[1];
    b.abs_M0 = r.value[2];
    b.abs_M1 = r.value[3];
    b.trans_scale = r.value[4];
    b.poh_radial = r.value[5];
    b.poh_radial_scale = r.value[6];
    b.poh_trans_scale = r.value[7];
    b.mixed_lhs = r.value[8];
    b.mixed_rhs = r.value[9];
    b.mixed_scale = r.value[10];
    for (int j = 0; j < n; ++j) {
        b.trans(j) = r.value[12 + j];
        b.poh_trans(j) = r.value[12 + n + j];
    }
    return b;
}

// n int H lambda^{n-1} D^{-n} against 2n int H lambda^{n+1} D^{-n-1}.
inline IdentityReport dilation_balance(const BalanceIntegrals& b, int n, double lambda, double tol = 1e-6) {
    return make_report("dilation_balance", n * b.M0 / lambda, 2.0 * n * b.M1 / lambda,
                       n * (b.abs_M0 + 2.0 * b.abs_M1) / lambda, tol);
}

inline IdentityReport dilation_balance(const ScalarField& f, const BubbleParams& p, const QuadratureSpec& spec = {},
                                       double tol = 1e-6) {
    return dilation_balance(balance_integrals(f, p, false, spec), f.n, p.lambda, tol);
}

inline std::vector<IdentityReport> translation_balance(const BalanceIntegrals& b, double tol = 1e-6) {
    std::vector<IdentityReport> out;
    for (int j = 0; j < b.trans.size(); ++j)
        out.push_back(make_report("translation_balance_" + std::to_string(j + 1), b.trans(j), 0.0, b.trans_scale, tol));
    return out;
}

inline std::vector<IdentityReport> translation_balance(const ScalarField& f, const BubbleParams& p,
                                                       const QuadratureSpec& spec = {}, double tol = 1e-6) {
    return translation_balance(balance_integrals(f, p, false, spec), tol);
}

inline IdentityReport pohozaev_radial(const BalanceIntegrals& b, double tol = 1e-6) {
    return make_report("pohozaev_radial", b.poh_radial, 0.0, b.poh_radial_scale, tol);
}

inline IdentityReport pohozaev_radial(const ScalarField& f, const BubbleParams& p, const QuadratureSpec& spec = {},
                                      double tol = 1e-6) {
    return pohozaev_radial(balance_integrals(f, p, true, spec), tol);
}

// Integration by parts turns int (Y . grad H) K0 into n (M0 - 2 M1).
inline double pohozaev_radial_by_parts(const BalanceIntegrals& b, int n) { return n * (b.M0 - 2.0 * b.M1); }

inline std::vector<IdentityReport> pohozaev_translational(const BalanceIntegrals& b, double tol = 1e-6) {
    std::vector<IdentityReport> out;
    for (int j = 0; j < b.poh_trans.size(); ++j)
        out.push_back(
            make_report("pohozaev_translational_" + std::to_string(j + 1), b.poh_trans(j), 0.0, b.poh_trans_scale, tol));
    return out;
}

inline std::vector<IdentityReport> pohozaev_translational(const ScalarField& f, const BubbleParams& p,
                                                          const QuadratureSpec& spec = {}, double tol = 1e-6) {
    return pohozaev_translational(balance_integrals(f, p, true, spec), tol);
}

// Special conformal field X = 2 Y_e Y - |Y|^2 e: int |Y|^2 d_e H K0 = 2 int Y_e (Y . grad H) K0.
inline IdentityReport mixed_identity(const BalanceIntegrals& b, double tol = 1e-6) {
    return make_report("mixed_identity", b.mixed_lhs, b.mixed_rhs, b.mixed_scale, tol);
}

// By parts, lhs - rhs of the mixed identity is 2 n lambda int H z_e q^{-n-1} dz.
inline double mixed_by_parts(const BalanceIntegrals& b, int n, double lambda) {
    return -2.0 * n * lambda * lambda * b.trans.dot(b.mixed_dir);
}

// Rotation generators Y_i d_j H - Y_j d_i H for H(|y|) at xi = 0. The
// pointwise integrand is H'(r)(y_i y_j - y_j y_i)/r, which is exactly zero.
inline IdentityReport rotation_identity(const ScalarField& f, const BubbleParams& p, int i = 0, int j = 1) {
    if (!f.radial() || p.xi.norm() != 0.0)
        throw std::invalid_argument("rotation identity is asserted only for radial fields at xi = 0");
    if (i == j || i < 0 || j < 0 || i >= f.n || j >= f.n)
        throw std::invalid_argument("rotation identity: need two distinct coordinate indices");
    return make_report("rotation_" + std::to_string(i + 1) + std::to_string(j + 1), 0.0, 0.0, 0.0, 0.0);
}

inline std::vector<IdentityReport> kw_suite(const ScalarField& f, const BubbleParams& p,
                                            const QuadratureSpec& spec = {}, double tol = 1e-6) {
    const BalanceIntegrals b = balance_integrals(f, p, true, spec);
    std::vector<IdentityReport> out{dilation_balance(b, f.n, p.lambda, tol)};
    for (auto& r : translation_balance(b, tol)) out.push_back(std::move(r));
    out.push_back(pohozaev_radial(b, tol));
    for (auto& r : pohozaev_translational(b, tol)) out.push_back(std::move(r));
    out.push_back(mixed_identity(b, tol));
    if (f.radial() && p.xi.norm() == 0.0 && f.n >= 2) out.push_back(rotation_identity(f, p));
    return out;
}

inline bool all_pass(const std::vector<IdentityReport>& rs) {
    for (const auto& r : rs)
        if (!r.pass) return false;
    return true;
}

}  // namespace pscurv
