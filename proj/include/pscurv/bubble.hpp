#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

#include <Eigen/Dense>

#include "numeric.hpp"
#include "quadrature.hpp"

namespace pscurv {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline void check_dimension(int n) {
    if (n < 3) throw std::invalid_argument("dimension n must be >= 3");
}

// n >= 6 is where the blow-up construction lives; the formulas here do not need it.
inline bool blowup_regime(int n) { return n >= 6; }

struct BubbleParams {
    double lambda = 1.0;
    Vec xi;

    BubbleParams() = default;
    BubbleParams(double l, Vec x) : lambda(l), xi(std::move(x)) {}
    static BubbleParams centered(int n, double l) { return BubbleParams(l, Vec::Zero(n)); }

    int dim() const { return static_cast<int>(xi.size()); }
    void validate() const {
        check_dimension(dim());
        if (!(lambda > 0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be positive");
        if (!xi.allFinite()) throw std::invalid_argument("xi must be finite");
    }
    // Packed coordinates (lambda, xi_1..xi_n).
    Vec packed() const {
        Vec v(dim() + 1);
        v(0) = lambda;
        v.tail(dim()) = xi;
        return v;
    }
    static BubbleParams unpack(const Vec& v) { return BubbleParams(v(0), v.tail(v.size() - 1)); }
};

namespace detail {

// log(lambda^2 + r^2), stable for r >> lambda.
inline double log_denominator(double lambda, double r) {
    if (r > 1e6 * lambda) return 2.0 * std::log(r) + std::log1p((lambda / r) * (lambda / r));
    return std::log(lambda * lambda + r * r);
}

// lambda^a (lambda^2 + r^2)^{-b}, in log space when the ratio is huge.
inline double lam_pow_den(double lambda, double r, double a, double b) {
    if (r > 1e6 * lambda) return std::exp(a * std::log(lambda) - b * log_denominator(lambda, r));
    return std::pow(lambda, a) * std::pow(lambda * lambda + r * r, -b);
}

}  // namespace detail

inline double eval_bubble(const BubbleParams& p, const Vec& y) {
    const int n = p.dim();
    const double r = (y - p.xi).norm();
    return detail::lam_pow_den(p.lambda, r, 0.5 * (n - 2), 0.5 * (n - 2));
}

// Radial Laplacian V'' + (n-1)V'/r written out term by term.
inline double bubble_laplacian(const BubbleParams& p, const Vec& y) {
    const int n = p.dim();
    const double l = p.lambda, r = (y - p.xi).norm();
    const double a = 0.5 * (n - 2);
    const double t1 = detail::lam_pow_den(l, r, a, 0.5 * n);
    const double t2 = r * r * detail::lam_pow_den(l, r, a, 0.5 * n + 1.0);
    return -(n - 2) * (n * t1 - n * t2);
}

inline double pde_residual(const BubbleParams& p, const Vec& y) {
    const int n = p.dim();
    const double v = eval_bubble(p, y);
    return bubble_laplacian(p, y) + n * (n - 2) * std::pow(v, double(n + 2) / (n - 2));
}

// (dV/dlambda, dV/dxi_1, ..., dV/dxi_n).
inline Vec tangent_fields(const BubbleParams& p, const Vec& y) {
    const int n = p.dim();
    const double l = p.lambda;
    const Vec d = y - p.xi;
    const double r2 = d.squaredNorm(), r = std::sqrt(r2);
    const double c = -0.5 * (n - 2);
    Vec out(n + 1);
    out(0) = c * (l * l - r2) * detail::lam_pow_den(l, r, 0.5 * (n - 4), 0.5 * n);
    const double k = c * 2.0 * detail::lam_pow_den(l, r, 0.5 * (n - 2), 0.5 * n);
    for (int j = 0; j < n; ++j) out(j + 1) = k * (-d(j));
    return out;
}

inline Vec psi_fields(const BubbleParams& p, const Vec& y) {
    const int n = p.dim();
    const double l = p.lambda;
    const Vec d = y - p.xi;
    const double r2 = d.squaredNorm(), r = std::sqrt(r2);
    Vec out(n + 1);
    out(0) = (l * l - r2) * detail::lam_pow_den(l, r, 0.5 * n + 1.0, 0.5 * n + 2.0);
    const double k = 2.0 * detail::lam_pow_den(l, r, 0.5 * n + 2.0, 0.5 * n + 2.0);
    for (int j = 0; j < n; ++j) out(j + 1) = k * d(j);
    return out;
}

// Closed-form Laplacians of the tangent fields, from
//   Delta[(l^2 - r^2) D^{-n/2}]   = -n(n+2) l^2 (l^2 - r^2) D^{-n/2-2}
//   Delta[(xi_j - y_j) D^{-n/2}]  = -n(n+2) l^2 (xi_j - y_j) D^{-n/2-2}.
inline Vec tangent_laplacians(const BubbleParams& p, const Vec& y) {
    const int n = p.dim();
    const double l = p.lambda;
    const Vec d = y - p.xi;
    const double r2 = d.squaredNorm(), r = std::sqrt(r2);
    const double c = -0.5 * (n - 2);
    const double m = -double(n) * (n + 2);
    Vec out(n + 1);
    out(0) = c * m * (l * l - r2) * detail::lam_pow_den(l, r, 0.5 * n, 0.5 * n + 2.0);
    const double k = c * 2.0 * m * detail::lam_pow_den(l, r, 0.5 * n + 1.0, 0.5 * n + 2.0);
    for (int j = 0; j < n; ++j) out(j + 1) = k * (-d(j));
    return out;
}

// Gradients of the tangent fields: row l is grad phi_l.
inline Mat tangent_gradients(const BubbleParams& p, const Vec& y) {
    const int n = p.dim();
    const double l = p.lambda;
    const Vec d = y - p.xi;
    const double r2 = d.squaredNorm(), r = std::sqrt(r2);
    const double c = -0.5 * (n - 2);
    const double Dm = detail::lam_pow_den(l, r, 0.0, 0.5 * n);
    const double Dm1 = detail::lam_pow_den(l, r, 0.0, 0.5 * n + 1.0);
    Mat g(n + 1, n);
    const double pre0 = c * std::pow(l, 0.5 * (n - 4));
    // d/dy of (l^2 - r^2) D^{-n/2} = [-2 D^{-n/2} - n (l^2 - r^2) D^{-n/2-1}] d
    g.row(0) = pre0 * (-2.0 * Dm - n * (l * l - r2) * Dm1) * d.transpose();
    const double prej = -2.0 * c * std::pow(l, 0.5 * (n - 2));  // phi_j = prej * d_j * D^{-n/2}
    for (int j = 0; j < n; ++j) {
        Vec row = -n * d(j) * Dm1 * d;
        row(j) += Dm;
        g.row(j + 1) = prej * row.transpose();
    }
    return g;
}

// (||phi_0||, ||phi_1||) in the Dirichlet norm, by radial quadrature at the given lambda.
inline std::pair<double, double> tangent_norms(const BubbleParams& p, const QuadratureSpec& spec = {}) {
    p.validate();
    const int n = p.dim();
    const double l = p.lambda;
    const double c = 0.5 * (n - 2);
    auto dens = [&](double th, double* out) {
        const double r = l * std::tan(th);
        const double r2 = r * r;
        const double jac = l / (std::cos(th) * std::cos(th));
        const double Dm = detail::lam_pow_den(l, r, 0.0, 0.5 * n);
        const double Dm1 = detail::lam_pow_den(l, r, 0.0, 0.5 * n + 1.0);
        const double rn1 = std::pow(r, n - 1);
        const double f0 = c * std::pow(l, 0.5 * (n - 4)) * (-2.0 * r * Dm - n * r * (l * l - r2) * Dm1);
        const double k = 2.0 * c * std::pow(l, 0.5 * (n - 2)) * Dm;
        const double kp = -2.0 * c * std::pow(l, 0.5 * (n - 2)) * n * r * Dm1;
        // sphere average of |grad(k y_1)|^2 is k^2 + (2 k k' r + k'^2 r^2)/n
        out[0] = f0 * f0 * rn1 * jac;
        out[1] = (k * k + (2.0 * k * kp * r + kp * kp * r2) / n) * rn1 * jac;
        out[2] = out[0] + out[1];
    };
    const VecIntegral r = gk_adaptive(dens, {0.0, std::atan(1.0), 0.5 * std::numbers::pi}, 3, 2, spec);
    const double area = sphere_area(n - 1);
    return {std::sqrt(area * r.value[0]), std::sqrt(area * r.value[1])};
}

struct Constants {
    int n = 0;
    double c_tilde_n = 0;
    double c_bar_minus1 = 0;
    double c_bar_4 = 0;
    double bubble_mass = 0;  // int (lambda/(lambda^2+|y|^2))^n dy, any lambda
    double phi0_norm = 0;    // lambda * ||phi_0||
    double phij_norm = 0;    // lambda * ||phi_j||
};

inline Constants compute_constants(int n) {
    check_dimension(n);
    Constants k;
    k.n = n;
    k.c_tilde_n = (n - 2.0) / (4.0 * (n - 1.0));
    k.c_bar_minus1 = -(n - 2.0) * (n - 2.0) / (8.0 * n * (n - 1.0));
    k.bubble_mass = sphere_area(n) / std::pow(2.0, n);
    k.c_bar_4 = (n - 2.0) * k.bubble_mass;
    QuadratureSpec tight;
    tight.abs_tol = 1e-14;
    tight.rel_tol = 1e-13;
    const auto [a, b] = tangent_norms(BubbleParams::centered(n, 1.0), tight);
    k.phi0_norm = a;
    k.phij_norm = b;
    return k;
}

// Computed once per dimension; safe to call from several threads.
inline const Constants& constants(int n) {
    static std::mutex mtx;
    static std::map<int, std::unique_ptr<Constants>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<Constants>(compute_constants(n));
    return *slot;
}

// Geodesic distance for (A dlambda^2 + B |dxi|^2)/lambda^2, A = phi0_norm^2,
// B = phij_norm^2: a rescaled upper half-space.
inline double hyperbolic_distance(const BubbleParams& p0, const BubbleParams& p1) {
    p0.validate();
    p1.validate();
    if (p0.dim() != p1.dim()) throw std::invalid_argument("hyperbolic_distance: dimension mismatch");
    const Constants& k = constants(p0.dim());
    const double ratio = k.phij_norm / k.phi0_norm;
    const double dl = p0.lambda - p1.lambda;
    const double dx2 = ratio * ratio * (p0.xi - p1.xi).squaredNorm();
    const double x = (dl * dl + dx2) / (2.0 * p0.lambda * p1.lambda);
    return k.phi0_norm * std::log1p(x + std::sqrt(x * (x + 2.0)));
}

}  // namespace pscurv
