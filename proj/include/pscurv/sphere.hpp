#pragma once

#include <cmath>
#include <stdexcept>

#include "bubble.hpp"
#include "numeric.hpp"

namespace pscurv {

// Radii t - delta (inner) and t + delta (outer).
struct Annulus {
    double t = 1.0;
    double delta = 0.3;

    double inner() const { return t - delta; }
    double outer() const { return t + delta; }
    void validate() const {
        if (!(t > delta && delta > 0) || !std::isfinite(t))
            throw std::invalid_argument("annulus needs t > delta > 0");
    }
    Annulus scaled(double s) const { return Annulus{s * t, s * delta}; }
};

// Projection from the north pole: y_i = x_i / (1 - x_{n+1}).
inline Vec stereo_project(const Vec& x) {
    const int m = static_cast<int>(x.size());
    if (m < 2) throw std::invalid_argument("stereo_project: need a point of S^n, n >= 1");
    const double den = 1.0 - x(m - 1);
    if (!(den > 1e-300)) throw std::domain_error("stereo_project: north pole has no image");
    return x.head(m - 1) / den;
}

inline Vec stereo_unproject(const Vec& y) {
    const int n = static_cast<int>(y.size());
    const double r2 = y.squaredNorm();
    Vec x(n + 1);
    x.head(n) = 2.0 * y / (1.0 + r2);
    x(n) = (r2 - 1.0) / (r2 + 1.0);
    return x;
}

inline double conformal_factor(const Vec& y) { return 2.0 / (1.0 + y.squaredNorm()); }

// Jacobian of stereo_unproject, (n+1) x n.
inline Mat stereo_unproject_jacobian(const Vec& y) {
    const int n = static_cast<int>(y.size());
    const double r2 = y.squaredNorm();
    const double q = 1.0 + r2;
    Mat J(n + 1, n);
    J.topRows(n) = (2.0 / q) * Mat::Identity(n, n) - (4.0 / (q * q)) * y * y.transpose();
    J.row(n) = (4.0 / (q * q)) * y.transpose();
    return J;
}

// Volume of a cap of S^n whose boundary (n-1)-sphere has Euclidean radius rho.
inline double cap_volume(int n, double rho) {
    check_dimension(n);
    if (!(rho >= 0.0) || !(rho < 1.0)) throw std::domain_error("cap_volume: need 0 <= rho < 1");
    return sphere_area(n - 1) * sinpow_integral(n - 1, 0.0, std::asin(rho));
}

inline double cap_volume_derivative(int n, double rho, double drho2_dparam) {
    check_dimension(n);
    if (!(rho >= 0.0) || !(rho < 1.0)) throw std::domain_error("cap_volume_derivative: need 0 <= rho < 1");
    return 0.5 * sphere_area(n - 1) * std::pow(rho, n - 2) / std::sqrt(1.0 - rho * rho) * drho2_dparam;
}

// (2 rho)^2 for the image of the sphere |z + xi/lambda| = R/lambda, |xi| = delta.
inline double shell_boundary_diameter2(double R, double lambda, double delta) {
    if (!(R > 0) || !(lambda > 0) || !(delta >= 0))
        throw std::invalid_argument("shell_boundary_radius: need R, lambda > 0 and delta >= 0");
    if (!(delta < R)) throw std::domain_error("shell_boundary_radius: need delta < R");
    const double Rl = R / lambda;
    if (delta == 0.0) {
        const double a = 4.0 * Rl / (1.0 + Rl * Rl);
        return a * a;
    }
    const double dl = delta / lambda;
    const double num = 1.0 + Rl * Rl - dl * dl;
    const double p = (Rl + dl) * (Rl + dl) + 1.0;
    const double m = (Rl - dl) * (Rl - dl) + 1.0;
    return 16.0 * Rl * Rl * (num * num + 4.0 * dl * dl) / (p * p * m * m);
}

inline double shell_boundary_radius(double R, double lambda, double delta) {
    return 0.5 * std::sqrt(shell_boundary_diameter2(R, lambda, delta));
}

// d(2 rho)^2 / d lambda at delta = 0; positive iff R > lambda.
inline double shell_boundary_diameter2_dlambda(double R, double lambda) {
    const double s = R * R + lambda * lambda;
    return 32.0 * R * R * lambda * (R * R - lambda * lambda) / (s * s * s);
}

struct ShellRadii {
    double rho_b = 0;  // outer boundary
    double rho_c = 0;  // inner boundary
    bool outer_northern = false;
    bool inner_southern = false;
    bool valid() const { return outer_northern && inner_southern; }
};

// The outer boundary lies in the open northern hemisphere iff every point of it
// has |z| > 1, i.e. (R_b - delta)/lambda > 1; likewise the inner one iff (R_c + delta)/lambda < 1.
inline ShellRadii shell_radii(const Annulus& ann, const BubbleParams& p) {
    ann.validate();
    p.validate();
    const double delta = p.xi.norm();
    ShellRadii s;
    s.outer_northern = (ann.outer() - delta) / p.lambda > 1.0;
    s.inner_southern = delta < ann.inner() && (ann.inner() + delta) / p.lambda < 1.0;
    if (delta < ann.outer()) s.rho_b = shell_boundary_radius(ann.outer(), p.lambda, delta);
    if (delta < ann.inner()) s.rho_c = shell_boundary_radius(ann.inner(), p.lambda, delta);
    return s;
}

// Spherical measure of the projected shell, |S^n| minus the two boundary caps.
inline double shell_spherical_measure(const Annulus& ann, const BubbleParams& p) {
    const ShellRadii s = shell_radii(ann, p);
    if (!s.valid())
        throw std::domain_error("shell_spherical_measure: caps are not in opposite hemispheres");
    const int n = p.dim();
    return sphere_area(n) - cap_volume(n, s.rho_b) - cap_volume(n, s.rho_c);
}

// Lambda-derivatives of the two cap volumes at xi = 0 (outer, inner).
inline std::pair<double, double> shell_cap_derivatives(int n, const Annulus& ann, double lambda) {
    ann.validate();
    auto one = [&](double R) {
        const double rho = shell_boundary_radius(R, lambda, 0.0);
        return cap_volume_derivative(n, rho, 0.25 * shell_boundary_diameter2_dlambda(R, lambda));
    };
    return {one(ann.outer()), one(ann.inner())};
}

}  // namespace pscurv
