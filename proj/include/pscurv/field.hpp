#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "bubble.hpp"
#include "smooth.hpp"
#include "sphere.hpp"

namespace pscurv {

// Indicator of an annulus times an amplitude. With sigma > 0 the edges are
// replaced by smooth ramps over [R_c e^{-sigma}, R_c] and [R_b, R_b e^{sigma}];
// working in log r keeps an annulus with R_b R_c = 1 symmetric under r -> 1/r.
struct AnnulusField {
    Annulus ann;
    double amplitude = 1.0;
    double sigma = 0.0;
};

struct LadderConfig {
    double a = 10.0;
    double eta = 0.3;
    double tau = 5.5;
    double sigma = 0.02;
    int depth = 4;
    double A2 = 0.5;   // eta < 1 - A2
    double B2 = 0.05;  // eta > B2

    void validate(int n) const {
        check_dimension(n);
        if (!(a > 1.0)) throw std::invalid_argument("ladder: need a > 1");
        if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("ladder: need 0 < eta < 1");
        if ((1.0 + eta) / (1.0 - eta) > 2.5) throw std::invalid_argument("ladder: need (1+eta)/(1-eta) <= 5/2");
        if (!(1.0 - A2 > eta && eta > B2)) throw std::invalid_argument("ladder: need 1 - A^2 > eta > B^2");
        if (!(tau > n - 1.0 && tau < n)) throw std::invalid_argument("ladder: need n - 1 < tau < n");
        if (!(sigma > 0.0)) throw std::invalid_argument("ladder: need sigma > 0");
        if (!(eta + sigma < 1.0)) throw std::invalid_argument("ladder: need eta + sigma < 1");
        if (!(1.0 + eta + sigma < (1.0 - eta - sigma) * a))
            throw std::invalid_argument("ladder: thickened annuli overlap, need (1+eta+sigma) < (1-eta-sigma) a");
        if (depth < 1) throw std::invalid_argument("ladder: need depth >= 1");
    }
    double level_radius(int k) const { return std::pow(a, -k); }
    double level_amplitude(int k) const { return std::pow(a, -tau * k); }
    double lambda_M(int k) const { return std::sqrt((1.0 + eta) * (1.0 - eta)) * level_radius(k); }
};

// Profile of one ladder level as a function of s = a^k r: 1 on [1-eta, 1+eta],
// smooth ramps of width sigma on either side, 0 elsewhere.
inline Jet ladder_profile(const LadderConfig& c, const Jet& s) {
    const double lo0 = 1.0 - c.eta - c.sigma, lo1 = 1.0 - c.eta;
    const double hi0 = 1.0 + c.eta, hi1 = 1.0 + c.eta + c.sigma;
    const double s0 = s[0];
    const int N = s.order();
    if (s0 <= lo0 || s0 >= hi1) return Jet(N, 0.0);
    if (s0 >= lo1 && s0 <= hi0) return Jet(N, 1.0);
    if (s0 < lo1) return smoothstep((1.0 / c.sigma) * (s - Jet(N, lo0)));
    return smoothstep((1.0 / c.sigma) * (Jet(N, hi1) - s));
}

// Levels k_lo..k_hi of the ladder; level_scale multiplies individual levels.
struct LadderField {
    LadderConfig cfg;
    int k_lo = 1;
    int k_hi = 4;
    std::vector<double> level_scale;  // indexed by k - k_lo, empty means all 1

    double scale(int k) const {
        const size_t i = static_cast<size_t>(k - k_lo);
        return i < level_scale.size() ? level_scale[i] : 1.0;
    }
    // h-th radial derivative of the level-k term.
    double level_derivative(int k, double r, int h) const {
        const double ak = std::pow(cfg.a, k);
        const double s = ak * r;
        if (s <= 1.0 - cfg.eta - cfg.sigma || s >= 1.0 + cfg.eta + cfg.sigma) return 0.0;
        const Jet F = ladder_profile(cfg, Jet::variable(h, s));
        return scale(k) * cfg.level_amplitude(k) * std::pow(ak, h) * F.derivative(h);
    }
    // The level whose thickened annulus contains r, or 0.
    int level_of(double r) const {
        if (!(r > 0)) return 0;
        const int kc = static_cast<int>(std::lround(-std::log(r) / std::log(cfg.a)));
        for (int k = kc - 1; k <= kc + 1; ++k) {
            if (k < k_lo || k > k_hi) continue;
            const double s = std::pow(cfg.a, k) * r;
            if (s > 1.0 - cfg.eta - cfg.sigma && s < 1.0 + cfg.eta + cfg.sigma) return k;
        }
        return 0;
    }
    double derivative(double r, int h) const {
        const int k = level_of(r);
        return k == 0 ? 0.0 : level_derivative(k, r, h);
    }
};

// H(y) = c0 + b.x + x^T Q x with x the inverse stereographic image of y.
struct SphereMomentField {
    double c0 = 0.0;
    Vec b;  // length n+1
    Mat Q;  // (n+1) x (n+1), symmetric
};

// Piecewise radial profile on radii r_0 < ... < r_m, zero outside [r_0, r_m].
// Constant: m values, value i on [r_i, r_{i+1}). Linear: m+1 nodal values.
struct RadialTableField {
    enum class Rule { Constant, Linear };
    std::vector<double> radii;
    std::vector<double> values;
    Rule rule = Rule::Constant;
};

using FieldKind = std::variant<AnnulusField, LadderField, SphereMomentField, RadialTableField>;

struct ScalarField {
    int n = 6;
    FieldKind kind;

    std::string kind_name() const {
        switch (kind.index()) {
            case 0: return "annulus";
            case 1: return "ladder";
            case 2: return "sphere_moment";
            default: return "radial_table";
        }
    }

    void validate() const {
        check_dimension(n);
        std::visit(
            [&](const auto& f) {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, AnnulusField>) {
                    f.ann.validate();
                    if (!(f.sigma >= 0)) throw std::invalid_argument("annulus: sigma must be >= 0");
                    if (!std::isfinite(f.amplitude)) throw std::invalid_argument("annulus: bad amplitude");
                } else if constexpr (std::is_same_v<T, LadderField>) {
                    f.cfg.validate(n);
                    if (f.k_lo < 1 || f.k_hi < f.k_lo)
                        throw std::invalid_argument("ladder: bad level window");
                } else if constexpr (std::is_same_v<T, SphereMomentField>) {
                    if (f.b.size() != n + 1 || f.Q.rows() != n + 1 || f.Q.cols() != n + 1)
                        throw std::invalid_argument("sphere_moment: b and Q must have size n+1");
                    if ((f.Q - f.Q.transpose()).cwiseAbs().maxCoeff() > 1e-14 * (1.0 + f.Q.cwiseAbs().maxCoeff()))
                        throw std::invalid_argument("sphere_moment: Q must be symmetric");
                } else {
                    if (f.radii.size() < 2) throw std::invalid_argument("radial_table: need >= 2 radii");
                    for (size_t i = 0; i < f.radii.size(); ++i) {
                        if (!(f.radii[i] >= 0) || (i > 0 && !(f.radii[i] > f.radii[i - 1])))
                            throw std::invalid_argument("radial_table: radii must be increasing and >= 0");
                    }
                    const size_t need = f.rule == RadialTableField::Rule::Constant ? f.radii.size() - 1 : f.radii.size();
                    if (f.values.size() != need) throw std::invalid_argument("radial_table: wrong number of values");
                }
            },
            kind);
    }

    // A sphere-moment field that only depends on x_{n+1} is radial in y.
    bool radial() const {
        if (const auto* m = std::get_if<SphereMomentField>(&kind)) {
            const double s = 1e-15 * (1.0 + m->Q.cwiseAbs().maxCoeff() + m->b.cwiseAbs().maxCoeff());
            if (m->b.head(n).cwiseAbs().maxCoeff() > s) return false;
            if (m->Q.col(n).head(n).cwiseAbs().maxCoeff() > s) return false;
            const double q = m->Q(0, 0);
            const Mat D = m->Q.topLeftCorner(n, n) - q * Mat::Identity(n, n);
            return D.cwiseAbs().maxCoeff() <= s;
        }
        return true;
    }

    bool differentiable() const {
        if (const auto* a = std::get_if<AnnulusField>(&kind)) return a->sigma > 0;
        return !std::holds_alternative<RadialTableField>(kind);
    }

    double radial_value(double r) const {
        return std::visit(
            [&](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, AnnulusField>) {
                    const double Rc = f.ann.inner(), Rb = f.ann.outer();
                    if (r >= Rc && r <= Rb) return f.amplitude;
                    if (f.sigma <= 0 || r <= 0) return 0.0;
                    const double lr = std::log(r);
                    if (r < Rc) return f.amplitude * smoothstep((lr - std::log(Rc) + f.sigma) / f.sigma);
                    return f.amplitude * smoothstep((std::log(Rb) + f.sigma - lr) / f.sigma);
                } else if constexpr (std::is_same_v<T, LadderField>) {
                    return f.derivative(r, 0);
                } else if constexpr (std::is_same_v<T, SphereMomentField>) {
                    Vec y = Vec::Zero(n);
                    y(0) = r;
                    return value(y);
                } else {
                    const auto& R = f.radii;
                    if (r < R.front() || r >= R.back()) return 0.0;
                    const size_t i = std::upper_bound(R.begin(), R.end(), r) - R.begin() - 1;
                    if (f.rule == RadialTableField::Rule::Constant) return f.values[i];
                    const double w = (r - R[i]) / (R[i + 1] - R[i]);
                    return (1.0 - w) * f.values[i] + w * f.values[i + 1];
                }
            },
            kind);
    }

    // dH/dr for radial, differentiable fields.
    double radial_derivative(double r) const {
        return std::visit(
            [&](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, AnnulusField>) {
                    const double Rc = f.ann.inner(), Rb = f.ann.outer();
                    if (f.sigma <= 0) throw std::domain_error("indicator annulus has no classical derivative");
                    if ((r >= Rc && r <= Rb) || r <= 0) return 0.0;
                    const double lr = std::log(r);
                    if (r < Rc) {
                        const Jet s = smoothstep(Jet::variable(1, (lr - std::log(Rc) + f.sigma) / f.sigma));
                        return f.amplitude * s[1] / (f.sigma * r);
                    }
                    const Jet s = smoothstep(Jet::variable(1, (std::log(Rb) + f.sigma - lr) / f.sigma));
                    return -f.amplitude * s[1] / (f.sigma * r);
                } else if constexpr (std::is_same_v<T, LadderField>) {
                    return f.derivative(r, 1);
                } else if constexpr (std::is_same_v<T, SphereMomentField>) {
                    Vec y = Vec::Zero(n);
                    y(0) = r;
                    return gradient(y)(0);
                } else {
                    throw std::domain_error("radial table fields are not differentiable");
                }
            },
            kind);
    }

    double value(const Vec& y) const {
        if (const auto* m = std::get_if<SphereMomentField>(&kind)) {
            const Vec x = stereo_unproject(y);
            return m->c0 + m->b.dot(x) + x.dot(m->Q * x);
        }
        return radial_value(y.norm());
    }

    Vec gradient(const Vec& y) const {
        if (const auto* m = std::get_if<SphereMomentField>(&kind)) {
            const Vec x = stereo_unproject(y);
            return stereo_unproject_jacobian(y).transpose() * (m->b + 2.0 * m->Q * x);
        }
        const double r = y.norm();
        if (r == 0.0) return Vec::Zero(n);
        return radial_derivative(r) * y / r;
    }

    // Radii where the profile is non-smooth or changes regime.
    std::vector<double> breakpoints() const {
        std::vector<double> out;
        std::visit(
            [&](const auto& f) {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, AnnulusField>) {
                    if (f.sigma > 0) out.push_back(f.ann.inner() * std::exp(-f.sigma));
                    out.push_back(f.ann.inner());
                    out.push_back(f.ann.outer());
                    if (f.sigma > 0) out.push_back(f.ann.outer() * std::exp(f.sigma));
                } else if constexpr (std::is_same_v<T, LadderField>) {
                    const auto& c = f.cfg;
                    for (int k = f.k_lo; k <= f.k_hi; ++k) {
                        const double rk = c.level_radius(k);
                        for (double s : {1.0 - c.eta - c.sigma, 1.0 - c.eta, 1.0 + c.eta, 1.0 + c.eta + c.sigma})
                            out.push_back(s * rk);
                    }
                } else if constexpr (std::is_same_v<T, RadialTableField>) {
                    out = f.radii;
                }
            },
            kind);
        std::sort(out.begin(), out.end());
        return out;
    }

    double sup_bound() const {
        return std::visit(
            [&](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, AnnulusField>) {
                    return std::abs(f.amplitude);
                } else if constexpr (std::is_same_v<T, LadderField>) {
                    double s = 0;
                    for (int k = f.k_lo; k <= f.k_hi; ++k)
                        s = std::max(s, std::abs(f.scale(k)) * f.cfg.level_amplitude(k));
                    return s;
                } else if constexpr (std::is_same_v<T, SphereMomentField>) {
                    Eigen::SelfAdjointEigenSolver<Mat> es(f.Q);
                    return std::abs(f.c0) + f.b.norm() + es.eigenvalues().cwiseAbs().maxCoeff();
                } else {
                    double s = 0;
                    for (double v : f.values) s = std::max(s, std::abs(v));
                    return s;
                }
            },
            kind);
    }
};

inline ScalarField annulus_field(int n, Annulus ann, double amplitude = 1.0, double sigma = 0.0) {
    ScalarField f{n, AnnulusField{ann, amplitude, sigma}};
    f.validate();
    return f;
}

inline ScalarField ladder_field(int n, const LadderConfig& cfg, int k_lo = 1, int k_hi = -1) {
    ScalarField f{n, LadderField{cfg, k_lo, k_hi < 0 ? cfg.depth : k_hi, {}}};
    f.validate();
    return f;
}

inline ScalarField sphere_moment_field(int n, double c0, Vec b, Mat Q) {
    ScalarField f{n, SphereMomentField{c0, std::move(b), std::move(Q)}};
    f.validate();
    return f;
}

inline ScalarField radial_table_field(int n, std::vector<double> radii, std::vector<double> values,
                                      RadialTableField::Rule rule = RadialTableField::Rule::Constant) {
    ScalarField f{n, RadialTableField{std::move(radii), std::move(values), rule}};
    f.validate();
    return f;
}

// H = 0 as a one-cell table.
inline ScalarField zero_field(int n) { return radial_table_field(n, {0.0, 1.0}, {0.0}); }

}  // namespace pscurv
