#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "degree.hpp"
#include "field.hpp"
#include "functional.hpp"

namespace pscurv {

struct CriticalCertificate {
    BubbleParams point;
    double grad_norm = 0;
    double threshold = 0;  // grad_norm must not exceed this
    Mat hessian;
    double trace_ratio = 0;  // |trace| / |hess|_F
    int degree = 0;
    double ball_radius = 0;
    Vec ball_center;
    double boundary_grad_min = 0;
    double tail_bound = 0;  // gradient budget for ladder levels left out of the computation
    int zeros_found = 0;
    bool certified = false;
    std::string failure;
    std::string note;  // set when the certified degree differs from -1
};

// Gradient scale n |c| sup|H| / lambda.
inline double gradient_scale(int n, double sup, double lambda) {
    return n * std::abs(constants(n).c_bar_minus1) * sup / lambda;
}

struct SearchResult {
    BubbleParams point;
    GradHess gh;
    int iterations = 0;
    bool left_ball = false;
};

// Newton on grad G with steps clamped to half the ball radius and backtracking
// on |grad|; a gradient step on |grad|^2 takes over when Newton stalls.
inline SearchResult critical_search(const ScalarField& f, const BubbleParams& seed, const BallDomain& ball,
                                    const QuadratureSpec& spec = {}, int max_iters = 60) {
    SearchResult res;
    Vec x = seed.packed();
    GradHess gh = hess_G(f, BubbleParams::unpack(x), spec);
    double gn = gh.grad.norm();
    const double cap = 0.5 * ball.radius;
    for (int it = 0; it < max_iters; ++it) {
        res.iterations = it + 1;
        if (gn == 0.0) break;
        Vec dx = gh.hess.colPivHouseholderQr().solve(-gh.grad);
        if (!dx.allFinite()) dx = -gh.hess * gh.grad;
        if (dx.norm() > cap) dx *= cap / dx.norm();
        bool moved = false;
        for (int attempt = 0; attempt < 2 && !moved; ++attempt) {
            double t = 1.0;
            for (int ls = 0; ls < 30; ++ls) {
                Vec xn = x + t * dx;
                if (xn(0) <= 0) {
                    t *= 0.5;
                    continue;
                }
                GradHess gn_new = hess_G(f, BubbleParams::unpack(xn), spec);
                const double v = gn_new.grad.norm();
                if (v < gn) {
                    x = xn;
                    gh = std::move(gn_new);
                    gn = v;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if (!moved) {
                dx = -gh.hess * gh.grad;
                const double s = dx.norm();
                if (s == 0.0) break;
                dx *= std::min(cap, gn / std::max(gh.hess.norm(), 1e-300)) / s;
            }
        }
        if (!moved) break;
        if (!ball.contains(x)) {
            res.left_ball = true;
            break;
        }
        if (dx.norm() < 1e-14 * x(0)) break;
    }
    res.point = BubbleParams::unpack(x);
    res.gh = gh;
    return res;
}

inline bool annulus_hypothesis(const Annulus& ann) {
    const double lm = lambda_M(ann);
    return std::sqrt(2.5) >= ann.outer() / lm && ann.inner() / lm >= std::sqrt(0.4);
}

inline DegreeOptions default_degree_options(int n) {
    DegreeOptions o;
    o.boundary_samples = 64 * (n + 1);
    return o;
}

inline BallDomain search_ball(int n, double lambda_center, double gamma) {
    BallDomain b;
    b.center = Vec::Zero(n + 1);
    b.center(0) = lambda_center;
    b.radius = gamma * lambda_center;
    return b;
}

inline VectorMap field_gradient_map(const ScalarField& f, const QuadratureSpec& spec) {
    return gradient_map([f, spec](const Vec& x) { return hess_G(f, BubbleParams::unpack(x), spec); });
}

// Minimum of |grad G| on the boundary of B((lambda_M, 0), gamma lambda_M).
inline double boundary_gradient_floor(int n, const Annulus& ann, double gamma, int samples,
                                      const QuadratureSpec& spec = {}) {
    ann.validate();
    if (!(gamma > 0 && gamma < 1)) throw std::invalid_argument("boundary_gradient_floor: need 0 < gamma < 1");
    const ScalarField f = annulus_field(n, ann);
    const BallDomain ball = search_ball(n, lambda_M(ann), gamma);
    DegreeOptions o = default_degree_options(n);
    o.boundary_samples = samples;
    double certified, sampled;
    Vec argmin;
    boundary_minimum(field_gradient_map(f, spec), ball, o, certified, sampled, argmin);
    return sampled;
}

inline CriticalCertificate certify_annulus_critical(int n, const Annulus& ann, const QuadratureSpec& spec = {},
                                                    double gamma = 0.05, bool with_degree_ball = false) {
    ann.validate();
    if (!annulus_hypothesis(ann))
        throw std::invalid_argument("annulus violates sqrt(5/2) >= (t+D)/lambda_M >= (t-D)/lambda_M >= sqrt(2/5)");
    const ScalarField f = annulus_field(n, ann);
    const double lm = lambda_M(ann);
    CriticalCertificate c;
    c.point = BubbleParams::centered(n, lm);
    const GradHess gh = hess_G(f, c.point, spec);
    c.grad_norm = gh.grad.norm();
    c.threshold = 1e-8 * gradient_scale(n, 1.0, lm);
    c.hessian = gh.hess;
    c.trace_ratio = std::abs(gh.hess.trace()) / gh.hess.norm();
    c.ball_radius = gamma * lm;
    c.ball_center = c.point.packed();
    c.degree = degree_nondegenerate(gh.hess);
    c.zeros_found = 1;
    if (with_degree_ball) {
        const DegreeResult d = degree_ball(field_gradient_map(f, spec), search_ball(n, lm, gamma),
                                           default_degree_options(n));
        c.boundary_grad_min = d.boundary_min;
        c.zeros_found = static_cast<int>(d.zeros.size());
        if (d.degree != c.degree) c.failure = "degree_ball disagrees with the Hessian sign";
    }
    const Mat off = gh.hess - Mat(gh.hess.diagonal().asDiagonal());
    if (c.grad_norm > c.threshold) c.failure = "gradient not numerically zero";
    else if (off.cwiseAbs().maxCoeff() > 1e-10 * gh.hess.norm()) c.failure = "Hessian not diagonal";
    else if (!(gh.hess(0, 0) != 0) || (gh.hess.diagonal().tail(n).array() * gh.hess(0, 0) >= 0).any())
        c.failure = "d2G/dlambda2 and d2G/dxi2 do not have opposite signs";
    c.certified = c.failure.empty();
    if (c.certified && c.degree != -1) c.note = "degree is " + std::to_string(c.degree) + ", not -1";
    return c;
}

inline ScalarField build_ladder(int n, const LadderConfig& cfg) { return ladder_field(n, cfg, 1, cfg.depth); }

struct DecayRow {
    int level = 0;
    double sup = 0;
    double ratio = 0;  // sup(level) / sup(level - 1), 0 on the first row
};

// Sup of the h-th radial derivative of level m, sampled on a fixed grid in s = a^m r.
inline std::vector<DecayRow> ladder_derivative_decay(int n, const LadderConfig& cfg, int h, int samples = 4000) {
    cfg.validate(n);
    if (h < 0 || h > n - 1) throw std::invalid_argument("ladder_derivative_decay: need 0 <= h <= n-1");
    const LadderField L{cfg, 1, cfg.depth, {}};
    std::vector<double> grid;
    const double lo0 = 1.0 - cfg.eta - cfg.sigma, lo1 = 1.0 - cfg.eta;
    const double hi0 = 1.0 + cfg.eta, hi1 = 1.0 + cfg.eta + cfg.sigma;
    for (int i = 1; i < samples; ++i) {
        const double u = double(i) / samples;
        grid.push_back(lo0 + u * (lo1 - lo0));
        grid.push_back(hi0 + u * (hi1 - hi0));
    }
    grid.push_back(1.0);
    std::vector<DecayRow> rows;
    for (int m = 1; m <= cfg.depth; ++m) {
        const double rm = cfg.level_radius(m);
        double sup = 0;
        for (double s : grid) sup = std::max(sup, std::abs(L.level_derivative(m, s * rm, h)));
        DecayRow row{m, sup, rows.empty() ? 0.0 : sup / rows.back().sup};
        rows.push_back(row);
    }
    return rows;
}

// Least-squares slope of log sup|d^{n-1} H| against log(level radius).
inline double holder_slope(int n, const LadderConfig& cfg, int samples = 4000) {
    const auto rows = ladder_derivative_decay(n, cfg, n - 1, samples);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& r : rows) {
        const double x = std::log(cfg.level_radius(r.level)), y = std::log(r.sup);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double N = static_cast<double>(rows.size());
    return (N * sxy - sx * sy) / (N * sxx - sx * sx);
}

inline ScalarField ladder_window(int n, const LadderField& L, int k_lo, int k_hi) {
    ScalarField f{n, LadderField{L.cfg, k_lo, k_hi, {}}};
    std::vector<double> sc;
    for (int k = k_lo; k <= k_hi; ++k) sc.push_back(L.scale(k));
    std::get<LadderField>(f.kind).level_scale = sc;
    return f;
}

// Upper bound on |grad G| at p from ladder levels outside [k_lo, k_hi], all k >= 1
// including levels past the configured depth, using
//   |grad_(lambda,xi) lambda^n D^{-n}| <= sqrt(2) n lambda^{n-1} D^{-n},
// with D >= (r - |xi|)^2 for levels outside the bubble and D >= lambda^2 generally.
inline double ladder_tail_bound(int n, const LadderField& L, int k_lo, int k_hi, const BubbleParams& p) {
    const auto& c = L.cfg;
    const double cb = std::abs(constants(n).c_bar_minus1);
    const double pre = cb * std::sqrt(2.0) * n * std::pow(p.lambda, n - 1);
    const double xi = p.xi.norm();
    const double shell = sphere_area(n - 1) / n *
                         (std::pow(1.0 + c.eta + c.sigma, n) - std::pow(1.0 - c.eta - c.sigma, n));
    double total = 0;
    for (int k = 1; k < k_lo; ++k) {
        const double rk = c.level_radius(k);
        const double inner = (1.0 - c.eta - c.sigma) * rk - xi;
        const double dmin = inner > 0 ? std::max(inner * inner, p.lambda * p.lambda) : p.lambda * p.lambda;
        total += std::abs(L.scale(k)) * c.level_amplitude(k) * shell * std::pow(rk, n) * std::pow(dmin, -n);
    }
    // k > k_hi: geometric series with ratio a^{-(tau+n)}
    const int k0 = k_hi + 1;
    const double q = std::pow(c.a, -(c.tau + n));
    double smax = 1.0;
    for (int k = k0; k <= c.depth; ++k) smax = std::max(smax, std::abs(L.scale(k)));
    total += smax * shell * std::pow(q, k0) / (1.0 - q) * std::pow(p.lambda, -2.0 * n);
    return pre * total;
}

struct Interference {
    double outer = 0;  // |grad G| from levels k < m
    double inner = 0;  // |grad G| from levels k > m
    double own_scale = 0;  // n |c| a^{-tau m} / lambda_{M_m}
};

inline Interference interference(const ScalarField& field, int m, const BubbleParams& p,
                                 const QuadratureSpec& spec = {}) {
    const auto* L = std::get_if<LadderField>(&field.kind);
    if (!L) throw std::invalid_argument("interference: field is not a ladder");
    const int n = field.n;
    Interference r;
    r.own_scale = gradient_scale(n, L->cfg.level_amplitude(m), L->cfg.lambda_M(m));
    if (m > L->k_lo) r.outer = grad_G(ladder_window(n, *L, L->k_lo, m - 1), p, spec).norm();
    if (m < L->k_hi) r.inner = grad_G(ladder_window(n, *L, m + 1, L->k_hi), p, spec).norm();
    return r;
}

struct StableSearchOptions {
    double gamma = 0.05;
    int window = 2;            // levels m - window .. m + window enter the quadrature
    bool run_degree_ball = true;
    DegreeOptions degree;
};

// Level-m stable critical point of a ladder (or of an annulus field, m ignored).
inline CriticalCertificate find_stable_critical(const ScalarField& field, int m, const QuadratureSpec& spec = {},
                                                StableSearchOptions opt = {}) {
    field.validate();
    const int n = field.n;
    if (opt.degree.boundary_samples == 0) opt.degree = default_degree_options(n);
    CriticalCertificate c;
    ScalarField work = field;
    double lm, amp;
    const LadderField* L = std::get_if<LadderField>(&field.kind);
    if (L) {
        if (m < L->k_lo || m > L->k_hi) throw std::invalid_argument("find_stable_critical: level outside the ladder");
        lm = L->cfg.lambda_M(m);
        amp = std::abs(L->scale(m)) * L->cfg.level_amplitude(m);
        work = ladder_window(n, *L, std::max(L->k_lo, m - opt.window), std::min(L->k_hi, m + opt.window));
    } else if (const auto* A = std::get_if<AnnulusField>(&field.kind)) {
        lm = lambda_M(A->ann);
        amp = std::abs(A->amplitude);
    } else {
        throw std::invalid_argument("find_stable_critical: needs a ladder or annulus field");
    }
    const BallDomain ball = search_ball(n, lm, opt.gamma);
    c.ball_center = ball.center;
    c.ball_radius = ball.radius;
    c.threshold = 1e-8 * gradient_scale(n, amp, lm);
    const SearchResult s = critical_search(work, BubbleParams::centered(n, lm), ball, spec);
    c.point = s.point;
    c.grad_norm = s.gh.grad.norm();
    c.hessian = s.gh.hess;
    c.trace_ratio = std::abs(s.gh.hess.trace()) / s.gh.hess.norm();
    if (L) {
        const auto& wl = std::get<LadderField>(work.kind);
        c.tail_bound = ladder_tail_bound(n, *L, wl.k_lo, wl.k_hi, BubbleParams::centered(n, lm * (1 - opt.gamma)));
    }
    if (s.left_ball || !ball.contains(s.point.packed())) {
        c.failure = "search left the ball B(gamma lambda_M)";
        return c;
    }
    if (c.grad_norm > c.threshold) {
        c.failure = "no zero of grad G located inside the ball";
        return c;
    }
    try {
        c.degree = degree_nondegenerate(c.hessian);
    } catch (const DegenerateJacobian& e) {
        c.failure = e.what();
        return c;
    }
    if (opt.run_degree_ball) {
        const DegreeResult d = degree_ball(field_gradient_map(work, spec), ball, opt.degree);
        c.boundary_grad_min = d.boundary_min;
        c.zeros_found = static_cast<int>(d.zeros.size());
        if (!d.valid) {
            c.failure = "boundary gradient floor is not positive";
            return c;
        }
        if (d.degree != c.degree) {
            c.failure = "degree_ball disagrees with the Hessian sign";
            c.degree = d.degree;
            return c;
        }
        if (c.boundary_grad_min <= c.tail_bound) {
            c.failure = "boundary floor does not dominate the truncated-level budget";
            return c;
        }
    }
    c.certified = true;
    if (c.degree != -1) c.note = "degree is " + std::to_string(c.degree) + ", not -1";
    return c;
}

// L2 distance of two compactly supported radial fields.
inline double field_l2_distance(const ScalarField& f1, const ScalarField& f2, const QuadratureSpec& spec = {}) {
    if (f1.n != f2.n) throw std::invalid_argument("field_l2_distance: dimension mismatch");
    if (!f1.radial() || !f2.radial() || std::holds_alternative<SphereMomentField>(f1.kind) ||
        std::holds_alternative<SphereMomentField>(f2.kind))
        throw std::invalid_argument("field_l2_distance: needs compactly supported radial fields");
    std::vector<double> pts = f1.breakpoints();
    const auto b2 = f2.breakpoints();
    pts.insert(pts.end(), b2.begin(), b2.end());
    pts.push_back(0.0);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const int n = f1.n;
    auto g = [&](double r) {
        const double d = f1.radial_value(r) - f2.radial_value(r);
        return d * d * std::pow(r, n - 1);
    };
    // Tolerances are relative to the integral itself, so tiny differences stay resolved.
    const IntegralResult r = integrate_1d(g, pts, spec);
    return std::sqrt(sphere_area(n - 1) * std::max(0.0, r.value));
}

// C_n with |grad G(H1) - grad G(H2)| <= |c| C_n |H1 - H2|_{L2} lambda^{-n/2-1}, from Cauchy-Schwarz.
inline double gradient_l2_constant(int n) {
    auto g = [n](double th, double* o) {
        const double r = std::tan(th);
        const double q = 1.0 + r * r;
        const double a = std::pow(q, -n) - 2.0 * std::pow(q, -n - 1);
        const double v = (n * n * a * a + 4.0 * n * n * r * r * std::pow(q, -2 * n - 2)) * std::pow(r, n - 1) * q;
        o[0] = v;
        o[1] = std::abs(v);
    };
    QuadratureSpec s;
    s.abs_tol = 1e-14;
    s.rel_tol = 1e-13;
    const VecIntegral r = gk_adaptive(g, {0.0, 0.5 * std::numbers::pi}, 2, 1, s);
    return std::sqrt(sphere_area(n - 1) * r.value[0]);
}

inline double grad_diff_bound(int n, double l2_distance, double lambda) {
    return std::abs(constants(n).c_bar_minus1) * gradient_l2_constant(n) * l2_distance * std::pow(lambda, -0.5 * n - 1.0);
}

}  // namespace pscurv
