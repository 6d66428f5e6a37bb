#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "numeric.hpp"

namespace pscurv {

struct QuadratureSpec {
    double abs_tol = 1e-12;  // in units of the integrand's L1 magnitude
    double rel_tol = 1e-10;
    int max_subdivisions = 4000;
    int angular_order = 11;

    void validate() const {
        if (!(abs_tol > 0) || !(rel_tol > 0))
            throw std::invalid_argument("quadrature tolerances must be positive");
        if (max_subdivisions < 1) throw std::invalid_argument("max_subdivisions must be >= 1");
        if (angular_order < 3) throw std::invalid_argument("angular_order must be >= 3");
    }
    QuadratureSpec scaled(double factor) const {
        QuadratureSpec s = *this;
        s.abs_tol *= factor;
        s.rel_tol *= factor;
        return s;
    }
};

struct IntegralResult {
    double value = 0.0;
    double error_estimate = 0.0;
    long evaluations = 0;
};

class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Vector-valued result of one adaptive pass.
struct VecIntegral {
    std::vector<double> value;
    std::vector<double> error;
    long evaluations = 0;
};

namespace detail {

struct GK21 {
    double x[21];
    double wk[21];
    double wg[21];  // zero on Kronrod-only nodes
    GK21() {
        const auto& ka = boost::math::quadrature::gauss_kronrod<double, 21>::abscissa();
        const auto& kw = boost::math::quadrature::gauss_kronrod<double, 21>::weights();
        const auto& gw = boost::math::quadrature::gauss<double, 10>::weights();
        x[10] = 0.0;
        wk[10] = kw[0];
        wg[10] = 0.0;
        for (int i = 1; i <= 10; ++i) {
            x[10 - i] = -ka[i];
            x[10 + i] = ka[i];
            wk[10 - i] = wk[10 + i] = kw[i];
            const double g = (i % 2 == 1) ? gw[(i - 1) / 2] : 0.0;
            wg[10 - i] = wg[10 + i] = g;
        }
    }
};

inline const GK21& gk21() {
    static const GK21 rule;
    return rule;
}

}  // namespace detail

// Adaptive Gauss-Kronrod (G10/K21) on a union of intervals given by sorted
// points. `f(x, out)` fills K channels. Channel `scale_channel` must hold a
// non-negative magnitude; its integral sets the absolute tolerance floor for
// every channel. Bisection picks the segment with the worst error/tolerance
// ratio across channels.
template <class F>
VecIntegral gk_adaptive(F&& f, const std::vector<double>& points, int K, int scale_channel,
                        const QuadratureSpec& spec) {
    const auto& R = detail::gk21();
    struct Seg {
        double a, b;
        std::vector<double> val, err;
    };
    std::vector<double> buf(K);
    long evals = 0;
    auto eval_seg = [&](double a, double b) {
        Seg s{a, b, std::vector<double>(K, 0.0), std::vector<double>(K, 0.0)};
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        std::vector<double> gsum(K, 0.0);
        for (int i = 0; i < 21; ++i) {
            f(c + h * R.x[i], buf.data());
            for (int k = 0; k < K; ++k) {
                s.val[k] += R.wk[i] * buf[k];
                gsum[k] += R.wg[i] * buf[k];
            }
        }
        evals += 21;
        for (int k = 0; k < K; ++k) {
            s.val[k] *= h;
            s.err[k] = std::abs(s.val[k] - h * gsum[k]);
        }
        return s;
    };

    std::vector<Seg> segs;
    for (size_t i = 0; i + 1 < points.size(); ++i)
        if (points[i + 1] > points[i]) segs.push_back(eval_seg(points[i], points[i + 1]));

    VecIntegral out;
    out.value.assign(K, 0.0);
    out.error.assign(K, 0.0);
    if (segs.empty()) return out;

    auto totals = [&](std::vector<double>& val, std::vector<double>& err) {
        val.assign(K, 0.0);
        err.assign(K, 0.0);
        for (int k = 0; k < K; ++k) {
            KahanSum sv, se;
            for (const auto& s : segs) {
                sv += s.val[k];
                se += s.err[k];
            }
            val[k] = sv.value();
            err[k] = se.value();
        }
    };
    std::vector<double> val, err, tol(K);
    int subdivisions = 0;
    while (true) {
        totals(val, err);
        const double scale = std::abs(val[scale_channel]);
        bool done = true;
        for (int k = 0; k < K; ++k) {
            tol[k] = std::max({spec.abs_tol * scale, spec.rel_tol * std::abs(val[k]), 1e-300});
            // The magnitude only sets the floor; it may have kinks where H changes sign.
            if (k == scale_channel) tol[k] = std::max(tol[k], 1e-4 * scale);
            if (err[k] > tol[k]) done = false;
        }
        if (done) break;
        if (subdivisions >= spec.max_subdivisions)
            throw QuadratureError("adaptive quadrature: tolerance not met within max_subdivisions");
        size_t worst = 0;
        double worst_ratio = -1.0;
        for (size_t i = 0; i < segs.size(); ++i) {
            double r = 0.0;
            for (int k = 0; k < K; ++k) r = std::max(r, segs[i].err[k] / tol[k]);
            if (r > worst_ratio) {
                worst_ratio = r;
                worst = i;
            }
        }
        const double a = segs[worst].a, b = segs[worst].b, m = 0.5 * (a + b);
        if (!(m > a && m < b))
            throw QuadratureError("adaptive quadrature: interval collapsed below resolution");
        segs[worst] = eval_seg(a, m);
        segs.push_back(eval_seg(m, b));
        ++subdivisions;
    }
    out.value = val;
    out.error = err;
    out.evaluations = evals;
    return out;
}

// Scalar convenience wrapper.
template <class F>
IntegralResult integrate_1d(F&& f, std::vector<double> points, const QuadratureSpec& spec) {
    std::sort(points.begin(), points.end());
    auto g = [&](double x, double* out) {
        out[0] = f(x);
        out[1] = std::abs(out[0]);
    };
    const VecIntegral r = gk_adaptive(g, points, 2, 1, spec);
    return IntegralResult{r.value[0], r.error[0], r.evaluations};
}

// |S^{n-1}| * int_{r_lo}^{r_hi} profile(r) (lambda/(lambda^2+r^2))^power r^{n-1} dr
// through r = lambda tan(theta), which maps [0, inf) onto [0, pi/2).
// `breaks` lists radii where the profile is not smooth.
template <class P>
IntegralResult integrate_radial(int n, P&& profile, double lambda, int power, double r_lo, double r_hi,
                                const QuadratureSpec& spec, const std::vector<double>& breaks = {}) {
    if (n < 1 || lambda <= 0) throw std::invalid_argument("integrate_radial: bad n or lambda");
    if (2 * power <= n && !std::isfinite(r_hi))
        throw std::invalid_argument("integrate_radial: kernel power too small for an infinite range");
    const double th_lo = std::atan(r_lo / lambda);
    const double th_hi = std::isfinite(r_hi) ? std::atan(r_hi / lambda) : 0.5 * std::numbers::pi;
    std::vector<double> pts{th_lo, th_hi};
    for (double b : breaks) {
        const double t = std::atan(b / lambda);
        if (t > th_lo && t < th_hi) pts.push_back(t);
    }
    const double pre = sphere_area(n - 1) * std::pow(lambda, n - power);
    auto f = [&](double th) {
        const double s = std::sin(th), c = std::cos(th);
        return profile(lambda * std::tan(th)) * std::pow(s, n - 1) * std::pow(c, 2 * power - n - 1);
    };
    IntegralResult r = integrate_1d(f, pts, spec);
    r.value *= pre;
    r.error_estimate *= pre;
    return r;
}

// Gauss-Gegenbauer rule for the weight (1 - t^2)^a on [-1, 1] via Golub-Welsch.
inline void gegenbauer_rule(int N, double a, std::vector<double>& t, std::vector<double>& w) {
    const double mu = a + 0.5;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(N, N);
    for (int k = 1; k < N; ++k) {
        const double beta = k * (k + 2.0 * mu - 1.0) / (4.0 * (k + mu) * (k + mu - 1.0));
        J(k, k - 1) = J(k - 1, k) = std::sqrt(beta);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    const double mu0 = std::sqrt(std::numbers::pi) * std::tgamma(a + 1.0) / std::tgamma(a + 1.5);
    t.resize(N);
    w.resize(N);
    for (int i = 0; i < N; ++i) {
        t[i] = es.eigenvalues()(i);
        const double v = es.eigenvectors()(0, i);
        w[i] = mu0 * v * v;
    }
}

// Product rule on S^m (in R^{m+1}) exact for polynomials of degree <= order.
struct SphereRule {
    int dim = 0;  // ambient dimension m+1
    std::vector<double> nodes;  // row-major, dim entries per node
    std::vector<double> weights;
    size_t size() const { return weights.size(); }
    const double* node(size_t i) const { return nodes.data() + i * dim; }
};

inline SphereRule build_sphere_rule(int m, int order) {
    if (m < 1) throw std::invalid_argument("sphere rule needs m >= 1");
    SphereRule rule;
    rule.dim = m + 1;
    if (m == 1) {
        const int M = order + 1;
        for (int k = 0; k < M; ++k) {
            const double th = 2.0 * std::numbers::pi * k / M;
            rule.nodes.push_back(std::cos(th));
            rule.nodes.push_back(std::sin(th));
            rule.weights.push_back(2.0 * std::numbers::pi / M);
        }
        return rule;
    }
    const SphereRule sub = build_sphere_rule(m - 1, order);
    std::vector<double> t, w;
    gegenbauer_rule(order / 2 + 1, 0.5 * (m - 2), t, w);
    for (size_t i = 0; i < t.size(); ++i) {
        const double st = std::sqrt(std::max(0.0, 1.0 - t[i] * t[i]));
        for (size_t j = 0; j < sub.size(); ++j) {
            rule.nodes.push_back(t[i]);
            for (int d = 0; d < sub.dim; ++d) rule.nodes.push_back(st * sub.node(j)[d]);
            rule.weights.push_back(w[i] * sub.weights[j]);
        }
    }
    return rule;
}

// Cached rules; building one for S^5 at order 11 costs ~15k nodes.
inline const SphereRule& sphere_rule(int m, int order) {
    static std::mutex mtx;
    static std::map<std::pair<int, int>, SphereRule> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto key = std::make_pair(m, order);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, build_sphere_rule(m, order)).first;
    return it->second;
}

}  // namespace pscurv
