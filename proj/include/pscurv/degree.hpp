#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/erf.hpp>

#include "bubble.hpp"

namespace pscurv {

class DegenerateJacobian : public std::runtime_error {
public:
    DegenerateJacobian(const std::string& what, double cond) : std::runtime_error(what), condition(cond) {}
    double condition;
};

inline double condition_number(const Mat& J) {
    Eigen::JacobiSVD<Mat> svd(J);
    const auto& s = svd.singularValues();
    if (s(s.size() - 1) == 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / s(s.size() - 1);
}

// Sign of det J; rejects matrices whose condition number exceeds cond_max.
inline int jacobian_sign(const Mat& J, double cond_max = 1e12) {
    const double cond = condition_number(J);
    if (!(cond <= cond_max)) {
        std::ostringstream os;
        os << "near-singular Jacobian, condition number " << cond;
        throw DegenerateJacobian(os.str(), cond);
    }
    // Normalized first: at deep ladder levels the raw determinant underflows.
    const double d = Eigen::FullPivLU<Mat>(J / J.cwiseAbs().maxCoeff()).determinant();
    return d > 0 ? 1 : -1;
}

inline int degree_nondegenerate(const Mat& hessian, double cond_max = 1e12) {
    return jacobian_sign(hessian, cond_max);
}

struct BallDomain {
    Vec center;
    double radius = 1.0;
    int dim() const { return static_cast<int>(center.size()); }
    bool contains(const Vec& x, double slack = 0.0) const { return (x - center).norm() < radius * (1.0 + slack); }
};

struct MapEval {
    Vec f;
    Mat J;  // empty when not requested
};

// x -> (F(x), optionally DF(x)).
using VectorMap = std::function<MapEval(const Vec&, bool)>;

// Wraps a plain map, with a central-difference Jacobian of step h.
inline VectorMap with_fd_jacobian(std::function<Vec(const Vec&)> F, double h) {
    return [F = std::move(F), h](const Vec& x, bool need_jac) {
        MapEval e;
        e.f = F(x);
        if (need_jac) {
            const int d = static_cast<int>(x.size());
            e.J.resize(e.f.size(), d);
            for (int j = 0; j < d; ++j) {
                Vec xp = x, xm = x;
                xp(j) += h;
                xm(j) -= h;
                e.J.col(j) = (F(xp) - F(xm)) / (2.0 * h);
            }
        }
        return e;
    };
}

struct DegreeOptions {
    int boundary_samples = 0;  // 0 means 64 * dim
    int seed_levels = 1;       // axis seeds at k r/(levels+1), k = 1..levels
    int interior_seeds = 8;    // quasi-random interior seeds
    int newton_iters = 60;
    double residual_tol = 1e-9;  // zero accepted when |F| <= residual_tol * boundary scale
    double cond_max = 1e12;
    bool check_refinement = false;  // repeat with doubled seed density
    double lipschitz_slack = 1e-3;  // slack = L * lipschitz_slack * radius on the refined minimum
};

struct LocatedZero {
    Vec point;
    int sign = 0;
    double residual = 0;
};

struct DegreeResult {
    int degree = 0;
    std::vector<LocatedZero> zeros;
    double boundary_min = 0;          // certified lower bound on |F| over the sphere
    double boundary_sampled_min = 0;  // raw sampled minimum after refinement
    Vec boundary_argmin;
    bool refinement_agrees = true;
    bool valid = false;  // boundary_min > 0
    std::string note;
};

namespace detail {

inline double radical_inverse(unsigned long i, unsigned base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= base;
        r += f * (i % base);
        i /= base;
    }
    return r;
}

inline unsigned nth_prime(int k) {
    static const unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
    return primes[k % 20];
}

// Deterministic, roughly uniform points on the unit sphere of R^d.
inline std::vector<Vec> sphere_points(int d, int count) {
    std::vector<Vec> pts;
    for (int j = 0; j < d; ++j) {
        Vec e = Vec::Zero(d);
        e(j) = 1.0;
        pts.push_back(e);
        pts.push_back(-e);
    }
    for (int i = 1; static_cast<int>(pts.size()) < count; ++i) {
        Vec v(d);
        for (int j = 0; j < d; ++j) {
            const double u = radical_inverse(static_cast<unsigned long>(i), nth_prime(j));
            v(j) = std::sqrt(2.0) * boost::math::erf_inv(2.0 * u - 1.0);
        }
        const double nv = v.norm();
        if (nv > 1e-12) pts.push_back(v / nv);
    }
    return pts;
}

inline std::vector<Vec> interior_seeds(const BallDomain& dom, int levels, int extra) {
    const int d = dom.dim();
    std::vector<Vec> seeds{dom.center};
    for (int k = 1; k <= levels; ++k) {
        const double s = k * dom.radius / (levels + 1.0);
        for (int j = 0; j < d; ++j) {
            Vec e = Vec::Zero(d);
            e(j) = s;
            seeds.push_back(dom.center + e);
            seeds.push_back(dom.center - e);
        }
    }
    for (int i = 1; i <= extra; ++i) {
        Vec v(d);
        for (int j = 0; j < d; ++j) v(j) = 2.0 * radical_inverse(static_cast<unsigned long>(i), nth_prime(j)) - 1.0;
        if (v.norm() > 1.0) v /= v.norm();
        seeds.push_back(dom.center + 0.9 * dom.radius * v);
    }
    return seeds;
}

// Damped Newton; returns false if the iterate leaves the ball or stalls.
inline bool newton_zero(const VectorMap& F, const BallDomain& dom, Vec x, int iters, double ftol, Vec& out,
                        double& res) {
    MapEval e = F(x, true);
    double fn = e.f.norm();
    for (int it = 0; it < iters; ++it) {
        if (fn <= ftol) break;
        Vec dx = e.J.colPivHouseholderQr().solve(-e.f);
        if (!dx.allFinite()) return false;
        const double cap = 0.5 * dom.radius;
        if (dx.norm() > cap) dx *= cap / dx.norm();
        double t = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 30; ++ls) {
            const Vec xn = x + t * dx;
            MapEval en = F(xn, true);
            const double fnn = en.f.norm();
            if (fnn < fn || fnn <= ftol) {
                x = xn;
                e = std::move(en);
                fn = fnn;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if (!moved) break;
        if (!dom.contains(x, 0.5)) return false;
        if (t * dx.norm() < 1e-15 * (x.norm() + dom.radius)) break;
    }
    out = x;
    res = fn;
    return fn <= ftol;
}

}  // namespace detail

// Minimum of |F| on the boundary sphere: sampling, then projected Gauss-Newton
// from the four best samples, minus a Lipschitz slack.
inline void boundary_minimum(const VectorMap& F, const BallDomain& dom, const DegreeOptions& opt, double& certified,
                             double& sampled, Vec& argmin) {
    const int d = dom.dim();
    const int count = opt.boundary_samples > 0 ? opt.boundary_samples : 64 * d;
    const std::vector<Vec> dirs = detail::sphere_points(d, count);
    std::vector<std::pair<double, int>> vals;
    double L = 0.0;
    for (int i = 0; i < static_cast<int>(dirs.size()); ++i) {
        const MapEval e = F(dom.center + dom.radius * dirs[i], i < 2 * d);
        vals.push_back({e.f.norm(), i});
        if (e.J.size()) L = std::max(L, e.J.norm());
    }
    std::sort(vals.begin(), vals.end());
    sampled = vals.front().first;
    argmin = dom.center + dom.radius * dirs[vals.front().second];
    for (int b = 0; b < std::min<int>(4, static_cast<int>(vals.size())); ++b) {
        Vec u = dirs[vals[b].second];
        double best = vals[b].first;
        for (int it = 0; it < 25; ++it) {
            const MapEval e = F(dom.center + dom.radius * u, true);
            L = std::max(L, e.J.norm());
            // minimize |F(c + r u)|^2 over the tangent space
            const Mat P = Mat::Identity(d, d) - u * u.transpose();
            const Mat A = dom.radius * e.J * P;
            Vec step = A.colPivHouseholderQr().solve(-e.f);
            step = P * step;
            if (step.norm() > 0.25) step *= 0.25 / step.norm();
            bool improved = false;
            double t = 1.0;
            for (int ls = 0; ls < 12; ++ls) {
                Vec un = (u + t * step).normalized();
                const double v = F(dom.center + dom.radius * un, false).f.norm();
                if (v < best) {
                    best = v;
                    u = un;
                    improved = true;
                    break;
                }
                t *= 0.5;
            }
            if (!improved || t * step.norm() < 1e-10) break;
        }
        if (best < sampled) {
            sampled = best;
            argmin = dom.center + dom.radius * u;
        }
    }
    certified = sampled - L * opt.lipschitz_slack * dom.radius;
}

inline DegreeResult degree_ball(const VectorMap& F, const BallDomain& dom, const DegreeOptions& opt = {}) {
    if (!(dom.radius > 0)) throw std::invalid_argument("degree_ball: radius must be positive");
    DegreeResult res;
    boundary_minimum(F, dom, opt, res.boundary_min, res.boundary_sampled_min, res.boundary_argmin);
    res.valid = res.boundary_min > 0;
    if (!res.valid) {
        res.note = "map is not bounded away from zero on the boundary; degree undefined";
        return res;
    }
    const double ftol = opt.residual_tol * res.boundary_sampled_min;
    const double dedup = 1e-6 * dom.radius;

    auto run = [&](int levels, int extra) {
        std::vector<LocatedZero> zeros;
        for (const Vec& s : detail::interior_seeds(dom, levels, extra)) {
            Vec z;
            double r;
            if (!detail::newton_zero(F, dom, s, opt.newton_iters, ftol, z, r)) continue;
            if (!dom.contains(z)) continue;
            bool dup = false;
            for (const auto& q : zeros)
                if ((q.point - z).norm() < dedup) dup = true;
            if (dup) continue;
            const MapEval e = F(z, true);
            zeros.push_back({z, jacobian_sign(e.J, opt.cond_max), r});
        }
        std::sort(zeros.begin(), zeros.end(), [](const LocatedZero& a, const LocatedZero& b) {
            return std::lexicographical_compare(a.point.data(), a.point.data() + a.point.size(), b.point.data(),
                                                b.point.data() + b.point.size());
        });
        return zeros;
    };
    res.zeros = run(opt.seed_levels, opt.interior_seeds);
    for (const auto& z : res.zeros) res.degree += z.sign;
    if (opt.check_refinement) {
        const auto fine = run(2 * opt.seed_levels, 2 * opt.interior_seeds);
        int dfine = 0;
        for (const auto& z : fine) dfine += z.sign;
        res.refinement_agrees = dfine == res.degree && fine.size() == res.zeros.size();
        if (!res.refinement_agrees) res.note = "seed refinement found a different zero set";
    }
    return res;
}

struct StabilityReport {
    double delta = 0;     // boundary minimum of the first map
    double sup_diff = 0;  // sup of |F1 - F2| on the boundary
    bool hypothesis = false;
    int degree1 = 0, degree2 = 0;
    bool equal = false;
    bool conclusive = false;
};

// Degree comparison under |F1 - F2| < min |F1| on the boundary.
inline StabilityReport degree_stability(const VectorMap& F1, const VectorMap& F2, const BallDomain& dom,
                                        const DegreeOptions& opt = {}) {
    StabilityReport rep;
    const DegreeResult d1 = degree_ball(F1, dom, opt);
    rep.delta = d1.boundary_min;
    rep.degree1 = d1.degree;
    const int d = dom.dim();
    const int count = opt.boundary_samples > 0 ? opt.boundary_samples : 64 * d;
    const std::vector<Vec> dirs = detail::sphere_points(d, count);
    std::vector<std::pair<double, int>> vals;
    for (int i = 0; i < static_cast<int>(dirs.size()); ++i) {
        const Vec x = dom.center + dom.radius * dirs[i];
        vals.push_back({(F1(x, false).f - F2(x, false).f).norm(), i});
    }
    std::sort(vals.begin(), vals.end(), std::greater<>());
    rep.sup_diff = vals.front().first;
    // local ascent of |F1 - F2| from the four largest samples
    for (int b = 0; b < std::min<int>(4, static_cast<int>(vals.size())); ++b) {
        Vec u = dirs[vals[b].second];
        double best = vals[b].first;
        for (int it = 0; it < 15; ++it) {
            const Vec x = dom.center + dom.radius * u;
            const MapEval e1 = F1(x, true), e2 = F2(x, true);
            const Vec g = dom.radius * (e1.J - e2.J).transpose() * (e1.f - e2.f);
            const Vec tg = g - u.dot(g) * u;
            if (tg.norm() < 1e-300) break;
            double t = 0.25;
            bool improved = false;
            for (int ls = 0; ls < 10; ++ls) {
                const Vec un = (u + t * tg.normalized()).normalized();
                const Vec xn = dom.center + dom.radius * un;
                const double v = (F1(xn, false).f - F2(xn, false).f).norm();
                if (v > best) {
                    best = v;
                    u = un;
                    improved = true;
                    break;
                }
                t *= 0.5;
            }
            if (!improved) break;
        }
        rep.sup_diff = std::max(rep.sup_diff, best);
    }
    rep.hypothesis = d1.valid && rep.sup_diff < rep.delta;
    if (rep.hypothesis) {
        const DegreeResult d2 = degree_ball(F2, dom, opt);
        rep.degree2 = d2.degree;
        rep.equal = rep.degree1 == rep.degree2;
        rep.conclusive = true;
    }
    return rep;
}

// grad G as a map on (lambda, xi), Jacobian from the analytic Hessian.
template <class GH>
VectorMap gradient_map(GH&& grad_hess) {
    return [gh = std::forward<GH>(grad_hess)](const Vec& x, bool need_jac) {
        auto r = gh(x);
        MapEval e;
        e.f = r.grad;
        if (need_jac) e.J = r.hess;
        return e;
    };
}

}  // namespace pscurv
