#include "support.hpp"

using namespace pscurv;
using Catch::Approx;
using testing::unit;

namespace {

const int n6 = 6;

// Smoothed annulus with R_b R_c = 1, critical at lambda = 1 by inversion symmetry.
ScalarField symmetric_annulus(int n) { return annulus_field(n, Annulus{std::sqrt(1.09), 0.3}, 1.0, 0.05); }

double rel(const Vec& a, const Vec& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("G of trivial fields", "[functional]") {
    const BubbleParams p(0.7, testing::random_vec(n6, 0.3));
    REQUIRE(eval_G(zero_field(n6), p) == 0.0);
    const Mat Q = 0.25 * Mat::Identity(n6 + 1, n6 + 1);  // x.Qx = 1/4 on the sphere
    const ScalarField c = sphere_moment_field(n6, 0.5, Vec::Zero(n6 + 1), Q);
    const double want = constants(n6).c_bar_minus1 * 0.75 * constants(n6).bubble_mass;
    REQUIRE(eval_G(c, p) == Approx(want).epsilon(1e-10));
    REQUIRE(grad_G(c, p).norm() <= 1e-10 * std::abs(want));
}

TEST_CASE("annulus G matches its closed form", "[functional]") {
    for (int n : {3, 6, 8}) {
        const Annulus ann{1.0, 0.3};
        for (double lam : {0.2, 0.954, 3.0}) {
            const double g = eval_G(annulus_field(n, ann, 2.0), BubbleParams::centered(n, lam));
            REQUIRE(g == Approx(eval_G_annulus_closed(n, ann, lam, 2.0)).epsilon(1e-10));
        }
    }
    REQUIRE(lambda_M(Annulus{1.0, 0.3}) == Approx(std::sqrt(0.91)).epsilon(1e-15));
    REQUIRE_THROWS(lambda_M(Annulus{0.3, 1.0}));
}

TEST_CASE("annulus critical point at the geometric mean", "[functional]") {
    const Annulus ann{1.0, 0.3};
    const double lm = lambda_M(ann);
    const ScalarField f = annulus_field(n6, ann);
    const GradHess gh = hess_G(f, BubbleParams::centered(n6, lm));
    REQUIRE(gh.grad.norm() <= 1e-9 * n6 * std::abs(constants(n6).c_bar_minus1) / lm);
    REQUIRE(gh.grad.tail(n6).norm() == 0.0);
    const Mat off = gh.hess - Mat(gh.hess.diagonal().asDiagonal());
    REQUIRE(off.cwiseAbs().maxCoeff() <= 1e-10 * gh.hess.norm());
    REQUIRE(std::abs(gh.hess.trace()) <= 1e-8 * gh.hess.norm());
    // c_bar_minus1 < 0 flips the sine-integral maximum into a minimum of G in lambda.
    REQUIRE(gh.hess(0, 0) > 0);
    for (int j = 1; j <= n6; ++j) REQUIRE(gh.hess(j, j) < 0);
    auto I = [&](double l) { return annulus_kernel_mass(n6, ann, l); };
    const double h = 1e-4 * lm;
    REQUIRE((I(lm + h) - 2 * I(lm) + I(lm - h)) / (h * h) < 0);
}

TEST_CASE("lambda derivative of the sine integral", "[functional]") {
    const Annulus ann{1.0, 0.3};
    const double lm = lambda_M(ann);
    REQUIRE(std::abs(dlambda_radial(n6, ann, lm)) <= 1e-14);
    REQUIRE(dlambda_radial(n6, ann, 0.5 * lm) > 0);
    REQUIRE(dlambda_radial(n6, ann, 2.0 * lm) < 0);
    const double pre = sphere_area(n6 - 1) / std::pow(2.0, n6);
    for (double l : {0.3, 0.8, 1.7}) {
        const double h = 1e-6 * l;
        const double fd = (annulus_kernel_mass(n6, ann, l + h) - annulus_kernel_mass(n6, ann, l - h)) / (2 * h);
        REQUIRE(pre * dlambda_radial(n6, ann, l) == Approx(fd).epsilon(1e-8));
    }
    int changes = 0;
    double prev = dlambda_radial(n6, ann, 1e-3);
    for (int i = 2; i <= 1000; ++i) {
        const double v = dlambda_radial(n6, ann, 10.0 * i / 1000);
        if ((v > 0) != (prev > 0)) ++changes;
        prev = v;
    }
    REQUIRE(changes == 1);
}

TEST_CASE("gradient and Hessian agree with finite differences", "[functional]") {
    LadderConfig lc;
    lc.depth = 2;
    Vec b = Vec::Zero(n6 + 1);
    b(0) = 0.3;
    b(n6) = -0.5;
    Mat Q = Mat::Zero(n6 + 1, n6 + 1);
    Q(0, 1) = Q(1, 0) = 0.2;
    Q(3, 3) = 0.4;
    struct Case {
        ScalarField f;
        double lam_lo, lam_hi;
    };
    const std::vector<Case> cases{{annulus_field(n6, Annulus{1.0, 0.3}), 0.5, 2.0},
                                  {symmetric_annulus(n6), 0.5, 2.0},
                                  {build_ladder(n6, lc), 0.7 * lc.lambda_M(1), 1.3 * lc.lambda_M(1)},
                                  {sphere_moment_field(n6, 0.2, b, Q), 0.5, 2.0},
                                  {radial_table_field(n6, {0.5, 0.8, 1.2}, {1.0, -0.5}), 0.5, 2.0}};
    QuadratureSpec spec;
    spec.abs_tol = 1e-10;
    spec.rel_tol = 1e-8;
    for (const auto& c : cases) {
        for (int k = 0; k < 2; ++k) {
            const double lam = testing::uniform(c.lam_lo, c.lam_hi);
            const BubbleParams p(lam, testing::random_vec(n6, 0.2 * lam));
            const GradHess gh = hess_G(c.f, p, spec);
            auto G = [&](const Vec& x) { return eval_G(c.f, BubbleParams::unpack(x), spec); };
            REQUIRE(rel(testing::fd_gradient(G, p.packed(), 1e-4 * lam), gh.grad) <= 1e-5);
            Mat fh(n6 + 1, n6 + 1);
            for (int i = 0; i <= n6; ++i) {
                Vec a = p.packed(), m = p.packed();
                a(i) += 1e-4 * lam;
                m(i) -= 1e-4 * lam;
                fh.col(i) = (grad_G(c.f, BubbleParams::unpack(a), spec) - grad_G(c.f, BubbleParams::unpack(m), spec)) /
                            (2e-4 * lam);
            }
            REQUIRE((fh - gh.hess).norm() <= 1e-4 * gh.hess.norm());
            REQUIRE((gh.hess - gh.hess.transpose()).norm() <= 1e-14 * gh.hess.norm());
        }
    }
}

TEST_CASE("G is invariant under joint rescaling", "[functional]") {
    const Annulus ann{1.0, 0.25};
    const Vec xi = testing::random_vec(n6, 0.1);
    for (double s : {1e-3, 0.5, 40.0}) {
        const double g0 = eval_G(annulus_field(n6, ann), BubbleParams(0.8, xi));
        const double g1 = eval_G(annulus_field(n6, ann.scaled(s)), BubbleParams(0.8 * s, s * xi));
        REQUIRE(g1 == Approx(g0).epsilon(1e-9));
    }
}

TEST_CASE("gradient as first sphere moments", "[functional]") {
    Vec b = Vec::Zero(n6 + 1);
    b(2) = 0.4;
    b(n6) = 0.3;
    Mat Q = Mat::Zero(n6 + 1, n6 + 1);
    Q(0, 4) = Q(4, 0) = -0.3;
    const ScalarField f = sphere_moment_field(n6, 0.1, b, Q);
    for (int k = 0; k < 3; ++k) {
        const BubbleParams p(testing::uniform(0.6, 1.6), testing::random_vec(n6, 0.3));
        REQUIRE(rel(sphere_moments_grad(f, p), grad_G(f, p)) <= 1e-7);
    }
    const ScalarField ann = annulus_field(n6, Annulus{1.0, 0.3});
    const BubbleParams p = BubbleParams::centered(n6, 0.8);
    REQUIRE(sphere_moments_grad(ann, p)(0) == Approx(grad_G(ann, p)(0)).epsilon(1e-9));
    // Even fields have vanishing first moments at (1, 0).
    Mat Qe = Mat::Zero(n6 + 1, n6 + 1);
    Qe(1, 1) = 1.0;
    Qe(n6, n6) = -0.5;
    Qe(0, 3) = Qe(3, 0) = 0.2;
    const ScalarField even = sphere_moment_field(n6, 0.3, Vec::Zero(n6 + 1), Qe);
    REQUIRE(sphere_moments_grad(even, BubbleParams::centered(n6, 1.0)).norm() <= 1e-12);
    REQUIRE(grad_G(even, BubbleParams::centered(n6, 1.0)).norm() <= 1e-12);
}

TEST_CASE("critical-point forms of the Hessian", "[functional]") {
    const ScalarField f = symmetric_annulus(n6);
    const BubbleParams p = BubbleParams::centered(n6, 1.0);
    const KernelMoments m = kernel_moments(f, p);
    const GradHess gh = grad_hess_from_moments(n6, 1.0, m);
    REQUIRE(gh.grad.norm() <= 1e-12);
    const CriticalForms c = critical_forms(n6, 1.0, m, gh);
    REQUIRE(c.max_deviation <= 1e-10 * gh.hess.norm());
    const SphereHessianForms s = sphere_hessian_forms(f);
    REQUIRE(s.d2_lambda == Approx(gh.hess(0, 0)).epsilon(1e-8));
    REQUIRE((s.d2_xi_xi - gh.hess.block(1, 1, n6, n6)).norm() <= 1e-8 * gh.hess.norm());
    REQUIRE(s.d2_lambda_xi.norm() <= 1e-10 * gh.hess.norm());
    REQUIRE(std::abs(s.d2_lambda + s.d2_xi_xi.trace()) <= 1e-8 * gh.hess.norm());
}

TEST_CASE("symmetry and stability certificate at the unit bubble", "[functional]") {
    const SymmetryReport ok = symmetry_stability_check(symmetric_annulus(n6));
    REQUIRE(ok.reflection_symmetric);
    REQUIRE(ok.inversion_symmetric);
    REQUIRE(ok.critical_at_unit);
    REQUIRE(ok.xi_strict);
    REQUIRE(ok.lambda_strict);
    REQUIRE(ok.certified);
    const SymmetryReport off = symmetry_stability_check(annulus_field(n6, Annulus{1.0, 0.3}));
    REQUIRE(off.reflection_symmetric);
    REQUIRE_FALSE(off.inversion_symmetric);
    REQUIRE_FALSE(off.critical_at_unit);
    REQUIRE_FALSE(off.certified);
    Vec b = Vec::Zero(n6 + 1);
    b(0) = 1.0;
    const SymmetryReport odd = symmetry_stability_check(sphere_moment_field(n6, 0.0, b, Mat::Zero(n6 + 1, n6 + 1)));
    REQUIRE_FALSE(odd.reflection_symmetric);
    REQUIRE_FALSE(odd.certified);
}
