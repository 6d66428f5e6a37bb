// pscurv: reports on the reduced functional, its critical points and the balance
// identities for a field given in a JSON spec file.
//
// Exit codes: 0 all checks pass, 1 a check failed, 2 usage or spec error.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <limits>
#include <random>

#include <CLI11.hpp>

#include "field_spec.hpp"

using namespace pscurv;
using namespace pscurv::cli;

namespace {

const char* kVersion = "0.1.0";

struct Options {
    std::optional<int> n;
    std::string spec;
    int level = 0;  // 0: all levels
    double gamma = 0.05;
    double tol_scale = 1.0;
    std::string out;
    std::string format = "json";
    bool timing = false;
    bool degree_ball = true;
    double lambda = 0;
    std::vector<double> xi;
    std::string suite;
    std::string what;
    LadderConfig ladder;
    bool tau_set = false;
};

json constants_json(int n) {
    const Constants& k = constants(n);
    return {{"n", n},
            {"c_tilde_n", k.c_tilde_n},
            {"c_bar_minus1", k.c_bar_minus1},
            {"c_bar_4", k.c_bar_4},
            {"bubble_mass", k.bubble_mass},
            {"phi0_norm", k.phi0_norm},
            {"phij_norm", k.phij_norm}};
}

json vec_json(const Vec& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

json mat_json(const Mat& m) {
    json a = json::array();
    for (int i = 0; i < m.rows(); ++i) a.push_back(vec_json(m.row(i).transpose()));
    return a;
}

class Report {
public:
    Report(std::string command, const FieldSpec* s) {
        root_["tool"] = "pscurv";
        root_["version"] = kVersion;
        root_["command"] = std::move(command);
        if (s) {
            root_["spec"] = s->source;
            root_["constants"] = constants_json(s->n);
        }
        root_["checks"] = json::array();
    }
    void check(const std::string& name, bool pass, json values = json::object()) {
        values["name"] = name;
        values["pass"] = pass;
        root_["checks"].push_back(values);
        text_.push_back(std::string(pass ? "PASS " : "FAIL ") + name + summary(values));
        all_pass_ = all_pass_ && pass;
    }
    void info(const std::string& key, json v) {
        root_[key] = v;
        text_.push_back(key + ": " + v.dump());
    }
    void certificate(json c) {
        root_["certificates"].push_back(c);
        text_.push_back("certificate " + c.dump());
    }
    bool pass() const { return all_pass_; }
    std::string render(const std::string& format, std::optional<double> seconds) {
        root_["pass"] = all_pass_;
        if (seconds) root_["timing_s"] = *seconds;
        if (format == "json") return root_.dump(2) + "\n";
        std::string s = "pscurv " + std::string(kVersion) + ": " + root_["command"].get<std::string>() + "\n";
        if (root_.contains("constants")) s += "constants " + root_["constants"].dump() + "\n";
        for (const auto& l : text_) s += l + "\n";
        s += all_pass_ ? "result: pass\n" : "result: FAIL\n";
        if (seconds) s += "time: " + std::to_string(*seconds) + " s\n";
        return s;
    }

private:
    static std::string summary(const json& v) {
        std::string s;
        for (const auto& [k, x] : v.items()) {
            if (k == "name" || k == "pass" || x.is_array() || x.is_object()) continue;
            s += "  " + k + "=" + x.dump();
        }
        return s;
    }
    json root_;
    std::vector<std::string> text_;
    bool all_pass_ = true;
};

// Centre scale for reports: lambda_M of the annulus or of a ladder level, else 1.
double natural_lambda(const ScalarField& f, int level) {
    if (const auto* a = std::get_if<AnnulusField>(&f.kind)) return lambda_M(a->ann);
    if (const auto* l = std::get_if<LadderField>(&f.kind)) return l->cfg.lambda_M(std::max(level, 1));
    return 1.0;
}

std::vector<int> levels_of(const ScalarField& f, int level) {
    const auto* l = std::get_if<LadderField>(&f.kind);
    if (!l) return {0};
    if (level > 0) return {level};
    std::vector<int> out;
    for (int m = 1; m <= std::max(1, l->cfg.depth - 1); ++m) out.push_back(m);
    return out;
}

json certificate_json(const CriticalCertificate& c, int level, double lm, int n) {
    return {{"level", level},
            {"lambda", c.point.lambda},
            {"lambda_M", lm},
            {"lambda_over_lambda_M", c.point.lambda / lm},
            {"xi_norm", c.point.xi.norm()},
            {"grad_norm", c.grad_norm},
            {"threshold", c.threshold},
            {"d2G_dlambda2", c.hessian.size() ? c.hessian(0, 0) : 0.0},
            {"d2G_dxi2", c.hessian.size() ? c.hessian(1, 1) : 0.0},
            {"trace_ratio", c.trace_ratio},
            {"degree", c.degree},
            {"parity_sign", n % 2 ? -1 : 1},
            {"ball_radius", c.ball_radius},
            {"boundary_grad_min", c.boundary_grad_min},
            {"tail_bound", c.tail_bound},
            {"zeros_found", c.zeros_found},
            {"certified", c.certified},
            {"failure", c.failure},
            {"note", c.note}};
}

CriticalCertificate certify(const FieldSpec& s, int level, const Options& o, double& lm) {
    const ScalarField& f = s.field;
    if (const auto* a = std::get_if<AnnulusField>(&f.kind); a && a->sigma == 0.0) {
        lm = lambda_M(a->ann);
        return certify_annulus_critical(s.n, a->ann, s.quad, o.gamma, o.degree_ball);
    }
    StableSearchOptions so;
    so.gamma = o.gamma;
    so.run_degree_ball = o.degree_ball;
    lm = natural_lambda(f, level);
    return find_stable_critical(f, level, s.quad, so);
}

void require_critical_kind(const ScalarField& f) {
    if (!std::holds_alternative<AnnulusField>(f.kind) && !std::holds_alternative<LadderField>(f.kind))
        throw std::invalid_argument("critical-point searches need an annulus or ladder field");
}

void cmd_eval(const FieldSpec& s, const Options& o, Report& r) {
    const int n = s.n;
    const double lam = o.lambda > 0 ? o.lambda : natural_lambda(s.field, o.level);
    Vec xi = Vec::Zero(n);
    if (!o.xi.empty()) {
        if (static_cast<int>(o.xi.size()) != n) throw std::invalid_argument("--xi needs n components");
        for (int i = 0; i < n; ++i) xi(i) = o.xi[i];
    }
    const BubbleParams p(lam, xi);
    const GradHess gh = hess_G(s.field, p, s.quad);
    const double scale = gradient_scale(n, std::max(s.field.sup_bound(), 1e-300), lam);
    const bool critical = gh.grad.norm() <= 1e-8 * o.tol_scale * scale;
    r.info("point", {{"lambda", lam}, {"xi", vec_json(xi)}});
    r.info("G", gh.value);
    r.info("grad", vec_json(gh.grad));
    r.info("hessian", mat_json(gh.hess));
    r.info("grad_norm", gh.grad.norm());
    r.info("critical", critical);
    if (critical) r.info("highlight", "grad ~ 0 at this point");
    const bool finite = std::isfinite(gh.value) && gh.grad.allFinite() && gh.hess.allFinite();
    r.check("finite", finite);
    r.check("hessian_symmetric", (gh.hess - gh.hess.transpose()).norm() <= 1e-12 * gh.hess.norm());
}

void cmd_critical(const FieldSpec& s, const Options& o, Report& r) {
    require_critical_kind(s.field);
    double prev = 0;
    for (int m : levels_of(s.field, o.level)) {
        double lm;
        const CriticalCertificate c = certify(s, m, o, lm);
        r.certificate(certificate_json(c, m, lm, s.n));
        r.check("certified_level_" + std::to_string(m), c.certified, {{"lambda", c.point.lambda}, {"degree", c.degree}});
        if (prev > 0) r.info("lambda_ratio_" + std::to_string(m), prev / c.point.lambda);
        prev = c.point.lambda;
    }
}

void suite_pde(const FieldSpec& s, const Options& o, Report& r) {
    std::mt19937_64 g(11);
    std::uniform_real_distribution<double> U(-1, 1);
    double worst = 0;
    for (int k = 0; k < 100; ++k) {
        Vec xi(s.n), y(s.n);
        for (int i = 0; i < s.n; ++i) {
            xi(i) = U(g);
            y(i) = 3 * U(g);
        }
        const BubbleParams p(std::exp(1.5 * U(g)), xi);
        worst = std::max(worst, std::abs(pde_residual(p, y)) / std::max(1.0, std::abs(bubble_laplacian(p, y))));
    }
    r.check("bubble_pde_residual", worst <= 1e-12 * o.tol_scale, {{"max_residual", worst}, {"points", 100}});
}

void suite_gradcheck(const FieldSpec& s, const Options& o, Report& r) {
    const int n = s.n;
    const double lc = natural_lambda(s.field, o.level);
    std::mt19937_64 g(5);
    std::uniform_real_distribution<double> U(-1, 1);
    json rows = json::array();
    double wg = 0, wh = 0;
    for (int k = 0; k < 5; ++k) {
        const double lam = lc * (1.0 + 0.3 * U(g));
        Vec xi(n);
        for (int i = 0; i < n; ++i) xi(i) = 0.2 * lam * U(g);
        const BubbleParams p(lam, xi);
        const GradHess gh = hess_G(s.field, p, s.quad);
        const double h = 1e-4 * lam;
        Vec fg(n + 1);
        Mat fh(n + 1, n + 1);
        for (int i = 0; i <= n; ++i) {
            Vec a = p.packed(), b = p.packed();
            a(i) += h;
            b(i) -= h;
            fg(i) = (eval_G(s.field, BubbleParams::unpack(a), s.quad) - eval_G(s.field, BubbleParams::unpack(b), s.quad)) /
                    (2 * h);
            fh.col(i) = (grad_G(s.field, BubbleParams::unpack(a), s.quad) - grad_G(s.field, BubbleParams::unpack(b), s.quad)) /
                        (2 * h);
        }
        const double eg = (fg - gh.grad).norm() / gh.grad.norm(), eh = (fh - gh.hess).norm() / gh.hess.norm();
        wg = std::max(wg, eg);
        wh = std::max(wh, eh);
        rows.push_back({{"lambda", lam}, {"xi", vec_json(xi)}, {"analytic", vec_json(gh.grad)},
                        {"finite_difference", vec_json(fg)}, {"grad_rel_err", eg}, {"hess_rel_err", eh}});
    }
    r.info("gradcheck_table", rows);
    r.check("gradient_vs_fd", wg <= 1e-5 * o.tol_scale, {{"max_rel_err", wg}});
    r.check("hessian_vs_fd", wh <= 1e-4 * o.tol_scale, {{"max_rel_err", wh}});
}

void suite_tracefree(const FieldSpec& s, Options o, Report& r) {
    require_critical_kind(s.field);
    o.degree_ball = false;
    for (int m : levels_of(s.field, o.level)) {
        double lm;
        const CriticalCertificate c = certify(s, m, o, lm);
        const std::string tag = "level_" + std::to_string(m);
        r.check("critical_" + tag, c.certified, {{"failure", c.failure}});
        r.check("trace_free_" + tag, c.trace_ratio <= 1e-6 * o.tol_scale, {{"trace_ratio", c.trace_ratio}});
    }
}

void suite_kw(const FieldSpec& s, Options o, Report& r) {
    require_critical_kind(s.field);
    if (!s.field.differentiable())
        throw std::invalid_argument("the kw suite needs a differentiable field (annulus with sigma > 0, or a ladder)");
    o.degree_ball = false;
    for (int m : levels_of(s.field, o.level)) {
        double lm;
        const CriticalCertificate c = certify(s, m, o, lm);
        r.check("critical_level_" + std::to_string(m), c.certified, {{"lambda", c.point.lambda}});
        ScalarField w = s.field;
        if (const auto* l = std::get_if<LadderField>(&s.field.kind))
            w = ladder_window(s.n, *l, std::max(1, m - 2), std::min(l->cfg.depth, m + 2));
        for (const auto& id : kw_suite(w, c.point, s.quad, 1e-6 * o.tol_scale))
            r.check(id.name + "_level_" + std::to_string(m), id.pass,
                    {{"lhs", id.lhs}, {"rhs", id.rhs}, {"residual", id.residual}, {"scale", id.scale}});
    }
}

void suite_geometry(const FieldSpec& s, const Options& o, Report& r) {
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> U(0, 1);
    double worst = 0, worst0 = 0;
    for (int k = 0; k < 1000; ++k) {
        const double R = std::exp(6 * U(g) - 3), lam = std::exp(6 * U(g) - 3), delta = 0.999 * U(g) * R;
        Vec e = Vec::Zero(s.n);
        e(0) = 1.0;
        const double oracle = 0.5 * (stereo_unproject(-(R - delta) / lam * e) - stereo_unproject((R + delta) / lam * e)).norm();
        worst = std::max(worst, std::abs(shell_boundary_radius(R, lam, delta) - oracle) / oracle);
        const double c0 = 2 * R * lam / (R * R + lam * lam);
        worst0 = std::max(worst0, std::abs(shell_boundary_radius(R, lam, 0.0) - c0) / c0);
    }
    r.check("shell_radius_endpoint_oracle", worst <= 1e-12 * o.tol_scale, {{"max_rel_err", worst}});
    r.check("shell_radius_centered", worst0 <= 4 * std::numeric_limits<double>::epsilon() * o.tol_scale, {{"max_rel_err", worst0}});
    if (const auto* a = std::get_if<AnnulusField>(&s.field.kind); a && a->sigma == 0.0) {
        const double lm = lambda_M(a->ann);
        const BubbleParams p = BubbleParams::centered(s.n, lm);
        const double m1 = shell_spherical_measure(a->ann, p) / std::pow(2.0, s.n);
        const double m2 = annulus_kernel_mass(s.n, a->ann, lm);
        r.check("shell_measure_vs_kernel_mass", std::abs(m1 - m2) <= 1e-10 * o.tol_scale * m2,
                {{"cap_decomposition", m1}, {"sine_integral", m2}});
    }
}

void suite_ladder_decay(const FieldSpec& s, const Options& o, Report& r) {
    const auto* l = std::get_if<LadderField>(&s.field.kind);
    if (!l) throw std::invalid_argument("the ladder-decay suite needs a ladder field");
    if (l->cfg.depth < 2) throw std::invalid_argument("the ladder-decay suite needs depth >= 2");
    const auto& c = l->cfg;
    for (int h = 0; h <= s.n - 1; ++h) {
        double worst = 0;
        for (const auto& row : ladder_derivative_decay(s.n, c, h))
            if (row.level > 1) worst = std::max(worst, std::abs(row.ratio / std::pow(c.a, -(c.tau - h)) - 1.0));
        r.check("level_ratio_h" + std::to_string(h), worst <= 1e-10 * o.tol_scale,
                {{"expected", std::pow(c.a, -(c.tau - h))}, {"max_rel_err", worst}});
    }
    const double slope = holder_slope(s.n, c);
    r.check("holder_slope", std::abs(slope - (c.tau - (s.n - 1))) <= 0.05 * o.tol_scale,
            {{"slope", slope}, {"expected", c.tau - (s.n - 1)}});
}

std::string plot_data(const FieldSpec& s, const Options& o) {
    const int n = s.n;
    const double lc = natural_lambda(s.field, o.level);
    std::ostringstream out;
    out.precision(17);
    char buf[256];
    if (o.what == "G-vs-lambda") {
        out << "# lambda G dG/dlambda\n";
        double best = 0, gmin = 1e300;
        for (int i = 0; i <= 200; ++i) {
            const double lam = lc * std::pow(10.0, -1.0 + 2.0 * i / 200);
            const GradHess gh = hess_G(s.field, BubbleParams::centered(n, lam), s.quad);
            std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", lam, gh.value, gh.grad(0));
            out << buf;
            if (gh.value < gmin) {
                gmin = gh.value;
                best = lam;
            }
        }
        std::snprintf(buf, sizeof buf, "# grid minimum of G at lambda = %.17g (reference scale %.17g)\n", best, lc);
        out << buf;
    } else if (o.what == "grad-field-2d") {
        out << "# lambda delta dG/dlambda dG/dxi1 |grad|   (xi = delta e1)\n";
        double best = 1e300, bl = 0, bd = 0;
        for (int i = 0; i <= 20; ++i) {
            for (int j = 0; j <= 20; ++j) {
                const double lam = lc * (0.8 + 0.4 * i / 20), d = lc * (-0.2 + 0.4 * j / 20);
                Vec xi = Vec::Zero(n);
                xi(0) = d;
                const Vec gr = grad_G(s.field, BubbleParams(lam, xi), s.quad);
                std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g %.17g\n", lam, d, gr(0), gr(1), gr.norm());
                out << buf;
                if (gr.norm() < best) {
                    best = gr.norm();
                    bl = lam;
                    bd = d;
                }
            }
            out << "\n";
        }
        std::snprintf(buf, sizeof buf, "# zero: smallest |grad| on the grid at (%.17g, %.17g)\n", bl, bd);
        out << buf;
    } else if (o.what == "ladder-profile") {
        if (!s.field.radial() || std::holds_alternative<SphereMomentField>(s.field.kind))
            throw std::invalid_argument("ladder-profile needs a compactly supported radial field");
        const auto bp = s.field.breakpoints();
        const double lo = 0.5 * bp.front(), hi = 2.0 * bp.back();
        out << "# r H(r)\n";
        for (int i = 0; i <= 2000; ++i) {
            const double r = lo > 0 ? lo * std::pow(hi / lo, i / 2000.0) : hi * i / 2000.0;
            std::snprintf(buf, sizeof buf, "%.17g %.17g\n", r, s.field.radial_value(r));
            out << buf;
        }
    } else {
        throw std::invalid_argument("--what must be G-vs-lambda, grad-field-2d or ladder-profile");
    }
    return out.str();
}

int emit(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return 0;
    }
    std::ofstream f(path);
    if (!f) {
        std::cerr << "pscurv: cannot write '" << path << "'\n";
        return 2;
    }
    f << text;
    return 0;
}

int usage_error(const std::string& command, const std::string& msg, const Options& o) {
    if (o.format == "json") {
        json e{{"tool", "pscurv"}, {"version", kVersion}, {"command", command}, {"error", msg}, {"pass", false}};
        std::cout << e.dump(2) << "\n";
    }
    std::cerr << "pscurv: " << msg << "\n";
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reduced-functional reports for prescribed scalar curvature fields"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--n", o.n, "Dimension, overrides the spec file");
    app.add_option("--spec", o.spec, "Field spec file (JSON)");
    app.add_option("--level", o.level, "Ladder level; 0 means levels 1..depth-1");
    app.add_option("--gamma", o.gamma, "Search ball radius as a fraction of lambda_M")->check(CLI::Range(1e-6, 0.5));
    app.add_option("--tol-scale", o.tol_scale, "Multiplies every tolerance")->check(CLI::PositiveNumber);
    app.add_option("--out", o.out, "Write the report or data here instead of stdout");
    app.add_option("--format", o.format, "Report format")->check(CLI::IsMember({"json", "text"}));
    app.add_flag("--timing", o.timing, "Include wall time; reports are then not byte-reproducible");

    auto* eval = app.add_subcommand("eval", "G, gradient and Hessian at a point");
    eval->add_option("--lambda", o.lambda, "Bubble scale (default: lambda_M of the field)");
    eval->add_option("--xi", o.xi, "Bubble centre, n components")->delimiter(',');
    auto* crit = app.add_subcommand("critical", "Certify critical points");
    crit->add_flag("!--no-degree-ball", o.degree_ball, "Skip the degree computation on the search ball");
    auto* verify = app.add_subcommand("verify", "Run a verification suite");
    verify->add_option("--suite", o.suite, "Suite name")
        ->required()
        ->check(CLI::IsMember({"pde", "gradcheck", "tracefree", "kw", "geometry", "ladder-decay"}));
    auto* plot = app.add_subcommand("plot", "Columnar data for external plotting");
    plot->add_option("--what", o.what, "Data set")
        ->required()
        ->check(CLI::IsMember({"G-vs-lambda", "grad-field-2d", "ladder-profile"}));
    auto* ladder = app.add_subcommand("ladder", "Ladder utilities");
    ladder->require_subcommand(1);
    auto* build = ladder->add_subcommand("build", "Validate a ladder configuration and write its spec file");
    build->add_option("--a", o.ladder.a, "Level ratio");
    build->add_option("--eta", o.ladder.eta, "Plateau half-width");
    build->add_option("--tau", o.ladder.tau, "Amplitude exponent (default n - 1/2)")->each([&](const std::string&) {
        o.tau_set = true;
    });
    build->add_option("--sigma", o.ladder.sigma, "Transition width");
    build->add_option("--depth", o.ladder.depth, "Number of levels");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    std::string command;
    for (int i = 1; i < argc; ++i) command += (i > 1 ? " " : "") + std::string(argv[i]);
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&]() -> std::optional<double> {
        if (!o.timing) return std::nullopt;
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    if (build->parsed()) {
        const int n = o.n.value_or(6);
        if (!o.tau_set) o.ladder.tau = n - 0.5;
        try {
            check_dimension(n);
            o.ladder.validate(n);
        } catch (const std::exception& e) {
            return usage_error(command, std::string("invalid ladder: ") + e.what(), o);
        }
        return emit(ladder_to_json(n, o.ladder).dump(2) + "\n", o.out);
    }

    if (o.spec.empty()) return usage_error(command, "--spec is required", o);
    FieldSpec s;
    try {
        s = load_field_spec(o.spec, o.n);
    } catch (const SpecError& e) {
        return usage_error(command, e.what(), o);
    }
    s.quad = s.quad.scaled(o.tol_scale);

    try {
        if (plot->parsed()) return emit(plot_data(s, o), o.out);
        Report r(command, &s);
        if (s.epsilon != 0.0) r.info("epsilon", s.epsilon);
        if (eval->parsed()) cmd_eval(s, o, r);
        if (crit->parsed()) cmd_critical(s, o, r);
        if (verify->parsed()) {
            if (o.suite == "pde") suite_pde(s, o, r);
            else if (o.suite == "gradcheck") suite_gradcheck(s, o, r);
            else if (o.suite == "tracefree") suite_tracefree(s, o, r);
            else if (o.suite == "kw") suite_kw(s, o, r);
            else if (o.suite == "geometry") suite_geometry(s, o, r);
            else suite_ladder_decay(s, o, r);
        }
        const int rc = emit(r.render(o.format, elapsed()), o.out);
        if (rc != 0) return rc;
        return r.pass() ? 0 : 1;
    } catch (const std::invalid_argument& e) {
        return usage_error(command, e.what(), o);
    } catch (const std::exception& e) {
        std::cerr << "pscurv: " << e.what() << "\n";
        return 1;
    }
}
