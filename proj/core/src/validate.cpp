#include "nzsg/validate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nzsg/error.hpp"
#include "nzsg/rng.hpp"

namespace nzsg {

namespace {

std::string point_text(double t, const Vec& x, int dim) {
    std::ostringstream os;
    os.precision(17);
    os << "(t,x)=(" << t << ", " << to_string(x, dim) << ")";
    return os.str();
}

void require_finite(double v, const char* what, double t, const Vec& x, int dim) {
    if (std::isnan(v)) throw ValidationError(std::string(what) + " returned NaN at " + point_text(t, x, dim));
}

double sample_control(const ControlSet& c, double u) { return c.lower + (c.upper - c.lower) * u; }

struct Sup {
    double inner = 0.0;
    double outer = 0.0;
    void add(double v, bool is_outer) {
        double& s = is_outer ? outer : inner;
        s = std::max(s, std::abs(v));
    }
    double all() const { return std::max(inner, outer); }
    bool bounded() const { return outer <= 1.25 * inner + 1e-12; }
};

}  // namespace

ValidationReport validate_spec(const GameSpec& spec, const ValidationOptions& options) {
    if (options.sample_count < 1) throw DomainError("sample_count must be >= 1");
    if (spec.dim < 1 || spec.dim > kMaxDim) throw ValidationError("unsupported dimension " + std::to_string(spec.dim));
    spec.control_set[0].check();
    spec.control_set[1].check();

    const int n = spec.dim;
    const double radius = options.sample_radius;
    const double beta = spec.growth_exponent;
    const bool affine = spec.structure == Structure::AffineBangBang || spec.structure == Structure::AffineUnbounded;
    const bool separated = spec.structure != Structure::General;

    ValidationReport r;
    r.ellipticity_lower = std::numeric_limits<double>::infinity();
    r.ellipticity_upper = -std::numeric_limits<double>::infinity();
    Sup sup_f, sup_h[2], sup_g[2];
    double worst_structure = 0.0;
    std::string structure_where;

    DiffusionMatrixField diffusion(n, spec.sigma);

    auto structure_defect = [&](double defect, double scale, const std::string& what, double t, const Vec& x) {
        const double rel = std::abs(defect) / (1.0 + scale);
        if (rel > worst_structure) {
            worst_structure = rel;
            structure_where = what + " at " + point_text(t, x, n);
        }
    };

    for (int i = 0; i < options.sample_count; ++i) {
        const auto u = [&](std::uint64_t k) { return rng::uniform(options.seed, static_cast<std::uint64_t>(i), k); };
        const double t = spec.horizon * u(0);
        Vec x{};
        for (int d = 0; d < n; ++d) x[d] = radius * (2.0 * u(1 + d) - 1.0);
        const double u1 = sample_control(spec.control_set[0], u(4));
        const double u2 = sample_control(spec.control_set[1], u(5));
        const double v1 = sample_control(spec.control_set[0], u(6));
        const double v2 = sample_control(spec.control_set[1], u(7));
        const bool outer = norm_inf(x, n) > radius / 2.0;
        const double xnorm = norm2(x, n);

        const Mat sig = spec.sigma(t, x);
        for (int h = 0; h < n; ++h)
            for (int k = 0; k < n; ++k) require_finite(sig[h][k], "sigma", t, x, n);
        Vec probe{};
        if (!solve_small(sig, Vec{1.0, 1.0}, n, probe))
            throw ValidationError("sigma not invertible at " + point_text(t, x, n));
        const auto eig = DiffusionMatrixField::eigen_range(diffusion.a(t, x), n);
        r.ellipticity_lower = std::min(r.ellipticity_lower, eig.lower);
        r.ellipticity_upper = std::max(r.ellipticity_upper, eig.upper);

        const Vec f = spec.drift(t, x, u1, u2);
        for (int d = 0; d < n; ++d) require_finite(f[d], "drift", t, x, n);
        const double fnorm = norm2(f, n);
        sup_f.add(fnorm, outer);
        r.drift_growth_constant = std::max(r.drift_growth_constant, fnorm / (1.0 + xnorm));

        double payoff_growth = 0.0;
        for (int p = 0; p < 2; ++p) {
            const double h = spec.running_payoff[p](t, x, u1, u2);
            const double g = spec.terminal_payoff[p](x);
            require_finite(h, p == 0 ? "h1" : "h2", t, x, n);
            require_finite(g, p == 0 ? "g1" : "g2", t, x, n);
            sup_h[p].add(h, outer);
            sup_g[p].add(g, outer);
            payoff_growth = std::max(payoff_growth, (std::abs(g) + std::abs(h)) / (1.0 + std::pow(xnorm, beta)));
        }
        r.payoff_growth_constant = std::max(r.payoff_growth_constant, payoff_growth);

        if (separated) {
            const Vec f_v1 = spec.drift(t, x, v1, u2);
            const Vec f_v2 = spec.drift(t, x, u1, v2);
            const Vec f_vv = spec.drift(t, x, v1, v2);
            for (int d = 0; d < n; ++d)
                structure_defect(f[d] - f_v1[d] - f_v2[d] + f_vv[d], std::abs(f[d]) + std::abs(f_vv[d]),
                                 "drift mixes u1 and u2", t, x);
            const double h1a = spec.running_payoff[0](t, x, u1, u2);
            const double h1b = spec.running_payoff[0](t, x, u1, v2);
            const double h2a = spec.running_payoff[1](t, x, u1, u2);
            const double h2b = spec.running_payoff[1](t, x, v1, u2);
            structure_defect(h1a - h1b, std::abs(h1a), "h1 depends on u2", t, x);
            structure_defect(h2a - h2b, std::abs(h2a), "h2 depends on u1", t, x);
        }
        if (affine) {
            const Vec f00 = spec.drift(t, x, 0.0, 0.0);
            const Vec f10 = spec.drift(t, x, 1.0, 0.0);
            const Vec f01 = spec.drift(t, x, 0.0, 1.0);
            for (int d = 0; d < n; ++d) {
                const double model = f00[d] + (f10[d] - f00[d]) * u1 + (f01[d] - f00[d]) * u2;
                structure_defect(f[d] - model, std::abs(f[d]), "drift not affine in controls", t, x);
                if (spec.structure == Structure::AffineBangBang)
                    structure_defect(f00[d], 0.0, "drift has a control-free part", t, x);
            }
            const double h1_0 = spec.running_payoff[0](t, x, 0.0, u2);
            const double h1_1 = spec.running_payoff[0](t, x, 1.0, u2);
            const double h2_0 = spec.running_payoff[1](t, x, u1, 0.0);
            const double h2_1 = spec.running_payoff[1](t, x, u1, 1.0);
            structure_defect(h1_0, 0.0, "h1 not of the form h1(t,x) u1", t, x);
            structure_defect(h2_0, 0.0, "h2 not of the form h2(t,x) u2", t, x);
            structure_defect(spec.running_payoff[0](t, x, u1, u2) - h1_1 * u1, std::abs(h1_1),
                             "h1 not linear in u1", t, x);
            structure_defect(spec.running_payoff[1](t, x, u1, u2) - h2_1 * u2, std::abs(h2_1),
                             "h2 not linear in u2", t, x);
        }
        ++r.samples_used;
    }

    r.ellipticity_margin = r.ellipticity_lower;
    r.ellipticity_ok = r.ellipticity_lower > 0.0;

    r.sup_drift = sup_f.all();
    for (int p = 0; p < 2; ++p) {
        r.sup_running[p] = sup_h[p].all();
        r.sup_terminal[p] = sup_g[p].all();
    }
    r.boundedness_ok = sup_f.bounded() && sup_h[0].bounded() && sup_h[1].bounded() && sup_g[0].bounded() &&
                       sup_g[1].bounded();
    r.boundedness_required = spec.bounded_data();

    r.growth_ok = std::isfinite(r.drift_growth_constant) && std::isfinite(r.payoff_growth_constant) &&
                  r.drift_growth_constant < options.growth_limit && r.payoff_growth_constant < options.growth_limit;

    bool sets_ok = true;
    if (affine) {
        for (const auto& c : spec.control_set)
            if (c.lower != 0.0 || c.upper != 1.0 || c.kind != ControlSet::Kind::Interval) sets_ok = false;
    }
    r.structure_ok = sets_ok && worst_structure <= 1e-10;
    if (!sets_ok)
        r.structure_detail = "affine structures require control sets [0,1]";
    else if (worst_structure > 1e-10)
        r.structure_detail = structure_where;
    else
        r.structure_detail = std::string(to_string(spec.structure)) + " structure confirmed";
    return r;
}

std::string format_report(const ValidationReport& r) {
    std::ostringstream os;
    os.precision(17);
    auto flag = [](bool b) { return b ? "true" : "false"; };
    os << "ellipticity_ok = " << flag(r.ellipticity_ok) << '\n'
       << "ellipticity_lower = " << r.ellipticity_lower << '\n'
       << "ellipticity_upper = " << r.ellipticity_upper << '\n'
       << "boundedness_ok = " << flag(r.boundedness_ok) << '\n'
       << "boundedness_required = " << flag(r.boundedness_required) << '\n'
       << "sup_drift = " << r.sup_drift << '\n'
       << "sup_h1 = " << r.sup_running[0] << '\n'
       << "sup_h2 = " << r.sup_running[1] << '\n'
       << "sup_g1 = " << r.sup_terminal[0] << '\n'
       << "sup_g2 = " << r.sup_terminal[1] << '\n'
       << "growth_ok = " << flag(r.growth_ok) << '\n'
       << "drift_growth_constant = " << r.drift_growth_constant << '\n'
       << "payoff_growth_constant = " << r.payoff_growth_constant << '\n'
       << "structure_ok = " << flag(r.structure_ok) << '\n'
       << "structure_detail = " << r.structure_detail << '\n'
       << "samples_used = " << r.samples_used << '\n'
       << "verdict = " << flag(r.ok()) << '\n';
    return os.str();
}

}  // namespace nzsg
