#include "nzsg/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nzsg/error.hpp"
#include "nzsg/rng.hpp"

namespace nzsg {

namespace {

std::string describe(double t, const Vec& x, const Vec& p1, const Vec& p2, int dim) {
    std::ostringstream os;
    os.precision(17);
    os << "t=" << t << " x=" << to_string(x, dim) << " p1=" << to_string(p1, dim) << " p2=" << to_string(p2, dim);
    return os.str();
}

double grid_point(const ControlSet& c, int k, int points) {
    if (k <= 0) return c.lower;
    if (k >= points - 1) return c.upper;
    return c.lower + (c.upper - c.lower) * static_cast<double>(k) / static_cast<double>(points - 1);
}

// Lowest-index maximiser of player's Hamiltonian with the other control fixed.
double grid_argmax(const GameSpec& spec, int player, int points, double t, const Vec& x, const Vec& p, double other) {
    const ControlSet& set = spec.controls(player);
    double best_u = set.lower;
    double best_h = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < points; ++k) {
        const double u = grid_point(set, k, points);
        const double h = player == 1 ? hamiltonian_unchecked(spec, 1, t, x, p, u, other)
                                     : hamiltonian_unchecked(spec, 2, t, x, p, other, u);
        if (h > best_h) {
            best_h = h;
            best_u = u;
        }
    }
    return best_u;
}

}  // namespace

double hamiltonian_unchecked(const GameSpec& spec, int player, double t, const Vec& x, const Vec& p, double u1,
                             double u2) {
    const Vec f = spec.drift(t, x, u1, u2);
    return dot(p, f, spec.dim) + spec.running(player, t, x, u1, u2);
}

double hamiltonian(const GameSpec& spec, int player, double t, const Vec& x, const Vec& p, double u1, double u2) {
    if (player != 1 && player != 2) throw DomainError("player must be 1 or 2");
    if (!spec.control_set[0].contains(u1)) throw DomainError("u1 = " + std::to_string(u1) + " outside U1");
    if (!spec.control_set[1].contains(u2)) throw DomainError("u2 = " + std::to_string(u2) + " outside U2");
    return hamiltonian_unchecked(spec, player, t, x, p, u1, u2);
}

FeedbackResolver FeedbackResolver::default_for(const GameSpec& spec) {
    FeedbackResolver r;
    if (spec.feedback_closed_form)
        r.mode = FeedbackMode::ClosedForm;
    else if (spec.structure != Structure::General)
        r.mode = FeedbackMode::SeparatedArgmax;
    else
        r.mode = FeedbackMode::BestResponse;
    return r;
}

void check_compatible(const FeedbackResolver& resolver, const GameSpec& spec) {
    if (!(resolver.smoothing_epsilon >= 0.0)) throw DomainError("smoothing width must be >= 0");
    if (resolver.grid_points < 2) throw DomainError("resolver needs at least 2 grid points");
    if (resolver.mode == FeedbackMode::ClosedForm && !spec.feedback_closed_form)
        throw DomainError("closed-form resolver requires a spec with closed-form feedbacks");
    if (resolver.mode == FeedbackMode::SeparatedArgmax && spec.structure == Structure::General)
        throw DomainError("separated-argmax resolver requires a separated or affine structure");
    if (resolver.mode == FeedbackMode::BestResponse && resolver.max_br_iterations < 1)
        throw DomainError("best-response resolver needs max_br_iterations >= 1");
}

ControlPair resolve_feedback(const FeedbackResolver& resolver, const GameSpec& spec, double t, const Vec& x,
                             const Vec& p1, const Vec& p2) {
    switch (resolver.mode) {
        case FeedbackMode::ClosedForm: {
            if (!spec.feedback_closed_form) throw DomainError("spec has no closed-form feedbacks");
            const auto& fb = *spec.feedback_closed_form;
            const double u1 = fb.player1(t, x, p1, p2, resolver.smoothing_epsilon);
            const double u2 = fb.player2(t, x, p1, p2, resolver.smoothing_epsilon);
            return {spec.control_set[0].clamp(u1), spec.control_set[1].clamp(u2)};
        }
        case FeedbackMode::SeparatedArgmax: {
            // Under separation H_i(u_i, u_j) - H_i(u_i', u_j) does not depend on
            // u_j, so any reference value for the other control gives the
            // same argmax.
            const double ref1 = spec.control_set[0].lower;
            const double ref2 = spec.control_set[1].lower;
            return {grid_argmax(spec, 1, resolver.grid_points, t, x, p1, ref2),
                    grid_argmax(spec, 2, resolver.grid_points, t, x, p2, ref1)};
        }
        case FeedbackMode::BestResponse: {
            const int n = resolver.grid_points;
            double u1 = grid_point(spec.control_set[0], (n - 1) / 2, n);
            double u2 = grid_point(spec.control_set[1], (n - 1) / 2, n);
            std::vector<std::pair<double, double>> visited{{u1, u2}};
            for (int it = 0; it < resolver.max_br_iterations; ++it) {
                const double n1 = grid_argmax(spec, 1, n, t, x, p1, u2);
                const double n2 = grid_argmax(spec, 2, n, t, x, p2, n1);
                if (n1 == u1 && n2 == u2) return {u1, u2};
                u1 = n1;
                u2 = n2;
                const auto seen = std::find(visited.begin(), visited.end(), std::pair{u1, u2});
                if (seen != visited.end()) {
                    std::vector<std::pair<double, double>> cycle(seen, visited.end());
                    throw NoStaticNashError("no static Nash point found at " + describe(t, x, p1, p2, spec.dim) +
                                                ": best responses cycle",
                                            std::move(cycle));
                }
                visited.emplace_back(u1, u2);
            }
            throw NoStaticNashError("no static Nash point found at " + describe(t, x, p1, p2, spec.dim) +
                                        ": best-response iteration limit reached",
                                    std::move(visited));
        }
    }
    return {};
}

double switching_argument(const GameSpec& spec, int player, double t, const Vec& x, const Vec& p, double other) {
    if (player == 1)
        return hamiltonian_unchecked(spec, 1, t, x, p, 1.0, other) - hamiltonian_unchecked(spec, 1, t, x, p, 0.0, other);
    return hamiltonian_unchecked(spec, 2, t, x, p, other, 1.0) - hamiltonian_unchecked(spec, 2, t, x, p, other, 0.0);
}

GicReport check_gic(const FeedbackResolver& resolver, const GameSpec& spec, const GicOptions& options) {
    if (options.sample_count < 1) throw DomainError("sample_count must be >= 1");
    check_compatible(resolver, spec);
    const int n = spec.dim;
    GicReport report;
    report.worst_violation_1 = std::numeric_limits<double>::infinity();
    report.worst_violation_2 = std::numeric_limits<double>::infinity();
    const auto grid1 = spec.control_set[0].grid();
    const auto grid2 = spec.control_set[1].grid();

    for (int i = 0; i < options.sample_count; ++i) {
        std::uint64_t counter = 0;
        const auto u = [&] { return rng::uniform(options.seed, static_cast<std::uint64_t>(i), counter++); };
        const double t = spec.horizon * u();
        Vec x{}, p1{}, p2{};
        for (int d = 0; d < n; ++d) x[d] = options.x_radius * (2.0 * u() - 1.0);
        for (int d = 0; d < n; ++d) p1[d] = options.p_radius * (2.0 * u() - 1.0);
        for (int d = 0; d < n; ++d) p2[d] = options.p_radius * (2.0 * u() - 1.0);

        ControlPair fb;
        try {
            fb = resolve_feedback(resolver, spec, t, x, p1, p2);
        } catch (const Error& e) {
            throw SolveError("resolver failed at GIC sample " + std::to_string(i) + " (" +
                             describe(t, x, p1, p2, n) + "): " + e.what());
        }
        const double h1 = hamiltonian(spec, 1, t, x, p1, fb.u1, fb.u2);
        const double h2 = hamiltonian(spec, 2, t, x, p2, fb.u1, fb.u2);
        for (double dev : grid1) {
            const double gap = h1 - hamiltonian_unchecked(spec, 1, t, x, p1, dev, fb.u2);
            report.worst_violation_1 = std::min(report.worst_violation_1, gap);
            if (gap < -1e-12 && report.violating_points.size() < options.max_recorded)
                report.violating_points.push_back({t, x, p1, p2, fb, 1, dev, gap});
        }
        for (double dev : grid2) {
            const double gap = h2 - hamiltonian_unchecked(spec, 2, t, x, p2, fb.u1, dev);
            report.worst_violation_2 = std::min(report.worst_violation_2, gap);
            if (gap < -1e-12 && report.violating_points.size() < options.max_recorded)
                report.violating_points.push_back({t, x, p1, p2, fb, 2, dev, gap});
        }
        ++report.samples;
    }
    return report;
}

}  // namespace nzsg
