#include "nzsg/montecarlo.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "nzsg/error.hpp"
#include "nzsg/field_io.hpp"
#include "nzsg/parallel.hpp"
#include "nzsg/rng.hpp"

namespace nzsg {

std::string_view to_string(SimulationMode mode) {
    return mode == SimulationMode::DriftlessGirsanov ? "girsanov" : "controlled";
}

SimulationMode parse_simulation_mode(std::string_view name) {
    if (name == "girsanov") return SimulationMode::DriftlessGirsanov;
    if (name == "controlled") return SimulationMode::ControlledDynamics;
    throw DomainError("unknown simulation mode '" + std::string(name) + "' (expected girsanov or controlled)");
}

Strategy Strategy::constant_control(double u) {
    Strategy s;
    s.kind = Kind::Constant;
    s.constant = u;
    return s;
}

Strategy Strategy::staircase(std::vector<double> levels) {
    if (levels.empty()) throw DomainError("staircase needs at least one level");
    Strategy s;
    s.kind = Kind::Staircase;
    s.levels = std::move(levels);
    return s;
}

Strategy Strategy::random_staircase(const ControlSet& set, int pieces, std::uint64_t seed) {
    if (pieces < 1) throw DomainError("staircase needs at least one piece");
    std::vector<double> levels(static_cast<std::size_t>(pieces));
    for (int j = 0; j < pieces; ++j)
        levels[j] = set.lower + (set.upper - set.lower) * rng::uniform(seed, 0x5747, static_cast<std::uint64_t>(j));
    return staircase(std::move(levels));
}

double Strategy::at(double t, double horizon) const {
    switch (kind) {
        case Kind::Constant: return constant;
        case Kind::Staircase: {
            const int m = static_cast<int>(levels.size());
            int j = static_cast<int>(std::floor(t / horizon * m));
            j = std::clamp(j, 0, m - 1);
            return levels[j];
        }
        case Kind::Feedback: break;
    }
    throw DomainError("feedback strategy has no explicit control");
}

std::string Strategy::describe() const {
    switch (kind) {
        case Kind::Feedback: return "feedback";
        case Kind::Constant: return "constant " + format_double(constant);
        case Kind::Staircase: {
            std::string s = "staircase";
            for (double v : levels) (s += ' ') += format_double(v);
            return s;
        }
    }
    return {};
}

double TrajectoryBatch::path_payoff(int player, int path) const {
    const double y = running_payoffs[path][player - 1] + terminal_payoffs[path][player - 1];
    return mode == SimulationMode::DriftlessGirsanov ? std::exp(log_weights[path]) * y : y;
}

TrajectoryBatch simulate_paths(const GameSpec& spec, const Vec& x0, const ControlSource& source,
                               const SimulationOptions& options) {
    if (options.n_paths < 1) throw DomainError("n_paths must be >= 1");
    if (options.n_steps < 1) throw DomainError("n_steps must be >= 1");
    const bool needs_field = source.strategies[0].kind == Strategy::Kind::Feedback ||
                             source.strategies[1].kind == Strategy::Kind::Feedback;
    if (needs_field && source.field == nullptr) throw DomainError("feedback strategy requires a value field");
    if (needs_field && source.field->grid().dim != spec.dim)
        throw DomainError("field dimension does not match the spec");
    for (int i = 0; i < 2; ++i) {
        const Strategy& s = source.strategies[i];
        if (s.kind == Strategy::Kind::Constant && !spec.control_set[i].contains(s.constant))
            throw DomainError("constant control outside the control set of player " + std::to_string(i + 1));
        for (double v : s.levels)
            if (!spec.control_set[i].contains(v))
                throw DomainError("staircase level outside the control set of player " + std::to_string(i + 1));
    }
    if (needs_field) check_compatible(source.resolver, spec);

    const int n = spec.dim;
    const int steps = options.n_steps;
    const double T = spec.horizon;
    const double dt = T / steps;
    const double sq = std::sqrt(dt);
    const FeedbackResolver exact = source.resolver.with_epsilon(0.0);
    const bool girsanov = options.mode == SimulationMode::DriftlessGirsanov;

    TrajectoryBatch batch;
    batch.mode = options.mode;
    batch.n_paths = options.n_paths;
    batch.n_steps = steps;
    batch.dim = n;
    batch.horizon = T;
    batch.x0 = x0;
    batch.seed = options.seed;
    const std::size_t paths = static_cast<std::size_t>(options.n_paths);
    batch.log_weights.assign(paths, 0.0);
    batch.running_payoffs.assign(paths, {0.0, 0.0});
    batch.terminal_payoffs.assign(paths, {0.0, 0.0});
    batch.exited.assign(paths, 0);
    if (options.record_paths) {
        batch.states.assign(paths * (steps + 1) * n, 0.0);
        batch.controls.assign(paths * steps, ControlPair{});
    }

    parallel_for(paths, options.workers, [&](std::size_t p) {
        Vec x = x0;
        double m = 0.0, qv = 0.0;
        std::array<double, 2> run{0.0, 0.0};
        bool out = false;
        if (options.record_paths)
            for (int d = 0; d < n; ++d) batch.states[(p * (steps + 1)) * n + d] = x[d];
        for (int k = 0; k < steps; ++k) {
            const double t = k * dt;
            ControlPair u;
            if (needs_field) {
                bool o1 = false, o2 = false;
                const Vec p1 = source.field->payoff_gradient(1, t, x, &o1);
                const Vec p2 = source.field->payoff_gradient(2, t, x, &o2);
                out = out || o1 || o2;
                u = resolve_feedback(exact, spec, t, x, p1, p2);
            }
            if (source.strategies[0].kind != Strategy::Kind::Feedback) u.u1 = source.strategies[0].at(t, T);
            if (source.strategies[1].kind != Strategy::Kind::Feedback) u.u2 = source.strategies[1].at(t, T);

            const Mat s = spec.sigma(t, x);
            const Vec f = spec.drift(t, x, u.u1, u.u2);
            Vec db{};
            for (int d = 0; d < n; ++d)
                db[d] = sq * rng::normal(options.seed, p, static_cast<std::uint64_t>(k) * n + d);
            run[0] += spec.running(1, t, x, u.u1, u.u2) * dt;
            run[1] += spec.running(2, t, x, u.u1, u.u2) * dt;
            const Vec noise = mat_vec(s, db, n);
            if (girsanov) {
                Vec theta{};
                if (!solve_small(s, f, n, theta))
                    throw SolveError("sigma not invertible on path " + std::to_string(p) + " at step " +
                                     std::to_string(k) + ", x=" + to_string(x, n));
                m += dot(theta, db, n);
                qv += dot(theta, theta, n) * dt;
                for (int d = 0; d < n; ++d) x[d] += noise[d];
            } else {
                for (int d = 0; d < n; ++d) x[d] += f[d] * dt + noise[d];
            }
            for (int d = 0; d < n; ++d)
                if (!std::isfinite(x[d]))
                    throw SolveError("non-finite state on path " + std::to_string(p) + " at step " +
                                     std::to_string(k));
            if (options.record_paths) {
                batch.controls[p * steps + k] = u;
                for (int d = 0; d < n; ++d) batch.states[(p * (steps + 1) + k + 1) * n + d] = x[d];
            }
        }
        batch.log_weights[p] = girsanov ? m - 0.5 * qv : 0.0;
        batch.running_payoffs[p] = run;
        batch.terminal_payoffs[p] = {spec.terminal(1, x), spec.terminal(2, x)};
        batch.exited[p] = out ? 1 : 0;
    });

    std::size_t exits = 0;
    for (auto e : batch.exited) exits += e;
    batch.exit_fraction = static_cast<double>(exits) / static_cast<double>(paths);
    if (batch.exit_fraction > options.exit_warning_fraction) {
        std::ostringstream os;
        os << "exit fraction " << batch.exit_fraction << " exceeds " << options.exit_warning_fraction
           << ": paths left the field box and used clamped gradients";
        batch.warnings.push_back(os.str());
    }
    return batch;
}

PayoffEstimate summarize(const std::vector<double>& samples) {
    PayoffEstimate e;
    e.n_paths = static_cast<int>(samples.size());
    if (samples.empty()) {
        e.mean = std::numeric_limits<double>::quiet_NaN();
        e.std_error = std::numeric_limits<double>::infinity();
        return e;
    }
    double sum = 0.0;
    for (double v : samples) sum += v;
    e.mean = sum / static_cast<double>(samples.size());
    if (samples.size() < 2) {
        e.std_error = std::numeric_limits<double>::infinity();
        return e;
    }
    double ss = 0.0;
    for (double v : samples) ss += (v - e.mean) * (v - e.mean);
    const double var = ss / static_cast<double>(samples.size() - 1);
    e.std_error = std::sqrt(var / static_cast<double>(samples.size()));
    return e;
}

PayoffEstimate estimate_payoff(const TrajectoryBatch& batch, int player) {
    std::vector<double> y(static_cast<std::size_t>(batch.n_paths));
    for (int p = 0; p < batch.n_paths; ++p) y[p] = batch.path_payoff(player, p);
    PayoffEstimate e = summarize(y);
    e.player = player;
    e.mode = batch.mode;
    return e;
}

PayoffEstimate estimate_weight(const TrajectoryBatch& batch) {
    std::vector<double> w(static_cast<std::size_t>(batch.n_paths));
    for (int p = 0; p < batch.n_paths; ++p) w[p] = std::exp(batch.log_weights[p]);
    PayoffEstimate e = summarize(w);
    e.player = 0;
    e.mode = batch.mode;
    return e;
}

GirsanovCheck girsanov_consistency(const GameSpec& spec, const ValueField& field, const FeedbackResolver& resolver,
                                   const Vec& x0, const SimulationOptions& options) {
    ControlSource src{&field, resolver, {}};
    SimulationOptions og = options, oc = options;
    og.mode = SimulationMode::DriftlessGirsanov;
    og.seed = rng::derive(options.seed, 1);
    oc.mode = SimulationMode::ControlledDynamics;
    oc.seed = rng::derive(options.seed, 2);
    const TrajectoryBatch bg = simulate_paths(spec, x0, src, og);
    const TrajectoryBatch bc = simulate_paths(spec, x0, src, oc);

    GirsanovCheck r;
    for (int i = 0; i < 2; ++i) {
        r.girsanov[i] = estimate_payoff(bg, i + 1);
        r.controlled[i] = estimate_payoff(bc, i + 1);
        r.combined_std_error[i] = std::hypot(r.girsanov[i].std_error, r.controlled[i].std_error);
        r.agree[i] = std::abs(r.girsanov[i].mean - r.controlled[i].mean) <= 3.0 * r.combined_std_error[i];
    }
    r.weight = estimate_weight(bg);
    r.weight_ok = std::abs(r.weight.mean - 1.0) <= 3.0 * r.weight.std_error;
    r.warnings = bg.warnings;
    r.warnings.insert(r.warnings.end(), bc.warnings.begin(), bc.warnings.end());
    return r;
}

std::vector<Deviation> default_deviations(const GameSpec& spec, std::uint64_t seed, int staircase_pieces) {
    std::vector<Deviation> out;
    for (int i = 1; i <= 2; ++i) {
        const ControlSet& set = spec.controls(i);
        const std::string who = "u" + std::to_string(i);
        out.push_back({who + "=lower", i, Strategy::constant_control(set.lower)});
        out.push_back({who + "=upper", i, Strategy::constant_control(set.upper)});
        out.push_back({who + "=random",
                       i,
                       Strategy::random_staircase(set, staircase_pieces, rng::derive(seed, 100 + i))});
    }
    return out;
}

bool NashReport::verdict() const {
    for (const auto& d : deviations)
        if (!d.verdict) return false;
    for (const auto& v : value_match)
        if (!v.verdict) return false;
    return true;
}

NashReport deviation_test(const GameSpec& spec, const ValueField& field, const FeedbackResolver& resolver,
                          const Vec& x0, const std::vector<Deviation>& deviations, const SimulationOptions& options,
                          double allowance) {
    NashReport report;
    report.discretization_allowance = allowance;
    const ControlSource eq_src{&field, resolver, {}};
    const TrajectoryBatch eq = simulate_paths(spec, x0, eq_src, options);
    report.equilibrium = {estimate_payoff(eq, 1), estimate_payoff(eq, 2)};
    report.warnings = eq.warnings;

    for (const Deviation& dev : deviations) {
        if (dev.player != 1 && dev.player != 2) throw DomainError("deviation player must be 1 or 2");
        ControlSource src = eq_src;
        src.strategies[dev.player - 1] = dev.strategy;
        const TrajectoryBatch b = simulate_paths(spec, x0, src, options);
        std::vector<double> gaps(static_cast<std::size_t>(options.n_paths));
        for (int p = 0; p < options.n_paths; ++p)
            gaps[p] = eq.path_payoff(dev.player, p) - b.path_payoff(dev.player, p);
        const PayoffEstimate g = summarize(gaps);
        DeviationResult r;
        r.id = dev.id;
        r.description = dev.strategy.describe();
        r.player = dev.player;
        r.estimate = estimate_payoff(b, dev.player);
        r.gap = g.mean;
        r.gap_std_error = g.std_error;
        r.verdict = r.gap >= -(3.0 * r.gap_std_error + allowance);
        for (const auto& w : b.warnings) report.warnings.push_back(dev.id + ": " + w);
        report.deviations.push_back(std::move(r));
    }
    return report;
}

std::array<ValueMatch, 2> value_match_test(const GameSpec& spec, const ValueField& field,
                                           const FeedbackResolver& resolver, const Vec& x0,
                                           const SimulationOptions& options, double allowance) {
    const ControlSource src{&field, resolver, {}};
    const TrajectoryBatch b = simulate_paths(spec, x0, src, options);
    std::array<ValueMatch, 2> out;
    for (int i = 1; i <= 2; ++i) {
        ValueMatch& m = out[i - 1];
        m.player = i;
        m.pde_value = field.payoff(i, 0.0, x0);
        m.estimate = estimate_payoff(b, i);
        m.difference = std::abs(m.pde_value - m.estimate.mean);
        m.tolerance = 3.0 * m.estimate.std_error + allowance;
        m.verdict = m.difference <= m.tolerance;
    }
    return out;
}

std::string format_nash_report(const NashReport& r) {
    std::ostringstream os;
    os << "discretization_allowance = " << format_double(r.discretization_allowance) << '\n';
    for (int i = 0; i < 2; ++i) {
        os << "equilibrium.player" << i + 1 << ".mean = " << format_double(r.equilibrium[i].mean) << '\n';
        os << "equilibrium.player" << i + 1 << ".stderr = " << format_double(r.equilibrium[i].std_error) << '\n';
        os << "equilibrium.player" << i + 1 << ".n_paths = " << r.equilibrium[i].n_paths << '\n';
    }
    for (const auto& d : r.deviations) {
        const std::string k = "deviation." + d.id;
        os << k << ".player = " << d.player << '\n';
        os << k << ".strategy = " << d.description << '\n';
        os << k << ".mean = " << format_double(d.estimate.mean) << '\n';
        os << k << ".gap = " << format_double(d.gap) << '\n';
        os << k << ".gap_stderr = " << format_double(d.gap_std_error) << '\n';
        os << k << ".verdict = " << (d.verdict ? "true" : "false") << '\n';
    }
    for (const auto& v : r.value_match) {
        const std::string k = "value_match.player" + std::to_string(v.player);
        os << k << ".pde = " << format_double(v.pde_value) << '\n';
        os << k << ".mc = " << format_double(v.estimate.mean) << '\n';
        os << k << ".difference = " << format_double(v.difference) << '\n';
        os << k << ".tolerance = " << format_double(v.tolerance) << '\n';
        os << k << ".verdict = " << (v.verdict ? "true" : "false") << '\n';
    }
    for (std::size_t i = 0; i < r.warnings.size(); ++i) os << "warning." << i << " = " << r.warnings[i] << '\n';
    os << "verdict = " << (r.verdict() ? "true" : "false") << '\n';
    return os.str();
}

std::string nash_csv(const NashReport& r) {
    std::string s = "deviation_id,player,mean,stderr,gap,gap_stderr,verdict\n";
    for (const auto& d : r.deviations) {
        s += d.id + ',' + std::to_string(d.player) + ',' + format_double(d.estimate.mean) + ',' +
             format_double(d.estimate.std_error) + ',' + format_double(d.gap) + ',' + format_double(d.gap_std_error) +
             ',' + (d.verdict ? "true" : "false") + '\n';
    }
    return s;
}

}  // namespace nzsg
