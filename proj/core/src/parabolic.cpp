#include "nzsg/parabolic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "nzsg/error.hpp"
#include "nzsg/parallel.hpp"

namespace nzsg {

namespace {

std::string where(const Grid& grid, int level, std::size_t node) {
    std::ostringstream os;
    os.precision(10);
    os << "s=" << grid.s(level) << ", x=" << to_string(grid.node(node), grid.dim);
    return os.str();
}

// Thomas algorithm for -lo[i] y[i-1] + di[i] y[i] - up[i] y[i+1] = r[i].
void thomas(std::size_t m, const double* lo, const double* di, const double* up, double* r, double* scratch) {
    double denom = di[0];
    if (!(std::abs(denom) > 0.0)) throw SolveError("singular tridiagonal system");
    r[0] /= denom;
    for (std::size_t i = 1; i < m; ++i) {
        scratch[i] = -up[i - 1] / denom;
        denom = di[i] + lo[i] * scratch[i];
        if (!(std::abs(denom) > 0.0)) throw SolveError("singular tridiagonal system");
        r[i] = (r[i] + lo[i] * r[i - 1]) / denom;
    }
    for (std::size_t i = m - 1; i-- > 0;) r[i] -= scratch[i + 1] * r[i + 1];
}

// Implicit sweep along one line of nodes: index(j) for j in [0, n). End nodes
// are Dirichlet and copied from `fixed`. `coef[j]` = dt * a_dd / h^2.
template <class Index>
void implicit_line(int n, Index index, const double* coef, const double* rhs, const double* fixed, double* out) {
    const std::size_t m = static_cast<std::size_t>(n - 2);
    std::vector<double> lo(m), di(m), up(m), r(m), scratch(m);
    for (std::size_t q = 0; q < m; ++q) {
        const std::size_t node = index(static_cast<int>(q) + 1);
        const double c = coef[q + 1];
        lo[q] = c;
        up[q] = c;
        di[q] = 1.0 + 2.0 * c;
        r[q] = rhs[node];
    }
    r[0] += lo[0] * fixed[index(0)];
    r[m - 1] += up[m - 1] * fixed[index(n - 1)];
    thomas(m, lo.data(), di.data(), up.data(), r.data(), scratch.data());
    out[index(0)] = fixed[index(0)];
    out[index(n - 1)] = fixed[index(n - 1)];
    for (std::size_t q = 0; q < m; ++q) out[index(static_cast<int>(q) + 1)] = r[q];
}

double upwind(const Grid& grid, const double* v, std::size_t k, const Vec& b) {
    const double h = grid.spacing();
    double r = 0.0;
    for (int d = 0; d < grid.dim; ++d) {
        const std::size_t stride = (grid.dim == 2 && d == 0) ? static_cast<std::size_t>(grid.nodes_per_axis) : 1;
        if (b[d] > 0.0)
            r += b[d] * (v[k + stride] - v[k]) / h;
        else if (b[d] < 0.0)
            r += b[d] * (v[k] - v[k - stride]) / h;
    }
    return r;
}

double mixed_derivative(const Grid& grid, const double* v, std::size_t k) {
    const std::size_t n = static_cast<std::size_t>(grid.nodes_per_axis);
    const double h = grid.spacing();
    return (v[k + n + 1] - v[k + n - 1] - v[k - n + 1] + v[k - n - 1]) / (4.0 * h * h);
}

double second_difference(const Grid& grid, const double* v, std::size_t k, int d) {
    const std::size_t stride = (grid.dim == 2 && d == 0) ? static_cast<std::size_t>(grid.nodes_per_axis) : 1;
    const double h = grid.spacing();
    return (v[k + stride] - 2.0 * v[k] + v[k - stride]) / (h * h);
}

std::vector<Mat> diffusion_level(const Grid& grid, const DiffusionMatrixField& diffusion, int level, int workers) {
    const std::size_t nodes = grid.node_count();
    std::vector<Mat> a(nodes);
    const double t = grid.horizon - grid.s(level);
    parallel_for(nodes, workers, [&](std::size_t k) { a[k] = diffusion.a(t, grid.node(k)); });
    return a;
}

void check_cfl(const Grid& grid, std::span<const Vec> drift) {
    const std::size_t nodes = grid.node_count();
    const double ratio = grid.dt() / grid.spacing();
    double worst = -1.0;
    int worst_level = 0;
    std::size_t worst_node = 0;
    for (int l = 0; l < grid.time_steps; ++l) {
        for (std::size_t k = 0; k < nodes; ++k) {
            if (grid.on_boundary(k)) continue;
            const Vec& b = drift[l * nodes + k];
            double sum = 0.0;
            for (int d = 0; d < grid.dim; ++d) sum += std::abs(b[d]);
            const double c = ratio * sum;
            if (!(c <= worst) || std::isnan(c)) {
                if (std::isnan(c)) throw CflError("drift is NaN at " + where(grid, l, k));
                worst = c;
                worst_level = l;
                worst_node = k;
            }
        }
    }
    if (worst > 1.0 + 1e-12) {
        std::ostringstream os;
        os.precision(6);
        os << "CFL condition violated: dt*sum|b|/h = " << worst << " > 1 at " << where(grid, worst_level, worst_node)
           << "; increase time_steps";
        throw CflError(os.str());
    }
}

double sup_change(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double sup_change(const std::vector<Vec>& a, const std::vector<Vec>& b, int dim) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (int d = 0; d < dim; ++d) m = std::max(m, std::abs(a[i][d] - b[i][d]));
    return m;
}

struct Change {
    double value;
    double gradient;
};

Change field_change(const ValueField& a, const ValueField& b) {
    const int dim = a.grid().dim;
    Change c{0.0, 0.0};
    for (int i = 1; i <= 2; ++i) {
        c.value = std::max(c.value, sup_change(a.player(i).values, b.player(i).values));
        c.gradient = std::max(c.gradient, sup_change(a.player(i).gradients, b.player(i).gradients, dim));
    }
    return c;
}

bool is_affine(const GameSpec& spec) {
    return spec.structure == Structure::AffineBangBang || spec.structure == Structure::AffineUnbounded;
}

}  // namespace

ScalarField linear_parabolic_solve(const Grid& grid, const DiffusionMatrixField& diffusion,
                                   std::span<const Vec> drift, std::span<const double> source,
                                   std::span<const double> terminal, const LinearSolveOptions& options) {
    grid.check();
    if (diffusion.dim() != grid.dim) throw DomainError("diffusion dimension does not match the grid");
    const std::size_t nodes = grid.node_count();
    const std::size_t total = nodes * grid.levels();
    if (terminal.size() != nodes) throw DomainError("terminal data must have one value per node");
    if (drift.size() != total || source.size() != total)
        throw DomainError("drift and source must have one entry per (level, node)");
    check_cfl(grid, drift);

    const int n = grid.nodes_per_axis;
    const double dt = grid.dt();
    const double h2 = grid.spacing() * grid.spacing();

    ScalarField out;
    out.values.resize(total);
    std::copy(terminal.begin(), terminal.end(), out.values.begin());
    std::vector<double> rhs(nodes), work(nodes);
    std::vector<Mat> a_old = grid.dim == 2 ? diffusion_level(grid, diffusion, 0, options.workers) : std::vector<Mat>{};

    for (int l = 0; l < grid.time_steps; ++l) {
        const double* cur = out.values.data() + l * nodes;
        double* next = out.values.data() + (l + 1) * nodes;
        const std::vector<Mat> a_new = diffusion_level(grid, diffusion, l + 1, options.workers);

        for (std::size_t k = 0; k < nodes; ++k) {
            if (grid.on_boundary(k)) {
                rhs[k] = terminal[k];
                continue;
            }
            const std::size_t at = l * nodes + k;
            double r = cur[k] + dt * (upwind(grid, cur, k, drift[at]) + source[at]);
            if (grid.dim == 2) r += dt * 2.0 * a_old[k][0][1] * mixed_derivative(grid, cur, k);
            rhs[k] = r;
        }

        if (grid.dim == 1) {
            std::vector<double> coef(n);
            for (int j = 0; j < n; ++j) coef[j] = dt * a_new[j][0][0] / h2;
            implicit_line(n, [](int j) { return static_cast<std::size_t>(j); }, coef.data(), rhs.data(),
                          terminal.data(), next);
        } else {
            // Sweep along x1 for each interior x2 index, then along x2.
            for (int j = 0; j < n; j += n - 1)
                for (int i = 0; i < n; ++i) work[grid.index(i, j)] = terminal[grid.index(i, j)];
            parallel_for(static_cast<std::size_t>(n - 2), options.workers, [&](std::size_t q) {
                const int j = static_cast<int>(q) + 1;
                std::vector<double> coef(n);
                for (int i = 0; i < n; ++i) coef[i] = dt * a_new[grid.index(i, j)][0][0] / h2;
                implicit_line(n, [&](int i) { return grid.index(i, j); }, coef.data(), rhs.data(), terminal.data(),
                              work.data());
            });
            for (int i = 0; i < n; i += n - 1)
                for (int j = 0; j < n; ++j) next[grid.index(i, j)] = terminal[grid.index(i, j)];
            parallel_for(static_cast<std::size_t>(n - 2), options.workers, [&](std::size_t q) {
                const int i = static_cast<int>(q) + 1;
                std::vector<double> coef(n);
                for (int j = 0; j < n; ++j) coef[j] = dt * a_new[grid.index(i, j)][1][1] / h2;
                implicit_line(n, [&](int j) { return grid.index(i, j); }, coef.data(), work.data(), terminal.data(),
                              next);
            });
        }
        for (std::size_t k = 0; k < nodes; ++k)
            if (!std::isfinite(next[k])) throw SolveError("non-finite value at " + where(grid, l + 1, k));
        if (grid.dim == 2) a_old = a_new;
    }
    recompute_gradients(grid, out);
    return out;
}

ValueField initial_iterate(const GameSpec& spec, const Grid& grid) {
    grid.check();
    if (spec.dim != grid.dim) throw DomainError("spec dimension does not match the grid");
    const std::size_t nodes = grid.node_count();
    ScalarField f[2];
    for (int i = 0; i < 2; ++i) {
        f[i].values.resize(nodes * grid.levels());
        for (std::size_t k = 0; k < nodes; ++k) {
            const double g = spec.terminal(i + 1, grid.node(k));
            for (int l = 0; l < grid.levels(); ++l) f[i].values[l * nodes + k] = g;
        }
        recompute_gradients(grid, f[i]);
    }
    return ValueField(grid, std::move(f[0]), std::move(f[1]), 0.0);
}

ValueField picard_step(const GameSpec& spec, const ValueField& previous, const FeedbackResolver& resolver,
                       int workers) {
    const Grid& grid = previous.grid();
    const std::size_t nodes = grid.node_count();
    const std::size_t total = nodes * grid.levels();
    std::vector<Vec> drift(total, Vec{});
    std::vector<double> src1(total, 0.0), src2(total, 0.0);

    parallel_for(static_cast<std::size_t>(grid.time_steps), workers, [&](std::size_t lv) {
        const int l = static_cast<int>(lv);
        const double t = grid.horizon - grid.s(l);
        for (std::size_t k = 0; k < nodes; ++k) {
            if (grid.on_boundary(k)) continue;
            const std::size_t at = l * nodes + k;
            const Vec x = grid.node(k);
            ControlPair u;
            try {
                u = resolve_feedback(resolver, spec, t, x, previous.player(1).gradients[at],
                                     previous.player(2).gradients[at]);
            } catch (const Error& e) {
                throw SolveError("feedback resolution failed at " + where(grid, l, k) + ": " + e.what());
            }
            drift[at] = spec.drift(t, x, u.u1, u.u2);
            src1[at] = spec.running(1, t, x, u.u1, u.u2);
            src2[at] = spec.running(2, t, x, u.u1, u.u2);
        }
    });

    const DiffusionMatrixField diffusion(spec.dim, spec.sigma);
    std::vector<double> g1(nodes), g2(nodes);
    for (std::size_t k = 0; k < nodes; ++k) {
        g1[k] = previous.player(1).values[k];
        g2[k] = previous.player(2).values[k];
    }
    const LinearSolveOptions lin{workers};
    ScalarField v1 = linear_parabolic_solve(grid, diffusion, drift, src1, g1, lin);
    ScalarField v2 = linear_parabolic_solve(grid, diffusion, drift, src2, g2, lin);
    return ValueField(grid, std::move(v1), std::move(v2), resolver.smoothing_epsilon);
}

std::pair<ValueField, SolveDiagnostics> picard_solve(const GameSpec& spec, const Grid& grid,
                                                     const FeedbackResolver& resolver, const PicardOptions& options) {
    if (!(options.tol > 0.0)) throw DomainError("Picard tolerance must be positive");
    if (options.max_iter < 1) throw DomainError("max_iter must be >= 1");
    check_compatible(resolver, spec);
    for (double e : options.epsilon_schedule)
        if (!(e >= 0.0)) throw DomainError("epsilon schedule entries must be >= 0");

    std::vector<double> schedule;
    if (is_affine(spec) && !options.epsilon_schedule.empty())
        schedule = options.epsilon_schedule;
    else
        schedule = {resolver.smoothing_epsilon};

    SolveDiagnostics diag;
    ValueField current = initial_iterate(spec, grid);
    ValueField stage_result;
    bool have_stage = false;

    for (double eps : schedule) {
        const FeedbackResolver r = resolver.with_epsilon(eps);
        diag.epsilon_schedule.push_back(eps);
        bool converged = false;
        int iters = 0;
        while (iters < options.max_iter) {
            ValueField next = picard_step(spec, current, r, options.workers);
            ++iters;
            const Change c = field_change(next, current);
            diag.picard.push_back({eps, c.value, c.gradient});
            current = std::move(next);
            if (std::max(c.value, c.gradient) <= options.tol) {
                converged = true;
                break;
            }
        }
        current.set_smoothing_epsilon(eps);
        diag.stage_iterations.push_back(iters);
        diag.iterations_used += iters;
        diag.converged = converged;
        if (have_stage) {
            const Change c = field_change(current, stage_result);
            const double d = std::max(c.value, c.gradient);
            diag.stage_differences.push_back(d);
            stage_result = current;
            if (d < 10.0 * options.tol) break;
        } else {
            stage_result = current;
            have_stage = true;
        }
        if (!converged) break;
    }

    diag.max_principle_margin =
        spec.bounded_data() ? max_principle_check(spec, current) : std::numeric_limits<double>::quiet_NaN();
    diag.residual = residual(spec, current, resolver.with_epsilon(current.smoothing_epsilon()), options.workers);
    return {std::move(current), std::move(diag)};
}

std::pair<ValueField, StabilityReport> expanding_domain_solve(const GameSpec& spec, const Grid& base_grid,
                                                              const std::vector<double>& radii,
                                                              const FeedbackResolver& resolver,
                                                              const PicardOptions& options, double core_radius) {
    base_grid.check();
    if (radii.empty()) throw DomainError("radius list is empty");
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (!(radii[i] > radii[i - 1])) throw DomainError("radii must be strictly increasing");
    const double h = base_grid.spacing();
    StabilityReport report;
    report.radii = radii;
    report.core_radius = core_radius > 0.0 ? core_radius : radii.front() / 2.0;
    if (report.core_radius > radii.front()) throw DomainError("core radius exceeds the smallest radius");

    std::vector<int> halves;
    for (double R : radii) {
        const double q = R / h;
        const long half = std::lround(q);
        if (!(R > 0.0) || std::abs(q - static_cast<double>(half)) > 1e-9 * std::max(1.0, q))
            throw DomainError("radius " + std::to_string(R) + " is not a multiple of the grid spacing " +
                              std::to_string(h));
        halves.push_back(static_cast<int>(half));
        Grid g = base_grid;
        g.radius = R;
        g.nodes_per_axis = 2 * static_cast<int>(half) + 1;
        auto [field, diag] = picard_solve(spec, g, resolver, options);
        report.fields.push_back(std::move(field));
        report.diagnostics.push_back(std::move(diag));
    }

    const int core = static_cast<int>(std::floor(report.core_radius / h + 1e-9));
    for (std::size_t r = 0; r + 1 < radii.size(); ++r) {
        const ValueField& A = report.fields[r];
        const ValueField& B = report.fields[r + 1];
        std::array<double, 2> diff{0.0, 0.0};
        for (int l = 0; l < base_grid.levels(); ++l) {
            for (int m1 = -core; m1 <= core; ++m1) {
                for (int m2 = (spec.dim == 2 ? -core : 0); m2 <= (spec.dim == 2 ? core : 0); ++m2) {
                    const std::size_t ka = A.grid().index(halves[r] + m1, spec.dim == 2 ? halves[r] + m2 : 0);
                    const std::size_t kb =
                        B.grid().index(halves[r + 1] + m1, spec.dim == 2 ? halves[r + 1] + m2 : 0);
                    for (int i = 0; i < 2; ++i)
                        diff[i] = std::max(diff[i], std::abs(A.player(i + 1).at(A.grid(), l, ka) -
                                                             B.player(i + 1).at(B.grid(), l, kb)));
                }
            }
        }
        report.core_differences.push_back(diff);
    }
    ValueField last = report.fields.back();
    return {std::move(last), std::move(report)};
}

ResidualStats residual(const GameSpec& spec, const ValueField& field, const FeedbackResolver& resolver,
                       int workers) {
    const Grid& grid = field.grid();
    const std::size_t nodes = grid.node_count();
    const double dt = grid.dt();
    const bool affine = is_affine(spec);
    const DiffusionMatrixField diffusion(spec.dim, spec.sigma);

    ResidualStats stats;
    std::array<double, 2> band{0.0, 0.0};
    if (affine) {
        // sup |f_i| over nodes and levels, f_i = f(u_i = 1) - f(u_i = 0).
        for (int l = 0; l < grid.levels(); ++l) {
            const double t = grid.horizon - grid.s(l);
            for (std::size_t k = 0; k < nodes; ++k) {
                const Vec x = grid.node(k);
                const Vec f00 = spec.drift(t, x, 0.0, 0.0);
                const Vec f10 = spec.drift(t, x, 1.0, 0.0);
                const Vec f01 = spec.drift(t, x, 0.0, 1.0);
                Vec d1{}, d2{};
                for (int d = 0; d < grid.dim; ++d) {
                    d1[d] = f10[d] - f00[d];
                    d2[d] = f01[d] - f00[d];
                }
                band[0] = std::max(band[0], norm2(d1, grid.dim));
                band[1] = std::max(band[1], norm2(d2, grid.dim));
            }
        }
        const double root_h = std::sqrt(grid.spacing());
        band[0] *= root_h;
        band[1] *= root_h;
        stats.switching_band = std::max(band[0], band[1]);
    }

    struct Slot {
        double sup = 0.0;
        double sum = 0.0;
        std::size_t evaluated = 0;
        std::size_t excluded = 0;
    };
    std::vector<Slot> slots(static_cast<std::size_t>(grid.time_steps));
    parallel_for(slots.size(), workers, [&](std::size_t lv) {
        const int l = static_cast<int>(lv) + 1;  // residual at level l uses level l - 1
        const double t_old = grid.horizon - grid.s(l - 1);
        const double t_new = grid.horizon - grid.s(l);
        Slot& slot = slots[lv];
        for (std::size_t k = 0; k < nodes; ++k) {
            if (grid.on_boundary(k)) continue;
            const Vec x = grid.node(k);
            const std::size_t old_at = (l - 1) * nodes + k;
            const Vec& p1 = field.player(1).gradients[old_at];
            const Vec& p2 = field.player(2).gradients[old_at];
            const ControlPair u = resolve_feedback(resolver, spec, t_old, x, p1, p2);
            if (affine) {
                const double s1 = switching_argument(spec, 1, t_old, x, p1, u.u2);
                const double s2 = switching_argument(spec, 2, t_old, x, p2, u.u1);
                if (std::abs(s1) < band[0] || std::abs(s2) < band[1]) {
                    slot.excluded += 2;
                    continue;
                }
            }
            const Vec b = spec.drift(t_old, x, u.u1, u.u2);
            const Mat a_new = diffusion.a(t_new, x);
            const Mat a_old = diffusion.a(t_old, x);
            for (int i = 1; i <= 2; ++i) {
                const double* vo = field.player(i).values.data() + (l - 1) * nodes;
                const double* vn = field.player(i).values.data() + l * nodes;
                double lhs = (vn[k] - vo[k]) / dt;
                for (int d = 0; d < grid.dim; ++d) lhs -= a_new[d][d] * second_difference(grid, vn, k, d);
                if (grid.dim == 2) lhs -= 2.0 * a_old[0][1] * mixed_derivative(grid, vo, k);
                const double rhs = upwind(grid, vo, k, b) + spec.running(i, t_old, x, u.u1, u.u2);
                const double r = std::abs(lhs - rhs);
                slot.sup = std::max(slot.sup, r);
                slot.sum += r;
                ++slot.evaluated;
            }
        }
    });
    double sum = 0.0;
    for (const Slot& s : slots) {
        stats.sup = std::max(stats.sup, s.sup);
        sum += s.sum;
        stats.evaluated += s.evaluated;
        stats.excluded += s.excluded;
    }
    stats.mean_abs = stats.evaluated > 0 ? sum / static_cast<double>(stats.evaluated) : 0.0;
    return stats;
}

double max_principle_check(const GameSpec& spec, const ValueField& field) {
    if (!spec.bounded_data())
        throw DomainError("maximum principle bound needs bounded data; use growth_check for affine-unbounded specs");
    const Grid& grid = field.grid();
    const std::size_t nodes = grid.node_count();
    const auto grid1 = spec.control_set[0].grid();
    const auto grid2 = spec.control_set[1].grid();
    const bool separated = spec.structure != Structure::General;

    double margin = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 2; ++i) {
        double sup_g = 0.0, sup_h = 0.0, sup_v = 0.0;
        for (std::size_t k = 0; k < nodes; ++k) sup_g = std::max(sup_g, std::abs(spec.terminal(i, grid.node(k))));
        for (int l = 0; l < grid.levels(); ++l) {
            const double t = grid.horizon - grid.s(l);
            for (std::size_t k = 0; k < nodes; ++k) {
                const Vec x = grid.node(k);
                if (separated) {
                    // h_i depends on u_i only.
                    const auto& own = i == 1 ? grid1 : grid2;
                    for (double u : own) {
                        const double h = i == 1 ? spec.running(1, t, x, u, grid2.front())
                                                : spec.running(2, t, x, grid1.front(), u);
                        sup_h = std::max(sup_h, std::abs(h));
                    }
                } else {
                    for (double a : grid1)
                        for (double b : grid2) sup_h = std::max(sup_h, std::abs(spec.running(i, t, x, a, b)));
                }
            }
        }
        for (double v : field.player(i).values) sup_v = std::max(sup_v, std::abs(v));
        margin = std::min(margin, sup_g + grid.horizon * sup_h - sup_v);
    }
    return margin;
}

GrowthFit growth_check(const GameSpec& spec, const ValueField& field) {
    const Grid& grid = field.grid();
    const std::size_t nodes = grid.node_count();
    GrowthFit fit;
    for (std::size_t k = 0; k < nodes; ++k) {
        const double denom = 1.0 + std::pow(norm2(grid.node(k), grid.dim), spec.growth_exponent);
        for (int l = 0; l < grid.levels(); ++l) {
            fit.c1 = std::max(fit.c1, std::abs(field.player(1).at(grid, l, k)) / denom);
            fit.c2 = std::max(fit.c2, std::abs(field.player(2).at(grid, l, k)) / denom);
        }
    }
    return fit;
}

}  // namespace nzsg
