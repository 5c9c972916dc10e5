#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "nzsg/field.hpp"
#include "nzsg/game.hpp"
#include "nzsg/hamiltonian.hpp"

namespace nzsg {

struct LinearSolveOptions {
    int workers = 1;
};

/// Solves  dV/ds - sum a_hk d2V/dx_h dx_k = b . grad V + c  on the grid,
/// V(0, .) = terminal, V = terminal on the box boundary at every level.
///
/// Backward Euler in s for the diffusion (Thomas solve in 1D, x1-then-x2
/// implicit sweeps in 2D), explicit first-order upwind advection and explicit
/// source taken at the old level, explicit central mixed derivative. The
/// diffusion at level k uses a(T - s_k, x).
///
/// `drift` and `source` hold one entry per (level, node), level-major; only
/// levels 0..time_steps-1 and interior nodes are read. Throws CflError when
/// dt * sum_d |b_d| / h > 1 anywhere, naming the worst node, and SolveError on
/// a singular line system.
ScalarField linear_parabolic_solve(const Grid& grid, const DiffusionMatrixField& diffusion,
                                   std::span<const Vec> drift, std::span<const double> source,
                                   std::span<const double> terminal, const LinearSolveOptions& options = {});

struct PicardOptions {
    double tol = 1e-6;
    int max_iter = 100;
    /// Smoothing widths for bang-bang structures, largest first. Empty means a
    /// single stage at the resolver's own width.
    std::vector<double> epsilon_schedule;
    int workers = 1;
};

struct PicardRecord {
    double epsilon;
    double value_change;     // sup |V^n - V^{n-1}| over both players
    double gradient_change;  // sup |grad V^n - grad V^{n-1}|
};

struct ResidualStats {
    double sup = 0.0;
    double mean_abs = 0.0;
    std::size_t evaluated = 0;
    std::size_t excluded = 0;   // nodes inside the switching band
    double switching_band = 0.0;
};

struct SolveDiagnostics {
    std::vector<PicardRecord> picard;
    int iterations_used = 0;             // over all stages
    std::vector<int> stage_iterations;
    std::vector<double> epsilon_schedule;   // widths actually solved
    std::vector<double> stage_differences;  // between consecutive stages
    double max_principle_margin = 0.0;      // NaN for unbounded data
    ResidualStats residual;
    bool converged = false;
};

/// One outer iteration: feedbacks from `previous` gradients, frozen drift and
/// sources, two linear solves.
ValueField picard_step(const GameSpec& spec, const ValueField& previous, const FeedbackResolver& resolver,
                       int workers = 1);

/// The iterate V^0 = g (constant in s).
ValueField initial_iterate(const GameSpec& spec, const Grid& grid);

/// Picard iteration from V^0 = g until both value and gradient changes are
/// <= tol, running the epsilon schedule outermost with warm starts. Stages
/// stop early once two consecutive stages differ by < 10 tol. Returns the
/// last iterate with converged = false when max_iter is exhausted.
std::pair<ValueField, SolveDiagnostics> picard_solve(const GameSpec& spec, const Grid& grid,
                                                     const FeedbackResolver& resolver, const PicardOptions& options);

struct StabilityReport {
    std::vector<double> radii;
    double core_radius = 0.0;
    /// Entry k: sup over the core box and all levels of |V_i^{R_k} - V_i^{R_{k+1}}|.
    std::vector<std::array<double, 2>> core_differences;
    std::vector<SolveDiagnostics> diagnostics;
    std::vector<ValueField> fields;
};

/// Solves on [-R, R]^N for each radius with the spacing and time step of
/// `base_grid`; every R / h must be an integer. core_radius <= 0 selects
/// radii[0] / 2.
std::pair<ValueField, StabilityReport> expanding_domain_solve(const GameSpec& spec, const Grid& base_grid,
                                                              const std::vector<double>& radii,
                                                              const FeedbackResolver& resolver,
                                                              const PicardOptions& options, double core_radius = 0.0);

/// Discrete residual of the HJBI equations with the solver's own stencils at
/// interior nodes and levels 1..K. For affine structures, nodes where either
/// switching argument is below h^(1/2) * sup|f_i| are excluded and counted.
ResidualStats residual(const GameSpec& spec, const ValueField& field, const FeedbackResolver& resolver,
                       int workers = 1);

/// min_i (sup|g_i| + T sup|h_i| - sup|V_i|) over nodes, levels and control
/// grids. Throws DomainError for affine-unbounded specs.
double max_principle_check(const GameSpec& spec, const ValueField& field);

struct GrowthFit {
    double c1 = 0.0;
    double c2 = 0.0;
    double c() const { return c1 > c2 ? c1 : c2; }
};

/// C_i = max over nodes and levels of |V_i| / (1 + |x|^beta).
GrowthFit growth_check(const GameSpec& spec, const ValueField& field);

}  // namespace nzsg
