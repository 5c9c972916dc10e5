#pragma once

#include <cstdint>
#include <vector>

#include "nzsg/game.hpp"
#include "nzsg/heaviside.hpp"
#include "nzsg/types.hpp"

namespace nzsg {

/// H_i(t, x, p, u1, u2) = p . f(t, x, u1, u2) + h_i(t, x, u1, u2).
/// `player` is 1 or 2. Throws DomainError for a control outside its set.
double hamiltonian(const GameSpec& spec, int player, double t, const Vec& x, const Vec& p, double u1, double u2);

/// Same value without the control-membership check (hot loops that produce
/// controls from the sets themselves).
double hamiltonian_unchecked(const GameSpec& spec, int player, double t, const Vec& x, const Vec& p, double u1,
                             double u2);

enum class FeedbackMode { ClosedForm, SeparatedArgmax, BestResponse };

/// Strategy for picking a control pair that satisfies the generalized Isaacs
/// condition at a point (t, x, p1, p2).
///
/// * ClosedForm evaluates the spec's stored formulas; Heaviside switches in
///   them receive `smoothing_epsilon`.
/// * SeparatedArgmax maximises each player's Hamiltonian over its control
///   grid independently (valid when drift and running payoffs separate).
/// * BestResponse alternates grid argmaxes from the set midpoints, player 1
///   first, until a full round changes nothing.
///
/// Grid argmax ties resolve to the lowest grid index.
struct FeedbackResolver {
    FeedbackMode mode = FeedbackMode::ClosedForm;
    double smoothing_epsilon = 0.0;
    int grid_points = 33;
    int max_br_iterations = 64;

    FeedbackResolver with_epsilon(double eps) const {
        FeedbackResolver r = *this;
        r.smoothing_epsilon = eps;
        return r;
    }

    /// ClosedForm when the spec has formulas, SeparatedArgmax for separated
    /// structures, BestResponse otherwise.
    static FeedbackResolver default_for(const GameSpec& spec);
};

/// Throws DomainError when the resolver cannot be used with this spec.
void check_compatible(const FeedbackResolver& resolver, const GameSpec& spec);

/// Resolved control pair; always inside U1 x U2. Throws NoStaticNashError
/// from BestResponse mode when no fixed point is reached.
ControlPair resolve_feedback(const FeedbackResolver& resolver, const GameSpec& spec, double t, const Vec& x,
                             const Vec& p1, const Vec& p2);

/// Switching argument of an affine player: H_i(u_i = 1) - H_i(u_i = 0) with
/// the other control held at `other`. Equals p . f_i + h_i.
double switching_argument(const GameSpec& spec, int player, double t, const Vec& x, const Vec& p, double other);

struct GicPoint {
    double t;
    Vec x;
    Vec p1;
    Vec p2;
    ControlPair feedback;
    int player;
    double deviation;
    double violation;
};

struct GicOptions {
    int sample_count = 10000;
    std::uint64_t seed = 1;
    double x_radius = 5.0;
    double p_radius = 5.0;
    std::size_t max_recorded = 16;
};

/// worst_violation_i = min over samples and grid deviations u of
/// H_i(feedback pair) - H_i(unilateral deviation to u). Nonnegative values
/// certify the condition on the sample set.
struct GicReport {
    int samples = 0;
    double worst_violation_1 = 0.0;
    double worst_violation_2 = 0.0;
    std::vector<GicPoint> violating_points;  // capped; violation < -1e-12
};

/// Resolver failures propagate as SolveError naming the sample.
GicReport check_gic(const FeedbackResolver& resolver, const GameSpec& spec, const GicOptions& options = {});

}  // namespace nzsg
