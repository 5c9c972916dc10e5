#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nzsg/types.hpp"

namespace nzsg {

/// Compact control set of one player. Controls are scalar.
struct ControlSet {
    enum class Kind { Interval, FiniteGrid };

    Kind kind = Kind::Interval;
    double lower = 0.0;
    double upper = 1.0;
    /// Points used to discretise the set for brute-force argmax; for
    /// FiniteGrid these points are the set itself. Endpoints always included.
    int grid_points = 33;

    static ControlSet interval(double lo, double hi, int points = 33);

    double point(int k) const;
    std::vector<double> grid() const;
    double midpoint() const { return point((grid_points - 1) / 2); }
    double clamp(double u) const;
    bool contains(double u, double tol = 1e-12) const;
    /// Throws DomainError unless lower <= upper and grid_points >= 2.
    void check() const;
};

enum class Structure { General, Separated, AffineBangBang, AffineUnbounded };

std::string_view to_string(Structure s);
/// Parses "general", "separated", "affine-bang-bang", "affine-unbounded".
Structure parse_structure(std::string_view name);

using SigmaFn = std::function<Mat(double t, const Vec& x)>;
using DriftFn = std::function<Vec(double t, const Vec& x, double u1, double u2)>;
using PayoffFn = std::function<double(double t, const Vec& x, double u1, double u2)>;
using TerminalFn = std::function<double(const Vec& x)>;
/// Closed-form feedback of one player: (t, x, p1, p2, eps) -> control. `eps`
/// is the resolver's smoothing width, routed into any Heaviside switch.
using FeedbackFn = std::function<double(double t, const Vec& x, const Vec& p1, const Vec& p2, double eps)>;

struct ClosedFormFeedback {
    FeedbackFn player1;
    FeedbackFn player2;
};

/// Complete description of a two-player game
///
///     dX = f(t, X, u1, u2) dt + sigma(t, X) dB,   X_0 = x0,
///     J_i = E[ int_0^T h_i(t, X, u1, u2) dt + g_i(X_T) ].
///
/// Immutable after construction; coefficient callables must be pure.
struct GameSpec {
    std::string name;
    std::string description;
    int dim = 1;
    double horizon = 1.0;
    SigmaFn sigma;
    DriftFn drift;
    std::array<PayoffFn, 2> running_payoff;
    std::array<TerminalFn, 2> terminal_payoff;
    std::array<ControlSet, 2> control_set;
    Structure structure = Structure::General;
    double growth_exponent = 1.0;
    std::optional<ClosedFormFeedback> feedback_closed_form;

    /// player is 1 or 2.
    double running(int player, double t, const Vec& x, double u1, double u2) const {
        return running_payoff[player - 1](t, x, u1, u2);
    }
    double terminal(int player, const Vec& x) const { return terminal_payoff[player - 1](x); }
    const ControlSet& controls(int player) const { return control_set[player - 1]; }
    bool bounded_data() const { return structure != Structure::AffineUnbounded; }
};

/// Diffusion matrix a = 1/2 sigma sigma^T, always derived from sigma.
class DiffusionMatrixField {
public:
    DiffusionMatrixField(int dim, SigmaFn sigma);

    int dim() const { return dim_; }
    Mat a(double t, const Vec& x) const;

    /// Smallest and largest eigenvalue of a over the given points; also stored
    /// as ellipticity_lower() / ellipticity_upper().
    struct Bounds {
        double lower;
        double upper;
    };
    Bounds measure(std::span<const std::pair<double, Vec>> points);
    double ellipticity_lower() const { return lower_; }
    double ellipticity_upper() const { return upper_; }

    /// Eigenvalue range of a symmetric matrix (dim <= 2).
    static Bounds eigen_range(const Mat& a, int dim);

private:
    int dim_;
    SigmaFn sigma_;
    double lower_ = 0.0;
    double upper_ = 0.0;
};

}  // namespace nzsg
