#pragma once

#include <cstddef>
#include <vector>

#include "nzsg/types.hpp"

namespace nzsg {

/// Uniform space-time grid on [-R, R]^N x [0, T]. Nodes are stored row-major
/// with x1 the slowest axis; level k sits at inverted time s = k * dt.
struct Grid {
    int dim = 1;
    double radius = 1.0;
    int nodes_per_axis = 3;
    int time_steps = 1;
    double horizon = 1.0;

    /// Throws DomainError unless dim in {1, 2}, radius > 0, nodes_per_axis is
    /// odd and >= 3, time_steps >= 1 and horizon > 0.
    void check() const;

    double spacing() const { return 2.0 * radius / (nodes_per_axis - 1); }
    double dt() const { return horizon / time_steps; }
    int levels() const { return time_steps + 1; }
    std::size_t node_count() const {
        return dim == 1 ? static_cast<std::size_t>(nodes_per_axis)
                        : static_cast<std::size_t>(nodes_per_axis) * nodes_per_axis;
    }
    double s(int level) const { return level == time_steps ? horizon : level * dt(); }
    /// Coordinate of index j along any axis; exact at j = 0, (n-1)/2, n-1.
    double coord(int j) const;
    Vec node(std::size_t index) const;
    /// Per-axis indices of a node.
    std::array<int, kMaxDim> axes(std::size_t index) const;
    std::size_t index(int i, int j = 0) const {
        return dim == 1 ? static_cast<std::size_t>(i) : static_cast<std::size_t>(i) * nodes_per_axis + j;
    }
    bool on_boundary(std::size_t index) const;
};

/// Values and gradients of one scalar function on every (level, node).
struct ScalarField {
    std::vector<double> values;     // level-major: values[level * nodes + node]
    std::vector<Vec> gradients;

    double at(const Grid& g, int level, std::size_t node) const { return values[level * g.node_count() + node]; }
    const Vec& grad(const Grid& g, int level, std::size_t node) const {
        return gradients[level * g.node_count() + node];
    }
};

/// Finite-difference gradient of one level: central at interior nodes,
/// first-order one-sided on the boundary.
void level_gradient(const Grid& grid, const double* values, Vec* out);

/// Recomputes all gradients of `field` from its values.
void recompute_gradients(const Grid& grid, ScalarField& field);

/// Pair of value functions in inverted time s, V_i(0, .) = g_i.
///
/// The physical-time accessors payoff() and payoff_gradient() read
/// w_i(t, x) = V_i(T - t, x); nothing else converts between the two clocks.
class ValueField {
public:
    ValueField() = default;
    ValueField(Grid grid, ScalarField v1, ScalarField v2, double smoothing_epsilon = 0.0);

    const Grid& grid() const { return grid_; }
    const ScalarField& player(int i) const { return fields_[i - 1]; }
    ScalarField& player(int i) { return fields_[i - 1]; }
    double smoothing_epsilon() const { return smoothing_epsilon_; }
    void set_smoothing_epsilon(double eps) { smoothing_epsilon_ = eps; }

    /// Multilinear in space, linear in s. Points outside the box are clamped
    /// to it; `outside` (if given) is set when clamping happened.
    double value(int player, double s, const Vec& x, bool* outside = nullptr) const;
    Vec gradient(int player, double s, const Vec& x, bool* outside = nullptr) const;

    double payoff(int player, double t, const Vec& x, bool* outside = nullptr) const {
        return value(player, grid_.horizon - t, x, outside);
    }
    Vec payoff_gradient(int player, double t, const Vec& x, bool* outside = nullptr) const {
        return gradient(player, grid_.horizon - t, x, outside);
    }

private:
    struct Stencil {
        int level[2];
        double level_weight[2];
        std::size_t node[4];
        double node_weight[4];
        int count;
    };
    Stencil stencil(double s, const Vec& x, bool* outside) const;

    Grid grid_;
    ScalarField fields_[2];
    double smoothing_epsilon_ = 0.0;
};

}  // namespace nzsg
