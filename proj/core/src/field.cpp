#include "nzsg/field.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nzsg/error.hpp"

namespace nzsg {

void Grid::check() const {
    if (dim != 1 && dim != 2) throw DomainError("grid dimension must be 1 or 2, got " + std::to_string(dim));
    if (!(radius > 0.0) || !std::isfinite(radius)) throw DomainError("grid radius must be positive");
    if (nodes_per_axis < 3 || nodes_per_axis % 2 == 0)
        throw DomainError("nodes_per_axis must be odd and >= 3, got " + std::to_string(nodes_per_axis));
    if (time_steps < 1) throw DomainError("time_steps must be >= 1");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("horizon must be positive");
}

double Grid::coord(int j) const {
    const int half = (nodes_per_axis - 1) / 2;
    if (j == half) return 0.0;
    if (j == 0) return -radius;
    if (j == nodes_per_axis - 1) return radius;
    return radius * static_cast<double>(j - half) / half;
}

std::array<int, kMaxDim> Grid::axes(std::size_t index) const {
    if (dim == 1) return {static_cast<int>(index), 0};
    return {static_cast<int>(index / nodes_per_axis), static_cast<int>(index % nodes_per_axis)};
}

Vec Grid::node(std::size_t index) const {
    const auto a = axes(index);
    Vec x{};
    for (int d = 0; d < dim; ++d) x[d] = coord(a[d]);
    return x;
}

bool Grid::on_boundary(std::size_t index) const {
    const auto a = axes(index);
    for (int d = 0; d < dim; ++d)
        if (a[d] == 0 || a[d] == nodes_per_axis - 1) return true;
    return false;
}

void level_gradient(const Grid& grid, const double* v, Vec* out) {
    const int n = grid.nodes_per_axis;
    const double h = grid.spacing();
    const std::size_t total = grid.node_count();
    for (std::size_t k = 0; k < total; ++k) {
        const auto a = grid.axes(k);
        Vec g{};
        for (int d = 0; d < grid.dim; ++d) {
            const std::size_t stride = (grid.dim == 2 && d == 0) ? static_cast<std::size_t>(n) : 1;
            const int j = a[d];
            if (j == 0)
                g[d] = (v[k + stride] - v[k]) / h;
            else if (j == n - 1)
                g[d] = (v[k] - v[k - stride]) / h;
            else
                g[d] = (v[k + stride] - v[k - stride]) / (2.0 * h);
        }
        out[k] = g;
    }
}

void recompute_gradients(const Grid& grid, ScalarField& field) {
    const std::size_t nodes = grid.node_count();
    field.gradients.assign(field.values.size(), Vec{});
    for (int l = 0; l < grid.levels(); ++l)
        level_gradient(grid, field.values.data() + l * nodes, field.gradients.data() + l * nodes);
}

ValueField::ValueField(Grid grid, ScalarField v1, ScalarField v2, double smoothing_epsilon)
    : grid_(grid), fields_{std::move(v1), std::move(v2)}, smoothing_epsilon_(smoothing_epsilon) {
    grid_.check();
    const std::size_t expected = grid_.node_count() * grid_.levels();
    for (const auto& f : fields_) {
        if (f.values.size() != expected || f.gradients.size() != expected)
            throw DomainError("field size does not match its grid");
    }
}

namespace {

// Fractional grid positions within rounding of a node read that node exactly.
double snap(double p) {
    const double r = std::round(p);
    return std::abs(p - r) <= 1e-9 * std::max(1.0, std::abs(r)) ? r : p;
}

}  // namespace

ValueField::Stencil ValueField::stencil(double s, const Vec& x, bool* outside) const {
    Stencil st{};
    const double T = grid_.horizon;
    const double sc = std::clamp(s, 0.0, T);
    const double pos = snap(sc / grid_.dt());
    int k0 = std::min(static_cast<int>(std::floor(pos)), grid_.time_steps - 1);
    k0 = std::max(k0, 0);
    const double wt = std::clamp(pos - k0, 0.0, 1.0);
    st.level[0] = k0;
    st.level[1] = k0 + 1;
    st.level_weight[0] = 1.0 - wt;
    st.level_weight[1] = wt;

    const double R = grid_.radius;
    const double h = grid_.spacing();
    const int n = grid_.nodes_per_axis;
    bool out = false;
    int i0[kMaxDim] = {0, 0};
    double w[kMaxDim] = {0.0, 0.0};
    for (int d = 0; d < grid_.dim; ++d) {
        double xd = x[d];
        if (!(std::abs(xd) <= R)) {
            out = true;
            xd = std::clamp(std::isnan(xd) ? 0.0 : xd, -R, R);
        }
        const double p = snap((xd + R) / h);
        int i = std::min(static_cast<int>(std::floor(p)), n - 2);
        i = std::max(i, 0);
        i0[d] = i;
        w[d] = std::clamp(p - i, 0.0, 1.0);
    }
    if (outside) *outside = out;
    if (grid_.dim == 1) {
        st.count = 2;
        st.node[0] = grid_.index(i0[0]);
        st.node[1] = grid_.index(i0[0] + 1);
        st.node_weight[0] = 1.0 - w[0];
        st.node_weight[1] = w[0];
    } else {
        st.count = 4;
        st.node[0] = grid_.index(i0[0], i0[1]);
        st.node[1] = grid_.index(i0[0], i0[1] + 1);
        st.node[2] = grid_.index(i0[0] + 1, i0[1]);
        st.node[3] = grid_.index(i0[0] + 1, i0[1] + 1);
        st.node_weight[0] = (1.0 - w[0]) * (1.0 - w[1]);
        st.node_weight[1] = (1.0 - w[0]) * w[1];
        st.node_weight[2] = w[0] * (1.0 - w[1]);
        st.node_weight[3] = w[0] * w[1];
    }
    return st;
}

double ValueField::value(int player, double s, const Vec& x, bool* outside) const {
    const Stencil st = stencil(s, x, outside);
    const ScalarField& f = fields_[player - 1];
    double r = 0.0;
    for (int l = 0; l < 2; ++l) {
        if (st.level_weight[l] == 0.0) continue;
        double v = 0.0;
        for (int c = 0; c < st.count; ++c) v += st.node_weight[c] * f.at(grid_, st.level[l], st.node[c]);
        r += st.level_weight[l] * v;
    }
    return r;
}

Vec ValueField::gradient(int player, double s, const Vec& x, bool* outside) const {
    const Stencil st = stencil(s, x, outside);
    const ScalarField& f = fields_[player - 1];
    Vec r{};
    for (int l = 0; l < 2; ++l) {
        if (st.level_weight[l] == 0.0) continue;
        for (int c = 0; c < st.count; ++c) {
            const Vec& g = f.grad(grid_, st.level[l], st.node[c]);
            const double w = st.level_weight[l] * st.node_weight[c];
            for (int d = 0; d < grid_.dim; ++d) r[d] += w * g[d];
        }
    }
    return r;
}

}  // namespace nzsg
