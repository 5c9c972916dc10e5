#include "nzsg/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nzsg/error.hpp"

namespace nzsg {

std::string to_string(const Vec& v, int dim) {
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (int d = 0; d < dim; ++d) {
        if (d) os << ", ";
        os << v[d];
    }
    os << ')';
    return os.str();
}

ControlSet ControlSet::interval(double lo, double hi, int points) {
    ControlSet c;
    c.kind = Kind::Interval;
    c.lower = lo;
    c.upper = hi;
    c.grid_points = points;
    c.check();
    return c;
}

double ControlSet::point(int k) const {
    if (k <= 0) return lower;
    if (k >= grid_points - 1) return upper;
    return lower + (upper - lower) * static_cast<double>(k) / static_cast<double>(grid_points - 1);
}

std::vector<double> ControlSet::grid() const {
    std::vector<double> g(static_cast<std::size_t>(grid_points));
    for (int k = 0; k < grid_points; ++k) g[k] = point(k);
    return g;
}

double ControlSet::clamp(double u) const {
    if (kind == Kind::Interval) return std::clamp(u, lower, upper);
    int best = 0;
    double dist = std::numeric_limits<double>::infinity();
    for (int k = 0; k < grid_points; ++k) {
        const double d = std::abs(point(k) - u);
        if (d < dist) {
            dist = d;
            best = k;
        }
    }
    return point(best);
}

bool ControlSet::contains(double u, double tol) const {
    if (!(u >= lower - tol && u <= upper + tol)) return false;
    if (kind == Kind::Interval) return true;
    for (int k = 0; k < grid_points; ++k)
        if (std::abs(point(k) - u) <= tol) return true;
    return false;
}

void ControlSet::check() const {
    if (!(lower <= upper)) throw DomainError("control set lower bound exceeds upper bound");
    if (grid_points < 2) throw DomainError("control set needs at least 2 grid points");
}

std::string_view to_string(Structure s) {
    switch (s) {
        case Structure::General: return "general";
        case Structure::Separated: return "separated";
        case Structure::AffineBangBang: return "affine-bang-bang";
        case Structure::AffineUnbounded: return "affine-unbounded";
    }
    return "general";
}

Structure parse_structure(std::string_view name) {
    if (name == "general") return Structure::General;
    if (name == "separated") return Structure::Separated;
    if (name == "affine-bang-bang") return Structure::AffineBangBang;
    if (name == "affine-unbounded") return Structure::AffineUnbounded;
    throw DomainError("unknown structure '" + std::string(name) +
                      "' (expected general, separated, affine-bang-bang or affine-unbounded)");
}

DiffusionMatrixField::DiffusionMatrixField(int dim, SigmaFn sigma) : dim_(dim), sigma_(std::move(sigma)) {
    if (dim < 1 || dim > kMaxDim) throw DomainError("unsupported dimension " + std::to_string(dim));
}

Mat DiffusionMatrixField::a(double t, const Vec& x) const {
    const Mat s = sigma_(t, x);
    Mat out{};
    for (int h = 0; h < dim_; ++h)
        for (int k = 0; k < dim_; ++k) {
            double acc = 0.0;
            for (int j = 0; j < dim_; ++j) acc += s[h][j] * s[k][j];
            out[h][k] = 0.5 * acc;
        }
    // exact symmetry regardless of summation order
    if (dim_ == 2) out[1][0] = out[0][1];
    return out;
}

DiffusionMatrixField::Bounds DiffusionMatrixField::eigen_range(const Mat& a, int dim) {
    if (dim == 1) return {a[0][0], a[0][0]};
    const double tr = a[0][0] + a[1][1];
    const double diff = a[0][0] - a[1][1];
    const double disc = std::sqrt(diff * diff / 4.0 + a[0][1] * a[1][0]);
    return {tr / 2.0 - disc, tr / 2.0 + disc};
}

DiffusionMatrixField::Bounds DiffusionMatrixField::measure(std::span<const std::pair<double, Vec>> points) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& [t, x] : points) {
        const auto b = eigen_range(a(t, x), dim_);
        lo = std::min(lo, b.lower);
        hi = std::max(hi, b.upper);
    }
    lower_ = lo;
    upper_ = hi;
    return {lo, hi};
}

}  // namespace nzsg
