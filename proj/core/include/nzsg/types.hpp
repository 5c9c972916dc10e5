#pragma once

#include <array>
#include <cmath>
#include <string>

namespace nzsg {

/// Largest state dimension handled by the solvers.
inline constexpr int kMaxDim = 2;

/// State-space vector. Components beyond the game dimension are zero.
using Vec = std::array<double, kMaxDim>;
/// Row-major N x N matrix padded to kMaxDim.
using Mat = std::array<Vec, kMaxDim>;

struct ControlPair {
    double u1 = 0.0;
    double u2 = 0.0;

    friend bool operator==(const ControlPair&, const ControlPair&) = default;
};

inline double dot(const Vec& a, const Vec& b, int dim) {
    double s = 0.0;
    for (int d = 0; d < dim; ++d) s += a[d] * b[d];
    return s;
}

inline double norm_inf(const Vec& a, int dim) {
    double m = 0.0;
    for (int d = 0; d < dim; ++d) m = std::max(m, std::abs(a[d]));
    return m;
}

inline double norm2(const Vec& a, int dim) { return std::sqrt(dot(a, a, dim)); }

inline Vec mat_vec(const Mat& m, const Vec& v, int dim) {
    Vec r{};
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) r[i] += m[i][j] * v[j];
    return r;
}

inline double determinant(const Mat& m, int dim) {
    return dim == 1 ? m[0][0] : m[0][0] * m[1][1] - m[0][1] * m[1][0];
}

/// Solves m * y = v for dim <= 2. Returns false when m is singular relative to
/// its own scale.
inline bool solve_small(const Mat& m, const Vec& v, int dim, Vec& y) {
    double scale = 0.0;
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) scale = std::max(scale, std::abs(m[i][j]));
    const double det = determinant(m, dim);
    if (!(scale > 0.0) || !(std::abs(det) > 1e-14 * std::pow(scale, dim))) return false;
    y = Vec{};
    if (dim == 1) {
        y[0] = v[0] / m[0][0];
    } else {
        y[0] = (m[1][1] * v[0] - m[0][1] * v[1]) / det;
        y[1] = (m[0][0] * v[1] - m[1][0] * v[0]) / det;
    }
    return true;
}

/// Human-readable "(a, b)" rendering of the first `dim` components.
std::string to_string(const Vec& v, int dim);

}  // namespace nzsg
