#pragma once

namespace nzsg {

/// Piecewise-linear regularisation of the Heaviside graph.
///
/// For epsilon > 0 returns clamp((eta + epsilon) / (2 epsilon), 0, 1): a ramp
/// of half-width epsilon that agrees with the Heaviside function whenever
/// |eta| >= epsilon. For epsilon == 0 returns the selection 1 (eta > 0),
/// 0 (eta < 0), 1/2 (eta == 0). Throws DomainError for epsilon < 0 or NaN.
double smoothed_heaviside(double eta, double epsilon);

}  // namespace nzsg
