#include "nzsg/heaviside.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nzsg/error.hpp"

namespace nzsg {

double smoothed_heaviside(double eta, double epsilon) {
    if (!(epsilon >= 0.0)) throw DomainError("smoothing width must be >= 0, got " + std::to_string(epsilon));
    if (epsilon == 0.0) {
        if (eta > 0.0) return 1.0;
        if (eta < 0.0) return 0.0;
        return 0.5;
    }
    if (eta >= epsilon) return 1.0;
    if (eta <= -epsilon) return 0.0;
    return std::clamp((eta + epsilon) / (2.0 * epsilon), 0.0, 1.0);
}

}  // namespace nzsg
