#pragma once

#include <cstdint>
#include <string>

#include "nzsg/game.hpp"

namespace nzsg {

struct ValidationOptions {
    int sample_count = 1000;
    std::uint64_t seed = 1;
    /// States are sampled from [-sample_radius, sample_radius]^N.
    double sample_radius = 10.0;
    /// Growth constants at or above this value flag a pathology.
    double growth_limit = 1e6;
};

/// Sampled check of the standing assumptions on a game: uniform ellipticity,
/// boundedness of the data, linear growth of the drift, polynomial growth of
/// the payoffs and the declared structure.
struct ValidationReport {
    bool ellipticity_ok = false;
    double ellipticity_lower = 0.0;   // smallest eigenvalue of a seen
    double ellipticity_upper = 0.0;   // largest eigenvalue of a seen
    double ellipticity_margin = 0.0;  // == ellipticity_lower

    /// Bounded iff the supremum over the outer half of the sampling box does
    /// not exceed 1.25x the supremum over the inner half.
    bool boundedness_ok = false;
    bool boundedness_required = true;
    double sup_drift = 0.0;
    double sup_running[2] = {0.0, 0.0};
    double sup_terminal[2] = {0.0, 0.0};

    bool growth_ok = false;
    double drift_growth_constant = 0.0;    // max |f| / (1 + |x|)
    double payoff_growth_constant = 0.0;   // max (|g_i| + |h_i|) / (1 + |x|^beta)

    bool structure_ok = false;
    std::string structure_detail;

    int samples_used = 0;

    /// True when every flag required by the declared structure holds.
    bool ok() const {
        return ellipticity_ok && growth_ok && structure_ok && (boundedness_ok || !boundedness_required);
    }
};

/// Deterministic in (spec, options). Throws ValidationError when sigma is
/// singular or a coefficient returns NaN at a sample point; the message names
/// the point.
ValidationReport validate_spec(const GameSpec& spec, const ValidationOptions& options = {});

std::string format_report(const ValidationReport& report);

}  // namespace nzsg
