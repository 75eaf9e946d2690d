#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "duality/amplitude.hpp"

namespace duality {

/// What happened to a quantum along its trajectory. Only reflections carry
/// a discrete phase; the other tags exist so a trajectory can be audited.
enum class PathEvent { reflection, transmission, aperture_division };

/// Trajectory bookkeeping for one beam or one quantum: accumulated
/// geometric path plus the discrete events that add phase. The discrete
/// reflection phase itself is a parameter of ledger_phase, not of the
/// ledger, so the convention lives in exactly one place.
struct PhaseLedger {
    double geometric_path = 0.0; // meters
    int reflection_count = 0;
    std::vector<PathEvent> event_log;

    void add_path(double meters) { geometric_path += meters; }
    void reflect() {
        ++reflection_count;
        event_log.push_back(PathEvent::reflection);
    }
    void transmit() { event_log.push_back(PathEvent::transmission); }
    void divide() { event_log.push_back(PathEvent::aperture_division); }

    bool operator==(const PhaseLedger&) const = default;
};

/// Total propagation phase of a ledger, reduced to [0, 2pi).
///
/// The path contribution is computed from the fractional number of
/// wavelengths so that paths of many thousands of waves stay
/// well-conditioned (2*pi*path/lambda would lose the fraction).
inline double ledger_phase(const PhaseLedger& ledger, double wavelength,
                           double reflection_phase = kPi) {
    if (!(wavelength > 0.0))
        throw std::domain_error("ledger_phase: wavelength must be positive");
    if (ledger.geometric_path < 0.0)
        throw std::domain_error("ledger_phase: geometric path must be nonnegative");
    const double turns = ledger.geometric_path / wavelength;
    const double path_phase = kTwoPi * (turns - std::floor(turns));
    return wrap_phase(path_phase +
                      reflection_phase * static_cast<double>(ledger.reflection_count));
}

} // namespace duality
