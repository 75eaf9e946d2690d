#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "duality/amplitude.hpp"
#include "duality/apparatus.hpp"

namespace duality {

namespace detail {

// --- experiment-file unit conversions (one operation each way, always
// against the exactly representable integer power of ten, so round
// file-unit values echo as round numbers; the echo writer and the
// run-entry normalization depend on reusing exactly these functions) -----
inline double nm_to_si(double v) { return v / 1e9; }
inline double si_to_nm(double v) { return v * 1e9; }
inline double um_to_si(double v) { return v / 1e6; }
inline double si_to_um(double v) { return v * 1e6; }
inline double mm_to_si(double v) { return v / 1e3; }
inline double si_to_mm(double v) { return v * 1e3; }
inline double mrad_to_si(double v) { return v / 1e3; }
inline double si_to_mrad(double v) { return v * 1e3; }
inline double us_to_si(double v) { return v / 1e6; }
inline double si_to_us(double v) { return v * 1e6; }

/// File-unit value for an SI quantity, conditioned so one more
/// file -> SI -> file round trip reproduces it bit-exactly. Re-running an
/// experiment from an echoed report must reproduce the report byte for
/// byte, and unit conversion is the only lossy step on that path. The
/// rounding map is monotone, so iterating it either reaches a fixed point
/// or a 2-cycle, and both cycle members resolve to the cycle minimum.
/// Among file values converting to the same SI double, the one with the
/// fewest decimal digits wins: a user's "60" must echo as 60, not as the
/// 59.999... ulp-neighbour the raw conversion happens to land on.
inline double stable_file_value(double si, double (*to_si)(double),
                                double (*from_si)(double)) {
    double w = from_si(si);
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (int i = 0; i < 8; ++i) {
        const double w2 = from_si(to_si(w));
        if (w2 == w)
            break;
        if (w2 == prev) {
            w = std::min(w, w2);
            break;
        }
        prev = w;
        w = w2;
    }
    const double si_w = to_si(w);
    for (int digits = 1; digits <= 15; ++digits) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.*g", digits, w);
        const double rounded = std::strtod(buf, nullptr);
        if (to_si(rounded) == si_w)
            return rounded;
    }
    return w;
}

inline double echo_nm(double si) { return stable_file_value(si, nm_to_si, si_to_nm); }
inline double echo_um(double si) { return stable_file_value(si, um_to_si, si_to_um); }
inline double echo_mm(double si) { return stable_file_value(si, mm_to_si, si_to_mm); }
inline double echo_mrad(double si) { return stable_file_value(si, mrad_to_si, si_to_mrad); }
inline double echo_us(double si) { return stable_file_value(si, us_to_si, si_to_us); }
inline double echo_deg(double si) { return stable_file_value(si, deg_to_rad, rad_to_deg); }

} // namespace detail

/// Pin every unit-converted quantity to the value its experiment-file
/// representation converts to, so a config built from defaults or flags
/// and a config re-parsed from a report echo drive bit-identical physics.
inline ApparatusConfig normalize_units(const ApparatusConfig& cfg) {
    using namespace detail;
    ApparatusConfig c = cfg;
    c.wavelength = nm_to_si(echo_nm(c.wavelength));
    c.delay_opd = nm_to_si(echo_nm(c.delay_opd));
    if (!c.incidence_auto)
        c.incidence_angle_i = deg_to_rad(echo_deg(c.incidence_angle_i));
    c.tilt_R = mrad_to_si(echo_mrad(c.tilt_R));
    c.tilt_T = mrad_to_si(echo_mrad(c.tilt_T));
    c.spot_center_R = um_to_si(echo_um(c.spot_center_R));
    c.spot_center_T = um_to_si(echo_um(c.spot_center_T));
    c.envelope_width_w = um_to_si(echo_um(c.envelope_width_w));
    c.fiber_core_width = um_to_si(echo_um(c.fiber_core_width));
    c.coincidence_window = us_to_si(echo_us(c.coincidence_window));
    c.detection_window = us_to_si(echo_us(c.detection_window));
    c.reflection_phase = deg_to_rad(echo_deg(c.reflection_phase));
    c.grid_span = mm_to_si(echo_mm(c.grid_span));
    c.fit_span = mm_to_si(echo_mm(c.fit_span));
    return c;
}

} // namespace duality
