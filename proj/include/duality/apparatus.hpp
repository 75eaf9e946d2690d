#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "duality/amplitude.hpp"
#include "duality/errors.hpp"
#include "duality/fresnel.hpp"
#include "duality/phase_ledger.hpp"

namespace duality {

enum class Arm { R, T };

inline const char* arm_name(Arm a) { return a == Arm::R ? "R" : "T"; }

/// Amplitude envelope of one beam in the observation plane, E(0) = 1.
enum class EnvelopeKind { gaussian, sinc };

inline double envelope_amp(EnvelopeKind kind, double u) {
    if (kind == EnvelopeKind::gaussian)
        return std::exp(-0.5 * u * u);
    if (u == 0.0)
        return 1.0;
    const double pu = kPi * u;
    return std::sin(pu) / pu;
}

/// Blocking device in the separation plane: fully open, one arm blocked,
/// or a square-wave chopper gating arm T at rate_hz (arm R stays open).
enum class ChopperMode { open, block_R, block_T, chopping };

struct ChopperState {
    ChopperMode mode = ChopperMode::open;
    double rate_hz = 1000.0;

    bool operator==(const ChopperState&) const = default;
};

/// Whether the focal plane carries the pair of which-way fibers.
/// `automatic` places them exactly when the two spots are separated.
enum class WhichWayMode { automatic, on, off };

/// Full parameterization of the interferometer: prism beamsplitter at
/// incidence i, tip-tilt mirror in arm T, both beams refocused to a
/// common observation plane, delay line in arm T, blocking device in the
/// separation plane. Lengths in meters, angles in radians, times in
/// seconds.
struct ApparatusConfig {
    double wavelength = 633e-9;
    double glass_index = 1.5;

    // incidence_auto solves fresnel reflectance = 0.5 for the incidence
    // angle; reflectance_auto then represents the ideal calibrated
    // endpoint (split exactly one half). An explicit incidence derives
    // the split from the Fresnel equations instead.
    bool incidence_auto = true;
    double incidence_angle_i = 0.0;
    Polarization polarization = Polarization::s;
    bool reflectance_auto = true;
    double reflectance = 0.5;

    double arm_path_R = 0.25;
    double arm_path_T = 0.25;
    double delay_opd = 0.0; // signed, added to arm T

    double tilt_R = 3.8e-3;
    double tilt_T = -3.8e-3;
    double spot_center_R = 0.0;
    double spot_center_T = 0.0;

    EnvelopeKind envelope = EnvelopeKind::gaussian;
    double envelope_width_w = 1e-3;
    double fiber_core_width = 4.16e-6;
    WhichWayMode which_way = WhichWayMode::automatic;

    ChopperState chopper;
    // Mid-run configuration switch: windows at or past switch_window use
    // chopper_after. Negative switch_window means no switch. This is the
    // "choice" that delayed-choice runs commit late.
    long long chopper_switch_window = -1;
    ChopperState chopper_after;

    double coincidence_window = 1e-6;
    double detection_window = 1e-6;

    // Discrete phase per external reflection; the convention is
    // deliberately a parameter (see PhaseLedger).
    double reflection_phase = kPi;
    double w_click_threshold = 0.5;

    // Numerical discretization of the observation plane.
    int grid_points = 4097;
    double grid_span = 12e-3;
    int fit_bins = 512;
    double fit_span = 3e-3;

    bool operator==(const ApparatusConfig&) const = default;
};

/// Fringe period of the two tilted beams at focus; infinite without tilt.
inline double fringe_period(const ApparatusConfig& cfg) {
    const double dt = std::abs(cfg.tilt_R - cfg.tilt_T);
    if (dt == 0.0)
        return std::numeric_limits<double>::infinity();
    return cfg.wavelength / dt;
}

/// Whether this config carries which-way fibers in the focal plane.
inline bool which_way_requested(const ApparatusConfig& cfg) {
    switch (cfg.which_way) {
    case WhichWayMode::on: return true;
    case WhichWayMode::off: return false;
    case WhichWayMode::automatic:
    default: return cfg.spot_center_R != cfg.spot_center_T;
    }
}

/// Solve for the incidence angle that makes the beamsplitter balanced,
/// |R - 0.5| < 1e-10, by bisection on the Fresnel reflectance.
inline double calibrate_incidence(const ApparatusConfig& cfg) {
    if (!(cfg.glass_index > 1.0))
        throw ConfigError("calibrate_incidence: glass_index must exceed 1");
    return solve_incidence_for_reflectance(1.0, cfg.glass_index,
                                           cfg.polarization, 0.5);
}

/// Copy of cfg with incidence and reflectance resolved to numbers.
/// Auto incidence is replaced by the calibrated angle; auto reflectance
/// becomes exactly 0.5 under auto incidence (the calibrated endpoint the
/// readjustment aims for) or the Fresnel value under an explicit angle.
inline ApparatusConfig resolve_optics(const ApparatusConfig& cfg) {
    ApparatusConfig out = cfg;
    if (out.incidence_auto) {
        out.incidence_angle_i = calibrate_incidence(out);
        out.incidence_auto = false;
        if (out.reflectance_auto) {
            out.reflectance = 0.5;
            out.reflectance_auto = false;
        }
    }
    if (out.reflectance_auto) {
        out.reflectance = fresnel(1.0, out.glass_index, out.incidence_angle_i,
                                  out.polarization)
                              .reflectance;
        out.reflectance_auto = false;
    }
    return out;
}

/// Validate every config invariant; throws ConfigError naming the field.
/// A zero tilt difference is deliberately not rejected here — it is a
/// placement-time failure (no fringes to bracket), not a config failure.
inline void validate(const ApparatusConfig& cfg) {
    const auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (!(cfg.wavelength > 0.0)) fail("wavelength must be positive");
    if (!(cfg.glass_index > 1.0)) fail("glass_index must exceed 1");
    if (!cfg.incidence_auto &&
        !(cfg.incidence_angle_i > 0.0 && cfg.incidence_angle_i < kPi / 2.0))
        fail("incidence_angle_i must lie in (0, pi/2)");
    if (!cfg.reflectance_auto &&
        !(cfg.reflectance > 0.0 && cfg.reflectance < 1.0))
        fail("reflectance must lie in (0, 1)");
    if (!(cfg.envelope_width_w > 0.0)) fail("envelope_width_w must be positive");
    if (!(cfg.fiber_core_width > 0.0)) fail("fiber_core_width must be positive");
    if (!(cfg.arm_path_R >= 0.0)) fail("arm_path_R must be nonnegative");
    if (!(cfg.arm_path_T >= 0.0)) fail("arm_path_T must be nonnegative");
    if (!(cfg.arm_path_T + cfg.delay_opd >= 0.0))
        fail("arm_path_T plus delay_opd must stay nonnegative");

    const double period = fringe_period(cfg);
    if (!(cfg.fiber_core_width < period))
        fail("fiber_core_width must be smaller than the fringe period");

    if (which_way_requested(cfg)) {
        const double sep =
            std::abs(cfg.spot_center_R - cfg.spot_center_T);
        if (sep > 0.0) {
            const double cross =
                envelope_amp(cfg.envelope, sep / cfg.envelope_width_w);
            if (!(cross * cross < 0.05))
                fail("which-way spots too close: envelope cross-talk " +
                     std::to_string(cross * cross) + " is not below 0.05");
        }
    }

    if (cfg.chopper.mode == ChopperMode::chopping && !(cfg.chopper.rate_hz > 0.0))
        fail("chopper rate_hz must be positive when chopping");
    if (cfg.chopper_switch_window >= 0 &&
        cfg.chopper_after.mode == ChopperMode::chopping &&
        !(cfg.chopper_after.rate_hz > 0.0))
        fail("chopper_after rate_hz must be positive when chopping");
    if (!(cfg.coincidence_window > 0.0)) fail("coincidence_window must be positive");
    if (!(cfg.detection_window > 0.0)) fail("detection_window must be positive");
    if (!(cfg.w_click_threshold >= 0.0 && cfg.w_click_threshold <= 1.0))
        fail("w_click_threshold must lie in [0, 1]");

    if (cfg.grid_points < 9) fail("grid_points must be at least 9");
    if (!(cfg.grid_span > 0.0)) fail("grid_span must be positive");
    if (std::isfinite(period)) {
        const double dx = cfg.grid_span / (cfg.grid_points - 1);
        if (period / dx < 8.0)
            fail("grid under-resolves the fringe period: " +
                 std::to_string(period / dx) + " samples per fringe, need 8");
    }
    if (cfg.fit_bins < 2) fail("fit_bins must be at least 2");
    if (!(cfg.fit_span > 0.0 && cfg.fit_span <= cfg.grid_span))
        fail("fit_span must be positive and within grid_span");
}

/// Optical path difference between the arms: (T path + delay) - R path.
inline double compute_opd(const ApparatusConfig& cfg) {
    return (cfg.arm_path_T + cfg.delay_opd) - cfg.arm_path_R;
}

/// Trajectory ledger of one arm through the apparatus. Arm R: reflection
/// off the prism face, then the focusing mirror. Arm T: transmission
/// through the prism, the tip-tilt mirror, then the focusing mirror.
/// Both arms therefore carry two reflections, so the discrete phases
/// cancel in the default geometry and only path lengths distinguish them.
inline PhaseLedger arm_ledger(const ApparatusConfig& cfg, Arm arm) {
    PhaseLedger ledger;
    if (arm == Arm::R) {
        ledger.reflect();
        ledger.reflect();
        ledger.add_path(cfg.arm_path_R);
    } else {
        ledger.transmit();
        ledger.reflect();
        ledger.reflect();
        ledger.add_path(cfg.arm_path_T + cfg.delay_opd);
    }
    return ledger;
}

/// Whether the blocking device lets the named arm through at time t.
inline bool chopper_transmit_state(const ChopperState& state, Arm arm, double t) {
    if (t < 0.0)
        throw std::domain_error("chopper_transmit: time must be nonnegative");
    switch (state.mode) {
    case ChopperMode::open:
        return true;
    case ChopperMode::block_R:
        return arm != Arm::R;
    case ChopperMode::block_T:
        return arm != Arm::T;
    case ChopperMode::chopping:
    default:
        if (arm == Arm::R)
            return true;
        return std::fmod(t * state.rate_hz, 1.0) < 0.5;
    }
}

inline bool chopper_transmit(const ApparatusConfig& cfg, Arm arm, double t) {
    return chopper_transmit_state(cfg.chopper, arm, t);
}

/// Chopper state a given emission window runs under, honoring the
/// mid-run switch if one is scheduled.
inline const ChopperState& chopper_for_window(const ApparatusConfig& cfg,
                                              long long window) {
    if (cfg.chopper_switch_window >= 0 && window >= cfg.chopper_switch_window)
        return cfg.chopper_after;
    return cfg.chopper;
}

} // namespace duality
