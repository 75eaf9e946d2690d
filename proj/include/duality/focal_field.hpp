#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "duality/apparatus.hpp"
#include "duality/phase_ledger.hpp"

namespace duality {

/// Sampled two-beam field in the observation plane. Amplitudes are scaled
/// so the two normalized arm weights sum to exactly 1: a balanced,
/// perfectly superimposed pattern then peaks at exactly 1.0 and one arm
/// alone at exactly 0.25 — the Fig.-3-style unit normalization.
struct FocalField {
    std::vector<double> x_grid;
    std::vector<Amplitude> amp_R;
    std::vector<Amplitude> amp_T;
    EnvelopeKind envelope_kind = EnvelopeKind::gaussian;
    double normalization = 1.0; // q_R + q_T, exactly 1 by construction

    // Synthesis bookkeeping the placement and sampling layers reuse.
    double q_R = 0.5, q_T = 0.5;       // arm amplitude weights
    double center_R = 0.0, center_T = 0.0;
    double width = 1e-3;
    double carrier_R = 0.0, carrier_T = 0.0; // k * tilt, rad per meter
    double phase_rel = 0.0;                  // arm T ledger phase minus arm R
    double period = 0.0;                     // fringe period, meters
};

namespace detail {

/// Split intensities (i_r, i_t) into amplitude weights that sum to
/// exactly 1.0 in floating point: the larger share is computed by
/// division (>= 0.5), the smaller by subtraction from 1, which is exact
/// for operands in [0.5, 1] (Sterbenz), so their sum cannot round.
inline std::pair<double, double> exact_unit_split(double i_r, double i_t) {
    const double a = std::sqrt(i_r);
    const double b = std::sqrt(i_t);
    if (a >= b) {
        const double qr = a / (a + b);
        return {qr, 1.0 - qr};
    }
    const double qt = b / (a + b);
    return {1.0 - qt, qt};
}

} // namespace detail

/// Build the two-beam focal-plane field for a resolved config: per arm,
/// amp(x) = q * E((x - center)/w) * exp(i (k tilt x + phase)), with arm R
/// as the phase reference and arm T carrying the ledger phase difference
/// (delay line included). A blocked arm contributes zero amplitude but
/// leaves the other arm's weight untouched — blocking happens after the
/// splitter. The grid is centered on the spot midpoint with an odd point
/// count so a superimposed peak falls exactly on a sample.
inline FocalField synthesize_field(const ApparatusConfig& raw) {
    const ApparatusConfig cfg = resolve_optics(raw);
    validate(cfg);

    FocalField f;
    f.envelope_kind = cfg.envelope;
    f.width = cfg.envelope_width_w;
    f.center_R = cfg.spot_center_R;
    f.center_T = cfg.spot_center_T;
    f.period = fringe_period(cfg);

    const double k = kTwoPi / cfg.wavelength;
    f.carrier_R = k * cfg.tilt_R;
    f.carrier_T = k * cfg.tilt_T;

    const auto [qr, qt] =
        detail::exact_unit_split(cfg.reflectance, 1.0 - cfg.reflectance);
    f.q_R = qr;
    f.q_T = qt;
    f.normalization = qr + qt;

    const PhaseLedger ledger_R = arm_ledger(cfg, Arm::R);
    const PhaseLedger ledger_T = arm_ledger(cfg, Arm::T);
    const double phi_R = ledger_phase(ledger_R, cfg.wavelength, cfg.reflection_phase);
    const double phi_T = ledger_phase(ledger_T, cfg.wavelength, cfg.reflection_phase);
    f.phase_rel = wrap_phase(phi_T - phi_R);

    const bool open_R = cfg.chopper.mode != ChopperMode::block_R;
    const bool open_T = cfg.chopper.mode != ChopperMode::block_T;

    const int n = cfg.grid_points | 1; // force odd so the midpoint is a sample
    const double mid = 0.5 * (cfg.spot_center_R + cfg.spot_center_T);
    const double half = 0.5 * cfg.grid_span;
    f.x_grid.resize(n);
    f.amp_R.resize(n);
    f.amp_T.resize(n);
    const Amplitude phase_T = unit_phasor(f.phase_rel);
    for (int i = 0; i < n; ++i) {
        const double x =
            mid + (-half + cfg.grid_span * static_cast<double>(i) / (n - 1));
        f.x_grid[i] = x;
        if (open_R) {
            const double env =
                envelope_amp(cfg.envelope, (x - cfg.spot_center_R) / cfg.envelope_width_w);
            f.amp_R[i] = qr * env * unit_phasor(wrap_phase(f.carrier_R * x));
        } else {
            f.amp_R[i] = Amplitude(0.0, 0.0);
        }
        if (open_T) {
            const double env =
                envelope_amp(cfg.envelope, (x - cfg.spot_center_T) / cfg.envelope_width_w);
            f.amp_T[i] = qt * env * unit_phasor(wrap_phase(f.carrier_T * x)) * phase_T;
        } else {
            f.amp_T[i] = Amplitude(0.0, 0.0);
        }
    }
    return f;
}

namespace detail {

/// Locate x in the grid and return (index, fraction) for interpolation.
inline std::pair<std::size_t, double> grid_locate(const FocalField& f, double x) {
    if (f.x_grid.size() < 2)
        throw std::out_of_range("focal field grid is empty");
    if (x < f.x_grid.front() || x > f.x_grid.back())
        throw std::out_of_range("x outside the focal-plane grid span");
    const auto it = std::upper_bound(f.x_grid.begin(), f.x_grid.end(), x);
    std::size_t hi = static_cast<std::size_t>(it - f.x_grid.begin());
    if (hi == 0) hi = 1;
    if (hi >= f.x_grid.size()) hi = f.x_grid.size() - 1;
    const std::size_t lo = hi - 1;
    const double t = (x - f.x_grid[lo]) / (f.x_grid[hi] - f.x_grid[lo]);
    return {lo, t};
}

inline Amplitude lerp_amp(const std::vector<Amplitude>& a, std::size_t lo, double t) {
    return a[lo] + t * (a[lo + 1] - a[lo]);
}

} // namespace detail

/// Per-arm complex amplitudes at x, interpolated linearly on amplitudes
/// (never on intensities — that would bias the fringe minima).
inline std::pair<Amplitude, Amplitude> field_amplitudes(const FocalField& f, double x) {
    const auto [lo, t] = detail::grid_locate(f, x);
    return {detail::lerp_amp(f.amp_R, lo, t), detail::lerp_amp(f.amp_T, lo, t)};
}

/// |amp_R(x) + amp_T(x)|² — the interfering readout (hypothesis-5 form).
inline double coherent_intensity(const FocalField& f, double x) {
    const auto [ar, at] = field_amplitudes(f, x);
    return intensity(ar + at);
}

/// |amp_R(x)|² + |amp_T(x)|² — the no-interference distribution.
inline double incoherent_intensity(const FocalField& f, double x) {
    const auto [ar, at] = field_amplitudes(f, x);
    return intensity(ar) + intensity(at);
}

/// Single-arm intensity |amp_arm(x)|².
inline double arm_intensity(const FocalField& f, Arm arm, double x) {
    const auto [ar, at] = field_amplitudes(f, x);
    return arm == Arm::R ? intensity(ar) : intensity(at);
}

} // namespace duality
