#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "duality/errors.hpp"
#include "duality/focal_field.hpp"

namespace duality {

/// Positions of the four fiber heads in the observation plane. W1/W2 sit
/// on a fringe maximum and the adjacent minimum; P1/P2 sit on the two
/// envelope peaks and exist only when the spots are separated.
struct DetectorLayout {
    double x_W1 = 0.0;
    double x_W2 = 0.0;
    std::optional<double> x_P1;
    std::optional<double> x_P2;
    double fiber_width = 0.0;

    bool has_which_way() const { return x_P1.has_value() && x_P2.has_value(); }

    /// Top-hat integration window of a fiber centered at x_det.
    std::pair<double, double> pickup(double x_det) const {
        return {x_det - 0.5 * fiber_width, x_det + 0.5 * fiber_width};
    }

    bool in_pickup(double x_det, double x) const {
        return x >= x_det - 0.5 * fiber_width && x <= x_det + 0.5 * fiber_width;
    }
};

namespace detail {

/// Golden-section search for the minimum of fn on [a, b].
inline double golden_min(const std::function<double(double)>& fn, double a,
                         double b, double tol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = fn(x1);
    double f2 = fn(x2);
    while (b - a > tol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = fn(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = fn(x2);
        }
    }
    return 0.5 * (a + b);
}

inline double golden_max(const std::function<double(double)>& fn, double a,
                         double b, double tol) {
    return golden_min([&](double x) { return -fn(x); }, a, b, tol);
}

} // namespace detail

/// Place the four fibers from the synthesized pattern. The search always
/// runs on the both-arms-open field — fibers are positioned during
/// alignment, before any blocking — and is fully deterministic: grid
/// scan, then golden-section refinement to fringe_period/1000.
inline DetectorLayout place_detectors(const ApparatusConfig& raw) {
    const ApparatusConfig cfg = resolve_optics(raw);
    validate(cfg);

    const double period = fringe_period(cfg);
    if (!std::isfinite(period))
        throw PlacementError("zero tilt difference: no fringes to bracket");

    const bool want_ww = which_way_requested(cfg);
    if (want_ww && cfg.spot_center_R == cfg.spot_center_T)
        throw PlacementError(
            "which-way fibers requested but the spots coincide; separate "
            "spot_center_R and spot_center_T");

    ApparatusConfig open_cfg = cfg;
    open_cfg.chopper.mode = ChopperMode::open;
    open_cfg.chopper_switch_window = -1;
    const FocalField field = synthesize_field(open_cfg);

    const double tol = period / 2000.0;
    const double mid = 0.5 * (cfg.spot_center_R + cfg.spot_center_T);
    const double dx = field.x_grid[1] - field.x_grid[0];

    // Fringe maximum nearest the overlap midpoint: collect the local
    // maxima of the coherent pattern within one period of mid, refine
    // each, keep the nearest.
    const auto coh = [&](double x) { return coherent_intensity(field, x); };
    std::vector<double> maxima;
    for (std::size_t i = 1; i + 1 < field.x_grid.size(); ++i) {
        const double x = field.x_grid[i];
        if (std::abs(x - mid) > period)
            continue;
        const double here = coherent_intensity(field, x);
        if (here >= coherent_intensity(field, field.x_grid[i - 1]) &&
            here >= coherent_intensity(field, field.x_grid[i + 1]))
            maxima.push_back(
                detail::golden_max(coh, x - dx, x + dx, tol));
    }
    if (maxima.empty())
        throw PlacementError("no fringe maximum found near the overlap midpoint");
    double x_w1 = maxima.front();
    for (double x : maxima)
        if (std::abs(x - mid) < std::abs(x_w1 - mid) - 1e-15 * period)
            x_w1 = x;

    // Adjacent minimum, on the side where the envelope changes least
    // between the two fibers (away from the spot asymmetry), so the
    // min/max pair compares like with like.
    const auto refine_min = [&](double guess) {
        return detail::golden_min(coh, guess - 0.25 * period,
                                  guess + 0.25 * period, tol);
    };
    DetectorLayout layout;
    layout.fiber_width = cfg.fiber_core_width;
    const double inc_w1 = incoherent_intensity(field, x_w1);
    const double cand_hi = x_w1 + 0.5 * period;
    const double cand_lo = x_w1 - 0.5 * period;
    const double asym_hi = std::abs(incoherent_intensity(field, cand_hi) - inc_w1);
    const double asym_lo = std::abs(incoherent_intensity(field, cand_lo) - inc_w1);
    const double x_w2 = refine_min(asym_hi <= asym_lo ? cand_hi : cand_lo);

    layout.x_W1 = x_w1;
    layout.x_W2 = x_w2;
    if (!(coherent_intensity(field, x_w2) < coherent_intensity(field, x_w1)))
        throw PlacementError("degenerate fringe pattern: minimum not below maximum");

    if (want_ww) {
        // Alignment for the P fibers watches one arm at a time, so it sees
        // the slow envelope, not the fringes. Search the analytic envelope
        // directly: the gridded field's linear interpolation carries a
        // node-period ripple (the carrier phase turns a good fraction of a
        // radian per node) that would strand a blind search on a ripple
        // peak anywhere on the flat envelope top.
        const double w = cfg.envelope_width_w;
        const auto env2 = [&](double c) {
            return [&, c](double x) {
                const double a = envelope_amp(cfg.envelope, (x - c) / w);
                return a * a;
            };
        };
        layout.x_P1 = detail::golden_max(env2(cfg.spot_center_R),
                                         cfg.spot_center_R - 0.5 * w,
                                         cfg.spot_center_R + 0.5 * w, tol);
        layout.x_P2 = detail::golden_max(env2(cfg.spot_center_T),
                                         cfg.spot_center_T - 0.5 * w,
                                         cfg.spot_center_T + 0.5 * w, tol);
    }
    return layout;
}

} // namespace duality
