#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "duality/amplitude.hpp"
#include "duality/errors.hpp"

namespace duality {

namespace detail {

/// Solve the 3x3 system M x = b in place (partial pivoting).
inline std::array<double, 3> solve3(std::array<std::array<double, 3>, 3> m,
                                    std::array<double, 3> b) {
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(m[r][col]) > std::abs(m[pivot][col]))
                pivot = r;
        std::swap(m[col], m[pivot]);
        std::swap(b[col], b[pivot]);
        if (m[col][col] == 0.0)
            throw FitError("singular normal equations in fringe fit");
        for (int r = 0; r < 3; ++r) {
            if (r == col)
                continue;
            const double f = m[r][col] / m[col][col];
            for (int c = col; c < 3; ++c)
                m[r][c] -= f * m[col][c];
            b[r] -= f * b[col];
        }
    }
    return {b[0] / m[0][0], b[1] / m[1][1], b[2] / m[2][2]};
}

} // namespace detail

struct VisibilityFit {
    double visibility = 0.0; // B/A clamped to [0,1]
    double mean_coeff = 0.0; // A — envelope-shaped mean
    double cos_coeff = 0.0;  // B cos(phi)
    double sin_coeff = 0.0;  // B sin(phi)
    double chi2 = 0.0;
    double chi2_budget = 0.0;
};

/// Least-squares fit of a landing histogram to
///   I(x) = envelope(x) * (A + B cos(2 pi x / period + phi)),
/// with the period fixed from the configuration. Returns B/A in [0,1].
///
/// Bins average the carrier over their width, so the cos/sin basis
/// columns carry the top-hat attenuation sinc(pi * bin / period) — the
/// estimate is unbiased for any admissible binning. A fit whose residual
/// exceeds 5x the Poisson expectation (chi2 over 25x the per-bin count
/// budget) signals failure instead of returning a number.
inline VisibilityFit fit_visibility(const std::vector<double>& counts,
                                    double lo, double bin_width,
                                    const std::function<double(double)>& envelope,
                                    double period) {
    if (counts.size() < 8 || !(bin_width > 0.0) || !(period > 0.0))
        throw ConfigError("fit_visibility: bad binning");
    if (period / bin_width < 8.0)
        throw ConfigError("fit_visibility: need at least 8 bins per fringe period");
    double total = 0.0;
    for (double h : counts)
        total += h;
    if (total < 1e3)
        throw MetricUndefinedError(
            "fit_visibility: fewer than 1000 events in the histogram");

    const double att_arg = kPi * bin_width / period;
    const double att = std::sin(att_arg) / att_arg;
    const double k = kTwoPi / period;

    std::array<std::array<double, 3>, 3> m{};
    std::array<double, 3> rhs{};
    std::vector<std::array<double, 3>> basis(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double x = lo + (static_cast<double>(i) + 0.5) * bin_width;
        const double e = envelope(x);
        basis[i] = {e, e * att * std::cos(k * x), e * att * std::sin(k * x)};
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c)
                m[r][c] += basis[i][r] * basis[i][c];
            rhs[r] += basis[i][r] * counts[i];
        }
    }
    const auto coeff = detail::solve3(m, rhs);

    VisibilityFit fit;
    fit.mean_coeff = coeff[0];
    fit.cos_coeff = coeff[1];
    fit.sin_coeff = coeff[2];
    if (!(fit.mean_coeff > 0.0))
        throw FitError("fringe fit produced a nonpositive mean coefficient");

    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double model = coeff[0] * basis[i][0] + coeff[1] * basis[i][1] +
                             coeff[2] * basis[i][2];
        const double r = counts[i] - model;
        fit.chi2 += r * r;
        fit.chi2_budget += 25.0 * std::max(counts[i], 1.0);
    }
    if (fit.chi2 > fit.chi2_budget)
        throw FitError("fringe fit residual exceeds 5x the Poisson expectation");

    const double b = std::hypot(fit.cos_coeff, fit.sin_coeff);
    fit.visibility = std::clamp(b / fit.mean_coeff, 0.0, 1.0);
    return fit;
}

/// Residual of the best sinusoid-plus-offset fit at a trial period.
inline double sinusoid_rss(const std::vector<double>& xs,
                           const std::vector<double>& ys, double period) {
    const double k = kTwoPi / period;
    std::array<std::array<double, 3>, 3> m{};
    std::array<double, 3> rhs{};
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const std::array<double, 3> row = {1.0, std::cos(k * xs[i]),
                                           std::sin(k * xs[i])};
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c)
                m[r][c] += row[r] * row[c];
            rhs[r] += row[r] * ys[i];
        }
    }
    const auto coeff = detail::solve3(m, rhs);
    double rss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double k0 = kTwoPi / period;
        const double model = coeff[0] + coeff[1] * std::cos(k0 * xs[i]) +
                             coeff[2] * std::sin(k0 * xs[i]);
        rss += (ys[i] - model) * (ys[i] - model);
    }
    return rss;
}

/// Best-fit period of (xs, ys) under an offset sinusoid, found by a
/// dense scan over [p_lo, p_hi] followed by golden-section refinement.
inline double fit_period(const std::vector<double>& xs,
                         const std::vector<double>& ys, double p_lo,
                         double p_hi, int scan_steps = 1000) {
    if (xs.size() != ys.size() || xs.size() < 8)
        throw FitError("fit_period: need at least 8 samples");
    if (!(p_hi > p_lo) || !(p_lo > 0.0))
        throw FitError("fit_period: bad period bracket");
    int best = 0;
    double best_rss = std::numeric_limits<double>::infinity();
    std::vector<double> grid(scan_steps + 1);
    for (int i = 0; i <= scan_steps; ++i) {
        grid[i] = p_lo + (p_hi - p_lo) * static_cast<double>(i) / scan_steps;
        const double rss = sinusoid_rss(xs, ys, grid[i]);
        if (rss < best_rss) {
            best_rss = rss;
            best = i;
        }
    }
    const double a = grid[std::max(best - 1, 0)];
    const double b = grid[std::min(best + 1, scan_steps)];
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    double lo = a, hi = b;
    double f1 = sinusoid_rss(xs, ys, x1), f2 = sinusoid_rss(xs, ys, x2);
    while (hi - lo > 1e-6 * (p_hi - p_lo)) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = sinusoid_rss(xs, ys, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = sinusoid_rss(xs, ys, x2);
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace duality
