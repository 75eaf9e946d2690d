#pragma once

#include <cmath>
#include <stdexcept>

#include "duality/amplitude.hpp"
#include "duality/errors.hpp"

namespace duality {

enum class Polarization { s, p };

/// Amplitude and energy coefficients of a lossless dielectric interface.
///
/// `r_amp`/`t_amp` are the signed real Fresnel amplitudes. `reflectance`
/// is r_amp^2 and `transmittance` is defined as 1 - reflectance (energy
/// flux form); note that t_amp^2 alone is not the transmitted flux, the
/// (n2 cos t)/(n1 cos i) projection factor belongs to it.
struct FresnelResult {
    double r_amp;
    double t_amp;
    double reflectance;
    double transmittance;
};

/// Fresnel coefficients for a plane wave hitting an n1 -> n2 interface.
inline FresnelResult fresnel(double n1, double n2, double incidence,
                             Polarization pol) {
    if (!(n1 > 0.0) || !(n2 > 0.0))
        throw std::domain_error("fresnel: refractive indices must be positive");
    if (!(incidence >= 0.0) || !(incidence < kPi / 2.0))
        throw std::domain_error("fresnel: incidence must lie in [0, pi/2)");

    const double sin_i = std::sin(incidence);
    const double cos_i = std::cos(incidence);
    const double sin_t = n1 * sin_i / n2;
    if (sin_t >= 1.0)
        throw std::domain_error("fresnel: total internal reflection (evanescent)");
    const double cos_t = std::sqrt(1.0 - sin_t * sin_t);

    double r = 0.0;
    double t = 0.0;
    if (pol == Polarization::s) {
        const double denom = n1 * cos_i + n2 * cos_t;
        r = (n1 * cos_i - n2 * cos_t) / denom;
        t = 2.0 * n1 * cos_i / denom;
    } else {
        const double denom = n2 * cos_i + n1 * cos_t;
        r = (n2 * cos_i - n1 * cos_t) / denom;
        t = 2.0 * n1 * cos_i / denom;
    }

    FresnelResult out;
    out.r_amp = r;
    out.t_amp = t;
    out.reflectance = r * r;
    out.transmittance = 1.0 - out.reflectance;
    return out;
}

/// Transmitted energy flux t_amp^2 * (n2 cos t)/(n1 cos i); equals
/// 1 - reflectance analytically, kept separate so tests can close the
/// energy budget through the amplitudes themselves.
inline double fresnel_flux_transmittance(double n1, double n2,
                                         double incidence, Polarization pol) {
    const FresnelResult fr = fresnel(n1, n2, incidence, pol);
    const double sin_t = n1 * std::sin(incidence) / n2;
    const double cos_t = std::sqrt(1.0 - sin_t * sin_t);
    const double cos_i = std::cos(incidence);
    return fr.t_amp * fr.t_amp * (n2 * cos_t) / (n1 * cos_i);
}

/// Highest incidence angle the calibration search will consider. Kept a
/// little below grazing: beams of finite divergence stop being meaningful
/// there, and near-unity index configurations only reach R = 0.5 within
/// the last tenth of a degree before 90.
inline constexpr double kIncidenceSearchCap = 89.5 * (kPi / 180.0);

/// Solve fresnel reflectance == target on [0, cap] by bracket scan plus
/// bisection. Throws NoSolutionError when the reflectance never crosses
/// the target on the interval.
inline double solve_incidence_for_reflectance(double n1, double n2,
                                              Polarization pol, double target,
                                              double cap = kIncidenceSearchCap) {
    if (!(n2 > n1))
        throw std::domain_error("solve_incidence_for_reflectance: requires n1 < n2");
    const auto refl = [&](double i) {
        return fresnel(n1, n2, i, pol).reflectance - target;
    };

    // p-polarization dips to zero at Brewster; scan finely enough that the
    // rise back toward grazing cannot be stepped over.
    const int steps = 4096;
    double lo = 0.0;
    double flo = refl(lo);
    double hi = lo;
    bool bracketed = false;
    double max_seen = flo + target;
    for (int k = 1; k <= steps; ++k) {
        hi = cap * static_cast<double>(k) / steps;
        const double fhi = refl(hi);
        max_seen = std::max(max_seen, fhi + target);
        if (flo == 0.0)
            return lo;
        if (flo < 0.0 && fhi >= 0.0) {
            bracketed = true;
            break;
        }
        lo = hi;
        flo = fhi;
    }
    if (!bracketed)
        throw NoSolutionError(
            "reflectance never reaches target below the grazing cap; max scanned R = " +
            std::to_string(max_seen));

    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = refl(mid);
        if (std::abs(fmid) < 1e-12 && (hi - lo) < 1e-12)
            return mid;
        if (fmid < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// Brewster angle arctan(n2/n1): p-polarized reflectance vanishes here.
inline double brewster_angle(double n1, double n2) {
    return std::atan2(n2, n1);
}

} // namespace duality
