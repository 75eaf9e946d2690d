#pragma once

#include <cmath>
#include <complex>
#include <numbers>

namespace duality {

/// Complex field amplitude; the unit of coherent summation.
using Amplitude = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double intensity(const Amplitude& a) { return std::norm(a); }

inline Amplitude unit_phasor(double phase) {
    return Amplitude(std::cos(phase), std::sin(phase));
}

/// Reduce an angle into [0, 2*pi).
inline double wrap_phase(double phi) {
    double r = std::fmod(phi, kTwoPi);
    if (r < 0.0)
        r += kTwoPi;
    // fmod can round a tiny negative up to exactly 2*pi
    if (r >= kTwoPi)
        r -= kTwoPi;
    return r;
}

// Both directions use the one rounded constant pi/180: multiply one way,
// divide back. Two independently rounded constants would make round
// file-unit angles drift by an ulp on every echo round trip.
inline double deg_to_rad(double deg) { return deg * (kPi / 180.0); }
inline double rad_to_deg(double rad) { return rad / (kPi / 180.0); }

} // namespace duality
