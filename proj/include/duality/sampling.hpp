#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "duality/focal_field.hpp"

namespace duality {

/// Inverse-CDF sampler for a nonnegative 1-D density tabulated on a
/// uniform grid. Between nodes the density is treated as linear (the
/// trapezoid rule's reading), so inversion solves a quadratic per cell
/// and the sampled distribution matches the tabulated one to second
/// order — fringes are not flattened by the draw.
class DensitySampler {
public:
    DensitySampler() = default;

    static DensitySampler from_function(const std::function<double(double)>& fn,
                                        double lo, double hi, int nodes) {
        if (nodes < 2 || !(hi > lo))
            throw std::invalid_argument("DensitySampler: bad grid");
        DensitySampler s;
        s.lo_ = lo;
        s.step_ = (hi - lo) / (nodes - 1);
        s.pdf_.resize(nodes);
        s.cdf_.resize(nodes);
        for (int i = 0; i < nodes; ++i) {
            const double v = fn(lo + s.step_ * i);
            s.pdf_[i] = v > 0.0 ? v : 0.0;
        }
        s.cdf_[0] = 0.0;
        for (int i = 1; i < nodes; ++i)
            s.cdf_[i] = s.cdf_[i - 1] +
                        0.5 * (s.pdf_[i - 1] + s.pdf_[i]) * s.step_;
        if (!(s.cdf_.back() > 0.0))
            throw std::invalid_argument("DensitySampler: density integrates to zero");
        return s;
    }

    /// Unnormalized integral of the tabulated density.
    double total() const { return cdf_.back(); }

    /// Map u in [0,1) to a sample of the density.
    double sample(double u) const {
        const double target = u * cdf_.back();
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
        std::size_t hi = static_cast<std::size_t>(it - cdf_.begin());
        if (hi == 0) hi = 1;
        if (hi >= cdf_.size()) hi = cdf_.size() - 1;
        const std::size_t i = hi - 1;
        const double r = target - cdf_[i];
        const double f0 = pdf_[i];
        const double f1 = pdf_[i + 1];
        const double cell = 0.5 * (f0 + f1) * step_;
        double s = 0.0;
        if (cell <= 0.0) {
            s = 0.0;
        } else {
            const double a = 0.5 * (f1 - f0) / step_;
            if (std::abs(a) * step_ * step_ < 1e-12 * cell) {
                s = r / std::max(f0, cell / step_);
            } else {
                const double disc = f0 * f0 + 4.0 * a * r;
                s = disc > 0.0 ? (std::sqrt(disc) - f0) / (2.0 * a) : r / (cell / step_);
            }
        }
        s = std::clamp(s, 0.0, step_);
        return lo_ + step_ * static_cast<double>(i) + s;
    }

private:
    double lo_ = 0.0;
    double step_ = 0.0;
    std::vector<double> pdf_;
    std::vector<double> cdf_;
};

/// The three landing-position densities a run can draw from: the full
/// interfering pattern and each arm's envelope alone.
struct SamplerSet {
    DensitySampler coherent;
    DensitySampler env_R;
    DensitySampler env_T;
};

/// Build the samplers from a both-arms-open field on a refined grid
/// (refine x the field resolution) so the piecewise-linear read of the
/// density cannot visibly attenuate the fringes.
inline SamplerSet build_samplers(const FocalField& field, int refine = 8) {
    const int nodes = refine * (static_cast<int>(field.x_grid.size()) - 1) + 1;
    const double lo = field.x_grid.front();
    const double hi = field.x_grid.back();
    SamplerSet set;
    set.coherent = DensitySampler::from_function(
        [&](double x) { return coherent_intensity(field, x); }, lo, hi, nodes);
    set.env_R = DensitySampler::from_function(
        [&](double x) { return arm_intensity(field, Arm::R, x); }, lo, hi, nodes);
    set.env_T = DensitySampler::from_function(
        [&](double x) { return arm_intensity(field, Arm::T, x); }, lo, hi, nodes);
    return set;
}

} // namespace duality
