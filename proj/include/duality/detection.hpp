#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "duality/errors.hpp"
#include "duality/placement.hpp"

namespace duality {

/// One focal-plane detection: where it landed, which arm it took when the
/// model knows, and how attributable it is (|p_R - p_T|, the per-event
/// distinguishability). `lost` marks emissions absorbed by the blocking
/// device — they never reach the plane.
struct DetectionEvent {
    long long window_id = 0;
    std::optional<Arm> arm;
    double predictability = 0.0;
    double landing_x = 0.0;
    bool lost = false;
};

/// Additively mergeable tally of a run. Counts are doubles because the
/// light-quanta model in exact mode accumulates real-valued expected
/// counts; event models only ever add integers.
struct DetectionSummary {
    double n_p1 = 0.0, n_p2 = 0.0, n_w1 = 0.0, n_w2 = 0.0;
    long long n_windows = 0;
    long long coincidences_p1p2 = 0;
    long long singles_gates = 0;

    // Arm-attribution accumulator: sum of weight * |p_R - p_T|, the
    // weight total, and sum of weight * |p_R - p_T|^2 for the error bar.
    double pred_weight = 0.0;
    double pred_norm = 0.0;
    double pred_sq = 0.0;

    // Light-quanta energy bookkeeping (photons detected - quanta emitted).
    bool has_photon_balance = false;
    double quanta_emitted = 0.0;
    double photons_detected = 0.0;

    // Landing histogram for the fringe fit.
    std::vector<double> hist;
    double hist_lo = 0.0;
    double hist_bin = 0.0;
    double hist_events = 0.0;

    double photon_balance() const { return photons_detected - quanta_emitted; }

    void merge(const DetectionSummary& o) {
        n_p1 += o.n_p1;
        n_p2 += o.n_p2;
        n_w1 += o.n_w1;
        n_w2 += o.n_w2;
        n_windows += o.n_windows;
        coincidences_p1p2 += o.coincidences_p1p2;
        singles_gates += o.singles_gates;
        pred_weight += o.pred_weight;
        pred_norm += o.pred_norm;
        pred_sq += o.pred_sq;
        has_photon_balance = has_photon_balance || o.has_photon_balance;
        quanta_emitted += o.quanta_emitted;
        photons_detected += o.photons_detected;
        if (hist.empty()) {
            hist = o.hist;
            hist_lo = o.hist_lo;
            hist_bin = o.hist_bin;
        } else if (!o.hist.empty()) {
            for (std::size_t i = 0; i < hist.size() && i < o.hist.size(); ++i)
                hist[i] += o.hist[i];
        }
        hist_events += o.hist_events;
    }

    void init_hist(double lo, double bin, int bins) {
        hist_lo = lo;
        hist_bin = bin;
        hist.assign(static_cast<std::size_t>(bins), 0.0);
    }

    void add_to_hist(double x, double weight) {
        if (hist.empty())
            return;
        const double pos = (x - hist_lo) / hist_bin;
        if (pos < 0.0 || pos >= static_cast<double>(hist.size()))
            return;
        hist[static_cast<std::size_t>(pos)] += weight;
        hist_events += weight;
    }
};

/// Fold one focal-plane event into the tally: fiber pickups, attribution
/// accumulators, landing histogram. Lost events count a window but no
/// detection.
inline void accumulate_event(DetectionSummary& s, const DetectionEvent& ev,
                             const DetectorLayout& layout) {
    if (ev.lost)
        return;
    if (layout.in_pickup(layout.x_W1, ev.landing_x)) s.n_w1 += 1.0;
    if (layout.in_pickup(layout.x_W2, ev.landing_x)) s.n_w2 += 1.0;
    if (layout.x_P1 && layout.in_pickup(*layout.x_P1, ev.landing_x)) s.n_p1 += 1.0;
    if (layout.x_P2 && layout.in_pickup(*layout.x_P2, ev.landing_x)) s.n_p2 += 1.0;
    s.pred_weight += ev.predictability;
    s.pred_sq += ev.predictability * ev.predictability;
    s.pred_norm += 1.0;
    s.add_to_hist(ev.landing_x, 1.0);
}

/// Fold a whole event stream (convenience for tests).
inline DetectionSummary accumulate(const std::vector<DetectionEvent>& events,
                                   const DetectorLayout& layout) {
    DetectionSummary s;
    for (const auto& ev : events)
        accumulate_event(s, ev, layout);
    return s;
}

struct WhichWay {
    std::optional<double> p_counts; // | N_P1 - N_P2 | / (N_P1 + N_P2)
    std::optional<double> p_ledger; // mean per-detection |p_R - p_T|
};

/// Both readings of the which-way information. The literal count formula
/// needs populated P fibers; the attribution reading needs events that
/// carried any arm bookkeeping at all. An inapplicable part is absent
/// rather than zero.
inline WhichWay which_way_P(const DetectionSummary& s) {
    WhichWay out;
    const double denom = s.n_p1 + s.n_p2;
    if (denom > 0.0)
        out.p_counts = std::abs(s.n_p1 - s.n_p2) / denom;
    if (s.pred_norm > 0.0)
        out.p_ledger = s.pred_weight / s.pred_norm;
    return out;
}

/// Fringe visibility from the max/min fiber pair: |W1 - W2| / (W1 + W2).
inline double fringe_W(const DetectionSummary& s) {
    const double denom = s.n_w1 + s.n_w2;
    if (!(denom > 0.0))
        throw MetricUndefinedError("fringe_W: no counts at the W fibers");
    return std::abs(s.n_w1 - s.n_w2) / denom;
}

/// Grangier-Roger-Aspect anticorrelation parameter
///   alpha = coincidences * gates / (singles_P1 * singles_P2);
/// below 1 signals anti-bunching, 1 is Poissonian light.
inline double gra_alpha(const DetectionSummary& s) {
    if (s.singles_gates <= 0)
        throw MetricUndefinedError("gra_alpha: no gating windows recorded");
    if (!(s.n_p1 > 0.0) || !(s.n_p2 > 0.0))
        throw MetricUndefinedError("gra_alpha: a monitor recorded no singles");
    return (static_cast<double>(s.coincidences_p1p2) *
            static_cast<double>(s.singles_gates)) /
           (s.n_p1 * s.n_p2);
}

struct Complementarity {
    double slack = 0.0; // 1 - P_ledger^2 - W^2
    double sigma = 0.0; // 1-sigma statistical uncertainty of the slack
    bool violation = false; // slack < -3 sigma
};

/// Complementarity slack with binomial error propagation. sigma_P comes
/// from the weighted sample variance of the per-event distinguishability;
/// sigma_W from the binomial split of the two W fibers.
inline Complementarity complementarity(double p_ledger, double w,
                                       const DetectionSummary& s) {
    Complementarity out;
    out.slack = 1.0 - p_ledger * p_ledger - w * w;
    double var_p = 0.0;
    if (s.pred_norm > 0.0) {
        const double mean = s.pred_weight / s.pred_norm;
        const double mean_sq = s.pred_sq / s.pred_norm;
        var_p = std::max(mean_sq - mean * mean, 0.0) / s.pred_norm;
    }
    double var_w = 0.0;
    const double nw = s.n_w1 + s.n_w2;
    if (nw > 0.0)
        var_w = 4.0 * s.n_w1 * s.n_w2 / (nw * nw * nw);
    out.sigma = std::sqrt(4.0 * p_ledger * p_ledger * var_p +
                          4.0 * w * w * var_w);
    out.violation = out.slack < -3.0 * out.sigma;
    return out;
}

/// Run-level metric block. Parts a mode or model cannot define stay
/// absent; they are reported as such, never as zero.
struct Metrics {
    std::optional<double> p_counts;
    std::optional<double> p_ledger;
    std::optional<double> w;
    std::optional<double> visibility_fit;
    std::optional<double> alpha;
    std::optional<double> slack;
    std::optional<double> slack_sigma;
    bool violation_flag = false;
    bool w_click = false;
    std::optional<double> photon_balance;
    std::string fit_note; // diagnostic when the fringe fit declined
};

} // namespace duality
