#include <catch2/catch_amalgamated.hpp>

#include "duality/detection.hpp"
#include "duality/fitting.hpp"
#include "duality/rng.hpp"

#include <cmath>
#include <vector>

using namespace duality;
using Catch::Approx;

namespace {

DetectorLayout toy_layout() {
    DetectorLayout l;
    l.x_W1 = 0.0;
    l.x_W2 = 50e-6;
    l.x_P1 = 2e-3;
    l.x_P2 = -2e-3;
    l.fiber_width = 4e-6;
    return l;
}

} // namespace

TEST_CASE("events land in the right pickups", "[detection]") {
    const DetectorLayout l = toy_layout();
    DetectionSummary s;

    DetectionEvent ev;
    ev.landing_x = 1e-6; // inside W1's half-width
    ev.predictability = 1.0;
    accumulate_event(s, ev, l);
    CHECK(s.n_w1 == 1.0);
    CHECK(s.n_w2 == 0.0);
    CHECK(s.pred_norm == 1.0);
    CHECK(s.pred_weight == 1.0);

    ev.landing_x = 50e-6;
    ev.predictability = 0.0;
    accumulate_event(s, ev, l);
    CHECK(s.n_w2 == 1.0);
    CHECK(s.pred_norm == 2.0);
    CHECK(s.pred_weight == 1.0);

    ev.landing_x = 2.0009e-3; // inside P1's pickup
    accumulate_event(s, ev, l);
    CHECK(s.n_p1 == 1.0);

    // A lost emission contributes nothing.
    ev.lost = true;
    accumulate_event(s, ev, l);
    CHECK(s.pred_norm == 3.0);
    CHECK(s.n_p1 == 1.0);

    // Far from every fiber: tallied in the attribution only.
    ev.lost = false;
    ev.landing_x = 1e-3;
    accumulate_event(s, ev, l);
    CHECK(s.n_w1 + s.n_w2 + s.n_p1 + s.n_p2 == 3.0);
    CHECK(s.pred_norm == 4.0);
}

TEST_CASE("summary merge is order-independent for integer tallies",
          "[detection]") {
    const DetectorLayout l = toy_layout();
    std::vector<DetectionEvent> events;
    CounterRng rng(3, 0);
    for (int i = 0; i < 1000; ++i) {
        DetectionEvent ev;
        ev.landing_x = (rng.uniform() - 0.5) * 8e-3;
        ev.predictability = rng.bernoulli(0.5) ? 1.0 : 0.0;
        events.push_back(ev);
    }
    // Split the stream three ways and merge in both association orders.
    DetectionSummary a, b, c;
    for (int i = 0; i < 1000; ++i)
        accumulate_event(i < 300 ? a : i < 700 ? b : c,
                         events[static_cast<std::size_t>(i)], l);

    DetectionSummary left = a;
    left.merge(b);
    left.merge(c);
    DetectionSummary bc = b;
    bc.merge(c);
    DetectionSummary right = a;
    right.merge(bc);

    CHECK(left.n_w1 == right.n_w1);
    CHECK(left.n_w2 == right.n_w2);
    CHECK(left.n_p1 == right.n_p1);
    CHECK(left.n_p2 == right.n_p2);
    CHECK(left.pred_norm == right.pred_norm);
    CHECK(left.pred_weight == right.pred_weight);

    // Whole-stream accumulation agrees as well.
    const DetectionSummary whole = accumulate(events, l);
    CHECK(whole.n_w1 == left.n_w1);
    CHECK(whole.pred_weight == left.pred_weight);
}

TEST_CASE("merge adopts a histogram when it has none", "[detection]") {
    DetectionSummary a;
    DetectionSummary b;
    b.init_hist(0.0, 1.0, 4);
    b.add_to_hist(2.5, 3.0);
    a.merge(b);
    REQUIRE(a.hist.size() == 4);
    CHECK(a.hist[2] == 3.0);
    CHECK(a.hist_events == 3.0);

    DetectionSummary c;
    c.init_hist(0.0, 1.0, 4);
    c.add_to_hist(2.7, 2.0);
    a.merge(c);
    CHECK(a.hist[2] == 5.0);

    // Out-of-window weights are dropped, not misfiled.
    c.add_to_hist(17.0, 1.0);
    c.add_to_hist(-0.001, 1.0);
    CHECK(c.hist[0] == 0.0);
    CHECK(c.hist[3] == 0.0);
}

TEST_CASE("which-way metrics distinguish counts from attribution",
          "[detection]") {
    DetectionSummary s;
    const WhichWay none = which_way_P(s);
    CHECK_FALSE(none.p_counts.has_value());
    CHECK_FALSE(none.p_ledger.has_value());

    s.n_p1 = 900.0;
    s.n_p2 = 100.0;
    s.pred_weight = 30.0;
    s.pred_norm = 40.0;
    const WhichWay ww = which_way_P(s);
    REQUIRE(ww.p_counts.has_value());
    REQUIRE(ww.p_ledger.has_value());
    CHECK(*ww.p_counts == Approx(0.8));
    CHECK(*ww.p_ledger == Approx(0.75));
}

TEST_CASE("fringe visibility from the fiber pair", "[detection]") {
    DetectionSummary s;
    CHECK_THROWS_AS(fringe_W(s), MetricUndefinedError);
    s.n_w1 = 990.0;
    s.n_w2 = 10.0;
    CHECK(fringe_W(s) == Approx(0.98));
}

TEST_CASE("anticorrelation parameter", "[detection]") {
    DetectionSummary s;
    CHECK_THROWS_AS(gra_alpha(s), MetricUndefinedError); // no gates
    s.singles_gates = 1000000;
    CHECK_THROWS_AS(gra_alpha(s), MetricUndefinedError); // no singles
    s.n_p1 = 95000.0;
    s.n_p2 = 95000.0;
    s.coincidences_p1p2 = 9025;
    CHECK(gra_alpha(s) == Approx(9025.0 * 1e6 / (95000.0 * 95000.0)));
    s.coincidences_p1p2 = 0;
    CHECK(gra_alpha(s) == 0.0);
}

TEST_CASE("complementarity slack and its error bar", "[detection]") {
    DetectionSummary s;
    s.pred_norm = 1e6;
    s.pred_weight = 1e6; // every event fully attributed
    s.pred_sq = 1e6;
    s.n_w1 = 5e5;
    s.n_w2 = 5e5;

    // P = 1, W = 0: the inequality is saturated from the particle side.
    const Complementarity c1 = complementarity(1.0, 0.0, s);
    CHECK(c1.slack == 0.0);
    CHECK_FALSE(c1.violation);

    // P = 1 and W = 1 cannot be reconciled: slack -1 with a tiny error
    // bar flags a genuine violation.
    const Complementarity c2 = complementarity(1.0, 1.0, s);
    CHECK(c2.slack == -1.0);
    CHECK(c2.sigma < 0.01);
    CHECK(c2.violation);

    // Balanced mixture saturates: P^2 + W^2 = 1 within rounding.
    const Complementarity c3 =
        complementarity(std::sqrt(0.5), std::sqrt(0.5), s);
    CHECK(c3.slack == Approx(0.0).margin(1e-12));
    CHECK_FALSE(c3.violation);
}

TEST_CASE("visibility fit recovers a noiseless pattern exactly",
          "[detection][fit]") {
    // Bin-averaged fringe data: the carrier integrated over a top-hat bin
    // is attenuated by sinc(pi bin / period); build the data that way and
    // the fit must return the underlying visibility to machine precision.
    const double period = 83.2894736842e-6;
    const double span = 3e-3;
    const int bins = 512;
    const double bw = span / bins;
    const double lo = -0.5 * span;
    const double a = 1000.0, b = 700.0, phi = 0.7;
    const double att = std::sin(kPi * bw / period) / (kPi * bw / period);

    const auto envelope = [](double x) {
        return std::exp(-x * x / (1e-3 * 1e-3));
    };
    std::vector<double> counts(bins);
    for (int i = 0; i < bins; ++i) {
        const double x = lo + (i + 0.5) * bw;
        counts[static_cast<std::size_t>(i)] =
            envelope(x) *
            (a + b * att * std::cos(kTwoPi * x / period + phi));
    }
    const VisibilityFit fit = fit_visibility(counts, lo, bw, envelope, period);
    CHECK(fit.visibility == Approx(b / a).epsilon(1e-10));
    CHECK(fit.mean_coeff == Approx(a).epsilon(1e-10));
    CHECK(std::hypot(fit.cos_coeff, fit.sin_coeff) == Approx(b).epsilon(1e-10));
    CHECK(fit.chi2 < 1e-12);

    // Full-contrast pattern clamps cleanly to 1.
    for (int i = 0; i < bins; ++i) {
        const double x = lo + (i + 0.5) * bw;
        counts[static_cast<std::size_t>(i)] =
            envelope(x) * a * (1.0 + att * std::cos(kTwoPi * x / period));
    }
    CHECK(fit_visibility(counts, lo, bw, envelope, period).visibility ==
          Approx(1.0).margin(1e-10));
}

TEST_CASE("visibility fit rejects what it cannot trust", "[detection][fit]") {
    const auto flat = [](double) { return 1.0; };
    std::vector<double> few(4, 1000.0);
    CHECK_THROWS_AS(fit_visibility(few, 0.0, 1.0, flat, 100.0), ConfigError);

    // Fewer than 8 bins per fringe period.
    std::vector<double> coarse(16, 1000.0);
    CHECK_THROWS_AS(fit_visibility(coarse, 0.0, 1.0, flat, 4.0), ConfigError);

    // Too few events for a meaningful fit.
    std::vector<double> sparse(64, 1.0);
    CHECK_THROWS_AS(fit_visibility(sparse, 0.0, 1e-5, flat, 1e-3),
                    MetricUndefinedError);

    // A zero envelope makes the normal equations singular.
    std::vector<double> counts(64, 100.0);
    CHECK_THROWS_AS(
        fit_visibility(counts, 0.0, 1e-5, [](double) { return 0.0; }, 1e-3),
        FitError);

    // Structure wildly incompatible with the model: residual blows the
    // counting-noise budget.
    std::vector<double> spiky(64, 10.0);
    spiky[10] = 1e6;
    spiky[11] = 0.0;
    spiky[40] = 8e5;
    CHECK_THROWS_AS(fit_visibility(spiky, 0.0, 1e-5, flat, 1e-3), FitError);
}

TEST_CASE("period recovery from a clean sinusoid", "[detection][fit]") {
    const double period = 83.2894736842e-6;
    std::vector<double> xs, ys;
    for (int i = 0; i < 200; ++i) {
        const double x = -250e-6 + i * 2.5e-6; // ~6 periods
        xs.push_back(x);
        ys.push_back(3.0 + 2.0 * std::cos(kTwoPi * x / period + 0.3));
    }
    const double fitted = fit_period(xs, ys, 0.5 * period, 1.5 * period);
    CHECK(fitted == Approx(period).epsilon(1e-4));

    CHECK_THROWS_AS(fit_period(xs, ys, -1.0, 2.0), FitError);
    CHECK_THROWS_AS(fit_period({1.0}, {1.0}, 1.0, 2.0), FitError);
}
