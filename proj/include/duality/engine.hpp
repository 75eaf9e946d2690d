#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "duality/detection.hpp"
#include "duality/errors.hpp"
#include "duality/fitting.hpp"
#include "duality/models.hpp"
#include "duality/rng.hpp"
#include "duality/units.hpp"

namespace duality {

/// Default seed of every CLI entry point. Any seed is physically
/// equivalent (property-tested); this one is pinned so that default
/// invocations are byte-reproducible across releases.
inline constexpr std::uint64_t kDefaultSeed = 1;

enum class RunMode { standard, chopper_coincidence, delayed_choice };
enum class CountMode { sampled, exact };

inline const char* run_mode_name(RunMode m) {
    switch (m) {
    case RunMode::standard: return "standard";
    case RunMode::chopper_coincidence: return "chopper_coincidence";
    case RunMode::delayed_choice: return "delayed_choice";
    }
    return "?";
}

inline RunMode parse_run_mode(const std::string& name) {
    if (name == "standard") return RunMode::standard;
    if (name == "chopper_coincidence") return RunMode::chopper_coincidence;
    if (name == "delayed_choice") return RunMode::delayed_choice;
    throw ConfigError("unknown run mode '" + name +
                      "'; expected standard, chopper_coincidence or "
                      "delayed_choice");
}

inline const char* count_mode_name(CountMode m) {
    return m == CountMode::sampled ? "sampled" : "exact";
}

inline CountMode parse_count_mode(const std::string& name) {
    if (name == "sampled") return CountMode::sampled;
    if (name == "exact") return CountMode::exact;
    throw ConfigError("unknown count mode '" + name +
                      "'; expected sampled or exact");
}

/// Complete, self-contained description of one run. A RunResult is a
/// pure function of this struct.
struct RunSpec {
    ModelKind model = ModelKind::particle;
    ApparatusConfig cfg;
    EmissionStream stream;
    std::uint64_t seed = kDefaultSeed;
    RunMode mode = RunMode::standard;
    CountMode count_mode = CountMode::exact;
    long long decision_delay = 0; // windows; used in delayed_choice mode
    int workers = 1;
};

inline void validate_spec(const RunSpec& spec) {
    if (spec.stream.n_windows < 1)
        throw ConfigError("stream n_windows must be at least 1");
    if (!(spec.stream.mu >= 0.0))
        throw ConfigError("stream mu must be nonnegative");
    if (spec.stream.quanta_per_photon < 0)
        throw ConfigError("stream quanta_per_photon must be nonnegative");
    if (spec.decision_delay < 0)
        throw ConfigError("decision_delay must be nonnegative");
    if (spec.workers < 1)
        throw ConfigError("workers must be at least 1");
}

/// Per-metric verdicts against the model's own predicted row. Parts that
/// do not apply to a mode stay absent and do not block overall conformance.
struct Conformance {
    std::optional<bool> p_ok;
    std::optional<bool> w_ok;
    std::optional<bool> inequality_ok;
    std::optional<bool> alpha_ok;
    bool overall = false;
};

struct RunResult {
    RunSpec spec;             // as given
    ApparatusConfig resolved; // optics solved to numbers
    DetectorLayout layout;
    DetectionSummary summary;
    Metrics metrics;
    TableOnePrediction table_row;
    Conformance conformance;
    double wall_time_s = 0.0; // diagnostic only, never serialized
};

namespace detail {

/// Windows are dealt to workers in fixed blocks, merged in block order,
/// so the floating-point accumulation order is identical for any worker
/// count.
inline constexpr long long kBlockWindows = 1024;

inline const ChopperState& effective_chopper(const RunSpec& spec,
                                             long long window) {
    // In delayed-choice mode the configuration a photon meets is the one
    // committed decision_delay windows after its beamsplitter passage.
    const long long commit =
        spec.mode == RunMode::delayed_choice ? window + spec.decision_delay
                                             : window;
    return chopper_for_window(spec.cfg, commit);
}

inline DetectionEvent simulate_event(const ModelContext& ctx, ModelKind model,
                                     const ChopperState& chopper,
                                     long long window, CounterRng& rng) {
    switch (model) {
    case ModelKind::particle:
        return simulate_event_particle(ctx, chopper, window, rng);
    case ModelKind::wave:
        return simulate_event_wave(ctx, chopper, window, rng);
    case ModelKind::quantum_complementarity:
        return simulate_event_quantum(ctx, chopper, window, rng);
    case ModelKind::pilot_wave:
    default:
        return simulate_event_pilot_wave(ctx, chopper, window, rng);
    }
}

/// One standard-mode window of an event model (everything but
/// light-quanta): heralded emits one photon, poissonian a Poisson number.
inline void window_event_model(const ModelContext& ctx, const RunSpec& spec,
                               long long window, CounterRng& rng,
                               DetectionSummary& s) {
    const ChopperState& chopper = effective_chopper(spec, window);
    const long long n = spec.stream.kind == SourceKind::heralded
                            ? 1
                            : static_cast<long long>(rng.poisson(spec.stream.mu));
    for (long long i = 0; i < n; ++i)
        accumulate_event(s, simulate_event(ctx, spec.model, chopper, window, rng),
                         ctx.layout);
    ++s.n_windows;
}

/// One standard-mode window of the light-quanta model. Exact counting
/// accumulates the expected means; sampled counting draws Poisson clicks
/// from them. Attribution is weighted by detected photons, so a lone
/// quantum contributes exactly 1.
inline void window_light_quanta(const ModelContext& ctx, const RunSpec& spec,
                                long long window, CounterRng& rng,
                                DetectionSummary& s) {
    const ChopperState& chopper = effective_chopper(spec, window);
    const LqWindowResult w =
        simulate_window_light_quanta(ctx, chopper, spec.stream, window, rng);

    const bool sampled = spec.count_mode == CountMode::sampled;
    double* const fiber_sink[4] = {&s.n_w1, &s.n_w2, &s.n_p1, &s.n_p2};
    for (std::size_t d = 0; d < w.fiber_counts.size() && d < 4; ++d) {
        const double mean = w.fiber_counts[d];
        *fiber_sink[d] += sampled ? static_cast<double>(rng.poisson(mean)) : mean;
    }
    for (std::size_t b = 0; b < s.hist.size(); ++b) {
        const double mean = lq_bin_mean(ctx, w, b);
        const double add = sampled ? static_cast<double>(rng.poisson(mean)) : mean;
        s.hist[b] += add;
        s.hist_events += add;
    }

    const double ir = std::norm(w.s_R);
    const double it = std::norm(w.s_T);
    if (w.total_detected > 0.0) {
        s.pred_weight += std::abs(ir - it);
        s.pred_sq += w.distinguishability * std::abs(ir - it);
        s.pred_norm += w.total_detected;
    }
    s.has_photon_balance = true;
    s.quanta_emitted += static_cast<double>(w.n_quanta);
    s.photons_detected += w.total_detected;
    ++s.n_windows;
}

/// One coincidence gate: the two beamsplitter outputs are monitored
/// whole-port (P1 = arm R side, P2 = arm T side); a gate with at least
/// one click on each side is a coincidence. The blocking device sits
/// downstream of the monitors and plays no role here.
inline void window_coincidence(const ModelContext& ctx, const RunSpec& spec,
                               long long window, CounterRng& rng,
                               DetectionSummary& s) {
    bool click_r = false, click_t = false;
    switch (spec.model) {
    case ModelKind::wave: {
        // Semiclassical detection: the wave divides at the splitter, so
        // both monitors see steady intensity and click independently.
        const double mu_eff =
            spec.stream.kind == SourceKind::heralded ? 1.0 : spec.stream.mu;
        const double p_r = -std::expm1(-mu_eff * ctx.cfg.reflectance);
        const double p_t = -std::expm1(-mu_eff * (1.0 - ctx.cfg.reflectance));
        click_r = rng.bernoulli(p_r);
        click_t = rng.bernoulli(p_t);
        break;
    }
    case ModelKind::light_quanta: {
        // Quanta take definite arms; same-arm quanta stay mutually
        // coherent, so a whole-port monitor sees |sum of phasors|^2
        // expected photons, Poisson-resolved into clicks.
        const double piston = rng.uniform_phase();
        const long long n = spec.stream.kind == SourceKind::heralded
                                ? spec.stream.quanta_per_photon
                                : static_cast<long long>(rng.poisson(spec.stream.mu));
        Amplitude s_r, s_t;
        for (long long q = 0; q < n; ++q) {
            const Arm arm = rng.bernoulli(ctx.cfg.reflectance) ? Arm::R : Arm::T;
            double phase = (arm == Arm::R ? ctx.phi_R : ctx.phi_T) + piston;
            if (spec.stream.phase_noise == PhaseNoise::per_quantum)
                phase += rng.uniform_phase();
            (arm == Arm::R ? s_r : s_t) += unit_phasor(phase);
        }
        click_r = rng.poisson(std::norm(s_r)) >= 1;
        click_t = rng.poisson(std::norm(s_t)) >= 1;
        s.has_photon_balance = true;
        s.quanta_emitted += static_cast<double>(n);
        s.photons_detected += std::norm(s_r) + std::norm(s_t);
        break;
    }
    default: {
        // Indivisible photons: each takes exactly one side.
        const long long n = spec.stream.kind == SourceKind::heralded
                                ? 1
                                : static_cast<long long>(rng.poisson(spec.stream.mu));
        for (long long i = 0; i < n; ++i)
            (rng.bernoulli(ctx.cfg.reflectance) ? click_r : click_t) = true;
        break;
    }
    }
    ++s.singles_gates;
    if (click_r) s.n_p1 += 1.0;
    if (click_t) s.n_p2 += 1.0;
    if (click_r && click_t) ++s.coincidences_p1p2;
    ++s.n_windows;
}

inline void run_block(const ModelContext& ctx, const RunSpec& spec,
                      long long first, long long last, DetectionSummary& s) {
    if (spec.mode != RunMode::chopper_coincidence)
        init_summary_hist(s, ctx);
    for (long long w = first; w < last; ++w) {
        CounterRng rng(spec.seed, static_cast<std::uint64_t>(w));
        if (spec.mode == RunMode::chopper_coincidence)
            window_coincidence(ctx, spec, w, rng, s);
        else if (spec.model == ModelKind::light_quanta)
            window_light_quanta(ctx, spec, w, rng, s);
        else
            window_event_model(ctx, spec, w, rng, s);
    }
}

} // namespace detail

/// Simulate all windows. Per-window randomness is keyed by (seed,
/// window_id) and blocks are merged in fixed order, so the summary is
/// byte-identical for any worker count and any execution order.
inline DetectionSummary run_windows(const ModelContext& ctx,
                                    const RunSpec& spec) {
    const long long n = spec.stream.n_windows;
    const long long n_blocks =
        (n + detail::kBlockWindows - 1) / detail::kBlockWindows;
    std::vector<DetectionSummary> blocks(static_cast<std::size_t>(n_blocks));

    const auto process = [&](long long b) {
        const long long first = b * detail::kBlockWindows;
        const long long last = std::min(n, first + detail::kBlockWindows);
        detail::run_block(ctx, spec, first, last,
                          blocks[static_cast<std::size_t>(b)]);
    };

    const int workers = spec.workers;
    if (workers <= 1 || n_blocks <= 1) {
        for (long long b = 0; b < n_blocks; ++b)
            process(b);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) {
            pool.emplace_back([&, t] {
                try {
                    for (long long b = t; b < n_blocks; b += workers)
                        process(b);
                } catch (...) {
                    errors[static_cast<std::size_t>(t)] = std::current_exception();
                }
            });
        }
        for (auto& th : pool)
            th.join();
        for (const auto& err : errors)
            if (err)
                std::rethrow_exception(err);
    }

    DetectionSummary merged;
    for (const auto& block : blocks)
        merged.merge(block);
    return merged;
}

/// Derive every metric the summary supports; metrics a mode or sample
/// size cannot define stay absent, with the reason in fit_note.
inline Metrics compute_metrics(const ModelContext& ctx, const RunSpec& spec,
                               const DetectionSummary& s) {
    Metrics m;
    if (spec.mode == RunMode::chopper_coincidence) {
        try {
            m.alpha = gra_alpha(s);
        } catch (const MetricUndefinedError& e) {
            m.fit_note = e.what();
        }
        if (s.has_photon_balance)
            m.photon_balance = s.photon_balance();
        return m;
    }

    const WhichWay ww = which_way_P(s);
    m.p_counts = ww.p_counts;
    m.p_ledger = ww.p_ledger;
    try {
        m.w = fringe_W(s);
    } catch (const MetricUndefinedError& e) {
        m.fit_note = e.what();
    }
    if (!s.hist.empty()) {
        try {
            const auto fit = fit_visibility(
                s.hist, s.hist_lo, s.hist_bin,
                [&](double x) { return incoherent_intensity(ctx.field, x); },
                fringe_period(ctx.cfg));
            m.visibility_fit = fit.visibility;
        } catch (const Error& e) {
            if (!m.fit_note.empty())
                m.fit_note += "; ";
            m.fit_note += e.what();
        }
    }
    if (m.p_ledger && m.w) {
        const Complementarity c = complementarity(*m.p_ledger, *m.w, s);
        m.slack = c.slack;
        m.slack_sigma = c.sigma;
        m.violation_flag = c.violation;
    }
    if (m.w)
        m.w_click = *m.w > ctx.cfg.w_click_threshold;
    if (s.has_photon_balance)
        m.photon_balance = s.photon_balance();
    return m;
}

/// Grade the measured metrics against the model's own predicted row (or,
/// in coincidence mode, against the anticorrelation expectation for the
/// source kind).
inline Conformance grade_conformance(const RunSpec& spec,
                                     const TableOnePrediction& row,
                                     const Metrics& m) {
    Conformance c;
    if (spec.mode == RunMode::chopper_coincidence) {
        if (m.alpha)
            c.alpha_ok = spec.stream.kind == SourceKind::heralded
                             ? *m.alpha <= 0.05
                             : std::abs(*m.alpha - 1.0) <= 0.1;
        else
            c.alpha_ok = false;
        c.overall = c.alpha_ok.value();
        return c;
    }
    c.p_ok = m.p_ledger && *m.p_ledger >= row.p_lo && *m.p_ledger <= row.p_hi;
    c.w_ok = m.w && *m.w >= row.w_lo && *m.w <= row.w_hi;
    switch (row.inequality) {
    case Inequality::none:
        c.inequality_ok = true;
        break;
    case Inequality::saturates:
        c.inequality_ok = m.slack && std::abs(*m.slack) <= 0.03;
        break;
    case Inequality::violates:
        c.inequality_ok = m.violation_flag;
        break;
    }
    c.overall = c.p_ok.value() && c.w_ok.value() && c.inequality_ok.value();
    return c;
}

/// Run one spec end to end. Pass a frozen layout to keep the fibers where
/// a reference configuration put them (parameter sweeps).
inline RunResult run(const RunSpec& spec,
                     const std::optional<DetectorLayout>& frozen_layout = {}) {
    validate_spec(spec);
    const auto t0 = std::chrono::steady_clock::now();
    RunSpec normalized = spec;
    normalized.cfg = normalize_units(spec.cfg);
    const ModelContext ctx = build_model_context(normalized.cfg, frozen_layout);

    RunResult out;
    out.spec = normalized;
    out.resolved = ctx.cfg;
    out.layout = ctx.layout;
    out.summary = run_windows(ctx, normalized);
    out.metrics = compute_metrics(ctx, normalized, out.summary);
    out.table_row = predict(normalized.model);
    out.conformance = grade_conformance(normalized, out.table_row, out.metrics);
    out.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return out;
}

/// Model-expected mean intensity at the W1 fiber center: the quantity a
/// sweep tracks while the delay line scans. Particle photons add
/// incoherently; wave/quantum/pilot-wave land on the coherent pattern;
/// light quanta contribute the per-window expectation of the coherent
/// phasor sums.
inline double expected_w1_intensity(const ModelContext& ctx,
                                    const RunSpec& spec) {
    const double x = ctx.layout.x_W1;
    switch (spec.model) {
    case ModelKind::particle:
        return incoherent_intensity(ctx.field, x);
    case ModelKind::light_quanta: {
        const double r = ctx.cfg.reflectance;
        const double t = 1.0 - r;
        double m_r = 0.0, m_t = 0.0; // <|S_R|^2>, <|S_T|^2>
        double cross = 0.0;          // |<S_R conj(S_T)>|
        if (spec.stream.kind == SourceKind::heralded) {
            const double n = spec.stream.quanta_per_photon;
            m_r = n * r + n * (n - 1) * r * r;
            m_t = n * t + n * (n - 1) * t * t;
            cross = n * (n - 1) * r * t;
        } else {
            const double mu = spec.stream.mu;
            m_r = mu * r + mu * mu * r * r;
            m_t = mu * t + mu * mu * t * t;
            cross = mu * mu * r * t;
        }
        if (spec.stream.phase_noise == PhaseNoise::per_quantum) {
            // Independent random phases: only the self terms survive.
            m_r = spec.stream.kind == SourceKind::heralded
                      ? spec.stream.quanta_per_photon * r
                      : spec.stream.mu * r;
            m_t = spec.stream.kind == SourceKind::heralded
                      ? spec.stream.quanta_per_photon * t
                      : spec.stream.mu * t;
            cross = 0.0;
        }
        const Amplitude ur = ctx.mode(Arm::R, x);
        const Amplitude ut = ctx.mode(Arm::T, x);
        const Amplitude g = ur * std::conj(ut) *
                            unit_phasor(wrap_phase(ctx.phi_R - ctx.phi_T));
        return m_r * std::norm(ur) + m_t * std::norm(ut) + 2.0 * cross * g.real();
    }
    default:
        return coherent_intensity(ctx.field, x);
    }
}

struct MetricDelta {
    std::string name;
    std::optional<double> before;
    std::optional<double> after;
    double abs_delta = 0.0;
};

struct DelayedChoicePair {
    RunResult immediate; // decision committed with the photon (delay 0)
    RunResult delayed;   // decision committed decision_delay windows later
    std::vector<MetricDelta> deltas;
};

/// Run the same experiment with the configuration decision committed
/// immediately and committed late, and report every metric's difference.
/// No implemented model reads future configuration, so the deltas vanish
/// whenever the schedule itself is static.
inline DelayedChoicePair run_delayed_choice(const RunSpec& spec) {
    if (spec.mode != RunMode::delayed_choice)
        throw ConfigError("run_delayed_choice requires delayed_choice mode");
    RunSpec immediate = spec;
    immediate.decision_delay = 0;

    DelayedChoicePair pair;
    pair.immediate = run(immediate);
    pair.delayed = run(spec);

    const auto push = [&](const char* name, std::optional<double> a,
                          std::optional<double> b) {
        MetricDelta d;
        d.name = name;
        d.before = a;
        d.after = b;
        d.abs_delta = a && b ? std::abs(*a - *b) : 0.0;
        pair.deltas.push_back(std::move(d));
    };
    const Metrics& ma = pair.immediate.metrics;
    const Metrics& mb = pair.delayed.metrics;
    push("p_counts", ma.p_counts, mb.p_counts);
    push("p_ledger", ma.p_ledger, mb.p_ledger);
    push("w", ma.w, mb.w);
    push("visibility_fit", ma.visibility_fit, mb.visibility_fit);
    push("slack", ma.slack, mb.slack);
    push("alpha", ma.alpha, mb.alpha);
    return pair;
}

enum class SweepVariable { opd, flux, tilt, incidence };

inline const char* sweep_variable_name(SweepVariable v) {
    switch (v) {
    case SweepVariable::opd: return "opd";
    case SweepVariable::flux: return "flux";
    case SweepVariable::tilt: return "tilt";
    case SweepVariable::incidence: return "incidence";
    }
    return "?";
}

inline SweepVariable parse_sweep_variable(const std::string& name) {
    if (name == "opd") return SweepVariable::opd;
    if (name == "flux") return SweepVariable::flux;
    if (name == "tilt") return SweepVariable::tilt;
    if (name == "incidence") return SweepVariable::incidence;
    throw ConfigError("unsupported sweep variable '" + name +
                      "'; expected opd, flux, tilt or incidence");
}

struct SweepPoint {
    double value = 0.0;
    double w1_intensity = 0.0; // model-expected intensity at the W1 fiber
    RunResult result;
};

/// One run per sweep value with independently derived sub-seeds. The
/// fiber layout is frozen from the base configuration: the detectors do
/// not chase the fringes while the swept parameter moves them.
inline std::vector<SweepPoint> sweep(const RunSpec& base, SweepVariable var,
                                     const std::vector<double>& values) {
    if (values.size() < 2)
        throw ConfigError("sweep needs at least 2 values");
    if (var == SweepVariable::flux && base.model != ModelKind::light_quanta)
        throw ModelMismatchError(
            "flux sweep applies to the light_quanta model only");

    validate_spec(base);
    const ApparatusConfig base_resolved =
        resolve_optics(normalize_units(base.cfg));
    validate(base_resolved);
    const DetectorLayout frozen = place_detectors(base_resolved);

    std::vector<SweepPoint> out;
    out.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = values[i];
        RunSpec spec = base;
        spec.seed = derive_seed(base.seed, static_cast<std::uint64_t>(i));
        switch (var) {
        case SweepVariable::opd:
            spec.cfg.delay_opd = v;
            break;
        case SweepVariable::flux:
            if (!(v > 0.0))
                throw ConfigError("flux sweep values must be positive");
            spec.stream.kind = SourceKind::poissonian;
            spec.stream.mu = v;
            break;
        case SweepVariable::tilt:
            spec.cfg.tilt_R = 0.5 * v;
            spec.cfg.tilt_T = -0.5 * v;
            break;
        case SweepVariable::incidence:
            spec.cfg.incidence_auto = false;
            spec.cfg.incidence_angle_i = v;
            spec.cfg.reflectance_auto = true;
            break;
        }

        SweepPoint point;
        point.value = v;
        point.result = run(spec, frozen);
        const ModelContext ctx =
            build_model_context(point.result.resolved, frozen);
        point.w1_intensity = expected_w1_intensity(ctx, point.result.spec);
        out.push_back(std::move(point));
    }
    return out;
}

/// Evenly spaced sweep values, endpoints inclusive (steps intervals,
/// steps + 1 values).
inline std::vector<double> sweep_values(double from, double to, int steps) {
    if (steps < 1)
        throw ConfigError("sweep steps must be at least 1");
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(steps) + 1);
    for (int i = 0; i <= steps; ++i)
        values.push_back(from + (to - from) * (static_cast<double>(i) / steps));
    return values;
}

} // namespace duality
