#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "duality/detection.hpp"
#include "duality/errors.hpp"
#include "duality/placement.hpp"
#include "duality/rng.hpp"
#include "duality/sampling.hpp"

namespace duality {

/// The five competing readings of what a photon is.
enum class ModelKind { particle, light_quanta, wave, quantum_complementarity, pilot_wave };

inline const char* model_name(ModelKind k) {
    switch (k) {
    case ModelKind::particle: return "particle";
    case ModelKind::light_quanta: return "light_quanta";
    case ModelKind::wave: return "wave";
    case ModelKind::quantum_complementarity: return "quantum";
    case ModelKind::pilot_wave: return "pilot_wave";
    }
    return "?";
}

inline ModelKind parse_model_name(const std::string& name) {
    if (name == "particle") return ModelKind::particle;
    if (name == "light_quanta") return ModelKind::light_quanta;
    if (name == "wave") return ModelKind::wave;
    if (name == "quantum") return ModelKind::quantum_complementarity;
    if (name == "pilot_wave") return ModelKind::pilot_wave;
    throw ConfigError("unknown model '" + name +
                      "'; expected particle, light_quanta, wave, quantum or "
                      "pilot_wave");
}

enum class Inequality { none, saturates, violates };

/// The comparison row a model is held to: expected which-way information
/// and visibility under the default (balanced, single-photon) apparatus,
/// plus what the model does to P^2 + W^2 <= 1.
struct TableOnePrediction {
    const char* school;
    const char* expected_p_text;
    const char* expected_w_text;
    double p_lo, p_hi;
    double w_lo, w_hi;
    Inequality inequality;
};

inline TableOnePrediction predict(ModelKind kind) {
    switch (kind) {
    case ModelKind::particle:
        return {"Newtonian corpuscle", "1", "0", 0.98, 1.0, 0.0, 0.05,
                Inequality::none};
    case ModelKind::light_quanta:
        return {"light quanta", "1", "0", 0.98, 1.0, 0.0, 0.05,
                Inequality::none};
    case ModelKind::wave:
        return {"Maxwellian wave", "0", "1", 0.0, 0.02, 0.98, 1.0,
                Inequality::none};
    case ModelKind::quantum_complementarity:
        return {"Bohr complementarity", "P2+W2<=1", "P2+W2<=1", 0.0, 1.0, 0.0,
                1.0, Inequality::saturates};
    case ModelKind::pilot_wave:
    default:
        return {"de Broglie-Bohm pilot wave", "1", "1", 0.98, 1.0, 0.98, 1.0,
                Inequality::violates};
    }
}

enum class SourceKind { heralded, poissonian };
enum class PhaseNoise { none, per_quantum };

/// Abstracted emission source: either one heralded photon per window
/// (quanta_per_photon quanta in the light-quanta model) or a Poissonian
/// mean of mu quanta per window.
struct EmissionStream {
    SourceKind kind = SourceKind::heralded;
    double mu = 1.0;
    long long n_windows = 100000;
    int quanta_per_photon = 1;
    PhaseNoise phase_noise = PhaseNoise::none;
};

/// One quantum in flight (the light-quanta model's unit of bookkeeping).
struct LightQuantumRecord {
    long long window_id = 0;
    Arm arm = Arm::R;
    PhaseLedger ledger;
    Amplitude amplitude;
    double landing_x = 0.0;
};

namespace detail {

/// Nodes and weights of 16-point Gauss-Legendre quadrature on [-1, 1],
/// computed once by Newton iteration on P16 (no tabulated constants).
inline const std::array<std::pair<double, double>, 16>& gauss_legendre_16() {
    static const auto table = [] {
        std::array<std::pair<double, double>, 16> t{};
        constexpr int n = 16;
        for (int i = 0; i < n; ++i) {
            double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
            for (int iter = 0; iter < 100; ++iter) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                const double dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double step = p1 / dp;
                x -= step;
                if (std::abs(step) < 1e-15)
                    break;
            }
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double dp = n * (x * p1 - p0) / (x * x - 1.0);
            t[i] = {x, 2.0 / ((1.0 - x * x) * dp * dp)};
        }
        return t;
    }();
    return table;
}

} // namespace detail

/// Fiber-integrated products of the two energy-normalized arm modes:
/// rr = int |u_R|^2, tt = int |u_T|^2, rt = int u_R conj(u_T) over the
/// pickup window.
struct FiberOverlap {
    double x_det = 0.0;
    double rr = 0.0;
    double tt = 0.0;
    Amplitude rt;
};

/// Everything a model needs per run, computed once: resolved config,
/// synthesized open field, fiber layout, landing samplers, and the
/// light-quanta mode tables.
struct ModelContext {
    ApparatusConfig cfg; // resolved
    FocalField field;    // both arms open
    DetectorLayout layout;
    SamplerSet samplers;

    double phi_R = 0.0, phi_T = 0.0; // arm ledger phases
    double mode_norm = 1.0;          // int E^2 dx of one arm envelope

    std::vector<FiberOverlap> fibers; // order: W1, W2 [, P1, P2]
    Amplitude overlap_rt;             // full-line int u_R conj(u_T)

    // Per-fit-bin mode products (times bin width) for the light-quanta
    // landing histogram: |u_R|^2, |u_T|^2, u_R conj(u_T).
    std::vector<double> bin_x, bin_a, bin_b;
    std::vector<Amplitude> bin_g;

    /// Energy-normalized mode of one arm at x (carrier included, ledger
    /// phase excluded — that travels with each quantum's phasor).
    Amplitude mode(Arm arm, double x) const {
        const double c = arm == Arm::R ? cfg.spot_center_R : cfg.spot_center_T;
        const double tilt = arm == Arm::R ? cfg.tilt_R : cfg.tilt_T;
        const double env = envelope_amp(cfg.envelope, (x - c) / cfg.envelope_width_w);
        const double k = kTwoPi / cfg.wavelength;
        return env / std::sqrt(mode_norm) * unit_phasor(wrap_phase(k * tilt * x));
    }
};

/// Build the per-run context. A caller may pin the fiber layout (sweeps
/// keep the fibers bolted down while a parameter scans); by default the
/// fibers are aligned on this config's own fringe pattern.
inline ModelContext
build_model_context(const ApparatusConfig& raw,
                    const std::optional<DetectorLayout>& frozen_layout = {}) {
    ModelContext ctx;
    ctx.cfg = resolve_optics(raw);
    validate(ctx.cfg);
    ctx.layout = frozen_layout ? *frozen_layout : place_detectors(ctx.cfg);

    ApparatusConfig open_cfg = ctx.cfg;
    open_cfg.chopper.mode = ChopperMode::open;
    open_cfg.chopper_switch_window = -1;
    ctx.field = synthesize_field(open_cfg);
    ctx.samplers = build_samplers(ctx.field);

    ctx.phi_R = ledger_phase(arm_ledger(ctx.cfg, Arm::R), ctx.cfg.wavelength,
                             ctx.cfg.reflection_phase);
    ctx.phi_T = ledger_phase(arm_ledger(ctx.cfg, Arm::T), ctx.cfg.wavelength,
                             ctx.cfg.reflection_phase);

    const double w = ctx.cfg.envelope_width_w;
    ctx.mode_norm = ctx.cfg.envelope == EnvelopeKind::gaussian
                        ? w * std::sqrt(kPi)
                        : w;

    const auto fiber_overlap = [&](double x_det) {
        FiberOverlap f;
        f.x_det = x_det;
        const auto [a, b] = ctx.layout.pickup(x_det);
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        for (const auto& [node, weight] : detail::gauss_legendre_16()) {
            const double x = mid + half * node;
            const Amplitude ur = ctx.mode(Arm::R, x);
            const Amplitude ut = ctx.mode(Arm::T, x);
            f.rr += weight * half * std::norm(ur);
            f.tt += weight * half * std::norm(ut);
            f.rt += weight * half * ur * std::conj(ut);
        }
        return f;
    };
    ctx.fibers.push_back(fiber_overlap(ctx.layout.x_W1));
    ctx.fibers.push_back(fiber_overlap(ctx.layout.x_W2));
    if (ctx.layout.has_which_way()) {
        ctx.fibers.push_back(fiber_overlap(*ctx.layout.x_P1));
        ctx.fibers.push_back(fiber_overlap(*ctx.layout.x_P2));
    }

    // Full-line mode overlap by trapezoid over the synthesis grid.
    ctx.overlap_rt = Amplitude(0.0, 0.0);
    for (std::size_t i = 0; i + 1 < ctx.field.x_grid.size(); ++i) {
        const double x0 = ctx.field.x_grid[i];
        const double x1 = ctx.field.x_grid[i + 1];
        const Amplitude v0 = ctx.mode(Arm::R, x0) * std::conj(ctx.mode(Arm::T, x0));
        const Amplitude v1 = ctx.mode(Arm::R, x1) * std::conj(ctx.mode(Arm::T, x1));
        ctx.overlap_rt += 0.5 * (v0 + v1) * (x1 - x0);
    }

    const double bin = ctx.cfg.fit_span / ctx.cfg.fit_bins;
    const double mid = 0.5 * (ctx.cfg.spot_center_R + ctx.cfg.spot_center_T);
    const double lo = mid - 0.5 * ctx.cfg.fit_span;
    for (int i = 0; i < ctx.cfg.fit_bins; ++i) {
        const double x = lo + (i + 0.5) * bin;
        const Amplitude ur = ctx.mode(Arm::R, x);
        const Amplitude ut = ctx.mode(Arm::T, x);
        ctx.bin_x.push_back(x);
        ctx.bin_a.push_back(std::norm(ur) * bin);
        ctx.bin_b.push_back(std::norm(ut) * bin);
        ctx.bin_g.push_back(ur * std::conj(ut) * bin);
    }
    return ctx;
}

/// Histogram window of the fringe fit (shared by all models).
inline void init_summary_hist(DetectionSummary& s, const ModelContext& ctx) {
    const double bin = ctx.cfg.fit_span / ctx.cfg.fit_bins;
    const double mid = 0.5 * (ctx.cfg.spot_center_R + ctx.cfg.spot_center_T);
    s.init_hist(mid - 0.5 * ctx.cfg.fit_span, bin, ctx.cfg.fit_bins);
}

/// Emission epoch of a window (drives the square-wave chopper).
inline double window_time(const ModelContext& ctx, long long window_id) {
    return static_cast<double>(window_id) * ctx.cfg.detection_window;
}

// --- The five schools -------------------------------------------------

/// Pure corpuscle: one definite arm, no interference; lands on its own
/// arm's envelope. Fully which-way attributable.
inline DetectionEvent simulate_event_particle(const ModelContext& ctx,
                                              const ChopperState& chopper,
                                              long long window_id,
                                              CounterRng& rng) {
    DetectionEvent ev;
    ev.window_id = window_id;
    const Arm arm = rng.bernoulli(ctx.cfg.reflectance) ? Arm::R : Arm::T;
    ev.arm = arm;
    ev.predictability = 1.0;
    if (!chopper_transmit_state(chopper, arm, window_time(ctx, window_id))) {
        ev.lost = true;
        return ev;
    }
    const DensitySampler& sampler =
        arm == Arm::R ? ctx.samplers.env_R : ctx.samplers.env_T;
    ev.landing_x = sampler.sample(rng.uniform());
    return ev;
}

/// Pure wave: divisible, never localized in an arm. Lands on the full
/// interference pattern (or the surviving envelope when an arm is
/// blocked). Carries no attribution at all.
inline DetectionEvent simulate_event_wave(const ModelContext& ctx,
                                          const ChopperState& chopper,
                                          long long window_id,
                                          CounterRng& rng) {
    DetectionEvent ev;
    ev.window_id = window_id;
    ev.predictability = 0.0;
    const double t = window_time(ctx, window_id);
    const bool open_R = chopper_transmit_state(chopper, Arm::R, t);
    const bool open_T = chopper_transmit_state(chopper, Arm::T, t);
    const DensitySampler& sampler = open_R && open_T ? ctx.samplers.coherent
                                    : open_R         ? ctx.samplers.env_R
                                                     : ctx.samplers.env_T;
    ev.landing_x = sampler.sample(rng.uniform());
    return ev;
}

/// Complementarity: lands on the interference pattern while carrying the
/// a-priori predictability |R - T| from the splitter imbalance; blocking
/// one arm makes the path fully known and kills the fringes.
inline DetectionEvent simulate_event_quantum(const ModelContext& ctx,
                                             const ChopperState& chopper,
                                             long long window_id,
                                             CounterRng& rng) {
    DetectionEvent ev;
    ev.window_id = window_id;
    const double t = window_time(ctx, window_id);
    const bool open_R = chopper_transmit_state(chopper, Arm::R, t);
    const bool open_T = chopper_transmit_state(chopper, Arm::T, t);
    if (open_R && open_T) {
        ev.predictability =
            std::abs(2.0 * ctx.cfg.reflectance - 1.0);
        ev.landing_x = ctx.samplers.coherent.sample(rng.uniform());
        return ev;
    }
    const Arm taken = rng.bernoulli(ctx.cfg.reflectance) ? Arm::R : Arm::T;
    const bool survives = (taken == Arm::R) ? open_R : open_T;
    ev.predictability = 1.0;
    ev.arm = taken;
    if (!survives) {
        ev.lost = true;
        return ev;
    }
    ev.landing_x = (taken == Arm::R ? ctx.samplers.env_R : ctx.samplers.env_T)
                       .sample(rng.uniform());
    return ev;
}

/// Pilot wave: a definite particle guided by the full wave. The arm tag
/// lives in the simulation ledger; the landing follows the interference
/// pattern, so P = 1 and W = 1 can coexist.
inline DetectionEvent simulate_event_pilot_wave(const ModelContext& ctx,
                                                const ChopperState& chopper,
                                                long long window_id,
                                                CounterRng& rng) {
    DetectionEvent ev;
    ev.window_id = window_id;
    const double t = window_time(ctx, window_id);
    const Arm arm = rng.bernoulli(ctx.cfg.reflectance) ? Arm::R : Arm::T;
    ev.arm = arm;
    ev.predictability = 1.0;
    if (!chopper_transmit_state(chopper, arm, t)) {
        ev.lost = true;
        return ev;
    }
    const bool open_R = chopper_transmit_state(chopper, Arm::R, t);
    const bool open_T = chopper_transmit_state(chopper, Arm::T, t);
    const DensitySampler& sampler = open_R && open_T ? ctx.samplers.coherent
                                    : open_R         ? ctx.samplers.env_R
                                                     : ctx.samplers.env_T;
    ev.landing_x = sampler.sample(rng.uniform());
    return ev;
}

/// Outcome of one light-quanta window: the per-arm coherent phasor sums
/// and the expected (or sampled) photon counts they produce.
struct LqWindowResult {
    long long n_quanta = 0;
    long long n_absorbed = 0;
    Amplitude s_R, s_T;
    std::vector<double> fiber_counts; // aligned with ctx.fibers
    double total_detected = 0.0;      // full-plane expected photons
    double distinguishability = 0.0;  // | |S_R|^2 - |S_T|^2 | / total
};

/// One emission window of the light-quanta model. Every quantum takes a
/// definite arm and carries its ledger phase; within the window all
/// phasors of one arm sum coherently, and each detector's expected photon
/// count is the square modulus of the summed amplitude integrated over
/// the fiber. A lone quantum therefore never interferes with itself: its
/// cross terms are identically zero and its count reduces to |amp|^2.
inline LqWindowResult simulate_window_light_quanta(const ModelContext& ctx,
                                                   const ChopperState& chopper,
                                                   const EmissionStream& stream,
                                                   long long window_id,
                                                   CounterRng& rng) {
    LqWindowResult out;
    const double t = window_time(ctx, window_id);
    const double piston = rng.uniform_phase();
    const long long n = stream.kind == SourceKind::heralded
                            ? stream.quanta_per_photon
                            : rng.poisson(stream.mu);
    out.n_quanta = n;
    for (long long q = 0; q < n; ++q) {
        const Arm arm = rng.bernoulli(ctx.cfg.reflectance) ? Arm::R : Arm::T;
        double phase = (arm == Arm::R ? ctx.phi_R : ctx.phi_T) + piston;
        if (stream.phase_noise == PhaseNoise::per_quantum)
            phase += rng.uniform_phase();
        if (!chopper_transmit_state(chopper, arm, t)) {
            ++out.n_absorbed;
            continue;
        }
        if (arm == Arm::R)
            out.s_R += unit_phasor(phase);
        else
            out.s_T += unit_phasor(phase);
    }

    const double ir = std::norm(out.s_R);
    const double it = std::norm(out.s_T);
    const Amplitude z = out.s_R * std::conj(out.s_T);
    out.fiber_counts.resize(ctx.fibers.size());
    for (std::size_t d = 0; d < ctx.fibers.size(); ++d) {
        const FiberOverlap& f = ctx.fibers[d];
        const double mean =
            ir * f.rr + it * f.tt + 2.0 * (z.real() * f.rt.real() - z.imag() * f.rt.imag());
        out.fiber_counts[d] = mean > 0.0 ? mean : 0.0;
    }
    out.total_detected =
        ir + it + 2.0 * (z.real() * ctx.overlap_rt.real() -
                         z.imag() * ctx.overlap_rt.imag());
    if (out.total_detected > 0.0)
        out.distinguishability = std::abs(ir - it) / out.total_detected;
    return out;
}

/// Expected light-quanta intensity profile added to the landing
/// histogram for one window (exact mode adds these means; sampled mode
/// draws Poisson counts from them).
inline double lq_bin_mean(const ModelContext& ctx, const LqWindowResult& w,
                          std::size_t bin) {
    const double ir = std::norm(w.s_R);
    const double it = std::norm(w.s_T);
    const Amplitude z = w.s_R * std::conj(w.s_T);
    const double v = ir * ctx.bin_a[bin] + it * ctx.bin_b[bin] +
                     2.0 * (z.real() * ctx.bin_g[bin].real() -
                            z.imag() * ctx.bin_g[bin].imag());
    return v > 0.0 ? v : 0.0;
}

} // namespace duality
