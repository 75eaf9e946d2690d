#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "duality/engine.hpp"
#include "duality/experiment.hpp"
#include "duality/version.hpp"

namespace duality {

using ordered_json = nlohmann::ordered_json;

namespace detail {

inline ordered_json json_opt(const std::optional<double>& v) {
    if (v)
        return *v;
    return nullptr;
}

inline ordered_json json_opt(const std::optional<bool>& v) {
    if (v)
        return *v;
    return nullptr;
}

/// Shortest decimal that round-trips the double (CSV cells).
inline std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

inline std::string csv_cell(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

inline const char* inequality_name(Inequality q) {
    switch (q) {
    case Inequality::none: return "none";
    case Inequality::saturates: return "saturates";
    case Inequality::violates: return "violates";
    }
    return "?";
}

} // namespace detail

/// Effective experiment echo: every parseable key with its resolved
/// value, in canonical order. Feeding this object back as an experiment
/// file reproduces the run byte-exactly (unit conversions are pinned by
/// normalize_units at run entry). Delivery options (out, format) and
/// execution details (workers) are not experiment identity and never
/// appear here.
inline ordered_json render_echo(const RunResult& r) {
    using namespace detail;
    const RunSpec& spec = r.spec;
    const ApparatusConfig& cfg = r.resolved;
    ordered_json e;
    e["schema_version"] = 1;
    e["model"] = model_name(spec.model);
    e["seed"] = spec.seed;
    e["windows"] = spec.stream.n_windows;
    e["mode"] = run_mode_name(spec.mode);
    e["count_mode"] = count_mode_name(spec.count_mode);
    e["decision_delay_windows"] = spec.decision_delay;
    e["source"] = source_name(spec.stream.kind);
    e["mu"] = spec.stream.mu;
    e["quanta_per_photon"] = spec.stream.quanta_per_photon;
    e["phase_noise"] = phase_noise_name(spec.stream.phase_noise);
    e["wavelength_nm"] = echo_nm(cfg.wavelength);
    e["glass_index"] = cfg.glass_index;
    e["incidence_deg"] = echo_deg(cfg.incidence_angle_i);
    e["polarization"] = polarization_name(cfg.polarization);
    e["reflectance"] = cfg.reflectance;
    e["arm_path_r_m"] = cfg.arm_path_R;
    e["arm_path_t_m"] = cfg.arm_path_T;
    e["delay_opd_nm"] = echo_nm(cfg.delay_opd);
    e["tilt_r_mrad"] = echo_mrad(cfg.tilt_R);
    e["tilt_t_mrad"] = echo_mrad(cfg.tilt_T);
    e["spot_center_r_um"] = echo_um(cfg.spot_center_R);
    e["spot_center_t_um"] = echo_um(cfg.spot_center_T);
    e["envelope"] = envelope_name(cfg.envelope);
    e["envelope_width_um"] = echo_um(cfg.envelope_width_w);
    e["fiber_core_width_um"] = echo_um(cfg.fiber_core_width);
    e["which_way"] = which_way_name(cfg.which_way);
    e["chopper"] = chopper_mode_name(cfg.chopper.mode);
    e["chopper_rate_hz"] = cfg.chopper.rate_hz;
    e["chopper_switch_window"] = cfg.chopper_switch_window;
    e["chopper_after"] = chopper_mode_name(cfg.chopper_after.mode);
    e["chopper_after_rate_hz"] = cfg.chopper_after.rate_hz;
    e["coincidence_window_us"] = echo_us(cfg.coincidence_window);
    e["detection_window_us"] = echo_us(cfg.detection_window);
    e["reflection_phase_deg"] = echo_deg(cfg.reflection_phase);
    e["w_click_threshold"] = cfg.w_click_threshold;
    e["grid_points"] = cfg.grid_points;
    e["grid_span_mm"] = echo_mm(cfg.grid_span);
    e["fit_bins"] = cfg.fit_bins;
    e["fit_span_mm"] = echo_mm(cfg.fit_span);
    return e;
}

/// Render the echo as experiment-file text (key = value lines). Written
/// next to reports on request and used by the closure test.
inline std::string echo_to_experiment_text(const ordered_json& echo) {
    std::string out;
    for (const auto& [key, value] : echo.items()) {
        out += key;
        out += " = ";
        if (value.is_string())
            out += value.get<std::string>();
        else
            out += value.dump();
        out += "\n";
    }
    return out;
}

inline ordered_json render_table_row(const TableOnePrediction& row) {
    ordered_json t;
    t["school"] = row.school;
    t["expected_p"] = row.expected_p_text;
    t["expected_w"] = row.expected_w_text;
    t["p_range"] = {row.p_lo, row.p_hi};
    t["w_range"] = {row.w_lo, row.w_hi};
    t["inequality"] = detail::inequality_name(row.inequality);
    return t;
}

/// Full canonical report: fixed key order, shortest round-trip floats,
/// newline-terminated. Identical runs serialize byte-identically; wall
/// time is deliberately absent (it is the one non-reproducible number).
inline ordered_json render_report(const RunResult& r) {
    using namespace detail;
    ordered_json doc;
    doc["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    doc["schema_version"] = 1;
    doc["experiment"] = render_echo(r);

    ordered_json layout;
    layout["x_w1_m"] = r.layout.x_W1;
    layout["x_w2_m"] = r.layout.x_W2;
    layout["x_p1_m"] = json_opt(r.layout.x_P1);
    layout["x_p2_m"] = json_opt(r.layout.x_P2);
    layout["fiber_width_m"] = r.layout.fiber_width;
    doc["layout"] = layout;

    const DetectionSummary& s = r.summary;
    ordered_json summary;
    summary["n_windows"] = s.n_windows;
    summary["n_p1"] = s.n_p1;
    summary["n_p2"] = s.n_p2;
    summary["n_w1"] = s.n_w1;
    summary["n_w2"] = s.n_w2;
    summary["coincidences_p1p2"] = s.coincidences_p1p2;
    summary["singles_gates"] = s.singles_gates;
    summary["quanta_emitted"] = s.quanta_emitted;
    summary["photons_detected"] = s.photons_detected;
    summary["hist_events"] = s.hist_events;
    doc["summary"] = summary;

    const Metrics& m = r.metrics;
    ordered_json metrics;
    metrics["p_counts"] = json_opt(m.p_counts);
    metrics["p_ledger"] = json_opt(m.p_ledger);
    metrics["w"] = json_opt(m.w);
    metrics["visibility_fit"] = json_opt(m.visibility_fit);
    metrics["alpha"] = json_opt(m.alpha);
    metrics["slack"] = json_opt(m.slack);
    metrics["slack_sigma"] = json_opt(m.slack_sigma);
    metrics["violation_flag"] = m.violation_flag;
    metrics["w_click"] = m.w_click;
    metrics["photon_balance"] = json_opt(m.photon_balance);
    metrics["fit_note"] = m.fit_note;
    doc["metrics"] = metrics;

    doc["table_row"] = render_table_row(r.table_row);

    ordered_json conf;
    conf["p_ok"] = json_opt(r.conformance.p_ok);
    conf["w_ok"] = json_opt(r.conformance.w_ok);
    conf["inequality_ok"] = json_opt(r.conformance.inequality_ok);
    conf["alpha_ok"] = json_opt(r.conformance.alpha_ok);
    conf["overall"] = r.conformance.overall;
    doc["conformance"] = conf;
    return doc;
}

inline std::string report_to_string(const ordered_json& doc) {
    return doc.dump(2) + "\n";
}

/// CSV column header and file-unit cell value for a sweep variable.
inline std::string sweep_column_name(SweepVariable var) {
    switch (var) {
    case SweepVariable::opd: return "opd_nm";
    case SweepVariable::flux: return "mu";
    case SweepVariable::tilt: return "tilt_delta_mrad";
    case SweepVariable::incidence: return "incidence_deg";
    }
    return "?";
}

inline double sweep_file_value(SweepVariable var, double si) {
    using namespace detail;
    switch (var) {
    case SweepVariable::opd: return echo_nm(si);
    case SweepVariable::flux: return si;
    case SweepVariable::tilt: return echo_mrad(si);
    case SweepVariable::incidence: return echo_deg(si);
    }
    return si;
}

/// RFC-4180-style CSV of a sweep: fixed column set, LF endings, shortest
/// round-trip floats, absent metrics as empty cells.
inline std::string sweep_to_csv(SweepVariable var,
                                const std::vector<SweepPoint>& points) {
    using namespace detail;
    std::string out = sweep_column_name(var) +
                      ",p_counts,p_ledger,w,visibility_fit,slack,"
                      "n_p1,n_p2,n_w1,n_w2,w1_intensity\n";
    for (const auto& p : points) {
        const Metrics& m = p.result.metrics;
        const DetectionSummary& s = p.result.summary;
        out += format_double(sweep_file_value(var, p.value));
        out += ',' + csv_cell(m.p_counts);
        out += ',' + csv_cell(m.p_ledger);
        out += ',' + csv_cell(m.w);
        out += ',' + csv_cell(m.visibility_fit);
        out += ',' + csv_cell(m.slack);
        out += ',' + format_double(s.n_p1);
        out += ',' + format_double(s.n_p2);
        out += ',' + format_double(s.n_w1);
        out += ',' + format_double(s.n_w2);
        out += ',' + format_double(p.w1_intensity);
        out += '\n';
    }
    return out;
}

/// The five-model comparison at shared defaults, one row per model.
/// Per-model sub-seeds are derived from the base seed.
inline std::vector<RunResult> run_table_one(std::uint64_t seed,
                                            long long windows, int workers) {
    const ModelKind kinds[] = {
        ModelKind::particle, ModelKind::light_quanta, ModelKind::wave,
        ModelKind::quantum_complementarity, ModelKind::pilot_wave};
    std::vector<RunResult> rows;
    rows.reserve(5);
    for (std::size_t i = 0; i < 5; ++i) {
        RunSpec spec;
        spec.model = kinds[i];
        spec.seed = derive_seed(seed, static_cast<std::uint64_t>(i));
        spec.stream.n_windows = windows;
        spec.workers = workers;
        rows.push_back(run(spec));
    }
    return rows;
}

inline ordered_json render_table_one_json(const std::vector<RunResult>& rows) {
    using namespace detail;
    ordered_json doc;
    doc["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    doc["schema_version"] = 1;
    ordered_json arr = ordered_json::array();
    for (const auto& r : rows) {
        ordered_json row;
        row["model"] = model_name(r.spec.model);
        row["school"] = r.table_row.school;
        row["expected_p"] = r.table_row.expected_p_text;
        row["p_ledger"] = json_opt(r.metrics.p_ledger);
        row["expected_w"] = r.table_row.expected_w_text;
        row["w"] = json_opt(r.metrics.w);
        row["slack"] = json_opt(r.metrics.slack);
        row["inequality"] = inequality_name(r.table_row.inequality);
        row["violation_flag"] = r.metrics.violation_flag;
        row["conformant"] = r.conformance.overall;
        arr.push_back(row);
    }
    doc["rows"] = arr;
    bool all = true;
    for (const auto& r : rows)
        all = all && r.conformance.overall;
    doc["all_conformant"] = all;
    return doc;
}

/// Human-readable five-row comparison for the terminal.
inline std::string render_table_one_text(const std::vector<RunResult>& rows) {
    using namespace detail;
    auto fmt = [](const std::optional<double>& v) {
        if (!v)
            return std::string("-");
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4f", *v);
        return std::string(buf);
    };
    std::string out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-12s %-10s %-9s %-10s %-9s %-11s %s\n",
                  "model", "expect_P", "P_ledger", "expect_W", "W",
                  "inequality", "conform");
    out += line;
    for (const auto& r : rows) {
        const char* verdict = r.conformance.overall ? "yes" : "NO";
        std::string ineq = inequality_name(r.table_row.inequality);
        if (r.table_row.inequality == Inequality::violates &&
            r.metrics.violation_flag)
            ineq += "*";
        std::snprintf(line, sizeof(line), "%-12s %-10s %-9s %-10s %-9s %-11s %s\n",
                      model_name(r.spec.model), r.table_row.expected_p_text,
                      fmt(r.metrics.p_ledger).c_str(),
                      r.table_row.expected_w_text, fmt(r.metrics.w).c_str(),
                      ineq.c_str(), verdict);
        out += line;
    }
    return out;
}

/// Atomic text write: same-directory temp file, then rename.
inline void write_text_atomic(const std::string& path,
                              const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f)
            throw Error("cannot open '" + tmp + "' for writing");
        f.write(content.data(),
                static_cast<std::streamsize>(content.size()));
        if (!f)
            throw Error("short write to '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw Error("cannot rename '" + tmp + "' to '" + path + "'");
}

} // namespace duality
