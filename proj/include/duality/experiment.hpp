#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "duality/engine.hpp"
#include "duality/errors.hpp"
#include "duality/units.hpp"

namespace duality {

enum class OutputFormat { json, csv };

inline const char* output_format_name(OutputFormat f) {
    return f == OutputFormat::json ? "json" : "csv";
}

inline OutputFormat parse_output_format(const std::string& name) {
    if (name == "json") return OutputFormat::json;
    if (name == "csv") return OutputFormat::csv;
    throw ConfigError("unknown format '" + name + "'; expected json or csv");
}

/// A parsed experiment description: the run it requests plus where the
/// report goes. `out`/`format` are delivery options, not experiment
/// identity, so they are never echoed into reports.
struct ExperimentFile {
    int schema_version = 1;
    RunSpec spec;
    std::string out_path; // empty = stdout
    OutputFormat format = OutputFormat::json;
};

namespace detail {

inline int levenshtein(const std::string& a, const std::string& b) {
    std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j)
        prev[j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

/// Every key the experiment format accepts, in canonical (echo) order.
inline const std::vector<std::string>& experiment_keys() {
    static const std::vector<std::string> keys = {
        "schema_version", "model", "seed", "windows", "mode", "count_mode",
        "decision_delay_windows", "source", "mu", "quanta_per_photon",
        "phase_noise", "wavelength_nm", "glass_index", "incidence_deg",
        "polarization", "reflectance", "arm_path_r_m", "arm_path_t_m",
        "delay_opd_nm", "tilt_r_mrad", "tilt_t_mrad", "spot_center_r_um",
        "spot_center_t_um", "envelope", "envelope_width_um",
        "fiber_core_width_um", "which_way", "chopper", "chopper_rate_hz",
        "chopper_switch_window", "chopper_after", "chopper_after_rate_hz",
        "coincidence_window_us", "detection_window_us",
        "reflection_phase_deg", "w_click_threshold", "grid_points",
        "grid_span_mm", "fit_bins", "fit_span_mm", "out", "format"};
    return keys;
}

/// Base name -> suffixed key, for "you forgot the unit" diagnostics.
inline const std::vector<std::pair<std::string, std::string>>&
unit_base_names() {
    static const std::vector<std::pair<std::string, std::string>> map = {
        {"wavelength", "wavelength_nm"},
        {"incidence", "incidence_deg"},
        {"incidence_angle", "incidence_deg"},
        {"arm_path_r", "arm_path_r_m"},
        {"arm_path_t", "arm_path_t_m"},
        {"delay_opd", "delay_opd_nm"},
        {"opd", "delay_opd_nm"},
        {"tilt_r", "tilt_r_mrad"},
        {"tilt_t", "tilt_t_mrad"},
        {"spot_center_r", "spot_center_r_um"},
        {"spot_center_t", "spot_center_t_um"},
        {"envelope_width", "envelope_width_um"},
        {"fiber_core_width", "fiber_core_width_um"},
        {"chopper_rate", "chopper_rate_hz"},
        {"chopper_after_rate", "chopper_after_rate_hz"},
        {"coincidence_window", "coincidence_window_us"},
        {"detection_window", "detection_window_us"},
        {"reflection_phase", "reflection_phase_deg"},
        {"grid_span", "grid_span_mm"},
        {"fit_span", "fit_span_mm"},
        {"decision_delay", "decision_delay_windows"},
    };
    return map;
}

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a])))
        ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1])))
        --b;
    return s.substr(a, b - a);
}

inline double parse_double_value(const std::string& key,
                                 const std::string& value, int line) {
    double out = 0.0;
    const char* first = value.data();
    const char* last = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last)
        throw ParseError("key '" + key + "': cannot parse number from '" +
                             value + "'",
                         line);
    return out;
}

inline long long parse_int_value(const std::string& key,
                                 const std::string& value, int line) {
    long long out = 0;
    const char* first = value.data();
    const char* last = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last)
        throw ParseError("key '" + key + "': cannot parse integer from '" +
                             value + "'",
                         line);
    return out;
}

inline std::uint64_t parse_u64_value(const std::string& key,
                                     const std::string& value, int line) {
    std::uint64_t out = 0;
    const char* first = value.data();
    const char* last = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last)
        throw ParseError("key '" + key +
                             "': cannot parse unsigned integer from '" +
                             value + "'",
                         line);
    return out;
}

inline double parse_positive(const std::string& key, const std::string& value,
                             int line) {
    const double v = parse_double_value(key, value, line);
    if (!(v > 0.0))
        throw ParseError("key '" + key + "': value must be positive, got '" +
                             value + "'",
                         line);
    return v;
}

[[noreturn]] inline void unknown_key(const std::string& key, int line) {
    for (const auto& [base, full] : unit_base_names()) {
        if (key == base)
            throw ParseError("key '" + key +
                                 "' is a physical quantity and needs a unit "
                                 "suffix; use '" +
                                 full + "'",
                             line);
    }
    std::string best;
    int best_dist = 4; // suggest only reasonably close names
    for (const auto& known : experiment_keys()) {
        const int d = levenshtein(key, known);
        if (d < best_dist) {
            best_dist = d;
            best = known;
        }
    }
    std::string msg = "unknown key '" + key + "'";
    if (!best.empty())
        msg += "; did you mean '" + best + "'?";
    throw ParseError(msg, line);
}

inline ChopperMode parse_chopper_mode(const std::string& key,
                                      const std::string& value, int line) {
    if (value == "open") return ChopperMode::open;
    if (value == "block_r") return ChopperMode::block_R;
    if (value == "block_t") return ChopperMode::block_T;
    if (value == "chopping") return ChopperMode::chopping;
    throw ParseError("key '" + key + "': expected open, block_r, block_t or "
                                     "chopping, got '" +
                         value + "'",
                     line);
}

inline const char* chopper_mode_name(ChopperMode m) {
    switch (m) {
    case ChopperMode::open: return "open";
    case ChopperMode::block_R: return "block_r";
    case ChopperMode::block_T: return "block_t";
    case ChopperMode::chopping: return "chopping";
    }
    return "?";
}

inline const char* which_way_name(WhichWayMode m) {
    switch (m) {
    case WhichWayMode::automatic: return "automatic";
    case WhichWayMode::on: return "on";
    case WhichWayMode::off: return "off";
    }
    return "?";
}

inline const char* envelope_name(EnvelopeKind k) {
    return k == EnvelopeKind::gaussian ? "gaussian" : "sinc";
}

inline const char* polarization_name(Polarization p) {
    return p == Polarization::s ? "s" : "p";
}

inline const char* source_name(SourceKind k) {
    return k == SourceKind::heralded ? "heralded" : "poissonian";
}

inline const char* phase_noise_name(PhaseNoise n) {
    return n == PhaseNoise::none ? "none" : "per_quantum";
}

} // namespace detail

/// Parse the strict key = value experiment format. '#' starts a comment,
/// blank lines are ignored, every key is either consumed or rejected
/// (with a nearest-key or missing-unit suggestion), duplicates are
/// rejected, and physical quantities carry their unit in the key name.
inline ExperimentFile parse_experiment(const std::string& text) {
    using namespace detail;
    ExperimentFile file;
    RunSpec& spec = file.spec;
    ApparatusConfig& cfg = spec.cfg;

    std::set<std::string> seen;
    bool have_model = false;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string line = eol == std::string::npos
                               ? text.substr(pos)
                               : text.substr(pos, eol - pos);
        pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        const std::size_t hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected 'key = value', got '" + line + "'",
                             line_no);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ParseError("empty key before '='", line_no);
        if (value.empty())
            throw ParseError("key '" + key + "': empty value", line_no);
        if (!seen.insert(key).second)
            throw ParseError("duplicate key '" + key + "'", line_no);

        const auto enum_error = [&](const std::string& allowed) {
            return ParseError("key '" + key + "': expected " + allowed +
                                  ", got '" + value + "'",
                              line_no);
        };

        if (key == "schema_version") {
            const long long v = parse_int_value(key, value, line_no);
            if (v != 1)
                throw ParseError("key 'schema_version': this tool reads "
                                 "schema version 1, got " +
                                     value,
                                 line_no);
            file.schema_version = 1;
        } else if (key == "model") {
            try {
                spec.model = parse_model_name(value);
            } catch (const ConfigError& e) {
                throw ParseError(e.what(), line_no);
            }
            have_model = true;
        } else if (key == "seed") {
            spec.seed = parse_u64_value(key, value, line_no);
        } else if (key == "windows") {
            const long long v = parse_int_value(key, value, line_no);
            if (v < 1)
                throw ParseError("key 'windows': must be at least 1", line_no);
            spec.stream.n_windows = v;
        } else if (key == "mode") {
            try {
                spec.mode = parse_run_mode(value);
            } catch (const ConfigError& e) {
                throw ParseError(e.what(), line_no);
            }
        } else if (key == "count_mode") {
            try {
                spec.count_mode = parse_count_mode(value);
            } catch (const ConfigError& e) {
                throw ParseError(e.what(), line_no);
            }
        } else if (key == "decision_delay_windows") {
            const long long v = parse_int_value(key, value, line_no);
            if (v < 0)
                throw ParseError("key 'decision_delay_windows': must be "
                                 "nonnegative",
                                 line_no);
            spec.decision_delay = v;
        } else if (key == "source") {
            if (value == "heralded")
                spec.stream.kind = SourceKind::heralded;
            else if (value == "poissonian")
                spec.stream.kind = SourceKind::poissonian;
            else
                throw enum_error("heralded or poissonian");
        } else if (key == "mu") {
            const double v = parse_double_value(key, value, line_no);
            if (!(v >= 0.0))
                throw ParseError("key 'mu': must be nonnegative", line_no);
            spec.stream.mu = v;
        } else if (key == "quanta_per_photon") {
            const long long v = parse_int_value(key, value, line_no);
            if (v < 0)
                throw ParseError("key 'quanta_per_photon': must be "
                                 "nonnegative",
                                 line_no);
            spec.stream.quanta_per_photon = static_cast<int>(v);
        } else if (key == "phase_noise") {
            if (value == "none")
                spec.stream.phase_noise = PhaseNoise::none;
            else if (value == "per_quantum")
                spec.stream.phase_noise = PhaseNoise::per_quantum;
            else
                throw enum_error("none or per_quantum");
        } else if (key == "wavelength_nm") {
            cfg.wavelength = nm_to_si(parse_positive(key, value, line_no));
        } else if (key == "glass_index") {
            cfg.glass_index = parse_double_value(key, value, line_no);
        } else if (key == "incidence_deg") {
            if (value == "auto") {
                cfg.incidence_auto = true;
            } else {
                cfg.incidence_auto = false;
                cfg.incidence_angle_i =
                    deg_to_rad(parse_double_value(key, value, line_no));
            }
        } else if (key == "polarization") {
            if (value == "s")
                cfg.polarization = Polarization::s;
            else if (value == "p")
                cfg.polarization = Polarization::p;
            else
                throw enum_error("s or p");
        } else if (key == "reflectance") {
            if (value == "auto") {
                cfg.reflectance_auto = true;
            } else {
                cfg.reflectance_auto = false;
                cfg.reflectance = parse_double_value(key, value, line_no);
            }
        } else if (key == "arm_path_r_m") {
            cfg.arm_path_R = parse_double_value(key, value, line_no);
        } else if (key == "arm_path_t_m") {
            cfg.arm_path_T = parse_double_value(key, value, line_no);
        } else if (key == "delay_opd_nm") {
            cfg.delay_opd = nm_to_si(parse_double_value(key, value, line_no));
        } else if (key == "tilt_r_mrad") {
            cfg.tilt_R = mrad_to_si(parse_double_value(key, value, line_no));
        } else if (key == "tilt_t_mrad") {
            cfg.tilt_T = mrad_to_si(parse_double_value(key, value, line_no));
        } else if (key == "spot_center_r_um") {
            cfg.spot_center_R = um_to_si(parse_double_value(key, value, line_no));
        } else if (key == "spot_center_t_um") {
            cfg.spot_center_T = um_to_si(parse_double_value(key, value, line_no));
        } else if (key == "envelope") {
            if (value == "gaussian")
                cfg.envelope = EnvelopeKind::gaussian;
            else if (value == "sinc")
                cfg.envelope = EnvelopeKind::sinc;
            else
                throw enum_error("gaussian or sinc");
        } else if (key == "envelope_width_um") {
            cfg.envelope_width_w = um_to_si(parse_positive(key, value, line_no));
        } else if (key == "fiber_core_width_um") {
            cfg.fiber_core_width = um_to_si(parse_positive(key, value, line_no));
        } else if (key == "which_way") {
            if (value == "automatic")
                cfg.which_way = WhichWayMode::automatic;
            else if (value == "on")
                cfg.which_way = WhichWayMode::on;
            else if (value == "off")
                cfg.which_way = WhichWayMode::off;
            else
                throw enum_error("automatic, on or off");
        } else if (key == "chopper") {
            cfg.chopper.mode = parse_chopper_mode(key, value, line_no);
        } else if (key == "chopper_rate_hz") {
            cfg.chopper.rate_hz = parse_positive(key, value, line_no);
        } else if (key == "chopper_switch_window") {
            cfg.chopper_switch_window = parse_int_value(key, value, line_no);
        } else if (key == "chopper_after") {
            cfg.chopper_after.mode = parse_chopper_mode(key, value, line_no);
        } else if (key == "chopper_after_rate_hz") {
            cfg.chopper_after.rate_hz = parse_positive(key, value, line_no);
        } else if (key == "coincidence_window_us") {
            cfg.coincidence_window = us_to_si(parse_positive(key, value, line_no));
        } else if (key == "detection_window_us") {
            cfg.detection_window = us_to_si(parse_positive(key, value, line_no));
        } else if (key == "reflection_phase_deg") {
            cfg.reflection_phase =
                deg_to_rad(parse_double_value(key, value, line_no));
        } else if (key == "w_click_threshold") {
            cfg.w_click_threshold = parse_double_value(key, value, line_no);
        } else if (key == "grid_points") {
            const long long v = parse_int_value(key, value, line_no);
            if (v < 2)
                throw ParseError("key 'grid_points': must be at least 2",
                                 line_no);
            cfg.grid_points = static_cast<int>(v);
        } else if (key == "grid_span_mm") {
            cfg.grid_span = mm_to_si(parse_positive(key, value, line_no));
        } else if (key == "fit_bins") {
            const long long v = parse_int_value(key, value, line_no);
            if (v < 2)
                throw ParseError("key 'fit_bins': must be at least 2",
                                 line_no);
            cfg.fit_bins = static_cast<int>(v);
        } else if (key == "fit_span_mm") {
            cfg.fit_span = mm_to_si(parse_positive(key, value, line_no));
        } else if (key == "out") {
            file.out_path = value;
        } else if (key == "format") {
            try {
                file.format = parse_output_format(value);
            } catch (const ConfigError& e) {
                throw ParseError(e.what(), line_no);
            }
        } else {
            unknown_key(key, line_no);
        }
    }

    if (!have_model)
        throw ParseError("missing required key 'model'", 0);
    return file;
}

} // namespace duality
