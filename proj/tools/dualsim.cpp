// dualsim: Monte Carlo comparison of five models of light in a shared
// interferometer. Subcommands: run, sweep, table1, calibrate.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "duality/duality.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNonConformant = 2;

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw duality::Error("cannot open experiment file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void deliver(const std::string& out_path, const std::string& content) {
    if (out_path.empty())
        std::fputs(content.c_str(), stdout);
    else
        duality::write_text_atomic(out_path, content);
}

/// Flag values that override experiment-file keys when present.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<long long> windows;
    std::optional<std::string> mode;
    std::optional<std::string> count_mode;
    std::optional<long long> delay;
    std::optional<int> workers;
    std::optional<std::string> out;
    std::optional<std::string> format;
};

void add_override_flags(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("--seed", ov.seed, "Random seed (64-bit unsigned)");
    cmd->add_option("--windows", ov.windows, "Number of emission windows");
    cmd->add_option("--mode", ov.mode,
                    "Run mode: standard, chopper_coincidence, delayed_choice");
    cmd->add_option("--count-mode", ov.count_mode,
                    "Detector counting: exact or sampled");
    cmd->add_option("--delay", ov.delay,
                    "Decision delay in windows (delayed_choice mode)");
    cmd->add_option("--workers", ov.workers, "Worker threads");
    cmd->add_option("--out", ov.out, "Output path (default: stdout)");
    cmd->add_option("--format", ov.format, "Output format: json or csv");
}

duality::ExperimentFile load_experiment(const std::string& path,
                                        const Overrides& ov) {
    duality::ExperimentFile file = duality::parse_experiment(read_file(path));
    if (ov.seed)
        file.spec.seed = *ov.seed;
    if (ov.windows) {
        if (*ov.windows < 1)
            throw duality::ConfigError("--windows must be at least 1");
        file.spec.stream.n_windows = *ov.windows;
    }
    if (ov.mode)
        file.spec.mode = duality::parse_run_mode(*ov.mode);
    if (ov.count_mode)
        file.spec.count_mode = duality::parse_count_mode(*ov.count_mode);
    if (ov.delay) {
        if (*ov.delay < 0)
            throw duality::ConfigError("--delay must be nonnegative");
        file.spec.decision_delay = *ov.delay;
    }
    if (ov.workers) {
        if (*ov.workers < 1)
            throw duality::ConfigError("--workers must be at least 1");
        file.spec.workers = *ov.workers;
    }
    if (ov.out)
        file.out_path = *ov.out;
    if (ov.format)
        file.format = duality::parse_output_format(*ov.format);
    return file;
}

/// Single-run metrics as a one-row CSV (same cells as a sweep row, minus
/// the sweep variable).
std::string run_to_csv(const duality::RunResult& r) {
    using duality::detail::csv_cell;
    using duality::detail::format_double;
    const duality::Metrics& m = r.metrics;
    const duality::DetectionSummary& s = r.summary;
    std::string out =
        "p_counts,p_ledger,w,visibility_fit,alpha,slack,"
        "n_p1,n_p2,n_w1,n_w2\n";
    out += csv_cell(m.p_counts);
    out += ',' + csv_cell(m.p_ledger);
    out += ',' + csv_cell(m.w);
    out += ',' + csv_cell(m.visibility_fit);
    out += ',' + csv_cell(m.alpha);
    out += ',' + csv_cell(m.slack);
    out += ',' + format_double(s.n_p1);
    out += ',' + format_double(s.n_p2);
    out += ',' + format_double(s.n_w1);
    out += ',' + format_double(s.n_w2);
    out += '\n';
    return out;
}

int cmd_run(const std::string& path, const Overrides& ov) {
    const duality::ExperimentFile file = load_experiment(path, ov);

    if (file.spec.mode == duality::RunMode::delayed_choice) {
        const duality::DelayedChoicePair pair =
            duality::run_delayed_choice(file.spec);
        duality::ordered_json doc = duality::render_report(pair.delayed);
        duality::ordered_json deltas = duality::ordered_json::array();
        for (const auto& d : pair.deltas) {
            duality::ordered_json row;
            row["metric"] = d.name;
            row["immediate"] = duality::detail::json_opt(d.before);
            row["delayed"] = duality::detail::json_opt(d.after);
            row["abs_delta"] = d.abs_delta;
            deltas.push_back(row);
        }
        doc["delayed_choice"] = {
            {"decision_delay_windows", file.spec.decision_delay},
            {"deltas", deltas}};
        deliver(file.out_path, duality::report_to_string(doc));
        return pair.delayed.conformance.overall ? kExitOk : kExitNonConformant;
    }

    const duality::RunResult result = duality::run(file.spec);
    if (file.format == duality::OutputFormat::csv)
        deliver(file.out_path, run_to_csv(result));
    else
        deliver(file.out_path,
                duality::report_to_string(duality::render_report(result)));
    return result.conformance.overall ? kExitOk : kExitNonConformant;
}

int cmd_sweep(const std::string& path, const Overrides& ov,
              const std::string& var_name, double from, double to, int steps) {
    duality::ExperimentFile file = load_experiment(path, ov);
    const duality::SweepVariable var = duality::parse_sweep_variable(var_name);

    // Flag values arrive in file units; the engine speaks SI.
    double from_si = from, to_si = to;
    switch (var) {
    case duality::SweepVariable::opd:
        from_si = duality::detail::nm_to_si(from);
        to_si = duality::detail::nm_to_si(to);
        break;
    case duality::SweepVariable::tilt:
        from_si = duality::detail::mrad_to_si(from);
        to_si = duality::detail::mrad_to_si(to);
        break;
    case duality::SweepVariable::incidence:
        from_si = duality::deg_to_rad(from);
        to_si = duality::deg_to_rad(to);
        break;
    case duality::SweepVariable::flux:
        break;
    }

    const auto values = duality::sweep_values(from_si, to_si, steps);
    const auto points = duality::sweep(file.spec, var, values);
    deliver(file.out_path, duality::sweep_to_csv(var, points));
    return kExitOk;
}

int cmd_table1(const Overrides& ov) {
    const std::uint64_t seed = ov.seed.value_or(duality::kDefaultSeed);
    const long long windows = ov.windows.value_or(100000);
    const int workers = ov.workers.value_or(1);
    if (windows < 1)
        throw duality::ConfigError("--windows must be at least 1");
    if (workers < 1)
        throw duality::ConfigError("--workers must be at least 1");

    const auto rows = duality::run_table_one(seed, windows, workers);
    std::fputs(duality::render_table_one_text(rows).c_str(), stdout);
    if (ov.out)
        duality::write_text_atomic(
            *ov.out,
            duality::report_to_string(duality::render_table_one_json(rows)));
    for (const auto& r : rows)
        if (!r.conformance.overall)
            return kExitNonConformant;
    return kExitOk;
}

int cmd_calibrate(const std::string& path, double index,
                  const std::string& pol_name) {
    duality::ApparatusConfig cfg;
    if (!path.empty()) {
        const duality::ExperimentFile file =
            duality::parse_experiment(read_file(path));
        cfg = file.spec.cfg;
    } else {
        cfg.glass_index = index;
        if (pol_name == "s")
            cfg.polarization = duality::Polarization::s;
        else if (pol_name == "p")
            cfg.polarization = duality::Polarization::p;
        else
            throw duality::ConfigError("polarization must be s or p");
    }
    const double angle = duality::calibrate_incidence(cfg);
    const double achieved =
        duality::fresnel(1.0, cfg.glass_index, angle, cfg.polarization)
            .reflectance;
    std::printf("calibrated incidence: %.4f deg\n",
                duality::rad_to_deg(angle));
    std::printf("reflectance residual |R - 0.5|: %.3e\n",
                std::abs(achieved - 0.5));
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo comparison of five models of light in a "
                 "Mach-Zehnder / two-beam focal interferometer"};
    app.require_subcommand(1);

    std::string run_file, sweep_file, cal_file;
    Overrides run_ov, sweep_ov, table_ov;
    std::string sweep_var;
    double sweep_from = 0.0, sweep_to = 0.0;
    int sweep_steps = 0;
    double cal_index = 1.5;
    std::string cal_pol = "s";

    CLI::App* run_cmd =
        app.add_subcommand("run", "Run one experiment and write its report");
    run_cmd->add_option("file", run_file, "Experiment file")->required();
    add_override_flags(run_cmd, run_ov);

    CLI::App* sweep_cmd = app.add_subcommand(
        "sweep", "Run a parameter sweep and write a CSV series");
    sweep_cmd->add_option("file", sweep_file, "Experiment file")->required();
    sweep_cmd
        ->add_option("--sweep", sweep_var,
                     "Swept variable: opd, flux, tilt, incidence")
        ->required();
    sweep_cmd->add_option("--from", sweep_from, "First value (file units)")
        ->required();
    sweep_cmd->add_option("--to", sweep_to, "Last value (file units)")
        ->required();
    sweep_cmd->add_option("--steps", sweep_steps, "Number of intervals")
        ->required();
    add_override_flags(sweep_cmd, sweep_ov);

    CLI::App* table_cmd = app.add_subcommand(
        "table1", "Run all five models at defaults and compare");
    add_override_flags(table_cmd, table_ov);

    CLI::App* cal_cmd = app.add_subcommand(
        "calibrate", "Solve the balanced-splitter incidence angle");
    cal_cmd->add_option("file", cal_file, "Experiment file (optional)");
    cal_cmd->add_option("--index", cal_index, "Glass refractive index");
    cal_cmd->add_option("--polarization", cal_pol, "s or p");

    // Map every argument-parsing failure onto the documented error exit
    // code; --help and --version still leave with status 0.
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (run_cmd->parsed())
            return cmd_run(run_file, run_ov);
        if (sweep_cmd->parsed())
            return cmd_sweep(sweep_file, sweep_ov, sweep_var, sweep_from,
                             sweep_to, sweep_steps);
        if (table_cmd->parsed())
            return cmd_table1(table_ov);
        if (cal_cmd->parsed())
            return cmd_calibrate(cal_file, cal_index, cal_pol);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitError;
    }
    return kExitError;
}
