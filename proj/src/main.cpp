// stark-sense: command-line front end tying the analytic model, the master
// equation sweep, and the drive-sensing inversion into file-based pipelines.
//
// Units everywhere: ordinary frequencies and amplitudes in GHz (omega/2pi),
// times in ns, powers in dBm (absolute) or dB (relative).

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "starksense/config.hpp"
#include "starksense/csv_io.hpp"
#include "starksense/errors.hpp"
#include "starksense/lindblad.hpp"
#include "starksense/qudit_model.hpp"
#include "starksense/sensing.hpp"
#include "starksense/sweep.hpp"
#include "starksense/transmon.hpp"
#include "starksense/version.hpp"

namespace {

using nlohmann::json;
using namespace starksense;

constexpr int kExitFailure = 1;         // invalid config, domain or I/O error
constexpr int kExitNoConvergence = 3;   // sense: iterative inversion failed
constexpr int kExitIllConditioned = 4;  // sense: estimate flagged ill-conditioned
constexpr int kExitPartialFailure = 5;  // calibrate: some rows failed

// ---------------------------------------------------------------------------
// Config assembly: file, then --set overrides, then direct flags.

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    double omega_q = 0.0, gamma = 0.0, e_c = 0.0, e_j = 0.0;
    CLI::Option* omega_q_opt = nullptr;
    CLI::Option* gamma_opt = nullptr;
    CLI::Option* e_c_opt = nullptr;
    CLI::Option* e_j_opt = nullptr;
    int order = 4;
    std::string out_path;
};

void add_common_options(CLI::App* cmd, CommonArgs& args, bool with_circuit) {
    cmd->add_option("--config", args.config_path, "config file (flat 'dotted.key = value' text)");
    cmd->add_option("--set", args.overrides,
                    "ad-hoc config override 'key=value' (repeatable, applied after --config)");
    cmd->add_option("--order", args.order, "perturbation order for analytic lines, 0..4")
        ->check(CLI::Range(0, 4))
        ->capture_default_str();
    if (with_circuit) {
        args.omega_q_opt =
            cmd->add_option("--omega-q", args.omega_q, "bare ladder frequency omega_q, GHz");
        args.gamma_opt =
            cmd->add_option("--gamma", args.gamma, "anharmonicity parameter gamma, GHz");
        args.e_c_opt = cmd->add_option("--e-c", args.e_c, "charging energy E_C, GHz");
        args.e_j_opt = cmd->add_option("--e-j", args.e_j, "Josephson energy E_J, GHz");
    }
}

config::ConfigFile assemble_config(const CommonArgs& args) {
    config::ConfigFile cfg = args.config_path.empty() ? config::ConfigFile("<args>")
                                                      : config::parse_file(args.config_path);
    for (const std::string& item : args.overrides) {
        const size_t eq = item.find('=');
        if (eq == std::string::npos || eq == 0)
            throw config::ConfigError("--set expects 'key=value', got '" + item + "'");
        cfg.set(item.substr(0, eq), item.substr(eq + 1));
    }
    if (args.omega_q_opt && args.omega_q_opt->count())
        cfg.set("circuit.omega_q", csv::format_double(args.omega_q));
    if (args.gamma_opt && args.gamma_opt->count())
        cfg.set("circuit.gamma", csv::format_double(args.gamma));
    if (args.e_c_opt && args.e_c_opt->count())
        cfg.set("circuit.e_c", csv::format_double(args.e_c));
    if (args.e_j_opt && args.e_j_opt->count())
        cfg.set("circuit.e_j", csv::format_double(args.e_j));
    return cfg;
}

// ---------------------------------------------------------------------------
// Resolution of config blocks into library inputs.

struct ResolvedCircuit {
    qudit::CircuitParams analytic{0.0, 0.0};  // anchored to the undriven lines
    double bare_omega01 = 0.0;                // GHz
    double bare_gamma = 0.0;                  // GHz
    std::vector<double> energies;             // lab energies, GHz, E_0 = 0
    std::vector<double> ladder;               // k <-> k+1 weights
    int levels = 0;
    bool from_transmon = false;
};

// Exactly one of (circuit.omega_q, circuit.gamma) or (circuit.e_c,
// circuit.e_j). The transmon path diagonalizes the circuit and anchors the
// analytic ladder to its first two transitions: gamma = 4*(w01 - w02/2),
// omega_q = w01 + gamma/2. The model path uses Kerr energies
// E_k = omega_q*k - (gamma/4)*k*(k+1) with harmonic sqrt(k+1) weights.
ResolvedCircuit resolve_circuit(const config::ConfigFile& cfg) {
    const bool has_wq = cfg.has("circuit.omega_q"), has_g = cfg.has("circuit.gamma");
    const bool has_ec = cfg.has("circuit.e_c"), has_ej = cfg.has("circuit.e_j");
    if (has_wq != has_g)
        throw config::ConfigError(cfg.origin() +
                                  ": circuit.omega_q and circuit.gamma must come together");
    if (has_ec != has_ej)
        throw config::ConfigError(cfg.origin() +
                                  ": circuit.e_c and circuit.e_j must come together");
    if (has_wq == has_ec)
        throw config::ConfigError(cfg.origin() +
                                  ": provide exactly one circuit block, either "
                                  "(circuit.omega_q, circuit.gamma) or (circuit.e_c, circuit.e_j)");

    ResolvedCircuit out;
    if (has_wq) {
        const double wq = cfg.get_double("circuit.omega_q");
        const double g = cfg.get_double("circuit.gamma");
        out.analytic = {wq, g};
        out.bare_gamma = g;
        out.bare_omega01 = wq - 0.5 * g;
        out.levels = cfg.get_int("simulation.levels", 10);
        if (out.levels < 2)
            throw config::ConfigError(cfg.location("simulation.levels") +
                                      ": simulation.levels must be at least 2");
        for (int k = 0; k < out.levels; ++k)
            out.energies.push_back(wq * k - 0.25 * g * k * (k + 1.0));
        for (int k = 0; k + 1 < out.levels; ++k) out.ladder.push_back(std::sqrt(k + 1.0));
    } else {
        transmon::CooperPairBoxParams cp;
        cp.e_c = cfg.get_double("circuit.e_c");
        cp.e_j = cfg.get_double("circuit.e_j");
        cp.n_g = cfg.get_double("circuit.n_g", 0.0);
        cp.charge_cutoff = cfg.get_int("circuit.charge_cutoff", 35);
        out.levels = cfg.has("simulation.levels") ? cfg.get_int("simulation.levels")
                                                  : transmon::bound_levels(cp);
        if (out.levels < 2)
            throw config::ConfigError(cfg.location("simulation.levels") +
                                      ": simulation.levels must be at least 2");
        auto diag = transmon::diagonalize(cp, out.levels);
        out.energies = diag.spectrum.energies;
        for (int k = 0; k + 1 < out.levels; ++k)
            out.ladder.push_back(diag.ladder.lowering(k, k + 1));
        out.bare_omega01 = out.energies[1] - out.energies[0];
        const double w02_half = 0.5 * (out.energies[2] - out.energies[0]);
        out.bare_gamma = 4.0 * (out.bare_omega01 - w02_half);
        out.analytic = {out.bare_omega01 + 0.5 * out.bare_gamma, out.bare_gamma};
        out.from_transmon = true;
    }
    return out;
}

lindblad::SimulationConfig resolve_simulation(const config::ConfigFile& cfg, int levels) {
    lindblad::SimulationConfig sim;
    sim.t1 = cfg.get_double("simulation.t1", sim.t1);
    sim.t2 = cfg.get_double("simulation.t2", sim.t2);
    sim.n_therm = cfg.get_double("simulation.n_thermal", sim.n_therm);
    sim.t_sim = cfg.get_double("simulation.t_sim", sim.t_sim);
    sim.integrator_tolerance = cfg.get_double("simulation.tolerance", sim.integrator_tolerance);
    sim.averaging_window_fraction =
        cfg.get_double("simulation.window_fraction", sim.averaging_window_fraction);
    sim.levels = levels;
    return sim;
}

sensing::ResonatorParams resolve_resonator(const config::ConfigFile& cfg) {
    const char* keys[] = {"resonator.g", "resonator.q_c", "resonator.q_i", "resonator.omega_r"};
    std::string missing;
    for (const char* key : keys)
        if (!cfg.has(key)) missing += missing.empty() ? key : std::string(", ") + key;
    if (!missing.empty())
        throw config::ConfigError(cfg.origin() + ": resonator block incomplete, missing " +
                                  missing);
    sensing::ResonatorParams res;
    res.g = cfg.get_double("resonator.g");
    res.q_c = cfg.get_double("resonator.q_c");
    res.q_i = cfg.get_double("resonator.q_i");
    res.omega_r = cfg.get_double("resonator.omega_r");
    return res;
}

// drive.amplitudes list, a (start, stop, step) range, or a dBm power list
// converted through the resonator chain; exactly one form.
std::vector<double> resolve_drive_amplitudes(const config::ConfigFile& cfg) {
    const bool has_list = cfg.has("drive.amplitudes");
    const bool has_range = cfg.has("drive.amplitude_start") || cfg.has("drive.amplitude_stop") ||
                           cfg.has("drive.amplitude_step");
    const bool has_power = cfg.has("drive.powers_dbm");
    if (static_cast<int>(has_list) + static_cast<int>(has_range) + static_cast<int>(has_power) !=
        1)
        throw config::ConfigError(cfg.origin() +
                                  ": provide exactly one of drive.amplitudes, "
                                  "drive.amplitude_start/stop/step, drive.powers_dbm");
    if (has_list) return cfg.get_double_list("drive.amplitudes");
    if (has_range) {
        const double start = cfg.get_double("drive.amplitude_start");
        const double stop = cfg.get_double("drive.amplitude_stop");
        const double step = cfg.get_double("drive.amplitude_step");
        if (step <= 0.0 || stop < start)
            throw config::ConfigError(cfg.origin() +
                                      ": drive amplitude range must have step > 0 and "
                                      "stop >= start");
        std::vector<double> amps;
        const int count = static_cast<int>(std::floor((stop - start) / step + 1e-9)) + 1;
        for (int i = 0; i < count; ++i) amps.push_back(start + i * step);
        return amps;
    }
    const sensing::ResonatorParams res = resolve_resonator(cfg);
    const double attenuation = cfg.get_double("drive.attenuation_db", 0.0);
    std::vector<double> amps;
    for (double dbm : cfg.get_double_list("drive.powers_dbm")) {
        const double watts = sensing::dbm_to_watts(dbm + attenuation);
        const double n = sensing::photon_number_from_feedline_power(watts, res);
        amps.push_back(sensing::amplitude_from_photon_number(n, res.g));
    }
    return amps;
}

// ---------------------------------------------------------------------------
// Output helpers.

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open output file '" + path + "'");
    return out;
}

std::string sidecar_path(const std::string& out_path) {
    const std::string suffix = ".csv";
    if (out_path.size() > suffix.size() &&
        out_path.compare(out_path.size() - suffix.size(), suffix.size(), suffix) == 0)
        return out_path.substr(0, out_path.size() - suffix.size()) + ".json";
    return out_path + ".json";
}

json config_echo(const config::ConfigFile& cfg) {
    json echo = json::object();
    for (const auto& [key, value] : cfg.values()) echo[key] = value;
    return echo;
}

void emit_json(const json& payload, const std::string& out_path) {
    const std::string text = payload.dump(2);
    std::cout << text << '\n';
    if (!out_path.empty()) {
        auto out = open_output(out_path);
        out << text << '\n';
    }
}

// ---------------------------------------------------------------------------
// levels: analytic transition lines versus drive amplitude.

int run_levels(const CommonArgs& args) {
    const config::ConfigFile cfg = assemble_config(args);
    const ResolvedCircuit circuit = resolve_circuit(cfg);
    const double drive_frequency = cfg.get_double("drive.frequency");
    const std::vector<double> amplitudes = resolve_drive_amplitudes(cfg);
    const int k_max = cfg.get_int("model.k_max", 3);

    std::vector<std::string> header{"a_d_ghz"};
    for (int k = 1; k <= k_max; ++k) header.push_back("line_k" + std::to_string(k));

    std::ostringstream body;
    csv::write_row(body, header);
    for (double amplitude : amplitudes) {
        auto solution = qudit::lab_transitions(circuit.analytic, {drive_frequency, amplitude},
                                               k_max, args.order);
        std::vector<std::string> row{csv::format_double(amplitude)};
        for (int k = 1; k <= k_max; ++k)
            row.push_back(csv::format_double(solution.lab_transitions[k]));
        csv::write_row(body, row);
    }

    if (args.out_path.empty()) {
        std::cout << body.str();
    } else {
        auto out = open_output(args.out_path);
        out << body.str();
    }
    return 0;
}

// ---------------------------------------------------------------------------
// spectrum: master-equation sweep, CSV grid plus JSON sidecar.

int run_spectrum(const CommonArgs& args) {
    const config::ConfigFile cfg = assemble_config(args);
    if (args.out_path.empty()) throw Error("spectrum requires --out <file.csv>");
    const ResolvedCircuit circuit = resolve_circuit(cfg);
    const lindblad::SimulationConfig sim = resolve_simulation(cfg, circuit.levels);

    sweep::SweepSpec spec;
    spec.probe_start = cfg.get_double("probe.start");
    spec.probe_stop = cfg.get_double("probe.stop");
    spec.probe_step = cfg.get_double("probe.step");
    spec.probe_amplitude = cfg.get_double("probe.amplitude");
    spec.drive_frequency = cfg.get_double("drive.frequency");
    spec.drive_amplitudes = resolve_drive_amplitudes(cfg);
    spec.energies = circuit.energies;
    spec.ladder = circuit.ladder;

    for (const std::string& note : lindblad::config_warnings(sim))
        std::cerr << "warning: " << note << '\n';

    sweep::SpectrumGrid grid = sweep::sweep_spectrum(spec, sim);
    const bool normalize = cfg.get_bool("spectrum.normalize", true);
    if (normalize) grid = sweep::normalize_columns(std::move(grid));

    {
        auto out = open_output(args.out_path);
        std::vector<std::string> header{"probe_ghz"};
        for (double a : grid.drive_amplitudes) header.push_back("a_d_" + csv::format_double(a));
        csv::write_row(out, header);
        for (size_t i = 0; i < grid.probe_frequencies.size(); ++i) {
            std::vector<std::string> row{csv::format_double(grid.probe_frequencies[i])};
            for (size_t j = 0; j < grid.drive_amplitudes.size(); ++j)
                row.push_back(csv::format_double(grid.values(i, j)));
            csv::write_row(out, row);
        }
    }

    const std::string peaks_path = cfg.get_string("output.peaks", "");
    const double threshold = cfg.get_double("spectrum.peak_threshold", 0.02);
    if (!peaks_path.empty()) {
        auto out = open_output(peaks_path);
        csv::write_row(out, {"a_d_ghz", "frequency_ghz", "height", "width_ghz"});
        for (size_t j = 0; j < grid.drive_amplitudes.size(); ++j) {
            for (const auto& peak : sweep::column_peaks(grid, static_cast<int>(j), threshold)) {
                csv::write_row(out, {csv::format_double(grid.drive_amplitudes[j]),
                                     csv::format_double(peak.frequency),
                                     csv::format_double(peak.height),
                                     csv::format_double(peak.width)});
            }
        }
    }

    json sidecar;
    sidecar["command"] = "spectrum";
    sidecar["version"] = kVersion;
    sidecar["config"] = config_echo(cfg);
    json resolved;
    resolved["levels"] = circuit.levels;
    resolved["energies_ghz"] = circuit.energies;
    resolved["ladder"] = circuit.ladder;
    resolved["bare_omega01_ghz"] = circuit.bare_omega01;
    resolved["bare_gamma_ghz"] = circuit.bare_gamma;
    resolved["anchored_omega_q_ghz"] = circuit.analytic.omega_q;
    resolved["drive_frequency_ghz"] = spec.drive_frequency;
    resolved["drive_amplitudes_ghz"] = spec.drive_amplitudes;
    resolved["probe"] = {{"start_ghz", spec.probe_start},
                         {"stop_ghz", spec.probe_stop},
                         {"step_ghz", spec.probe_step},
                         {"amplitude_ghz", spec.probe_amplitude},
                         {"count", grid.probe_frequencies.size()}};
    resolved["simulation"] = {{"t1_ns", sim.t1},
                              {"t2_ns", sim.t2},
                              {"n_thermal", sim.n_therm},
                              {"t_sim_ns", sim.t_sim},
                              {"tolerance", sim.integrator_tolerance},
                              {"window_fraction", sim.averaging_window_fraction}};
    resolved["normalized"] = normalize;
    if (!peaks_path.empty()) resolved["peak_threshold"] = threshold;
    sidecar["resolved"] = resolved;
    {
        auto out = open_output(sidecar_path(args.out_path));
        out << sidecar.dump(2) << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------------------
// sense: invert measured lines for the drive, with uncertainty corners.

struct SenseArgs {
    double omega01 = 0.0;
    double omega02half = 0.0;
    double omega_d = 0.0;
    CLI::Option* omega_d_opt = nullptr;
    double delta_mhz = 1.0;
};

int run_sense(const CommonArgs& args, const SenseArgs& sense) {
    const config::ConfigFile cfg = assemble_config(args);
    const ResolvedCircuit circuit = resolve_circuit(cfg);

    sensing::SensingInput input;
    input.omega01_meas = sense.omega01;
    input.omega02_half_meas = sense.omega02half;
    if (sense.omega_d_opt && sense.omega_d_opt->count()) input.omega_d_known = sense.omega_d;
    input.bare_omega01 = circuit.bare_omega01;
    input.bare_gamma = circuit.bare_gamma;
    input.delta_meas = sense.delta_mhz * 1e-3;

    const sensing::SensingEstimate estimate = input.omega_d_known
                                                  ? sensing::invert_fixed(input, args.order)
                                                  : sensing::invert_free(input, args.order);

    sensing::UncertaintyReport report;
    std::string propagation_error;
    try {
        report = sensing::propagate_uncertainty(input, args.order, estimate.mode);
    } catch (const Error& e) {
        propagation_error = e.what();
        report.amplitude_interval = estimate.amplitude_interval;
        report.frequency_interval = estimate.frequency_interval;
    }

    json out;
    out["mode"] = estimate.mode == sensing::SensingMode::kFree ? "free" : "fixed";
    out["amplitude_ghz"] = estimate.amplitude;
    out["frequency_ghz"] = estimate.frequency;
    out["residual_ghz"] = estimate.residual;
    out["ill_conditioned"] = estimate.ill_conditioned;
    out["amplitude_interval_ghz"] = report.amplitude_interval;
    if (report.frequency_interval)
        out["frequency_interval_ghz"] = *report.frequency_interval;
    else
        out["frequency_interval_ghz"] = nullptr;
    out["failed_corners"] = report.failed_corners;
    if (!propagation_error.empty()) out["propagation_error"] = propagation_error;
    out["inputs"] = {{"omega01_ghz", input.omega01_meas},
                     {"omega02half_ghz", input.omega02_half_meas},
                     {"bare_omega01_ghz", input.bare_omega01},
                     {"bare_gamma_ghz", input.bare_gamma},
                     {"delta_mhz", sense.delta_mhz},
                     {"order", args.order}};
    if (input.omega_d_known) out["inputs"]["omega_d_ghz"] = *input.omega_d_known;
    emit_json(out, args.out_path);
    return estimate.ill_conditioned ? kExitIllConditioned : 0;
}

// ---------------------------------------------------------------------------
// calibrate: per-row fixed-frequency inversion of a measurement table.

int run_calibrate(const CommonArgs& args, const std::string& input_path,
                  double delta_mhz) {
    const config::ConfigFile cfg = assemble_config(args);
    if (args.out_path.empty()) throw Error("calibrate requires --out <file.csv>");
    const ResolvedCircuit circuit = resolve_circuit(cfg);
    const sensing::ResonatorParams resonator = resolve_resonator(cfg);

    const csv::Table table = csv::read_table_file(input_path);
    const std::vector<std::string> expected{"drive_ghz", "source_dbm", "omega01_ghz",
                                            "omega02half_ghz"};
    if (!table.header.empty() && table.header != expected) {
        std::string got;
        for (const auto& cell : table.header) got += (got.empty() ? "" : ", ") + cell;
        throw Error(input_path + ": expected header 'drive_ghz, source_dbm, omega01_ghz, " +
                    "omega02half_ghz', got '" + got + "'");
    }

    // Parse rows, keeping failures in place so output rows align with input.
    std::vector<std::string> parse_errors(table.rows.size());
    std::vector<std::optional<sensing::CalibrationRow>> parsed(table.rows.size());
    sensing::CalibrationRequest request;
    request.bare_omega01 = circuit.bare_omega01;
    request.bare_gamma = circuit.bare_gamma;
    request.delta_meas = delta_mhz * 1e-3;
    request.resonator = resonator;
    request.order = args.order;
    for (size_t i = 0; i < table.rows.size(); ++i) {
        const auto& cells = table.rows[i];
        const std::string where = input_path + ":" + std::to_string(table.row_lines[i]);
        if (cells.size() != expected.size()) {
            parse_errors[i] = "expected 4 cells; got " + std::to_string(cells.size());
            continue;
        }
        try {
            sensing::CalibrationRow row;
            row.drive_ghz = csv::parse_double(cells[0], where);
            row.source_dbm = csv::parse_double(cells[1], where);
            row.omega01_ghz = csv::parse_double(cells[2], where);
            row.omega02half_ghz = csv::parse_double(cells[3], where);
            parsed[i] = row;
            request.rows.push_back(row);
        } catch (const Error& e) {
            parse_errors[i] = e.what();
        }
    }

    const std::vector<sensing::CalibrationResult> solved = sensing::calibration_curve(request);

    auto out = open_output(args.out_path);
    csv::write_row(out, {"drive_ghz", "amplitude_ghz", "amplitude_lo", "amplitude_hi",
                         "attenuation_db", "status"});
    bool any_failed = false;
    size_t next_solved = 0;
    const double nan = std::nan("");
    for (size_t i = 0; i < table.rows.size(); ++i) {
        sensing::CalibrationResult result;
        if (parsed[i]) {
            result = solved[next_solved++];
        } else {
            result.drive_ghz = nan;
            result.amplitude_ghz = nan;
            result.amplitude_lo = nan;
            result.amplitude_hi = nan;
            result.attenuation_db = nan;
            result.status = parse_errors[i];
        }
        if (result.status != "ok") any_failed = true;
        std::string status = result.status;
        for (char& c : status)
            if (c == ',' || c == '\n') c = ';';
        csv::write_row(out, {csv::format_double(result.drive_ghz),
                             csv::format_double(result.amplitude_ghz),
                             csv::format_double(result.amplitude_lo),
                             csv::format_double(result.amplitude_hi),
                             csv::format_double(result.attenuation_db), status});
    }
    return any_failed ? kExitPartialFailure : 0;
}

// ---------------------------------------------------------------------------
// convert: amplitude <-> photon number <-> feedline power.

struct ConvertArgs {
    double amplitude = 0.0, photons = 0.0, power_dbm = 0.0, watts = 0.0;
    double g = 0.0, q_c = 0.0, q_i = 0.0, omega_r = 0.0;
    CLI::Option *amplitude_opt = nullptr, *photons_opt = nullptr, *power_dbm_opt = nullptr,
                *watts_opt = nullptr;
    CLI::Option *g_opt = nullptr, *q_c_opt = nullptr, *q_i_opt = nullptr, *omega_r_opt = nullptr;
};

int run_convert(const CommonArgs& args, const ConvertArgs& cv) {
    const bool has_amp = cv.amplitude_opt->count() > 0;
    const bool has_n = cv.photons_opt->count() > 0;
    const bool has_dbm = cv.power_dbm_opt->count() > 0;
    const bool has_watts = cv.watts_opt->count() > 0;
    const int sources = static_cast<int>(has_amp) + static_cast<int>(has_n) +
                        static_cast<int>(has_dbm) + static_cast<int>(has_watts);
    if (sources != 1)
        throw Error("convert: provide exactly one of --amplitude, --photons, --power-dbm, "
                    "--watts");

    const bool has_g = cv.g_opt->count() > 0;
    const int res_flags = static_cast<int>(cv.q_c_opt->count() > 0) +
                          static_cast<int>(cv.q_i_opt->count() > 0) +
                          static_cast<int>(cv.omega_r_opt->count() > 0);
    if (res_flags != 0 && res_flags != 3)
        throw Error("convert: --q-c, --q-i, --omega-r must come together");
    const bool has_res = res_flags == 3;
    sensing::ResonatorParams res{cv.g, cv.q_c, cv.q_i, cv.omega_r};

    json out;
    double n = std::nan("");
    if (has_amp) {
        if (!has_g) throw Error("convert: --amplitude needs --g to give a photon number");
        n = sensing::photon_number_from_amplitude(cv.amplitude, cv.g);
        out["amplitude_ghz"] = cv.amplitude;
    } else if (has_n) {
        if (!has_g && !has_res)
            throw Error("convert: --photons needs --g and/or --q-c/--q-i/--omega-r");
        n = cv.photons;
        if (has_g) out["amplitude_ghz"] = sensing::amplitude_from_photon_number(n, cv.g);
    } else {
        if (!has_res)
            throw Error("convert: power input needs the resonator flags --q-c, --q-i, --omega-r");
        const double watts = has_dbm ? sensing::dbm_to_watts(cv.power_dbm) : cv.watts;
        n = sensing::photon_number_from_feedline_power(watts, res);
        if (has_g) out["amplitude_ghz"] = sensing::amplitude_from_photon_number(n, cv.g);
    }
    out["photons"] = n;
    if (has_res && !has_dbm && !has_watts) {
        const double watts = sensing::feedline_power_from_photon_number(n, res);
        out["power_watts"] = watts;
        out["power_dbm"] = sensing::watts_to_dbm(watts);
    }
    if (has_dbm) {
        out["power_dbm"] = cv.power_dbm;
        out["power_watts"] = sensing::dbm_to_watts(cv.power_dbm);
    }
    if (has_watts) {
        out["power_watts"] = cv.watts;
        out["power_dbm"] = sensing::watts_to_dbm(cv.watts);
    }
    if (has_g) out["g_ghz"] = cv.g;
    if (has_res) {
        out["resonator"] = {{"q_c", cv.q_c}, {"q_i", cv.q_i}, {"omega_r_ghz", cv.omega_r}};
    }
    emit_json(out, args.out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "stark-sense: AC-Stark spectroscopy of a driven superconducting qudit.\n"
        "Analytic transition lines, master-equation probe sweeps, and inversion\n"
        "of measured lines into the drive amplitude and frequency seen on chip.\n\n"
        "Units: frequencies and amplitudes are ordinary frequencies in GHz\n"
        "(omega/2pi); times are in ns; absolute powers in dBm, relative in dB.\n"
        "Config files are flat 'dotted.key = value' text; '#' starts a comment.\n"
        "Flags override file values; --set key=value applies ad-hoc overrides.\n"
        "STARK_SENSE_THREADS caps the sweep worker-thread count.\n\n"
        "Exit codes: 0 success; 1 invalid config or domain error; 3 inversion\n"
        "did not converge; 4 estimate is ill-conditioned; 5 calibration wrote\n"
        "rows with failures."};
    app.require_subcommand(1);

    CommonArgs levels_args;
    auto* levels_cmd =
        app.add_subcommand("levels", "analytic transition lines versus drive amplitude (CSV)");
    add_common_options(levels_cmd, levels_args, true);
    levels_cmd->add_option("--out", levels_args.out_path, "output CSV path (default: stdout)");

    CommonArgs spectrum_args;
    auto* spectrum_cmd = app.add_subcommand(
        "spectrum", "master-equation probe sweep over drive amplitudes (CSV + JSON sidecar)");
    add_common_options(spectrum_cmd, spectrum_args, true);
    spectrum_cmd->add_option("--out", spectrum_args.out_path, "output CSV path (required)");

    CommonArgs sense_args;
    SenseArgs sense_extra;
    auto* sense_cmd = app.add_subcommand(
        "sense", "invert measured 0->1 and two-photon 0->2 lines for the drive (JSON)");
    add_common_options(sense_cmd, sense_args, true);
    sense_cmd->add_option("--out", sense_args.out_path, "also write the JSON to this path");
    sense_cmd->add_option("--omega01", sense_extra.omega01, "measured 0->1 line, GHz")
        ->required();
    sense_cmd
        ->add_option("--omega02half", sense_extra.omega02half,
                     "measured two-photon 0->2 line omega02/2, GHz")
        ->required();
    sense_extra.omega_d_opt = sense_cmd->add_option(
        "--omega-d", sense_extra.omega_d, "known drive frequency, GHz (sets fixed mode)");
    sense_cmd->add_option("--delta-mhz", sense_extra.delta_mhz,
                          "line-position measurement uncertainty, MHz")
        ->capture_default_str();

    CommonArgs calibrate_args;
    std::string calibrate_input;
    double calibrate_delta_mhz = 1.0;
    auto* calibrate_cmd = app.add_subcommand(
        "calibrate",
        "fixed-frequency inversion of a measurement table into amplitudes and attenuation (CSV)");
    add_common_options(calibrate_cmd, calibrate_args, true);
    calibrate_cmd
        ->add_option("--input", calibrate_input,
                     "input CSV: drive_ghz, source_dbm, omega01_ghz, omega02half_ghz")
        ->required();
    calibrate_cmd->add_option("--out", calibrate_args.out_path, "output CSV path (required)");
    calibrate_cmd->add_option("--delta-mhz", calibrate_delta_mhz,
                              "line-position measurement uncertainty, MHz")
        ->capture_default_str();

    CommonArgs convert_args;
    ConvertArgs convert_extra;
    auto* convert_cmd = app.add_subcommand(
        "convert", "amplitude <-> photon number <-> feedline power conversions (JSON)");
    convert_cmd->add_option("--out", convert_args.out_path, "also write the JSON to this path");
    convert_extra.amplitude_opt =
        convert_cmd->add_option("--amplitude", convert_extra.amplitude, "drive amplitude, GHz");
    convert_extra.photons_opt =
        convert_cmd->add_option("--photons", convert_extra.photons, "resonator photon number");
    convert_extra.power_dbm_opt = convert_cmd->add_option("--power-dbm", convert_extra.power_dbm,
                                                          "feedline power, dBm");
    convert_extra.watts_opt =
        convert_cmd->add_option("--watts", convert_extra.watts, "feedline power, W");
    convert_extra.g_opt =
        convert_cmd->add_option("--g", convert_extra.g, "qudit-resonator coupling, GHz");
    convert_extra.q_c_opt =
        convert_cmd->add_option("--q-c", convert_extra.q_c, "coupling quality factor");
    convert_extra.q_i_opt =
        convert_cmd->add_option("--q-i", convert_extra.q_i, "internal quality factor");
    convert_extra.omega_r_opt = convert_cmd->add_option("--omega-r", convert_extra.omega_r,
                                                        "resonator frequency, GHz");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*levels_cmd) return run_levels(levels_args);
        if (*spectrum_cmd) return run_spectrum(spectrum_args);
        if (*sense_cmd) return run_sense(sense_args, sense_extra);
        if (*calibrate_cmd)
            return run_calibrate(calibrate_args, calibrate_input, calibrate_delta_mhz);
        if (*convert_cmd) return run_convert(convert_args, convert_extra);
    } catch (const NoConvergence& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNoConvergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}
