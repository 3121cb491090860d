#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "starksense/errors.hpp"
#include "starksense/qudit_model.hpp"

namespace starksense::sensing {

// Measured spectroscopy lines plus the bare circuit anchor. The bare pair
// (omega01, gamma) fixes the undriven ladder: omega_q = bare_omega01 + gamma/2.
struct SensingInput {
    double omega01_meas = 0.0;       // GHz, measured 0->1 line
    double omega02_half_meas = 0.0;  // GHz, measured two-photon line omega02/2
    std::optional<double> omega_d_known;  // GHz, drive frequency when known
    double bare_omega01 = 0.0;       // GHz, undriven 0->1 transition
    double bare_gamma = 0.0;         // GHz, anharmonicity parameter
    double delta_meas = 1e-3;        // GHz, line-position measurement uncertainty
};

enum class SensingMode { kFree, kFixed };

struct SensingEstimate {
    double amplitude = 0.0;  // GHz, inferred A_D
    double frequency = 0.0;  // GHz, inferred (or echoed) omega_D
    std::array<double, 2> amplitude_interval{0.0, 0.0};
    std::optional<std::array<double, 2>> frequency_interval;
    double residual = 0.0;  // GHz; free: final root-find norm, fixed: omega02 cross-check
    SensingMode mode = SensingMode::kFree;
    bool ill_conditioned = false;  // Jacobian condition number beyond threshold
};

// Interval spread of the inversion over the +-delta corners of the two
// measured lines (worst-case corners, not linearization).
struct UncertaintyReport {
    std::array<double, 2> amplitude_interval{0.0, 0.0};
    std::optional<std::array<double, 2>> frequency_interval;
    int failed_corners = 0;  // out of 4
};

// The two observable lab lines (omega01, omega02/2) for a driven circuit.
std::pair<double, double> forward_observables(const qudit::CircuitParams& circuit,
                                              const qudit::DriveTone& drive, int order = 4);

// Invert both measured lines for (A_D, omega_D); input.omega_d_known must be
// empty. Sets ill_conditioned instead of failing in the flat-Jacobian regime.
SensingEstimate invert_free(const SensingInput& input, int order = 4);

// Invert the omega01 line alone for A_D at the known drive frequency; the
// omega02/2 line serves as a consistency cross-check (reported as residual).
SensingEstimate invert_fixed(const SensingInput& input, int order = 4);

// Corner evaluation: rerun the inversion at the four (+-delta, +-delta)
// combinations of the measured lines; intervals span all successful solves
// plus the nominal one. Throws AllCornersFailed when every corner fails.
UncertaintyReport propagate_uncertainty(const SensingInput& input, int order, SensingMode mode);

// Resonator photon number sustained by a coherent tone of the given
// amplitude: n = A^2 / (4 g^2).
double photon_number_from_amplitude(double amplitude, double g);
double amplitude_from_photon_number(double n, double g);

// Photon number from power arriving at the feedline of a resonator with
// coupling/internal quality factors Q_c, Q_i at resonance frequency
// omega_r (ordinary GHz): n = 4 P Q_l^2 / (Q_c hbar omega_r^2) with
// Q_l = Q_c Q_i / (Q_c + Q_i); omega_r is converted to angular internally.
struct ResonatorParams {
    double g = 0.0;        // GHz, qudit-resonator coupling
    double q_c = 0.0;      // coupling quality factor
    double q_i = 0.0;      // internal quality factor
    double omega_r = 0.0;  // GHz, resonance frequency
};
double photon_number_from_feedline_power(double power_watts, const ResonatorParams& res);
double feedline_power_from_photon_number(double n, const ResonatorParams& res);

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

// Attenuation (dB, negative) between the source and the chip: the feedline
// power that would sustain the photon number implied by the on-chip
// amplitude, relative to the quoted source power.
double attenuation_estimate(double amplitude, double source_dbm, const ResonatorParams& res);

struct CalibrationRow {
    double drive_ghz = 0.0;
    double source_dbm = 0.0;
    double omega01_ghz = 0.0;
    double omega02half_ghz = 0.0;
};

struct CalibrationResult {
    double drive_ghz = 0.0;
    double amplitude_ghz = 0.0;
    double amplitude_lo = 0.0;
    double amplitude_hi = 0.0;
    double attenuation_db = 0.0;
    std::string status;  // "ok" or the per-row failure reason
};

struct CalibrationRequest {
    std::vector<CalibrationRow> rows;
    double bare_omega01 = 0.0;
    double bare_gamma = 0.0;
    double delta_meas = 1e-3;
    ResonatorParams resonator;
    int order = 4;
};

// Fixed-frequency inversion of every row plus the amplitude->power
// conversion chain; a row that fails keeps its failure reason in `status`
// and NaN numeric fields rather than aborting the curve.
std::vector<CalibrationResult> calibration_curve(const CalibrationRequest& request);

}  // namespace starksense::sensing
