#include "starksense/sensing.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace starksense::sensing {

namespace {

constexpr double kHbar = 1.054571817e-34;     // J s
constexpr double kResidualTol = 1e-9;         // GHz, root-find success bar
constexpr double kConditionThreshold = 1e4;   // Jacobian condition flag
constexpr double kMinDetuning = 1e-4;         // GHz, solver domain floor
constexpr int kMaxIterations = 60;

void validate(const SensingInput& input) {
    if (!(input.bare_gamma > 0.0)) throw InvalidParams("bare_gamma must be positive");
    if (!(input.bare_omega01 > 0.0)) throw InvalidParams("bare_omega01 must be positive");
    if (!(input.omega02_half_meas < input.omega01_meas))
        throw InvalidParams("omega02/2 must lie below omega01 (negative anharmonicity)");
    if (input.delta_meas < 0.0) throw InvalidParams("delta_meas must be non-negative");
}

qudit::CircuitParams circuit_of(const SensingInput& input) {
    return {input.bare_omega01 + 0.5 * input.bare_gamma, input.bare_gamma};
}

// Amplitude that sustains displacement alpha at detuning delta.
double amplitude_for(double gamma, double delta, double alpha) {
    return gamma * alpha * alpha * alpha + 2.0 * delta * alpha;
}

// Dispersive seed: the zeroth-order line1 shift is gamma*alpha^2.
double seed_alpha(const SensingInput& input) {
    double shift = input.bare_omega01 - input.omega01_meas;
    return std::sqrt(std::max(shift, 0.0) / input.bare_gamma);
}

struct Residuals {
    double r1, r2;
    double norm() const { return std::max(std::abs(r1), std::abs(r2)); }
};

Residuals free_residuals(const SensingInput& input, double amplitude, double omega_d, int order) {
    auto [l1, l2] = forward_observables(circuit_of(input), {omega_d, amplitude}, order);
    return {l1 - input.omega01_meas, l2 - input.omega02_half_meas};
}

}  // namespace

std::pair<double, double> forward_observables(const qudit::CircuitParams& circuit,
                                              const qudit::DriveTone& drive, int order) {
    auto sol = qudit::lab_transitions(circuit, drive, 2, order);
    return {sol.lab_transitions[1], sol.lab_transitions[2]};
}

SensingEstimate invert_free(const SensingInput& input, int order) {
    validate(input);
    if (input.omega_d_known)
        throw InvalidParams("free-mode inversion requires the drive frequency to be unknown");

    const double gamma = input.bare_gamma;
    const double alpha0 = seed_alpha(input);

    // Coarse detuning scan: each candidate reproduces the measured line1 at
    // zeroth order, so the line2 misfit selects the starting detuning.
    double best_a = 0.0, best_wd = input.bare_omega01 + 0.2, best_misfit = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 20; ++i) {
        double delta = 0.05 * i;
        double a = amplitude_for(gamma, delta, alpha0);
        double wd = input.bare_omega01 + delta;
        try {
            double misfit = std::abs(free_residuals(input, a, wd, order).r2);
            if (misfit < best_misfit) {
                best_misfit = misfit;
                best_a = a;
                best_wd = wd;
            }
        } catch (const Error&) {
            continue;
        }
    }

    double a = best_a, wd = best_wd;
    Residuals r = free_residuals(input, a, wd, order);
    Eigen::Matrix2d jac = Eigen::Matrix2d::Zero();

    for (int it = 0; it < kMaxIterations && r.norm() >= kResidualTol; ++it) {
        const double h = 1e-7;
        Residuals ra = free_residuals(input, a + h, wd, order);
        Residuals rw = free_residuals(input, a, wd + h, order);
        jac << (ra.r1 - r.r1) / h, (rw.r1 - r.r1) / h, (ra.r2 - r.r2) / h, (rw.r2 - r.r2) / h;
        Eigen::Vector2d step = jac.fullPivLu().solve(Eigen::Vector2d(-r.r1, -r.r2));
        if (!step.allFinite()) throw NoConvergence("singular Jacobian in free-mode inversion");

        // Damped update: shrink until the residual actually improves, never
        // leaving the A >= 0, Delta > 0 domain.
        double lambda = 1.0;
        bool accepted = false;
        while (lambda > 1e-6) {
            double a_try = std::max(a + lambda * step(0), 0.0);
            double wd_try = std::max(wd + lambda * step(1), input.bare_omega01 + kMinDetuning);
            try {
                Residuals r_try = free_residuals(input, a_try, wd_try, order);
                if (r_try.norm() < r.norm()) {
                    a = a_try;
                    wd = wd_try;
                    r = r_try;
                    accepted = true;
                    break;
                }
            } catch (const Error&) {
            }
            lambda *= 0.5;
        }
        if (!accepted) break;
    }
    if (r.norm() >= 1e-6)
        throw NoConvergence("free-mode inversion did not reach the residual tolerance");

    SensingEstimate est;
    est.amplitude = a;
    est.frequency = wd;
    est.amplitude_interval = {a, a};
    est.frequency_interval = std::array<double, 2>{wd, wd};
    est.residual = r.norm();
    est.mode = SensingMode::kFree;
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(jac);
    double smin = svd.singularValues()(1);
    est.ill_conditioned =
        smin <= 0.0 || svd.singularValues()(0) / smin > kConditionThreshold;
    return est;
}

SensingEstimate invert_fixed(const SensingInput& input, int order) {
    validate(input);
    if (!input.omega_d_known)
        throw InvalidParams("fixed-mode inversion requires a known drive frequency");
    const double wd = *input.omega_d_known;
    const double delta = wd - input.bare_omega01;
    if (delta <= 0.0)
        throw NegativeDetuning("known drive frequency lies below the first transition");

    auto line1_err = [&](double amp) {
        return forward_observables(circuit_of(input), {wd, amp}, order).first -
               input.omega01_meas;
    };

    double a = amplitude_for(input.bare_gamma, delta, seed_alpha(input));
    double f = line1_err(a);
    const double h = 1e-7;
    for (int it = 0; it < kMaxIterations && std::abs(f) >= kResidualTol; ++it) {
        double df = (line1_err(a + h) - f) / h;
        if (!std::isfinite(df) || df == 0.0)
            throw NoConvergence("flat response in fixed-mode inversion");
        double step = -f / df;
        double lambda = 1.0;
        bool accepted = false;
        while (lambda > 1e-6) {
            double a_try = std::max(a + lambda * step, 0.0);
            try {
                double f_try = line1_err(a_try);
                if (std::abs(f_try) < std::abs(f)) {
                    a = a_try;
                    f = f_try;
                    accepted = true;
                    break;
                }
            } catch (const Error&) {
            }
            lambda *= 0.5;
        }
        if (!accepted) break;
    }
    if (std::abs(f) >= 1e-6)
        throw NoConvergence("fixed-mode inversion did not reach the residual tolerance");

    auto [l1, l2] = forward_observables(circuit_of(input), {wd, a}, order);
    double s1 = (forward_observables(circuit_of(input), {wd, a + h}, order).first - l1) / h;
    double s2 = (forward_observables(circuit_of(input), {wd, a + h}, order).second - l2) / h;

    double cross = std::abs(l2 - input.omega02_half_meas);
    double sens_ratio = std::abs(s1) > 0.0 ? std::abs(s2 / s1) : 0.0;
    double tolerance = std::max(3.0 * input.delta_meas * (1.0 + sens_ratio), 1e-6);
    if (cross > tolerance)
        throw InconsistentInput("omega02/2 cross-check disagrees with the fixed-frequency fit");

    SensingEstimate est;
    est.amplitude = a;
    est.frequency = wd;
    est.amplitude_interval = {a, a};
    est.residual = cross;
    est.mode = SensingMode::kFixed;
    est.ill_conditioned = std::abs(s1) < 1e-4;
    return est;
}

UncertaintyReport propagate_uncertainty(const SensingInput& input, int order, SensingMode mode) {
    auto solve = [&](const SensingInput& in) {
        return mode == SensingMode::kFree ? invert_free(in, order) : invert_fixed(in, order);
    };
    SensingEstimate nominal = solve(input);

    double lo_a = nominal.amplitude, hi_a = nominal.amplitude;
    double lo_w = nominal.frequency, hi_w = nominal.frequency;
    int failed = 0;
    for (int s1 = -1; s1 <= 1; s1 += 2) {
        for (int s2 = -1; s2 <= 1; s2 += 2) {
            SensingInput corner = input;
            corner.omega01_meas += s1 * input.delta_meas;
            corner.omega02_half_meas += s2 * input.delta_meas;
            try {
                SensingEstimate est = solve(corner);
                lo_a = std::min(lo_a, est.amplitude);
                hi_a = std::max(hi_a, est.amplitude);
                lo_w = std::min(lo_w, est.frequency);
                hi_w = std::max(hi_w, est.frequency);
            } catch (const Error&) {
                ++failed;
            }
        }
    }
    if (failed == 4) throw AllCornersFailed("no uncertainty corner could be inverted");

    UncertaintyReport report;
    report.amplitude_interval = {lo_a, hi_a};
    if (mode == SensingMode::kFree)
        report.frequency_interval = std::array<double, 2>{lo_w, hi_w};
    report.failed_corners = failed;
    return report;
}

double photon_number_from_amplitude(double amplitude, double g) {
    if (!(g > 0.0)) throw InvalidParams("coupling g must be positive");
    return amplitude * amplitude / (4.0 * g * g);
}

double amplitude_from_photon_number(double n, double g) {
    if (!(g > 0.0)) throw InvalidParams("coupling g must be positive");
    if (n < 0.0) throw InvalidParams("photon number must be non-negative");
    return 2.0 * g * std::sqrt(n);
}

namespace {

void validate(const ResonatorParams& res) {
    if (!(res.q_c > 0.0 && res.q_i > 0.0)) throw InvalidParams("quality factors must be positive");
    if (!(res.omega_r > 0.0)) throw InvalidParams("resonance frequency must be positive");
}

double loaded_q(const ResonatorParams& res) { return res.q_c * res.q_i / (res.q_c + res.q_i); }

double angular(double freq_ghz) { return 2.0 * std::numbers::pi * freq_ghz * 1e9; }

}  // namespace

double photon_number_from_feedline_power(double power_watts, const ResonatorParams& res) {
    validate(res);
    if (power_watts < 0.0) throw InvalidParams("power must be non-negative");
    double ql = loaded_q(res);
    double w = angular(res.omega_r);
    return 4.0 * power_watts * ql * ql / (res.q_c * kHbar * w * w);
}

double feedline_power_from_photon_number(double n, const ResonatorParams& res) {
    validate(res);
    if (n < 0.0) throw InvalidParams("photon number must be non-negative");
    double ql = loaded_q(res);
    double w = angular(res.omega_r);
    return n * res.q_c * kHbar * w * w / (4.0 * ql * ql);
}

double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

double watts_to_dbm(double watts) {
    if (watts < 0.0) throw InvalidParams("power must be non-negative");
    return 10.0 * std::log10(watts / 1e-3);
}

double attenuation_estimate(double amplitude, double source_dbm, const ResonatorParams& res) {
    double n = photon_number_from_amplitude(amplitude, res.g);
    if (n <= 0.0) return -std::numeric_limits<double>::infinity();
    return watts_to_dbm(feedline_power_from_photon_number(n, res)) - source_dbm;
}

std::vector<CalibrationResult> calibration_curve(const CalibrationRequest& request) {
    std::vector<CalibrationResult> out;
    out.reserve(request.rows.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& row : request.rows) {
        CalibrationResult res;
        res.drive_ghz = row.drive_ghz;
        try {
            SensingInput in;
            in.omega01_meas = row.omega01_ghz;
            in.omega02_half_meas = row.omega02half_ghz;
            in.omega_d_known = row.drive_ghz;
            in.bare_omega01 = request.bare_omega01;
            in.bare_gamma = request.bare_gamma;
            in.delta_meas = request.delta_meas;

            SensingEstimate est = invert_fixed(in, request.order);
            UncertaintyReport unc =
                propagate_uncertainty(in, request.order, SensingMode::kFixed);
            res.amplitude_ghz = est.amplitude;
            res.amplitude_lo = unc.amplitude_interval[0];
            res.amplitude_hi = unc.amplitude_interval[1];
            res.attenuation_db =
                est.amplitude > 0.0
                    ? attenuation_estimate(est.amplitude, row.source_dbm, request.resonator)
                    : nan;
            res.status = "ok";
        } catch (const Error& e) {
            res.amplitude_ghz = res.amplitude_lo = res.amplitude_hi = nan;
            res.attenuation_db = nan;
            res.status = e.what();
        }
        out.push_back(std::move(res));
    }
    return out;
}

}  // namespace starksense::sensing
