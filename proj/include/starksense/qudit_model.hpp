#pragma once

// Analytic model of a driven anharmonic ladder: displacement parameter from
// the cubic amplitude equation, perturbative level energies in the displaced
// rotating frame up to fourth order, lab-frame k-photon transition lines,
// the dispersive-limit shift formula, and combined probe/drive multi-photon
// lines.
//
// All public frequencies are ordinary frequencies in GHz (omega/2pi). The
// cubic and the level energies are homogeneous of degree one in frequency,
// so no 2pi factors appear anywhere in this module.

#include <vector>

#include "starksense/errors.hpp"

namespace starksense::qudit {

struct CircuitParams {
    double omega_q;  // bare ladder frequency, GHz
    double gamma;    // anharmonicity parameter, GHz; anharmonicity = -gamma/2
};

struct DriveTone {
    double frequency;  // GHz
    double amplitude;  // GHz
};

struct ProbeTone {
    double frequency;  // GHz
    double amplitude;  // GHz
};

// Delta = omega_D - omega_q + gamma/2, the drive's offset from the first
// ladder transition.
double detuning(const CircuitParams& circuit, const DriveTone& drive);

struct AlphaSolution {
    double alpha;         // unique real root, dimensionless
    int real_root_count;  // always 1 in the supported Delta > 0 regime
};

// Unique real root of gamma*a^3 + 2*Delta*a - A_D = 0 for Delta > 0.
// Throws NegativeDetuning for Delta <= 0 and InvalidParams for gamma <= 0.
// Residual of the returned root is below 1e-12 * max(A_D, |Delta|).
AlphaSolution solve_alpha(const CircuitParams& circuit, const DriveTone& drive);

struct RootReport {
    std::vector<double> roots;  // all real roots, ascending
    int discriminant_sign;      // +1: three distinct real roots, -1: one
};

// All real roots of the amplitude cubic, any sign of Delta.
RootReport enumerate_alpha_roots(const CircuitParams& circuit, const DriveTone& drive);

// Level-k energy in the displaced rotating frame, GHz. order in {0,..,4};
// the first-order correction is identically zero. Throws
// DegeneratePerturbation if a retained denominator falls below 1e-3 GHz
// (unreachable for Delta > 0, where every retained denominator is >= gamma/2,
// but kept as a guard for future call paths).
double rotating_energy(const CircuitParams& circuit, const DriveTone& drive,
                       int k, int order = 4);

struct LevelSolution {
    double alpha;
    int order;
    std::vector<double> rotating_energies;  // index k = 0..k_max, GHz
    std::vector<double> lab_transitions;    // index k = 1..k_max, GHz; [0] unused (NaN)
};

// k-photon probe lines (E_k - E_0)/k + omega_D for k = 1..k_max.
LevelSolution lab_transitions(const CircuitParams& circuit, const DriveTone& drive,
                              int k_max, int order = 4);

// Dispersive-limit level shift -gamma*(A_D/(2*Delta))^2 * k, GHz.
// Throws DivisionByZero when Delta == 0.
double dispersive_shift(const CircuitParams& circuit, const DriveTone& drive, int k);

struct MultiPhotonLine {
    int level;               // target level k
    int n_probe;             // probe photons, >= 1
    int n_drive;             // drive photons, >= 0
    double probe_frequency;  // GHz
};

// All probe lines omega_P = (E_lab_k - n_D*omega_D)/n_P with
// 1 <= n_P <= n_probe_max, 0 <= n_D <= n_drive_max, n_P + n_D <= k.
// Non-positive frequencies are dropped. Sorted by (level, n_probe, n_drive).
std::vector<MultiPhotonLine> mixed_photon_lines(const CircuitParams& circuit,
                                                const DriveTone& drive, int k_max,
                                                int n_probe_max, int n_drive_max,
                                                int order = 4);

}  // namespace starksense::qudit
