#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

#include "starksense/errors.hpp"
#include "starksense/qudit_model.hpp"

namespace starksense::lindblad {

// Times in ns, populations dimensionless. Defaults follow the reference
// operating point except T_sim, which callers set per run (>= 2*T1 advised).
struct SimulationConfig {
    double t1 = 250.0;                        // relaxation time, ns
    double t2 = 250.0;                        // total coherence time, ns
    double n_therm = 0.1;                     // bath thermal occupation
    double t_sim = 500.0;                     // evolution span, ns
    int levels = 10;                          // retained qudit levels
    double integrator_tolerance = 1e-8;       // relative error per step
    double averaging_window_fraction = 0.25;  // window = fraction * T1
};

// Diagnostic notes (unphysical-looking but accepted settings).
std::vector<std::string> config_warnings(const SimulationConfig& config);

// Drive terms enter as A*(a + a^dagger)*cos(w t) with level-dependent ladder
// weights; energies[k] in GHz referenced to energies[0] = 0.
struct HamiltonianSpec {
    std::vector<double> energies;  // size = levels
    std::vector<double> ladder;    // coupling k <-> k+1, size = levels - 1, ladder[0] = 1
    qudit::ProbeTone probe{0.0, 0.0};
    qudit::DriveTone drive{0.0, 0.0};
};

// Harmonic-weight spec (sqrt(k+1) ladder) for quick model studies.
HamiltonianSpec harmonic_spec(const std::vector<double>& energies);

struct DensityState {
    Eigen::MatrixXcd matrix;
    double time = 0.0;  // ns
};

DensityState ground_state(int levels);

// Per-step samples of the diagonal, plus the full final density matrix.
struct Trajectory {
    std::vector<double> times;                 // ns, strictly increasing
    std::vector<Eigen::VectorXd> populations;  // diagonal of rho at each time
    DensityState final_state;
};

// The three dissipation channels: sqrt((n_therm+1)/T1) * a,
// sqrt(n_therm/T1) * a^dagger, sqrt(1/T2) * a^dagger a, with the weighted
// ladder. Note the third uses the full 1/T2 rate on a^dagger a, so the T1
// channel's coherence decay stacks on top of it rather than being folded in.
std::vector<Eigen::MatrixXcd> build_collapse_operators(const SimulationConfig& config,
                                                       const std::vector<double>& ladder);

// Integrate the master equation from `initial.time` to config.t_sim.
// Adaptive Runge-Kutta; the step never exceeds 1/50 of the fastest drive
// period. Throws StepSizeFailure if tolerance forces the step below floor.
Trajectory evolve(const HamiltonianSpec& spec, const SimulationConfig& config,
                  const DensityState& initial);

// Streaming form: invokes `observe` at every accepted step (including the
// initial point) without storing the trajectory.
void evolve_observed(const HamiltonianSpec& spec, const SimulationConfig& config,
                     const DensityState& initial,
                     const std::function<void(double, const Eigen::VectorXd&)>& observe);

// Time average of sum_k k*rho_kk over the trailing window
// [t_sim - fraction*T1, t_sim]. Throws WindowTooShort if the trajectory
// does not cover the window.
double averaged_population(const Trajectory& trajectory, const SimulationConfig& config);

}  // namespace starksense::lindblad
