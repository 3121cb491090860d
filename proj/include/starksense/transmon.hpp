#pragma once

#include <Eigen/Dense>

#include <vector>

#include "starksense/errors.hpp"

namespace starksense::transmon {

// Cooper-pair-box circuit in the charge basis n in [-charge_cutoff, +charge_cutoff].
// Energies in GHz (divided by h), n_g dimensionless offset charge.
struct CooperPairBoxParams {
    double e_c = 0.0;
    double e_j = 0.0;
    double n_g = 0.0;
    int charge_cutoff = 35;
};

// Eigenenergies in GHz, ascending, referenced to energies[0] = 0.
struct EigenSpectrum {
    std::vector<double> energies;
    int levels = 0;
};

// Nearest-level coupling matrix from charge-operator elements between
// eigenstates; only the first superdiagonal is nonzero, entries are
// sign-fixed positive and normalized so lowering(0,1) = 1.
struct LadderOperators {
    Eigen::MatrixXd lowering;
    int dimension = 0;
};

struct Diagonalization {
    EigenSpectrum spectrum;
    LadderOperators ladder;
    bool transmon_regime_warning = false;  // set when E_J/E_C < 20
};

// Diagonalize H = 4 E_C (n - n_g)^2 - E_J cos(phi), keeping `levels` states.
// Throws ConvergenceWarning when enlarging the cutoff by 5 still moves any
// retained energy by more than 1e-6 GHz.
Diagonalization diagonalize(const CooperPairBoxParams& params, int levels);

// Number of eigenstates below the Josephson barrier: E + E_J < 2 E_J,
// measuring energy from the potential minimum -E_J.
int bound_levels(const CooperPairBoxParams& params);

// Recover (E_C, E_J) from the fundamental transition and the anharmonicity
// omega12 - omega01 (< 0). Damped Newton on the exact spectrum, seeded from
// the asymptotic transmon relations.
CooperPairBoxParams fit_from_transitions(double omega01, double anharmonicity);

}  // namespace starksense::transmon
