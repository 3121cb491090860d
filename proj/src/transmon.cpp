#include "starksense/transmon.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace starksense::transmon {

namespace {

void validate(const CooperPairBoxParams& p) {
    if (!(p.e_c > 0.0) || !(p.e_j > 0.0))
        throw InvalidParams("E_C and E_J must be positive");
    if (p.charge_cutoff < 10)
        throw InvalidParams("charge_cutoff must be at least 10");
    if (std::abs(p.n_g) > 1.0)
        throw InvalidParams("offset charge n_g outside [-1, 1]");
}

// Raw (unshifted) spectrum and eigenvectors of the charge-basis Hamiltonian:
// diagonal 4 E_C (n - n_g)^2, first off-diagonal -E_J/2 from -E_J cos(phi).
Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solve_charge_basis(const CooperPairBoxParams& p,
                                                                  int cutoff) {
    int dim = 2 * cutoff + 1;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        double n = i - cutoff;
        h(i, i) = 4.0 * p.e_c * (n - p.n_g) * (n - p.n_g);
        if (i + 1 < dim) h(i, i + 1) = h(i + 1, i) = -0.5 * p.e_j;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    if (es.info() != Eigen::Success) throw NoConvergence("charge-basis eigensolver failed");
    return es;
}

std::vector<double> shifted_energies(const CooperPairBoxParams& p, int cutoff, int levels) {
    auto es = solve_charge_basis(p, cutoff);
    std::vector<double> out(levels);
    for (int k = 0; k < levels; ++k) out[k] = es.eigenvalues()(k) - es.eigenvalues()(0);
    return out;
}

Diagonalization diagonalize_unchecked(const CooperPairBoxParams& p, int levels) {
    auto es = solve_charge_basis(p, p.charge_cutoff);
    int dim = 2 * p.charge_cutoff + 1;

    Diagonalization result;
    result.spectrum.levels = levels;
    result.spectrum.energies.resize(levels);
    for (int k = 0; k < levels; ++k)
        result.spectrum.energies[k] = es.eigenvalues()(k) - es.eigenvalues()(0);

    // Charge-operator elements <psi_k| n |psi_k+1>, first superdiagonal only.
    Eigen::VectorXd n_diag(dim);
    for (int i = 0; i < dim; ++i) n_diag(i) = i - p.charge_cutoff;
    Eigen::MatrixXd lowering = Eigen::MatrixXd::Zero(levels, levels);
    double norm = 0.0;
    for (int k = 0; k + 1 < levels; ++k) {
        double el = es.eigenvectors().col(k).dot(n_diag.asDiagonal() * es.eigenvectors().col(k + 1));
        el = std::abs(el);
        if (k == 0) norm = el;
        lowering(k, k + 1) = el;
    }
    if (levels > 1) {
        if (norm <= 0.0) throw NoConvergence("vanishing 0-1 charge matrix element");
        lowering /= norm;
    }
    result.ladder.lowering = lowering;
    result.ladder.dimension = levels;
    result.transmon_regime_warning = (p.e_j / p.e_c < 20.0);
    return result;
}

}  // namespace

Diagonalization diagonalize(const CooperPairBoxParams& params, int levels) {
    validate(params);
    if (levels < 1 || levels > 2 * params.charge_cutoff)
        throw InvalidParams("levels must be in [1, 2*charge_cutoff]");

    auto result = diagonalize_unchecked(params, levels);

    auto wider = shifted_energies(params, params.charge_cutoff + 5, levels);
    for (int k = 0; k < levels; ++k) {
        if (std::abs(wider[k] - result.spectrum.energies[k]) > 1e-6)
            throw ConvergenceWarning("charge_cutoff " + std::to_string(params.charge_cutoff) +
                                     " too small for " + std::to_string(levels) + " levels");
    }
    return result;
}

int bound_levels(const CooperPairBoxParams& params) {
    validate(params);
    auto es = solve_charge_basis(params, params.charge_cutoff);
    // Raw eigenvalues sit above the potential minimum -E_J; bound states lie
    // below the barrier top +E_J, i.e. (E_raw + E_J) < 2 E_J.
    int count = 0;
    for (int k = 0; k < es.eigenvalues().size(); ++k)
        if (es.eigenvalues()(k) + params.e_j < 2.0 * params.e_j) ++count;
    return count;
}

CooperPairBoxParams fit_from_transitions(double omega01, double anharmonicity) {
    if (!(omega01 > 0.0)) throw InvalidParams("omega01 must be positive");
    if (!(anharmonicity < 0.0)) throw InvalidParams("anharmonicity must be negative");

    auto observables = [](double e_c, double e_j) {
        CooperPairBoxParams p{e_c, e_j, 0.0, 35};
        auto en = shifted_energies(p, p.charge_cutoff, 3);
        return std::pair<double, double>{en[1], en[2] - 2.0 * en[1]};
    };

    double e_c = -anharmonicity;
    double e_j = (omega01 + e_c) * (omega01 + e_c) / (8.0 * e_c);
    auto [w01, anh] = observables(e_c, e_j);
    double r1 = w01 - omega01, r2 = anh - anharmonicity;
    double res = std::max(std::abs(r1), std::abs(r2));

    for (int iter = 0; iter < 50; ++iter) {
        if (res < 1e-8) {
            CooperPairBoxParams out{e_c, e_j, 0.0, 35};
            return out;
        }
        double hc = 1e-6 * e_c, hj = 1e-6 * e_j;
        auto [w01_c, anh_c] = observables(e_c + hc, e_j);
        auto [w01_j, anh_j] = observables(e_c, e_j + hj);
        double j11 = (w01_c - w01) / hc, j12 = (w01_j - w01) / hj;
        double j21 = (anh_c - anh) / hc, j22 = (anh_j - anh) / hj;
        double det = j11 * j22 - j12 * j21;
        if (std::abs(det) < 1e-14) throw NoConvergence("singular Jacobian in transmon fit");
        double de_c = -(j22 * r1 - j12 * r2) / det;
        double de_j = -(-j21 * r1 + j11 * r2) / det;

        // Apply only steps that reduce the residual; halve up to 20 times.
        bool accepted = false;
        for (double lam = 1.0; lam > 1e-6; lam *= 0.5) {
            double tc = e_c + lam * de_c, tj = e_j + lam * de_j;
            if (!(tc > 1e-6) || !(tj > 1e-6) || tj / tc > 1e5) continue;
            auto [tw, ta] = observables(tc, tj);
            double tres = std::max(std::abs(tw - omega01), std::abs(ta - anharmonicity));
            if (tres < res) {
                e_c = tc; e_j = tj; w01 = tw; anh = ta;
                r1 = tw - omega01; r2 = ta - anharmonicity; res = tres;
                accepted = true;
                break;
            }
        }
        if (!accepted) throw NoConvergence("transmon fit stalled at residual " + std::to_string(res));
    }
    throw NoConvergence("transmon fit did not reach tolerance");
}

}  // namespace starksense::transmon
