#include "starksense/qudit_model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

namespace starksense::qudit {

namespace {

// Degeneracy threshold for perturbation denominators, GHz. Below typical
// linewidths the series is meaningless anyway.
constexpr double kDenominatorFloor = 1e-3;

// Intermediate-level cutoff: the perturbation couples at most +-2 levels per
// order, so fourth order reaches k +- 8.
constexpr int kCutoffMargin = 8;

void check_circuit(const CircuitParams& c) {
    if (!(c.gamma > 0.0)) throw InvalidParams("gamma must be positive");
    if (!(c.omega_q > 0.0)) throw InvalidParams("omega_q must be positive");
}

void check_drive(const DriveTone& d) {
    if (!(d.frequency > 0.0)) throw InvalidParams("drive frequency must be positive");
    if (d.amplitude < 0.0) throw InvalidParams("drive amplitude must be non-negative");
}

double cubic(double g, double two_delta, double a_d, double x) {
    return (g * x * x + two_delta) * x - a_d;
}

// Bracketed Newton for the unique real root on [0, a_d/(2*delta)], Delta > 0.
double unique_root(double g, double delta, double a_d) {
    if (a_d == 0.0) return 0.0;
    double lo = 0.0;
    double hi = a_d / (2.0 * delta);  // f(hi) = g*hi^3 > 0, f(lo) = -a_d < 0
    double x = hi;
    for (int it = 0; it < 200; ++it) {
        double f = cubic(g, 2.0 * delta, a_d, x);
        if (f > 0.0) hi = x; else lo = x;
        double df = 3.0 * g * x * x + 2.0 * delta;
        double step = f / df;
        double next = x - step;
        if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-17 * std::max(1.0, std::abs(x))) { x = next; break; }
        x = next;
    }
    return x;
}

// Dense matrix of the displaced-frame perturbation in the number basis,
// indices 0..n. Nonzero only on the first and second off-diagonals.
Eigen::MatrixXd perturbation_matrix(double gamma, double alpha, int n) {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (int k = 0; k <= n; ++k) {
        if (k + 1 <= n) v(k + 1, k) = -0.5 * gamma * alpha * k * std::sqrt(k + 1.0);
        if (k - 1 >= 0) v(k - 1, k) = -0.5 * gamma * alpha * (k - 1) * std::sqrt(double(k));
        if (k + 2 <= n) v(k + 2, k) = -0.25 * gamma * alpha * alpha * std::sqrt((k + 1.0) * (k + 2.0));
        if (k - 2 >= 0) v(k - 2, k) = -0.25 * gamma * alpha * alpha * std::sqrt(k * (k - 1.0));
    }
    return v;
}

}  // namespace

double detuning(const CircuitParams& circuit, const DriveTone& drive) {
    return drive.frequency - circuit.omega_q + 0.5 * circuit.gamma;
}

AlphaSolution solve_alpha(const CircuitParams& circuit, const DriveTone& drive) {
    check_circuit(circuit);
    check_drive(drive);
    double delta = detuning(circuit, drive);
    if (!(delta > 0.0))
        throw NegativeDetuning("Delta <= 0: use enumerate_alpha_roots");
    double alpha = unique_root(circuit.gamma, delta, drive.amplitude);
    assert(std::abs(cubic(circuit.gamma, 2.0 * delta, drive.amplitude, alpha)) <=
           1e-12 * std::max(drive.amplitude, std::abs(delta)));
    return {alpha, 1};
}

RootReport enumerate_alpha_roots(const CircuitParams& circuit, const DriveTone& drive) {
    if (!(circuit.gamma > 0.0)) throw InvalidParams("gamma must be positive");
    check_drive(drive);
    double g = circuit.gamma;
    double delta = detuning(circuit, drive);
    double p = 2.0 * delta / g;       // monic depressed cubic x^3 + p x + q
    double q = -drive.amplitude / g;
    double disc = -4.0 * p * p * p - 27.0 * q * q;

    Eigen::Matrix3d companion = Eigen::Matrix3d::Zero();
    companion(0, 2) = -q;
    companion(1, 0) = 1.0;
    companion(1, 2) = -p;
    companion(2, 1) = 1.0;
    Eigen::EigenSolver<Eigen::Matrix3d> es(companion);

    std::vector<double> roots;
    for (int i = 0; i < 3; ++i) {
        std::complex<double> r = es.eigenvalues()(i);
        if (std::abs(r.imag()) > 1e-8 * std::max(1.0, std::abs(r.real()))) continue;
        double x = r.real();
        for (int it = 0; it < 3; ++it) {  // polish
            double f = cubic(g, 2.0 * delta, drive.amplitude, x);
            double df = 3.0 * g * x * x + 2.0 * delta;
            if (df != 0.0) x -= f / df;
        }
        roots.push_back(x);
    }
    std::sort(roots.begin(), roots.end());
    // Collapse near-identical roots from the repeated-root boundary.
    std::vector<double> uniq;
    for (double r : roots) {
        if (uniq.empty() || std::abs(r - uniq.back()) >
                                1e-9 * std::max(1.0, std::abs(r)))
            uniq.push_back(r);
    }
    return {std::move(uniq), disc > 0.0 ? 1 : -1};
}

double rotating_energy(const CircuitParams& circuit, const DriveTone& drive,
                       int k, int order) {
    if (k < 0) throw InvalidParams("level index must be non-negative");
    if (order < 0 || order > 4) throw InvalidParams("order must be in 0..4");
    double alpha = solve_alpha(circuit, drive).alpha;
    double g = circuit.gamma;
    double c1 = circuit.omega_q - drive.frequency - 0.25 * g - g * alpha * alpha;

    int n = k + kCutoffMargin;
    auto e0 = [&](int m) { return c1 * m - 0.25 * g * m * m; };
    double energy = e0(k);
    if (order < 2 || alpha == 0.0) return energy;

    Eigen::MatrixXd v = perturbation_matrix(g, alpha, n);
    assert(v(k, k) == 0.0);  // first-order correction vanishes

    std::vector<double> den(n + 1, 0.0);
    for (int m = 0; m <= n; ++m) {
        if (m == k) continue;
        den[m] = e0(k) - e0(m);
    }
    auto checked_den = [&](int m) {
        if (std::abs(den[m]) < kDenominatorFloor)
            throw DegeneratePerturbation("level " + std::to_string(k) + " nearly degenerate with " +
                                         std::to_string(m));
        return den[m];
    };

    if (order >= 2) {
        double s2 = 0.0;
        for (int m = 0; m <= n; ++m) {
            if (m == k || v(m, k) == 0.0) continue;
            s2 += v(m, k) * v(m, k) / checked_den(m);
        }
        energy += s2;
    }
    if (order >= 3) {
        double s3 = 0.0;
        for (int m = 0; m <= n; ++m) {
            if (m == k) continue;
            for (int l = 0; l <= n; ++l) {
                if (l == k) continue;
                double num = v(k, m) * v(m, l) * v(l, k);
                if (num == 0.0) continue;
                s3 += num / (checked_den(m) * checked_den(l));
            }
        }
        energy += s3;
    }
    if (order >= 4) {
        double s4 = 0.0;
        for (int p = 0; p <= n; ++p) {
            if (p == k || v(k, p) == 0.0) continue;
            for (int m = 0; m <= n; ++m) {
                if (m == k || v(p, m) == 0.0) continue;
                for (int l = 0; l <= n; ++l) {
                    if (l == k) continue;
                    double num = v(k, p) * v(p, m) * v(m, l) * v(l, k);
                    if (num == 0.0) continue;
                    s4 += num / (checked_den(p) * checked_den(m) * checked_den(l));
                }
            }
        }
        double renorm = 0.0;
        for (int m = 0; m <= n; ++m) {
            if (m == k || v(k, m) == 0.0) continue;
            for (int l = 0; l <= n; ++l) {
                if (l == k || v(k, l) == 0.0) continue;
                double dm = checked_den(m);
                renorm += v(k, m) * v(k, m) * v(k, l) * v(k, l) /
                          (dm * dm * checked_den(l));
            }
        }
        energy += s4 - renorm;
    }
    return energy;
}

LevelSolution lab_transitions(const CircuitParams& circuit, const DriveTone& drive,
                              int k_max, int order) {
    if (k_max < 1) throw InvalidParams("k_max must be >= 1");
    LevelSolution out;
    out.alpha = solve_alpha(circuit, drive).alpha;
    out.order = order;
    out.rotating_energies.resize(k_max + 1);
    for (int k = 0; k <= k_max; ++k)
        out.rotating_energies[k] = rotating_energy(circuit, drive, k, order);
    out.lab_transitions.assign(k_max + 1, std::numeric_limits<double>::quiet_NaN());
    for (int k = 1; k <= k_max; ++k)
        out.lab_transitions[k] =
            (out.rotating_energies[k] - out.rotating_energies[0]) / k + drive.frequency;
    return out;
}

double dispersive_shift(const CircuitParams& circuit, const DriveTone& drive, int k) {
    check_circuit(circuit);
    check_drive(drive);
    if (k < 0) throw InvalidParams("level index must be non-negative");
    double delta = detuning(circuit, drive);
    if (std::abs(delta) < 1e-9) throw DivisionByZero("Delta = 0 in dispersive shift");
    double x = drive.amplitude / (2.0 * delta);
    return -circuit.gamma * x * x * k;
}

std::vector<MultiPhotonLine> mixed_photon_lines(const CircuitParams& circuit,
                                                const DriveTone& drive, int k_max,
                                                int n_probe_max, int n_drive_max,
                                                int order) {
    if (n_probe_max < 1) throw InvalidParams("n_probe_max must be >= 1");
    if (n_drive_max < 0) throw InvalidParams("n_drive_max must be >= 0");
    LevelSolution sol = lab_transitions(circuit, drive, k_max, order);
    std::vector<MultiPhotonLine> lines;
    for (int k = 1; k <= k_max; ++k) {
        double lab_energy = sol.rotating_energies[k] - sol.rotating_energies[0] +
                            k * drive.frequency;
        for (int np = 1; np <= std::min(n_probe_max, k); ++np) {
            for (int nd = 0; nd <= std::min(n_drive_max, k - np); ++nd) {
                double freq = (lab_energy - nd * drive.frequency) / np;
                if (freq > 0.0) lines.push_back({k, np, nd, freq});
            }
        }
    }
    return lines;
}

}  // namespace starksense::qudit
