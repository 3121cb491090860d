#include "starksense/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace starksense::lindblad {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void validate_config(const SimulationConfig& c) {
    if (!(c.t1 > 0.0) || !(c.t2 > 0.0)) throw InvalidParams("T1 and T2 must be positive");
    if (!(c.n_therm >= 0.0) || !(c.n_therm < 1.0))
        throw InvalidParams("n_therm must lie in [0, 1)");
    if (!(c.t_sim > 0.0)) throw InvalidParams("T_sim must be positive");
    if (c.levels < 2) throw InvalidParams("at least two levels required");
    if (!(c.integrator_tolerance > 0.0)) throw InvalidParams("tolerance must be positive");
    if (!(c.averaging_window_fraction > 0.0))
        throw InvalidParams("averaging window fraction must be positive");
}

void validate_spec(const HamiltonianSpec& s, const SimulationConfig& c) {
    if (static_cast<int>(s.energies.size()) != c.levels)
        throw InvalidParams("energy list does not match level count");
    if (static_cast<int>(s.ladder.size()) != c.levels - 1)
        throw InvalidParams("ladder weight list must have levels-1 entries");
    for (double w : s.ladder)
        if (!(w > 0.0)) throw InvalidParams("ladder weights must be positive");
    if (s.probe.amplitude < 0.0 || s.drive.amplitude < 0.0)
        throw InvalidParams("tone amplitudes must be non-negative");
    if ((s.probe.amplitude > 0.0 && !(s.probe.frequency > 0.0)) ||
        (s.drive.amplitude > 0.0 && !(s.drive.frequency > 0.0)))
        throw InvalidParams("active tones need positive frequencies");
}

void validate_initial(const DensityState& st, const SimulationConfig& c) {
    int n = c.levels;
    if (st.matrix.rows() != n || st.matrix.cols() != n)
        throw InvalidParams("density matrix dimension does not match level count");
    if ((st.matrix - st.matrix.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
        throw InvalidParams("density matrix not Hermitian");
    if (std::abs(st.matrix.trace().real() - 1.0) > 1e-6 ||
        std::abs(st.matrix.trace().imag()) > 1e-9)
        throw InvalidParams("density matrix trace must be 1");
    if (!(st.time < c.t_sim)) throw InvalidParams("initial time at or beyond T_sim");
}

// Hermiticity lets us integrate only the upper triangle k <= m. The packed
// state is planar: y[0..T) real parts, y[T..2T) imaginary parts, row-major
// triangle with T = n(n+1)/2. Per element:
//   drho[k,m] = a[k,m] rho[k,m] + gd[k,m] rho[k+1,m+1] + gu[k,m] rho[k-1,m-1]
//             - i f(t) (w[k-1] rho[k-1,m] + w[k] rho[k+1,m]
//                       - w[m-1] rho[k,m-1] - w[m] rho[k,m+1])
// where a carries the oscillation phase and all decay rates; on the diagonal
// the commutator collapses to 2 f (w[k-1] Im rho[k-1,k] - w[k] Im rho[k,k+1]).
// Trace is conserved structurally (gain/loss columns cancel).
struct PackedRhs {
    int n = 0, tri = 0;
    std::vector<double> ar, ai;      // per-element coefficient (re, im)
    std::vector<double> gd, gu;      // thermal gain couplings
    std::vector<double> w;           // ladder weights, w[n-1] = 0 pad
    std::vector<int> row;            // row[k] + m indexes element (k, m)
    double amp_p = 0.0, ang_p = 0.0, amp_d = 0.0, ang_d = 0.0;

    void operator()(const double* y, double* dy, double t) const {
        const double f = amp_p * std::cos(ang_p * t) + amp_d * std::cos(ang_d * t);
        const double* xr = y;
        const double* xi = y + tri;
        double* outr = dy;
        double* outi = dy + tri;

        for (int k = 0; k < n; ++k) {
            const int rk = row[k];
            const int rup = (k + 1 < n) ? row[k + 1] : 0;
            const int rdn = (k > 0) ? row[k - 1] : 0;

            {  // diagonal element (k, k): purely real derivative
                const int id = rk + k;
                double acc = ar[id] * xr[id];
                if (k + 1 < n) acc += gd[id] * xr[rup + k + 1];
                if (k > 0) acc += gu[id] * xr[rdn + k - 1];
                double com = 0.0;
                if (k > 0) com += w[k - 1] * xi[rdn + k];
                if (k + 1 < n) com -= w[k] * xi[rk + k + 1];
                outr[id] = acc + 2.0 * f * com;
                outi[id] = 0.0;
            }

            if (k == 0) {
                // First row: no downward neighbors.
                for (int m = 1; m < n - 1; ++m) {
                    const int id = rk + m;
                    double accr = ar[id] * xr[id] - ai[id] * xi[id];
                    double acci = ar[id] * xi[id] + ai[id] * xr[id];
                    accr += gd[id] * xr[rup + m + 1];
                    acci += gd[id] * xi[rup + m + 1];
                    double dvr = w[0] * xr[rup + m] - w[m - 1] * xr[id - 1] - w[m] * xr[id + 1];
                    double dvi = w[0] * xi[rup + m] - w[m - 1] * xi[id - 1] - w[m] * xi[id + 1];
                    outr[id] = accr + f * dvi;
                    outi[id] = acci - f * dvr;
                }
            } else if (k + 1 < n) {
                for (int m = k + 1; m < n - 1; ++m) {
                    const int id = rk + m;
                    double accr = ar[id] * xr[id] - ai[id] * xi[id];
                    double acci = ar[id] * xi[id] + ai[id] * xr[id];
                    accr += gd[id] * xr[rup + m + 1] + gu[id] * xr[rdn + m - 1];
                    acci += gd[id] * xi[rup + m + 1] + gu[id] * xi[rdn + m - 1];
                    double dvr = w[k - 1] * xr[rdn + m] + w[k] * xr[rup + m] -
                                 w[m - 1] * xr[id - 1] - w[m] * xr[id + 1];
                    double dvi = w[k - 1] * xi[rdn + m] + w[k] * xi[rup + m] -
                                 w[m - 1] * xi[id - 1] - w[m] * xi[id + 1];
                    outr[id] = accr + f * dvi;
                    outi[id] = acci - f * dvr;
                }
            }

            if (k + 1 < n) {  // last column m = n-1: no rightward/up-right neighbors
                const int m = n - 1;
                const int id = rk + m;
                double accr = ar[id] * xr[id] - ai[id] * xi[id];
                double acci = ar[id] * xi[id] + ai[id] * xr[id];
                double dvr = w[k] * xr[rup + m] - w[m - 1] * xr[id - 1];
                double dvi = w[k] * xi[rup + m] - w[m - 1] * xi[id - 1];
                if (k > 0) {
                    accr += gu[id] * xr[rdn + m - 1];
                    acci += gu[id] * xi[rdn + m - 1];
                    dvr += w[k - 1] * xr[rdn + m];
                    dvi += w[k - 1] * xi[rdn + m];
                }
                outr[id] = accr + f * dvi;
                outi[id] = acci - f * dvr;
            }
        }
    }
};

PackedRhs build_rhs(const HamiltonianSpec& spec, const SimulationConfig& config) {
    int n = config.levels;
    PackedRhs rhs;
    rhs.n = n;
    rhs.tri = n * (n + 1) / 2;
    rhs.w.assign(n, 0.0);
    for (int k = 0; k + 1 < n; ++k) rhs.w[k] = spec.ladder[k];
    rhs.row.resize(n);
    for (int k = 0; k < n; ++k) rhs.row[k] = k * n - (k * (k - 1)) / 2 - k;

    double r_down = (config.n_therm + 1.0) / config.t1;
    double r_up = config.n_therm / config.t1;
    double r_phi = 1.0 / config.t2;

    // Number-basis weights: lowering channel sees w[k-1]^2, raising w[k]^2,
    // dephasing the squared number weight w[k-1]^2 (a^dagger a of the ladder).
    std::vector<double> g_low(n, 0.0), g_high(n, 0.0);
    for (int k = 0; k < n; ++k) {
        g_low[k] = (k > 0) ? rhs.w[k - 1] * rhs.w[k - 1] : 0.0;
        g_high[k] = rhs.w[k] * rhs.w[k];
    }

    rhs.ar.assign(rhs.tri, 0.0);
    rhs.ai.assign(rhs.tri, 0.0);
    rhs.gd.assign(rhs.tri, 0.0);
    rhs.gu.assign(rhs.tri, 0.0);
    for (int k = 0; k < n; ++k) {
        for (int m = k; m < n; ++m) {
            int id = rhs.row[k] + m;
            double dephase = g_low[k] - g_low[m];
            rhs.ar[id] = -0.5 * (r_down * (g_low[k] + g_low[m]) +
                                 r_up * (g_high[k] + g_high[m]) + r_phi * dephase * dephase);
            rhs.ai[id] = -kTwoPi * (spec.energies[k] - spec.energies[m]);
            if (m + 1 < n) rhs.gd[id] = r_down * rhs.w[k] * rhs.w[m];
            if (k > 0) rhs.gu[id] = r_up * rhs.w[k - 1] * rhs.w[m - 1];
        }
    }
    rhs.amp_p = kTwoPi * spec.probe.amplitude;
    rhs.ang_p = kTwoPi * spec.probe.frequency;
    rhs.amp_d = kTwoPi * spec.drive.amplitude;
    rhs.ang_d = kTwoPi * spec.drive.frequency;
    return rhs;
}

// Step cap: 50 points per period of the fastest spectral component of the
// two-tone drive, the sum frequency f_P + f_D.
double step_cap(const HamiltonianSpec& spec, double span) {
    double fsum = 0.0;
    if (spec.probe.amplitude > 0.0) fsum += spec.probe.frequency;
    if (spec.drive.amplitude > 0.0) fsum += spec.drive.frequency;
    double cap = (fsum > 0.0) ? 1.0 / (50.0 * fsum) : span / 500.0;
    return std::min(cap, span / 50.0);
}

// Dormand-Prince 5(4) pair with FSAL, fixed tableau.
namespace dp {
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
// b - bhat, the embedded 4th-order error weights
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
}  // namespace dp

std::vector<double> integrate(const HamiltonianSpec& spec, const SimulationConfig& config,
                              const DensityState& initial,
                              const std::function<void(double, const Eigen::VectorXd&)>& observe) {
    validate_config(config);
    validate_spec(spec, config);
    validate_initial(initial, config);

    const int n = config.levels;
    const PackedRhs rhs = build_rhs(spec, config);
    const int tri = rhs.tri;
    const int len = 2 * tri;

    std::vector<double> y(len);
    for (int k = 0; k < n; ++k)
        for (int m = k; m < n; ++m) {
            y[rhs.row[k] + m] = initial.matrix(k, m).real();
            y[tri + rhs.row[k] + m] = initial.matrix(k, m).imag();
        }

    double t = initial.time;
    const double t_end = config.t_sim;
    const double cap = step_cap(spec, t_end - t);
    const double floor = cap * 1e-10;
    const double tol = config.integrator_tolerance;

    Eigen::VectorXd pops(n);
    auto report = [&](double time, const std::vector<double>& state) {
        for (int k = 0; k < n; ++k) pops(k) = state[rhs.row[k] + k];
        observe(time, pops);
    };
    report(t, y);

    std::vector<double> k1(len), k2(len), k3(len), k4(len), k5(len), k6(len), k7(len), tmp(len),
        ynew(len);
    rhs(y.data(), k1.data(), t);

    double dt = cap;
    const double t_eps = 1e-12 * std::max(1.0, t_end);
    int rejects = 0;
    while (t < t_end - t_eps) {
        dt = std::min({dt, cap, t_end - t});
        if (dt < floor) throw StepSizeFailure("integrator step collapsed at t = " + std::to_string(t));

        using namespace dp;
        for (int i = 0; i < len; ++i) tmp[i] = y[i] + dt * a21 * k1[i];
        rhs(tmp.data(), k2.data(), t + c2 * dt);
        for (int i = 0; i < len; ++i) tmp[i] = y[i] + dt * (a31 * k1[i] + a32 * k2[i]);
        rhs(tmp.data(), k3.data(), t + c3 * dt);
        for (int i = 0; i < len; ++i)
            tmp[i] = y[i] + dt * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(tmp.data(), k4.data(), t + c4 * dt);
        for (int i = 0; i < len; ++i)
            tmp[i] = y[i] + dt * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(tmp.data(), k5.data(), t + c5 * dt);
        for (int i = 0; i < len; ++i)
            tmp[i] = y[i] + dt * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                  a65 * k5[i]);
        rhs(tmp.data(), k6.data(), t + dt);
        for (int i = 0; i < len; ++i)
            ynew[i] = y[i] + dt * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        rhs(ynew.data(), k7.data(), t + dt);

        double err = 0.0;
        for (int i = 0; i < len; ++i) {
            double ei = dt * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                              e7 * k7[i]);
            double scale = tol + tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err = std::max(err, std::abs(ei) / scale);
        }

        if (err <= 1.0) {
            t += dt;
            y.swap(ynew);
            k1.swap(k7);  // first-same-as-last
            report(t, y);
            double grow = (err > 0.0) ? 0.9 * std::pow(err, -0.2) : 5.0;
            dt *= std::clamp(grow, 0.2, 5.0);
            rejects = 0;
        } else {
            dt *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            if (++rejects > 60 || dt < floor)
                throw StepSizeFailure("integrator cannot meet tolerance at t = " +
                                      std::to_string(t));
        }
    }
    return y;
}

}  // namespace

std::vector<std::string> config_warnings(const SimulationConfig& config) {
    validate_config(config);
    std::vector<std::string> notes;
    if (config.t2 > 2.0 * config.t1) notes.push_back("T2 exceeds the physical bound 2*T1");
    if (config.t_sim < 2.0 * config.t1)
        notes.push_back("T_sim below 2*T1; the state may not have settled");
    if (config.averaging_window_fraction * config.t1 > config.t_sim)
        notes.push_back("averaging window longer than the simulated span");
    return notes;
}

HamiltonianSpec harmonic_spec(const std::vector<double>& energies) {
    HamiltonianSpec spec;
    spec.energies = energies;
    for (std::size_t k = 0; k + 1 < energies.size(); ++k)
        spec.ladder.push_back(std::sqrt(static_cast<double>(k + 1)));
    return spec;
}

DensityState ground_state(int levels) {
    if (levels < 2) throw InvalidParams("at least two levels required");
    DensityState st;
    st.matrix = Eigen::MatrixXcd::Zero(levels, levels);
    st.matrix(0, 0) = 1.0;
    st.time = 0.0;
    return st;
}

std::vector<Eigen::MatrixXcd> build_collapse_operators(const SimulationConfig& config,
                                                       const std::vector<double>& ladder) {
    validate_config(config);
    int n = config.levels;
    if (static_cast<int>(ladder.size()) != n - 1)
        throw InvalidParams("ladder weight list must have levels-1 entries");

    Eigen::MatrixXcd lower = Eigen::MatrixXcd::Zero(n, n);
    for (int k = 0; k + 1 < n; ++k) lower(k, k + 1) = ladder[k];

    std::vector<Eigen::MatrixXcd> ops;
    ops.push_back(std::sqrt((config.n_therm + 1.0) / config.t1) * lower);
    ops.push_back(std::sqrt(config.n_therm / config.t1) * lower.adjoint());
    ops.push_back(std::sqrt(1.0 / config.t2) * (lower.adjoint() * lower));
    return ops;
}

void evolve_observed(const HamiltonianSpec& spec, const SimulationConfig& config,
                     const DensityState& initial,
                     const std::function<void(double, const Eigen::VectorXd&)>& observe) {
    integrate(spec, config, initial, observe);
}

Trajectory evolve(const HamiltonianSpec& spec, const SimulationConfig& config,
                  const DensityState& initial) {
    Trajectory traj;
    std::vector<double> packed = integrate(spec, config, initial,
                                           [&](double t, const Eigen::VectorXd& pops) {
                                               traj.times.push_back(t);
                                               traj.populations.push_back(pops);
                                           });
    int n = config.levels;
    int tri = n * (n + 1) / 2;
    traj.final_state.matrix.resize(n, n);
    for (int k = 0; k < n; ++k) {
        int rk = k * n - (k * (k - 1)) / 2 - k;
        for (int m = k; m < n; ++m) {
            std::complex<double> v(packed[rk + m], packed[tri + rk + m]);
            traj.final_state.matrix(k, m) = v;
            traj.final_state.matrix(m, k) = std::conj(v);
        }
    }
    traj.final_state.time = traj.times.back();
    return traj;
}

double averaged_population(const Trajectory& trajectory, const SimulationConfig& config) {
    validate_config(config);
    if (trajectory.times.size() < 2) throw WindowTooShort("trajectory has fewer than two samples");
    double t_end = trajectory.times.back();
    double t0 = config.t_sim - config.averaging_window_fraction * config.t1;
    if (t0 < trajectory.times.front() - 1e-9 || t_end < config.t_sim - 1e-6)
        throw WindowTooShort("trajectory does not cover the averaging window");
    if (!(t_end > t0)) throw WindowTooShort("empty averaging window");

    auto level_avg = [&](const Eigen::VectorXd& p) {
        double s = 0.0;
        for (int k = 0; k < p.size(); ++k) s += k * p(k);
        return s;
    };

    // Trapezoid over samples inside [t0, t_end], entering the window by
    // linear interpolation at t0.
    std::size_t i = 0;
    while (i < trajectory.times.size() && trajectory.times[i] < t0) ++i;
    double integral = 0.0;
    double prev_t, prev_v;
    if (i == 0) {
        prev_t = trajectory.times[0];
        prev_v = level_avg(trajectory.populations[0]);
        i = 1;
    } else {
        double ta = trajectory.times[i - 1], tb = trajectory.times[i];
        double va = level_avg(trajectory.populations[i - 1]);
        double vb = level_avg(trajectory.populations[i]);
        double lam = (t0 - ta) / (tb - ta);
        prev_t = t0;
        prev_v = va + lam * (vb - va);
    }
    double window_start = prev_t;
    for (; i < trajectory.times.size(); ++i) {
        double tt = trajectory.times[i];
        double vv = level_avg(trajectory.populations[i]);
        integral += 0.5 * (vv + prev_v) * (tt - prev_t);
        prev_t = tt;
        prev_v = vv;
    }
    if (!(prev_t > window_start)) throw WindowTooShort("no samples inside the averaging window");
    return integral / (prev_t - window_start);
}

}  // namespace starksense::lindblad
