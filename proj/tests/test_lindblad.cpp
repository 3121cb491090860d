#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "starksense/lindblad.hpp"

using namespace starksense;
using namespace starksense::lindblad;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

TEST_CASE("config warnings") {
    SimulationConfig c;  // T1 = T2 = 250, T_sim = 500
    CHECK(config_warnings(c).empty());

    c.t2 = 600.0;
    auto notes = config_warnings(c);
    REQUIRE(notes.size() == 1);
    CHECK(notes[0].find("2*T1") != std::string::npos);

    c.t2 = 250.0;
    c.t_sim = 300.0;
    CHECK(config_warnings(c).size() == 1);
}

TEST_CASE("configuration and state validation") {
    SimulationConfig c;
    HamiltonianSpec h = harmonic_spec({0.0, 4.8});
    c.levels = 2;

    SUBCASE("bad config fields") {
        SimulationConfig bad = c;
        bad.n_therm = 1.0;
        CHECK_THROWS_AS(evolve(h, bad, ground_state(2)), InvalidParams);
        bad = c;
        bad.t1 = 0.0;
        CHECK_THROWS_AS(evolve(h, bad, ground_state(2)), InvalidParams);
        bad = c;
        bad.levels = 1;
        CHECK_THROWS_AS(evolve(h, bad, ground_state(2)), InvalidParams);
    }
    SUBCASE("spec mismatch") {
        SimulationConfig three = c;
        three.levels = 3;
        CHECK_THROWS_AS(evolve(h, three, ground_state(3)), InvalidParams);
        HamiltonianSpec neg = h;
        neg.probe = {4.8, -0.1};
        CHECK_THROWS_AS(evolve(neg, c, ground_state(2)), InvalidParams);
    }
    SUBCASE("bad initial state") {
        DensityState st = ground_state(2);
        st.matrix(0, 1) = 0.3;  // not Hermitian
        CHECK_THROWS_AS(evolve(h, c, st), InvalidParams);
        st = ground_state(2);
        st.matrix(0, 0) = 0.7;  // trace != 1
        CHECK_THROWS_AS(evolve(h, c, st), InvalidParams);
        st = ground_state(2);
        st.time = 600.0;  // beyond T_sim
        CHECK_THROWS_AS(evolve(h, c, st), InvalidParams);
    }
}

TEST_CASE("collapse operators carry the stated rates") {
    SimulationConfig c;
    c.levels = 3;
    std::vector<double> ladder{1.0, std::sqrt(2.0)};
    auto ops = build_collapse_operators(c, ladder);
    REQUIRE(ops.size() == 3);

    double down = std::sqrt(1.1 / 250.0);
    CHECK(std::abs(ops[0](0, 1)) == doctest::Approx(down).epsilon(1e-12));
    CHECK(std::abs(ops[0](1, 2)) == doctest::Approx(down * std::sqrt(2.0)).epsilon(1e-12));
    CHECK(std::abs(ops[1](1, 0)) == doctest::Approx(std::sqrt(0.1 / 250.0)).epsilon(1e-12));
    // Dephasing acts through the weighted number operator with the full 1/T2.
    CHECK(std::abs(ops[2](1, 1)) == doctest::Approx(std::sqrt(1.0 / 250.0)).epsilon(1e-12));
    CHECK(std::abs(ops[2](2, 2)) == doctest::Approx(std::sqrt(1.0 / 250.0) * 2.0).epsilon(1e-12));
    CHECK(std::abs(ops[2](0, 0)) == 0.0);

    c.n_therm = 0.0;
    auto cold = build_collapse_operators(c, ladder);
    CHECK(cold[1].cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("undriven ground state is stationary at zero temperature") {
    SimulationConfig c;
    c.levels = 3;
    c.n_therm = 0.0;
    c.t_sim = 500.0;
    auto traj = evolve(harmonic_spec({0.0, 4.8, 9.4}), c, ground_state(3));
    CHECK(std::abs(traj.final_state.matrix(0, 0).real() - 1.0) < 1e-8);
    CHECK(traj.final_state.matrix.cwiseAbs().sum() - traj.final_state.matrix(0, 0).real() < 1e-8);
}

TEST_CASE("free decay of the excited state") {
    SimulationConfig c;
    c.levels = 2;
    c.n_therm = 0.0;
    DensityState excited = ground_state(2);
    excited.matrix(0, 0) = 0.0;
    excited.matrix(1, 1) = 1.0;
    auto traj = evolve(harmonic_spec({0.0, 4.8}), c, excited);

    SUBCASE("population follows exp(-t/T1)") {
        CHECK(traj.final_state.matrix(1, 1).real() ==
              doctest::Approx(std::exp(-2.0)).epsilon(1e-7));
    }
    SUBCASE("trace preserved along the whole trajectory") {
        for (const auto& p : traj.populations) CHECK(std::abs(p.sum() - 1.0) <= 1e-6);
    }
    SUBCASE("final state Hermitian and positive") {
        const auto& m = traj.final_state.matrix;
        CHECK((m - m.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
        CHECK(es.eigenvalues().minCoeff() >= -1e-8);
    }
}

TEST_CASE("coherence decays at the combined rate with the bare phase") {
    // Undriven, zero temperature: rho_01 evolves as
    // exp((-0.5*(1/T1 + 1/T2) + i*2*pi*E_1) t), decoupled from everything.
    SimulationConfig c;
    c.levels = 3;
    c.n_therm = 0.0;
    c.t1 = 200.0;
    c.t2 = 400.0;
    c.t_sim = 100.0;

    DensityState init = ground_state(3);
    init.matrix(0, 0) = init.matrix(1, 1) = 0.5;
    init.matrix(0, 1) = init.matrix(1, 0) = 0.5;

    // E_1 * t = 480 cycles exactly, so the final coherence is real positive.
    auto traj = evolve(harmonic_spec({0.0, 4.8, 9.4}), c, init);
    double expected = 0.5 * std::exp(-0.5 * (1.0 / 200.0 + 1.0 / 400.0) * 100.0);
    CHECK(traj.final_state.matrix(0, 1).real() == doctest::Approx(expected).epsilon(1e-5));
    CHECK(std::abs(traj.final_state.matrix(0, 1).imag()) < 1e-3);
}

TEST_CASE("resonantly driven two-level system reaches the Bloch steady state") {
    SimulationConfig c;
    c.levels = 2;
    c.n_therm = 0.0;
    c.t_sim = 2500.0;  // 10 T1: transients fully decayed
    HamiltonianSpec h = harmonic_spec({0.0, 4.8});
    h.probe = {4.8, 0.002};
    auto traj = evolve(h, c, ground_state(2));
    double avg = averaged_population(traj, c);

    double rabi = kTwoPi * 0.002;
    double s = rabi * rabi * c.t1 * c.t2;
    CHECK(std::abs(avg - s / (2.0 * (1.0 + s))) < 1e-3);
    CHECK(avg >= 0.0);
    CHECK(avg <= 1.0);
}

TEST_CASE("undriven thermal contact settles at detailed balance") {
    SimulationConfig c;
    c.levels = 2;
    c.t_sim = 5000.0;
    auto traj = evolve(harmonic_spec({0.0, 4.8}), c, ground_state(2));
    // Rates up/down in ratio n/(n+1) = 0.1/1.1 give population 1/12.
    CHECK(std::abs(averaged_population(traj, c) - 1.0 / 12.0) < 1e-3);
}

TEST_CASE("agrees with a dense-matrix integration including the drive") {
    // Independent oracle: assemble H(t) and the dissipators as dense
    // matrices and integrate with fixed-step RK4.
    SimulationConfig c;
    c.levels = 3;
    c.t1 = 150.0;
    c.t2 = 180.0;
    c.n_therm = 0.1;
    c.t_sim = 2.0;

    HamiltonianSpec h;
    h.energies = {0.0, 4.8, 9.4};
    h.ladder = {1.0, 1.38};
    h.probe = {4.62, 0.05};
    h.drive = {4.95, 0.4};

    DensityState init = ground_state(3);
    init.matrix(0, 0) = 0.6;
    init.matrix(1, 1) = 0.3;
    init.matrix(2, 2) = 0.1;
    init.matrix(0, 1) = std::complex<double>(0.1, 0.05);
    init.matrix(1, 0) = std::conj(init.matrix(0, 1));
    init.matrix(1, 2) = std::complex<double>(-0.02, 0.04);
    init.matrix(2, 1) = std::conj(init.matrix(1, 2));

    auto traj = evolve(h, c, init);

    Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(3, 3);
    x(0, 1) = x(1, 0) = 1.0;
    x(1, 2) = x(2, 1) = 1.38;
    Eigen::MatrixXcd e0 = Eigen::Vector3cd(0.0, 4.8, 9.4).asDiagonal();
    auto ops = build_collapse_operators(c, h.ladder);

    auto rhs = [&](const Eigen::MatrixXcd& rho, double t) {
        double f = 0.05 * std::cos(kTwoPi * 4.62 * t) + 0.4 * std::cos(kTwoPi * 4.95 * t);
        Eigen::MatrixXcd ht = kTwoPi * (e0 + f * x);
        Eigen::MatrixXcd d = std::complex<double>(0.0, -1.0) * (ht * rho - rho * ht);
        for (const auto& op : ops) {
            Eigen::MatrixXcd cc = op.adjoint() * op;
            d += op * rho * op.adjoint() - 0.5 * (cc * rho + rho * cc);
        }
        return d;
    };

    Eigen::MatrixXcd rho = init.matrix;
    double t = 0.0, dt = 5e-5;
    while (t < c.t_sim - 1e-12) {
        Eigen::MatrixXcd k1 = rhs(rho, t);
        Eigen::MatrixXcd k2 = rhs(rho + 0.5 * dt * k1, t + 0.5 * dt);
        Eigen::MatrixXcd k3 = rhs(rho + 0.5 * dt * k2, t + 0.5 * dt);
        Eigen::MatrixXcd k4 = rhs(rho + dt * k3, t + dt);
        rho += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += dt;
    }
    CHECK((traj.final_state.matrix - rho).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("averaged_population") {
    SimulationConfig c;
    c.levels = 2;  // window [437.5, 500]

    SUBCASE("ground trajectory averages to zero") {
        Trajectory traj;
        for (double t = 0.0; t <= 500.0 + 1e-9; t += 0.5) {
            traj.times.push_back(t);
            traj.populations.push_back(Eigen::Vector2d(1.0, 0.0));
        }
        CHECK(averaged_population(traj, c) == 0.0);
    }
    SUBCASE("fast sine-squared oscillation averages to one half") {
        Trajectory traj;
        for (double t = 0.0; t <= 500.0 + 1e-9; t += 0.05) {
            double p = std::sin(kTwoPi * 0.5 * t) * std::sin(kTwoPi * 0.5 * t);
            traj.times.push_back(t);
            traj.populations.push_back(Eigen::Vector2d(1.0 - p, p));
        }
        CHECK(std::abs(averaged_population(traj, c) - 0.5) < 1e-3);
    }
    SUBCASE("trajectory starting inside the window is rejected") {
        Trajectory traj;
        for (double t = 450.0; t <= 500.0; t += 0.5) {
            traj.times.push_back(t);
            traj.populations.push_back(Eigen::Vector2d(1.0, 0.0));
        }
        CHECK_THROWS_AS(averaged_population(traj, c), WindowTooShort);
    }
    SUBCASE("trajectory ending before T_sim is rejected") {
        Trajectory traj;
        for (double t = 0.0; t <= 480.0; t += 0.5) {
            traj.times.push_back(t);
            traj.populations.push_back(Eigen::Vector2d(1.0, 0.0));
        }
        CHECK_THROWS_AS(averaged_population(traj, c), WindowTooShort);
    }
}
