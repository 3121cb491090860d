#include "starksense/sweep.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

namespace starksense::sweep {

namespace {

int worker_count() {
    if (const char* env = std::getenv("STARK_SENSE_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1 && v <= 1024) return static_cast<int>(v);
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

// Streaming trapezoid over the tail window [t0, t_end]: each sample pair
// contributes its segment clipped to the window, entering by interpolation.
struct WindowAverage {
    explicit WindowAverage(double window_start) : t0(window_start) {}
    double t0;
    bool have_prev = false, entered = false;
    double prev_t = 0.0, prev_v = 0.0, start = 0.0, integral = 0.0;

    void feed(double t, double v) {
        if (have_prev && t > prev_t) {
            if (t >= t0) {
                double a = std::max(prev_t, t0);
                double va = prev_v + (v - prev_v) * (a - prev_t) / (t - prev_t);
                integral += 0.5 * (va + v) * (t - a);
                if (!entered) {
                    entered = true;
                    start = a;
                }
            }
        } else if (!have_prev && t >= t0) {
            entered = true;
            start = t;
        }
        prev_t = t;
        prev_v = v;
        have_prev = true;
    }
    double value() const {
        if (!entered || !(prev_t > start)) throw WindowTooShort("no samples in window");
        return integral / (prev_t - start);
    }
};

double cell_average(const SweepSpec& spec, const lindblad::SimulationConfig& config,
                    double probe_freq, double drive_amp) {
    lindblad::HamiltonianSpec h;
    h.energies = spec.energies;
    h.ladder = spec.ladder;
    h.probe = {probe_freq, spec.probe_amplitude};
    h.drive = {spec.drive_frequency, drive_amp};

    WindowAverage acc(config.t_sim - config.averaging_window_fraction * config.t1);
    lindblad::evolve_observed(h, config, lindblad::ground_state(config.levels),
                              [&](double t, const Eigen::VectorXd& pops) {
                                  double s = 0.0;
                                  for (int k = 0; k < pops.size(); ++k) s += k * pops(k);
                                  acc.feed(t, s);
                              });
    return acc.value();
}

}  // namespace

SpectrumGrid sweep_spectrum(const SweepSpec& spec, const lindblad::SimulationConfig& config) {
    if (!(spec.probe_step > 0.0)) throw InvalidParams("probe step must be positive");
    if (spec.probe_stop < spec.probe_start) throw InvalidParams("probe range reversed");
    if (spec.drive_amplitudes.empty()) throw InvalidParams("no drive amplitudes given");
    if (!(spec.probe_amplitude > 0.0)) throw InvalidParams("probe amplitude must be positive");

    SpectrumGrid grid;
    int np = static_cast<int>(std::floor((spec.probe_stop - spec.probe_start) / spec.probe_step +
                                         0.5)) +
             1;
    grid.probe_frequencies.resize(np);
    for (int i = 0; i < np; ++i) grid.probe_frequencies[i] = spec.probe_start + i * spec.probe_step;
    grid.drive_amplitudes = spec.drive_amplitudes;
    int nd = static_cast<int>(grid.drive_amplitudes.size());
    grid.values.setConstant(np, nd, std::numeric_limits<double>::quiet_NaN());

    const int total = np * nd;
    std::atomic<int> next{0};
    auto run_cells = [&]() {
        for (;;) {
            int c = next.fetch_add(1, std::memory_order_relaxed);
            if (c >= total) return;
            int pi = c / nd, di = c % nd;
            try {
                grid.values(pi, di) =
                    cell_average(spec, config, grid.probe_frequencies[pi],
                                 grid.drive_amplitudes[di]);
            } catch (const Error&) {
                // leave NaN: per-cell failure must not abort the sweep
            }
        }
    };

    int workers = std::min(worker_count(), total);
    if (workers <= 1) {
        run_cells();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int i = 0; i < workers; ++i) pool.emplace_back(run_cells);
        for (auto& th : pool) th.join();
    }
    return grid;
}

SpectrumGrid normalize_columns(SpectrumGrid grid) {
    for (int j = 0; j < grid.values.cols(); ++j) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < grid.values.rows(); ++i) {
            double v = grid.values(i, j);
            if (std::isnan(v)) continue;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        double range = hi - lo;
        for (int i = 0; i < grid.values.rows(); ++i) {
            double& v = grid.values(i, j);
            if (std::isnan(v)) continue;
            v = (range > 0.0) ? (v - lo) / range : 0.0;
        }
    }
    grid.normalized = true;
    return grid;
}

std::vector<peaks::Peak> column_peaks(const SpectrumGrid& grid, int column,
                                      double prominence_threshold) {
    if (column < 0 || column >= grid.values.cols()) throw InvalidParams("column out of range");
    return peaks::find_peaks(grid.probe_frequencies, grid.values.col(column),
                             prominence_threshold);
}

}  // namespace starksense::sweep
