#pragma once

#include <Eigen/Dense>

#include <vector>

#include "starksense/lindblad.hpp"
#include "starksense/peaks.hpp"

namespace starksense::sweep {

// Spectroscopy grid: values(i, j) is the window-averaged level population at
// probe_frequencies[i], drive_amplitudes[j]. Failed cells carry NaN.
struct SpectrumGrid {
    std::vector<double> probe_frequencies;  // GHz
    std::vector<double> drive_amplitudes;   // GHz
    Eigen::MatrixXd values;
    bool normalized = false;
};

struct SweepSpec {
    double probe_start = 0.0, probe_stop = 0.0, probe_step = 0.0;  // GHz
    double probe_amplitude = 0.0;                                  // GHz
    double drive_frequency = 0.0;                                  // GHz
    std::vector<double> drive_amplitudes;                          // GHz
    std::vector<double> energies;                                  // level energies, GHz
    std::vector<double> ladder;                                    // coupling weights
};

// Evaluate every (probe, drive) cell independently: evolve from the ground
// state and average the level population over the trailing window. Cells run
// on STARK_SENSE_THREADS workers (default: hardware concurrency); each cell
// writes only its own slot, so the grid is identical for any thread count.
// A cell whose evolution fails is recorded as NaN rather than aborting.
SpectrumGrid sweep_spectrum(const SweepSpec& spec, const lindblad::SimulationConfig& config);

// Rescale each column to [0, 1] by (v - min)/(max - min); constant columns
// map to all zeros. NaN cells stay NaN and are ignored for min/max.
SpectrumGrid normalize_columns(SpectrumGrid grid);

// Peaks of one column of a (typically normalized) grid.
std::vector<peaks::Peak> column_peaks(const SpectrumGrid& grid, int column,
                                      double prominence_threshold);

}  // namespace starksense::sweep
