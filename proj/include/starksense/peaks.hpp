#pragma once

#include <Eigen/Dense>

#include <vector>

#include "starksense/errors.hpp"

namespace starksense::peaks {

struct Peak {
    double frequency = 0.0;  // GHz, parabolically refined
    double height = 0.0;     // sample value at the maximum
    double width = 0.0;      // GHz, full width at half prominence
};

// Local maxima of `values` over the uniform axis `frequencies`, keeping
// those whose prominence (height above the higher of the two flanking
// valleys) reaches `prominence_threshold`. Peak positions are refined by a
// parabola through the three samples around the maximum; plateau ties
// resolve toward lower frequency. Result is sorted by frequency.
std::vector<Peak> find_peaks(const std::vector<double>& frequencies,
                             const Eigen::VectorXd& values, double prominence_threshold);

}  // namespace starksense::peaks
