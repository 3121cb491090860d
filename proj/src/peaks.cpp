#include "starksense/peaks.hpp"

#include <algorithm>
#include <cmath>

namespace starksense::peaks {

namespace {

// Prominence of the maximum at i: walk each side until a strictly higher
// sample (or the edge), track the lowest valley passed; the peak stands on
// the higher of the two valleys.
double prominence(const Eigen::VectorXd& v, int i) {
    double left_min = v(i);
    for (int j = i - 1; j >= 0; --j) {
        if (v(j) > v(i)) break;
        left_min = std::min(left_min, v(j));
    }
    double right_min = v(i);
    for (int j = i + 1; j < v.size(); ++j) {
        if (v(j) > v(i)) break;
        right_min = std::min(right_min, v(j));
    }
    return v(i) - std::max(left_min, right_min);
}

// Crossing of level h on the walk away from i; linear interpolation between
// the bracketing samples, clamped to the data range.
double cross_left(const std::vector<double>& f, const Eigen::VectorXd& v, int i, double h) {
    for (int j = i - 1; j >= 0; --j) {
        if (v(j) <= h) {
            double lam = (v(j + 1) - h) / (v(j + 1) - v(j));
            return f[j + 1] + lam * (f[j] - f[j + 1]);
        }
        if (v(j) > v(i)) break;
    }
    return f.front();
}

double cross_right(const std::vector<double>& f, const Eigen::VectorXd& v, int i, double h) {
    for (int j = i + 1; j < v.size(); ++j) {
        if (v(j) <= h) {
            double lam = (v(j - 1) - h) / (v(j - 1) - v(j));
            return f[j - 1] + lam * (f[j] - f[j - 1]);
        }
        if (v(j) > v(i)) break;
    }
    return f.back();
}

}  // namespace

std::vector<Peak> find_peaks(const std::vector<double>& frequencies,
                             const Eigen::VectorXd& values, double prominence_threshold) {
    if (static_cast<int>(frequencies.size()) != values.size())
        throw InvalidParams("frequency axis and value column differ in length");
    if (!(prominence_threshold > 0.0)) throw InvalidParams("prominence threshold must be positive");

    std::vector<Peak> out;
    int n = values.size();
    for (int i = 1; i + 1 < n; ++i) {
        // Strict rise on the left, non-strict on the right: the first sample
        // of a plateau wins, i.e. ties break toward lower frequency.
        if (!(values(i) > values(i - 1) && values(i) >= values(i + 1))) continue;
        double prom = prominence(values, i);
        if (prom < prominence_threshold) continue;

        Peak p;
        p.height = values(i);
        // Refine strict maxima only: a plateau keeps its lower-frequency edge.
        double denom = values(i - 1) - 2.0 * values(i) + values(i + 1);
        double shift = 0.0;
        if (denom < 0.0 && values(i) > values(i + 1))
            shift = 0.5 * (values(i - 1) - values(i + 1)) / denom;
        shift = std::clamp(shift, -0.5, 0.5);
        double step = 0.5 * (frequencies[i + 1] - frequencies[i - 1]);
        p.frequency = frequencies[i] + shift * step;

        double half = values(i) - 0.5 * prom;
        p.width = cross_right(frequencies, values, i, half) -
                  cross_left(frequencies, values, i, half);
        out.push_back(p);
    }
    return out;
}

}  // namespace starksense::peaks
