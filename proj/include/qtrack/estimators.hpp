#pragma once

#include <vector>

#include "qtrack/nn.hpp"
#include "qtrack/photonics.hpp"
#include "qtrack/receiver.hpp"

namespace qtrack {

struct RawEstimate {
    double intensity = 0.0;
    double phase = 0.0;
    bool degenerate = false;  // set when the input carried no data
};

// Discrete posterior support for the grid estimator. Axes are inclusive
// uniform grids; the prior over them is flat.
struct BayesGrid {
    std::vector<double> phase_axis;
    std::vector<double> intensity_axis;

    static BayesGrid make(double phase_min, double phase_max, int phase_points,
                          double intensity_min, double intensity_max, int intensity_points);
    static BayesGrid standard();  // 100 x 100, phase +-0.75, intensity 0.05..25
    void validate() const;
};

// Posterior mean of (intensity, phase offset) given the detection histogram
// and the LO intensity the data was taken with. adaptive_steps is the number
// of detection windows each pulse was split across, which sets the per-window
// mean photon number. An empty histogram returns the prior mean with the
// degenerate flag set.
RawEstimate bayes_estimate(const DetectionMatrix& matrix, double lo_intensity,
                           const BayesGrid& grid, const PhysicsConfig& physics,
                           int adaptive_steps);

// Network estimate from the same inputs: flattened histogram plus LO
// intensity. The intensity output is clamped to the grid floor so downstream
// consumers never see a nonphysical LO request.
RawEstimate nn_estimate(const MLPModel& model, const DetectionMatrix& matrix,
                        double lo_intensity);

constexpr double kMinLOIntensity = 0.05;

}  // namespace qtrack
