#pragma once

#include "qtrack/channel_noise.hpp"

namespace qtrack {

// Scalar filter state carried between estimation periods: posterior variances
// of the two tracked quantities plus the corrections currently applied.
struct KalmanState {
    double phase_variance = 0.0;
    double intensity_variance = 0.0;
    double phase_correction = 0.0;  // accumulated LO phase offset
    double lo_intensity = 0.0;      // LO intensity used during the last period
};

struct Prediction {
    double mean = 0.0;
    double variance = 0.0;
};

struct Update {
    double estimate = 0.0;
    double variance = 0.0;
    double gain = 0.0;
};

// Prediction across one estimation period of n symbols. The tracked phase is
// the residual after correction, so its predicted mean is always zero while
// the variance grows with the random walk.
Prediction predict_phase(const KalmanState& state, int n, double step_variance);

// Mean reversion pulls the predicted intensity toward the process mean;
// diffusion adds variance that saturates at the stationary value.
Prediction predict_intensity(const KalmanState& state, int n, const OUParams& params,
                             double symbol_period_s);

Update update_phase(double raw_estimate, const Prediction& prediction,
                    double measurement_variance);

// Intensity update additionally clamps the fused estimate to the LO floor.
Update update_intensity(double raw_estimate, const Prediction& prediction,
                        double measurement_variance);

}  // namespace qtrack
