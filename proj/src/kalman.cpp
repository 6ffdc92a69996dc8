#include "qtrack/kalman.hpp"

#include <algorithm>
#include <stdexcept>

#include "qtrack/estimators.hpp"

namespace qtrack {

Prediction predict_phase(const KalmanState& state, int n, double step_variance) {
    if (n < 1) throw std::invalid_argument("prediction horizon must be >= 1 symbols");
    if (!(step_variance >= 0.0)) throw std::invalid_argument("step variance must be >= 0");
    return {0.0, state.phase_variance + double(n) * step_variance};
}

Prediction predict_intensity(const KalmanState& state, int n, const OUParams& params,
                             double symbol_period_s) {
    if (n < 1) throw std::invalid_argument("prediction horizon must be >= 1 symbols");
    params.validate(symbol_period_s);
    const double step = params.bandwidth_hz * symbol_period_s;  // gamma * dt, in (0, 1)
    const double decay = 1.0 - step;
    // Iterate the per-symbol recursion rather than its closed form; n is a few
    // hundred at most and the literal sum keeps the variance expression exact.
    double decay_n = 1.0;
    double drift_sum = 0.0;     // sum of decay^k, k < n
    double variance_sum = 0.0;  // sum of decay^(2k), k < n
    for (int k = 0; k < n; ++k) {
        drift_sum += decay_n;
        variance_sum += decay_n * decay_n;
        decay_n *= decay;
    }
    Prediction out;
    out.mean = decay_n * state.lo_intensity +
               params.bandwidth_hz * params.mean_intensity * symbol_period_s * drift_sum;
    out.variance = decay_n * decay_n * state.intensity_variance +
                   params.diffusion * params.diffusion * symbol_period_s * variance_sum;
    return out;
}

namespace {

Update fuse(double raw_estimate, const Prediction& prediction, double measurement_variance) {
    if (!(measurement_variance > 0.0))
        throw std::invalid_argument("measurement variance must be > 0");
    Update out;
    out.gain = prediction.variance / (prediction.variance + measurement_variance);
    out.estimate = out.gain * raw_estimate + (1.0 - out.gain) * prediction.mean;
    out.variance = (1.0 - out.gain) * prediction.variance;
    return out;
}

}  // namespace

Update update_phase(double raw_estimate, const Prediction& prediction,
                    double measurement_variance) {
    return fuse(raw_estimate, prediction, measurement_variance);
}

Update update_intensity(double raw_estimate, const Prediction& prediction,
                        double measurement_variance) {
    Update out = fuse(raw_estimate, prediction, measurement_variance);
    out.estimate = std::max(kMinLOIntensity, out.estimate);
    return out;
}

}  // namespace qtrack
