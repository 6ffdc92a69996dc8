#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "qtrack/calibration.hpp"
#include "qtrack/channel_noise.hpp"
#include "qtrack/kalman.hpp"
#include "qtrack/receiver.hpp"

namespace qtrack {

struct TrackerConfig {
    ReceiverConfig receiver;
    PhaseNoiseParams phase_noise;
    OUParams amplitude_noise;
    int n_per_estimate = 10;

    void validate() const;
};

// Filter output at one estimation boundary, kept for diagnostics and CSV.
struct PeriodRecord {
    std::int64_t symbol_index = 0;  // index of the last symbol in the period
    double raw_phase = 0.0;
    double raw_intensity = 0.0;
    double filtered_phase = 0.0;
    double filtered_intensity = 0.0;
    double phase_correction = 0.0;  // correction in force after the update
    double lo_intensity = 0.0;      // LO intensity in force after the update
    std::int64_t matrix_total = 0;  // detections folded into this estimate
};

struct TrackingResult {
    std::vector<std::uint8_t> error_flags;  // one per symbol
    std::vector<PeriodRecord> periods;
    double error_rate() const;
};

// Closed loop over one noise realization: discriminate symbol by symbol,
// histogram the outcomes, estimate every n_per_estimate symbols, filter, and
// fold the filtered values back into the LO. The calibration table supplies
// the measurement variances; perfect/none skip estimation entirely.
TrackingResult run_tracking(const TrackerConfig& cfg, const NoiseRealization& noise,
                            std::int64_t symbols, const EstimatorContext& estimator,
                            const CalibrationTable* calibration, std::mt19937_64& rng);

// Error probability of the heterodyne reference receiver over the same
// intensity trajectory, assuming its phase tracking is perfect.
double heterodyne_baseline(const NoiseRealization& noise, double mean_intensity);

// Per-symbol trajectory dump. Estimate columns repeat the latest filter
// output and read zero until the first estimate lands.
void write_trajectory_csv(const TrackingResult& result, const NoiseRealization& noise,
                          std::int64_t symbols, std::ostream& out);

// Ensemble over independently seeded realizations. The parallel and serial
// versions produce identical per-realization error rates.
struct EnsembleResult {
    std::vector<double> realization_error;
    double mean_error() const;
    double std_error() const;
};

EnsembleResult run_tracking_ensemble(const TrackerConfig& cfg, std::int64_t realizations,
                                     std::int64_t symbols, const EstimatorContext& estimator,
                                     const CalibrationTable* calibration, std::uint64_t seed);
EnsembleResult run_tracking_ensemble_serial(const TrackerConfig& cfg, std::int64_t realizations,
                                            std::int64_t symbols,
                                            const EstimatorContext& estimator,
                                            const CalibrationTable* calibration,
                                            std::uint64_t seed);

EnsembleResult heterodyne_baseline_ensemble(const TrackerConfig& cfg, std::int64_t realizations,
                                            std::int64_t symbols, std::uint64_t seed);

}  // namespace qtrack
