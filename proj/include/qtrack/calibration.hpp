#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qtrack/estimators.hpp"
#include "qtrack/receiver.hpp"

namespace qtrack {

// Which raw estimator produces the measurement fed to the filter, and the
// resources it needs. `perfect` and `none` do not estimate at all; they exist
// as tracking baselines.
enum class EstimatorKind { NN, Bayes, Perfect, None };

const char* estimator_name(EstimatorKind kind);
EstimatorKind estimator_from_name(const std::string& name);

struct EstimatorContext {
    EstimatorKind kind = EstimatorKind::None;
    const MLPModel* model = nullptr;   // required for NN
    const BayesGrid* grid = nullptr;   // required for Bayes
    PhysicsConfig physics;

    void validate() const;
};

struct CalibrationPoint {
    int n_per_estimate = 0;
    double phase_variance = 0.0;
    double intensity_variance = 0.0;
    double phase_mean = 0.0;      // bias diagnostics, not used by the filter
    double intensity_mean = 0.0;
    std::int64_t trials = 0;
};

// sigma^2(n) = coefficient * n^exponent, fitted in log-log space.
struct PowerLawFit {
    double coefficient = 0.0;
    double exponent = 0.0;
    double operator()(double n) const;
};

struct AnchorCalibration {
    double mean_intensity = 0.0;
    PowerLawFit phase_fit;
    PowerLawFit intensity_fit;
    std::vector<CalibrationPoint> points;
};

// Measurement-variance model per estimator: power laws in the estimation
// period at a few anchor intensities, interpolated linearly between anchors.
struct CalibrationTable {
    std::string estimator;
    std::vector<AnchorCalibration> anchors;  // sorted by mean_intensity

    double phase_variance(double mean_intensity, double n) const;
    double intensity_variance(double mean_intensity, double n) const;
    void validate() const;
};

// Empirical variance of raw estimates at fixed matched intensities and zero
// phase, over `trials` repetitions per (anchor, n) pair. Trials run on
// independent derived streams and may execute in parallel.
CalibrationTable calibrate_variance(const EstimatorContext& estimator,
                                    const ReceiverConfig& receiver,
                                    const std::vector<double>& anchors,
                                    const std::vector<int>& n_list, std::int64_t trials,
                                    std::uint64_t seed);

// One file can hold the tables for several estimators.
void save_calibration(const std::vector<CalibrationTable>& tables, const std::string& path);
std::vector<CalibrationTable> load_calibration(const std::string& path);
const CalibrationTable& find_calibration(const std::vector<CalibrationTable>& tables,
                                         const std::string& estimator);

}  // namespace qtrack
