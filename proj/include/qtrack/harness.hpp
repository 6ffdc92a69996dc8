#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qtrack/calibration.hpp"
#include "qtrack/channel_noise.hpp"
#include "qtrack/nn_train.hpp"
#include "qtrack/receiver.hpp"
#include "qtrack/tracking.hpp"

namespace qtrack {

enum class ExperimentKind {
    IntensityScan,   // error vs mean photon number at fixed noise
    SingleRun,       // one parameter point, several estimators
    PhaseBwScan,     // error vs phase-noise bandwidth
    AmplitudeBwScan, // error vs intensity-noise reversion rate
    StationaryScan,  // error vs stationary intensity variance
    PeriodScan,      // error vs estimation period
};

const char* experiment_name(ExperimentKind kind);
ExperimentKind experiment_from_name(const std::string& name);

struct SweepConfig {
    ExperimentKind experiment = ExperimentKind::SingleRun;
    std::vector<double> intensities{5.0};
    std::vector<double> phase_bw_hz{0.0};
    std::vector<double> amp_bw_hz{0.0};
    std::vector<double> sigma_inf_sq{0.0};
    std::vector<int> n_per_estimate{10};
    std::int64_t realizations = 100;
    std::int64_t symbols_per_realization = 20000;
    std::uint64_t seed = 1;
    std::vector<std::string> estimators{"perfect", "none", "heterodyne"};
    std::string model_path;
    std::string calibration_path;
    std::string out_path;

    void validate() const;
};

struct ResultRow {
    std::string experiment;
    std::string estimator;
    double mean_intensity = 0.0;
    double phase_bw_hz = 0.0;
    double amp_bw_hz = 0.0;
    double sigma_inf_sq = 0.0;
    int n_per_estimate = 0;
    std::int64_t realizations = 0;
    std::int64_t symbols = 0;
    double mean_error = 0.0;
    double std_error = 0.0;
};

// Settings shared by all subcommands, mirroring one config file.
struct HarnessConfig {
    PhysicsConfig physics;
    ReceiverConfig receiver;  // physics duplicated inside for convenience
    double symbol_period_s = 1e-8;

    std::optional<SweepConfig> sweep;
    struct TrainSection {
        TrainConfig train;
        std::uint64_t seed = 7;
        std::string out_path = "model.json";
    };
    std::optional<TrainSection> train;
    struct CalibrateSection {
        std::vector<std::string> estimators{"nn", "bayes"};
        std::string model_path;
        std::vector<double> anchors{2.0, 5.0, 10.0};
        std::vector<int> n_list{2, 3, 5, 10, 20, 50, 100, 200};
        std::int64_t trials = 10000;
        std::uint64_t seed = 11;
        std::string out_path = "calibration.json";
    };
    std::optional<CalibrateSection> calibrate;
    struct DiscriminateSection {
        double intensity = 5.0;
        double lo_intensity = 5.0;
        double phase_offset = 0.0;
        std::int64_t trials = 1000000;
        std::uint64_t seed = 3;
        std::string out_path;
    };
    std::optional<DiscriminateSection> discriminate;
    struct TrackSection {
        double intensity = 5.0;
        double phase_bw_hz = 2000.0;
        double amp_bw_hz = 25000.0;
        double sigma_inf_sq = 1.5;
        int n_per_estimate = 10;
        std::int64_t symbols = 20000;
        std::string estimator = "nn";
        std::string model_path;
        std::string calibration_path;
        std::uint64_t seed = 5;
        std::string out_path = "trajectory.csv";
    };
    std::optional<TrackSection> track;
    struct BaselineSection {
        std::vector<double> intensities{1.0, 2.0, 5.0, 10.0};
        std::int64_t oracle_trials = 1000000;
        std::uint64_t seed = 9;
        std::string out_path;
    };
    std::optional<BaselineSection> baseline;
};

// Parses the JSON config. Unknown keys anywhere are an error naming the key,
// so typos cannot silently fall back to defaults.
HarnessConfig load_config(const std::string& path);

// Runs every (grid point x estimator) cell and returns one row per cell.
// When cfg.out_path is set, rows are appended to the file as each grid point
// completes, so partial sweeps leave usable output behind.
std::vector<ResultRow> run_sweep(const SweepConfig& cfg, const PhysicsConfig& physics,
                                 const ReceiverConfig& receiver, double symbol_period_s,
                                 std::ostream* progress = nullptr);

// CSV with a fixed column order. Appends without a header when the file
// already has content.
void emit_results(const std::vector<ResultRow>& rows, const std::string& path);
void write_result_rows(const std::vector<ResultRow>& rows, std::ostream& out,
                       bool with_header);

}  // namespace qtrack
