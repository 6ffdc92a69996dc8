#include "qtrack/tracking.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "qtrack/estimators.hpp"
#include "qtrack/rng.hpp"

namespace qtrack {

namespace {

double wrap_phase(double phase) {
    // into (-pi, pi]
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double w = std::fmod(phase + std::numbers::pi, two_pi);
    if (w <= 0.0) w += two_pi;
    return w - std::numbers::pi;
}

// Realization seeds depend only on (master seed, realization index): every
// estimator sees the same channel noise, while the measurement streams branch
// per estimator so detector shots stay independent.
constexpr std::uint64_t kNoiseTag = 0x524541Cull;
constexpr std::uint64_t kMeasureTag = 0x4d454153ull;

}  // namespace

void TrackerConfig::validate() const {
    receiver.validate();
    phase_noise.validate();
    amplitude_noise.validate(phase_noise.symbol_period_s);
    if (n_per_estimate < 1) throw std::invalid_argument("n_per_estimate must be >= 1");
}

double TrackingResult::error_rate() const {
    if (error_flags.empty()) return 0.0;
    std::int64_t errors = 0;
    for (std::uint8_t f : error_flags) errors += f;
    return double(errors) / double(error_flags.size());
}

TrackingResult run_tracking(const TrackerConfig& cfg, const NoiseRealization& noise,
                            std::int64_t symbols, const EstimatorContext& estimator,
                            const CalibrationTable* calibration, std::mt19937_64& rng) {
    cfg.validate();
    estimator.validate();
    if (symbols < 1) throw std::invalid_argument("tracking needs at least one symbol");
    if (std::int64_t(noise.phases.size()) < symbols)
        throw std::invalid_argument("noise realization is shorter than the symbol count");

    const bool tracked =
        estimator.kind == EstimatorKind::NN || estimator.kind == EstimatorKind::Bayes;
    if (tracked && calibration == nullptr)
        throw std::invalid_argument("tracked estimators need a calibration table");
    if (estimator.kind == EstimatorKind::NN && estimator.model == nullptr)
        throw std::invalid_argument("the nn estimator needs a model");
    if (estimator.kind == EstimatorKind::Bayes && estimator.grid == nullptr)
        throw std::invalid_argument("the bayes estimator needs a posterior grid");

    const int n_per_estimate = cfg.n_per_estimate;
    const double mean_intensity = cfg.amplitude_noise.mean_intensity;
    const double step_variance = cfg.phase_noise.step_variance();
    const double dt = cfg.phase_noise.symbol_period_s;

    double measurement_phase_variance = 0.0;
    double measurement_intensity_variance = 0.0;
    if (tracked) {
        measurement_phase_variance =
            calibration->phase_variance(mean_intensity, double(n_per_estimate));
        measurement_intensity_variance =
            calibration->intensity_variance(mean_intensity, double(n_per_estimate));
    }

    TrackingResult result;
    result.error_flags.resize(size_t(symbols), 0);

    KalmanState state;
    state.lo_intensity = mean_intensity;
    double phase_correction = 0.0;

    DetectionMatrix matrix(cfg.receiver.alphabet, cfg.receiver.physics.pnr);
    ReceiverModel model = ReceiverModel::build(state.lo_intensity, cfg.receiver);
    std::uniform_int_distribution<int> symbol_draw(0, cfg.receiver.alphabet - 1);
    int in_period = 0;

    for (std::int64_t tau = 0; tau < symbols; ++tau) {
        const double true_intensity = noise.intensities[size_t(tau)];
        const double true_phase = noise.phases[size_t(tau)];

        if (estimator.kind == EstimatorKind::Perfect) {
            // Complete knowledge baseline: the LO follows the channel exactly.
            if (model.lo_intensity != true_intensity)
                model = ReceiverModel::build(true_intensity, cfg.receiver);
            state.lo_intensity = true_intensity;
            phase_correction = true_phase;
        }

        const SymbolInstance symbol{symbol_draw(rng), true_intensity, true_phase};
        const LOState lo{state.lo_intensity, phase_correction};
        const DiscriminationResult res = discriminate(symbol, lo, cfg.receiver, model, rng);
        result.error_flags[size_t(tau)] = res.correct ? 0 : 1;

        if (!tracked) continue;

        accumulate(matrix, res);
        if (++in_period < n_per_estimate) continue;

        const RawEstimate raw =
            estimator.kind == EstimatorKind::NN
                ? nn_estimate(*estimator.model, matrix, state.lo_intensity)
                : bayes_estimate(matrix, state.lo_intensity, *estimator.grid,
                                 estimator.physics, cfg.receiver.adaptive_steps);
        const std::int64_t matrix_total = matrix.total();
        matrix.reset();
        in_period = 0;

        const Prediction phase_pred = predict_phase(state, n_per_estimate, step_variance);
        const Update phase_upd =
            update_phase(raw.phase, phase_pred, measurement_phase_variance);
        const Prediction intensity_pred =
            predict_intensity(state, n_per_estimate, cfg.amplitude_noise, dt);
        const Update intensity_upd =
            update_intensity(raw.intensity, intensity_pred, measurement_intensity_variance);

        state.phase_variance = phase_upd.variance;
        state.intensity_variance = intensity_upd.variance;
        phase_correction = wrap_phase(phase_correction + phase_upd.estimate);
        state.lo_intensity = intensity_upd.estimate;
        model = ReceiverModel::build(state.lo_intensity, cfg.receiver);

        PeriodRecord record;
        record.symbol_index = tau;
        record.raw_phase = raw.phase;
        record.raw_intensity = raw.intensity;
        record.filtered_phase = phase_upd.estimate;
        record.filtered_intensity = intensity_upd.estimate;
        record.phase_correction = phase_correction;
        record.lo_intensity = state.lo_intensity;
        record.matrix_total = matrix_total;
        result.periods.push_back(record);
    }
    return result;
}

double heterodyne_baseline(const NoiseRealization& noise, double mean_intensity) {
    if (noise.intensities.empty()) return heterodyne_qnl_error(mean_intensity);
    double sum = 0.0;
    for (double intensity : noise.intensities) sum += heterodyne_qnl_error(intensity);
    return sum / double(noise.intensities.size());
}

void write_trajectory_csv(const TrackingResult& result, const NoiseRealization& noise,
                          std::int64_t symbols, std::ostream& out) {
    out << "tau,true_phase,true_intensity,phase_correction,lo_intensity,"
           "raw_phase,raw_intensity,filtered_phase,filtered_intensity,error\n";
    size_t next_period = 0;
    PeriodRecord current;  // zeros before the first estimate
    char line[256];
    for (std::int64_t tau = 0; tau < symbols; ++tau) {
        if (next_period < result.periods.size() &&
            result.periods[next_period].symbol_index == tau) {
            current = result.periods[next_period];
            ++next_period;
        }
        std::snprintf(line, sizeof line, "%lld,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%d\n",
                      static_cast<long long>(tau), noise.phases[size_t(tau)],
                      noise.intensities[size_t(tau)], current.phase_correction,
                      current.lo_intensity, current.raw_phase, current.raw_intensity,
                      current.filtered_phase, current.filtered_intensity,
                      int(result.error_flags[size_t(tau)]));
        out << line;
    }
}

double EnsembleResult::mean_error() const {
    if (realization_error.empty()) return 0.0;
    double sum = 0.0;
    for (double e : realization_error) sum += e;
    return sum / double(realization_error.size());
}

double EnsembleResult::std_error() const {
    const size_t n = realization_error.size();
    if (n < 2) return 0.0;
    const double mean = mean_error();
    double var = 0.0;
    for (double e : realization_error) var += (e - mean) * (e - mean);
    var /= double(n - 1);
    return std::sqrt(var / double(n));
}

namespace {

double one_realization_error(const TrackerConfig& cfg, std::int64_t symbols,
                             const EstimatorContext& estimator,
                             const CalibrationTable* calibration, std::uint64_t seed,
                             std::int64_t index) {
    const NoiseRealization noise =
        generate_realization(cfg.phase_noise, cfg.amplitude_noise, symbols,
                             splitmix_combine(seed, kNoiseTag, std::uint64_t(index)));
    std::mt19937_64 rng =
        make_stream(seed, kMeasureTag, std::uint64_t(index), std::uint64_t(estimator.kind));
    return run_tracking(cfg, noise, symbols, estimator, calibration, rng).error_rate();
}

}  // namespace

EnsembleResult run_tracking_ensemble(const TrackerConfig& cfg, std::int64_t realizations,
                                     std::int64_t symbols, const EstimatorContext& estimator,
                                     const CalibrationTable* calibration, std::uint64_t seed) {
    if (realizations < 1) throw std::invalid_argument("ensemble needs at least one realization");
    EnsembleResult out;
    out.realization_error.resize(size_t(realizations), 0.0);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < realizations; ++i)
        out.realization_error[size_t(i)] =
            one_realization_error(cfg, symbols, estimator, calibration, seed, i);
    return out;
}

EnsembleResult run_tracking_ensemble_serial(const TrackerConfig& cfg, std::int64_t realizations,
                                            std::int64_t symbols,
                                            const EstimatorContext& estimator,
                                            const CalibrationTable* calibration,
                                            std::uint64_t seed) {
    if (realizations < 1) throw std::invalid_argument("ensemble needs at least one realization");
    EnsembleResult out;
    out.realization_error.resize(size_t(realizations), 0.0);
    for (std::int64_t i = 0; i < realizations; ++i)
        out.realization_error[size_t(i)] =
            one_realization_error(cfg, symbols, estimator, calibration, seed, i);
    return out;
}

EnsembleResult heterodyne_baseline_ensemble(const TrackerConfig& cfg, std::int64_t realizations,
                                            std::int64_t symbols, std::uint64_t seed) {
    if (realizations < 1) throw std::invalid_argument("ensemble needs at least one realization");
    EnsembleResult out;
    out.realization_error.resize(size_t(realizations), 0.0);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < realizations; ++i) {
        const NoiseRealization noise =
            generate_realization(cfg.phase_noise, cfg.amplitude_noise, symbols,
                                 splitmix_combine(seed, kNoiseTag, std::uint64_t(i)));
        out.realization_error[size_t(i)] =
            heterodyne_baseline(noise, cfg.amplitude_noise.mean_intensity);
    }
    return out;
}

}  // namespace qtrack
