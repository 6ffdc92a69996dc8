#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "qtrack/calibration.hpp"
#include "qtrack/channel_noise.hpp"
#include "qtrack/harness.hpp"
#include "qtrack/montecarlo.hpp"
#include "qtrack/nn.hpp"
#include "qtrack/nn_train.hpp"
#include "qtrack/parallel.hpp"
#include "qtrack/photonics.hpp"
#include "qtrack/rng.hpp"
#include "qtrack/tracking.hpp"

namespace {

struct CommonArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("config", args.config, "JSON config file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", args.seed, "override the seed from the config");
    cmd->add_option("--out", args.out, "override the output path from the config");
    cmd->add_option("--threads", args.threads, "cap the number of worker threads");
}

qtrack::HarnessConfig load(const CommonArgs& args) {
    if (args.threads > 0) qtrack::set_threads(args.threads);
    return qtrack::load_config(args.config);
}

int run_train(const CommonArgs& args) {
    qtrack::HarnessConfig cfg = load(args);
    if (!cfg.train) throw std::invalid_argument("config has no 'train' section");
    auto section = *cfg.train;
    if (args.seed) section.seed = *args.seed;
    if (args.out) section.out_path = *args.out;

    std::cout << "generating " << section.train.dataset_size << " samples\n";
    auto dataset = qtrack::generate_dataset(cfg.physics, cfg.receiver, section.train,
                                            section.train.dataset_size, section.seed);
    std::cout << "training for " << section.train.epochs << " epochs\n";
    qtrack::TrainResult result = qtrack::train(dataset, section.train, section.seed);
    qtrack::save_model(result.model, section.out_path);
    const size_t n_epochs = result.train_loss.size();
    const size_t stride = n_epochs > 20 ? n_epochs / 20 : 1;
    for (size_t e = 0; e < n_epochs; e += stride)
        std::cout << "epoch " << e + 1 << ": train loss " << result.train_loss[e]
                  << ", validation loss " << result.val_loss[e] << '\n';
    std::cout << "final train loss " << result.train_loss.back() << ", validation loss "
              << result.val_loss.back() << "\nmodel written to " << section.out_path << '\n';
    return 0;
}

int run_calibrate(const CommonArgs& args) {
    qtrack::HarnessConfig cfg = load(args);
    if (!cfg.calibrate) throw std::invalid_argument("config has no 'calibrate' section");
    auto section = *cfg.calibrate;
    if (args.seed) section.seed = *args.seed;
    if (args.out) section.out_path = *args.out;

    qtrack::MLPModel model;
    const qtrack::BayesGrid grid = qtrack::BayesGrid::standard();
    std::vector<qtrack::CalibrationTable> tables;
    for (std::size_t i = 0; i < section.estimators.size(); ++i) {
        const std::string& name = section.estimators[i];
        qtrack::EstimatorContext est;
        est.kind = qtrack::estimator_from_name(name);
        est.physics = cfg.physics;
        if (est.kind == qtrack::EstimatorKind::NN) {
            if (section.model_path.empty())
                throw std::invalid_argument("calibrating 'nn' needs a model path");
            model = qtrack::load_model(section.model_path);
            est.model = &model;
        } else if (est.kind == qtrack::EstimatorKind::Bayes) {
            est.grid = &grid;
        }
        std::cout << "calibrating " << name << " over " << section.anchors.size()
                  << " anchors x " << section.n_list.size() << " periods, " << section.trials
                  << " trials each\n";
        tables.push_back(qtrack::calibrate_variance(
            est, cfg.receiver, section.anchors, section.n_list, section.trials,
            qtrack::splitmix_combine(section.seed, 0x43414c42ull, i)));
    }
    qtrack::save_calibration(tables, section.out_path);
    std::cout << "calibration written to " << section.out_path << '\n';
    return 0;
}

int run_discriminate(const CommonArgs& args) {
    qtrack::HarnessConfig cfg = load(args);
    if (!cfg.discriminate) throw std::invalid_argument("config has no 'discriminate' section");
    auto section = *cfg.discriminate;
    if (args.seed) section.seed = *args.seed;
    if (args.out) section.out_path = *args.out;

    qtrack::ErrorRateResult result = qtrack::discrimination_error_rate(
        cfg.receiver, section.intensity, section.lo_intensity, section.phase_offset,
        section.trials, section.seed);
    const double qnl = qtrack::heterodyne_qnl_error(section.intensity);
    char line[256];
    std::snprintf(line, sizeof line,
                  "error_rate %.6g (std error %.3g) over %lld trials; heterodyne limit %.6g\n",
                  result.rate(), result.std_error(), static_cast<long long>(result.trials), qnl);
    std::cout << line;
    if (!section.out_path.empty()) {
        std::ofstream out(section.out_path);
        if (!out) throw std::runtime_error("cannot open " + section.out_path);
        out << "intensity,lo_intensity,phase_offset,trials,errors,error_rate,std_error,"
               "heterodyne_limit\n";
        std::snprintf(line, sizeof line, "%.10g,%.10g,%.10g,%lld,%lld,%.12g,%.12g,%.12g\n",
                      section.intensity, section.lo_intensity, section.phase_offset,
                      static_cast<long long>(result.trials),
                      static_cast<long long>(result.errors), result.rate(), result.std_error(),
                      qnl);
        out << line;
    }
    return 0;
}

int run_track(const CommonArgs& args) {
    qtrack::HarnessConfig cfg = load(args);
    if (!cfg.track) throw std::invalid_argument("config has no 'track' section");
    auto section = *cfg.track;
    if (args.seed) section.seed = *args.seed;
    if (args.out) section.out_path = *args.out;

    qtrack::TrackerConfig tracker;
    tracker.receiver = cfg.receiver;
    tracker.phase_noise.bandwidth_hz = section.phase_bw_hz;
    tracker.phase_noise.symbol_period_s = cfg.symbol_period_s;
    tracker.amplitude_noise = qtrack::OUParams::from_stationary_variance(
        section.amp_bw_hz, section.sigma_inf_sq, section.intensity);
    tracker.n_per_estimate = section.n_per_estimate;
    tracker.validate();

    qtrack::MLPModel model;
    const qtrack::BayesGrid grid = qtrack::BayesGrid::standard();
    std::vector<qtrack::CalibrationTable> tables;
    qtrack::EstimatorContext est;
    est.kind = qtrack::estimator_from_name(section.estimator);
    est.physics = cfg.physics;
    const qtrack::CalibrationTable* calibration = nullptr;
    if (est.kind == qtrack::EstimatorKind::NN) {
        if (section.model_path.empty())
            throw std::invalid_argument("tracking with 'nn' needs a model path");
        model = qtrack::load_model(section.model_path);
        est.model = &model;
    }
    if (est.kind == qtrack::EstimatorKind::Bayes) est.grid = &grid;
    if (est.kind == qtrack::EstimatorKind::NN || est.kind == qtrack::EstimatorKind::Bayes) {
        if (section.calibration_path.empty())
            throw std::invalid_argument("tracking with a raw estimator needs a calibration path");
        tables = qtrack::load_calibration(section.calibration_path);
        calibration = &qtrack::find_calibration(tables, section.estimator);
    }

    qtrack::NoiseRealization noise =
        qtrack::generate_realization(tracker.phase_noise, tracker.amplitude_noise,
                                     section.symbols,
                                     qtrack::splitmix_combine(section.seed, 0x54524b4eull));
    std::mt19937_64 rng = qtrack::make_stream(section.seed, 0x54524b4dull);
    qtrack::TrackingResult result =
        qtrack::run_tracking(tracker, noise, section.symbols, est, calibration, rng);

    std::ofstream out(section.out_path);
    if (!out) throw std::runtime_error("cannot open " + section.out_path);
    qtrack::write_trajectory_csv(result, noise, section.symbols, out);
    std::cout << "error rate " << result.error_rate() << " over " << section.symbols
              << " symbols (" << section.estimator << "); trajectory written to "
              << section.out_path << '\n';
    return 0;
}

int run_sweep_cmd(const CommonArgs& args) {
    qtrack::HarnessConfig cfg = load(args);
    if (!cfg.sweep) throw std::invalid_argument("config has no 'sweep' section");
    qtrack::SweepConfig section = *cfg.sweep;
    if (args.seed) section.seed = *args.seed;
    if (args.out) section.out_path = *args.out;

    auto rows =
        qtrack::run_sweep(section, cfg.physics, cfg.receiver, cfg.symbol_period_s, &std::cout);
    if (section.out_path.empty())
        qtrack::write_result_rows(rows, std::cout, true);
    else
        std::cout << rows.size() << " rows written to " << section.out_path << '\n';
    return 0;
}

int run_baseline(const CommonArgs& args) {
    qtrack::HarnessConfig cfg = load(args);
    if (!cfg.baseline) throw std::invalid_argument("config has no 'baseline' section");
    auto section = *cfg.baseline;
    if (args.seed) section.seed = *args.seed;
    if (args.out) section.out_path = *args.out;

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!section.out_path.empty()) {
        file.open(section.out_path);
        if (!file) throw std::runtime_error("cannot open " + section.out_path);
        out = &file;
    }
    *out << "mean_intensity,closed_form_error,monte_carlo_error,trials\n";
    for (std::size_t i = 0; i < section.intensities.size(); ++i) {
        const double n0 = section.intensities[i];
        const double closed = qtrack::heterodyne_qnl_error(n0);
        const double mc = qtrack::heterodyne_mc_oracle(
            n0, section.oracle_trials, qtrack::splitmix_combine(section.seed, 0x42415345ull, i));
        char line[160];
        std::snprintf(line, sizeof line, "%.10g,%.12g,%.12g,%lld\n", n0, closed, mc,
                      static_cast<long long>(section.oracle_trials));
        *out << line;
    }
    if (!section.out_path.empty())
        std::cout << "baseline written to " << section.out_path << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulation and estimation toolkit for an adaptive photon-counting receiver"};
    app.require_subcommand(1);

    CommonArgs train_args, calibrate_args, discriminate_args, track_args, sweep_args,
        baseline_args;
    CLI::App* train = app.add_subcommand("train", "train the phase/intensity estimator network");
    add_common(train, train_args);
    CLI::App* calibrate =
        app.add_subcommand("calibrate", "measure estimator variance versus estimation period");
    add_common(calibrate, calibrate_args);
    CLI::App* discriminate =
        app.add_subcommand("discriminate", "symbol error rate at fixed channel conditions");
    add_common(discriminate, discriminate_args);
    CLI::App* track =
        app.add_subcommand("track", "closed-loop tracking over one noise realization");
    add_common(track, track_args);
    CLI::App* sweep = app.add_subcommand("sweep", "error-rate sweep over a parameter grid");
    add_common(sweep, sweep_args);
    CLI::App* baseline =
        app.add_subcommand("baseline", "heterodyne reference error rates");
    add_common(baseline, baseline_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return run_train(train_args);
        if (calibrate->parsed()) return run_calibrate(calibrate_args);
        if (discriminate->parsed()) return run_discriminate(discriminate_args);
        if (track->parsed()) return run_track(track_args);
        if (sweep->parsed()) return run_sweep_cmd(sweep_args);
        if (baseline->parsed()) return run_baseline(baseline_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
