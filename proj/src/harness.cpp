#include "qtrack/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"

#include "qtrack/nn.hpp"
#include "qtrack/rng.hpp"

namespace qtrack {

const char* experiment_name(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::IntensityScan: return "intensity_scan";
        case ExperimentKind::SingleRun: return "single_run";
        case ExperimentKind::PhaseBwScan: return "phase_bw_sweep";
        case ExperimentKind::AmplitudeBwScan: return "amp_bw_sweep";
        case ExperimentKind::StationaryScan: return "sigma_inf_sweep";
        case ExperimentKind::PeriodScan: return "n_tradeoff";
    }
    throw std::logic_error("unknown experiment kind");
}

ExperimentKind experiment_from_name(const std::string& name) {
    if (name == "intensity_scan") return ExperimentKind::IntensityScan;
    if (name == "single_run") return ExperimentKind::SingleRun;
    if (name == "phase_bw_sweep") return ExperimentKind::PhaseBwScan;
    if (name == "amp_bw_sweep") return ExperimentKind::AmplitudeBwScan;
    if (name == "sigma_inf_sweep") return ExperimentKind::StationaryScan;
    if (name == "n_tradeoff") return ExperimentKind::PeriodScan;
    throw std::invalid_argument("unknown experiment: " + name);
}

void SweepConfig::validate() const {
    if (intensities.empty() || phase_bw_hz.empty() || amp_bw_hz.empty() ||
        sigma_inf_sq.empty() || n_per_estimate.empty())
        throw std::invalid_argument("sweep grids must be non-empty");
    if (realizations < 1) throw std::invalid_argument("sweep.realizations must be >= 1");
    if (symbols_per_realization < 1)
        throw std::invalid_argument("sweep.symbols_per_realization must be >= 1");
    if (estimators.empty()) throw std::invalid_argument("sweep.estimators must be non-empty");
    for (const std::string& e : estimators)
        if (e != "heterodyne") (void)estimator_from_name(e);
    for (double v : intensities)
        if (!(v > 0.0)) throw std::invalid_argument("sweep intensities must be positive");
    for (double v : phase_bw_hz)
        if (!(v >= 0.0)) throw std::invalid_argument("sweep phase bandwidths must be >= 0");
    for (double v : amp_bw_hz)
        if (!(v >= 0.0)) throw std::invalid_argument("sweep amplitude bandwidths must be >= 0");
    for (double v : sigma_inf_sq)
        if (!(v >= 0.0)) throw std::invalid_argument("sweep stationary variances must be >= 0");
    for (int v : n_per_estimate)
        if (v < 1) throw std::invalid_argument("sweep estimation periods must be >= 1");
}

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (const auto& item : j.items())
        if (!allowed.contains(item.key()))
            throw std::invalid_argument("unknown key '" + item.key() + "' in " + where);
}

PhysicsConfig parse_physics(const json& j) {
    reject_unknown_keys(j, {"visibility", "pnr", "efficiency", "dark_rate"}, "physics");
    PhysicsConfig p;
    p.visibility = j.value("visibility", p.visibility);
    p.pnr = j.value("pnr", p.pnr);
    p.efficiency = j.value("efficiency", p.efficiency);
    p.dark_rate = j.value("dark_rate", p.dark_rate);
    p.validate();
    return p;
}

SweepConfig parse_sweep(const json& j) {
    reject_unknown_keys(j,
                        {"experiment", "intensities", "phase_bw_hz", "amp_bw_hz", "sigma_inf_sq",
                         "n_per_estimate", "realizations", "symbols_per_realization", "seed",
                         "estimators", "model", "calibration", "out"},
                        "sweep");
    SweepConfig s;
    if (j.contains("experiment"))
        s.experiment = experiment_from_name(j.at("experiment").get<std::string>());
    if (j.contains("intensities")) s.intensities = j.at("intensities").get<std::vector<double>>();
    if (j.contains("phase_bw_hz")) s.phase_bw_hz = j.at("phase_bw_hz").get<std::vector<double>>();
    if (j.contains("amp_bw_hz")) s.amp_bw_hz = j.at("amp_bw_hz").get<std::vector<double>>();
    if (j.contains("sigma_inf_sq"))
        s.sigma_inf_sq = j.at("sigma_inf_sq").get<std::vector<double>>();
    if (j.contains("n_per_estimate"))
        s.n_per_estimate = j.at("n_per_estimate").get<std::vector<int>>();
    s.realizations = j.value("realizations", s.realizations);
    s.symbols_per_realization = j.value("symbols_per_realization", s.symbols_per_realization);
    s.seed = j.value("seed", s.seed);
    if (j.contains("estimators")) s.estimators = j.at("estimators").get<std::vector<std::string>>();
    s.model_path = j.value("model", s.model_path);
    s.calibration_path = j.value("calibration", s.calibration_path);
    s.out_path = j.value("out", s.out_path);
    s.validate();
    return s;
}

}  // namespace

HarnessConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json j = json::parse(in);  // empty or malformed files throw with a byte offset
    reject_unknown_keys(j,
                        {"physics", "receiver", "symbol_period_s", "sweep", "train", "calibrate",
                         "discriminate", "track", "baseline"},
                        "config root");

    HarnessConfig cfg;
    if (j.contains("physics")) cfg.physics = parse_physics(j.at("physics"));
    if (j.contains("receiver")) {
        const json& jr = j.at("receiver");
        reject_unknown_keys(jr, {"alphabet", "adaptive_steps"}, "receiver");
        cfg.receiver.alphabet = jr.value("alphabet", cfg.receiver.alphabet);
        cfg.receiver.adaptive_steps = jr.value("adaptive_steps", cfg.receiver.adaptive_steps);
    }
    cfg.receiver.physics = cfg.physics;
    cfg.receiver.validate();
    cfg.symbol_period_s = j.value("symbol_period_s", cfg.symbol_period_s);
    if (!(cfg.symbol_period_s > 0.0))
        throw std::invalid_argument("symbol_period_s must be > 0");

    if (j.contains("sweep")) cfg.sweep = parse_sweep(j.at("sweep"));

    if (j.contains("train")) {
        const json& jt = j.at("train");
        reject_unknown_keys(jt,
                            {"samples", "epochs", "batch_size", "learning_rate", "momentum",
                             "rms_decay", "epsilon", "lambda_phase", "lambda_intensity",
                             "phase_sigma", "intensity_min", "intensity_max", "experiments_min",
                             "experiments_max", "validation_fraction", "seed", "out"},
                            "train");
        HarnessConfig::TrainSection section;
        TrainConfig& t = section.train;
        t.dataset_size = jt.value("samples", t.dataset_size);
        t.epochs = jt.value("epochs", t.epochs);
        t.batch_size = jt.value("batch_size", t.batch_size);
        t.learning_rate = jt.value("learning_rate", t.learning_rate);
        t.momentum = jt.value("momentum", t.momentum);
        t.rms_decay = jt.value("rms_decay", t.rms_decay);
        t.epsilon = jt.value("epsilon", t.epsilon);
        t.lambda_phase = jt.value("lambda_phase", t.lambda_phase);
        t.lambda_intensity = jt.value("lambda_intensity", t.lambda_intensity);
        t.phase_sigma = jt.value("phase_sigma", t.phase_sigma);
        t.intensity_min = jt.value("intensity_min", t.intensity_min);
        t.intensity_max = jt.value("intensity_max", t.intensity_max);
        t.experiments_min = jt.value("experiments_min", t.experiments_min);
        t.experiments_max = jt.value("experiments_max", t.experiments_max);
        t.validation_fraction = jt.value("validation_fraction", t.validation_fraction);
        t.validate();
        section.seed = jt.value("seed", section.seed);
        section.out_path = jt.value("out", section.out_path);
        cfg.train = section;
    }

    if (j.contains("calibrate")) {
        const json& jc = j.at("calibrate");
        reject_unknown_keys(jc, {"estimators", "model", "anchors", "n_list", "trials", "seed", "out"},
                            "calibrate");
        HarnessConfig::CalibrateSection section;
        if (jc.contains("estimators"))
            section.estimators = jc.at("estimators").get<std::vector<std::string>>();
        section.model_path = jc.value("model", section.model_path);
        if (jc.contains("anchors")) section.anchors = jc.at("anchors").get<std::vector<double>>();
        if (jc.contains("n_list")) section.n_list = jc.at("n_list").get<std::vector<int>>();
        section.trials = jc.value("trials", section.trials);
        section.seed = jc.value("seed", section.seed);
        section.out_path = jc.value("out", section.out_path);
        cfg.calibrate = section;
    }

    if (j.contains("discriminate")) {
        const json& jd = j.at("discriminate");
        reject_unknown_keys(jd, {"intensity", "lo_intensity", "phase_offset", "trials", "seed", "out"},
                            "discriminate");
        HarnessConfig::DiscriminateSection section;
        section.intensity = jd.value("intensity", section.intensity);
        section.lo_intensity = jd.value("lo_intensity", section.lo_intensity);
        section.phase_offset = jd.value("phase_offset", section.phase_offset);
        section.trials = jd.value("trials", section.trials);
        section.seed = jd.value("seed", section.seed);
        section.out_path = jd.value("out", section.out_path);
        cfg.discriminate = section;
    }

    if (j.contains("track")) {
        const json& jt = j.at("track");
        reject_unknown_keys(jt,
                            {"intensity", "phase_bw_hz", "amp_bw_hz", "sigma_inf_sq",
                             "n_per_estimate", "symbols", "estimator", "model", "calibration",
                             "seed", "out"},
                            "track");
        HarnessConfig::TrackSection section;
        section.intensity = jt.value("intensity", section.intensity);
        section.phase_bw_hz = jt.value("phase_bw_hz", section.phase_bw_hz);
        section.amp_bw_hz = jt.value("amp_bw_hz", section.amp_bw_hz);
        section.sigma_inf_sq = jt.value("sigma_inf_sq", section.sigma_inf_sq);
        section.n_per_estimate = jt.value("n_per_estimate", section.n_per_estimate);
        section.symbols = jt.value("symbols", section.symbols);
        section.estimator = jt.value("estimator", section.estimator);
        section.model_path = jt.value("model", section.model_path);
        section.calibration_path = jt.value("calibration", section.calibration_path);
        section.seed = jt.value("seed", section.seed);
        section.out_path = jt.value("out", section.out_path);
        cfg.track = section;
    }

    if (j.contains("baseline")) {
        const json& jb = j.at("baseline");
        reject_unknown_keys(jb, {"intensities", "oracle_trials", "seed", "out"}, "baseline");
        HarnessConfig::BaselineSection section;
        if (jb.contains("intensities"))
            section.intensities = jb.at("intensities").get<std::vector<double>>();
        section.oracle_trials = jb.value("oracle_trials", section.oracle_trials);
        section.seed = jb.value("seed", section.seed);
        section.out_path = jb.value("out", section.out_path);
        cfg.baseline = section;
    }

    return cfg;
}

namespace {

std::string format_row(const ResultRow& r) {
    char line[320];
    std::snprintf(line, sizeof line, "%s,%s,%.10g,%.10g,%.10g,%.10g,%d,%lld,%lld,%.12g,%.12g\n",
                  r.experiment.c_str(), r.estimator.c_str(), r.mean_intensity, r.phase_bw_hz,
                  r.amp_bw_hz, r.sigma_inf_sq, r.n_per_estimate,
                  static_cast<long long>(r.realizations), static_cast<long long>(r.symbols),
                  r.mean_error, r.std_error);
    return line;
}

constexpr const char* kResultHeader =
    "experiment,estimator,mean_intensity,phase_bw_hz,amp_bw_hz,sigma_inf_sq,"
    "n_per_estimate,realizations,symbols_per_realization,mean_error,std_error\n";

}  // namespace

void write_result_rows(const std::vector<ResultRow>& rows, std::ostream& out, bool with_header) {
    if (with_header) out << kResultHeader;
    for (const ResultRow& r : rows) out << format_row(r);
}

void emit_results(const std::vector<ResultRow>& rows, const std::string& path) {
    namespace fs = std::filesystem;
    const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("cannot open results file for writing: " + path);
    write_result_rows(rows, out, fresh);
    out.flush();
    if (!out) throw std::runtime_error("failed writing results file: " + path);
}

std::vector<ResultRow> run_sweep(const SweepConfig& cfg, const PhysicsConfig& physics,
                                 const ReceiverConfig& receiver_in, double symbol_period_s,
                                 std::ostream* progress) {
    cfg.validate();
    ReceiverConfig receiver = receiver_in;
    receiver.physics = physics;
    receiver.validate();

    // Load estimator resources up front so misconfiguration fails before any
    // long simulation starts.
    const bool wants_nn =
        std::find(cfg.estimators.begin(), cfg.estimators.end(), "nn") != cfg.estimators.end();
    const bool wants_bayes =
        std::find(cfg.estimators.begin(), cfg.estimators.end(), "bayes") != cfg.estimators.end();

    MLPModel model;
    if (wants_nn) {
        if (cfg.model_path.empty())
            throw std::invalid_argument("sweep uses the nn estimator but no model path is set");
        model = load_model(cfg.model_path);
    }
    std::vector<CalibrationTable> calibrations;
    if (wants_nn || wants_bayes) {
        if (cfg.calibration_path.empty())
            throw std::invalid_argument(
                "sweep uses a tracked estimator but no calibration path is set");
        calibrations = load_calibration(cfg.calibration_path);
    }
    const BayesGrid grid = BayesGrid::standard();

    std::vector<ResultRow> all_rows;
    std::uint64_t grid_index = 0;
    for (double intensity : cfg.intensities) {
        for (double phase_bw : cfg.phase_bw_hz) {
            for (double amp_bw : cfg.amp_bw_hz) {
                for (double sigma_inf : cfg.sigma_inf_sq) {
                    for (int n_per : cfg.n_per_estimate) {
                        TrackerConfig tracker;
                        tracker.receiver = receiver;
                        tracker.phase_noise.bandwidth_hz = phase_bw;
                        tracker.phase_noise.symbol_period_s = symbol_period_s;
                        tracker.amplitude_noise =
                            OUParams::from_stationary_variance(amp_bw, sigma_inf, intensity);
                        tracker.n_per_estimate = n_per;
                        tracker.validate();

                        std::vector<ResultRow> point_rows;
                        for (const std::string& name : cfg.estimators) {
                            ResultRow row;
                            row.experiment = experiment_name(cfg.experiment);
                            row.estimator = name;
                            row.mean_intensity = intensity;
                            row.phase_bw_hz = phase_bw;
                            row.amp_bw_hz = amp_bw;
                            row.sigma_inf_sq = sigma_inf;
                            row.n_per_estimate = n_per;
                            row.realizations = cfg.realizations;
                            row.symbols = cfg.symbols_per_realization;

                            EnsembleResult ensemble;
                            const std::uint64_t point_seed =
                                splitmix_combine(cfg.seed, 0x47524944ull, grid_index);
                            if (name == "heterodyne") {
                                ensemble = heterodyne_baseline_ensemble(
                                    tracker, cfg.realizations, cfg.symbols_per_realization,
                                    point_seed);
                            } else {
                                EstimatorContext est;
                                est.kind = estimator_from_name(name);
                                est.physics = physics;
                                est.model = est.kind == EstimatorKind::NN ? &model : nullptr;
                                est.grid = est.kind == EstimatorKind::Bayes ? &grid : nullptr;
                                const CalibrationTable* cal = nullptr;
                                if (est.kind == EstimatorKind::NN ||
                                    est.kind == EstimatorKind::Bayes)
                                    cal = &find_calibration(calibrations, name);
                                ensemble = run_tracking_ensemble(
                                    tracker, cfg.realizations, cfg.symbols_per_realization, est,
                                    cal, point_seed);
                            }
                            row.mean_error = ensemble.mean_error();
                            row.std_error = ensemble.std_error();
                            point_rows.push_back(row);
                            if (progress)
                                *progress << row.experiment << ' ' << row.estimator
                                          << " intensity=" << intensity
                                          << " phase_bw=" << phase_bw << " amp_bw=" << amp_bw
                                          << " sigma_inf_sq=" << sigma_inf << " n=" << n_per
                                          << " error=" << row.mean_error << '\n';
                        }
                        if (!cfg.out_path.empty()) emit_results(point_rows, cfg.out_path);
                        all_rows.insert(all_rows.end(), point_rows.begin(), point_rows.end());
                        ++grid_index;
                    }
                }
            }
        }
    }
    return all_rows;
}

}  // namespace qtrack
