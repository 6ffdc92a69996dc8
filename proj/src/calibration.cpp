#include "qtrack/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "qtrack/rng.hpp"

namespace qtrack {

const char* estimator_name(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::NN: return "nn";
        case EstimatorKind::Bayes: return "bayes";
        case EstimatorKind::Perfect: return "perfect";
        case EstimatorKind::None: return "none";
    }
    throw std::logic_error("unknown estimator kind");
}

EstimatorKind estimator_from_name(const std::string& name) {
    if (name == "nn") return EstimatorKind::NN;
    if (name == "bayes") return EstimatorKind::Bayes;
    if (name == "perfect") return EstimatorKind::Perfect;
    if (name == "none") return EstimatorKind::None;
    throw std::invalid_argument("unknown estimator: " + name);
}

void EstimatorContext::validate() const {
    if (kind == EstimatorKind::NN && model == nullptr)
        throw std::invalid_argument("the nn estimator needs a model");
    if (kind == EstimatorKind::Bayes && grid == nullptr)
        throw std::invalid_argument("the bayes estimator needs a posterior grid");
    physics.validate();
}

double PowerLawFit::operator()(double n) const {
    return coefficient * std::pow(n, exponent);
}

void CalibrationTable::validate() const {
    if (anchors.empty()) throw std::invalid_argument("calibration table has no anchors");
    for (size_t i = 1; i < anchors.size(); ++i)
        if (!(anchors[i - 1].mean_intensity < anchors[i].mean_intensity))
            throw std::invalid_argument("calibration anchors must be strictly increasing");
    for (const AnchorCalibration& a : anchors)
        if (!(a.phase_fit.coefficient > 0.0 && a.intensity_fit.coefficient > 0.0))
            throw std::invalid_argument("calibration power laws must be positive");
}

namespace {

double interpolate_anchors(const std::vector<AnchorCalibration>& anchors, double mean_intensity,
                           double n, bool phase) {
    auto value = [&](const AnchorCalibration& a) {
        return phase ? a.phase_fit(n) : a.intensity_fit(n);
    };
    if (mean_intensity <= anchors.front().mean_intensity) return value(anchors.front());
    if (mean_intensity >= anchors.back().mean_intensity) return value(anchors.back());
    for (size_t i = 1; i < anchors.size(); ++i) {
        if (mean_intensity <= anchors[i].mean_intensity) {
            const double lo = anchors[i - 1].mean_intensity;
            const double hi = anchors[i].mean_intensity;
            const double t = (mean_intensity - lo) / (hi - lo);
            return (1.0 - t) * value(anchors[i - 1]) + t * value(anchors[i]);
        }
    }
    return value(anchors.back());
}

PowerLawFit fit_power_law(const std::vector<double>& n_values,
                          const std::vector<double>& variances) {
    // Least squares on (log n, log sigma^2).
    const size_t n = n_values.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        if (!(variances[i] > 0.0))
            throw std::runtime_error("calibration produced a non-positive variance; "
                                     "increase the trial count");
        const double x = std::log(n_values[i]);
        const double y = std::log(variances[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = double(n) * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("power-law fit needs at least two distinct n");
    PowerLawFit fit;
    fit.exponent = (double(n) * sxy - sx * sy) / denom;
    fit.coefficient = std::exp((sy - fit.exponent * sx) / double(n));
    return fit;
}

}  // namespace

double CalibrationTable::phase_variance(double mean_intensity, double n) const {
    validate();
    return interpolate_anchors(anchors, mean_intensity, n, true);
}

double CalibrationTable::intensity_variance(double mean_intensity, double n) const {
    validate();
    return interpolate_anchors(anchors, mean_intensity, n, false);
}

CalibrationTable calibrate_variance(const EstimatorContext& estimator,
                                    const ReceiverConfig& receiver,
                                    const std::vector<double>& anchors,
                                    const std::vector<int>& n_list, std::int64_t trials,
                                    std::uint64_t seed) {
    estimator.validate();
    receiver.validate();
    if (estimator.kind != EstimatorKind::NN && estimator.kind != EstimatorKind::Bayes)
        throw std::invalid_argument("only raw estimators can be calibrated");
    if (anchors.empty() || n_list.empty())
        throw std::invalid_argument("calibration needs anchors and estimation periods");
    if (trials < 2) throw std::invalid_argument("calibration needs at least two trials");
    for (double a : anchors)
        if (!(a > 0.0)) throw std::invalid_argument("calibration anchors must be positive");
    for (int n : n_list)
        if (n < 1) throw std::invalid_argument("estimation periods must be >= 1");

    std::vector<double> sorted_anchors = anchors;
    std::sort(sorted_anchors.begin(), sorted_anchors.end());

    CalibrationTable table;
    table.estimator = estimator_name(estimator.kind);

    for (size_t ai = 0; ai < sorted_anchors.size(); ++ai) {
        const double intensity = sorted_anchors[ai];
        AnchorCalibration anchor;
        anchor.mean_intensity = intensity;
        const ReceiverModel model = ReceiverModel::build(intensity, receiver);

        for (size_t ni = 0; ni < n_list.size(); ++ni) {
            const int n_per_estimate = n_list[size_t(ni)];
            std::vector<double> phases(static_cast<size_t>(trials));
            std::vector<double> intensities(static_cast<size_t>(trials));

#pragma omp parallel for schedule(dynamic, 16)
            for (std::int64_t t = 0; t < trials; ++t) {
                std::mt19937_64 rng =
                    make_stream(seed, 0x43414c00ull + ai * 64 + ni, std::uint64_t(t));
                std::uniform_int_distribution<int> symbol_draw(0, receiver.alphabet - 1);
                DetectionMatrix matrix(receiver.alphabet, receiver.physics.pnr);
                const LOState lo{intensity, 0.0};
                for (int k = 0; k < n_per_estimate; ++k) {
                    const SymbolInstance symbol{symbol_draw(rng), intensity, 0.0};
                    accumulate(matrix, discriminate(symbol, lo, receiver, model, rng));
                }
                const RawEstimate est =
                    estimator.kind == EstimatorKind::NN
                        ? nn_estimate(*estimator.model, matrix, intensity)
                        : bayes_estimate(matrix, intensity, *estimator.grid, estimator.physics,
                                         receiver.adaptive_steps);
                phases[size_t(t)] = est.phase;
                intensities[size_t(t)] = est.intensity;
            }

            CalibrationPoint point;
            point.n_per_estimate = n_per_estimate;
            point.trials = trials;
            double phase_mean = 0.0, intensity_mean = 0.0;
            for (std::int64_t t = 0; t < trials; ++t) {
                phase_mean += phases[size_t(t)];
                intensity_mean += intensities[size_t(t)];
            }
            phase_mean /= double(trials);
            intensity_mean /= double(trials);
            double phase_var = 0.0, intensity_var = 0.0;
            for (std::int64_t t = 0; t < trials; ++t) {
                phase_var += (phases[size_t(t)] - phase_mean) * (phases[size_t(t)] - phase_mean);
                intensity_var += (intensities[size_t(t)] - intensity_mean) *
                                 (intensities[size_t(t)] - intensity_mean);
            }
            point.phase_variance = phase_var / double(trials - 1);
            point.intensity_variance = intensity_var / double(trials - 1);
            point.phase_mean = phase_mean;
            point.intensity_mean = intensity_mean;
            anchor.points.push_back(point);
        }

        std::vector<double> ns, phase_vars, intensity_vars;
        for (const CalibrationPoint& p : anchor.points) {
            ns.push_back(double(p.n_per_estimate));
            phase_vars.push_back(p.phase_variance);
            intensity_vars.push_back(p.intensity_variance);
        }
        anchor.phase_fit = fit_power_law(ns, phase_vars);
        anchor.intensity_fit = fit_power_law(ns, intensity_vars);
        table.anchors.push_back(std::move(anchor));
    }

    table.validate();
    return table;
}

void save_calibration(const std::vector<CalibrationTable>& tables, const std::string& path) {
    nlohmann::json j;
    j["format"] = "qtrack-calibration";
    j["version"] = 1;
    nlohmann::json list = nlohmann::json::array();
    for (const CalibrationTable& table : tables) {
        table.validate();
        nlohmann::json anchors = nlohmann::json::array();
        for (const AnchorCalibration& a : table.anchors) {
            nlohmann::json points = nlohmann::json::array();
            for (const CalibrationPoint& p : a.points)
                points.push_back({{"n_per_estimate", p.n_per_estimate},
                                  {"phase_variance", p.phase_variance},
                                  {"intensity_variance", p.intensity_variance},
                                  {"phase_mean", p.phase_mean},
                                  {"intensity_mean", p.intensity_mean},
                                  {"trials", p.trials}});
            anchors.push_back({{"mean_intensity", a.mean_intensity},
                               {"phase_fit",
                                {{"coefficient", a.phase_fit.coefficient},
                                 {"exponent", a.phase_fit.exponent}}},
                               {"intensity_fit",
                                {{"coefficient", a.intensity_fit.coefficient},
                                 {"exponent", a.intensity_fit.exponent}}},
                               {"points", points}});
        }
        list.push_back({{"estimator", table.estimator}, {"anchors", anchors}});
    }
    j["tables"] = list;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open calibration file for writing: " + path);
    out << j.dump(1) << '\n';
    if (!out) throw std::runtime_error("failed writing calibration file: " + path);
}

std::vector<CalibrationTable> load_calibration(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open calibration file: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.value("format", "") != std::string("qtrack-calibration"))
        throw std::runtime_error("not a calibration file: " + path);
    if (j.value("version", 0) != 1)
        throw std::runtime_error("unsupported calibration file version in " + path);
    std::vector<CalibrationTable> tables;
    for (const nlohmann::json& jt : j.at("tables")) {
        CalibrationTable table;
        table.estimator = jt.at("estimator").get<std::string>();
        for (const nlohmann::json& ja : jt.at("anchors")) {
            AnchorCalibration a;
            a.mean_intensity = ja.at("mean_intensity").get<double>();
            a.phase_fit.coefficient = ja.at("phase_fit").at("coefficient").get<double>();
            a.phase_fit.exponent = ja.at("phase_fit").at("exponent").get<double>();
            a.intensity_fit.coefficient = ja.at("intensity_fit").at("coefficient").get<double>();
            a.intensity_fit.exponent = ja.at("intensity_fit").at("exponent").get<double>();
            for (const nlohmann::json& jp : ja.at("points")) {
                CalibrationPoint p;
                p.n_per_estimate = jp.at("n_per_estimate").get<int>();
                p.phase_variance = jp.at("phase_variance").get<double>();
                p.intensity_variance = jp.at("intensity_variance").get<double>();
                p.phase_mean = jp.at("phase_mean").get<double>();
                p.intensity_mean = jp.at("intensity_mean").get<double>();
                p.trials = jp.at("trials").get<std::int64_t>();
                a.points.push_back(p);
            }
            table.anchors.push_back(std::move(a));
        }
        table.validate();
        tables.push_back(std::move(table));
    }
    return tables;
}

const CalibrationTable& find_calibration(const std::vector<CalibrationTable>& tables,
                                         const std::string& estimator) {
    for (const CalibrationTable& t : tables)
        if (t.estimator == estimator) return t;
    throw std::runtime_error("calibration file has no table for estimator '" + estimator + "'");
}

}  // namespace qtrack
