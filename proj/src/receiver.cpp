#include "qtrack/receiver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace qtrack {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

int argmax_lowest(const std::vector<double>& v) {
    // std::max_element keeps the first of equal elements, which is the
    // tie-break the adaptive rule requires.
    return int(std::max_element(v.begin(), v.end()) - v.begin());
}
}  // namespace

void ReceiverConfig::validate() const {
    if (alphabet < 2) throw std::invalid_argument("receiver.alphabet must be >= 2");
    if (adaptive_steps < 1) throw std::invalid_argument("receiver.adaptive_steps must be >= 1");
    physics.validate();
}

ReceiverModel ReceiverModel::build(double lo_intensity, const ReceiverConfig& cfg) {
    cfg.validate();
    if (!(lo_intensity >= 0.0)) throw std::domain_error("LO intensity must be >= 0");
    const int m = cfg.physics.pnr;
    ReceiverModel model;
    model.alphabet = cfg.alphabet;
    model.pnr = m;
    model.adaptive_steps = cfg.adaptive_steps;
    model.lo_intensity = lo_intensity;
    model.log_likelihood.resize(size_t(cfg.alphabet) * size_t(m + 1));
    const double sector = kTwoPi / double(cfg.alphabet);
    // Each adaptive step consumes 1/L of the pulse, so the per-step fields
    // carry 1/L of the intensity.
    const double step_lo = lo_intensity / double(cfg.adaptive_steps);
    for (int r = 0; r < cfg.alphabet; ++r) {
        // The receiver models the input as having its own LO intensity and no
        // residual phase offset; only the hypothesis-vs-LO grid offset enters.
        const MeanPhotonNumber mean =
            mean_photon_number(step_lo, step_lo, sector * double(r), cfg.physics);
        for (int d = 0; d <= m; ++d)
            model.log_likelihood[size_t(r) * size_t(m + 1) + size_t(d)] =
                log_pnr_pmf(d, mean, m);
    }
    return model;
}

DiscriminationResult discriminate(const SymbolInstance& symbol, const LOState& lo,
                                  const ReceiverConfig& cfg, std::mt19937_64& rng) {
    const ReceiverModel model = ReceiverModel::build(lo.intensity, cfg);
    return discriminate(symbol, lo, cfg, model, rng);
}

DiscriminationResult discriminate(const SymbolInstance& symbol, const LOState& lo,
                                  const ReceiverConfig& cfg, const ReceiverModel& model,
                                  std::mt19937_64& rng) {
    const int M = cfg.alphabet;
    const int L = cfg.adaptive_steps;
    const int m = cfg.physics.pnr;
    if (symbol.symbol < 0 || symbol.symbol >= M)
        throw std::domain_error("symbol index outside alphabet");
    if (!(symbol.intensity >= 0.0)) throw std::domain_error("symbol intensity must be >= 0");
    if (!(lo.intensity >= 0.0)) throw std::domain_error("LO intensity must be >= 0");
    if (model.alphabet != M || model.pnr != m || model.adaptive_steps != L)
        throw std::logic_error("receiver model does not match configuration");

    const double sector = kTwoPi / double(M);
    const double input_phase = sector * double(symbol.symbol) + symbol.phase_offset;
    const double step_input = symbol.intensity / double(L);
    const double step_lo = lo.intensity / double(L);

    std::vector<double> log_posterior(size_t(M), 0.0);
    DiscriminationResult result;
    result.steps.reserve(size_t(L));

    for (int j = 0; j < L; ++j) {
        const int tested = argmax_lowest(log_posterior);
        const double lo_phase = sector * double(tested);
        const MeanPhotonNumber mean = mean_photon_number(
            step_input, step_lo, input_phase - (lo_phase + lo.phase_correction),
            cfg.physics);
        const int d = sample_detection(mean, m, rng);
        result.steps.push_back({lo_phase, d});

        for (int k = 0; k < M; ++k) {
            const int offset = ((k - tested) % M + M) % M;
            log_posterior[size_t(k)] += model.at(offset, d);
        }
        const double top = *std::max_element(log_posterior.begin(), log_posterior.end());
        if (top == kNegInf) {
            // Every hypothesis ruled the outcome impossible (a modelling
            // mismatch, e.g. dark counts with a dark-free model). Restart flat
            // rather than propagating -inf arithmetic.
            std::fill(log_posterior.begin(), log_posterior.end(), 0.0);
        } else {
            for (double& lp : log_posterior) lp -= top;
        }
    }

    result.guess = argmax_lowest(log_posterior);
    result.theta_disc = sector * double(result.guess);
    result.correct = (result.guess == symbol.symbol);
    return result;
}

DetectionMatrix::DetectionMatrix(int alphabet_, int pnr_)
    : alphabet(alphabet_), pnr(pnr_) {
    if (alphabet < 2) throw std::invalid_argument("detection matrix alphabet must be >= 2");
    if (pnr < 1) throw std::invalid_argument("detection matrix pnr must be >= 1");
    counts.assign(size_t(alphabet) * size_t(pnr + 1), 0);
}

std::int64_t DetectionMatrix::total() const {
    std::int64_t t = 0;
    for (std::int64_t c : counts) t += c;
    return t;
}

void DetectionMatrix::reset() {
    std::fill(counts.begin(), counts.end(), 0);
    n_experiments = 0;
}

void accumulate(DetectionMatrix& matrix, const DiscriminationResult& result) {
    const double sector = kTwoPi / double(matrix.alphabet);
    for (const DetectionStep& step : result.steps) {
        if (step.count < 0 || step.count > matrix.pnr)
            throw std::logic_error("detection count outside detector range");
        const double ratio = (step.lo_phase - result.theta_disc) / sector;
        const long rounded = std::lround(ratio);
        if (std::abs(ratio - double(rounded)) > 1e-6)
            throw std::logic_error("recorded LO phase is off the receiver grid");
        const int bin = int(((rounded % matrix.alphabet) + matrix.alphabet) % matrix.alphabet);
        ++matrix.at(bin, step.count);
    }
    ++matrix.n_experiments;
}

std::vector<double> to_input_vector(const DetectionMatrix& matrix) {
    const int cols = matrix.pnr + 1;
    std::vector<double> out(size_t(matrix.alphabet) * size_t(cols), 0.0);
    for (int r = 0; r < matrix.alphabet; ++r) {
        std::int64_t row_sum = 0;
        for (int d = 0; d < cols; ++d) row_sum += matrix.at(r, d);
        if (row_sum == 0) continue;
        for (int d = 0; d < cols; ++d)
            out[size_t(r) * size_t(cols) + size_t(d)] =
                double(matrix.at(r, d)) / double(row_sum);
    }
    return out;
}

}  // namespace qtrack
