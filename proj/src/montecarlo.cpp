#include "qtrack/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "qtrack/rng.hpp"

namespace qtrack {

double ErrorRateResult::std_error() const {
    if (trials < 2) return 0.0;
    const double p = rate();
    return std::sqrt(p * (1.0 - p) / double(trials));
}

namespace {

constexpr std::int64_t kTrialChunk = 4096;

std::int64_t chunk_errors(const ReceiverConfig& cfg, const ReceiverModel& model,
                          double input_intensity, double lo_intensity, double phase_offset,
                          std::int64_t trials, std::uint64_t seed, std::int64_t chunk_index) {
    std::mt19937_64 rng = make_stream(seed, 0x44495343ull, std::uint64_t(chunk_index));
    std::uniform_int_distribution<int> symbol_draw(0, cfg.alphabet - 1);
    const LOState lo{lo_intensity, 0.0};
    std::int64_t errors = 0;
    for (std::int64_t t = 0; t < trials; ++t) {
        const SymbolInstance symbol{symbol_draw(rng), input_intensity, phase_offset};
        if (!discriminate(symbol, lo, cfg, model, rng).correct) ++errors;
    }
    return errors;
}

}  // namespace

ErrorRateResult discrimination_error_rate(const ReceiverConfig& cfg, double input_intensity,
                                          double lo_intensity, double phase_offset,
                                          std::int64_t trials, std::uint64_t seed) {
    cfg.validate();
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    const ReceiverModel model = ReceiverModel::build(lo_intensity, cfg);
    const std::int64_t chunks = (trials + kTrialChunk - 1) / kTrialChunk;
    std::vector<std::int64_t> errors(size_t(chunks), 0);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t c = 0; c < chunks; ++c) {
        const std::int64_t n = std::min(kTrialChunk, trials - c * kTrialChunk);
        errors[size_t(c)] =
            chunk_errors(cfg, model, input_intensity, lo_intensity, phase_offset, n, seed, c);
    }
    ErrorRateResult out;
    out.trials = trials;
    for (std::int64_t e : errors) out.errors += e;
    return out;
}

ErrorRateResult discrimination_error_rate_serial(const ReceiverConfig& cfg,
                                                 double input_intensity, double lo_intensity,
                                                 double phase_offset, std::int64_t trials,
                                                 std::uint64_t seed) {
    cfg.validate();
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    const ReceiverModel model = ReceiverModel::build(lo_intensity, cfg);
    const std::int64_t chunks = (trials + kTrialChunk - 1) / kTrialChunk;
    ErrorRateResult out;
    out.trials = trials;
    for (std::int64_t c = 0; c < chunks; ++c) {
        const std::int64_t n = std::min(kTrialChunk, trials - c * kTrialChunk);
        out.errors +=
            chunk_errors(cfg, model, input_intensity, lo_intensity, phase_offset, n, seed, c);
    }
    return out;
}

}  // namespace qtrack
