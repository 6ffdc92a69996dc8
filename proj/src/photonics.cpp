#include "qtrack/photonics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "qtrack/rng.hpp"

namespace qtrack {

namespace {

// log(k!) lookup; detector resolutions are small so a fixed table suffices.
constexpr int kMaxLogFactorial = 512;

double log_factorial(int k) {
    static const std::array<double, kMaxLogFactorial + 1> table = [] {
        std::array<double, kMaxLogFactorial + 1> t{};
        for (int i = 0; i <= kMaxLogFactorial; ++i) t[i] = std::lgamma(double(i) + 1.0);
        return t;
    }();
    if (k <= kMaxLogFactorial) return table[size_t(k)];
    return std::lgamma(double(k) + 1.0);
}

}  // namespace

void PhysicsConfig::validate() const {
    if (!(visibility >= 0.0 && visibility <= 1.0))
        throw std::invalid_argument("physics.visibility must lie in [0, 1]");
    if (pnr < 1) throw std::invalid_argument("physics.pnr must be >= 1");
    if (!(efficiency > 0.0 && efficiency <= 1.0))
        throw std::invalid_argument("physics.efficiency must lie in (0, 1]");
    if (!(dark_rate >= 0.0)) throw std::invalid_argument("physics.dark_rate must be >= 0");
}

MeanPhotonNumber mean_photon_number(double input_intensity, double lo_intensity,
                                    double relative_phase, const PhysicsConfig& physics) {
    if (!(input_intensity >= 0.0)) throw std::domain_error("input intensity must be >= 0");
    if (!(lo_intensity >= 0.0)) throw std::domain_error("LO intensity must be >= 0");
    const double cross = 2.0 * physics.visibility *
                         std::sqrt(input_intensity * lo_intensity) * std::cos(relative_phase);
    const double mixed = input_intensity + lo_intensity - cross;
    // mixed >= (sqrt A - sqrt B)^2 analytically; clamp rounding residue only.
    return MeanPhotonNumber{std::max(0.0, physics.efficiency * mixed + physics.dark_rate)};
}

std::vector<double> pnr_pmf(MeanPhotonNumber mean, int pnr) {
    if (pnr < 1) throw std::invalid_argument("pnr must be >= 1");
    if (!(mean.value >= 0.0)) throw std::domain_error("mean photon number must be >= 0");
    const double nbar = mean.value;
    std::vector<double> pmf(size_t(pnr) + 1, 0.0);
    if (nbar == 0.0) {
        pmf[0] = 1.0;
        return pmf;
    }
    double p = std::exp(-nbar);
    double cum = 0.0;
    for (int k = 0; k < pnr; ++k) {
        pmf[size_t(k)] = p;
        cum += p;
        p *= nbar / double(k + 1);
    }
    pmf[size_t(pnr)] = std::max(0.0, 1.0 - cum);
    return pmf;
}

double log_pnr_pmf(int count, MeanPhotonNumber mean, int pnr) {
    if (pnr < 1) throw std::invalid_argument("pnr must be >= 1");
    if (count < 0 || count > pnr) throw std::domain_error("count outside detector range");
    if (!(mean.value >= 0.0)) throw std::domain_error("mean photon number must be >= 0");
    const double nbar = mean.value;
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    if (nbar == 0.0) return count == 0 ? 0.0 : kNegInf;
    if (count < pnr) return -nbar + double(count) * std::log(nbar) - log_factorial(count);

    // Lumped tail P(X >= m). The complement loses all precision when the tail
    // is tiny, so switch to the forward series once it drops below ~1e-8.
    double p = std::exp(-nbar);
    double cum = 0.0;
    for (int k = 0; k < pnr; ++k) {
        cum += p;
        p *= nbar / double(k + 1);
    }
    const double complement = 1.0 - cum;
    if (complement > 1e-8) return std::log(complement);
    // p now holds pmf(m); sum the tail directly.
    double term = p;
    double tail = p;
    for (int k = pnr + 1; k < pnr + 2000; ++k) {
        term *= nbar / double(k);
        tail += term;
        if (term < tail * 1e-18) break;
    }
    return tail > 0.0 ? std::log(tail) : kNegInf;
}

int sample_detection(MeanPhotonNumber mean, int pnr, std::mt19937_64& rng) {
    if (pnr < 1) throw std::invalid_argument("pnr must be >= 1");
    if (!(mean.value >= 0.0)) throw std::domain_error("mean photon number must be >= 0");
    if (mean.value == 0.0) return 0;
    std::poisson_distribution<int> poisson(mean.value);
    return std::min(poisson(rng), pnr);
}

double heterodyne_qnl_error(double mean_photon) {
    if (!(mean_photon >= 0.0)) throw std::domain_error("mean photon number must be >= 0");
    const double q = 0.5 * std::erfc(std::sqrt(0.5 * mean_photon));
    const double correct = 1.0 - q;
    return 1.0 - correct * correct;
}

namespace {

// Shared body for the heterodyne Monte Carlo. Trials are split into fixed
// chunks seeded independently of execution order, so the parallel and serial
// versions count exactly the same errors.
constexpr std::int64_t kHeterodyneChunk = 1 << 16;

std::int64_t heterodyne_chunk_errors(double amplitude, std::int64_t trials,
                                     std::uint64_t master, std::int64_t chunk_index) {
    std::mt19937_64 rng = make_stream(master, 0x48455445ull, std::uint64_t(chunk_index));
    std::normal_distribution<double> quadrature_noise(0.0, std::sqrt(0.5));
    std::uniform_int_distribution<int> symbol(0, 3);
    constexpr double half_pi = std::numbers::pi / 2.0;
    std::int64_t errors = 0;
    for (std::int64_t t = 0; t < trials; ++t) {
        const int k = symbol(rng);
        const double phase = half_pi * double(k);
        const double re = amplitude * std::cos(phase) + quadrature_noise(rng);
        const double im = amplitude * std::sin(phase) + quadrature_noise(rng);
        long guess = std::lround(std::atan2(im, re) / half_pi);
        guess = ((guess % 4) + 4) % 4;
        if (guess != k) ++errors;
    }
    return errors;
}

}  // namespace

double heterodyne_mc_oracle(double mean_photon, std::int64_t trials, std::uint64_t seed) {
    if (!(mean_photon >= 0.0)) throw std::domain_error("mean photon number must be >= 0");
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    const double amplitude = std::sqrt(mean_photon);
    const std::int64_t chunks = (trials + kHeterodyneChunk - 1) / kHeterodyneChunk;
    std::vector<std::int64_t> errors(size_t(chunks), 0);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t c = 0; c < chunks; ++c) {
        const std::int64_t n = std::min(kHeterodyneChunk, trials - c * kHeterodyneChunk);
        errors[size_t(c)] = heterodyne_chunk_errors(amplitude, n, seed, c);
    }
    std::int64_t total = 0;
    for (std::int64_t e : errors) total += e;
    return double(total) / double(trials);
}

double heterodyne_mc_oracle_serial(double mean_photon, std::int64_t trials, std::uint64_t seed) {
    if (!(mean_photon >= 0.0)) throw std::domain_error("mean photon number must be >= 0");
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    const double amplitude = std::sqrt(mean_photon);
    const std::int64_t chunks = (trials + kHeterodyneChunk - 1) / kHeterodyneChunk;
    std::int64_t total = 0;
    for (std::int64_t c = 0; c < chunks; ++c) {
        const std::int64_t n = std::min(kHeterodyneChunk, trials - c * kHeterodyneChunk);
        total += heterodyne_chunk_errors(amplitude, n, seed, c);
    }
    return double(total) / double(trials);
}

}  // namespace qtrack
