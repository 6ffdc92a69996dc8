#include "qtrack/channel_noise.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "qtrack/rng.hpp"

namespace qtrack {

double PhaseNoiseParams::step_variance() const {
    return 2.0 * std::numbers::pi * bandwidth_hz * symbol_period_s;
}

void PhaseNoiseParams::validate() const {
    if (!(bandwidth_hz >= 0.0)) throw std::invalid_argument("phase bandwidth must be >= 0");
    if (!(symbol_period_s > 0.0)) throw std::invalid_argument("symbol period must be > 0");
}

OUParams OUParams::from_stationary_variance(double bandwidth_hz, double stationary_variance,
                                            double mean_intensity) {
    if (!(bandwidth_hz >= 0.0)) throw std::invalid_argument("OU bandwidth must be >= 0");
    if (!(stationary_variance >= 0.0))
        throw std::invalid_argument("OU stationary variance must be >= 0");
    if (bandwidth_hz == 0.0 && stationary_variance > 0.0)
        throw std::invalid_argument("OU stationary variance requires a nonzero bandwidth");
    OUParams p;
    p.bandwidth_hz = bandwidth_hz;
    p.diffusion = std::sqrt(2.0 * bandwidth_hz * stationary_variance);
    p.mean_intensity = mean_intensity;
    return p;
}

double OUParams::stationary_variance(double) const {
    if (bandwidth_hz == 0.0) return 0.0;
    return diffusion * diffusion / (2.0 * bandwidth_hz);
}

void OUParams::validate(double symbol_period_s) const {
    if (!(bandwidth_hz >= 0.0)) throw std::invalid_argument("OU bandwidth must be >= 0");
    if (!(diffusion >= 0.0)) throw std::invalid_argument("OU diffusion must be >= 0");
    if (!(mean_intensity >= 0.0)) throw std::invalid_argument("OU mean intensity must be >= 0");
    if (bandwidth_hz * symbol_period_s >= 1.0)
        throw std::invalid_argument(
            "OU bandwidth * symbol period >= 1: Euler step is unstable at this rate");
}

double phase_step(double phase, const PhaseNoiseParams& params, std::mt19937_64& rng) {
    const double variance = params.step_variance();
    if (variance == 0.0) return phase;
    std::normal_distribution<double> noise(0.0, std::sqrt(variance));
    return phase + noise(rng);
}

double ou_step(double intensity, const OUParams& params, double dt, std::mt19937_64& rng) {
    if (params.bandwidth_hz * dt >= 1.0)
        throw std::invalid_argument(
            "OU bandwidth * symbol period >= 1: Euler step is unstable at this rate");
    double next = intensity + params.bandwidth_hz * (params.mean_intensity - intensity) * dt;
    if (params.diffusion > 0.0) {
        std::normal_distribution<double> noise(0.0, 1.0);
        next += params.diffusion * std::sqrt(dt) * noise(rng);
    }
    return next;
}

NoiseRealization generate_realization(const PhaseNoiseParams& phase_params,
                                      const OUParams& ou_params, std::int64_t steps,
                                      std::uint64_t seed) {
    if (steps < 1) throw std::invalid_argument("noise realization needs at least one step");
    phase_params.validate();
    ou_params.validate(phase_params.symbol_period_s);

    NoiseRealization out;
    out.seed = seed;
    out.phases.reserve(size_t(steps));
    out.intensities.reserve(size_t(steps));

    std::mt19937_64 rng = make_stream(seed, 0x4e4f4953ull);
    const double dt = phase_params.symbol_period_s;
    const double phase_sigma = std::sqrt(phase_params.step_variance());
    const double ou_sigma = ou_params.diffusion * std::sqrt(dt);
    std::normal_distribution<double> unit(0.0, 1.0);

    double phase = 0.0;
    double intensity = ou_params.mean_intensity;
    out.phases.push_back(phase);
    out.intensities.push_back(intensity);
    for (std::int64_t t = 1; t < steps; ++t) {
        if (phase_sigma > 0.0) phase += phase_sigma * unit(rng);
        intensity += ou_params.bandwidth_hz * (ou_params.mean_intensity - intensity) * dt;
        if (ou_sigma > 0.0) intensity += ou_sigma * unit(rng);
        if (intensity < 0.0) {
            intensity = 0.0;
            ++out.clamp_events;
        }
        out.phases.push_back(phase);
        out.intensities.push_back(intensity);
    }
    return out;
}

void write_realization_csv(const NoiseRealization& realization, std::ostream& out) {
    out << "step,phase_rad,intensity\n";
    char line[96];
    for (size_t i = 0; i < realization.phases.size(); ++i) {
        std::snprintf(line, sizeof line, "%zu,%.12g,%.12g\n", i, realization.phases[i],
                      realization.intensities[i]);
        out << line;
    }
}

}  // namespace qtrack
