#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

namespace qtrack {

// Laser phase noise: a Gaussian random walk whose per-symbol variance is set
// by the combined linewidth and the symbol period.
struct PhaseNoiseParams {
    double bandwidth_hz = 0.0;
    double symbol_period_s = 1e-8;

    double step_variance() const;  // 2 pi * bandwidth * period
    void validate() const;
};

// Intensity noise: mean-reverting Ornstein-Uhlenbeck process integrated per
// symbol with the Euler-Maruyama step, clamped at zero.
struct OUParams {
    double bandwidth_hz = 0.0;    // reversion rate gamma
    double diffusion = 0.0;       // diffusion strength Sigma
    double mean_intensity = 5.0;  // long-run mean the process reverts to

    // Convenience construction from the long-run variance Sigma^2/(2 gamma).
    static OUParams from_stationary_variance(double bandwidth_hz, double stationary_variance,
                                             double mean_intensity);
    double stationary_variance(double /*unused*/ = 0.0) const;
    void validate(double symbol_period_s) const;  // rejects gamma * dt >= 1
};

struct NoiseRealization {
    std::vector<double> phases;
    std::vector<double> intensities;
    std::uint64_t seed = 0;
    std::int64_t clamp_events = 0;  // Euler steps that hit the zero floor
};

double phase_step(double phase, const PhaseNoiseParams& params, std::mt19937_64& rng);
double ou_step(double intensity, const OUParams& params, double dt, std::mt19937_64& rng);

// Full per-symbol noise trajectory of length `steps`, starting from the
// process means (phase 0, intensity = mean). Replayable from the seed alone.
NoiseRealization generate_realization(const PhaseNoiseParams& phase_params,
                                      const OUParams& ou_params, std::int64_t steps,
                                      std::uint64_t seed);

// CSV dump: step, phase_rad, intensity.
void write_realization_csv(const NoiseRealization& realization, std::ostream& out);

}  // namespace qtrack
