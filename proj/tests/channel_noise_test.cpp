#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "qtrack/channel_noise.hpp"
#include "qtrack/rng.hpp"

using namespace qtrack;

namespace {

// Mean and variance accumulated online so the long oracle loops below never
// have to materialize the trajectory.
struct RunningStats {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::int64_t count = 0;

    void add(double x) {
        sum += x;
        sum_sq += x * x;
        ++count;
    }
    double mean() const { return sum / double(count); }
    double variance() const { return sum_sq / double(count) - mean() * mean(); }
};

double increment_variance(const std::vector<double>& xs) {
    RunningStats stats;
    for (size_t i = 0; i + 1 < xs.size(); ++i) stats.add(xs[i + 1] - xs[i]);
    return stats.variance();
}

}  // namespace

TEST_SUITE("channel_noise") {

TEST_CASE("phase step variance follows the linewidth") {
    PhaseNoiseParams params;
    params.bandwidth_hz = 2000.0;
    CHECK(params.step_variance() ==
          doctest::Approx(2.0 * std::acos(-1.0) * 2000.0 * 1e-8).epsilon(1e-12));

    params.symbol_period_s = 2e-8;
    CHECK(params.step_variance() ==
          doctest::Approx(2.0 * std::acos(-1.0) * 2000.0 * 2e-8).epsilon(1e-12));

    params.bandwidth_hz = 0.0;
    CHECK(params.step_variance() == 0.0);
}

TEST_CASE("parameter validation") {
    PhaseNoiseParams phase;
    phase.bandwidth_hz = -1.0;
    CHECK_THROWS_WITH_AS(phase.validate(), "phase bandwidth must be >= 0",
                         std::invalid_argument);
    phase = PhaseNoiseParams{};
    phase.symbol_period_s = 0.0;
    CHECK_THROWS_AS(phase.validate(), std::invalid_argument);

    OUParams ou = OUParams::from_stationary_variance(25000.0, 1.5, 5.0);
    CHECK_NOTHROW(ou.validate(1e-8));
    // Euler integration diverges once the reversion per step reaches one, so
    // that configuration has to be rejected rather than integrated.
    ou.bandwidth_hz = 2e8;
    CHECK_THROWS_WITH_AS(ou.validate(1e-8),
                         "OU bandwidth * symbol period >= 1: Euler step is unstable at this rate",
                         std::invalid_argument);
    ou = OUParams::from_stationary_variance(25000.0, 1.5, 5.0);
    ou.mean_intensity = -2.0;
    CHECK_THROWS_AS(ou.validate(1e-8), std::invalid_argument);
    ou = OUParams::from_stationary_variance(25000.0, 1.5, 5.0);
    ou.diffusion = -1.0;
    CHECK_THROWS_AS(ou.validate(1e-8), std::invalid_argument);

    CHECK_THROWS_WITH_AS(OUParams::from_stationary_variance(0.0, 1.5, 5.0),
                         "OU stationary variance requires a nonzero bandwidth",
                         std::invalid_argument);
}

TEST_CASE("stationary variance round-trips through the constructor") {
    const OUParams ou = OUParams::from_stationary_variance(25000.0, 1.5, 5.0);
    CHECK(ou.stationary_variance() == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(ou.diffusion * ou.diffusion / (2.0 * ou.bandwidth_hz) ==
          doctest::Approx(1.5).epsilon(1e-12));
    CHECK(OUParams{}.stationary_variance() == 0.0);
}

TEST_CASE("single phase step matches the closed-form update") {
    PhaseNoiseParams params;
    params.bandwidth_hz = 2000.0;

    // The step draws one normal variate; replaying the stream recovers it.
    std::mt19937_64 rng = make_stream(5, 6);
    std::mt19937_64 replay = rng;
    const double next = phase_step(0.3, params, rng);
    std::normal_distribution<double> gauss;
    const double z = gauss(replay);
    CHECK(next ==
          doctest::Approx(0.3 + std::sqrt(params.step_variance()) * z).epsilon(1e-12));

    // Zero linewidth is a no-op and must not draw from the stream.
    params.bandwidth_hz = 0.0;
    std::mt19937_64 before = rng;
    CHECK(phase_step(0.3, params, rng) == 0.3);
    CHECK(rng == before);
}

TEST_CASE("single ou step matches the euler update") {
    const OUParams ou = OUParams::from_stationary_variance(25000.0, 1.5, 5.0);
    const double dt = 1e-8;

    std::mt19937_64 rng = make_stream(5, 7);
    std::mt19937_64 replay = rng;
    const double stepped = ou_step(4.0, ou, dt, rng);
    std::normal_distribution<double> gauss;
    const double z = gauss(replay);
    const double euler = 4.0 + ou.bandwidth_hz * (ou.mean_intensity - 4.0) * dt +
                         ou.diffusion * std::sqrt(dt) * z;
    CHECK(stepped == doctest::Approx(euler).epsilon(1e-12));

    // Pure reversion: deterministic drift toward the mean, stream untouched.
    OUParams drift;
    drift.bandwidth_hz = 1e5;
    drift.mean_intensity = 5.0;
    std::mt19937_64 before = rng;
    CHECK(ou_step(4.0, drift, dt, rng) ==
          doctest::Approx(4.0 + 1e5 * (5.0 - 4.0) * dt).epsilon(1e-15));
    CHECK(rng == before);

    CHECK_THROWS_AS(ou_step(4.0, drift, 1e-4, rng), std::invalid_argument);
}

TEST_CASE("random walk increments carry the advertised variance") {
    PhaseNoiseParams params;
    params.bandwidth_hz = 2000.0;
    std::mt19937_64 rng = make_stream(101, 1);

    RunningStats stats;
    double phase = 0.0;
    for (int i = 0; i < 10000000; ++i) {
        const double next = phase_step(phase, params, rng);
        stats.add(next - phase);
        phase = next;
    }
    // The mean of 1e7 increments with sd 0.011 spreads 3.6e-6; gate at 5 sigma.
    CHECK(std::fabs(stats.mean()) < 1.8e-5);
    // The variance estimate from 1e7 independent increments has a relative
    // spread of sqrt(2/n) ~ 0.045%, so the 5% gate sits far beyond 5 sigma.
    CHECK(stats.variance() == doctest::Approx(params.step_variance()).epsilon(0.05));
}

TEST_CASE("ou process settles at the stationary law") {
    // gamma dt = 1e-3 keeps the Euler bias at 0.05% while the correlation
    // time of 1e3 steps leaves ~1e4 effective samples: the variance estimate
    // spreads ~1%, so the 5% gate is a ~5 sigma bound.
    const OUParams ou = OUParams::from_stationary_variance(1e5, 1.5, 5.0);
    const double dt = 1e-8;
    std::mt19937_64 rng = make_stream(101, 2);

    double x = 5.0;
    for (int i = 0; i < 1000000; ++i) x = ou_step(x, ou, dt, rng);
    RunningStats stats;
    for (int i = 0; i < 19000000; ++i) {
        x = ou_step(x, ou, dt, rng);
        stats.add(x);
    }
    CHECK(stats.mean() == doctest::Approx(5.0).epsilon(0.02));
    CHECK(stats.variance() == doctest::Approx(1.5).epsilon(0.05));
}

TEST_CASE("generated realizations reproduce both marginals") {
    PhaseNoiseParams phase;
    phase.bandwidth_hz = 2000.0;
    const OUParams ou = OUParams::from_stationary_variance(1e5, 1.5, 5.0);
    const std::int64_t steps = 4000000;
    const NoiseRealization real = generate_realization(phase, ou, steps, 42);

    REQUIRE(real.phases.size() == size_t(steps));
    REQUIRE(real.intensities.size() == size_t(steps));
    CHECK(real.phases[0] == 0.0);
    CHECK(real.intensities[0] == 5.0);
    CHECK(real.seed == 42);

    CHECK(increment_variance(real.phases) ==
          doctest::Approx(phase.step_variance()).epsilon(0.05));

    // Drop the first 4e5 steps (400 correlation times) so the start at the
    // mean does not bias the stationary statistics.
    RunningStats tail;
    for (size_t i = 400000; i < real.intensities.size(); ++i)
        tail.add(real.intensities[i]);
    CHECK(tail.mean() == doctest::Approx(5.0).epsilon(0.03));
    CHECK(tail.variance() == doctest::Approx(1.5).epsilon(0.10));
}

TEST_CASE("clamping engages when the floor is reachable") {
    PhaseNoiseParams quiet;
    // Mean one photon with long-run sd 2: zero sits half a sigma below the
    // mean, so the floor is hit constantly and nothing may pass below it.
    const OUParams ou = OUParams::from_stationary_variance(25000.0, 4.0, 1.0);
    const NoiseRealization real = generate_realization(quiet, ou, 100000, 44);
    CHECK(real.clamp_events > 0);
    double lowest = real.intensities[0];
    for (double x : real.intensities) lowest = std::min(lowest, x);
    CHECK(lowest >= 0.0);
}

TEST_CASE("realizations replay exactly from the seed") {
    PhaseNoiseParams phase;
    phase.bandwidth_hz = 5000.0;
    const OUParams ou = OUParams::from_stationary_variance(25000.0, 1.5, 5.0);

    const NoiseRealization a = generate_realization(phase, ou, 5000, 77);
    const NoiseRealization b = generate_realization(phase, ou, 5000, 77);
    CHECK(a.phases == b.phases);
    CHECK(a.intensities == b.intensities);
    CHECK(a.clamp_events == b.clamp_events);

    const NoiseRealization c = generate_realization(phase, ou, 5000, 78);
    CHECK(a.phases != c.phases);
}

TEST_CASE("csv dump is one row per step") {
    PhaseNoiseParams phase;
    phase.bandwidth_hz = 1000.0;
    const OUParams ou = OUParams::from_stationary_variance(25000.0, 0.5, 5.0);
    const NoiseRealization real = generate_realization(phase, ou, 4, 9);

    std::ostringstream out;
    write_realization_csv(real, out);
    std::istringstream lines(out.str());
    std::string line;
    REQUIRE(std::getline(lines, line));
    CHECK(line == "step,phase_rad,intensity");
    REQUIRE(std::getline(lines, line));
    CHECK(line == "0,0,5");
    size_t rows = 1;
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == 4);
}

TEST_CASE("degenerate step counts are rejected") {
    PhaseNoiseParams phase;
    CHECK_THROWS_WITH_AS(generate_realization(phase, OUParams{}, 0, 1),
                         "noise realization needs at least one step", std::invalid_argument);
    CHECK_THROWS_AS(generate_realization(phase, OUParams{}, -5, 1), std::invalid_argument);
}

}  // TEST_SUITE
