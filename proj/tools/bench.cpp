#include <chrono>
#include <cstdio>
#include <string>

#include "qtrack/montecarlo.hpp"
#include "qtrack/nn_train.hpp"
#include "qtrack/parallel.hpp"
#include "qtrack/photonics.hpp"
#include "qtrack/tracking.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void report(const char* name, double serial_s, double parallel_s, bool identical) {
    std::printf("%-24s serial %8.3fs  parallel %8.3fs  speedup %5.2fx  results %s\n", name,
                serial_s, parallel_s, serial_s / parallel_s, identical ? "identical" : "DIFFER");
}

}  // namespace

int main() {
    std::printf("worker threads: %d\n", qtrack::max_threads());

    qtrack::PhysicsConfig physics;
    qtrack::ReceiverConfig receiver;
    receiver.physics = physics;

    {
        const std::int64_t trials = 10'000'000;
        auto t0 = Clock::now();
        const double serial = qtrack::heterodyne_mc_oracle_serial(5.0, trials, 42);
        const double serial_s = seconds_since(t0);
        t0 = Clock::now();
        const double parallel = qtrack::heterodyne_mc_oracle(5.0, trials, 42);
        report("heterodyne oracle", serial_s, seconds_since(t0), serial == parallel);
    }

    {
        const std::int64_t trials = 50'000;
        auto t0 = Clock::now();
        const auto serial =
            qtrack::discrimination_error_rate_serial(receiver, 5.0, 5.0, 0.0, trials, 42);
        const double serial_s = seconds_since(t0);
        t0 = Clock::now();
        const auto parallel = qtrack::discrimination_error_rate(receiver, 5.0, 5.0, 0.0, trials, 42);
        report("discrimination", serial_s, seconds_since(t0), serial.errors == parallel.errors);
    }

    {
        qtrack::TrackerConfig tracker;
        tracker.receiver = receiver;
        tracker.phase_noise.bandwidth_hz = 2000.0;
        tracker.amplitude_noise = qtrack::OUParams::from_stationary_variance(25000.0, 1.5, 5.0);
        qtrack::EstimatorContext est;
        est.kind = qtrack::EstimatorKind::Perfect;
        est.physics = physics;
        auto t0 = Clock::now();
        const auto serial =
            qtrack::run_tracking_ensemble_serial(tracker, 8, 2000, est, nullptr, 42);
        const double serial_s = seconds_since(t0);
        t0 = Clock::now();
        const auto parallel = qtrack::run_tracking_ensemble(tracker, 8, 2000, est, nullptr, 42);
        report("tracking ensemble", serial_s, seconds_since(t0),
               serial.realization_error == parallel.realization_error);
    }

    {
        qtrack::TrainConfig cfg;
        const std::int64_t count = 2000;
        auto t0 = Clock::now();
        const auto serial = qtrack::generate_dataset(physics, receiver, cfg, count, 42, false);
        const double serial_s = seconds_since(t0);
        t0 = Clock::now();
        const auto parallel = qtrack::generate_dataset(physics, receiver, cfg, count, 42, true);
        bool identical = serial.size() == parallel.size();
        for (std::size_t i = 0; identical && i < serial.size(); ++i)
            identical = serial[i].input == parallel[i].input &&
                        serial[i].target_phase == parallel[i].target_phase &&
                        serial[i].weight == parallel[i].weight;
        report("dataset generation", serial_s, seconds_since(t0), identical);
    }

    return 0;
}
