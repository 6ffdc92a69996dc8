#pragma once

#include <cstdint>

#include "qtrack/receiver.hpp"

namespace qtrack {

struct ErrorRateResult {
    std::int64_t trials = 0;
    std::int64_t errors = 0;
    double rate() const { return trials > 0 ? double(errors) / double(trials) : 0.0; }
    double std_error() const;
};

// Symbol error probability at fixed channel conditions, estimated over
// independent trials with uniformly random symbols. Trials are chunked onto
// derived streams; the OpenMP and serial versions count identical errors.
ErrorRateResult discrimination_error_rate(const ReceiverConfig& cfg, double input_intensity,
                                          double lo_intensity, double phase_offset,
                                          std::int64_t trials, std::uint64_t seed);
ErrorRateResult discrimination_error_rate_serial(const ReceiverConfig& cfg,
                                                 double input_intensity, double lo_intensity,
                                                 double phase_offset, std::int64_t trials,
                                                 std::uint64_t seed);

}  // namespace qtrack
