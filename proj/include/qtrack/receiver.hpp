#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "qtrack/photonics.hpp"

namespace qtrack {

struct ReceiverConfig {
    int alphabet = 4;        // number of symbol phases M
    int adaptive_steps = 10; // detection windows per symbol L; the pulse
                             // energy is spread evenly across them
    PhysicsConfig physics;

    void validate() const;
};

// One transmitted symbol as the channel delivers it: nominal phase index,
// actual intensity and phase offset after noise.
struct SymbolInstance {
    int symbol = 0;
    double intensity = 0.0;
    double phase_offset = 0.0;
};

// Receiver-side knowledge: its LO intensity and accumulated phase correction.
struct LOState {
    double intensity = 0.0;
    double phase_correction = 0.0;
};

struct DetectionStep {
    double lo_phase = 0.0;  // grid phase 2 pi k*/M chosen for this step, before correction
    int count = 0;
};

struct DiscriminationResult {
    int guess = 0;
    double theta_disc = 0.0;  // 2 pi guess / M
    std::vector<DetectionStep> steps;
    bool correct = false;
};

// Log-likelihoods the receiver assigns to its own detector outcomes, indexed
// by [hypothesis offset bin][count]. Depends only on the LO intensity and the
// step count, so it can be built once and reused while the LO is held fixed.
struct ReceiverModel {
    int alphabet = 0;
    int pnr = 0;
    int adaptive_steps = 0;
    double lo_intensity = 0.0;
    std::vector<double> log_likelihood;  // alphabet rows of (pnr + 1) entries

    static ReceiverModel build(double lo_intensity, const ReceiverConfig& cfg);
    double at(int offset_bin, int count) const {
        return log_likelihood[size_t(offset_bin) * size_t(pnr + 1) + size_t(count)];
    }
};

// Adaptive discrimination of one symbol: repeatedly displace the currently
// most likely hypothesis toward vacuum, count photons, update the posterior,
// and output the maximum-posterior phase after the last step. Ties resolve to
// the lowest index, so the first step always tests hypothesis 0.
DiscriminationResult discriminate(const SymbolInstance& symbol, const LOState& lo,
                                  const ReceiverConfig& cfg, std::mt19937_64& rng);
DiscriminationResult discriminate(const SymbolInstance& symbol, const LOState& lo,
                                  const ReceiverConfig& cfg, const ReceiverModel& model,
                                  std::mt19937_64& rng);

// Histogram of detection outcomes versus LO phase relative to the final
// guess. This is the estimators' only view of the data.
struct DetectionMatrix {
    int alphabet = 0;
    int pnr = 0;
    std::vector<std::int64_t> counts;  // row-major, alphabet rows of (pnr + 1) columns
    std::int64_t n_experiments = 0;

    DetectionMatrix(int alphabet_, int pnr_);
    std::int64_t& at(int bin, int count) {
        return counts[size_t(bin) * size_t(pnr + 1) + size_t(count)];
    }
    std::int64_t at(int bin, int count) const {
        return counts[size_t(bin) * size_t(pnr + 1) + size_t(count)];
    }
    std::int64_t total() const;
    void reset();
};

// Folds one discrimination into the histogram. Throws std::logic_error if a
// recorded LO phase does not sit on the receiver grid.
void accumulate(DetectionMatrix& matrix, const DiscriminationResult& result);

// Row-normalised, row-major flattening used as estimator input. Rows with no
// counts map to zeros.
std::vector<double> to_input_vector(const DetectionMatrix& matrix);

}  // namespace qtrack
