#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace qtrack {

// Interference and detector model shared by every simulation in the project.
struct PhysicsConfig {
    double visibility = 0.997;  // interference visibility of the displacement
    int pnr = 10;               // photon number resolution m; counts >= m are lumped into one bin
    double efficiency = 1.0;    // detection efficiency, thins the mean photon number
    double dark_rate = 0.0;     // mean dark counts per pulse, added after thinning

    void validate() const;  // throws std::invalid_argument naming the offending field
};

// Mean photon number of the displaced pulse hitting the detector. Wrapped in
// a struct so a raw intensity cannot be passed where a displaced mean belongs.
struct MeanPhotonNumber {
    double value = 0.0;
};

// eta * (A + B - 2 xi sqrt(A B) cos(delta)) + dark. Non-negative for any
// phase; exactly zero for matched intensities at zero phase with unit
// visibility and no dark counts.
MeanPhotonNumber mean_photon_number(double input_intensity, double lo_intensity,
                                    double relative_phase, const PhysicsConfig& physics);

// Outcome distribution of the counting detector: Poisson probabilities for
// 0..m-1 photons, upper tail lumped into the final entry. Sums to 1.
std::vector<double> pnr_pmf(MeanPhotonNumber mean, int pnr);

// log of a single pnr_pmf entry, computed in log space so small tails stay
// accurate. count == pnr selects the lumped tail.
double log_pnr_pmf(int count, MeanPhotonNumber mean, int pnr);

// One detector shot: Poisson draw clamped to the resolution limit.
int sample_detection(MeanPhotonNumber mean, int pnr, std::mt19937_64& rng);

// Symbol error probability of an ideal heterodyne receiver on the four-phase
// alphabet at the given mean photon number. This is the quantum-noise-limit
// reference every sweep compares against.
double heterodyne_qnl_error(double mean_photon);

// Monte-Carlo heterodyne receiver: Gaussian quadrature noise, nearest-phase
// decision. Kept as an independent referee for the closed form above.
double heterodyne_mc_oracle(double mean_photon, std::int64_t trials, std::uint64_t seed);
double heterodyne_mc_oracle_serial(double mean_photon, std::int64_t trials, std::uint64_t seed);

}  // namespace qtrack
