#include "qtrack/estimators.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace qtrack {

BayesGrid BayesGrid::make(double phase_min, double phase_max, int phase_points,
                          double intensity_min, double intensity_max, int intensity_points) {
    if (phase_points < 2 || intensity_points < 2)
        throw std::invalid_argument("grid axes need at least two points");
    if (!(phase_min < phase_max) || !(intensity_min < intensity_max))
        throw std::invalid_argument("grid axis bounds must be increasing");
    if (!(intensity_min >= 0.0)) throw std::invalid_argument("grid intensities must be >= 0");
    BayesGrid g;
    g.phase_axis.resize(size_t(phase_points));
    g.intensity_axis.resize(size_t(intensity_points));
    for (int i = 0; i < phase_points; ++i)
        g.phase_axis[size_t(i)] =
            phase_min + (phase_max - phase_min) * double(i) / double(phase_points - 1);
    for (int i = 0; i < intensity_points; ++i)
        g.intensity_axis[size_t(i)] =
            intensity_min + (intensity_max - intensity_min) * double(i) / double(intensity_points - 1);
    return g;
}

BayesGrid BayesGrid::standard() { return make(-0.75, 0.75, 100, 0.05, 25.0, 100); }

void BayesGrid::validate() const {
    if (phase_axis.size() < 2 || intensity_axis.size() < 2)
        throw std::invalid_argument("grid axes need at least two points");
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Per-row tallies of the histogram: plain counts, count-weighted sum and the
// lumped-tail count. The log-likelihood of a whole row then needs a single
// log per grid point instead of one per cell.
struct RowTally {
    std::int64_t events = 0;       // detections with count < pnr
    std::int64_t photon_sum = 0;   // sum of those counts
    std::int64_t tail_events = 0;  // detections in the lumped bin
};

}  // namespace

RawEstimate bayes_estimate(const DetectionMatrix& matrix, double lo_intensity,
                           const BayesGrid& grid, const PhysicsConfig& physics,
                           int adaptive_steps) {
    grid.validate();
    physics.validate();
    if (!(lo_intensity >= 0.0)) throw std::domain_error("LO intensity must be >= 0");
    if (adaptive_steps < 1) throw std::invalid_argument("adaptive_steps must be >= 1");
    if (matrix.pnr != physics.pnr)
        throw std::invalid_argument("detection matrix resolution does not match physics");

    const size_t n_phase = grid.phase_axis.size();
    const size_t n_intensity = grid.intensity_axis.size();

    if (matrix.total() == 0) {
        RawEstimate prior;
        prior.phase = 0.5 * (grid.phase_axis.front() + grid.phase_axis.back());
        prior.intensity = 0.5 * (grid.intensity_axis.front() + grid.intensity_axis.back());
        prior.degenerate = true;
        return prior;
    }

    const int M = matrix.alphabet;
    const int m = matrix.pnr;
    std::vector<RowTally> rows(static_cast<size_t>(M));
    for (int r = 0; r < M; ++r) {
        for (int d = 0; d < m; ++d) {
            const std::int64_t c = matrix.at(r, d);
            rows[size_t(r)].events += c;
            rows[size_t(r)].photon_sum += c * d;
        }
        rows[size_t(r)].tail_events = matrix.at(r, m);
    }

    const double sector = 2.0 * std::numbers::pi / double(M);
    const double eta = physics.efficiency;
    const double xi = physics.visibility;
    const double dark = physics.dark_rate;
    const double inv_steps = 1.0 / double(adaptive_steps);
    const double sqrt_lo = std::sqrt(lo_intensity);

    std::vector<double> sqrt_intensity(n_intensity);
    for (size_t i = 0; i < n_intensity; ++i)
        sqrt_intensity[i] = std::sqrt(grid.intensity_axis[i]);

    // Log-likelihood surface up to a constant (the count factorials drop out
    // of the normalised posterior).
    std::vector<double> log_like(n_phase * n_intensity);
    std::vector<double> cos_row(static_cast<size_t>(M));
    double top = kNegInf;
    for (size_t p = 0; p < n_phase; ++p) {
        const double phase = grid.phase_axis[p];
        // Data rows record the LO grid offset relative to the guess, so a
        // positive channel phase appears as cos(offset - phase).
        for (int r = 0; r < M; ++r) cos_row[size_t(r)] = std::cos(sector * double(r) - phase);
        for (size_t i = 0; i < n_intensity; ++i) {
            const double a = grid.intensity_axis[i];
            const double cross = 2.0 * xi * sqrt_intensity[i] * sqrt_lo;
            double ll = 0.0;
            for (int r = 0; r < M; ++r) {
                const RowTally& tally = rows[size_t(r)];
                if (tally.events == 0 && tally.tail_events == 0) continue;
                const double nbar = std::max(
                    0.0, eta * (a + lo_intensity - cross * cos_row[size_t(r)]) * inv_steps +
                             dark);
                if (nbar == 0.0) {
                    if (tally.photon_sum > 0 || tally.tail_events > 0) {
                        ll = kNegInf;
                        break;
                    }
                    continue;  // all-zero counts are certain under a dark hypothesis
                }
                ll += -double(tally.events) * nbar + double(tally.photon_sum) * std::log(nbar);
                if (tally.tail_events > 0)
                    ll += double(tally.tail_events) * log_pnr_pmf(m, MeanPhotonNumber{nbar}, m);
            }
            log_like[p * n_intensity + i] = ll;
            if (ll > top) top = ll;
        }
    }

    if (top == kNegInf)
        throw std::runtime_error("detection histogram has zero likelihood on the whole grid");

    double norm = 0.0;
    double phase_mean = 0.0;
    double intensity_mean = 0.0;
    for (size_t p = 0; p < n_phase; ++p) {
        for (size_t i = 0; i < n_intensity; ++i) {
            const double w = std::exp(log_like[p * n_intensity + i] - top);
            norm += w;
            phase_mean += w * grid.phase_axis[p];
            intensity_mean += w * grid.intensity_axis[i];
        }
    }

    RawEstimate est;
    est.phase = phase_mean / norm;
    est.intensity = intensity_mean / norm;
    return est;
}

RawEstimate nn_estimate(const MLPModel& model, const DetectionMatrix& matrix,
                        double lo_intensity) {
    if (!(lo_intensity >= 0.0)) throw std::domain_error("LO intensity must be >= 0");
    std::vector<double> input = to_input_vector(matrix);
    input.push_back(lo_intensity);
    if (input.size() != size_t(model.input_size()))
        throw std::invalid_argument("model input size does not match detection matrix shape");
    if (model.output_size() != 2)
        throw std::invalid_argument("estimator model must have two outputs");
    const std::vector<double> out = mlp_forward(model, input);
    RawEstimate est;
    est.phase = out[0];
    est.intensity = std::max(kMinLOIntensity, out[1]);
    return est;
}

}  // namespace qtrack
