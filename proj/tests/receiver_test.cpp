#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "qtrack/montecarlo.hpp"
#include "qtrack/receiver.hpp"
#include "qtrack/rng.hpp"

using namespace qtrack;

namespace {

constexpr double kSector = std::numbers::pi / 2.0;

ReceiverConfig small_config(int steps, int pnr) {
    ReceiverConfig cfg;
    cfg.adaptive_steps = steps;
    cfg.physics.pnr = pnr;
    return cfg;
}

// Independent enumeration of the two-step adaptive receiver with a binary
// detector: walks every outcome path, carrying the exact path probability
// under the true channel and re-deriving the receiver's posterior decisions
// from scratch. Small enough to be checked by hand, yet it exercises the
// full adaptive rule (tie-breaks included).
double two_step_error_oracle(const ReceiverConfig& cfg, double input_intensity,
                             double lo_intensity, double phase_offset) {
    const int M = cfg.alphabet;
    const double step_input = input_intensity / 2.0;
    const double step_lo = lo_intensity / 2.0;

    // Receiver-side outcome model per grid offset (assumes intensity B and no
    // residual offset, the same idealisation the receiver itself makes).
    std::vector<std::vector<double>> hyp_pmf(static_cast<size_t>(M));
    for (int r = 0; r < M; ++r)
        hyp_pmf[size_t(r)] =
            pnr_pmf(mean_photon_number(step_lo, step_lo, kSector * r, cfg.physics), 1);

    double error = 0.0;
    for (int truth = 0; truth < M; ++truth) {
        const double input_phase = kSector * truth + phase_offset;
        // Step 1 always tests hypothesis 0.
        std::vector<double> true_pmf1 =
            pnr_pmf(mean_photon_number(step_input, step_lo, input_phase, cfg.physics), 1);
        for (int d1 = 0; d1 <= 1; ++d1) {
            std::vector<double> posterior(static_cast<size_t>(M));
            for (int k = 0; k < M; ++k)
                posterior[size_t(k)] = hyp_pmf[size_t((k % M + M) % M)][size_t(d1)];
            int tested = 0;
            for (int k = 1; k < M; ++k)
                if (posterior[size_t(k)] > posterior[size_t(tested)]) tested = k;

            std::vector<double> true_pmf2 = pnr_pmf(
                mean_photon_number(step_input, step_lo, input_phase - kSector * tested,
                                   cfg.physics),
                1);
            for (int d2 = 0; d2 <= 1; ++d2) {
                std::vector<double> final_posterior = posterior;
                for (int k = 0; k < M; ++k)
                    final_posterior[size_t(k)] *=
                        hyp_pmf[size_t(((k - tested) % M + M) % M)][size_t(d2)];
                int guess = 0;
                for (int k = 1; k < M; ++k)
                    if (final_posterior[size_t(k)] > final_posterior[size_t(guess)]) guess = k;
                if (guess != truth)
                    error += 0.25 * true_pmf1[size_t(d1)] * true_pmf2[size_t(d2)];
            }
        }
    }
    return error;
}

}  // namespace

TEST_SUITE("receiver") {
    TEST_CASE("configuration validation") {
        ReceiverConfig cfg;
        cfg.alphabet = 1;
        CHECK_THROWS_WITH_AS(cfg.validate(), "receiver.alphabet must be >= 2",
                             std::invalid_argument);
        cfg.alphabet = 4;
        cfg.adaptive_steps = 0;
        CHECK_THROWS_WITH_AS(cfg.validate(), "receiver.adaptive_steps must be >= 1",
                             std::invalid_argument);
    }

    TEST_CASE("receiver model rejects negative LO intensity") {
        ReceiverConfig cfg;
        CHECK_THROWS_AS(ReceiverModel::build(-1.0, cfg), std::domain_error);
    }

    TEST_CASE("perfect-visibility model is certain of a dark nulled step") {
        ReceiverConfig cfg;
        cfg.physics.visibility = 1.0;
        const ReceiverModel model = ReceiverModel::build(5.0, cfg);
        // Offset 0 with unit visibility nulls the field exactly: zero counts
        // are certain, anything else impossible.
        CHECK(model.at(0, 0) == 0.0);
        CHECK(model.at(0, 1) == -std::numeric_limits<double>::infinity());
    }

    TEST_CASE("first step always tests hypothesis zero") {
        ReceiverConfig cfg;
        std::mt19937_64 rng = make_stream(21, 0);
        for (int symbol = 0; symbol < 4; ++symbol) {
            DiscriminationResult result =
                discriminate({symbol, 5.0, 0.3}, {5.0, 0.0}, cfg, rng);
            CHECK(result.steps.at(0).lo_phase == 0.0);
            CHECK(result.steps.size() == 10);
        }
    }

    TEST_CASE("vacuum input with vacuum LO resolves to hypothesis zero") {
        ReceiverConfig cfg;
        std::mt19937_64 rng = make_stream(22, 0);
        DiscriminationResult result = discriminate({2, 0.0, 0.0}, {0.0, 0.0}, cfg, rng);
        // No photons and a flat posterior: every tie resolves downward.
        CHECK(result.guess == 0);
        CHECK(result.theta_disc == 0.0);
        for (const DetectionStep& step : result.steps) {
            CHECK(step.lo_phase == 0.0);
            CHECK(step.count == 0);
        }
    }

    TEST_CASE("perfect visibility locks onto the matched symbol without errors") {
        ReceiverConfig cfg;
        cfg.physics.visibility = 1.0;
        std::mt19937_64 rng = make_stream(23, 0);
        for (int trial = 0; trial < 200; ++trial) {
            DiscriminationResult result = discriminate({0, 5.0, 0.0}, {5.0, 0.0}, cfg, rng);
            CHECK(result.correct);
            for (const DetectionStep& step : result.steps) CHECK(step.count == 0);
        }
    }

    TEST_CASE("input validation") {
        ReceiverConfig cfg;
        std::mt19937_64 rng = make_stream(24, 0);
        CHECK_THROWS_AS(discriminate({-1, 5.0, 0.0}, {5.0, 0.0}, cfg, rng), std::domain_error);
        CHECK_THROWS_AS(discriminate({4, 5.0, 0.0}, {5.0, 0.0}, cfg, rng), std::domain_error);
        CHECK_THROWS_AS(discriminate({0, -5.0, 0.0}, {5.0, 0.0}, cfg, rng), std::domain_error);
        CHECK_THROWS_AS(discriminate({0, 5.0, 0.0}, {-5.0, 0.0}, cfg, rng), std::domain_error);
        const ReceiverModel model = ReceiverModel::build(5.0, cfg);
        ReceiverConfig other = cfg;
        other.adaptive_steps = 5;
        CHECK_THROWS_AS(discriminate({0, 5.0, 0.0}, {5.0, 0.0}, other, model, rng),
                        std::logic_error);
    }

    TEST_CASE("matrix accumulation counts every detection window") {
        ReceiverConfig cfg;
        DetectionMatrix matrix(cfg.alphabet, cfg.physics.pnr);
        std::mt19937_64 rng = make_stream(25, 0);
        std::uniform_int_distribution<int> pick(0, 3);
        const int n = 17;
        for (int e = 0; e < n; ++e)
            accumulate(matrix, discriminate({pick(rng), 5.0, 0.1}, {5.0, 0.0}, cfg, rng));
        CHECK(matrix.total() == n * cfg.adaptive_steps);
        CHECK(matrix.n_experiments == n);
        matrix.reset();
        CHECK(matrix.total() == 0);
        CHECK(matrix.n_experiments == 0);
    }

    TEST_CASE("matrix layout is row-major with pnr+1 columns") {
        DetectionMatrix matrix(4, 10);
        matrix.at(1, 3) = 7;
        CHECK(matrix.counts.at(1 * 11 + 3) == 7);
        std::vector<double> input = to_input_vector(matrix);
        CHECK(input.size() == 44);
        CHECK(input.at(14) == 1.0);  // lone count normalises to a full row
        for (size_t i = 0; i < input.size(); ++i)
            if (i != 14) CHECK(input[i] == 0.0);
    }

    TEST_CASE("accumulate rejects off-grid records") {
        DetectionMatrix matrix(4, 10);
        DiscriminationResult result;
        result.guess = 0;
        result.theta_disc = 0.0;
        result.steps.push_back({0.3, 0});
        CHECK_THROWS_AS(accumulate(matrix, result), std::logic_error);
        result.steps[0] = {0.0, 11};
        CHECK_THROWS_AS(accumulate(matrix, result), std::logic_error);
        result.steps[0] = {0.0, -1};
        CHECK_THROWS_AS(accumulate(matrix, result), std::logic_error);
    }

    TEST_CASE("starting hypothesis enjoys a head start at low intensity") {
        // The first step always probes hypothesis 0 and posterior ties break
        // toward it, so the strategy is deliberately asymmetric across the
        // alphabet: symbol 0 is identified more reliably than its antipode.
        ReceiverConfig cfg;
        const ReceiverModel model = ReceiverModel::build(2.0, cfg);
        const std::int64_t trials = 40000;
        std::vector<double> rate(4);
        for (int symbol = 0; symbol < 4; symbol += 2) {
            std::mt19937_64 rng = make_stream(26, std::uint64_t(symbol));
            std::int64_t errors = 0;
            for (std::int64_t t = 0; t < trials; ++t)
                if (!discriminate({symbol, 2.0, 0.0}, {2.0, 0.0}, cfg, model, rng).correct)
                    ++errors;
            rate[size_t(symbol)] = double(errors) / double(trials);
        }
        CHECK(rate[0] < rate[2]);
    }

    TEST_CASE("error rate improves with brighter inputs and finer adaptivity") {
        ReceiverConfig cfg;
        const std::int64_t trials = 60000;
        const double dim = discrimination_error_rate(cfg, 1.0, 1.0, 0.0, trials, 27).rate();
        const double bright = discrimination_error_rate(cfg, 5.0, 5.0, 0.0, trials, 27).rate();
        CHECK(bright < dim);

        // Same pulse energy, fewer chances to update the hypothesis.
        ReceiverConfig coarse = cfg;
        coarse.adaptive_steps = 2;
        const double l2 = discrimination_error_rate(coarse, 2.0, 2.0, 0.0, trials, 28).rate();
        const double l10 = discrimination_error_rate(cfg, 2.0, 2.0, 0.0, trials, 28).rate();
        CHECK(l10 < l2);
    }

    TEST_CASE("two-step binary-detector receiver matches exhaustive enumeration") {
        ReceiverConfig cfg = small_config(2, 1);
        const double intensity = 0.2;
        const double exact = two_step_error_oracle(cfg, intensity, intensity, 0.0);
        CHECK(exact > 0.0);
        CHECK(exact < 0.75);

        const std::int64_t trials = 100000;
        ErrorRateResult mc =
            discrimination_error_rate(cfg, intensity, intensity, 0.0, trials, 31);
        CHECK(std::abs(mc.rate() - exact) < 3.0 * mc.std_error());
    }

    TEST_CASE("two-step enumeration tracks a phase offset") {
        ReceiverConfig cfg = small_config(2, 1);
        const double exact = two_step_error_oracle(cfg, 0.2, 0.2, 0.25);
        ErrorRateResult mc = discrimination_error_rate(cfg, 0.2, 0.2, 0.25, 100000, 32);
        CHECK(std::abs(mc.rate() - exact) < 3.0 * mc.std_error());
        // A phase offset can only hurt a receiver tuned to the grid.
        CHECK(exact > two_step_error_oracle(cfg, 0.2, 0.2, 0.0));
    }
}
