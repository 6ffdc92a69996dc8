#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "qtrack/photonics.hpp"
#include "qtrack/rng.hpp"

using namespace qtrack;

namespace {

// Poisson probabilities summed term by term in extended precision, kept
// deliberately separate from the library's log-space evaluation.
long double poisson_term_ld(double nbar, int k) {
    long double term = std::exp((long double)-nbar);
    for (int i = 1; i <= k; ++i) term *= nbar / (long double)i;
    return term;
}

long double poisson_tail_ld(double nbar, int m) {
    long double term = poisson_term_ld(nbar, m);
    long double tail = term;
    for (int k = m + 1; k < m + 400; ++k) {
        term *= nbar / (long double)k;
        tail += term;
        if (term < tail * 1e-25L) break;
    }
    return tail;
}

}  // namespace

TEST_SUITE("photonics") {

TEST_CASE("mean photon number of the displaced field") {
    PhysicsConfig physics;  // visibility 0.997, unit efficiency, no dark counts

    SUBCASE("matched fields at zero phase leave only the visibility residue") {
        const double got = mean_photon_number(5.0, 5.0, 0.0, physics).value;
        CHECK(got == doctest::Approx(2.0 * 5.0 * (1.0 - 0.997)).epsilon(1e-12));
    }
    SUBCASE("perfect visibility nulls matched fields exactly") {
        physics.visibility = 1.0;
        CHECK(mean_photon_number(3.7, 3.7, 0.0, physics).value == 0.0);
    }
    SUBCASE("opposite phase adds the fields coherently") {
        physics.visibility = 1.0;
        const double a = 2.0, b = 8.0;
        const double expected = a + b + 2.0 * std::sqrt(a * b);
        CHECK(mean_photon_number(a, b, std::acos(-1.0), physics).value ==
              doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("efficiency thins and dark counts add") {
        physics.efficiency = 0.4;
        physics.dark_rate = 0.25;
        const double raw = 5.0 + 5.0 - 2.0 * 0.997 * 5.0 * std::cos(0.3);
        CHECK(mean_photon_number(5.0, 5.0, 0.3, physics).value ==
              doctest::Approx(0.4 * raw + 0.25).epsilon(1e-12));
    }
    SUBCASE("negative intensities are rejected") {
        CHECK_THROWS_AS(mean_photon_number(-1.0, 5.0, 0.0, physics), std::domain_error);
        CHECK_THROWS_AS(mean_photon_number(5.0, -1.0, 0.0, physics), std::domain_error);
    }
}

TEST_CASE("physics config validation names the offending field") {
    PhysicsConfig physics;
    physics.visibility = 1.5;
    CHECK_THROWS_WITH_AS(physics.validate(), "physics.visibility must lie in [0, 1]",
                         std::invalid_argument);
    physics = PhysicsConfig{};
    physics.pnr = 0;
    CHECK_THROWS_AS(physics.validate(), std::invalid_argument);
    physics = PhysicsConfig{};
    physics.efficiency = 0.0;
    CHECK_THROWS_AS(physics.validate(), std::invalid_argument);
    physics = PhysicsConfig{};
    physics.dark_rate = -0.1;
    CHECK_THROWS_AS(physics.validate(), std::invalid_argument);
}

TEST_CASE("detector pmf matches term-by-term Poisson sums") {
    const int m = 10;
    for (double nbar : {0.0, 0.03, 0.5, 2.0, 10.0, 50.0}) {
        CAPTURE(nbar);
        const auto pmf = pnr_pmf(MeanPhotonNumber{nbar}, m);
        REQUIRE(pmf.size() == size_t(m) + 1);
        double sum = 0.0;
        for (double p : pmf) {
            CHECK(p >= 0.0);
            sum += p;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        for (int k = 0; k < m; ++k)
            CHECK(pmf[size_t(k)] ==
                  doctest::Approx(double(poisson_term_ld(nbar, k))).epsilon(1e-12));
        CHECK(std::abs(pmf[size_t(m)] - double(poisson_tail_ld(nbar, m))) < 1e-12);
    }
}

TEST_CASE("vacuum input always reads zero counts") {
    const auto pmf = pnr_pmf(MeanPhotonNumber{0.0}, 10);
    CHECK(pmf[0] == 1.0);
    for (size_t k = 1; k < pmf.size(); ++k) CHECK(pmf[k] == 0.0);

    std::mt19937_64 rng = make_stream(1, 2, 3);
    for (int i = 0; i < 100; ++i) CHECK(sample_detection(MeanPhotonNumber{0.0}, 10, rng) == 0);

    CHECK(log_pnr_pmf(0, MeanPhotonNumber{0.0}, 10) == 0.0);
    CHECK(log_pnr_pmf(3, MeanPhotonNumber{0.0}, 10) ==
          -std::numeric_limits<double>::infinity());
}

TEST_CASE("log pmf agrees with the linear pmf where both are representable") {
    const int m = 10;
    for (double nbar : {0.03, 0.5, 2.0, 10.0, 50.0}) {
        CAPTURE(nbar);
        const auto pmf = pnr_pmf(MeanPhotonNumber{nbar}, m);
        for (int k = 0; k < m; ++k) {
            if (pmf[size_t(k)] == 0.0) continue;
            CHECK(log_pnr_pmf(k, MeanPhotonNumber{nbar}, m) ==
                  doctest::Approx(std::log(pmf[size_t(k)])).epsilon(1e-9));
        }
        // The linear tail entry comes from 1 - sum(body) and keeps no
        // relative accuracy below ~1e-8, so only compare it above that.
        if (pmf[size_t(m)] > 1e-6)
            CHECK(log_pnr_pmf(m, MeanPhotonNumber{nbar}, m) ==
                  doctest::Approx(std::log(pmf[size_t(m)])).epsilon(1e-9));
    }
}

TEST_CASE("lumped tail stays accurate far below double cancellation") {
    const int m = 10;
    // At these means 1 - sum(body) underflows to garbage; the series oracle
    // in long double still has ~18 good digits.
    for (double nbar : {0.3, 0.1, 0.02}) {
        CAPTURE(nbar);
        const double expected = std::log(double(poisson_tail_ld(nbar, m)));
        CHECK(log_pnr_pmf(m, MeanPhotonNumber{nbar}, m) ==
              doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("count outside the detector range is rejected") {
    CHECK_THROWS_AS(log_pnr_pmf(-1, MeanPhotonNumber{1.0}, 10), std::domain_error);
    CHECK_THROWS_AS(log_pnr_pmf(11, MeanPhotonNumber{1.0}, 10), std::domain_error);
}

TEST_CASE("sampled counts reproduce the pmf") {
    const int m = 10;
    const double nbar = 2.0;
    const std::int64_t draws = 1000000;
    const auto pmf = pnr_pmf(MeanPhotonNumber{nbar}, m);

    std::mt19937_64 rng = make_stream(7, 0x53414d50ull);
    std::vector<std::int64_t> counts(size_t(m) + 1, 0);
    for (std::int64_t i = 0; i < draws; ++i)
        ++counts[size_t(sample_detection(MeanPhotonNumber{nbar}, m, rng))];

    double chi2 = 0.0;
    for (int k = 0; k <= m; ++k) {
        const double expected = pmf[size_t(k)] * double(draws);
        REQUIRE(expected > 5.0);  // chi-square validity at this mean
        const double diff = double(counts[size_t(k)]) - expected;
        chi2 += diff * diff / expected;
    }
    // 10 degrees of freedom: mean 10, variance 20; allow three sigma.
    CHECK(chi2 < 10.0 + 3.0 * std::sqrt(20.0));
}

TEST_CASE("heterodyne reference error probability") {
    SUBCASE("vacuum gives the three-in-four guess rate") {
        CHECK(heterodyne_qnl_error(0.0) == doctest::Approx(0.75).epsilon(1e-15));
    }
    SUBCASE("strictly decreasing in the mean photon number") {
        double prev = heterodyne_qnl_error(0.0);
        for (double nbar : {0.5, 1.0, 2.0, 5.0, 10.0, 20.0}) {
            const double p = heterodyne_qnl_error(nbar);
            CHECK(p < prev);
            prev = p;
        }
    }
    SUBCASE("pinned value at five photons") {
        CHECK(heterodyne_qnl_error(5.0) ==
              doctest::Approx(0.025186697036433947).epsilon(1e-14));
    }
    SUBCASE("Monte Carlo referee agrees within three sigma") {
        const std::int64_t trials = 1000000;
        for (double nbar : {1.0, 5.0}) {
            CAPTURE(nbar);
            const double closed = heterodyne_qnl_error(nbar);
            const double mc = heterodyne_mc_oracle(nbar, trials, 99);
            const double sigma = std::sqrt(closed * (1.0 - closed) / double(trials));
            CHECK(std::abs(mc - closed) < 3.0 * sigma);
        }
    }
    SUBCASE("parallel and serial Monte Carlo count the same errors") {
        CHECK(heterodyne_mc_oracle(5.0, 200000, 123) ==
              heterodyne_mc_oracle_serial(5.0, 200000, 123));
    }
}

}  // TEST_SUITE
