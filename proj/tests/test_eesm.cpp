// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "l2s/eesm.hpp"
#include "l2s/rng.hpp"
#include "l2s/units.hpp"

using namespace l2s;

namespace {

// Naive direct evaluation of the exponential map, no shifting. Only stable
// for moderate gamma/beta ratios; used as the independent oracle.
double eesm_naive(const std::vector<double>& gamma, double beta_lin) {
    double sum = 0.0;
    for (double g : gamma) {
        sum += std::exp(-g / beta_lin);
    }
    return -beta_lin * std::log(sum / static_cast<double>(gamma.size()));
}

SinrVector random_vector(Rng& rng, std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) {
        x = rng.uniform(lo, hi);
    }
    return SinrVector(std::move(v));
}

} // namespace

TEST_CASE("unit conversions") {
    CHECK(db_to_linear(0.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(db_to_linear(10.0) == doctest::Approx(10.0).epsilon(1e-15));
    CHECK(db_to_linear(2.46) == doctest::Approx(1.762).epsilon(1e-3));
    CHECK(db_to_linear(2.46) == doctest::Approx(std::pow(10.0, 0.246)).epsilon(1e-15));
    CHECK(linear_to_db(1.0) == doctest::Approx(0.0));
    CHECK(linear_to_db(db_to_linear(-7.25)) == doctest::Approx(-7.25).epsilon(1e-12));
    CHECK_THROWS_AS(linear_to_db(0.0), std::domain_error);
    CHECK_THROWS_AS(linear_to_db(-3.0), std::domain_error);
}

TEST_CASE("sinr vector validation") {
    CHECK_THROWS_AS(SinrVector(std::vector<double>{}), std::domain_error);
    CHECK_THROWS_AS(SinrVector({1.0, 0.0}), std::domain_error);
    CHECK_THROWS_AS(SinrVector({1.0, -2.0}), std::domain_error);
    CHECK_THROWS_AS(SinrVector({1.0, std::nan("")}), std::domain_error);
    CHECK_THROWS_AS(SinrVector({1.0, std::numeric_limits<double>::infinity()}), std::domain_error);

    const SinrVector v({2.0, 8.0});
    CHECK(v.min_linear() == 2.0);
    CHECK(v.mean_linear() == 5.0);
    CHECK(v.scaled(2.0).values() == std::vector<double>{4.0, 16.0});
    CHECK_THROWS_AS(v.scaled(0.0), std::domain_error);

    const SinrVector vdb = SinrVector::from_db({0.0, 10.0});
    CHECK(vdb.values()[0] == doctest::Approx(1.0));
    CHECK(vdb.values()[1] == doctest::Approx(10.0));
}

TEST_CASE("beta and boost types") {
    CHECK(Beta::from_db(2.46).linear() == doctest::Approx(1.762).epsilon(1e-3));
    CHECK(Beta::from_linear(10.0).db() == doctest::Approx(10.0).epsilon(1e-12));
    CHECK_THROWS_AS(Beta::from_linear(0.0), std::domain_error);
    CHECK_THROWS_AS(Beta::from_linear(-1.0), std::domain_error);
    CHECK_THROWS_AS(Beta::from_db(std::nan("")), std::domain_error);
    CHECK(BoostRatio::from_db(3.0).linear() == doctest::Approx(1.9952623).epsilon(1e-6));
    CHECK_THROWS_AS(BoostRatio::from_linear(-2.0), std::domain_error);
    CHECK_THROWS_AS(EffectiveSinr(0.0), std::domain_error);
}

TEST_CASE("flat vector collapses to identity") {
    for (double x : {0.001, 1.0, 7.0, 1234.5}) {
        for (double beta_db : {-20.0, 0.0, 7.45, 30.0}) {
            const SinrVector flat(std::vector<double>(24, x));
            CHECK(eesm_effective_sinr(flat, Beta::from_db(beta_db)).linear() == x);
        }
    }
    // N=1 degenerate case
    CHECK(eesm_effective_sinr(SinrVector({5.0}), Beta::from_db(3.0)).linear() == 5.0);
}

TEST_CASE("two-tone value against direct evaluation") {
    const SinrVector gamma({1.0, 3.0});
    const double got = eesm_effective_sinr(gamma, Beta::from_linear(1.0)).linear();
    CHECK(got == doctest::Approx(1.566).epsilon(1e-3));
    CHECK(got == doctest::Approx(eesm_naive({1.0, 3.0}, 1.0)).epsilon(1e-12));
}

TEST_CASE("matches naive evaluation on moderate inputs") {
    Rng rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        const SinrVector gamma = random_vector(rng, 24, 0.2, 30.0);
        const double beta_lin = rng.uniform(0.5, 20.0);
        const double got = eesm_effective_sinr(gamma, Beta::from_linear(beta_lin)).linear();
        CHECK(got == doctest::Approx(eesm_naive(gamma.values(), beta_lin)).epsilon(1e-12));
    }
}

TEST_CASE("bounds: min <= eesm <= mean, equality only when flat") {
    Rng rng(22);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.next_u64() % 720);
        const SinrVector gamma = random_vector(rng, n, 1e-3, 1e3);
        const double beta_lin = db_to_linear(rng.uniform(-30.0, 30.0));
        const double v = eesm_effective_sinr(gamma, Beta::from_linear(beta_lin)).linear();
        CHECK(v >= gamma.min_linear());
        CHECK(v <= gamma.mean_linear() * (1.0 + 1e-12));
    }
}

TEST_CASE("permutation invariance is exact") {
    Rng rng(33);
    std::vector<double> v(101);
    for (auto& x : v) {
        x = rng.uniform(0.01, 100.0);
    }
    const double base = eesm_effective_sinr(SinrVector(v), Beta::from_db(4.0)).linear();
    std::mt19937 shuffler(7);
    for (int rep = 0; rep < 10; ++rep) {
        std::shuffle(v.begin(), v.end(), shuffler);
        CHECK(eesm_effective_sinr(SinrVector(v), Beta::from_db(4.0)).linear() == base);
    }
}

TEST_CASE("monotone nondecreasing in beta") {
    Rng rng(44);
    for (int rep = 0; rep < 5; ++rep) {
        const SinrVector gamma = random_vector(rng, 48, 0.05, 50.0);
        double prev = -1.0;
        for (double beta_db = -40.0; beta_db <= 40.0; beta_db += 0.5) {
            const double v = eesm_effective_sinr(gamma, Beta::from_db(beta_db)).linear();
            CHECK(v >= prev);
            prev = v;
        }
    }
}

TEST_CASE("numerical stability across extreme gamma/beta ratios") {
    // gamma/beta ratios spanning 1e-6 .. 1e6
    const SinrVector gamma({1e-3, 1.0, 1e3});
    for (double beta_lin : {1e-3, 1.0, 1e3, 1e6}) {
        const double v = eesm_effective_sinr(gamma, Beta::from_linear(beta_lin)).linear();
        CHECK(std::isfinite(v));
        CHECK(v >= gamma.min_linear());
        CHECK(v <= gamma.mean_linear() * (1.0 + 1e-12));
    }
    // would overflow exp() without the shift; the non-minimum terms vanish
    // and the value collapses to min + beta*ln(N)
    const SinrVector big({1e5, 2e5, 1e6});
    const double v = eesm_effective_sinr(big, Beta::from_linear(1.0)).linear();
    CHECK(std::isfinite(v));
    CHECK(v == doctest::Approx(1e5 + std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("boosted evaluation and the scaling identity") {
    const SinrVector gamma({1.0, 3.0});

    SUBCASE("unit boost is the plain map") {
        CHECK(eesm_boosted(gamma, BoostRatio::from_linear(1.0), Beta::from_linear(1.0)).linear() ==
              eesm_effective_sinr(gamma, Beta::from_linear(1.0)).linear());
    }
    SUBCASE("flat vector scales through") {
        const SinrVector flat(std::vector<double>(24, 4.0));
        CHECK(eesm_boosted(flat, BoostRatio::from_linear(2.5), Beta::from_db(7.45)).linear() ==
              doctest::Approx(10.0).epsilon(1e-12));
    }
    SUBCASE("boost 2 equals 2x map at half beta") {
        const double lhs = eesm_boosted(gamma, BoostRatio::from_linear(2.0), Beta::from_linear(1.0)).linear();
        const double rhs = 2.0 * eesm_effective_sinr(gamma, Beta::from_linear(0.5)).linear();
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        CHECK(lhs == doctest::Approx(eesm_naive({2.0, 6.0}, 1.0)).epsilon(1e-12));
    }
    SUBCASE("identity holds for random boosts and betas") {
        Rng rng(55);
        for (int rep = 0; rep < 200; ++rep) {
            const SinrVector g = random_vector(rng, 24, 0.01, 20.0);
            const double b = rng.uniform(0.1, 100.0);
            const double beta = rng.uniform(0.1, 100.0);
            const double lhs = eesm_boosted(g, BoostRatio::from_linear(b), Beta::from_linear(beta)).linear();
            const double rhs = b * eesm_effective_sinr(g, Beta::from_linear(beta / b)).linear();
            CHECK(std::abs(lhs - rhs) / lhs <= 1e-12);
        }
    }
}

TEST_CASE("boosting does not commute with the map on selective channels") {
    Rng rng(66);
    const SinrVector gamma = random_vector(rng, 24, 0.1, 10.0);
    const double boosted_first =
        eesm_boosted(gamma, BoostRatio::from_linear(4.0), Beta::from_linear(1.0)).linear();
    const double scaled_after =
        4.0 * eesm_effective_sinr(gamma, Beta::from_linear(1.0)).linear();
    CHECK(std::abs(boosted_first - scaled_after) > 0.0);
}

TEST_CASE("beta curve sampling") {
    SUBCASE("flat input gives a constant curve") {
        const SinrVector flat(std::vector<double>(24, db_to_linear(10.0)));
        std::vector<double> grid;
        for (double b = -10.0; b <= 20.0; b += 1.0) {
            grid.push_back(b);
        }
        for (const auto& pt : eesm_beta_curve(flat, grid)) {
            CHECK(pt.eesm_db == doctest::Approx(10.0).epsilon(1e-12));
        }
    }
    SUBCASE("saturates at the mean for large beta, at the min for small") {
        Rng rng(77);
        const SinrVector gamma = random_vector(rng, 720, 0.5, 50.0);
        const std::vector<double> grid{-40.0, 0.0, 40.0};
        const auto curve = eesm_beta_curve(gamma, grid);
        CHECK(db_to_linear(curve.front().eesm_db) ==
              doctest::Approx(gamma.min_linear()).epsilon(0.01));
        CHECK(db_to_linear(curve.back().eesm_db) ==
              doctest::Approx(gamma.mean_linear()).epsilon(0.01));
    }
    SUBCASE("curve is nondecreasing") {
        Rng rng(88);
        const SinrVector gamma = random_vector(rng, 24, 0.05, 30.0);
        std::vector<double> grid;
        for (double b = -40.0; b <= 40.0; b += 0.1) {
            grid.push_back(b);
        }
        const auto curve = eesm_beta_curve(gamma, grid);
        for (std::size_t i = 1; i < curve.size(); ++i) {
            CHECK(curve[i].eesm_db >= curve[i - 1].eesm_db);
        }
    }
    SUBCASE("grid validation") {
        const SinrVector gamma({1.0, 2.0});
        CHECK_THROWS_AS(eesm_beta_curve(gamma, std::vector<double>{}), std::domain_error);
        CHECK_THROWS_AS(eesm_beta_curve(gamma, std::vector<double>{1.0, 1.0}), std::domain_error);
        CHECK_THROWS_AS(eesm_beta_curve(gamma, std::vector<double>{2.0, 1.0}), std::domain_error);
    }
}
