#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ctdvs/energy.hpp"

using namespace ctdvs;

TEST_CASE("quadratic energy model values")
{
    CHECK(energy_quadratic(1.0) == 1.0);
    CHECK(energy_quadratic(0.74) == Catch::Approx(0.5476).epsilon(1e-14));
    CHECK(energy_quadratic(0.0) == 0.0);
}

TEST_CASE("quadratic energy is monotone and convex")
{
    for (double a = 0.0; a < 0.99; a += 0.01) {
        CHECK(energy_quadratic(a) < energy_quadratic(a + 0.01));
        const double mid = energy_quadratic(a + 0.005);
        CHECK(mid <= 0.5 * (energy_quadratic(a) + energy_quadratic(a + 0.01)) + 1e-15);
    }
}

TEST_CASE("CMOS energy collapses to the cubic law at zero threshold")
{
    CmosParams p;
    p.v_threshold = 0.0;
    p.v_max = 1.8;
    for (double a = 0.05; a <= 1.0; a += 0.05)
        CHECK(energy_cmos_normalized(p, a) ==
              Catch::Approx(energy_quadratic(a) * a).margin(1e-12));
}

TEST_CASE("CMOS bracket value at a 0.2 threshold ratio")
{
    // Solve v_t = 0.2 * (v_max - v_t)^2 / v_max for v_max = 1.8 so the
    // threshold-to-v0 ratio is exactly the probed value.
    CmosParams p;
    p.v_max = 1.8;
    p.v_threshold = (12.6 - std::sqrt(145.8)) / 2.0;
    const double ratio = p.v_threshold / p.v0();
    REQUIRE(ratio == Catch::Approx(0.2).epsilon(1e-9));
    const double lead =
        p.switched_capacitance * p.v0() * p.v0() * p.sample_interval_s * p.f_max_hz;
    const double bracket_sq = energy_cmos(p, 1.0) / lead;
    const double expect = std::pow(ratio + 0.5 + std::sqrt(ratio + 0.25), 2.0);
    CHECK(bracket_sq == Catch::Approx(expect).epsilon(1e-12));
    CHECK(bracket_sq == Catch::Approx(1.87915).epsilon(1e-4));
}

TEST_CASE("CMOS energy is strictly increasing in speed")
{
    CmosParams flavors[3];
    flavors[0].v_max = 1.8;
    flavors[0].v_threshold = 0.36;
    flavors[1].v_max = 3.3;
    flavors[1].v_threshold = 0.7;
    flavors[2].v_max = 1.0;
    flavors[2].v_threshold = 0.0;
    for (const auto& p : flavors) {
        double prev = energy_cmos(p, 1e-3);
        for (double a = 2e-3; a <= 1.0; a += 1e-3) {
            const double e = energy_cmos(p, a);
            CHECK(e > prev);
            prev = e;
        }
    }
}

TEST_CASE("ledger average of a constant speed")
{
    EnergyLedger ledger{EnergyModel{}};
    ledger.add(3.7, 0.74);
    CHECK(ledger_average(ledger) == Catch::Approx(0.5476).epsilon(1e-14));
}

TEST_CASE("ledger average of two equal segments at the extremes")
{
    EnergyLedger ledger{EnergyModel{}};
    ledger.add(1.0, 0.0);
    ledger.add(1.0, 1.0);
    CHECK(ledger_average(ledger) == Catch::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("ledger average of the ideal settled feedback run")
{
    // Closed-form steady state per block: alpha = lambda * workload / setpoint.
    const double omega_hat = 37.0 / 75.0;
    const double u_r = 0.95;
    const double lambdas[] = {0.8, 1.0, 0.5, 1.5};
    EnergyLedger ledger{EnergyModel{}};
    long double expect = 0.0L;
    for (double l : lambdas) {
        const double a = l * omega_hat / u_r;
        ledger.add(3.0, a);
        expect += static_cast<long double>(a) * a * 3.0L;
    }
    expect /= 12.0L;
    CHECK(ledger_average(ledger) == Catch::Approx(static_cast<double>(expect)).epsilon(1e-14));
    CHECK(ledger_average(ledger) == Catch::Approx(0.279).margin(5e-4));
}

TEST_CASE("ledger average is invariant under segment splitting")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dur(0.01, 5.0);
    std::uniform_real_distribution<double> alpha(0.1, 1.0);
    std::uniform_int_distribution<int> parts(1, 7);
    for (int k = 0; k < 30; ++k) {
        EnergyLedger whole{EnergyModel{}};
        EnergyLedger split{EnergyModel{}};
        for (int seg = 0; seg < 5; ++seg) {
            const double d = dur(rng);
            const double a = alpha(rng);
            whole.add(d, a);
            const int n = parts(rng);
            for (int i = 0; i < n; ++i)
                split.add(d / n, a);
        }
        CHECK(ledger_average(split) == Catch::Approx(ledger_average(whole)).epsilon(1e-12));
        CHECK(ledger_average(whole) >= 0.1 * 0.1);
        CHECK(ledger_average(whole) <= 1.0);
    }
}

TEST_CASE("empty ledger has no average")
{
    EnergyLedger ledger{EnergyModel{}};
    CHECK_THROWS_AS(ledger_average(ledger), ValidationError);
}

TEST_CASE("CMOS parameter validation")
{
    CmosParams p;
    p.v_threshold = 2.0;
    p.v_max = 1.8;
    CHECK_THROWS_AS(validate(p), ValidationError);
}
