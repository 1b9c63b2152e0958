#include "doctest.h"
#include "pstat/phase.hpp"

#include <cmath>

using namespace pstat;

namespace {

double tol(const AnalyticPhase& f) { return 1e-8 * std::pow(static_cast<double>(f.modulus.p()), 0.5 * f.modulus.n()); }

} // namespace

TEST_CASE("direct sums of trivial phases")
{
    const PrimePowerModulus m(3, 4);
    const cplx zero = sum_direct(linear_phase(m, 0, 0));
    CHECK(std::abs(zero - cplx(54.0, 0.0)) < 1e-10);
    for (u64 p : {3, 5, 7})
        for (unsigned n = 2; n <= 5; ++n) CHECK(std::abs(sum_direct(linear_phase(PrimePowerModulus(p, n), 1, 0))) < 1e-9);
}

TEST_CASE("Kloosterman phase mod 3^4")
{
    const AnalyticPhase f = kloosterman_phase(PrimePowerModulus(3, 4), 1, 1);
    const cplx direct = sum_direct(f);
    // Frozen from an independent 54-term summation.
    CHECK(std::abs(direct - cplx(17.78381729058257, 0.0)) < 1e-9);
    CHECK(std::abs(sum_stationary(f) - direct) < 1e-9);
}

TEST_CASE("epsilon and quadratic Gauss sums")
{
    CHECK(epsilon_p(5) == cplx(1, 0));
    CHECK(epsilon_p(7) == cplx(0, 1));
    CHECK(std::abs(gauss_quadratic(1, 5) - cplx(std::sqrt(5.0), 0)) < 1e-12);
    CHECK(std::abs(gauss_quadratic(1, 7) - cplx(0, std::sqrt(7.0))) < 1e-12);
    for (u64 c = 1; c < 11; ++c) CHECK(std::abs(gauss_quadratic(c, 11) - gauss_quadratic_direct(c, 11)) < 1e-12);
    for (u64 p : {3, 5, 7, 13})
        for (u64 c = 1; c < p; ++c) CHECK(std::abs(gauss_quadratic(c, p) - gauss_quadratic_direct(c, p)) < 1e-12);
}

TEST_CASE("delta factor cases")
{
    CHECK(delta_factor(7, 4, 3, 2).value(7) == cplx(1, 0));
    const DeltaFactor sing = delta_factor(7, 3, 0, 14);
    CHECK(std::abs(sing.value(7) - cplx(std::sqrt(7.0), 0)) < 1e-12);
    CHECK(delta_factor(7, 3, 1, 7).zero);
    // Nonsingular odd case equals the normalized Gauss sum with a linear term.
    for (u64 p : {3, 5, 7})
        for (u64 d2 = 1; d2 < p; ++d2)
            for (u64 d1 = 0; d1 < p; ++d1) {
                cplx g = 0.0;
                for (u64 t = 0; t < p; ++t) {
                    const u64 e = (d2 * t % p * t % p * ((p + 1) / 2) + d1 * t) % p;
                    g += expi(static_cast<double>(e) / static_cast<double>(p));
                }
                g /= std::sqrt(static_cast<double>(p));
                CHECK(std::abs(delta_factor(p, 3, d1, d2).value(p) - g) < 1e-12);
            }
}

TEST_CASE("stationary phase matches direct sums on small moduli")
{
    for (u64 p : {3, 5, 7})
        for (unsigned n = 2; n <= 5; ++n) {
            const PrimePowerModulus m(p, n);
            const std::vector<AnalyticPhase> phases{
                linear_phase(m, static_cast<i64>(m.rt_ceil()), 2), linear_phase(m, 1, 0),
                quadratic_phase(m, 1, 1, 0), quadratic_phase(m, static_cast<i64>(p), 0, 0),
                kloosterman_phase(m, 1, 1), kloosterman_phase(m, 2, static_cast<i64>(p) + 3),
                postnikov_log_phase(m, 1, 1, 1), postnikov_log_phase(m, 3, 2, 2),
                postnikov_log_phase(m, static_cast<i64>(p) + 1, 1, 0)};
            for (const auto& f : phases) {
                const cplx direct = sum_direct(f);
                CHECK_MESSAGE(std::abs(sum_stationary(f) - direct) <= tol(f), f.name);
                StationaryOptions raw;
                raw.refine = false;
                CHECK_MESSAGE(std::abs(sum_stationary(f, raw) - direct) <= tol(f), f.name);
                StationaryOptions moved;
                moved.representative_seed = 99;
                moved.refine = false;
                CHECK_MESSAGE(std::abs(sum_stationary(f, moved) - direct) <= tol(f), f.name);
                StationaryOptions full;
                full.full_scan = true;
                CHECK_MESSAGE(std::abs(sum_stationary(f, full) - direct) <= tol(f), f.name);
                CHECK(std::abs(direct) <= static_cast<double>(m.phi()) + 1e-9);
                CHECK_MESSAGE(check_hypotheses(f).ok(), f.name);
            }
        }
}

TEST_CASE("localized sums")
{
    for (u64 p : {3, 5})
        for (unsigned n = 2; n <= 6; ++n) {
            const AnalyticPhase f = kloosterman_phase(PrimePowerModulus(p, n), 1, 3);
            CHECK(std::abs(sum_localized(f, (n + 1) / 2) - sum_direct(f)) <= tol(f));
        }
}

TEST_CASE("vanishing without stationary points")
{
    // f' = c - m xbar^2 is never 0 mod p when c m is a non-residue.
    for (u64 p : {5, 7, 11}) {
        u64 c = 2;
        while (legendre(c, p) != -1) ++c;
        const AnalyticPhase f = kloosterman_phase(PrimePowerModulus(p, 4), static_cast<i64>(c), 1);
        CHECK(stationary_points(f).points.empty());
        CHECK(std::abs(sum_stationary(f)) == 0.0);
        CHECK(std::abs(sum_direct(f)) < 1e-9);
    }
}

TEST_CASE("domains restricted to residue classes")
{
    const PrimePowerModulus m(5, 4);
    AnalyticPhase f = kloosterman_phase(m, 1, 1);
    f.domain = PhaseDomain::legendre_class(5, 1);
    CHECK(std::abs(sum_stationary(f) - sum_direct(f)) <= tol(f));
    f.domain = PhaseDomain::classes(5, 3, [](u64 c) { return c % 2 == 0; });
    CHECK_THROWS_AS(sum_stationary(f), HypothesisError);
}

TEST_CASE("hypotheses must be declared")
{
    AnalyticPhase f = quadratic_phase(PrimePowerModulus(5, 3), 1, 0, 0);
    f.hypotheses_declared = false;
    CHECK_THROWS_AS(sum_stationary(f), HypothesisError);
    f.hypotheses_declared = true;
    f.d1 = [](u64) { return u64{0}; };
    CHECK_FALSE(check_hypotheses(f).ok());
}

TEST_CASE("unit inverter")
{
    for (u64 p : {3, 7, 11})
        for (unsigned n : {1u, 2u, 5u, 8u}) {
            const PrimePowerModulus m(p, n);
            const UnitInverter inv(m);
            const ModRing r(m.q());
            for (u64 x = 1; x < m.q(); x += 1 + m.q() / 500)
                if (x % p) CHECK(r.mul(x, inv(x)) == 1);
        }
}

TEST_CASE("bundled suite size")
{
    const auto suite = bundled_phase_suite();
    CHECK(suite.size() >= 50);
}
