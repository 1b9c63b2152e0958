#include "doctest.h"
#include "pstat/characters.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

using namespace pstat;

TEST_CASE("generators")
{
    CHECK(find_generator(3, 2) == 2);
    CHECK(find_generator(5, 1) == 2);
    for (u64 p : {3, 5, 7, 11})
        for (unsigned n = 1; n <= 4; ++n) {
            const PrimePowerModulus m(p, n);
            const ModRing r(m.q());
            const u64 g = find_generator(p, n);
            u64 order = 1, x = g;
            while (x != 1) {
                x = r.mul(x, g);
                ++order;
            }
            CHECK(order == m.phi());
            for (u64 h = 2; h < g; ++h) {
                if (h % p == 0) continue;
                u64 o = 1, y = h;
                while (y != 1) {
                    y = r.mul(y, h);
                    ++o;
                }
                CHECK(o < m.phi());
            }
        }
}

TEST_CASE("discrete log table")
{
    const auto t = UnitGroupTable::get(7, 4);
    const ModRing r(t->q());
    for (u64 u = 1; u < t->q(); ++u) {
        if (u % 7 == 0) {
            CHECK(t->dlog_table()[u] == UnitGroupTable::kNotUnit);
            continue;
        }
        CHECK(r.pow(t->generator(), t->dlog(u)) == u);
        CHECK(t->power(t->dlog(u)) == u);
    }
}

TEST_CASE("character counts and conductors")
{
    const auto t9 = UnitGroupTable::get(3, 2);
    const auto all = characters_mod(t9);
    CHECK(all.size() == 6);
    CHECK(primitive_characters(t9).size() == 4);
    CHECK(all[0].conductor() == 1);
    for (u64 p : {5, 7, 11}) CHECK(primitive_characters(UnitGroupTable::get(p, 1)).size() == p - 2);

    // Conductor p^m iff trivial on 1 + p^m Z and not on 1 + p^(m-1) Z.
    for (u64 p : {3, 5}) {
        const auto t = UnitGroupTable::get(p, 4);
        for (const auto& chi : characters_mod(t)) {
            auto trivial_on = [&](unsigned m) {
                for (u64 x = 1; x < t->q(); x += ipow(p, m))
                    if (chi.phase(x) != 0) return false;
                return true;
            };
            const unsigned m = chi.conductor_exponent();
            CHECK(trivial_on(std::max(m, 1u)));
            if (m >= 2) CHECK_FALSE(trivial_on(m - 1));
            if (m == 1) {
                bool trivial_on_units = true;
                for (u64 x = 1; x < t->q(); ++x)
                    if (x % p && chi.phase(x) != 0) trivial_on_units = false;
                CHECK_FALSE(trivial_on_units);
            }
        }
    }
}

TEST_CASE("values, conjugation, products and parity")
{
    const auto t = UnitGroupTable::get(5, 3);
    for (const auto& chi : characters_mod(t)) {
        CHECK(std::abs(chi(-1) - cplx(chi.parity() ? -1.0 : 1.0, 0.0)) < 1e-12);
        CHECK(std::abs(chi(10)) == 0.0);
        for (i64 x : {1, 2, 3, 7, 124}) {
            CHECK(std::abs(chi.conj()(x) - std::conj(chi(x))) < 1e-12);
            CHECK(std::abs(chi(x) * chi(x + 1) - chi(x * (x + 1))) < 1e-12);
        }
    }
    const DirichletCharacter a(t, 7), b(t, 11);
    for (i64 x : {1, 2, 3, 4, 6, 99}) CHECK(std::abs((a * b)(x) - a(x) * b(x)) < 1e-12);
}

TEST_CASE("inducer and lift")
{
    for (u64 p : {3, 5, 7}) {
        const auto t = UnitGroupTable::get(p, 4);
        for (const auto& chi : characters_mod(t)) {
            if (chi.principal()) continue;
            const DirichletCharacter ind = chi.inducer();
            CHECK(ind.primitive());
            CHECK(ind.q() == chi.conductor());
            for (u64 x = 1; x < t->q(); x += 3)
                if (x % p) CHECK(std::abs(chi(static_cast<i64>(x)) - ind(static_cast<i64>(x))) < 1e-12);
            const DirichletCharacter back = ind.lift_to(t);
            CHECK(back.index() == chi.index());
        }
    }
}

TEST_CASE("Postnikov unit mod 9")
{
    const auto t = UnitGroupTable::get(3, 2);
    CHECK(t->log_table()[1] % 9 == 3);
    int found = 0;
    for (const auto& chi : primitive_characters(t)) {
        if (std::abs(chi(4) - expi(1.0 / 3.0)) > 1e-12) continue;
        ++found;
        CHECK(chi.postnikov_A() % 3 == 1);
    }
    CHECK(found == 2);
    CHECK_THROWS_AS(DirichletCharacter(t, 0).postnikov_A(), DomainError);
    CHECK_THROWS_AS(DirichletCharacter(t, 3).postnikov_A(), DomainError);
}

TEST_CASE("Postnikov uniqueness by brute force mod 5^4")
{
    const auto t = UnitGroupTable::get(5, 4);
    CHECK(postnikov_tables_consistent(*t));
    for (const auto& chi : primitive_characters(t)) {
        const PostnikovCheck c = verify_postnikov(chi, 1, true);
        CHECK(c.unit);
        CHECK(c.violations == 0);
        CHECK(c.solutions == 1);
    }
}

TEST_CASE("Postnikov formula against complex values")
{
    for (u64 p : {3, 5, 7}) {
        const auto t = UnitGroupTable::get(p, 3);
        const auto& L = t->log_table();
        for (const auto& chi : primitive_characters(t)) {
            const u64 A = chi.postnikov_A();
            for (u64 k = 0; k < L.size(); ++k) {
                const cplx lhs = chi(static_cast<i64>(1 + k * p));
                const cplx rhs = expi(static_cast<double>(A * L[k] % t->q()) / static_cast<double>(t->q()));
                CHECK(std::abs(lhs - rhs) < 1e-10);
            }
        }
    }
}

TEST_CASE("twist additivity")
{
    for (u64 p : {3, 5}) {
        const unsigned n = 4;
        const auto t = UnitGroupTable::get(p, n);
        const u64 pn1 = ipow(p, n - 1);
        for (unsigned m = 1; m <= n; ++m) {
            const auto tm = UnitGroupTable::get(p, m);
            for (const auto& psi : primitive_characters(tm)) {
                const DirichletCharacter lifted = psi.lift_to(t);
                for (const auto& chi : primitive_characters(t)) {
                    const DirichletCharacter prod = chi * lifted;
                    if (!prod.primitive()) continue;
                    const u64 shift = m >= 2 ? psi.postnikov_A() * ipow(p, n - m) % pn1 : 0;
                    CHECK(prod.postnikov_A() == (chi.postnikov_A() + shift) % pn1);
                }
            }
        }
    }
}

TEST_CASE("orthogonality")
{
    const auto t9 = UnitGroupTable::get(3, 2);
    CHECK(std::abs(orthogonality_sum(*t9, 4, 4) - cplx(6, 0)) < 1e-12);
    CHECK(std::abs(orthogonality_sum(*t9, 2, 4)) < 1e-10);
    const auto t27 = UnitGroupTable::get(3, 3);
    for (u64 u = 1; u < 27; ++u)
        for (u64 v = 1; v < 27; ++v) {
            if (u % 3 == 0 || v % 3 == 0) continue;
            const double s = std::abs(orthogonality_sum(*t27, u, v));
            CHECK((s < 1e-10 || std::abs(s - 18.0) < 1e-10));
            CHECK((s > 1.0) == (u == v));
        }
}

TEST_CASE("delta_q")
{
    const auto t = UnitGroupTable::get(5, 4);
    const auto prim = primitive_characters(t);
    for (const auto& a : prim) CHECK(delta_q(a, a) == 125);
    for (const auto& a : prim)
        for (const auto& b : prim) {
            const u64 d = delta_q(a, b);
            CHECK(125 % d == 0);
            CHECK((a.postnikov_A() + 125 - b.postnikov_A()) % d == 0);
        }
}

TEST_CASE("binary cache round trip")
{
    const auto dir = std::filesystem::temp_directory_path() / "pstat_char_cache_test";
    std::filesystem::remove_all(dir);
    const UnitGroupTable fresh(7, 3);
    fresh.save(dir / "t.bin");
    const auto loaded = UnitGroupTable::load(dir / "t.bin", 7, 3);
    REQUIRE(loaded);
    CHECK(loaded->dlog_table() == fresh.dlog_table());
    CHECK(loaded->generator() == fresh.generator());
    CHECK_FALSE(UnitGroupTable::load(dir / "t.bin", 7, 4));
    CHECK_FALSE(UnitGroupTable::load(dir / "missing.bin", 7, 3));

    // A stale version stamp is ignored.
    {
        std::fstream f(dir / "t.bin", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(8);
        const std::uint32_t bogus = UnitGroupTable::kCacheVersion + 1;
        f.write(reinterpret_cast<const char*>(&bogus), 4);
    }
    CHECK_FALSE(UnitGroupTable::load(dir / "t.bin", 7, 3));
    std::filesystem::remove_all(dir);
}
