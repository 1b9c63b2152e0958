#include "doctest.h"
#include "pstat/tracefn.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace pstat;

namespace {

std::vector<DirichletCharacter> some_primitive(u64 p, unsigned n, std::size_t count)
{
    auto all = primitive_characters(UnitGroupTable::get(p, n));
    std::vector<DirichletCharacter> out;
    const std::size_t stride = std::max<std::size_t>(1, all.size() / count);
    for (std::size_t i = 0; i < all.size() && out.size() < count; i += stride) out.push_back(all[i]);
    return out;
}

} // namespace

TEST_CASE("normalized and general forms agree")
{
    for (const auto& chi : some_primitive(5, 4, 6))
        for (unsigned t = 1; t < 4; ++t)
            for (i64 m : {1, 2, 3, 7, -4, 24}) {
                const cplx a = kchi_m_direct(chi, m, t);
                CHECK(std::abs(a - kchi_direct(chi, 1, m, t)) < 1e-10);
                CHECK(std::abs(a - kchi_direct(chi, m, 1, t)) < 1e-10);
            }
}

TEST_CASE("DFT forms match term-by-term sums")
{
    for (const auto& chi : some_primitive(3, 5, 4))
        for (unsigned t = 1; t < 5; ++t) {
            const u64 qt = ipow(3, t);
            const auto all_m = kchi_m_direct_all(chi, t);
            for (i64 h : {0, 1, 2, 3, 9, 10}) {
                const auto all_j = kchi_direct_all_j(chi, h, t);
                for (u64 j = 0; j < qt; ++j) CHECK(std::abs(all_j[j] - kchi_direct(chi, static_cast<i64>(j), h, t)) < 1e-10);
            }
            for (u64 m = 1; m < qt; ++m)
                if (m % 3) CHECK(std::abs(all_m[m] - kchi_m_direct(chi, static_cast<i64>(m), t)) < 1e-10);
        }
}

TEST_CASE("degenerate values of K(0, h)")
{
    for (u64 p : {3, 5, 7})
        for (const auto& chi : some_primitive(p, 4, 3))
            for (unsigned t = 1; t < 4; ++t) {
                const u64 qt = ipow(p, t);
                const double root = std::sqrt(static_cast<double>(qt));
                CHECK(std::abs(kchi_direct(chi, 0, static_cast<i64>(qt), t) - cplx(root * (1.0 - 1.0 / p), 0)) < 1e-10);
                CHECK(std::abs(kchi_direct(chi, 0, 0, t) - cplx(root * (1.0 - 1.0 / p), 0)) < 1e-10);
                const i64 h = static_cast<i64>(qt / p) * 2;
                if (h % static_cast<i64>(qt) != 0 && (2 % p) != 0)
                    CHECK(std::abs(kchi_direct(chi, 0, h, t) - cplx(-root / p, 0)) < 1e-10);
            }
}

TEST_CASE("reduction tags")
{
    // eta_j != eta_h with eta_j + eta_h != 2t - 1 and min < t: zero case.
    const KchiReduction z = kchi_reduce(5, 5, 1, 3, 5);
    CHECK(z.kind == KchiCase::zero);
    const KchiReduction r = kchi_reduce(5, 2, 3, 3, 5);
    CHECK(r.kind == KchiCase::reduce);
    CHECK(r.m_reduced == 6);
    CHECK(r.t_reduced == 3);
    CHECK(kchi_reduce(5, 0, 0, 3, 5).kind == KchiCase::full);
    CHECK(kchi_reduce(5, 0, 25, 3, 5).kind == KchiCase::minus_over_p);
    CHECK(kchi_reduce(5, 25, 0, 3, 5).kind == KchiCase::minus_over_p);
    const KchiReduction r2 = kchi_reduce(3, 18, 9 * 4, 4, 5);
    CHECK(r2.kind == KchiCase::reduce);
    CHECK(r2.eta == 2);
    CHECK(r2.t_reduced == 2);
    CHECK(r2.m_reduced == 8 % 9);
}

TEST_CASE("exhaustive reduction sweep mod 3^5")
{
    const unsigned n = 5;
    for (const auto& chi : some_primitive(3, n, 4))
        for (unsigned t = 1; t < n; ++t) {
            const u64 qt = ipow(3, t);
            for (u64 h = 0; h < qt; ++h) {
                const auto row = kchi_direct_all_j(chi, static_cast<i64>(h), t);
                for (u64 j = 0; j < qt; ++j) {
                    const cplx expect = kchi_via_reduction(chi, static_cast<i64>(j), static_cast<i64>(h), t);
                    CHECK_MESSAGE(std::abs(row[j] - expect) < 1e-9, "t=" << t << " j=" << j << " h=" << h);
                }
            }
        }
}

TEST_CASE("closed form examples")
{
    const auto t81 = UnitGroupTable::get(3, 4);
    for (const auto& chi : primitive_characters(t81)) {
        const OscillatorySplit s = kchi_closed(chi, 1, 3);
        CHECK(std::abs(s.value() - kchi_m_direct(chi, 1, 3)) < 1e-9);
    }
    const auto t5 = UnitGroupTable::get(5, 5);
    for (const auto& chi : some_primitive(5, 5, 12))
        for (i64 m = 1; m < 125; ++m) {
            if (m % 5 == 0) continue;
            const OscillatorySplit s = kchi_closed(chi, m, 3);
            CHECK(std::abs(s.value() - kchi_m_direct(chi, m, 3)) < 1e-9);
            if (legendre(s.A % 5 * (m % 5), 5) == -1) {
                CHECK_FALSE(s.supported);
                CHECK(s.kplus.zero);
                CHECK(s.kminus.zero);
            }
        }
    // Even t: both pieces are unimodular.
    for (const auto& chi : some_primitive(7, 4, 5))
        for (i64 m = 1; m < 49; ++m) {
            if (m % 7 == 0) continue;
            const OscillatorySplit s = kchi_closed(chi, m, 2);
            if (!s.supported) continue;
            CHECK(std::abs(std::abs(s.kplus.value()) - 1.0) < 1e-12);
            CHECK(std::abs(std::abs(s.kminus.value()) - 1.0) < 1e-12);
        }
    CHECK_THROWS(kchi_closed(5, 4, 1, 1, 1, SqrtBranch(5)));
    CHECK_THROWS(kchi_closed(5, 4, 1, 10, 2, SqrtBranch(5)));
}

TEST_CASE("closed form through the stationary-phase engine")
{
    for (u64 p : {3, 5, 7})
        for (unsigned n = 3; n <= 5; ++n)
            for (const auto& chi : some_primitive(p, n, 3))
                for (unsigned t = 2; t < n; ++t) {
                    const u64 A = chi.postnikov_A();
                    const PrimePowerModulus mt(p, t);
                    for (i64 m : {1, 2, 3, 4, 6}) {
                        if (m % static_cast<i64>(p) == 0) continue;
                        const AnalyticPhase theta =
                            postnikov_log_phase(mt, static_cast<i64>(A % mt.q()), n - t, m);
                        const cplx via_phase = sum_stationary(theta) / std::sqrt(static_cast<double>(mt.q()));
                        CHECK(std::abs(via_phase - kchi_closed(chi, m, t).value()) < 1e-9);
                        CHECK(std::abs(sum_direct(theta) / std::sqrt(static_cast<double>(mt.q())) -
                                       kchi_m_direct(chi, m, t)) < 1e-9);
                    }
                }
}

TEST_CASE("table-driven closed form equals the reference path exactly")
{
    for (u64 p : {3, 5, 7})
        for (unsigned n = 3; n <= 5; ++n)
            for (unsigned t = 2; t < n; ++t) {
                const KchiClosedTables tab(p, n, t);
                const u64 qt = tab.qt();
                const u64 pn1 = ipow(p, n - 1);
                for (u64 A = 1; A < pn1; A += (p == 7 ? 5 : 1)) {
                    if (A % p == 0) continue;
                    for (u64 m = 1; m < qt; ++m) {
                        if (m % p == 0) continue;
                        const OscillatorySplit ref = kchi_closed(p, n, A, static_cast<i64>(m), t, SqrtBranch(p));
                        const auto fast = tab.eval(A, m);
                        CHECK(fast.first == ref.kplus);
                        CHECK(fast.second == ref.kminus);
                        CHECK(tab.check_stationary(A, m));
                        if (ref.supported) {
                            const ModRing r(qt);
                            CHECK(r.mul(ref.s_plus, ref.s_minus) == r.neg(ref.mu));
                            CHECK(r.add(ref.s_plus, ref.s_minus) == r.mul(ref.mu, ipow(p, n - t) % qt));
                        }
                    }
                }
            }
}

TEST_CASE("batched closed form and direct sweep")
{
    for (auto [p, n, t] : {std::tuple<u64, unsigned, unsigned>{3, 5, 3}, {5, 4, 2}, {7, 4, 3}}) {
        const KchiClosedTables tab(p, n, t);
        const auto table = UnitGroupTable::get(p, n);
        const KchiDirectSweep sweep(table, t);
        for (const auto& chi : some_primitive(p, n, 6)) {
            const u64 A = chi.postnikov_A();
            const auto closed = tab.values(A);
            const auto direct = sweep(chi.index());
            const auto reference = kchi_m_direct_all(chi, t);
            for (u64 m = 1; m < tab.qt(); ++m) {
                if (m % p == 0) continue;
                const auto k = tab.eval(A, m);
                CHECK(std::abs(closed[m] - (k.first.value() + k.second.value())) < 1e-12);
                CHECK(std::abs(direct[m] - reference[m]) < 1e-12);
                CHECK(std::abs(closed[m] - direct[m]) < 1e-9);
            }
        }
    }
}

TEST_CASE("products: indicator, vanishing, square-root size, periodicity")
{
    for (auto [p, n] : {std::pair<u64, unsigned>{3, 5}, {5, 4}}) {
        const auto prim = some_primitive(p, n, 14);
        for (unsigned t = 2; t < n; ++t) {
            const KchiClosedTables tab(p, n, t);
            for (const auto& a : prim)
                for (const auto& b : prim)
                    for (int sign : {1, -1}) {
                        const u64 A = a.postnikov_A(), B = b.postnikov_A();
                        const PeriodicityReport per = periodicity_check(tab, A, B, sign);
                        CHECK(per.claimed_ok);
                        const u64 Q = per.claimed;
                        if (Q == 1) {
                            for (u64 m = 1; m < tab.qt(); ++m) {
                                if (m % p == 0) continue;
                                const auto k1 = tab.eval(A, m), k2 = tab.eval(B, m);
                                const UnitPhase prod =
                                    (sign > 0 ? k1.first : k1.second) * (sign > 0 ? k2.first : k2.second).conj();
                                const double ind = legendre(A % p * (m % p), p) == 1 ? 1.0 : 0.0;
                                CHECK(std::abs(prod.value() - cplx(ind, 0)) < 1e-12);
                            }
                            continue;
                        }
                        if (A % p != B % p) {
                            if (legendre(A % p, p) == legendre(B % p, p)) CHECK(per.smallest == tab.qt());
                            else CHECK(per.smallest == 1); // disjoint supports: product vanishes identically
                        }
                        const auto sums = product_sums(tab, A, B, sign);
                        for (u64 v = 0; v < Q; ++v) {
                            if (Q >= p * p && v % p == 0) CHECK(std::abs(sums[v]) < 1e-8);
                            CHECK(std::abs(sums[v]) / std::sqrt(static_cast<double>(Q)) <= 4.0);
                        }
                    }
        }
    }
}

TEST_CASE("same character: constant on Legendre classes")
{
    const auto prim = some_primitive(5, 4, 5);
    const KchiClosedTables tab(5, 4, 3);
    for (const auto& a : prim) {
        const u64 A = a.postnikov_A();
        CHECK(product_modulus(5, 4, A, A, 3) == 1);
        const auto f = product_table(tab, A, A, 1);
        for (u64 m = 1; m < 125; ++m)
            if (m % 5) CHECK(f[m] == f[m % 5]);
    }
}

TEST_CASE("product_sum entry point")
{
    const auto prim = some_primitive(3, 5, 6);
    for (const auto& a : prim)
        for (const auto& b : prim) {
            const u64 Q = product_modulus(3, 5, a.postnikov_A(), b.postnikov_A(), 3);
            const KchiClosedTables tab(3, 5, 3);
            if (Q == 1) {
                CHECK(std::abs(std::abs(product_sum(a, b, 3, 1, 1)) - (legendre(a.postnikov_A(), 3) == 1 ? 1.0 : 0.0)) < 1e-12);
                continue;
            }
            const auto all = product_sums(tab, a.postnikov_A(), b.postnikov_A(), -1);
            CHECK(std::abs(product_sum(a, b, 3, 2, -1) - all[2 % Q]) < 1e-12);
        }
}

TEST_CASE("completion inequality")
{
    {
        const std::vector<cplx> ones(27, 1.0);
        const CompletionBound c = complete_incomplete_sum(ones, 10);
        CHECK(std::abs(c.partial - cplx(10, 0)) < 1e-12);
        CHECK(c.bound >= 10.0 - 1e-9);
        CHECK(c.holds());
    }
    {
        std::vector<cplx> f(81);
        for (u64 m = 0; m < 81; ++m) f[m] = expi(static_cast<double>(m) / 81.0);
        for (u64 M : {1, 5, 40, 80, 200}) {
            const CompletionBound c = complete_incomplete_sum(f, M);
            CHECK(std::abs(c.partial) <= 81.0 + 1e-9);
            CHECK(c.holds());
        }
    }
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<cplx> f(81);
        for (auto& z : f) z = expi(u(rng));
        CHECK(complete_incomplete_sum(f, 30).holds());
    }
}

TEST_CASE("emitters")
{
    const std::vector<TraceRow> rows{{3, 5, 27, 2, "reduce", 1.5, 0.5}};
    std::ostringstream csv, json;
    write_trace_csv(csv, rows);
    write_trace_json(json, rows);
    CHECK(csv.str() == "p,n,qtilde,arg,case,abs_value,ratio\n3,5,27,2,reduce,1.5,0.5\n");
    CHECK(json.str() == "{\"p\":3,\"n\":5,\"qtilde\":27,\"arg\":2,\"case\":\"reduce\",\"abs_value\":1.5,\"ratio\":0.5}\n");
}
