#include "doctest.h"
#include "pstat/simd.hpp"

#include <random>

using namespace pstat;

namespace {

std::vector<std::uint32_t> random_indices(std::size_t n, std::uint32_t order, std::mt19937_64& rng)
{
    std::uniform_int_distribution<std::uint32_t> d(0, order - 1);
    std::vector<std::uint32_t> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

} // namespace

TEST_CASE("root table matches direct exponentials")
{
    for (std::uint64_t order : {1ull, 2ull, 81ull, 15625ull, 5764801ull, 214358881ull}) {
        const RootTable t(order);
        for (std::uint64_t k = 0; k < order; k += 1 + order / 997) {
            const cplx z = t(k);
            const cplx ref = expi(static_cast<double>(k) / static_cast<double>(order));
            CHECK(std::abs(z - ref) < 1e-14);
        }
    }
}

TEST_CASE("scalar and avx2 kernels agree")
{
    std::mt19937_64 rng(7);
    if (!simd::avx2::compiled() || simd::detect_isa() != simd::Isa::avx2) {
        MESSAGE("avx2 unavailable; comparing scalar with itself");
    }
    for (std::uint64_t order : {3ull, 243ull, 59049ull, 4782969ull}) {
        const RootTable t(order);
        for (std::size_t n : {0, 1, 3, 7, 8, 9, 31, 1000, 4099}) {
            const auto idx = random_indices(n, static_cast<std::uint32_t>(order), rng);
            std::vector<double> w(n);
            std::uniform_real_distribution<double> u(-2.0, 2.0);
            for (auto& x : w) x = u(rng);

            const cplx s0 = simd::scalar::root_sum(idx, t);
            const cplx s1 = simd::avx2::root_sum(idx, t);
            CHECK(std::abs(s0 - s1) <= 1e-12 * (1.0 + static_cast<double>(n)));

            const cplx w0 = simd::scalar::weighted_root_sum(w, idx, t);
            const cplx w1 = simd::avx2::weighted_root_sum(w, idx, t);
            CHECK(std::abs(w0 - w1) <= 1e-12 * (1.0 + 2.0 * static_cast<double>(n)));

            auto a = idx, b = idx;
            const auto step = random_indices(n, static_cast<std::uint32_t>(order), rng);
            simd::scalar::advance_indices(a, step, static_cast<std::uint32_t>(order));
            simd::avx2::advance_indices(b, step, static_cast<std::uint32_t>(order));
            CHECK(a == b);
            for (std::size_t i = 0; i < n; ++i) CHECK(a[i] == (idx[i] + step[i]) % order);
        }
    }
}

TEST_CASE("dispatch can be forced")
{
    const simd::Isa before = simd::active_isa();
    CHECK(simd::set_isa(simd::Isa::scalar));
    CHECK(simd::active_isa() == simd::Isa::scalar);
    const RootTable t(9);
    const std::vector<std::uint32_t> all{0, 1, 2, 3, 4, 5, 6, 7, 8};
    CHECK(std::abs(simd::root_sum(all, t)) < 1e-12);
    if (simd::detect_isa() == simd::Isa::avx2) {
        CHECK(simd::set_isa(simd::Isa::avx2));
        CHECK(std::abs(simd::root_sum(all, t)) < 1e-12);
    }
    simd::set_isa(before);
    CHECK(simd::isa_name(simd::Isa::avx2) == "avx2");
}
