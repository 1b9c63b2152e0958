// Compiled with -mavx2 -mfma; only reached through the runtime dispatcher.

#include "pstat/simd.hpp"

#include <stdexcept>

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define PSTAT_HAVE_AVX2 1
#else
#define PSTAT_HAVE_AVX2 0
#endif

namespace pstat::simd::avx2 {

#if PSTAT_HAVE_AVX2

bool compiled() { return true; }

namespace {

inline double hsum(__m256d v)
{
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

struct Lookup {
    __m256d re, im;
};

inline Lookup lookup4(const std::uint32_t* p, __m128i shift, __m128i mask, const RootTable& t)
{
    const __m128i k = _mm_loadu_si128(reinterpret_cast<const __m128i*>(p));
    const __m128i h = _mm_srl_epi32(k, shift);
    const __m128i l = _mm_and_si128(k, mask);
    const __m256d hr = _mm256_i32gather_pd(t.hi_re(), h, 8);
    const __m256d hi = _mm256_i32gather_pd(t.hi_im(), h, 8);
    const __m256d lr = _mm256_i32gather_pd(t.lo_re(), l, 8);
    const __m256d li = _mm256_i32gather_pd(t.lo_im(), l, 8);
    return {_mm256_fmsub_pd(hr, lr, _mm256_mul_pd(hi, li)), _mm256_fmadd_pd(hr, li, _mm256_mul_pd(hi, lr))};
}

} // namespace

cplx root_sum(std::span<const std::uint32_t> idx, const RootTable& t)
{
    const __m128i shift = _mm_cvtsi32_si128(static_cast<int>(t.shift()));
    const __m128i mask = _mm_set1_epi32(static_cast<int>(t.low_mask()));
    __m256d re0 = _mm256_setzero_pd(), im0 = _mm256_setzero_pd();
    __m256d re1 = _mm256_setzero_pd(), im1 = _mm256_setzero_pd();
    const std::size_t n = idx.size();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const Lookup a = lookup4(idx.data() + i, shift, mask, t);
        const Lookup b = lookup4(idx.data() + i + 4, shift, mask, t);
        re0 = _mm256_add_pd(re0, a.re);
        im0 = _mm256_add_pd(im0, a.im);
        re1 = _mm256_add_pd(re1, b.re);
        im1 = _mm256_add_pd(im1, b.im);
    }
    for (; i + 4 <= n; i += 4) {
        const Lookup a = lookup4(idx.data() + i, shift, mask, t);
        re0 = _mm256_add_pd(re0, a.re);
        im0 = _mm256_add_pd(im0, a.im);
    }
    double re = hsum(_mm256_add_pd(re0, re1)), im = hsum(_mm256_add_pd(im0, im1));
    const cplx tail = scalar::root_sum(idx.subspan(i), t);
    return {re + tail.real(), im + tail.imag()};
}

cplx weighted_root_sum(std::span<const double> w, std::span<const std::uint32_t> idx, const RootTable& t)
{
    if (w.size() != idx.size()) throw std::invalid_argument("weighted_root_sum: size mismatch");
    const __m128i shift = _mm_cvtsi32_si128(static_cast<int>(t.shift()));
    const __m128i mask = _mm_set1_epi32(static_cast<int>(t.low_mask()));
    __m256d re0 = _mm256_setzero_pd(), im0 = _mm256_setzero_pd();
    __m256d re1 = _mm256_setzero_pd(), im1 = _mm256_setzero_pd();
    const std::size_t n = idx.size();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const Lookup a = lookup4(idx.data() + i, shift, mask, t);
        const Lookup b = lookup4(idx.data() + i + 4, shift, mask, t);
        const __m256d wa = _mm256_loadu_pd(w.data() + i);
        const __m256d wb = _mm256_loadu_pd(w.data() + i + 4);
        re0 = _mm256_fmadd_pd(wa, a.re, re0);
        im0 = _mm256_fmadd_pd(wa, a.im, im0);
        re1 = _mm256_fmadd_pd(wb, b.re, re1);
        im1 = _mm256_fmadd_pd(wb, b.im, im1);
    }
    for (; i + 4 <= n; i += 4) {
        const Lookup a = lookup4(idx.data() + i, shift, mask, t);
        const __m256d wa = _mm256_loadu_pd(w.data() + i);
        re0 = _mm256_fmadd_pd(wa, a.re, re0);
        im0 = _mm256_fmadd_pd(wa, a.im, im0);
    }
    double re = hsum(_mm256_add_pd(re0, re1)), im = hsum(_mm256_add_pd(im0, im1));
    const cplx tail = scalar::weighted_root_sum(w.subspan(i), idx.subspan(i), t);
    return {re + tail.real(), im + tail.imag()};
}

void advance_indices(std::span<std::uint32_t> idx, std::span<const std::uint32_t> step, std::uint32_t m)
{
    if (step.size() != idx.size()) throw std::invalid_argument("advance_indices: size mismatch");
    // Operands stay below 2^31, so signed compares are safe.
    const __m256i vm = _mm256_set1_epi32(static_cast<int>(m));
    const __m256i vm1 = _mm256_set1_epi32(static_cast<int>(m) - 1);
    const std::size_t n = idx.size();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256i* dst = reinterpret_cast<__m256i*>(idx.data() + i);
        const __m256i s = _mm256_add_epi32(_mm256_loadu_si256(dst),
                                           _mm256_loadu_si256(reinterpret_cast<const __m256i*>(step.data() + i)));
        const __m256i over = _mm256_cmpgt_epi32(s, vm1);
        _mm256_storeu_si256(dst, _mm256_sub_epi32(s, _mm256_and_si256(over, vm)));
    }
    scalar::advance_indices(idx.subspan(i), step.subspan(i), m);
}

#else

bool compiled() { return false; }

cplx root_sum(std::span<const std::uint32_t> idx, const RootTable& t) { return scalar::root_sum(idx, t); }

cplx weighted_root_sum(std::span<const double> w, std::span<const std::uint32_t> idx, const RootTable& t)
{
    return scalar::weighted_root_sum(w, idx, t);
}

void advance_indices(std::span<std::uint32_t> idx, std::span<const std::uint32_t> step, std::uint32_t m)
{
    scalar::advance_indices(idx, step, m);
}

#endif

} // namespace pstat::simd::avx2
