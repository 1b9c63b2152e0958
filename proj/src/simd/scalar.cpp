#include "pstat/simd.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pstat {

cplx expi(double x)
{
    const double a = 2.0 * std::numbers::pi * x;
    return {std::cos(a), std::sin(a)};
}

RootTable::RootTable(std::uint64_t order) : order_(order)
{
    if (order == 0 || order > (std::uint64_t{1} << 32)) throw std::invalid_argument("RootTable: order out of range");
    unsigned bits = 0;
    while ((std::uint64_t{1} << bits) < order) ++bits;
    shift_ = (bits + 1) / 2;
    const std::uint64_t lo_size = std::uint64_t{1} << shift_;
    const std::uint64_t hi_size = ((order - 1) >> shift_) + 1;
    lo_re_.resize(lo_size);
    lo_im_.resize(lo_size);
    hi_re_.resize(hi_size);
    hi_im_.resize(hi_size);
    // Angles are reduced as exact fractions before scaling by 2 pi.
    for (std::uint64_t j = 0; j < lo_size; ++j) {
        const cplx z = expi(static_cast<double>(j % order) / static_cast<double>(order));
        lo_re_[j] = z.real();
        lo_im_[j] = z.imag();
    }
    for (std::uint64_t j = 0; j < hi_size; ++j) {
        const std::uint64_t k = (j << shift_) % order;
        const cplx z = expi(static_cast<double>(k) / static_cast<double>(order));
        hi_re_[j] = z.real();
        hi_im_[j] = z.imag();
    }
}

namespace simd::scalar {

cplx root_sum(std::span<const std::uint32_t> idx, const RootTable& t)
{
    const unsigned s = t.shift();
    const std::uint32_t mask = t.low_mask();
    const double *hr = t.hi_re(), *hi = t.hi_im(), *lr = t.lo_re(), *li = t.lo_im();
    double re = 0.0, im = 0.0;
    for (std::uint32_t k : idx) {
        const std::uint32_t h = k >> s, l = k & mask;
        re += hr[h] * lr[l] - hi[h] * li[l];
        im += hr[h] * li[l] + hi[h] * lr[l];
    }
    return {re, im};
}

cplx weighted_root_sum(std::span<const double> w, std::span<const std::uint32_t> idx, const RootTable& t)
{
    if (w.size() != idx.size()) throw std::invalid_argument("weighted_root_sum: size mismatch");
    const unsigned s = t.shift();
    const std::uint32_t mask = t.low_mask();
    const double *hr = t.hi_re(), *hi = t.hi_im(), *lr = t.lo_re(), *li = t.lo_im();
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const std::uint32_t h = idx[i] >> s, l = idx[i] & mask;
        re += w[i] * (hr[h] * lr[l] - hi[h] * li[l]);
        im += w[i] * (hr[h] * li[l] + hi[h] * lr[l]);
    }
    return {re, im};
}

void advance_indices(std::span<std::uint32_t> idx, std::span<const std::uint32_t> step, std::uint32_t m)
{
    if (step.size() != idx.size()) throw std::invalid_argument("advance_indices: size mismatch");
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const std::uint32_t v = idx[i] + step[i];
        idx[i] = v >= m ? v - m : v;
    }
}

} // namespace simd::scalar
} // namespace pstat
