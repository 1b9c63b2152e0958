#pragma once

// Data-parallel inner loops: sums of roots of unity e(k/N) looked up from a
// two-level table, optionally weighted. A scalar reference and an AVX2
// variant are built; the variant is chosen once at runtime.

#include <complex>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace pstat {

using cplx = std::complex<double>;

/// e(x) = exp(2 pi i x).
cplx expi(double x);

/// e(k/N) for k in [0, N), stored as e(hi 2^s / N) * e(lo / N) with
/// k = hi 2^s + lo so that both tables stay small.
class RootTable {
public:
    explicit RootTable(std::uint64_t order);

    std::uint64_t order() const { return order_; }
    unsigned shift() const { return shift_; }
    std::uint32_t low_mask() const { return (std::uint32_t{1} << shift_) - 1; }

    cplx operator()(std::uint64_t k) const
    {
        k %= order_;
        const std::size_t hi = k >> shift_, lo = k & low_mask();
        return {hi_re_[hi] * lo_re_[lo] - hi_im_[hi] * lo_im_[lo], hi_re_[hi] * lo_im_[lo] + hi_im_[hi] * lo_re_[lo]};
    }

    const double* hi_re() const { return hi_re_.data(); }
    const double* hi_im() const { return hi_im_.data(); }
    const double* lo_re() const { return lo_re_.data(); }
    const double* lo_im() const { return lo_im_.data(); }

private:
    std::uint64_t order_;
    unsigned shift_;
    std::vector<double> hi_re_, hi_im_, lo_re_, lo_im_;
};

namespace simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);
/// Best instruction set supported by this CPU and build.
Isa detect_isa();
/// Currently dispatched instruction set. Defaults to detect_isa(), unless the
/// PSTAT_SIMD environment variable names another one ("scalar" or "avx2").
Isa active_isa();
/// Overrides the dispatch (tests use this to compare variants). Returns false
/// if the requested set is unavailable.
bool set_isa(Isa isa);

/// Sum of e(idx[i]/N); every idx[i] must be < N.
cplx root_sum(std::span<const std::uint32_t> idx, const RootTable& table);
/// Sum of w[i] e(idx[i]/N).
cplx weighted_root_sum(std::span<const double> w, std::span<const std::uint32_t> idx, const RootTable& table);
/// idx[i] <- (idx[i] + step[i]) mod m, assuming both operands are < m < 2^31.
void advance_indices(std::span<std::uint32_t> idx, std::span<const std::uint32_t> step, std::uint32_t m);

namespace scalar {
cplx root_sum(std::span<const std::uint32_t> idx, const RootTable& table);
cplx weighted_root_sum(std::span<const double> w, std::span<const std::uint32_t> idx, const RootTable& table);
void advance_indices(std::span<std::uint32_t> idx, std::span<const std::uint32_t> step, std::uint32_t m);
} // namespace scalar

namespace avx2 {
bool compiled();
cplx root_sum(std::span<const std::uint32_t> idx, const RootTable& table);
cplx weighted_root_sum(std::span<const double> w, std::span<const std::uint32_t> idx, const RootTable& table);
void advance_indices(std::span<std::uint32_t> idx, std::span<const std::uint32_t> step, std::uint32_t m);
} // namespace avx2

} // namespace simd
} // namespace pstat
