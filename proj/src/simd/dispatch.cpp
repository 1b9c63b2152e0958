#include "pstat/simd.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace pstat::simd {

namespace {

Isa initial_isa()
{
    const Isa best = detect_isa();
    if (const char* env = std::getenv("PSTAT_SIMD")) {
        if (std::strcmp(env, "scalar") == 0) return Isa::scalar;
        if (std::strcmp(env, "avx2") == 0 && best == Isa::avx2) return Isa::avx2;
    }
    return best;
}

std::atomic<Isa>& current()
{
    static std::atomic<Isa> isa{initial_isa()};
    return isa;
}

} // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

Isa detect_isa()
{
#if defined(__x86_64__) || defined(__i386__)
    __builtin_cpu_init();
    if (avx2::compiled() && __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Isa::avx2;
#endif
    return Isa::scalar;
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

bool set_isa(Isa isa)
{
    if (isa == Isa::avx2 && detect_isa() != Isa::avx2) return false;
    current().store(isa, std::memory_order_relaxed);
    return true;
}

cplx root_sum(std::span<const std::uint32_t> idx, const RootTable& table)
{
    return active_isa() == Isa::avx2 ? avx2::root_sum(idx, table) : scalar::root_sum(idx, table);
}

cplx weighted_root_sum(std::span<const double> w, std::span<const std::uint32_t> idx, const RootTable& table)
{
    return active_isa() == Isa::avx2 ? avx2::weighted_root_sum(w, idx, table)
                                     : scalar::weighted_root_sum(w, idx, table);
}

void advance_indices(std::span<std::uint32_t> idx, std::span<const std::uint32_t> step, std::uint32_t m)
{
    if (active_isa() == Isa::avx2)
        avx2::advance_indices(idx, step, m);
    else
        scalar::advance_indices(idx, step, m);
}

} // namespace pstat::simd
