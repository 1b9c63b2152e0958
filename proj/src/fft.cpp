#include "pstat/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace pstat {

namespace {

// Only plan creation and destruction are not thread-safe in FFTW.
std::mutex& planner_mutex()
{
    static std::mutex mu;
    return mu;
}

} // namespace

std::vector<cplx> dft(const std::vector<cplx>& in, int sign)
{
    if (sign != 1 && sign != -1) throw std::invalid_argument("dft: sign must be +1 or -1");
    const int n = static_cast<int>(in.size());
    std::vector<cplx> out(in.size());
    if (n == 0) return out;
    static_assert(sizeof(cplx) == sizeof(fftw_complex));
    std::vector<cplx> buf(in);
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(buf.data()), reinterpret_cast<fftw_complex*>(out.data()),
                                sign == 1 ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    if (!plan) throw std::runtime_error("dft: planning failed");
    fftw_execute(plan);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

} // namespace pstat
