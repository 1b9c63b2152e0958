#pragma once

// Discrete Fourier transforms of arbitrary length (FFTW underneath).

#include "pstat/simd.hpp"

#include <vector>

namespace pstat {

/// out[v] = sum_u in[u] e(sign u v / N), N = in.size(), sign = +1 or -1.
std::vector<cplx> dft(const std::vector<cplx>& in, int sign);

} // namespace pstat
