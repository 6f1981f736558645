#pragma once

#include <complex>
#include <vector>

namespace qmem {

// In-place radix-2 Cooley-Tukey. Size must be a power of two.
// inverse=true applies the conjugate transform with 1/N normalization.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse = false);

std::size_t next_pow2(std::size_t n);

}  // namespace qmem
