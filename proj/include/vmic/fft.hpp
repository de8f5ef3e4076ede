#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace vmic {

// Smallest power of two >= n (n = 0 maps to 1).
std::size_t next_pow2(std::size_t n);

// Real-input FFT of x zero-padded (or truncated) to n points; returns the
// n/2 + 1 non-negative-frequency bins. n must be a power of two.
std::vector<std::complex<double>> rfft(std::span<const double> x, std::size_t n);

// Inverse of rfft, scaled by 1/n so that irfft(rfft(x, n), n) == x.
std::vector<double> irfft(std::span<const std::complex<double>> spectrum, std::size_t n);

}  // namespace vmic
