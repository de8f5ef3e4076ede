#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace vmic {

struct SignalBuffer {
  std::vector<double> samples;
  double sample_rate = 48000.0;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

// Normalized cross-correlation r(k), k in [-(N-1), N-1]; values[i] holds
// lag i - zero_lag_index.
struct LagSequence {
  std::vector<double> values;
  std::ptrdiff_t zero_lag_index = 0;

  std::ptrdiff_t lag_at(std::size_t i) const {
    return static_cast<std::ptrdiff_t>(i) - zero_lag_index;
  }
};

inline constexpr double kDefaultDeconvolutionEps = 1e-8;

// Linear convolution through a zero-padded power-of-two FFT.
std::vector<double> convolve(std::span<const double> x, std::span<const double> y);
SignalBuffer fft_convolve(const SignalBuffer& x, const SignalBuffer& y);

// Regularized spectral division X = Z conj(H) / (|H|^2 + eps max|H|^2),
// returning size(z) - size(h) + 1 samples. Bins where the denominator
// vanishes (possible only with eps = 0) are set to zero.
std::vector<double> deconvolve(std::span<const double> z, std::span<const double> h,
                               double eps = kDefaultDeconvolutionEps);
SignalBuffer deconvolve(const SignalBuffer& z, const SignalBuffer& h,
                        double eps = kDefaultDeconvolutionEps);

double pearson_correlation(std::span<const double> x, std::span<const double> y);

// Biased (w = 1) cross-correlation Σ x(n) y(n+k) / (‖x‖‖y‖) after truncating
// both inputs to the shorter length. Throws NumericError on zero energy.
LagSequence cross_correlate(std::span<const double> x, std::span<const double> y);

// Signed lag of the maximum. Ties go to the smallest |lag|, negative first.
std::ptrdiff_t peak_lag(const LagSequence& r);

// peak_lag(cross_correlate(signals[i], signals[j])) for each requested pair,
// sharing one forward transform per signal.
std::vector<std::ptrdiff_t> pairwise_peak_lags(
    std::span<const std::vector<double>> signals,
    std::span<const std::pair<std::size_t, std::size_t>> pairs);

double energy(std::span<const double> x);
double rms(std::span<const double> x);

}  // namespace vmic
