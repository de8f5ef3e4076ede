#include "vmic/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <map>
#include <numeric>
#include <stdexcept>

#include "vmic/error.hpp"
#include "vmic/fft.hpp"

namespace vmic {

namespace {

void require_same_rate(const SignalBuffer& a, const SignalBuffer& b) {
  if (a.sample_rate != b.sample_rate) {
    throw InputError("sample-rate mismatch: " + std::to_string(a.sample_rate) + " vs " +
                     std::to_string(b.sample_rate));
  }
}

// True if lag a should win a tie against lag b.
bool preferred_lag(std::ptrdiff_t a, std::ptrdiff_t b) {
  const auto abs_a = std::abs(a);
  const auto abs_b = std::abs(b);
  if (abs_a != abs_b) return abs_a < abs_b;
  return a < b;
}

// Circular correlation for lags in [-(n-1), n-1], normalized.
template <typename Visit>
void visit_normalized_lags(const std::vector<std::complex<double>>& x_spec,
                           const std::vector<std::complex<double>>& y_spec, std::size_t fft_size,
                           std::size_t n, double norm, Visit&& visit) {
  std::vector<std::complex<double>> prod(x_spec.size());
  for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = std::conj(x_spec[i]) * y_spec[i];
  const auto circ = irfft(prod, fft_size);
  const auto span = static_cast<std::ptrdiff_t>(n) - 1;
  for (std::ptrdiff_t k = -span; k <= span; ++k) {
    const auto idx = k >= 0 ? static_cast<std::size_t>(k)
                            : fft_size - static_cast<std::size_t>(-k);
    visit(k, circ[idx] / norm);
  }
}

}  // namespace

double energy(std::span<const double> x) {
  return std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
}

double rms(std::span<const double> x) {
  return x.empty() ? 0.0 : std::sqrt(energy(x) / static_cast<double>(x.size()));
}

std::vector<double> convolve(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw InputError("convolution of an empty signal");
  const std::size_t out_len = x.size() + y.size() - 1;
  const std::size_t n = next_pow2(out_len);
  auto xs = rfft(x, n);
  const auto ys = rfft(y, n);
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] *= ys[i];
  auto out = irfft(xs, n);
  out.resize(out_len);
  return out;
}

SignalBuffer fft_convolve(const SignalBuffer& x, const SignalBuffer& y) {
  require_same_rate(x, y);
  return {convolve(x.samples, y.samples), x.sample_rate};
}

std::vector<double> deconvolve(std::span<const double> z, std::span<const double> h, double eps) {
  if (h.empty() || z.size() < h.size()) {
    throw InputError("deconvolution needs size(z) >= size(h) >= 1");
  }
  if (energy(h) == 0.0) throw NumericError("deconvolution kernel has zero energy");
  if (eps < 0.0) throw std::invalid_argument("eps must be >= 0");

  const std::size_t n = next_pow2(z.size());
  auto zs = rfft(z, n);
  const auto hs = rfft(h, n);
  double max_power = 0.0;
  for (const auto& v : hs) max_power = std::max(max_power, std::norm(v));
  const double floor = eps * max_power;
  for (std::size_t i = 0; i < zs.size(); ++i) {
    const double denom = std::norm(hs[i]) + floor;
    zs[i] = denom > 0.0 ? zs[i] * std::conj(hs[i]) / denom : std::complex<double>{};
  }
  auto out = irfft(zs, n);
  out.resize(z.size() - h.size() + 1);
  return out;
}

SignalBuffer deconvolve(const SignalBuffer& z, const SignalBuffer& h, double eps) {
  require_same_rate(z, h);
  return {deconvolve(std::span<const double>(z.samples), std::span<const double>(h.samples), eps),
          z.sample_rate};
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InputError("pearson correlation needs equal lengths >= 2");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double sx = std::sqrt(sxx / n);
  const double sy = std::sqrt(syy / n);
  if (sx == 0.0 || sy == 0.0) throw NumericError("pearson correlation of a zero-variance input");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += ((x[i] - mx) / sx) * ((y[i] - my) / sy);
  return std::clamp(acc / n, -1.0, 1.0);
}

LagSequence cross_correlate(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw InputError("cross-correlation of an empty signal");
  const std::size_t n = std::min(x.size(), y.size());
  x = x.first(n);
  y = y.first(n);
  const double norm = std::sqrt(energy(x)) * std::sqrt(energy(y));
  if (norm == 0.0) throw NumericError("cross-correlation of a zero-energy signal");

  const std::size_t fft_size = next_pow2(2 * n - 1);
  LagSequence r;
  r.zero_lag_index = static_cast<std::ptrdiff_t>(n) - 1;
  r.values.reserve(2 * n - 1);
  visit_normalized_lags(rfft(x, fft_size), rfft(y, fft_size), fft_size, n, norm,
                        [&](std::ptrdiff_t, double v) { r.values.push_back(v); });
  return r;
}

std::ptrdiff_t peak_lag(const LagSequence& r) {
  if (r.values.empty()) throw InputError("peak_lag of an empty lag sequence");
  std::size_t best = 0;
  for (std::size_t i = 1; i < r.values.size(); ++i) {
    if (r.values[i] > r.values[best] ||
        (r.values[i] == r.values[best] && preferred_lag(r.lag_at(i), r.lag_at(best)))) {
      best = i;
    }
  }
  return r.lag_at(best);
}

std::vector<std::ptrdiff_t> pairwise_peak_lags(
    std::span<const std::vector<double>> signals,
    std::span<const std::pair<std::size_t, std::size_t>> pairs) {
  // Spectra keyed by (signal, truncated length).
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::complex<double>>> spectra;
  auto spectrum = [&](std::size_t s, std::size_t n) -> const std::vector<std::complex<double>>& {
    auto key = std::make_pair(s, n);
    auto it = spectra.find(key);
    if (it == spectra.end()) {
      it = spectra.emplace(key, rfft(std::span(signals[s]).first(n), next_pow2(2 * n - 1))).first;
    }
    return it->second;
  };

  std::vector<std::ptrdiff_t> lags;
  lags.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    const auto& x = signals[i];
    const auto& y = signals[j];
    if (x.empty() || y.empty()) throw InputError("cross-correlation of an empty signal");
    const std::size_t n = std::min(x.size(), y.size());
    const double norm = std::sqrt(energy(std::span(x).first(n))) *
                        std::sqrt(energy(std::span(y).first(n)));
    if (norm == 0.0) throw NumericError("cross-correlation of a zero-energy signal");

    double best_value = 0.0;
    std::ptrdiff_t best_lag = 0;
    bool first = true;
    visit_normalized_lags(spectrum(i, n), spectrum(j, n), next_pow2(2 * n - 1), n, norm,
                          [&](std::ptrdiff_t k, double v) {
                            if (first || v > best_value ||
                                (v == best_value && preferred_lag(k, best_lag))) {
                              best_value = v;
                              best_lag = k;
                              first = false;
                            }
                          });
    lags.push_back(best_lag);
  }
  return lags;
}

}  // namespace vmic
