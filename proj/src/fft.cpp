#include "neurowave/fft.hpp"

#include "neurowave/error.hpp"

#include <cmath>
#include <numbers>
#include <utility>

namespace neurowave::fft {

bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void transform(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (!is_power_of_two(n)) throw InputError("FFT length must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

std::vector<double> real_magnitude(std::span<const double> x) {
  std::vector<std::complex<double>> buf(x.begin(), x.end());
  transform(buf);
  std::vector<double> mag(x.size() / 2 + 1);
  for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(buf[k]);
  return mag;
}

Psd welch(std::span<const double> x, double sample_rate_hz, std::size_t nfft) {
  if (!is_power_of_two(nfft)) throw InputError("Welch segment length must be a power of two");
  std::vector<double> window(nfft);
  double wss = 0.0;
  for (std::size_t i = 0; i < nfft; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(nfft));
    wss += window[i] * window[i];
  }
  const std::size_t bins = nfft / 2 + 1;
  Psd psd;
  psd.power.assign(bins, 0.0);
  psd.freqs_hz.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) psd.freqs_hz[k] = static_cast<double>(k) * sample_rate_hz / static_cast<double>(nfft);

  const std::size_t step = nfft / 2;
  std::size_t segments = 0;
  std::vector<std::complex<double>> buf(nfft);
  for (std::size_t start = 0; start == 0 || start + nfft <= x.size(); start += step) {
    double mean = 0.0;
    const std::size_t avail = std::min(nfft, x.size() - std::min(start, x.size()));
    for (std::size_t i = 0; i < avail; ++i) mean += x[start + i];
    if (avail > 0) mean /= static_cast<double>(avail);
    for (std::size_t i = 0; i < nfft; ++i) {
      const double v = i < avail ? x[start + i] - mean : 0.0;
      buf[i] = {v * window[i], 0.0};
    }
    transform(buf);
    for (std::size_t k = 0; k < bins; ++k) psd.power[k] += std::norm(buf[k]);
    ++segments;
    if (x.size() < nfft) break;
  }
  const double scale = 1.0 / (sample_rate_hz * wss * static_cast<double>(segments));
  for (std::size_t k = 0; k < bins; ++k) {
    const bool edge = k == 0 || k == bins - 1;
    psd.power[k] *= scale * (edge ? 1.0 : 2.0);
  }
  return psd;
}

}  // namespace neurowave::fft
