#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace neurowave::fft {

bool is_power_of_two(std::size_t n);
std::size_t next_power_of_two(std::size_t n);

// In-place unnormalized forward DFT (radix-2). Throws on non power-of-two sizes.
void transform(std::vector<std::complex<double>>& a, bool inverse = false);

// |X_k| for k = 0..n/2 of a real input of power-of-two length n.
std::vector<double> real_magnitude(std::span<const double> x);

struct Psd {
  std::vector<double> freqs_hz;
  std::vector<double> power;  // per-bin power, one-sided, units^2 / Hz
};

// Welch estimate with Hann segments of length nfft (power of two) and 50%
// overlap. Signals shorter than nfft use a single zero-padded segment.
Psd welch(std::span<const double> x, double sample_rate_hz, std::size_t nfft);

}  // namespace neurowave::fft
