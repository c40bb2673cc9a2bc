#include "neurowave/dsp.hpp"

#include "neurowave/error.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace neurowave::dsp {
namespace {

using cplx = std::complex<double>;

enum class Kind { lowpass, highpass };

cplx bilinear(cplx s, double fs) { return (2.0 * fs + s) / (2.0 * fs - s); }

Sos butterworth(int order, double cutoff_hz, double fs, Kind kind) {
  if (order < 1) throw InputError("filter order must be >= 1");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < fs / 2.0)) {
    throw InputError("cutoff must lie strictly between 0 and Nyquist");
  }
  const double warped = 2.0 * fs * std::tan(std::numbers::pi * cutoff_hz / fs);
  Sos sos;
  for (int k = 0; k < order / 2; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + 1.0 + order) / (2.0 * order);
    const cplx prototype{std::cos(theta), std::sin(theta)};
    const cplx analog = kind == Kind::lowpass ? warped * prototype : warped / prototype;
    const cplx z = bilinear(analog, fs);
    Biquad q;
    q.a1 = -2.0 * z.real();
    q.a2 = std::norm(z);
    if (kind == Kind::lowpass) {
      const double g = (1.0 + q.a1 + q.a2) / 4.0;
      q.b0 = g, q.b1 = 2.0 * g, q.b2 = g;
    } else {
      const double g = (1.0 - q.a1 + q.a2) / 4.0;
      q.b0 = g, q.b1 = -2.0 * g, q.b2 = g;
    }
    sos.push_back(q);
  }
  if (order % 2 == 1) {
    const cplx analog{-warped, 0.0};  // the real prototype pole maps to itself for both kinds
    const double z = bilinear(analog, fs).real();
    Biquad q;
    q.a1 = -z;
    if (kind == Kind::lowpass) {
      const double g = (1.0 + q.a1) / 2.0;
      q.b0 = g, q.b1 = g;
    } else {
      const double g = (1.0 - q.a1) / 2.0;
      q.b0 = g, q.b1 = -g;
    }
    sos.push_back(q);
  }
  return sos;
}

// Section states that a constant input x0 = 1 settles into.
std::vector<std::pair<double, double>> steady_states(const Sos& sos) {
  std::vector<std::pair<double, double>> zi;
  double x = 1.0;
  for (const auto& q : sos) {
    const double y = x * (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
    const double z2 = q.b2 * x - q.a2 * y;
    const double z1 = q.b1 * x - q.a1 * y + z2;
    zi.emplace_back(z1, z2);
    x = y;
  }
  return zi;
}

}  // namespace

Sos butterworth_lowpass(int order, double cutoff_hz, double sample_rate_hz) {
  return butterworth(order, cutoff_hz, sample_rate_hz, Kind::lowpass);
}

Sos butterworth_highpass(int order, double cutoff_hz, double sample_rate_hz) {
  return butterworth(order, cutoff_hz, sample_rate_hz, Kind::highpass);
}

Sos butterworth_bandpass(int order, double low_hz, double high_hz, double sample_rate_hz) {
  if (!(low_hz < high_hz)) throw InputError("band edges must satisfy low < high");
  Sos sos = butterworth_highpass(order, low_hz, sample_rate_hz);
  Sos lp = butterworth_lowpass(order, high_hz, sample_rate_hz);
  sos.insert(sos.end(), lp.begin(), lp.end());
  return sos;
}

Biquad resonator_bandpass(double center_hz, double bandwidth_hz, double sample_rate_hz) {
  if (!(center_hz > 0.0) || !(center_hz < sample_rate_hz / 2.0) || !(bandwidth_hz > 0.0)) {
    throw InputError("resonator center must lie below Nyquist with positive bandwidth");
  }
  const double w0 = 2.0 * std::numbers::pi * center_hz / sample_rate_hz;
  const double alpha = std::sin(w0) * bandwidth_hz / (2.0 * center_hz);
  const double a0 = 1.0 + alpha;
  Biquad q;
  q.b0 = alpha / a0;
  q.b1 = 0.0;
  q.b2 = -alpha / a0;
  q.a1 = -2.0 * std::cos(w0) / a0;
  q.a2 = (1.0 - alpha) / a0;
  return q;
}

double sos_gain(const Sos& sos, double f_hz, double sample_rate_hz) {
  const double w = 2.0 * std::numbers::pi * f_hz / sample_rate_hz;
  const cplx z1 = std::polar(1.0, -w);
  const cplx z2 = z1 * z1;
  cplx h{1.0, 0.0};
  for (const auto& q : sos) {
    h *= (q.b0 + q.b1 * z1 + q.b2 * z2) / (1.0 + q.a1 * z1 + q.a2 * z2);
  }
  return std::abs(h);
}

void sos_filter(const Sos& sos, std::span<double> x, bool steady_state) {
  if (x.empty()) return;
  std::vector<std::pair<double, double>> zi(sos.size(), {0.0, 0.0});
  if (steady_state) {
    zi = steady_states(sos);
    for (auto& [a, b] : zi) a *= x[0], b *= x[0];
  }
  for (std::size_t s = 0; s < sos.size(); ++s) {
    const Biquad& q = sos[s];
    double z1 = zi[s].first, z2 = zi[s].second;
    for (double& v : x) {
      const double in = v;
      const double out = q.b0 * in + z1;
      z1 = q.b1 * in - q.a1 * out + z2;
      z2 = q.b2 * in - q.a2 * out;
      v = out;
    }
  }
}

void filtfilt(const Sos& sos, std::span<double> x, std::size_t pad) {
  const std::size_t n = x.size();
  if (n == 0) return;
  pad = std::min(pad, n - 1);
  std::vector<double> ext(n + 2 * pad);
  // Mirror without repeating the end sample. Odd reflection would turn a
  // nonzero end value of an oscillation into a step that the high-pass rings on.
  for (std::size_t i = 0; i < pad; ++i) {
    ext[i] = x[pad - i];
    ext[pad + n + i] = x[n - 2 - i];
  }
  std::copy(x.begin(), x.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));
  sos_filter(sos, ext, true);
  std::reverse(ext.begin(), ext.end());
  sos_filter(sos, ext, true);
  std::reverse(ext.begin(), ext.end());
  std::copy(ext.begin() + static_cast<std::ptrdiff_t>(pad),
            ext.begin() + static_cast<std::ptrdiff_t>(pad + n), x.begin());
}

std::vector<double> kaiser_lowpass(std::size_t num_taps, double cutoff, double beta) {
  if (num_taps == 0 || !(cutoff > 0.0) || cutoff > 1.0) {
    throw InputError("invalid FIR design parameters");
  }
  std::vector<double> h(num_taps);
  const double mid = static_cast<double>(num_taps - 1) / 2.0;
  const double norm = std::cyl_bessel_i(0.0, beta);
  double sum = 0.0;
  for (std::size_t i = 0; i < num_taps; ++i) {
    const double t = static_cast<double>(i) - mid;
    const double arg = cutoff * t;
    const double sinc = arg == 0.0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
    const double r = mid > 0.0 ? t / mid : 0.0;
    const double window = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / norm;
    h[i] = cutoff * sinc * window;
    sum += h[i];
  }
  for (double& v : h) v /= sum;
  return h;
}

std::vector<double> resample_poly(std::span<const double> x, int up, int down) {
  if (up < 1 || down < 1) throw InputError("resampling factors must be positive");
  const long n = static_cast<long>(x.size());
  const long n_out = (n * up + down - 1) / down;
  if (up == 1 && down == 1) return {x.begin(), x.end()};
  const long half_len = 10L * std::max(up, down);
  const long taps = 2 * half_len + 1;
  std::vector<double> h = kaiser_lowpass(static_cast<std::size_t>(taps), 1.0 / std::max(up, down), 5.0);
  for (double& v : h) v *= up;

  std::vector<double> y(static_cast<std::size_t>(n_out), 0.0);
  for (long m = 0; m < n_out; ++m) {
    const long center = m * down + half_len;  // index into the upsampled stream + delay
    // k = center - j * up must lie in [0, taps)
    long j_lo = center - (taps - 1) <= 0 ? 0 : (center - (taps - 1) + up - 1) / up;
    long j_hi = std::min(n - 1, center / up);
    double acc = 0.0;
    for (long j = j_lo; j <= j_hi; ++j) acc += x[static_cast<std::size_t>(j)] * h[static_cast<std::size_t>(center - j * up)];
    y[static_cast<std::size_t>(m)] = acc;
  }
  return y;
}

bool rational_approximation(double ratio, long max_denominator, long& p, long& q) {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) return false;
  for (long d = 1; d <= max_denominator; ++d) {
    const double num = std::round(ratio * static_cast<double>(d));
    if (num < 1.0) continue;
    if (std::abs(num / static_cast<double>(d) - ratio) <= 1e-9 * ratio) {
      p = static_cast<long>(num);
      q = d;
      return true;
    }
  }
  return false;
}

}  // namespace neurowave::dsp
