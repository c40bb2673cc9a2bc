#pragma once

// Filter design and application primitives shared by the preprocessing chain
// and the synthetic generator.

#include <cstddef>
#include <span>
#include <vector>

namespace neurowave::dsp {

// One second-order section in direct form II transposed, a0 normalized to 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

using Sos = std::vector<Biquad>;

Sos butterworth_lowpass(int order, double cutoff_hz, double sample_rate_hz);
Sos butterworth_highpass(int order, double cutoff_hz, double sample_rate_hz);
// High-pass at low_hz cascaded with low-pass at high_hz, both of the given order.
Sos butterworth_bandpass(int order, double low_hz, double high_hz, double sample_rate_hz);

// Second-order resonator with unit peak gain at center_hz.
Biquad resonator_bandpass(double center_hz, double bandwidth_hz, double sample_rate_hz);

// Complex frequency response magnitude at f_hz.
double sos_gain(const Sos& sos, double f_hz, double sample_rate_hz);

// Causal filtering in place; when steady_state is set the section states
// start at the step response for a constant input equal to x[0].
void sos_filter(const Sos& sos, std::span<double> x, bool steady_state = false);

// Zero-phase forward-backward filtering with mirror padding of pad samples
// on each side (clamped to x.size() - 1).
void filtfilt(const Sos& sos, std::span<double> x, std::size_t pad);

// Windowed-sinc low-pass FIR with a Kaiser window. cutoff is relative to
// the Nyquist frequency (0, 1]. Taps sum to 1.
std::vector<double> kaiser_lowpass(std::size_t num_taps, double cutoff, double beta);

// Rational resampler: upsample by `up`, apply the anti-alias FIR, decimate
// by `down`. Output length is ceil(n * up / down); group delay is removed.
std::vector<double> resample_poly(std::span<const double> x, int up, int down);

// Closest p/q to ratio with q <= max_denominator, reduced; returns false if
// the best approximation misses by more than a relative 1e-9.
bool rational_approximation(double ratio, long max_denominator, long& p, long& q);

}  // namespace neurowave::dsp
