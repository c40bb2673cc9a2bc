#pragma once

// Deterministic preprocessing chain: baseline correction, band-pass
// filtering, re-referencing, resampling, segmentation and labeling. Every
// operation is a pure function of its inputs.

#include "neurowave/types.hpp"

#include <string>

namespace neurowave {

// Subtracts, per channel, the mean over the track's baseline interval.
Recording baseline_correct(const Recording& rec, const LabelTrack& track);

struct BandpassOptions {
  int order = 4;  // per edge; applied forward and backward
  // Mirror padding in seconds; 0 selects 3 / low_hz.
  double pad_s = 0.0;
};

// Zero-phase Butterworth band-pass.
Recording bandpass_filter(const Recording& rec, double low_hz, double high_hz,
                          const BandpassOptions& options = {});

Recording rereference_common_average(const Recording& rec);
Recording rereference_mastoid(const Recording& rec, const std::string& left_name,
                              const std::string& right_name);

// Rational polyphase resampling with a Kaiser anti-alias filter.
Recording resample(const Recording& rec, double target_hz);

// Samples per window and per hop; throws when either is not integral.
struct WindowGeometry {
  std::size_t length = 0;
  std::size_t hop = 0;
};
WindowGeometry window_geometry(double window_s, double overlap_fraction, double sample_rate_hz);

// floor((n - length) / hop) + 1, or 0 when n < length.
std::size_t segment_count(std::size_t n, std::size_t length, std::size_t hop);

// Fixed windows at hop spacing; the trailing partial window is dropped.
// Epochs come back labeled `real` until label_epochs runs.
EpochSet segment(const Recording& rec, double window_s, double overlap_fraction);

// Drops epochs touching silence or baseline, labels the rest by majority
// overlap with real/fake intervals (exact tie goes to fake).
EpochSet label_epochs(const EpochSet& set, const LabelTrack& track);

}  // namespace neurowave
