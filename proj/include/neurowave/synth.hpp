#pragma once

// Synthetic sessions: stimulus schedules with inserted fake segments and
// EEG-like recordings whose real/fake intervals carry configurable spectral
// signatures plus physiological and technical artifacts.

#include "neurowave/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace neurowave {

enum class InsertionPolicy { after_first_minute, mid_second_minute, end, random };
enum class Quality { high, medium, low };

std::string_view to_string(InsertionPolicy p);
InsertionPolicy insertion_policy_from_string(std::string_view s);
std::string_view to_string(Quality q);
Quality quality_from_string(std::string_view s);

// The stimulus period after the baseline is split into n_fake_segments
// clips separated by silence gaps; each clip is real audio with one fake
// segment inserted at the policy position (relative to the clip start).
struct SessionSpec {
  double duration_s = 1200.0;
  double baseline_s = 180.0;
  int n_fake_segments = 5;
  InsertionPolicy insertion_policy = InsertionPolicy::random;
  int min_fake_words = 5;
  double words_per_second = 2.5;
  double max_fake_s = 8.0;
  double jitter_s = 5.0;
  double silence_gap_s = 2.0;
  Quality quality = Quality::high;
  std::uint64_t seed = 0;

  double min_fake_s() const { return static_cast<double>(min_fake_words) / words_per_second; }
};

struct BandSignature {
  double center_hz = 10.0;
  double bandwidth_hz = 4.0;
  double amplitude_uv = 0.0;  // RMS per channel while active
};

struct LineNoise {
  double hz = 50.0;
  double amplitude_uv = 0.0;
};

struct MuscleBursts {
  double rate_per_min = 0.0;
  double amplitude_uv = 0.0;
};

struct Heartbeat {
  double bpm = 70.0;
  double amplitude_uv = 0.0;
};

// Fake signature crossfades from its own band into target_center_hz, starting
// at onset_fraction of the stimulus period and completing at its end.
struct SignatureDrift {
  double target_center_hz = 18.0;
  double onset_fraction = 0.6;
};

struct SignatureSpec {
  BandSignature real_signature{10.0, 4.0, 3.0};
  BandSignature fake_signature{38.0, 8.0, 5.0};
  std::optional<SignatureDrift> drift;
  double background_uv = 10.0;  // pink-noise RMS per channel
  // Log-std of the slow amplitude envelope on the background sources; 0 leaves
  // them Gaussian.
  double background_burstiness = 0.5;
  LineNoise line_noise{50.0, 0.0};
  MuscleBursts muscle{0.0, 0.0};
  Heartbeat heartbeat{70.0, 0.0};
  double drift_uv = 0.0;  // slow baseline wander

  void validate(double sample_rate_hz) const;
};

LabelTrack gen_schedule(const SessionSpec& spec);

Recording gen_recording(const LabelTrack& track, const SignatureSpec& sig, std::size_t channels, double rate_hz,
                        std::uint64_t seed);

// 10-20 style names; always ends with the mastoid pair TP9/TP10 when at
// least two channels are requested.
std::vector<std::string> channel_names(std::size_t channels);

// Unit-variance 1/f noise: equal-weight sum of AR(1) processes with corner
// frequencies one octave apart.
std::vector<double> pink_noise(std::size_t n, double rate_hz, std::uint64_t seed);

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace neurowave
