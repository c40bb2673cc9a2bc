#include "neurowave/synth.hpp"

#include "neurowave/dsp.hpp"
#include "neurowave/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace neurowave {
namespace {

constexpr std::array<std::string_view, 62> kScalpNames = {
    "Fp1", "Fz",  "F3",  "F7",  "FT9", "FC5", "FC1", "C3",  "T7",  "CP5", "CP1", "Pz",  "P3",
    "P7",  "O1",  "Oz",  "O2",  "P4",  "P8",  "CP6", "CP2", "Cz",  "C4",  "T8",  "FT10", "FC6",
    "FC2", "F4",  "F8",  "Fp2", "AF7", "AF3", "AFz", "F1",  "F5",  "FT7", "FC3", "C1",  "C5",
    "TP7", "CP3", "P1",  "P5",  "PO7", "PO3", "POz", "PO4", "PO8", "P6",  "P2",  "CPz", "CP4",
    "TP8", "C6",  "C2",  "FC4", "FT8", "F6",  "AF8", "AF4", "F2",  "Iz"};

// Streams for mix_seed so every source draws from its own generator.
enum Stream : std::uint64_t {
  kSchedule = 1,
  kPatterns = 2,
  kRealSource = 3,
  kFakeSource = 4,
  kFakeDriftSource = 5,
  kLine = 6,
  kHeart = 7,
  kMuscle = 8,
  kWander = 9,
  kBackgroundMixing = 10,
  kChannelBase = 1000,
  kEnvelopeBase = 100000,
  kSensorBase = 200000,
  kSensorEnvelopeBase = 300000,
};

// Share of the background RMS that is independent per-channel sensor noise.
constexpr double kSensorShare = 0.2;

std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> w(n);
  for (double& v : w) v = normal(rng);
  return w;
}

void normalize_rms(std::vector<double>& x) {
  double ss = 0.0;
  for (double v : x) ss += v * v;
  const double rms = std::sqrt(ss / static_cast<double>(std::max<std::size_t>(1, x.size())));
  if (rms > 0.0)
    for (double& v : x) v /= rms;
}

// Unit-RMS noise limited to center +- bandwidth/2.
std::vector<double> band_noise(std::size_t n, const BandSignature& band, double fs, std::uint64_t seed) {
  std::vector<double> x = white_noise(n, seed);
  const double lo = band.center_hz - band.bandwidth_hz / 2.0;
  const double hi = band.center_hz + band.bandwidth_hz / 2.0;
  const dsp::Sos sos = lo > 0.0 ? dsp::butterworth_bandpass(2, lo, hi, fs) : dsp::butterworth_lowpass(2, hi, fs);
  dsp::sos_filter(sos, x);
  normalize_rms(x);
  return x;
}

std::size_t to_index(double t_s, double fs, std::size_t n) {
  return std::min(n, static_cast<std::size_t>(std::max(0.0, std::round(t_s * fs))));
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string_view to_string(InsertionPolicy p) {
  switch (p) {
    case InsertionPolicy::after_first_minute:
      return "after_first_minute";
    case InsertionPolicy::mid_second_minute:
      return "mid_second_minute";
    case InsertionPolicy::end:
      return "end";
    case InsertionPolicy::random:
      return "random";
  }
  return "random";
}

InsertionPolicy insertion_policy_from_string(std::string_view s) {
  for (auto p : {InsertionPolicy::after_first_minute, InsertionPolicy::mid_second_minute, InsertionPolicy::end,
                 InsertionPolicy::random}) {
    if (to_string(p) == s) return p;
  }
  throw InputError("unknown insertion policy '" + std::string(s) + "'");
}

std::string_view to_string(Quality q) {
  switch (q) {
    case Quality::high:
      return "high";
    case Quality::medium:
      return "medium";
    case Quality::low:
      return "low";
  }
  return "high";
}

Quality quality_from_string(std::string_view s) {
  for (auto q : {Quality::high, Quality::medium, Quality::low}) {
    if (to_string(q) == s) return q;
  }
  throw InputError("unknown quality tag '" + std::string(s) + "'");
}

void SignatureSpec::validate(double fs) const {
  const double nyquist = fs / 2.0;
  for (const auto* b : {&real_signature, &fake_signature}) {
    if (b->amplitude_uv < 0.0) throw InputError("signature amplitude must be >= 0");
    if (!(b->bandwidth_hz > 0.0) || !(b->center_hz > 0.0) || b->center_hz + b->bandwidth_hz / 2.0 >= nyquist) {
      throw InputError("signature band must lie below Nyquist");
    }
  }
  if (drift) {
    if (!(drift->target_center_hz > 0.0) ||
        drift->target_center_hz + fake_signature.bandwidth_hz / 2.0 >= nyquist) {
      throw InputError("drift target band must lie below Nyquist");
    }
    if (!(drift->onset_fraction >= 0.0 && drift->onset_fraction < 1.0)) {
      throw InputError("drift onset fraction must lie in [0, 1)");
    }
  }
  if (background_uv < 0.0 || line_noise.amplitude_uv < 0.0 || muscle.amplitude_uv < 0.0 ||
      heartbeat.amplitude_uv < 0.0 || drift_uv < 0.0 || background_burstiness < 0.0 || muscle.rate_per_min < 0.0) {
    throw InputError("artifact amplitudes and rates must be >= 0");
  }
  if (line_noise.amplitude_uv > 0.0 && !(line_noise.hz > 0.0 && line_noise.hz < nyquist)) {
    throw InputError("line noise frequency must lie below Nyquist");
  }
  if (heartbeat.amplitude_uv > 0.0 && !(heartbeat.bpm > 0.0)) throw InputError("heart rate must be positive");
}

LabelTrack gen_schedule(const SessionSpec& spec) {
  const int clips = spec.n_fake_segments;
  if (clips < 1) throw InputError("need at least one fake segment");
  if (!(spec.baseline_s > 0.0) || !(spec.words_per_second > 0.0) || spec.min_fake_words < 1 || spec.jitter_s < 0.0 ||
      spec.silence_gap_s < 0.0) {
    throw InputError("invalid session spec");
  }
  const double min_len = spec.min_fake_s();
  const double max_len = std::max(min_len, spec.max_fake_s);
  const double stimulus = spec.duration_s - spec.baseline_s - spec.silence_gap_s * (clips - 1);
  const double clip_len = stimulus / clips;
  if (!(clip_len > 0.0)) throw InputError("fake segments do not fit: no stimulus time after baseline");

  std::mt19937_64 rng(mix_seed(spec.seed, kSchedule));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  LabelTrack track;
  track.intervals.push_back({0.0, spec.baseline_s, Tag::baseline});
  double t = spec.baseline_s;
  for (int c = 0; c < clips; ++c) {
    const double clip_start = t;
    const double clip_end = c + 1 == clips ? spec.duration_s : clip_start + clip_len;
    const double len = min_len + unit(rng) * (max_len - min_len);
    const double jitter = unit(rng) * spec.jitter_s;
    InsertionPolicy policy = spec.insertion_policy;
    if (policy == InsertionPolicy::random) {
      const auto pick = static_cast<int>(unit(rng) * 3.0);
      policy = std::array{InsertionPolicy::after_first_minute, InsertionPolicy::mid_second_minute,
                          InsertionPolicy::end}[static_cast<std::size_t>(std::min(pick, 2))];
    }
    double fake_start = 0.0;
    switch (policy) {
      case InsertionPolicy::after_first_minute:
        fake_start = clip_start + 60.0 + jitter;
        break;
      case InsertionPolicy::mid_second_minute:
        fake_start = clip_start + 90.0 + jitter;
        break;
      case InsertionPolicy::end:
      case InsertionPolicy::random:
        fake_start = clip_end - len;
        break;
    }
    const double fake_end = fake_start + len;
    if (fake_start < clip_start || fake_end > clip_end + 1e-9) {
      throw InputError("fake segments do not fit: clip " + std::to_string(c) + " is " + std::to_string(clip_len) +
                       " s long");
    }
    if (fake_start > clip_start) track.intervals.push_back({clip_start, fake_start, Tag::real});
    track.intervals.push_back({fake_start, std::min(fake_end, clip_end), Tag::fake});
    if (fake_end < clip_end - 1e-9) track.intervals.push_back({fake_end, clip_end, Tag::real});
    t = clip_end;
    if (c + 1 < clips && spec.silence_gap_s > 0.0) {
      track.intervals.push_back({t, t + spec.silence_gap_s, Tag::silence});
      t += spec.silence_gap_s;
    }
  }
  track.validate();
  return track;
}

std::vector<std::string> channel_names(std::size_t channels) {
  std::vector<std::string> names;
  if (channels == 0) return names;
  if (channels == 1) return {"Fp1"};
  if (channels > kScalpNames.size() + 2) throw InputError("at most 64 named channels are supported");
  for (std::size_t i = 0; i + 2 < channels; ++i) names.emplace_back(kScalpNames[i]);
  names.emplace_back("TP9");
  names.emplace_back("TP10");
  return names;
}

std::vector<double> pink_noise(std::size_t n, double rate_hz, std::uint64_t seed) {
  const std::vector<double> w = white_noise(n, seed);
  std::vector<double> out(n, 0.0);
  for (double corner = 0.1; corner < rate_hz / 2.0; corner *= 2.0) {
    const double a = std::exp(-2.0 * std::numbers::pi * corner / rate_hz);
    const double gain = 1.0 / std::sqrt(corner);
    double y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      y = a * y + (1.0 - a) * w[i];
      out[i] += gain * y;
    }
  }
  double mean = 0.0;
  for (double v : out) mean += v;
  mean /= static_cast<double>(std::max<std::size_t>(1, n));
  for (double& v : out) v -= mean;
  normalize_rms(out);
  return out;
}

Recording gen_recording(const LabelTrack& track, const SignatureSpec& sig, std::size_t channels, double rate_hz,
                        std::uint64_t seed) {
  track.validate();
  if (channels == 0) throw InputError("need at least one channel");
  if (!(rate_hz > 0.0)) throw InputError("sample rate must be positive");
  sig.validate(rate_hz);

  const double end_s = track.intervals.back().end_s;
  const auto n = static_cast<std::size_t>(std::llround(end_s * rate_hz));
  Recording rec;
  rec.sample_rate_hz = rate_hz;
  rec.channel_names = channel_names(channels);
  rec.start_time_s = 0.0;
  rec.data.resize(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(n));

  // Background: half as many pink sources as channels, each under a slow
  // log-normal amplitude envelope (so they are non-Gaussian), spread over the
  // scalp by a dense random mixing, plus weak independent sensor noise with
  // the same envelope.
  const std::size_t n_background = std::max<std::size_t>(1, channels / 2);
  const double mixed_uv = sig.background_uv * std::sqrt(1.0 - kSensorShare * kSensorShare);
  const dsp::Sos envelope_lp = dsp::butterworth_lowpass(2, std::min(0.3, rate_hz / 4.0), rate_hz);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> sources(
      static_cast<Eigen::Index>(n_background), static_cast<Eigen::Index>(n));
  auto bursty_pink = [&](std::uint64_t stream, std::uint64_t envelope_stream) {
    auto pink = pink_noise(n, rate_hz, mix_seed(seed, stream));
    if (sig.background_burstiness > 0.0) {
      std::vector<double> env = white_noise(n, mix_seed(seed, envelope_stream));
      dsp::sos_filter(envelope_lp, env);
      normalize_rms(env);
      for (std::size_t i = 0; i < n; ++i) pink[i] *= std::exp(sig.background_burstiness * env[i]);
      normalize_rms(pink);
    }
    return pink;
  };
  for (std::size_t j = 0; j < n_background; ++j) {
    const auto pink = bursty_pink(kChannelBase + j, kEnvelopeBase + j);
    sources.row(static_cast<Eigen::Index>(j)) =
        Eigen::Map<const Eigen::RowVectorXd>(pink.data(), static_cast<Eigen::Index>(n));
  }

  // Class signatures: during real and fake intervals every background source
  // gains an independent narrowband component, so the response is a
  // band-power change of ongoing activity rather than a separate source. Each
  // channel then carries the configured amplitude in RMS.
  const double stim_start = track.baseline()->end_s;
  const double stim_span = std::max(1e-9, end_s - stim_start);
  const bool want_real = sig.real_signature.amplitude_uv > 0.0;
  const bool want_fake = sig.fake_signature.amplitude_uv > 0.0;
  if (want_real || want_fake) {
    BandSignature drift_target = sig.fake_signature;
    if (sig.drift) drift_target.center_hz = sig.drift->target_center_hz;
    const double real_scale = sig.real_signature.amplitude_uv / mixed_uv;
    const double fake_scale = sig.fake_signature.amplitude_uv / mixed_uv;
    for (std::size_t j = 0; j < n_background; ++j) {
      const std::vector<double> real_src =
          want_real ? band_noise(n, sig.real_signature, rate_hz, mix_seed(mix_seed(seed, kRealSource), j))
                    : std::vector<double>();
      const std::vector<double> fake_src =
          want_fake ? band_noise(n, sig.fake_signature, rate_hz, mix_seed(mix_seed(seed, kFakeSource), j))
                    : std::vector<double>();
      const std::vector<double> drift_src =
          want_fake && sig.drift ? band_noise(n, drift_target, rate_hz, mix_seed(mix_seed(seed, kFakeDriftSource), j))
                                 : std::vector<double>();
      auto row = sources.row(static_cast<Eigen::Index>(j));
      for (const auto& iv : track.intervals) {
        const bool real = iv.tag == Tag::real && want_real;
        const bool fake = iv.tag == Tag::fake && want_fake;
        if (!real && !fake) continue;
        const std::size_t i0 = to_index(iv.start_s, rate_hz, n), i1 = to_index(iv.end_s, rate_hz, n);
        for (std::size_t i = i0; i < i1; ++i) {
          double v;
          if (real) {
            v = real_scale * real_src[i];
          } else if (sig.drift) {
            const double frac = (static_cast<double>(i) / rate_hz - stim_start) / stim_span;
            const double mix =
                std::clamp((frac - sig.drift->onset_fraction) / (1.0 - sig.drift->onset_fraction), 0.0, 1.0);
            v = fake_scale * (std::cos(mix * std::numbers::pi / 2.0) * fake_src[i] +
                              std::sin(mix * std::numbers::pi / 2.0) * drift_src[i]);
          } else {
            v = fake_scale * fake_src[i];
          }
          row(static_cast<Eigen::Index>(i)) += v;
        }
      }
    }
  }

  {
    std::mt19937_64 rng(mix_seed(seed, kBackgroundMixing));
    std::uniform_real_distribution<double> weight(-1.0, 1.0);
    Eigen::MatrixXd mixing(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(n_background));
    for (Eigen::Index r = 0; r < mixing.rows(); ++r) {
      for (Eigen::Index c = 0; c < mixing.cols(); ++c) mixing(r, c) = weight(rng);
      mixing.row(r) *= mixed_uv / mixing.row(r).norm();
    }
    rec.data.noalias() = mixing * sources;
    for (std::size_t c = 0; c < channels; ++c) {
      const auto sensor = bursty_pink(kSensorBase + c, kSensorEnvelopeBase + c);
      rec.data.row(static_cast<Eigen::Index>(c)) +=
          (kSensorShare * sig.background_uv) *
          Eigen::Map<const Eigen::RowVectorXd>(sensor.data(), static_cast<Eigen::Index>(n));
    }
  }

  std::mt19937_64 pattern_rng(mix_seed(seed, kPatterns));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool has_mastoids = channels >= 2;
  auto broad_pattern = [&](double lo, double hi) {
    Eigen::VectorXd p(static_cast<Eigen::Index>(channels));
    for (std::size_t c = 0; c < channels; ++c) p(static_cast<Eigen::Index>(c)) = lo + (hi - lo) * unit(pattern_rng);
    if (has_mastoids) p.tail(2) *= 0.1;
    return p;
  };
  auto add_source = [&](const std::vector<double>& s, const Eigen::VectorXd& pattern) {
    const Eigen::Map<const Eigen::RowVectorXd> row(s.data(), static_cast<Eigen::Index>(s.size()));
    rec.data.noalias() += pattern * row;
  };

  if (sig.line_noise.amplitude_uv > 0.0) {
    std::mt19937_64 rng(mix_seed(seed, kLine));
    const double phase = 2.0 * std::numbers::pi * unit(rng);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = sig.line_noise.amplitude_uv *
             std::sin(2.0 * std::numbers::pi * sig.line_noise.hz * static_cast<double>(i) / rate_hz + phase);
    }
    add_source(s, broad_pattern(0.5, 1.0));
  }

  if (sig.heartbeat.amplitude_uv > 0.0) {
    std::mt19937_64 rng(mix_seed(seed, kHeart));
    std::vector<double> s(n, 0.0);
    const double period = 60.0 / sig.heartbeat.bpm;
    const double width = 0.01 * rate_hz;  // 10 ms Gaussian pulse
    const auto half = static_cast<long>(std::ceil(4.0 * width));
    for (double beat = period * unit(rng); beat < end_s; beat += period * (0.98 + 0.04 * unit(rng))) {
      const auto center = static_cast<long>(std::llround(beat * rate_hz));
      for (long j = std::max(0L, center - half); j < std::min(static_cast<long>(n), center + half + 1); ++j) {
        const double d = static_cast<double>(j - center) / width;
        s[static_cast<std::size_t>(j)] += sig.heartbeat.amplitude_uv * std::exp(-0.5 * d * d);
      }
    }
    add_source(s, broad_pattern(0.2, 1.0));
  }

  if (sig.muscle.amplitude_uv > 0.0 && sig.muscle.rate_per_min > 0.0 && rate_hz > 70.0) {
    std::mt19937_64 rng(mix_seed(seed, kMuscle));
    std::exponential_distribution<double> gap(sig.muscle.rate_per_min / 60.0);
    std::vector<double> s(n, 0.0);
    const dsp::Sos hp = dsp::butterworth_highpass(4, 30.0, rate_hz);
    std::uint64_t burst = 0;
    for (double t = gap(rng); t < end_s; t += gap(rng)) {
      const double len = 0.2 + 0.4 * unit(rng);
      const std::size_t i0 = to_index(t, rate_hz, n), i1 = to_index(t + len, rate_hz, n);
      if (i1 <= i0) continue;
      std::vector<double> b = white_noise(i1 - i0, mix_seed(seed, kMuscle + 100 + burst++));
      dsp::sos_filter(hp, b);
      normalize_rms(b);
      for (std::size_t i = i0; i < i1; ++i) s[i] += sig.muscle.amplitude_uv * b[i - i0];
    }
    // Concentrated on a few neighbouring channels.
    Eigen::VectorXd pattern = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(channels), 0.05);
    const auto focus = static_cast<std::size_t>(unit(pattern_rng) * static_cast<double>(channels)) % channels;
    const double weights[] = {1.0, 0.6, 0.3};
    for (std::size_t j = 0; j < 3 && j < channels; ++j) pattern(static_cast<Eigen::Index>((focus + j) % channels)) = weights[j];
    add_source(s, pattern);
  }

  if (sig.drift_uv > 0.0) {
    std::mt19937_64 rng(mix_seed(seed, kWander));
    for (std::size_t c = 0; c < channels; ++c) {
      const double f = 0.02 + 0.06 * unit(rng);
      const double phase = 2.0 * std::numbers::pi * unit(rng);
      for (std::size_t i = 0; i < n; ++i) {
        rec.data(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)) +=
            sig.drift_uv * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / rate_hz + phase);
      }
    }
  }
  return rec;
}

}  // namespace neurowave
