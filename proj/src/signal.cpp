#include "neurowave/signal.hpp"

#include "neurowave/dsp.hpp"
#include "neurowave/error.hpp"

#include <algorithm>
#include <cmath>

namespace neurowave {
namespace {

constexpr double kTimeTolerance = 1e-9;

// Nearest integer when x is integral within tolerance.
bool as_integral(double x, std::size_t& out) {
  const double r = std::round(x);
  if (r < 0.0 || std::abs(x - r) > 1e-6 * std::max(1.0, std::abs(x))) return false;
  out = static_cast<std::size_t>(r);
  return true;
}

double overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

}  // namespace

Recording baseline_correct(const Recording& rec, const LabelTrack& track) {
  rec.validate();
  const Interval* base = track.baseline();
  if (base == nullptr) throw InputError("no baseline: track has no baseline interval");
  if (base->start_s < rec.start_time_s - kTimeTolerance || base->end_s > rec.end_time_s() + kTimeTolerance) {
    throw InputError("no baseline: baseline interval lies outside the recording");
  }
  const double fs = rec.sample_rate_hz;
  const auto first = static_cast<Eigen::Index>(std::max(0.0, std::ceil((base->start_s - rec.start_time_s) * fs - kTimeTolerance)));
  const auto last = std::min<Eigen::Index>(
      rec.data.cols(), static_cast<Eigen::Index>(std::ceil((base->end_s - rec.start_time_s) * fs - kTimeTolerance)));
  if (last <= first) throw InputError("no baseline: baseline interval contains no samples");

  Recording out = rec;
  const Eigen::VectorXd means = rec.data.middleCols(first, last - first).rowwise().mean();
  out.data.colwise() -= means;
  return out;
}

Recording bandpass_filter(const Recording& rec, double low_hz, double high_hz, const BandpassOptions& options) {
  rec.validate();
  const double fs = rec.sample_rate_hz;
  if (!(low_hz > 0.0) || !(low_hz < high_hz) || !(high_hz < fs / 2.0)) {
    throw InputError("band edges must satisfy 0 < low < high < Nyquist");
  }
  const dsp::Sos sos = dsp::butterworth_bandpass(options.order, low_hz, high_hz, fs);
  const double pad_s = options.pad_s > 0.0 ? options.pad_s : 3.0 / low_hz;
  const auto pad = static_cast<std::size_t>(std::ceil(pad_s * fs));

  Recording out = rec;
  for (Eigen::Index c = 0; c < out.data.rows(); ++c) {
    auto row = out.data.row(c);
    dsp::filtfilt(sos, std::span<double>(row.data(), static_cast<std::size_t>(row.size())), pad);
  }
  return out;
}

Recording rereference_common_average(const Recording& rec) {
  rec.validate();
  if (rec.channels() < 2) throw InputError("common average reference needs at least 2 channels");
  Recording out = rec;
  const Eigen::RowVectorXd mean = rec.data.colwise().mean();
  out.data.rowwise() -= mean;
  return out;
}

Recording rereference_mastoid(const Recording& rec, const std::string& left_name, const std::string& right_name) {
  rec.validate();
  const auto left = rec.find_channel(left_name);
  const auto right = rec.find_channel(right_name);
  if (!left) throw InputError("missing mastoid channel '" + left_name + "'");
  if (!right) throw InputError("missing mastoid channel '" + right_name + "'");
  const Eigen::RowVectorXd ref =
      0.5 * (rec.data.row(static_cast<Eigen::Index>(*left)) + rec.data.row(static_cast<Eigen::Index>(*right)));
  Recording out = rec;
  out.data.rowwise() -= ref;
  return out;
}

Recording resample(const Recording& rec, double target_hz) {
  rec.validate();
  if (!(target_hz > 0.0)) throw InputError("target rate must be positive");
  long up = 0, down = 0;
  if (!dsp::rational_approximation(target_hz / rec.sample_rate_hz, 10000, up, down)) {
    throw InputError("resampling ratio is not a rational with denominator <= 10000");
  }
  if (up > 10000) throw InputError("resampling ratio numerator exceeds 10000");

  Recording out;
  out.sample_rate_hz = target_hz;
  out.channel_names = rec.channel_names;
  out.start_time_s = rec.start_time_s;
  if (up == down) {
    out.data = rec.data;
    return out;
  }
  const auto n_out = static_cast<Eigen::Index>((rec.data.cols() * up + down - 1) / down);
  out.data.resize(rec.data.rows(), n_out);
  for (Eigen::Index c = 0; c < rec.data.rows(); ++c) {
    const auto row = rec.data.row(c);
    const auto y = dsp::resample_poly(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())),
                                      static_cast<int>(up), static_cast<int>(down));
    out.data.row(c) = Eigen::Map<const Eigen::RowVectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  }
  return out;
}

WindowGeometry window_geometry(double window_s, double overlap_fraction, double sample_rate_hz) {
  if (!(window_s > 0.0)) throw InputError("window length must be positive");
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) throw InputError("overlap must lie in [0, 1)");
  WindowGeometry g;
  if (!as_integral(window_s * sample_rate_hz, g.length) || g.length == 0) {
    throw InputError("window length is not an integral number of samples");
  }
  if (!as_integral(static_cast<double>(g.length) * (1.0 - overlap_fraction), g.hop) || g.hop == 0) {
    throw InputError("window hop is not an integral number of samples");
  }
  return g;
}

std::size_t segment_count(std::size_t n, std::size_t length, std::size_t hop) {
  if (n < length || hop == 0) return 0;
  return (n - length) / hop + 1;
}

EpochSet segment(const Recording& rec, double window_s, double overlap_fraction) {
  rec.validate();
  const WindowGeometry g = window_geometry(window_s, overlap_fraction, rec.sample_rate_hz);
  EpochSet set;
  set.window_s = window_s;
  set.overlap_fraction = overlap_fraction;
  set.sample_rate_hz = rec.sample_rate_hz;
  set.channel_names = rec.channel_names;
  const std::size_t count = segment_count(rec.samples(), g.length, g.hop);
  set.epochs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto start = static_cast<Eigen::Index>(i * g.hop);
    Epoch e;
    e.window = rec.data.middleCols(start, static_cast<Eigen::Index>(g.length)).transpose().cast<float>();
    e.origin_time_s = rec.start_time_s + static_cast<double>(start) / rec.sample_rate_hz;
    set.epochs.push_back(std::move(e));
  }
  return set;
}

EpochSet label_epochs(const EpochSet& set, const LabelTrack& track) {
  track.validate();
  EpochSet out;
  out.window_s = set.window_s;
  out.overlap_fraction = set.overlap_fraction;
  out.sample_rate_hz = set.sample_rate_hz;
  out.channel_names = set.channel_names;
  for (const auto& epoch : set.epochs) {
    const double t0 = epoch.origin_time_s;
    const double t1 = t0 + static_cast<double>(epoch.window.rows()) / set.sample_rate_hz;
    double real = 0.0, fake = 0.0, covered = 0.0;
    bool excluded = false;
    for (const auto& iv : track.intervals) {
      const double o = overlap(t0, t1, iv.start_s, iv.end_s);
      if (o <= 0.0) continue;
      covered += o;
      if (o <= kTimeTolerance) continue;
      switch (iv.tag) {
        case Tag::real:
          real += o;
          break;
        case Tag::fake:
          fake += o;
          break;
        case Tag::silence:
        case Tag::baseline:
          excluded = true;
          break;
      }
    }
    if (covered < (t1 - t0) - 1e-6) {
      throw DataError("unlabeled region: epoch at " + std::to_string(t0) + " s is not covered by the track");
    }
    if (excluded) continue;
    Epoch e = epoch;
    e.label = real > fake + kTimeTolerance ? Label::real : Label::fake;
    out.epochs.push_back(std::move(e));
  }
  return out;
}

}  // namespace neurowave
