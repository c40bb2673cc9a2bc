#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace neurowave {

// channels x samples, one contiguous row per channel.
using SignalMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
// L x d epoch window, stored in single precision to keep large epoch sets small.
using WindowMatrix = Eigen::MatrixXf;

enum class Label { real = 0, fake = 1 };
enum class Tag { real, fake, silence, baseline };

std::string_view to_string(Label label);
std::string_view to_string(Tag tag);
Label label_from_string(std::string_view s);
Tag tag_from_string(std::string_view s);

// Multichannel uniformly sampled signal in microvolts.
struct Recording {
  SignalMatrix data;
  double sample_rate_hz = 0.0;
  std::vector<std::string> channel_names;
  double start_time_s = 0.0;

  std::size_t channels() const { return static_cast<std::size_t>(data.rows()); }
  std::size_t samples() const { return static_cast<std::size_t>(data.cols()); }
  double duration_s() const { return static_cast<double>(samples()) / sample_rate_hz; }
  double end_time_s() const { return start_time_s + duration_s(); }

  // Index of a named channel, or nullopt.
  std::optional<std::size_t> find_channel(std::string_view name) const;

  // Throws InputError when names/rows disagree, the rate is not positive or
  // a sample is not finite.
  void validate() const;
};

struct Interval {
  double start_s = 0.0;
  double end_s = 0.0;
  Tag tag = Tag::real;

  double length() const { return end_s - start_s; }
  bool operator==(const Interval&) const = default;
};

// Stimulus timeline: sorted, non-overlapping intervals with exactly one
// baseline interval ahead of every stimulus interval.
struct LabelTrack {
  std::vector<Interval> intervals;

  const Interval* baseline() const;
  void validate() const;
  bool operator==(const LabelTrack&) const = default;
};

struct Epoch {
  WindowMatrix window;  // L x d
  Label label = Label::real;
  double origin_time_s = 0.0;
};

struct EpochSet {
  std::vector<Epoch> epochs;
  double window_s = 0.0;
  double overlap_fraction = 0.0;
  double sample_rate_hz = 0.0;
  std::vector<std::string> channel_names;

  std::size_t size() const { return epochs.size(); }
  bool empty() const { return epochs.empty(); }
  bool ordered() const;
  std::vector<Label> labels() const;
  EpochSet subset(const std::vector<std::size_t>& indices) const;
};

}  // namespace neurowave
