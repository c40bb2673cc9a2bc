#include "neurowave/types.hpp"

#include "neurowave/error.hpp"

#include <cmath>

namespace neurowave {

std::string_view to_string(Label label) {
  return label == Label::fake ? "fake" : "real";
}

std::string_view to_string(Tag tag) {
  switch (tag) {
    case Tag::real:
      return "real";
    case Tag::fake:
      return "fake";
    case Tag::silence:
      return "silence";
    case Tag::baseline:
      return "baseline";
  }
  return "real";
}

Label label_from_string(std::string_view s) {
  if (s == "real") return Label::real;
  if (s == "fake") return Label::fake;
  throw InputError("unknown label '" + std::string(s) + "'");
}

Tag tag_from_string(std::string_view s) {
  if (s == "real") return Tag::real;
  if (s == "fake") return Tag::fake;
  if (s == "silence") return Tag::silence;
  if (s == "baseline") return Tag::baseline;
  throw InputError("unknown interval tag '" + std::string(s) + "'");
}

std::optional<std::size_t> Recording::find_channel(std::string_view name) const {
  for (std::size_t i = 0; i < channel_names.size(); ++i) {
    if (channel_names[i] == name) return i;
  }
  return std::nullopt;
}

void Recording::validate() const {
  if (channel_names.size() != channels()) {
    throw InputError("recording has " + std::to_string(channels()) + " rows but " +
                     std::to_string(channel_names.size()) + " channel names");
  }
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
    throw InputError("sample rate must be positive");
  }
  if (!data.allFinite()) throw InputError("recording contains non-finite samples");
}

const Interval* LabelTrack::baseline() const {
  for (const auto& iv : intervals) {
    if (iv.tag == Tag::baseline) return &iv;
  }
  return nullptr;
}

void LabelTrack::validate() const {
  int baselines = 0;
  bool stimulus_seen = false;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const auto& iv = intervals[i];
    if (!(iv.start_s < iv.end_s)) throw InputError("label interval with start >= end");
    if (i > 0 && iv.start_s < intervals[i - 1].end_s) {
      throw InputError("label intervals overlap or are unsorted");
    }
    if (iv.tag == Tag::baseline) {
      ++baselines;
      if (stimulus_seen) throw InputError("baseline interval must precede stimulus intervals");
    } else if (iv.tag == Tag::real || iv.tag == Tag::fake) {
      stimulus_seen = true;
    }
  }
  if (baselines != 1) throw InputError("label track needs exactly one baseline interval");
}

bool EpochSet::ordered() const {
  for (std::size_t i = 1; i < epochs.size(); ++i) {
    if (epochs[i].origin_time_s < epochs[i - 1].origin_time_s) return false;
  }
  return true;
}

std::vector<Label> EpochSet::labels() const {
  std::vector<Label> out;
  out.reserve(epochs.size());
  for (const auto& e : epochs) out.push_back(e.label);
  return out;
}

EpochSet EpochSet::subset(const std::vector<std::size_t>& indices) const {
  EpochSet out;
  out.window_s = window_s;
  out.overlap_fraction = overlap_fraction;
  out.sample_rate_hz = sample_rate_hz;
  out.channel_names = channel_names;
  out.epochs.reserve(indices.size());
  for (auto i : indices) out.epochs.push_back(epochs.at(i));
  return out;
}

}  // namespace neurowave
