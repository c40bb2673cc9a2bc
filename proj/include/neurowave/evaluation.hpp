#pragma once

#include "neurowave/types.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace neurowave {

struct Split {
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

// Uniform shuffle by seed; |test| = round(test_fraction * N).
Split split_random(const EpochSet& set, double test_fraction, std::uint64_t seed);
Split split_random(std::size_t n, double test_fraction, std::uint64_t seed);

// First round(train_fraction * N) epochs (in origin order) train, the rest
// test. With drop_boundary, the first test epoch is discarded when it
// overlaps the last training epoch in time.
Split split_ordered(const EpochSet& set, double train_fraction, bool drop_boundary = false);

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct ClassMetrics {
  Label label = Label::real;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  ConfusionCounts counts;
  // Set when a zero denominator forced a metric to 0.
  bool undefined = false;
};

ClassMetrics metrics_from_counts(Label label, const ConfusionCounts& counts);

// One row per class, indexed by the Label value.
std::array<ClassMetrics, 2> compute_metrics(const std::vector<Label>& predicted, const std::vector<Label>& actual);

// Fixed-width text table with class rows and precision/recall/F1 at three
// decimals, followed by the confusion counts.
std::string format_metrics_table(const std::array<ClassMetrics, 2>& metrics, const std::string& title);

double round3(double x);

}  // namespace neurowave
