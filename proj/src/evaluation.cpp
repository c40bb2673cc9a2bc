#include "neurowave/evaluation.hpp"

#include "neurowave/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

namespace neurowave {

Split split_random(std::size_t n, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InputError("test fraction must lie in (0, 1)");
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  if (n_test == 0 || n_test >= n) throw DataError("split would leave an empty train or test set");

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  // Fisher-Yates with an explicit draw so the permutation is fixed across
  // standard library implementations.
  std::mt19937_64 rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(idx[i], idx[j]);
  }
  Split split;
  split.test_indices.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.train_indices.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  std::sort(split.test_indices.begin(), split.test_indices.end());
  std::sort(split.train_indices.begin(), split.train_indices.end());
  return split;
}

Split split_random(const EpochSet& set, double test_fraction, std::uint64_t seed) {
  return split_random(set.size(), test_fraction, seed);
}

Split split_ordered(const EpochSet& set, double train_fraction, bool drop_boundary) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InputError("train fraction must lie in (0, 1)");
  if (!set.ordered()) throw InputError("ordered split needs epochs sorted by origin time");
  const std::size_t n = set.size();
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train >= n) throw DataError("split would leave an empty train or test set");
  Split split;
  split.train_indices.resize(n_train);
  std::iota(split.train_indices.begin(), split.train_indices.end(), 0);
  std::size_t first_test = n_train;
  const double window_s = set.window_s > 0.0          ? set.window_s
                          : set.sample_rate_hz > 0.0 ? static_cast<double>(set.epochs[0].window.rows()) / set.sample_rate_hz
                                                     : 0.0;
  if (drop_boundary && window_s > 0.0) {
    const double last_end = set.epochs[n_train - 1].origin_time_s + window_s;
    if (set.epochs[n_train].origin_time_s < last_end) ++first_test;
  }
  if (first_test >= n) throw DataError("split would leave an empty test set");
  for (std::size_t i = first_test; i < n; ++i) split.test_indices.push_back(i);
  return split;
}

ClassMetrics metrics_from_counts(Label label, const ConfusionCounts& c) {
  ClassMetrics m;
  m.label = label;
  m.counts = c;
  m.support = c.tp + c.fn;
  if (c.tp + c.fp > 0) {
    m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  } else {
    m.undefined = true;
  }
  if (c.tp + c.fn > 0) {
    m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  } else {
    m.undefined = true;
  }
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  } else {
    m.undefined = true;
  }
  return m;
}

std::array<ClassMetrics, 2> compute_metrics(const std::vector<Label>& predicted, const std::vector<Label>& actual) {
  if (predicted.size() != actual.size()) throw InputError("predicted and actual label counts differ");
  if (predicted.empty()) throw InputError("metrics need at least one sample");
  std::array<ClassMetrics, 2> out;
  for (Label cls : {Label::real, Label::fake}) {
    ConfusionCounts c;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
      const bool p = predicted[i] == cls, a = actual[i] == cls;
      if (p && a) ++c.tp;
      else if (p) ++c.fp;
      else if (a) ++c.fn;
      else ++c.tn;
    }
    out[static_cast<std::size_t>(cls)] = metrics_from_counts(cls, c);
  }
  return out;
}

double round3(double x) { return std::round(x * 1000.0) / 1000.0; }

std::string format_metrics_table(const std::array<ClassMetrics, 2>& metrics, const std::string& title) {
  std::string out = title + "\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-11s | %9s | %6s | %8s | %7s\n", "Class", "Precision", "Recall", "F1-score",
                "Support");
  out += line;
  out += std::string(55, '-') + "\n";
  for (const auto& m : metrics) {
    const std::string name = m.label == Label::real ? "Real class" : "Fake class";
    std::snprintf(line, sizeof line, "%-11s | %9.3f | %6.3f | %8.3f | %7zu%s\n", name.c_str(), round3(m.precision),
                  round3(m.recall), round3(m.f1), m.support, m.undefined ? "  (undefined metric set to 0)" : "");
    out += line;
  }
  out += "\nConfusion counts\n";
  for (const auto& m : metrics) {
    std::snprintf(line, sizeof line, "%-11s tp=%zu fp=%zu fn=%zu tn=%zu\n", m.label == Label::real ? "Real" : "Fake",
                  m.counts.tp, m.counts.fp, m.counts.fn, m.counts.tn);
    out += line;
  }
  return out;
}

}  // namespace neurowave
