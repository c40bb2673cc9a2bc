#pragma once

// FastICA decomposition, a rule-based component labeler and artifact
// removal with reconstruction back to channel space.

#include "neurowave/types.hpp"

#include <array>
#include <cstdint>
#include <set>
#include <string_view>
#include <vector>

namespace neurowave {

enum class ComponentCategory { muscle, heartbeat, line_noise, channel_noise, eye_blink, brain, other };

inline constexpr std::size_t kCategoryCount = 7;
inline constexpr std::array<ComponentCategory, kCategoryCount> kAllCategories = {
    ComponentCategory::muscle,        ComponentCategory::heartbeat, ComponentCategory::line_noise,
    ComponentCategory::channel_noise, ComponentCategory::eye_blink, ComponentCategory::brain,
    ComponentCategory::other};

std::string_view to_string(ComponentCategory c);
ComponentCategory category_from_string(std::string_view s);

// Probability per category, indexed by the enum value. Sums to 1.
using CategoryScores = std::array<double, kCategoryCount>;
ComponentCategory argmax(const CategoryScores& scores);

struct IcaModel {
  Eigen::MatrixXd unmixing;  // k x channels, applied to mean-removed data
  Eigen::MatrixXd mixing;    // channels x k
  Eigen::VectorXd mean;      // per-channel mean removed before unmixing
  std::vector<CategoryScores> scores;  // empty until label_components runs
  int iterations = 0;

  std::size_t components() const { return static_cast<std::size_t>(unmixing.rows()); }
  std::size_t channels() const { return static_cast<std::size_t>(unmixing.cols()); }
  bool labeled() const { return scores.size() == components(); }
};

struct IcaOptions {
  double tolerance = 1e-6;
  int max_iterations = 500;
  // Fit on at most this many samples (uniform stride); 0 uses all.
  std::size_t max_fit_samples = 0;
};

// Symmetric FastICA (g = tanh) on PCA-whitened data reduced to k dimensions.
// Components are ordered by back-projected variance, signs fixed so the
// largest mixing weight is positive.
IcaModel fit_ica(const Recording& rec, std::size_t k, std::uint64_t seed, const IcaOptions& options = {});

// Component activations, k x samples.
Eigen::MatrixXd ica_sources(const IcaModel& model, const Recording& rec);

struct LabelerConfig {
  double mains_hz = 50.0;
  double line_halfwidth_hz = 1.0;
  double line_fraction = 0.6;
  double muscle_cutoff_hz = 30.0;
  double muscle_fraction = 0.5;
  double heartbeat_min_period_s = 0.6;
  double heartbeat_max_period_s = 1.5;
  double heartbeat_prominence = 0.3;
  double channel_concentration = 0.9;
  bool eyes_closed = true;
  double eye_cutoff_hz = 3.0;
  double eye_fraction = 0.7;
  // Spectral slope range (log-log, 1-40 Hz) read as brain activity.
  double brain_slope_min = -3.0;
  double brain_slope_max = -0.5;
  double slope_fit_low_hz = 1.0;
  double slope_fit_high_hz = 40.0;
};

// Per-component measurements behind the scores.
struct ComponentFeatures {
  double line_fraction = 0.0;
  double high_frequency_fraction = 0.0;
  double low_frequency_fraction = 0.0;
  double heartbeat_prominence = 0.0;
  double channel_concentration = 0.0;
  double spectral_slope = 0.0;
  double dominant_hz = 0.0;
};

std::vector<ComponentFeatures> component_features(const IcaModel& model, const Recording& rec,
                                                  const LabelerConfig& config = {});

// Maps features to category probabilities. Each artifact rule contributes a
// logistic evidence around its threshold; whatever evidence remains is split
// between brain and other by the spectral-slope test.
CategoryScores score_component(const ComponentFeatures& f, const LabelerConfig& config = {});

IcaModel label_components(const IcaModel& model, const Recording& rec, const LabelerConfig& config = {});

struct ReconstructOptions {
  // Add the variance outside the k retained PCA dimensions back in.
  bool add_back_residual = true;
};

// Zeroes components whose argmax category is in `remove` with score >=
// threshold, then maps back to channel space.
Recording remove_and_reconstruct(const IcaModel& model, const Recording& rec,
                                 const std::set<ComponentCategory>& remove, double threshold,
                                 const ReconstructOptions& options = {});

// Indices of the components remove_and_reconstruct would zero.
std::vector<std::size_t> components_to_remove(const IcaModel& model, const std::set<ComponentCategory>& remove,
                                              double threshold);

}  // namespace neurowave
