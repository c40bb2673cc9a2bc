#pragma once

// Whole-workflow configuration and the commands behind the CLI.

#include "neurowave/classifier.hpp"
#include "neurowave/evaluation.hpp"
#include "neurowave/ica.hpp"
#include "neurowave/mapper.hpp"
#include "neurowave/synth.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace neurowave {

inline constexpr int kConfigVersion = 1;

struct PreprocessConfig {
  double filter_low_hz = 0.5;
  double filter_high_hz = 80.0;
  int filter_order = 4;
  // Applied in order; entries are "mastoid" or "average".
  std::vector<std::string> reference_order{"mastoid", "average"};
  std::string mastoid_left = "TP9";
  std::string mastoid_right = "TP10";
  double target_rate_hz = 256.0;
  double window_s = 0.5;
  double overlap_fraction = 0.5;
};

struct IcaStageConfig {
  bool enabled = true;
  // Capped at the channel count minus one per re-reference step.
  int components = 20;
  std::uint64_t seed = 0;
  double threshold = 0.5;
  std::set<ComponentCategory> remove{ComponentCategory::muscle, ComponentCategory::heartbeat,
                                     ComponentCategory::line_noise, ComponentCategory::channel_noise,
                                     ComponentCategory::eye_blink};
  int max_iterations = 500;
  double tolerance = 1e-6;
  std::size_t max_fit_samples = 200000;
  bool add_back_residual = true;
  LabelerConfig labeler;
};

enum class SplitKind { random, ordered };
std::string_view to_string(SplitKind k);
SplitKind split_kind_from_string(std::string_view s);

struct SplitConfig {
  SplitKind kind = SplitKind::random;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  bool drop_boundary = false;
};

struct MapperStageConfig {
  LensSpec lens;
  MapperParams params;
  double mass_threshold = 0.65;
  double purity = 0.9;
};

struct PipelineConfig {
  int version = kConfigVersion;
  PreprocessConfig preprocess;
  IcaStageConfig ica;
  ModelConfig model;  // L and d come from the epoch archive
  TrainHyper train;
  SplitConfig split;
  MapperStageConfig mapper;

  // Every seed in the config set to `seed`.
  void override_seed(std::uint64_t seed);
};

// Strict parsing: the version key is mandatory and unknown keys are rejected
// with their dotted path. Missing keys keep their defaults.
PipelineConfig pipeline_config_from_json(const std::string& text);
std::string to_json(const PipelineConfig& config);
std::uint64_t config_checksum(const PipelineConfig& config);

struct SynthConfig {
  int version = kConfigVersion;
  SessionSpec session;
  SignatureSpec signature;
  std::size_t channels = 64;
  double sample_rate_hz = 5000.0;
};

SynthConfig synth_config_from_json(const std::string& text);
std::string to_json(const SynthConfig& config);

struct SynthOutput {
  Recording recording;
  LabelTrack track;
};

SynthOutput synthesize(const SynthConfig& config);

struct PreprocessOutput {
  EpochSet epochs;
  std::vector<std::string> stages;
  std::optional<IcaModel> ica;
  std::vector<ComponentFeatures> ica_features;
  std::vector<std::size_t> removed_components;
};

// baseline -> bandpass -> re-reference -> ICA -> resample -> segment -> label.
// Stage failures are rethrown with the same error type and the stage name
// prefixed to the message.
PreprocessOutput preprocess(const PipelineConfig& config, const Recording& rec, const LabelTrack& track,
                            bool skip_ica = false);

struct TrainEvalOutput {
  Split split;
  TrainResult trained;
  std::vector<Prediction> predictions;
  std::array<ClassMetrics, 2> metrics;
  std::string table;
};

TrainEvalOutput train_eval(const PipelineConfig& config, const EpochSet& epochs, SplitKind kind,
                           const TrainProgress& progress = {});

struct MapperOutput {
  std::vector<MapperGraph> graphs;
  std::vector<double> purity;
  std::string report;
};

MapperOutput run_mapper(const PipelineConfig& config, const std::vector<PointCloud>& clouds);

namespace fs = std::filesystem;

// File-level commands; each returns the paths it wrote.
std::vector<fs::path> cmd_synth(const SynthConfig& config, const fs::path& out_dir);
std::vector<fs::path> cmd_preprocess(const PipelineConfig& config, const fs::path& recording, const fs::path& track,
                                     const fs::path& out_dir, bool skip_ica);
std::vector<fs::path> cmd_train_eval(const PipelineConfig& config, const fs::path& epochs, SplitKind kind,
                                     const fs::path& out_dir);
std::vector<fs::path> cmd_mapper(const PipelineConfig& config, const std::vector<fs::path>& clouds,
                                 const fs::path& out_dir);

}  // namespace neurowave
