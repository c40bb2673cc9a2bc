#pragma once

// On-disk formats. Every structured-text header is JSON carrying a
// "format_version"; bulk data lives in little-endian binary sidecars named in
// the header relative to it.

#include "neurowave/classifier.hpp"
#include "neurowave/ica.hpp"
#include "neurowave/mapper.hpp"
#include "neurowave/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace neurowave::io {

namespace fs = std::filesystem;

inline constexpr int kFormatVersion = 1;

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

// Recording: header JSON plus raw float32 channel-major samples in
// <header stem>.bin.
void save_recording(const Recording& rec, const fs::path& header_path);
Recording load_recording(const fs::path& header_path);

void save_label_track(const LabelTrack& track, const fs::path& path);
LabelTrack load_label_track(const fs::path& path);
std::string label_track_json(const LabelTrack& track);
LabelTrack label_track_from_json(const std::string& text);

// Binary matrix sidecar: "NWMAT001", uint64 count, then per matrix uint64
// rows, uint64 cols and float64 column-major values.
void write_matrices(const fs::path& path, const std::vector<Eigen::MatrixXd>& matrices);
std::vector<Eigen::MatrixXd> read_matrices(const fs::path& path);

void save_ica_model(const IcaModel& model, const fs::path& header_path);
IcaModel load_ica_model(const fs::path& header_path);

// One row per component: index, argmax category, scores, dominant frequency.
std::string component_report(const IcaModel& model, const std::vector<ComponentFeatures>& features);

// Epoch archive: JSON manifest plus float32 windows (each L x d, row-major)
// in <manifest stem>.bin.
void save_epoch_set(const EpochSet& set, const fs::path& manifest_path);
EpochSet load_epoch_set(const fs::path& manifest_path);

// Params: float64 values in visiting order in <manifest stem>.bin, manifest
// with config, block shapes and checksum.
void save_params(const ModelParams& params, const fs::path& manifest_path);
ModelParams load_params(const fs::path& manifest_path);

std::string train_report_json(const TrainReport& report);

// Point cloud: JSON header with labels plus float32 row-major points.
void save_point_cloud(const PointCloud& cloud, const fs::path& header_path);
PointCloud load_point_cloud(const fs::path& header_path);

std::string hex64(std::uint64_t v);

}  // namespace neurowave::io
