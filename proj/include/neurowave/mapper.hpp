#pragma once

// Mapper graphs over labeled point clouds, highest-density-region
// filtering and colored export.

#include "neurowave/types.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace neurowave {

struct PointCloud {
  Eigen::MatrixXd points;  // n x dim
  std::vector<Label> labels;
  std::string source = "eeg";

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
  void validate() const;
};

enum class LensKind { pca2, density, custom_axis, identity };

struct LensSpec {
  LensKind kind = LensKind::pca2;
  std::size_t axis = 0;  // custom_axis only
};

std::string_view to_string(LensKind k);
LensKind lens_kind_from_string(std::string_view s);
std::string describe(const LensSpec& spec);

// n x m lens values: pca2 gives the first two principal scores, density a
// Gaussian KDE per point (Scott bandwidth per dimension), custom_axis one
// coordinate and identity the coordinates themselves.
Eigen::MatrixXd lens(const PointCloud& cloud, const LensSpec& spec);

// Gaussian KDE at every point with per-dimension Scott's-rule bandwidths.
Eigen::VectorXd kde_density(const Eigen::MatrixXd& points);

// Each column scaled to [0, 1]; constant columns map to 0.
Eigen::MatrixXd minmax_normalize(const Eigen::MatrixXd& points);

struct MapperParams {
  int intervals_per_axis = 10;
  double overlap = 0.3;
  // Single-linkage cut on min-max normalized coordinates: points closer than
  // eps join the same cluster.
  double cluster_eps = 0.65;
};

struct MapperNode {
  std::vector<std::size_t> members;  // ascending point indices
  double density = 0.0;              // mean KDE density of the members
  double fake_fraction = 0.0;
  std::size_t cell = 0;

  bool operator==(const MapperNode&) const = default;
};

struct MapperGraph {
  std::vector<MapperNode> nodes;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // i < j, sorted
  std::size_t n_points = 0;
  std::string lens_spec;
  std::string cover_spec;
  std::string cluster_spec;

  bool operator==(const MapperGraph&) const = default;
};

// Interval [lo, hi] of cover element `index` on an axis spanning [min, max].
std::pair<double, double> cover_interval(double min, double max, int intervals, double overlap, int index);

MapperGraph build_mapper(const PointCloud& cloud, const Eigen::MatrixXd& lens_values, const MapperParams& params);

// Keeps the densest nodes until their share of the total node membership
// reaches mass_threshold; drops the rest and their edges.
MapperGraph hdr_filter(const MapperGraph& graph, double mass_threshold);

// Fraction of nodes whose majority class makes up at least `purity`.
double purity_score(const MapperGraph& graph, double purity = 0.9);

enum class GraphFormat { dot, json };
GraphFormat graph_format_from_string(std::string_view s);

// "#rrggbb" between blue (all fake) and purple (all real), darkened by
// relative density in [0, 1].
std::string node_color(double fake_fraction, double relative_density);

std::string export_graph(const MapperGraph& graph, GraphFormat format);
MapperGraph import_graph_json(const std::string& text);

// Per-epoch log band powers (delta..gamma) for every channel.
PointCloud epoch_feature_cloud(const EpochSet& set);

// Two Gaussian classes in `dim` dimensions whose means are `separation`
// standard deviations apart along the first axis.
PointCloud synthetic_cloud(std::size_t per_class, std::size_t dim, double separation, std::uint64_t seed,
                           std::string source);

}  // namespace neurowave
