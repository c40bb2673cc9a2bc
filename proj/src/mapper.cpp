#include "neurowave/mapper.hpp"

#include "neurowave/error.hpp"
#include "neurowave/spectral.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace neurowave {
namespace {

using json = nlohmann::json;

struct DisjointSet {
  std::vector<std::size_t> parent;
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a), b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

void PointCloud::validate() const {
  if (labels.size() != size()) throw InputError("point cloud has " + std::to_string(size()) + " points but " +
                                                std::to_string(labels.size()) + " labels");
  if (!points.allFinite()) throw InputError("point cloud contains non-finite coordinates");
}

std::string_view to_string(LensKind k) {
  switch (k) {
    case LensKind::pca2:
      return "pca2";
    case LensKind::density:
      return "density";
    case LensKind::custom_axis:
      return "custom-axis";
    case LensKind::identity:
      return "identity";
  }
  return "pca2";
}

LensKind lens_kind_from_string(std::string_view s) {
  for (auto k : {LensKind::pca2, LensKind::density, LensKind::custom_axis, LensKind::identity}) {
    if (to_string(k) == s) return k;
  }
  throw InputError("unknown lens '" + std::string(s) + "'");
}

std::string describe(const LensSpec& spec) {
  std::string out(to_string(spec.kind));
  if (spec.kind == LensKind::custom_axis) out += ":" + std::to_string(spec.axis);
  return out;
}

Eigen::MatrixXd minmax_normalize(const Eigen::MatrixXd& points) {
  Eigen::MatrixXd out = points;
  for (Eigen::Index c = 0; c < points.cols(); ++c) {
    const double lo = points.col(c).minCoeff(), hi = points.col(c).maxCoeff();
    if (hi > lo) {
      out.col(c) = (points.col(c).array() - lo) / (hi - lo);
    } else {
      out.col(c).setZero();
    }
  }
  return out;
}

Eigen::VectorXd kde_density(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.rows(), dim = points.cols();
  Eigen::VectorXd density = Eigen::VectorXd::Zero(n);
  if (n == 0) return density;
  const double scott = std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(dim) + 4.0));
  Eigen::RowVectorXd inv_bw(dim);
  for (Eigen::Index c = 0; c < dim; ++c) {
    const double mean = points.col(c).mean();
    const double sd = n > 1 ? std::sqrt((points.col(c).array() - mean).square().sum() / static_cast<double>(n - 1)) : 0.0;
    // Constant dimensions do not discriminate; give them unit bandwidth.
    inv_bw(c) = sd > 0.0 ? 1.0 / (sd * scott) : 1.0;
  }
  const Eigen::MatrixXd scaled = points.array().rowwise() * inv_bw.array();
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) acc += std::exp(-0.5 * (scaled.row(i) - scaled.row(j)).squaredNorm());
    density(i) = acc / static_cast<double>(n);
  }
  return density;
}

Eigen::MatrixXd lens(const PointCloud& cloud, const LensSpec& spec) {
  cloud.validate();
  const Eigen::Index n = cloud.points.rows();
  switch (spec.kind) {
    case LensKind::identity:
      return cloud.points;
    case LensKind::custom_axis:
      if (static_cast<Eigen::Index>(spec.axis) >= cloud.points.cols()) throw InputError("lens axis out of range");
      return cloud.points.col(static_cast<Eigen::Index>(spec.axis));
    case LensKind::density:
      if (n < 2) throw InputError("density lens needs at least 2 points");
      return kde_density(cloud.points);
    case LensKind::pca2: {
      if (n < 2) throw InputError("pca2 lens needs at least 2 points");
      const Eigen::MatrixXd centered = cloud.points.rowwise() - cloud.points.colwise().mean();
      const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
      if (!(cov.trace() > 0.0)) throw InputError("pca2 lens on a zero-variance cloud");
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
      Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, 2);
      const Eigen::Index dim = cov.rows();
      for (Eigen::Index k = 0; k < std::min<Eigen::Index>(2, dim); ++k) {
        Eigen::VectorXd v = es.eigenvectors().col(dim - 1 - k);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) v = -v;
        if (es.eigenvalues()(dim - 1 - k) > 1e-12 * es.eigenvalues()(dim - 1)) out.col(k) = centered * v;
      }
      return out;
    }
  }
  return cloud.points;
}

std::pair<double, double> cover_interval(double min, double max, int intervals, double overlap, int index) {
  const double range = max - min;
  if (range <= 0.0) return {min, max};
  const double length = range / (static_cast<double>(intervals) - static_cast<double>(intervals - 1) * overlap);
  const double start = min + static_cast<double>(index) * length * (1.0 - overlap);
  const double end = index + 1 == intervals ? max : start + length;
  return {start, end};
}

MapperGraph build_mapper(const PointCloud& cloud, const Eigen::MatrixXd& lens_values, const MapperParams& params) {
  if (params.intervals_per_axis < 1) throw InputError("need at least one cover interval per axis");
  if (!(params.overlap >= 0.0 && params.overlap < 1.0)) throw InputError("cover overlap must lie in [0, 1)");
  if (!(params.cluster_eps > 0.0)) throw InputError("cluster eps must be positive");
  MapperGraph graph;
  graph.n_points = cloud.size();
  graph.cover_spec = "uniform intervals=" + std::to_string(params.intervals_per_axis) +
                     " overlap=" + format_double(params.overlap);
  graph.cluster_spec = "single-linkage eps=" + format_double(params.cluster_eps) + " on min-max normalized points";
  if (cloud.size() == 0) return graph;
  cloud.validate();
  if (lens_values.rows() != cloud.points.rows()) throw InputError("lens values and cloud sizes differ");

  const Eigen::Index n = cloud.points.rows();
  const Eigen::Index axes = lens_values.cols();
  std::vector<int> per_axis(static_cast<std::size_t>(axes));
  std::vector<double> mins(static_cast<std::size_t>(axes)), maxs(static_cast<std::size_t>(axes));
  double total_cells = 1.0;
  for (Eigen::Index a = 0; a < axes; ++a) {
    mins[a] = lens_values.col(a).minCoeff();
    maxs[a] = lens_values.col(a).maxCoeff();
    per_axis[a] = maxs[a] > mins[a] ? params.intervals_per_axis : 1;
    total_cells *= per_axis[a];
  }
  if (total_cells > 1e7) throw InputError("cover has too many cells; use a lower-dimensional lens");

  // Cell membership, keyed by mixed-radix cell index (axis 0 most significant).
  std::map<std::size_t, std::vector<std::size_t>> cells;
  std::vector<std::vector<int>> hits(static_cast<std::size_t>(axes));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index a = 0; a < axes; ++a) {
      hits[a].clear();
      const double v = lens_values(i, a);
      const double tol = 1e-12 * std::max(1.0, maxs[a] - mins[a]);
      for (int k = 0; k < per_axis[a]; ++k) {
        const auto [lo, hi] = cover_interval(mins[a], maxs[a], per_axis[a], params.overlap, k);
        if (v >= lo - tol && v <= hi + tol) hits[a].push_back(k);
      }
    }
    // Enumerate the product of hit intervals.
    std::vector<std::size_t> pos(static_cast<std::size_t>(axes), 0);
    while (true) {
      std::size_t cell = 0;
      for (Eigen::Index a = 0; a < axes; ++a) cell = cell * static_cast<std::size_t>(per_axis[a]) + static_cast<std::size_t>(hits[a][pos[a]]);
      cells[cell].push_back(static_cast<std::size_t>(i));
      Eigen::Index a = axes - 1;
      for (; a >= 0; --a) {
        if (++pos[a] < hits[a].size()) break;
        pos[a] = 0;
      }
      if (a < 0) break;
    }
  }

  const Eigen::MatrixXd normalized = minmax_normalize(cloud.points);
  const Eigen::VectorXd density = kde_density(normalized);
  const double eps2 = params.cluster_eps * params.cluster_eps;

  for (const auto& [cell, members] : cells) {
    DisjointSet ds(members.size());
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        const double d2 = (normalized.row(static_cast<Eigen::Index>(members[a])) -
                           normalized.row(static_cast<Eigen::Index>(members[b])))
                              .squaredNorm();
        if (d2 < eps2) ds.unite(a, b);
      }
    }
    std::map<std::size_t, std::vector<std::size_t>> clusters;  // root (smallest local index) -> members
    for (std::size_t a = 0; a < members.size(); ++a) clusters[ds.find(a)].push_back(members[a]);
    for (auto& [root, pts] : clusters) {
      MapperNode node;
      node.members = std::move(pts);
      node.cell = cell;
      double dens = 0.0, fake = 0.0;
      for (auto p : node.members) {
        dens += density(static_cast<Eigen::Index>(p));
        if (cloud.labels[p] == Label::fake) fake += 1.0;
      }
      node.density = dens / static_cast<double>(node.members.size());
      node.fake_fraction = fake / static_cast<double>(node.members.size());
      graph.nodes.push_back(std::move(node));
    }
  }

  std::vector<std::vector<std::size_t>> point_nodes(static_cast<std::size_t>(n));
  for (std::size_t id = 0; id < graph.nodes.size(); ++id) {
    for (auto p : graph.nodes[id].members) point_nodes[p].push_back(id);
  }
  for (const auto& ids : point_nodes) {
    for (std::size_t a = 0; a < ids.size(); ++a)
      for (std::size_t b = a + 1; b < ids.size(); ++b) graph.edges.emplace_back(ids[a], ids[b]);
  }
  std::sort(graph.edges.begin(), graph.edges.end());
  graph.edges.erase(std::unique(graph.edges.begin(), graph.edges.end()), graph.edges.end());
  return graph;
}

MapperGraph hdr_filter(const MapperGraph& graph, double mass_threshold) {
  if (!(mass_threshold > 0.0 && mass_threshold <= 1.0)) throw InputError("mass threshold must lie in (0, 1]");
  std::vector<std::size_t> order(graph.nodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return graph.nodes[a].density > graph.nodes[b].density; });
  std::size_t total = 0;
  for (const auto& node : graph.nodes) total += node.members.size();

  std::vector<bool> keep(graph.nodes.size(), false);
  std::size_t mass = 0;
  for (auto id : order) {
    if (static_cast<double>(mass) >= mass_threshold * static_cast<double>(total) - 1e-9) break;
    keep[id] = true;
    mass += graph.nodes[id].members.size();
  }

  MapperGraph out;
  out.n_points = graph.n_points;
  out.lens_spec = graph.lens_spec;
  out.cover_spec = graph.cover_spec;
  out.cluster_spec = graph.cluster_spec;
  std::vector<std::size_t> remap(graph.nodes.size(), 0);
  for (std::size_t id = 0; id < graph.nodes.size(); ++id) {
    if (!keep[id]) continue;
    remap[id] = out.nodes.size();
    out.nodes.push_back(graph.nodes[id]);
  }
  for (const auto& [a, b] : graph.edges) {
    if (keep[a] && keep[b]) out.edges.emplace_back(remap[a], remap[b]);
  }
  return out;
}

double purity_score(const MapperGraph& graph, double purity) {
  if (graph.nodes.empty()) return 0.0;
  std::size_t pure = 0;
  for (const auto& node : graph.nodes) {
    if (std::max(node.fake_fraction, 1.0 - node.fake_fraction) >= purity) ++pure;
  }
  return static_cast<double>(pure) / static_cast<double>(graph.nodes.size());
}

GraphFormat graph_format_from_string(std::string_view s) {
  if (s == "dot") return GraphFormat::dot;
  if (s == "json" || s == "structured-text") return GraphFormat::json;
  throw InputError("unknown graph format '" + std::string(s) + "'");
}

std::string node_color(double fake_fraction, double relative_density) {
  const double f = std::clamp(fake_fraction, 0.0, 1.0);
  const double shade = 1.0 - 0.6 * std::clamp(relative_density, 0.0, 1.0);
  // blue (0, 0, 255) for fake, purple (128, 0, 128) for real
  const double r = (1.0 - f) * 128.0 * shade;
  const double g = 0.0;
  const double b = (f * 255.0 + (1.0 - f) * 128.0) * shade;
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(r)), static_cast<int>(std::lround(g)),
                static_cast<int>(std::lround(b)));
  return buf;
}

std::string export_graph(const MapperGraph& graph, GraphFormat format) {
  if (format == GraphFormat::json) {
    json j;
    j["format_version"] = 1;
    j["n_points"] = graph.n_points;
    j["lens_spec"] = graph.lens_spec;
    j["cover_spec"] = graph.cover_spec;
    j["cluster_spec"] = graph.cluster_spec;
    j["nodes"] = json::array();
    for (std::size_t id = 0; id < graph.nodes.size(); ++id) {
      const auto& node = graph.nodes[id];
      j["nodes"].push_back({{"id", id},
                            {"members", node.members},
                            {"density", node.density},
                            {"fake_fraction", node.fake_fraction},
                            {"cell", node.cell}});
    }
    j["edges"] = json::array();
    for (const auto& [a, b] : graph.edges) j["edges"].push_back({a, b});
    return j.dump(1) + "\n";
  }

  double max_density = 0.0, min_density = 0.0;
  std::size_t max_count = 1;
  if (!graph.nodes.empty()) {
    min_density = max_density = graph.nodes.front().density;
    for (const auto& node : graph.nodes) {
      max_density = std::max(max_density, node.density);
      min_density = std::min(min_density, node.density);
      max_count = std::max(max_count, node.members.size());
    }
  }
  std::ostringstream os;
  os << "graph mapper {\n";
  os << "  graph [label=\"" << graph.lens_spec << "; " << graph.cover_spec << "\"];\n";
  os << "  node [shape=circle, style=filled, fontcolor=white];\n";
  for (std::size_t id = 0; id < graph.nodes.size(); ++id) {
    const auto& node = graph.nodes[id];
    const double rel = max_density > min_density ? (node.density - min_density) / (max_density - min_density) : 0.0;
    const double width = 1.5 * static_cast<double>(node.members.size()) / static_cast<double>(max_count);
    os << "  n" << id << " [label=\"" << node.members.size() << "\", fillcolor=\"" << node_color(node.fake_fraction, rel)
       << "\", width=" << format_double(width) << ", fake_fraction=" << format_double(node.fake_fraction)
       << ", density=" << format_double(node.density) << "];\n";
  }
  for (const auto& [a, b] : graph.edges) os << "  n" << a << " -- n" << b << ";\n";
  os << "}\n";
  return os.str();
}

MapperGraph import_graph_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed graph document: ") + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != 1) throw InputError("unsupported graph format_version");
    MapperGraph g;
    g.n_points = j.at("n_points").get<std::size_t>();
    g.lens_spec = j.at("lens_spec").get<std::string>();
    g.cover_spec = j.at("cover_spec").get<std::string>();
    g.cluster_spec = j.at("cluster_spec").get<std::string>();
    for (const auto& jn : j.at("nodes")) {
      MapperNode node;
      node.members = jn.at("members").get<std::vector<std::size_t>>();
      node.density = jn.at("density").get<double>();
      node.fake_fraction = jn.at("fake_fraction").get<double>();
      node.cell = jn.at("cell").get<std::size_t>();
      if (node.members.empty()) throw InputError("graph node without members");
      g.nodes.push_back(std::move(node));
    }
    for (const auto& je : j.at("edges")) {
      const auto a = je.at(0).get<std::size_t>(), b = je.at(1).get<std::size_t>();
      if (a >= g.nodes.size() || b >= g.nodes.size()) throw InputError("graph edge references a missing node");
      const auto& ma = g.nodes[a].members;
      const auto& mb = g.nodes[b].members;
      std::vector<std::size_t> shared;
      std::set_intersection(ma.begin(), ma.end(), mb.begin(), mb.end(), std::back_inserter(shared));
      if (shared.empty()) throw InputError("graph edge joins nodes without shared points");
      g.edges.emplace_back(a, b);
    }
    return g;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed graph document: ") + e.what());
  }
}

PointCloud epoch_feature_cloud(const EpochSet& set) {
  PointCloud cloud;
  cloud.source = "eeg";
  const std::size_t channels = set.channel_names.size();
  cloud.points.resize(static_cast<Eigen::Index>(set.size()), static_cast<Eigen::Index>(5 * channels));
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Spectrum spec = fft_magnitude(set.epochs[i], set.sample_rate_hz);
    std::size_t col = 0;
    for (const auto& band : kPresetBands) {
      const Eigen::VectorXd p = band_power(spec, band.low_hz, std::min(band.high_hz, set.sample_rate_hz / 2.0));
      for (Eigen::Index c = 0; c < p.size(); ++c) {
        cloud.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col++)) = std::log1p(p(c));
      }
    }
    cloud.labels.push_back(set.epochs[i].label);
  }
  return cloud;
}

PointCloud synthetic_cloud(std::size_t per_class, std::size_t dim, double separation, std::uint64_t seed,
                           std::string source) {
  if (dim == 0) throw InputError("cloud dimension must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  PointCloud cloud;
  cloud.source = std::move(source);
  cloud.points.resize(static_cast<Eigen::Index>(2 * per_class), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const Label label = i % 2 == 0 ? Label::real : Label::fake;
    for (std::size_t d = 0; d < dim; ++d) cloud.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = normal(rng);
    if (label == Label::fake) cloud.points(static_cast<Eigen::Index>(i), 0) += separation;
    cloud.labels.push_back(label);
  }
  return cloud;
}

}  // namespace neurowave
