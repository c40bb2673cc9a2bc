#include "neurowave/error.hpp"
#include "neurowave/mapper.hpp"

#include "doctest.h"
#include "test_support.hpp"

#include "json.hpp"

#include <numeric>

using namespace neurowave;
using testing::CanonicalGraph;

namespace {

CanonicalGraph canonical(const MapperGraph& g) {
  std::vector<std::vector<std::size_t>> nodes;
  for (const auto& node : g.nodes) nodes.push_back(node.members);
  return testing::canonical(nodes, g.edges);
}

std::vector<std::vector<double>> rows_of(const Eigen::MatrixXd& m) {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(r)].push_back(m(r, c));
  return out;
}

PointCloud cloud_of(const std::vector<std::vector<double>>& pts) {
  PointCloud c;
  c.points.resize(static_cast<Eigen::Index>(pts.size()), pts.empty() ? 1 : static_cast<Eigen::Index>(pts[0].size()));
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t d = 0; d < pts[i].size(); ++d) c.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = pts[i][d];
  c.labels.assign(pts.size(), Label::real);
  return c;
}

MapperGraph identity_mapper(const PointCloud& c, int intervals, double overlap, double eps) {
  return build_mapper(c, lens(c, {LensKind::identity}), {intervals, overlap, eps});
}

MapperNode node(std::vector<std::size_t> members, double density, double fake = 0.0) {
  MapperNode n;
  n.members = std::move(members);
  n.density = density;
  n.fake_fraction = fake;
  return n;
}

std::vector<std::size_t> range(std::size_t lo, std::size_t hi) {
  std::vector<std::size_t> v(hi - lo);
  std::iota(v.begin(), v.end(), lo);
  return v;
}

}  // namespace

TEST_CASE("graph equals the brute-force oracle on small clouds") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 20, dim = 1 + rng() % 3;
    PointCloud c;
    c.points.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < c.points.size(); ++i) c.points.data()[i] = 4.0 * uni(rng);
    for (std::size_t i = 0; i < n; ++i) c.labels.push_back(rng() % 2 ? Label::fake : Label::real);
    const LensSpec spec = trial % 2 == 0 ? LensSpec{LensKind::identity} : LensSpec{LensKind::custom_axis, 0};
    const int intervals = 1 + static_cast<int>(rng() % 4);
    const double overlap = 0.5 * uni(rng), eps = 0.1 + 0.6 * uni(rng);
    const Eigen::MatrixXd lv = lens(c, spec);
    const MapperGraph g = build_mapper(c, lv, {intervals, overlap, eps});
    CHECK(canonical(g) == testing::mapper_oracle(rows_of(c.points), rows_of(lv), intervals, overlap, eps));
    for (const auto& nd : g.nodes) {
      double fake = 0;
      for (auto p : nd.members) fake += c.labels[p] == Label::fake;
      CHECK(nd.fake_fraction == doctest::Approx(fake / static_cast<double>(nd.members.size())));
    }
  }
}

TEST_CASE("two distant blobs give two nodes and no edges") {
  const PointCloud c = cloud_of({{0.0}, {0.02}, {0.05}, {0.03}, {10.0}, {10.01}, {9.98}});
  const MapperGraph g = identity_mapper(c, 2, 0.3, 0.65);
  CHECK(g.nodes.size() == 2);
  CHECK(g.edges.empty());
  CHECK(canonical(g) == testing::mapper_oracle(rows_of(c.points), rows_of(c.points), 2, 0.3, 0.65));
}

TEST_CASE("one blob over two overlapping intervals gives two joined nodes") {
  std::vector<std::vector<double>> pts;
  for (int i = 0; i <= 10; ++i) pts.push_back({0.1 * i});
  const MapperGraph g = identity_mapper(cloud_of(pts), 2, 0.3, 0.65);
  REQUIRE(g.nodes.size() == 2);
  CHECK(g.edges == std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}});
}

TEST_CASE("single point and empty cloud") {
  const MapperGraph one = identity_mapper(cloud_of({{1.0, 2.0}}), 3, 0.2, 0.5);
  REQUIRE(one.nodes.size() == 1);
  CHECK(one.nodes[0].members == std::vector<std::size_t>{0});
  CHECK(one.edges.empty());

  PointCloud empty;
  empty.points.resize(0, 2);
  const MapperGraph none = build_mapper(empty, Eigen::MatrixXd(0, 2), {});
  CHECK(none.nodes.empty());
  CHECK(none.n_points == 0);
}

TEST_CASE("parameter errors") {
  const PointCloud c = cloud_of({{0.0}, {1.0}});
  const Eigen::MatrixXd lv = c.points;
  CHECK_THROWS_AS(build_mapper(c, lv, {0, 0.3, 0.5}), InputError);
  CHECK_THROWS_AS(build_mapper(c, lv, {2, 1.0, 0.5}), InputError);
  CHECK_THROWS_AS(build_mapper(c, lv, {2, 0.3, 0.0}), InputError);
  CHECK_THROWS_AS(build_mapper(c, Eigen::MatrixXd::Zero(3, 1), {}), InputError);
  PointCloud bad = c;
  bad.labels.pop_back();
  CHECK_THROWS_AS(build_mapper(bad, lv, {}), InputError);
}

TEST_CASE("every point is covered when eps spans each cell") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng() % 49;
    PointCloud c;
    c.points.resize(static_cast<Eigen::Index>(n), 2);
    for (Eigen::Index i = 0; i < c.points.size(); ++i) c.points.data()[i] = uni(rng);
    c.labels.assign(n, Label::real);
    // Normalized diameter is at most sqrt(2).
    const MapperGraph g = build_mapper(c, lens(c, {LensKind::pca2}), {3, 0.25, 1.5});
    std::set<std::size_t> seen;
    for (const auto& nd : g.nodes) seen.insert(nd.members.begin(), nd.members.end());
    CHECK(seen.size() == n);
    for (const auto& [a, b] : g.edges) {
      std::vector<std::size_t> shared;
      std::set_intersection(g.nodes[a].members.begin(), g.nodes[a].members.end(), g.nodes[b].members.begin(),
                            g.nodes[b].members.end(), std::back_inserter(shared));
      CHECK(!shared.empty());
    }
  }
}

TEST_CASE("graph is invariant under point reordering") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const PointCloud c = synthetic_cloud(15, 3, 3.0, static_cast<std::uint64_t>(trial), "eeg");
    std::vector<std::size_t> perm(c.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    PointCloud p = c;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      p.points.row(static_cast<Eigen::Index>(i)) = c.points.row(static_cast<Eigen::Index>(perm[i]));
      p.labels[i] = c.labels[perm[i]];
    }
    const MapperParams params{4, 0.3, 0.3};
    const MapperGraph a = build_mapper(c, lens(c, {LensKind::custom_axis, 0}), params);
    MapperGraph b = build_mapper(p, lens(p, {LensKind::custom_axis, 0}), params);
    for (auto& nd : b.nodes) {
      for (auto& m : nd.members) m = perm[m];
      std::sort(nd.members.begin(), nd.members.end());
    }
    CHECK(canonical(a) == canonical(b));
  }
}

TEST_CASE("lens examples") {
  std::vector<std::vector<double>> line;
  for (int i = 0; i < 10; ++i) line.push_back({1.0 * i, 2.0 * i + 1.0, -1.0 * i});
  const Eigen::MatrixXd pc = lens(cloud_of(line), {LensKind::pca2});
  CHECK(pc.cols() == 2);
  CHECK(pc.col(1).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(pc.col(0).cwiseAbs().maxCoeff() > 1.0);

  const Eigen::MatrixXd dup = lens(cloud_of({{0.0, 1.0}, {2.0, 5.0}, {0.0, 1.0}, {3.0, -1.0}}), {LensKind::pca2});
  CHECK(dup.row(0) == dup.row(2));
  const Eigen::MatrixXd ddup = lens(cloud_of({{0.0, 1.0}, {2.0, 5.0}, {0.0, 1.0}, {3.0, -1.0}}), {LensKind::density});
  CHECK(ddup(0, 0) == ddup(2, 0));

  CHECK_THROWS_AS(lens(cloud_of({{1.0, 1.0}, {1.0, 1.0}}), {LensKind::pca2}), InputError);
  CHECK_THROWS_AS(lens(cloud_of({{1.0}}), {LensKind::density}), InputError);
  CHECK_THROWS_AS(lens(cloud_of({{1.0}, {2.0}}), {LensKind::custom_axis, 1}), InputError);
  for (auto k : {LensKind::pca2, LensKind::density, LensKind::custom_axis, LensKind::identity})
    CHECK(lens_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(lens_kind_from_string("umap"), InputError);
}

TEST_CASE("density lens is higher inside blobs than at the midpoint") {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> normal(0.0, 0.3);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 40; ++i) pts.push_back({normal(rng) + (i % 2 ? 5.0 : -5.0)});
  pts.push_back({0.0});
  const Eigen::MatrixXd d = lens(cloud_of(pts), {LensKind::density});
  CHECK(d.topRows(40).minCoeff() > d(40, 0));
}

TEST_CASE("kde matches the kernel sum on a hand example") {
  // 1-D points {0, 1, 3}: sample sd sqrt(7/3), Scott factor 3^(-1/5).
  const double bw = std::sqrt(7.0 / 3.0) * std::pow(3.0, -0.2);
  const double xs[] = {0.0, 1.0, 3.0};
  Eigen::MatrixXd pts(3, 1);
  pts << 0.0, 1.0, 3.0;
  const Eigen::VectorXd d = kde_density(pts);
  for (int i = 0; i < 3; ++i) {
    double want = 0.0;
    for (double x : xs) want += std::exp(-0.5 * (xs[i] - x) * (xs[i] - x) / (bw * bw)) / 3.0;
    CHECK(d(i) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("hdr filter examples") {
  MapperGraph g;
  g.n_points = 100;
  g.nodes = {node(range(0, 10), 0.1), node(range(0, 90), 0.9)};
  g.edges = {{0, 1}};

  CHECK(hdr_filter(g, 1.0) == g);

  const MapperGraph tiny = hdr_filter(g, 1e-9);
  REQUIRE(tiny.nodes.size() == 1);
  CHECK(tiny.nodes[0].density == 0.9);
  CHECK(tiny.edges.empty());

  // 90 / 100 >= 0.65 after the first (densest) node.
  const MapperGraph hdr = hdr_filter(g, 0.65);
  REQUIRE(hdr.nodes.size() == 1);
  CHECK(hdr.nodes[0].members.size() == 90);

  // 0.95 needs both.
  CHECK(hdr_filter(g, 0.95).nodes.size() == 2);
  CHECK_THROWS_AS(hdr_filter(g, 0.0), InputError);
  CHECK_THROWS_AS(hdr_filter(g, 1.5), InputError);
}

TEST_CASE("hdr filter keeps the smallest densest prefix") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    MapperGraph g;
    const std::size_t k = 1 + rng() % 8;
    std::size_t total = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t size = 1 + rng() % 20;
      g.nodes.push_back(node(range(total, total + size), uni(rng)));
      total += size;
    }
    g.n_points = total;
    const double t = 0.05 + 0.95 * uni(rng);
    const MapperGraph h = hdr_filter(g, t);
    std::size_t kept = 0;
    double min_kept = 1e9;
    for (const auto& nd : h.nodes) {
      kept += nd.members.size();
      min_kept = std::min(min_kept, nd.density);
    }
    CHECK(static_cast<double>(kept) >= t * static_cast<double>(total) - 1e-9);
    // Dropping the least dense kept node would fall below the threshold.
    std::size_t without = 0;
    for (const auto& nd : h.nodes)
      if (nd.density != min_kept) without += nd.members.size();
    CHECK(static_cast<double>(without) < t * static_cast<double>(total));
    for (const auto& nd : g.nodes) {
      const bool in = std::find(h.nodes.begin(), h.nodes.end(), nd) != h.nodes.end();
      if (!in) CHECK(nd.density <= min_kept);
    }
  }
}

TEST_CASE("colors run from blue to purple and darken with density") {
  CHECK(node_color(1.0, 0.0) == "#0000ff");
  CHECK(node_color(0.0, 0.0) == "#800080");
  const std::string dark = node_color(1.0, 1.0);
  CHECK(std::stoi(dark.substr(5, 2), nullptr, 16) < 255);
}

TEST_CASE("export formats and round trip") {
  const MapperGraph empty;
  const std::string dot = export_graph(empty, GraphFormat::dot);
  CHECK(dot.find("graph mapper {") == 0);
  CHECK(dot.find("}\n") != std::string::npos);
  CHECK(import_graph_json(export_graph(empty, GraphFormat::json)) == empty);

  const PointCloud c = synthetic_cloud(20, 3, 4.0, 3, "eeg");
  MapperGraph g = build_mapper(c, lens(c, {LensKind::pca2}), {});
  g.lens_spec = describe(LensSpec{LensKind::pca2});
  REQUIRE(!g.nodes.empty());
  CHECK(import_graph_json(export_graph(g, GraphFormat::json)) == g);
  const std::string gd = export_graph(g, GraphFormat::dot);
  CHECK(gd.find("n0 [") != std::string::npos);
  if (!g.edges.empty()) {
    CHECK(gd.find(" -- ") != std::string::npos);
  }

  CHECK_THROWS_AS(graph_format_from_string("svg"), InputError);
  CHECK(graph_format_from_string("structured-text") == GraphFormat::json);
  CHECK_THROWS_AS(import_graph_json("{"), InputError);
  auto j = nlohmann::json::parse(export_graph(g, GraphFormat::json));
  j["edges"] = nlohmann::json::array({{0, 9999}});
  CHECK_THROWS_AS(import_graph_json(j.dump()), InputError);
}

TEST_CASE("purity score") {
  MapperGraph g;
  g.nodes = {node({0}, 1.0, 1.0), node({1}, 1.0, 0.05), node({2}, 1.0, 0.5), node({3}, 1.0, 0.85)};
  CHECK(purity_score(g) == 0.5);
  CHECK(purity_score(MapperGraph{}) == 0.0);
}

TEST_CASE("separated classes give purer graphs than interleaved ones") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const PointCloud eeg = synthetic_cloud(100, 8, 6.0, seed, "eeg");
    const PointCloud audio = synthetic_cloud(100, 8, 0.0, seed + 100, "audio");
    const MapperParams params;
    const double pe = purity_score(build_mapper(eeg, lens(eeg, {LensKind::pca2}), params));
    const double pa = purity_score(build_mapper(audio, lens(audio, {LensKind::pca2}), params));
    CHECK(pe > pa);
  }
}

TEST_CASE("epoch feature cloud has five bands per channel") {
  std::mt19937_64 rng(12);
  EpochSet set;
  set.sample_rate_hz = 256.0;
  set.window_s = 0.5;
  set.channel_names = {"a", "b"};
  for (int i = 0; i < 6; ++i) set.epochs.push_back(testing::make_epoch(128, 2, rng, i % 2 ? Label::fake : Label::real));
  const PointCloud c = epoch_feature_cloud(set);
  CHECK(c.points.rows() == 6);
  CHECK(c.points.cols() == 10);
  CHECK(c.labels[1] == Label::fake);
  CHECK(c.points.allFinite());
}
