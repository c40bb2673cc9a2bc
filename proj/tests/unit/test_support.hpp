#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.

#include "neurowave/classifier.hpp"
#include "neurowave/fft.hpp"
#include "neurowave/synth.hpp"
#include "neurowave/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <set>
#include <utility>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace neurowave::testing {

inline std::vector<double> sine(std::size_t n, double hz, double rate_hz, double amplitude = 1.0, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = amplitude * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate_hz + phase);
  }
  return x;
}

inline double rms(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return n == 0 ? 0.0 : std::sqrt(s / static_cast<double>(n));
}

inline double rms(const std::vector<double>& x, std::size_t skip_front = 0, std::size_t skip_back = 0) {
  if (skip_front + skip_back >= x.size()) return 0.0;
  return rms(x.data() + skip_front, x.size() - skip_front - skip_back);
}

inline Recording make_recording(const std::vector<std::vector<double>>& channels, double rate_hz,
                                double start_time_s = 0.0) {
  Recording rec;
  rec.sample_rate_hz = rate_hz;
  rec.start_time_s = start_time_s;
  const std::size_t n = channels.empty() ? 0 : channels.front().size();
  rec.data.resize(static_cast<Eigen::Index>(channels.size()), static_cast<Eigen::Index>(n));
  for (std::size_t c = 0; c < channels.size(); ++c) {
    for (std::size_t i = 0; i < n; ++i) rec.data(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)) = channels[c][i];
    rec.channel_names.push_back("ch" + std::to_string(c));
  }
  return rec;
}

inline std::vector<double> row(const Recording& rec, std::size_t c) {
  std::vector<double> out(rec.samples());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = rec.data(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i));
  return out;
}

// O(n^2) DFT straight from the definition.
inline std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double a = -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / static_cast<double>(n);
      acc += x[t] * std::complex<double>(std::cos(a), std::sin(a));
    }
    out[k] = acc;
  }
  return out;
}

// Power of a real signal at exactly `hz`, by least-squares projection on a
// sine/cosine pair (amplitude^2 / 2).
inline double tone_power(const std::vector<double>& x, double hz, double rate_hz, std::size_t skip = 0) {
  double ss = 0.0, cc = 0.0, sc = 0.0, xs = 0.0, xc = 0.0;
  for (std::size_t i = skip; i + skip < x.size(); ++i) {
    const double a = 2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate_hz;
    const double s = std::sin(a), c = std::cos(a);
    ss += s * s;
    cc += c * c;
    sc += s * c;
    xs += x[i] * s;
    xc += x[i] * c;
  }
  const double det = ss * cc - sc * sc;
  const double bs = (xs * cc - xc * sc) / det;
  const double bc = (xc * ss - xs * sc) / det;
  return 0.5 * (bs * bs + bc * bc);
}

inline double db(double ratio) { return 10.0 * std::log10(ratio); }

inline double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline Epoch make_epoch(std::size_t L, std::size_t d, std::mt19937_64& rng, Label label = Label::real,
                        double offset = 0.0) {
  std::normal_distribution<float> normal(0.0f, 1.0f);
  Epoch e;
  e.window.resize(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < e.window.size(); ++i) e.window.data()[i] = normal(rng) + static_cast<float>(offset);
  e.label = label;
  return e;
}

// Mean Welch band power over channels in [lo, hi).
inline double band_power_welch(const Recording& rec, double lo, double hi, std::size_t nfft = 1024) {
  double total = 0.0;
  for (std::size_t c = 0; c < rec.channels(); ++c) {
    const auto x = row(rec, c);
    const auto psd = fft::welch(x, rec.sample_rate_hz, nfft);
    for (std::size_t k = 0; k < psd.freqs_hz.size(); ++k)
      if (psd.freqs_hz[k] >= lo && psd.freqs_hz[k] < hi) total += psd.power[k];
  }
  return total / static_cast<double>(rec.channels());
}

// Unit-variance pink noise with a slow amplitude envelope, so it is
// non-Gaussian like ongoing cortical activity.
inline std::vector<double> bursty_pink(std::size_t n, double rate_hz, std::uint64_t seed) {
  auto x = pink_noise(n, rate_hz, seed);
  const double period = 3.0 + static_cast<double>(seed % 5);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] *= 0.3 + std::abs(std::sin(std::numbers::pi * static_cast<double>(i) / (period * rate_hz) + 0.7 * static_cast<double>(seed)));
  }
  return x;
}

struct MixtureFixture {
  Recording rec;
  std::vector<std::vector<double>> sources;
};

// Sine, square wave and uniform noise mixed into `channels` channels by a
// random Gaussian matrix.
inline MixtureFixture three_source_mixture(std::uint64_t seed, std::size_t channels = 64, std::size_t n = 5000) {
  const double fs = 500.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::normal_distribution<double> normal;
  MixtureFixture f;
  f.sources.assign(3, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    f.sources[0][i] = std::sin(2.0 * std::numbers::pi * 7.0 * t);
    f.sources[1][i] = std::sin(2.0 * std::numbers::pi * 2.3 * t) >= 0.0 ? 1.0 : -1.0;
    f.sources[2][i] = uni(rng);
  }
  std::vector<std::vector<double>> chans(channels, std::vector<double>(n, 0.0));
  for (std::size_t c = 0; c < channels; ++c) {
    const std::array<double, 3> w{normal(rng), normal(rng), normal(rng)};
    for (std::size_t i = 0; i < n; ++i) chans[c][i] = w[0] * f.sources[0][i] + w[1] * f.sources[1][i] + w[2] * f.sources[2][i];
  }
  f.rec = make_recording(chans, fs);
  return f;
}

// Best over source permutations and signs of the smallest |corr| between
// recovered and true sources (3 or fewer sources).
inline double matched_correlation(const std::vector<std::vector<double>>& recovered,
                                  const std::vector<std::vector<double>>& truth) {
  std::vector<std::size_t> perm(truth.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  double best = 0.0;
  do {
    double worst = 1.0;
    for (std::size_t i = 0; i < perm.size(); ++i) worst = std::min(worst, std::abs(correlation(recovered[perm[i]], truth[i])));
    best = std::max(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

struct ArtifactFixture {
  Recording rec;
  std::size_t line_source = 0;
  std::size_t muscle_source = 0;
};

// `brain` bursty pink sources plus a 50 Hz line source and (optionally) a
// gated high-frequency burst source, mixed by a random matrix into as many
// channels as sources.
inline ArtifactFixture artifact_mixture(std::uint64_t seed, std::size_t brain = 6, double line_amplitude = 3.0,
                                        bool muscle = true, double seconds = 60.0) {
  const double fs = 500.0;
  const auto n = static_cast<std::size_t>(seconds * fs);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<std::vector<double>> src;
  for (std::size_t j = 0; j < brain; ++j) src.push_back(bursty_pink(n, fs, seed * 100 + j));
  ArtifactFixture f;
  f.line_source = src.size();
  src.push_back(sine(n, 50.0, fs, line_amplitude, 0.4));
  if (muscle) {
    f.muscle_source = src.size();
    std::vector<double> hf(n, 0.0);
    double prev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = normal(rng);
      const double gate = std::fmod(static_cast<double>(i) / fs, 4.0) < 1.0 ? 1.0 : 0.1;
      hf[i] = gate * (w - prev);  // first difference: energy above 30 Hz
      prev = w;
    }
    src.push_back(hf);
  }
  const std::size_t channels = src.size();
  std::vector<std::vector<double>> chans(channels, std::vector<double>(n, 0.0));
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t j = 0; j < src.size(); ++j) {
      const double w = normal(rng);
      for (std::size_t i = 0; i < n; ++i) chans[c][i] += w * src[j][i];
    }
  f.rec = make_recording(chans, fs);
  return f;
}

// Tiny configuration for finite-difference checks.
inline ModelConfig tiny_model_config() {
  ModelConfig c;
  c.L = 16;
  c.d = 2;
  c.embed_dim = 4;
  c.heads = 2;
  c.ffn_dim = 8;
  c.dropout = 0.0;
  c.temporal_filters = 2;
  c.temporal_kernel = 3;
  c.seed = 3;
  return c;
}

// Largest per-coordinate relative difference between the analytic gradient
// and central finite differences (step h) of the weighted loss on a random
// batch. Parameters are jittered first so zero-initialized blocks are
// exercised away from their symmetric start.
inline double gradient_check_worst(const ModelConfig& config, std::uint64_t seed, double h = 1e-4) {
  ModelParams p = init_params(config);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> flat = flatten(p);
  for (double& v : flat) v += 0.1 * normal(rng);
  unflatten(p, flat);
  std::vector<Epoch> epochs(4);
  for (auto& e : epochs) {
    e.window.resize(config.L, config.d);
    for (Eigen::Index i = 0; i < e.window.size(); ++i) e.window.data()[i] = static_cast<float>(normal(rng));
  }
  std::vector<const Epoch*> batch;
  for (const auto& e : epochs) batch.push_back(&e);
  const std::vector<Label> y{Label::real, Label::fake, Label::real, Label::fake};
  const std::vector<double> weights{0.7, 1.3};
  const std::vector<double> g = flatten(loss_and_grad(p, batch, y, {}, weights).grad);
  double worst = 0.0;
  for (std::size_t k = 0; k < flat.size(); ++k) {
    auto q = flat;
    q[k] += h;
    unflatten(p, q);
    const double up = loss_and_grad(p, batch, y, {}, weights).loss;
    q[k] -= 2.0 * h;
    unflatten(p, q);
    const double down = loss_and_grad(p, batch, y, {}, weights).loss;
    const double fd = (up - down) / (2.0 * h);
    // Coordinates with both values below 1e-8 count as absolute agreement.
    const double scale = std::max({std::abs(fd), std::abs(g[k]), 1e-8});
    worst = std::max(worst, std::abs(fd - g[k]) / scale);
  }
  return worst;
}

// Loss with a zeroed head: uniform logits over the classes.
inline double uniform_head_loss(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p = init_params(config);
  p.head_w.setZero();
  p.head_b.setZero();
  std::mt19937_64 rng(seed);
  std::vector<Epoch> epochs;
  for (int i = 0; i < 3; ++i) epochs.push_back(make_epoch(static_cast<std::size_t>(config.L), static_cast<std::size_t>(config.d), rng));
  std::vector<const Epoch*> batch;
  for (const auto& e : epochs) batch.push_back(&e);
  return loss_and_grad(p, batch, {Label::real, Label::fake, Label::fake}).loss;
}

// Mapper graph reduced to content only: node member lists and edges as pairs
// of member lists, both sorted, so node ids and ordering do not matter.
struct CanonicalGraph {
  std::vector<std::vector<std::size_t>> nodes;
  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> edges;
  bool operator==(const CanonicalGraph&) const = default;
};

inline CanonicalGraph canonical(const std::vector<std::vector<std::size_t>>& nodes,
                                const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  CanonicalGraph g;
  for (auto m : nodes) {
    std::sort(m.begin(), m.end());
    g.nodes.push_back(m);
  }
  for (const auto& [a, b] : edges) {
    auto x = g.nodes[a], y = g.nodes[b];
    if (y < x) std::swap(x, y);
    g.edges.emplace_back(x, y);
  }
  std::sort(g.nodes.begin(), g.nodes.end());
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

// Brute-force Mapper: every cover cell enumerated explicitly, clusters by
// transitive closure of the "closer than eps" relation on min-max scaled
// points, and an edge for every pair of clusters with a common point.
inline CanonicalGraph mapper_oracle(const std::vector<std::vector<double>>& points,
                                    const std::vector<std::vector<double>>& lens_values, int intervals,
                                    double overlap, double eps) {
  const std::size_t n = points.size();
  if (n == 0) return {};
  const std::size_t dim = points[0].size(), axes = lens_values[0].size();
  std::vector<std::vector<double>> scaled = points;
  for (std::size_t d = 0; d < dim; ++d) {
    double lo = points[0][d], hi = points[0][d];
    for (const auto& p : points) lo = std::min(lo, p[d]), hi = std::max(hi, p[d]);
    for (auto& p : scaled) p[d] = hi > lo ? (p[d] - lo) / (hi - lo) : 0.0;
  }
  // Interval bounds per axis: k intervals of equal length L overlapping by
  // overlap * L exactly span [min, max].
  std::vector<std::vector<std::pair<double, double>>> bounds(axes);
  for (std::size_t a = 0; a < axes; ++a) {
    double lo = lens_values[0][a], hi = lens_values[0][a];
    for (const auto& v : lens_values) lo = std::min(lo, v[a]), hi = std::max(hi, v[a]);
    const int k = hi > lo ? intervals : 1;
    const double len = (hi - lo) / (k - (k - 1) * overlap);
    for (int i = 0; i < k; ++i) {
      const double start = lo + i * len * (1.0 - overlap);
      bounds[a].emplace_back(start, i + 1 == k ? hi : start + len);
    }
  }
  std::vector<std::vector<std::size_t>> nodes;
  std::vector<std::size_t> cell(axes, 0);
  while (true) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i) {
      bool inside = true;
      for (std::size_t a = 0; a < axes; ++a) {
        const auto [lo, hi] = bounds[a][cell[a]];
        const double tol = 1e-9 * std::max(1.0, bounds[a].back().second - bounds[a].front().first);
        inside = inside && lens_values[i][a] >= lo - tol && lens_values[i][a] <= hi + tol;
      }
      if (inside) members.push_back(i);
    }
    const std::size_t m = members.size();
    std::vector<std::vector<bool>> reach(m, std::vector<bool>(m, false));
    for (std::size_t x = 0; x < m; ++x)
      for (std::size_t y = 0; y < m; ++y) {
        double d2 = 0.0;
        for (std::size_t d = 0; d < dim; ++d) d2 += (scaled[members[x]][d] - scaled[members[y]][d]) * (scaled[members[x]][d] - scaled[members[y]][d]);
        reach[x][y] = x == y || d2 < eps * eps;
      }
    for (std::size_t z = 0; z < m; ++z)
      for (std::size_t x = 0; x < m; ++x)
        for (std::size_t y = 0; y < m; ++y) reach[x][y] = reach[x][y] || (reach[x][z] && reach[z][y]);
    std::vector<bool> used(m, false);
    for (std::size_t x = 0; x < m; ++x) {
      if (used[x]) continue;
      std::vector<std::size_t> cluster;
      for (std::size_t y = 0; y < m; ++y)
        if (reach[x][y]) {
          cluster.push_back(members[y]);
          used[y] = true;
        }
      nodes.push_back(cluster);
    }
    std::size_t a = 0;
    for (; a < axes; ++a) {
      if (++cell[a] < bounds[a].size()) break;
      cell[a] = 0;
    }
    if (a == axes) break;
  }
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t x = 0; x < nodes.size(); ++x)
    for (std::size_t y = x + 1; y < nodes.size(); ++y) {
      bool shared = false;
      for (auto p : nodes[x]) shared = shared || std::find(nodes[y].begin(), nodes[y].end(), p) != nodes[y].end();
      if (shared) edges.emplace_back(x, y);
    }
  return canonical(nodes, edges);
}

}  // namespace neurowave::testing
