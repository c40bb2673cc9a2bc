#include "neurowave/classifier.hpp"

#include "neurowave/error.hpp"
#include "neurowave/spectral.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

namespace neurowave {
namespace {

constexpr double kLayerNormEps = 1e-5;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform in [0, 1) from the top 53 bits, independent of the standard library.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Eigen::MatrixXd xavier(int fan_in_rows, int cols, double fan_in, double fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  Eigen::MatrixXd m(fan_in_rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = (2.0 * unit_uniform(rng) - 1.0) * limit;
  return m;
}

// Exact GELU; also writes its derivative so the backward pass skips erf.
Eigen::MatrixXd gelu(const Eigen::MatrixXd& x, Eigen::MatrixXd& grad) {
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  Eigen::MatrixXd y(x.rows(), x.cols());
  grad.resize(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x.data()[i];
    const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
    y.data()[i] = v * cdf;
    grad.data()[i] = cdf + v * std::exp(-0.5 * v * v) * inv_sqrt_2pi;
  }
  return y;
}

struct LayerNormCache {
  Eigen::MatrixXd xhat;
  Eigen::VectorXd inv_sigma;
};

Eigen::MatrixXd layer_norm(const Eigen::MatrixXd& x, const Eigen::MatrixXd& gamma, const Eigen::MatrixXd& beta,
                           LayerNormCache& cache) {
  const Eigen::VectorXd mean = x.rowwise().mean();
  cache.xhat = x.colwise() - mean;
  const Eigen::VectorXd var = cache.xhat.array().square().rowwise().mean();
  cache.inv_sigma = (var.array() + kLayerNormEps).rsqrt();
  cache.xhat = cache.xhat.array().colwise() * cache.inv_sigma.array();
  return (cache.xhat.array().rowwise() * gamma.row(0).array()).rowwise() + beta.row(0).array();
}

Eigen::MatrixXd layer_norm_backward(const Eigen::MatrixXd& dy, const Eigen::MatrixXd& gamma,
                                    const LayerNormCache& cache, Eigen::MatrixXd& dgamma, Eigen::MatrixXd& dbeta) {
  dgamma += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  dbeta += dy.colwise().sum();
  const Eigen::MatrixXd dxhat = dy.array().rowwise() * gamma.row(0).array();
  const Eigen::VectorXd mean_d = dxhat.rowwise().mean();
  const Eigen::VectorXd mean_dx = (dxhat.array() * cache.xhat.array()).rowwise().mean();
  Eigen::MatrixXd dx = dxhat.colwise() - mean_d;
  dx -= (cache.xhat.array().colwise() * mean_dx.array()).matrix();
  return dx.array().colwise() * cache.inv_sigma.array();
}

Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, std::mt19937_64& rng) {
  Eigen::MatrixXd mask(rows, cols);
  const double keep = 1.0 / (1.0 - p);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) mask(i, j) = unit_uniform(rng) < p ? 0.0 : keep;
  return mask;
}

struct BlockCache {
  Eigen::MatrixXd x_in, q, k, v, o;
  std::vector<Eigen::MatrixXd> attn;
  Eigen::MatrixXd mask1, y1, ffn_grad, ffn_act, mask2;
  LayerNormCache ln1, ln2;
};

struct TowerCache {
  Eigen::MatrixXd x, u_grad, g1, z_grad;
  std::vector<BlockCache> blocks;
  Eigen::RowVectorXd pooled;
};

struct Context {
  const ModelConfig& cfg;
  bool training;
  double dropout;
  std::mt19937_64* rng;  // null outside training
};

Eigen::MatrixXd relative_bias(const Eigen::MatrixXd& table, int head, Eigen::Index T) {
  Eigen::MatrixXd r(T, T);
  for (Eigen::Index j = 0; j < T; ++j)
    for (Eigen::Index i = 0; i < T; ++i) r(i, j) = table(head, j - i + T - 1);
  return r;
}

Eigen::MatrixXd block_forward(const AttentionBlockParams& p, const Eigen::MatrixXd& x, const Context& ctx,
                              BlockCache& c) {
  const Eigen::Index T = x.rows();
  const int heads = ctx.cfg.heads, dh = ctx.cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  c.x_in = x;
  c.q = x * p.wq;
  c.k = x * p.wk;
  c.v = x * p.wv;
  c.o.resize(T, ctx.cfg.embed_dim);
  c.attn.resize(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Eigen::MatrixXd s = c.q.middleCols(h * dh, dh) * c.k.middleCols(h * dh, dh).transpose() * scale;
    s += relative_bias(p.rel_bias, h, T);
    const Eigen::VectorXd row_max = s.rowwise().maxCoeff();
    Eigen::MatrixXd a = (s.colwise() - row_max).array().exp();
    const Eigen::VectorXd row_sum = a.rowwise().sum();
    a = a.array().colwise() / row_sum.array();
    c.o.middleCols(h * dh, dh) = a * c.v.middleCols(h * dh, dh);
    c.attn[static_cast<std::size_t>(h)] = std::move(a);
  }
  Eigen::MatrixXd att = (c.o * p.wo).rowwise() + p.bo.row(0);
  if (ctx.training && ctx.dropout > 0.0) {
    c.mask1 = dropout_mask(T, att.cols(), ctx.dropout, *ctx.rng);
    att.array() *= c.mask1.array();
  }
  c.y1 = layer_norm(x + att, p.ln1_gamma, p.ln1_beta, c.ln1);
  c.ffn_act = gelu((c.y1 * p.w_ffn1).rowwise() + p.b_ffn1.row(0), c.ffn_grad);
  Eigen::MatrixXd f = (c.ffn_act * p.w_ffn2).rowwise() + p.b_ffn2.row(0);
  if (ctx.training && ctx.dropout > 0.0) {
    c.mask2 = dropout_mask(T, f.cols(), ctx.dropout, *ctx.rng);
    f.array() *= c.mask2.array();
  }
  return layer_norm(c.y1 + f, p.ln2_gamma, p.ln2_beta, c.ln2);
}

Eigen::MatrixXd block_backward(const AttentionBlockParams& p, const Eigen::MatrixXd& dy, const Context& ctx,
                               const BlockCache& c, AttentionBlockParams& g) {
  const Eigen::Index T = dy.rows();
  const int heads = ctx.cfg.heads, dh = ctx.cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const bool dropped = ctx.training && ctx.dropout > 0.0;

  const Eigen::MatrixXd dr2 = layer_norm_backward(dy, p.ln2_gamma, c.ln2, g.ln2_gamma, g.ln2_beta);
  Eigen::MatrixXd df = dr2;
  if (dropped) df.array() *= c.mask2.array();
  g.w_ffn2 += c.ffn_act.transpose() * df;
  g.b_ffn2 += df.colwise().sum();
  const Eigen::MatrixXd dpre = (df * p.w_ffn2.transpose()).array() * c.ffn_grad.array();
  g.w_ffn1 += c.y1.transpose() * dpre;
  g.b_ffn1 += dpre.colwise().sum();
  const Eigen::MatrixXd dy1 = dr2 + dpre * p.w_ffn1.transpose();

  const Eigen::MatrixXd dr1 = layer_norm_backward(dy1, p.ln1_gamma, c.ln1, g.ln1_gamma, g.ln1_beta);
  Eigen::MatrixXd datt = dr1;
  if (dropped) datt.array() *= c.mask1.array();
  g.wo += c.o.transpose() * datt;
  g.bo += datt.colwise().sum();
  const Eigen::MatrixXd d_o = datt * p.wo.transpose();

  Eigen::MatrixXd dq(T, ctx.cfg.embed_dim), dk(T, ctx.cfg.embed_dim), dv(T, ctx.cfg.embed_dim);
  for (int h = 0; h < heads; ++h) {
    const Eigen::MatrixXd& a = c.attn[static_cast<std::size_t>(h)];
    const auto doh = d_o.middleCols(h * dh, dh);
    const Eigen::MatrixXd da = doh * c.v.middleCols(h * dh, dh).transpose();
    dv.middleCols(h * dh, dh) = a.transpose() * doh;
    const Eigen::VectorXd inner = (da.array() * a.array()).rowwise().sum();
    const Eigen::MatrixXd ds = a.array() * (da.colwise() - inner).array();
    for (Eigen::Index j = 0; j < T; ++j)
      for (Eigen::Index i = 0; i < T; ++i) g.rel_bias(h, j - i + T - 1) += ds(i, j);
    dq.middleCols(h * dh, dh) = ds * c.k.middleCols(h * dh, dh) * scale;
    dk.middleCols(h * dh, dh) = ds.transpose() * c.q.middleCols(h * dh, dh) * scale;
  }
  g.wq += c.x_in.transpose() * dq;
  g.wk += c.x_in.transpose() * dk;
  g.wv += c.x_in.transpose() * dv;
  return dr1 + dq * p.wq.transpose() + dk * p.wk.transpose() + dv * p.wv.transpose();
}

// Shifted-window bounds for kernel tap `offset` over a length-T sequence.
void tap_range(Eigen::Index T, Eigen::Index offset, Eigen::Index& lo, Eigen::Index& n) {
  lo = std::max<Eigen::Index>(0, -offset);
  const Eigen::Index hi = std::min<Eigen::Index>(T, T - offset);
  n = std::max<Eigen::Index>(0, hi - lo);
}

Eigen::RowVectorXd tower_forward(const TowerParams& p, const Eigen::MatrixXd& x, const Context& ctx, TowerCache& c) {
  const Eigen::Index T = x.rows(), C = x.cols();
  const int filters = ctx.cfg.temporal_filters, kernel = ctx.cfg.temporal_kernel;
  const int pad = (kernel - 1) / 2;
  c.x = x;
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(T, filters * C);
  for (int f = 0; f < filters; ++f) {
    auto uf = u.middleCols(f * C, C);
    for (int k = 0; k < kernel; ++k) {
      Eigen::Index lo = 0, n = 0;
      tap_range(T, k - pad, lo, n);
      if (n > 0) uf.middleRows(lo, n) += p.temporal_w(f, k) * x.middleRows(lo + k - pad, n);
    }
    uf.array() += p.temporal_b(0, f);
  }
  c.g1 = gelu(u, c.u_grad);
  Eigen::MatrixXd h = gelu((c.g1 * p.spatial_w).rowwise() + p.spatial_b.row(0), c.z_grad) + p.position;
  c.blocks.resize(p.blocks.size());
  for (std::size_t b = 0; b < p.blocks.size(); ++b) h = block_forward(p.blocks[b], h, ctx, c.blocks[b]);
  c.pooled = h.colwise().mean();
  return c.pooled;
}

void tower_backward(const TowerParams& p, const Eigen::RowVectorXd& dpooled, const Context& ctx, const TowerCache& c,
                    TowerParams& g) {
  const Eigen::Index T = c.x.rows(), C = c.x.cols();
  const int filters = ctx.cfg.temporal_filters, kernel = ctx.cfg.temporal_kernel;
  const int pad = (kernel - 1) / 2;
  Eigen::MatrixXd dh = Eigen::MatrixXd::Ones(T, 1) * (dpooled / static_cast<double>(T));
  for (std::size_t b = p.blocks.size(); b-- > 0;) dh = block_backward(p.blocks[b], dh, ctx, c.blocks[b], g.blocks[b]);
  g.position += dh;
  const Eigen::MatrixXd dz = dh.array() * c.z_grad.array();
  g.spatial_w += c.g1.transpose() * dz;
  g.spatial_b += dz.colwise().sum();
  const Eigen::MatrixXd du = (dz * p.spatial_w.transpose()).array() * c.u_grad.array();
  for (int f = 0; f < filters; ++f) {
    const auto duf = du.middleCols(f * C, C);
    g.temporal_b(0, f) += duf.sum();
    for (int k = 0; k < kernel; ++k) {
      Eigen::Index lo = 0, n = 0;
      tap_range(T, k - pad, lo, n);
      if (n > 0) g.temporal_w(f, k) += (duf.middleRows(lo, n).array() * c.x.middleRows(lo + k - pad, n).array()).sum();
    }
  }
}

std::array<Eigen::MatrixXd, 2> tower_inputs(const ModelParams& params, const Epoch& epoch) {
  const ModelConfig& cfg = params.config;
  if (epoch.window.rows() != cfg.L || epoch.window.cols() != cfg.d) {
    throw InputError("epoch is " + std::to_string(epoch.window.rows()) + "x" + std::to_string(epoch.window.cols()) +
                     ", model expects " + std::to_string(cfg.L) + "x" + std::to_string(cfg.d));
  }
  Eigen::MatrixXd x = (epoch.window.cast<double>().array() - params.input_mean) / params.input_scale;
  Eigen::MatrixXd spectrum = log_magnitude(fft_magnitude(x, 1.0));
  return {std::move(x), std::move(spectrum)};
}

struct SampleCache {
  std::array<TowerCache, 2> towers;
  Eigen::RowVectorXd features;
};

Eigen::RowVectorXd sample_forward(const ModelParams& params, const Epoch& epoch, const Context& ctx,
                                  const std::array<double, 2>& mask, SampleCache& cache) {
  const int E = params.config.embed_dim;
  const auto inputs = tower_inputs(params, epoch);
  cache.features.setZero(2 * E);
  for (int t = 0; t < 2; ++t) {
    if (mask[t] == 0.0) continue;
    cache.features.segment(t * E, E) =
        mask[t] * tower_forward(params.towers[t], inputs[t], ctx, cache.towers[t]);
  }
  return cache.features * params.head_w + params.head_b.row(0);
}

std::string first_non_finite_block(const ModelParams& params) {
  std::string name;
  params.for_each_block([&](const std::string& n, const Eigen::MatrixXd& m) {
    if (name.empty() && !m.allFinite()) name = n;
  });
  if (name.empty() && !(std::isfinite(params.input_mean) && std::isfinite(params.input_scale))) name = "input";
  return name.empty() ? "input" : name;
}

void tower_blocks(const std::string& prefix, TowerParams& t,
                  const std::function<void(const std::string&, Eigen::MatrixXd&)>& fn) {
  fn(prefix + ".temporal_w", t.temporal_w);
  fn(prefix + ".temporal_b", t.temporal_b);
  fn(prefix + ".spatial_w", t.spatial_w);
  fn(prefix + ".spatial_b", t.spatial_b);
  fn(prefix + ".position", t.position);
  for (std::size_t b = 0; b < t.blocks.size(); ++b) {
    auto& blk = t.blocks[b];
    const std::string p = prefix + ".block" + std::to_string(b);
    fn(p + ".wq", blk.wq);
    fn(p + ".wk", blk.wk);
    fn(p + ".wv", blk.wv);
    fn(p + ".rel_bias", blk.rel_bias);
    fn(p + ".wo", blk.wo);
    fn(p + ".bo", blk.bo);
    fn(p + ".ln1_gamma", blk.ln1_gamma);
    fn(p + ".ln1_beta", blk.ln1_beta);
    fn(p + ".w_ffn1", blk.w_ffn1);
    fn(p + ".b_ffn1", blk.b_ffn1);
    fn(p + ".w_ffn2", blk.w_ffn2);
    fn(p + ".b_ffn2", blk.b_ffn2);
    fn(p + ".ln2_gamma", blk.ln2_gamma);
    fn(p + ".ln2_beta", blk.ln2_beta);
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (L < 2 || d < 1) throw InputError("model needs L >= 2 and d >= 1");
  if ((L & (L - 1)) != 0) throw InputError("model L must be a power of two for the frequency tower");
  if (embed_dim < 1 || heads < 1) throw InputError("embed_dim and heads must be positive");
  if (embed_dim % heads != 0) {
    throw InputError("embed_dim " + std::to_string(embed_dim) + " is not divisible by heads " + std::to_string(heads));
  }
  if (attention_blocks < 0) throw InputError("attention_blocks must be non-negative");
  if (ffn_dim < 1) throw InputError("ffn_dim must be positive");
  if (classes < 2) throw InputError("classes must be at least 2");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InputError("dropout must lie in [0, 1)");
  if (temporal_filters < 1 || temporal_kernel < 1) throw InputError("temporal conv sizes must be positive");
}

void ModelParams::for_each_block(const std::function<void(const std::string&, Eigen::MatrixXd&)>& fn) {
  tower_blocks("time", towers[0], fn);
  tower_blocks("frequency", towers[1], fn);
  fn("head.w", head_w);
  fn("head.b", head_b);
}

void ModelParams::for_each_block(const std::function<void(const std::string&, const Eigen::MatrixXd&)>& fn) const {
  const_cast<ModelParams*>(this)->for_each_block(
      [&](const std::string& name, Eigen::MatrixXd& m) { fn(name, static_cast<const Eigen::MatrixXd&>(m)); });
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for_each_block([&](const std::string&, const Eigen::MatrixXd& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  z.for_each_block([](const std::string&, Eigen::MatrixXd& m) { m.setZero(); });
  return z;
}

Eigen::MatrixXd position_table(int length, int embed_dim) {
  Eigen::MatrixXd pe(length, embed_dim);
  const double stretch = static_cast<double>(embed_dim) / static_cast<double>(length);
  for (int i = 0; i < embed_dim; i += 2) {
    const double omega = std::exp(-static_cast<double>(i) * std::log(10000.0) / static_cast<double>(embed_dim));
    for (int p = 0; p < length; ++p) {
      const double angle = static_cast<double>(p) * omega * stretch;
      pe(p, i) = std::sin(angle);
      if (i + 1 < embed_dim) pe(p, i + 1) = std::cos(angle);
    }
  }
  return pe;
}

ModelParams init_params(const ModelConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  ModelParams params;
  params.config = cfg;
  const int E = cfg.embed_dim, F = cfg.ffn_dim, K = cfg.temporal_kernel, Ft = cfg.temporal_filters;
  const std::array<int, 2> lengths{cfg.L, cfg.spectrum_bins()};
  for (int t = 0; t < 2; ++t) {
    TowerParams& tw = params.towers[t];
    const int T = lengths[t];
    tw.temporal_w = xavier(Ft, K, K, Ft * K, rng);
    tw.temporal_b = Eigen::MatrixXd::Zero(1, Ft);
    tw.spatial_w = xavier(Ft * cfg.d, E, Ft * cfg.d, E, rng);
    tw.spatial_b = Eigen::MatrixXd::Zero(1, E);
    tw.position = position_table(T, E);
    for (int b = 0; b < cfg.attention_blocks; ++b) {
      AttentionBlockParams blk;
      blk.wq = xavier(E, E, E, E, rng);
      blk.wk = xavier(E, E, E, E, rng);
      blk.wv = xavier(E, E, E, E, rng);
      blk.rel_bias = Eigen::MatrixXd::Zero(cfg.heads, 2 * T - 1);
      blk.wo = xavier(E, E, E, E, rng);
      blk.bo = Eigen::MatrixXd::Zero(1, E);
      blk.ln1_gamma = Eigen::MatrixXd::Ones(1, E);
      blk.ln1_beta = Eigen::MatrixXd::Zero(1, E);
      blk.w_ffn1 = xavier(E, F, E, F, rng);
      blk.b_ffn1 = Eigen::MatrixXd::Zero(1, F);
      blk.w_ffn2 = xavier(F, E, F, E, rng);
      blk.b_ffn2 = Eigen::MatrixXd::Zero(1, E);
      blk.ln2_gamma = Eigen::MatrixXd::Ones(1, E);
      blk.ln2_beta = Eigen::MatrixXd::Zero(1, E);
      tw.blocks.push_back(std::move(blk));
    }
  }
  params.head_w = xavier(2 * E, cfg.classes, 2 * E, cfg.classes, rng);
  params.head_b = Eigen::MatrixXd::Zero(1, cfg.classes);
  return params;
}

std::vector<double> flatten(const ModelParams& params) {
  std::vector<double> out;
  out.reserve(params.parameter_count());
  params.for_each_block([&](const std::string&, const Eigen::MatrixXd& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(m(i, j));
  });
  return out;
}

void unflatten(ModelParams& params, std::span<const double> values) {
  if (values.size() != params.parameter_count()) {
    throw InputError("expected " + std::to_string(params.parameter_count()) + " parameters, got " +
                     std::to_string(values.size()));
  }
  std::size_t pos = 0;
  params.for_each_block([&](const std::string&, Eigen::MatrixXd& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = values[pos++];
  });
}

std::uint64_t checksum(const ModelParams& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  for (double v : flatten(params)) feed(v);
  feed(params.input_mean);
  feed(params.input_scale);
  return h;
}

Eigen::MatrixXd forward(const ModelParams& params, const std::vector<const Epoch*>& batch,
                        const ForwardOptions& options) {
  const ModelConfig& cfg = params.config;
  Eigen::MatrixXd logits(static_cast<Eigen::Index>(batch.size()), cfg.classes);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    std::mt19937_64 rng(splitmix(options.dropout_seed ^ splitmix(i)));
    const Context ctx{cfg, options.training, cfg.dropout, &rng};
    SampleCache cache;
    logits.row(static_cast<Eigen::Index>(i)) = sample_forward(params, *batch[i], ctx, options.tower_mask, cache);
  }
  return logits;
}

Eigen::MatrixXd forward(const ModelParams& params, const std::vector<Epoch>& batch, const ForwardOptions& options) {
  std::vector<const Epoch*> ptrs;
  for (const auto& e : batch) ptrs.push_back(&e);
  return forward(params, ptrs, options);
}

std::vector<Eigen::MatrixXd> attention_maps(const ModelParams& params, const Epoch& epoch) {
  const Context ctx{params.config, false, 0.0, nullptr};
  SampleCache cache;
  sample_forward(params, epoch, ctx, {1.0, 1.0}, cache);
  std::vector<Eigen::MatrixXd> out;
  for (const auto& tower : cache.towers)
    for (const auto& blk : tower.blocks)
      for (const auto& a : blk.attn) out.push_back(a);
  return out;
}

LossAndGrad loss_and_grad(const ModelParams& params, const std::vector<const Epoch*>& batch,
                          const std::vector<Label>& labels, const ForwardOptions& options,
                          const std::vector<double>& class_weights) {
  const ModelConfig& cfg = params.config;
  if (batch.empty()) throw InputError("loss needs a non-empty batch");
  if (labels.size() != batch.size()) throw InputError("batch and label counts differ");
  if (!class_weights.empty() && class_weights.size() != static_cast<std::size_t>(cfg.classes)) {
    throw InputError("class weight count must equal the class count");
  }
  auto weight_of = [&](Label y) {
    const auto c = static_cast<std::size_t>(y);
    if (c >= static_cast<std::size_t>(cfg.classes)) throw InputError("label outside the model's classes");
    return class_weights.empty() ? 1.0 : class_weights[c];
  };
  double total_weight = 0.0;
  for (Label y : labels) total_weight += weight_of(y);
  if (!(total_weight > 0.0)) throw InputError("class weights of the batch sum to zero");

  const int E = cfg.embed_dim;
  LossAndGrad out;
  out.grad = params.zeros_like();
  out.logits.resize(static_cast<Eigen::Index>(batch.size()), cfg.classes);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    std::mt19937_64 rng(splitmix(options.dropout_seed ^ splitmix(i)));
    const Context ctx{cfg, options.training, cfg.dropout, &rng};
    SampleCache cache;
    const Eigen::RowVectorXd z = sample_forward(params, *batch[i], ctx, options.tower_mask, cache);
    out.logits.row(static_cast<Eigen::Index>(i)) = z;

    const double zmax = z.maxCoeff();
    const Eigen::RowVectorXd e = (z.array() - zmax).exp();
    const double sum = e.sum();
    const auto y = static_cast<Eigen::Index>(labels[i]);
    const double w = weight_of(labels[i]) / total_weight;
    out.loss += w * (std::log(sum) + zmax - z(y));

    Eigen::RowVectorXd dz = e / sum;
    dz(y) -= 1.0;
    dz *= w;
    out.grad.head_w += cache.features.transpose() * dz;
    out.grad.head_b += dz;
    const Eigen::RowVectorXd dfeat = dz * params.head_w.transpose();
    for (int t = 0; t < 2; ++t) {
      if (options.tower_mask[t] == 0.0) continue;
      tower_backward(params.towers[t], options.tower_mask[t] * dfeat.segment(t * E, E), ctx, cache.towers[t],
                     out.grad.towers[t]);
    }
  }
  if (!std::isfinite(out.loss)) {
    throw NumericalError("non-finite loss; offending block: " + first_non_finite_block(params));
  }
  return out;
}

std::vector<double> inverse_frequency_weights(const std::vector<Label>& labels, int classes) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(classes), 0);
  for (Label y : labels) {
    const auto c = static_cast<std::size_t>(y);
    if (c >= counts.size()) throw InputError("label outside the model's classes");
    ++counts[c];
  }
  std::vector<double> w(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) throw DataError("training set has no epochs of class '" + std::to_string(c) + "'");
    w[c] = static_cast<double>(labels.size()) / (static_cast<double>(classes) * static_cast<double>(counts[c]));
  }
  return w;
}

TrainResult train(const ModelConfig& config, const EpochSet& train_set, const TrainHyper& hyper,
                  const TrainProgress& progress) {
  config.validate();
  if (hyper.epochs < 0 || hyper.batch_size < 1) throw InputError("epochs must be >= 0 and batch_size >= 1");
  if (!(hyper.lr >= 0.0)) throw InputError("learning rate must be non-negative");
  if (train_set.empty()) throw DataError("training set is empty");
  const std::vector<Label> labels = train_set.labels();
  // Also rejects single-class sets.
  const std::vector<double> balanced = inverse_frequency_weights(labels, config.classes);
  const std::vector<double> weights = hyper.class_weights ? balanced : std::vector<double>{};

  TrainResult result;
  result.params = init_params(config);
  double sum = 0.0, sum_sq = 0.0, count = 0.0;
  for (const auto& e : train_set.epochs) {
    if (e.window.rows() != config.L || e.window.cols() != config.d) throw InputError("training epoch shape mismatch");
    const Eigen::ArrayXXd w = e.window.cast<double>().array();
    sum += w.sum();
    sum_sq += w.square().sum();
    count += static_cast<double>(w.size());
  }
  const double mean = sum / count;
  const double var = std::max(0.0, sum_sq / count - mean * mean);
  result.params.input_mean = mean;
  result.params.input_scale = var > 0.0 ? std::sqrt(var) : 1.0;

  const std::size_t n = train_set.size();
  std::vector<double> m(result.params.parameter_count(), 0.0), v(m.size(), 0.0);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(hyper.seed);
  std::uint64_t step = 0;

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[static_cast<std::size_t>(rng() % (i + 1))]);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(hyper.batch_size)) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(hyper.batch_size));
      std::vector<const Epoch*> batch;
      std::vector<Label> batch_labels;
      for (std::size_t i = start; i < stop; ++i) {
        batch.push_back(&train_set.epochs[order[i]]);
        batch_labels.push_back(labels[order[i]]);
      }
      ++step;
      ForwardOptions opts;
      opts.training = true;
      opts.dropout_seed = splitmix(hyper.seed ^ splitmix(step));
      const LossAndGrad lg = loss_and_grad(result.params, batch, batch_labels, opts, weights);
      loss_sum += lg.loss * static_cast<double>(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        Eigen::Index arg = 0;
        lg.logits.row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
        if (static_cast<Label>(arg) == batch_labels[i]) ++correct;
      }

      const std::vector<double> g = flatten(lg.grad);
      std::vector<double> p = flatten(result.params);
      const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step));
      for (std::size_t k = 0; k < p.size(); ++k) {
        m[k] = hyper.beta1 * m[k] + (1.0 - hyper.beta1) * g[k];
        v[k] = hyper.beta2 * v[k] + (1.0 - hyper.beta2) * g[k] * g[k];
        p[k] -= hyper.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + hyper.adam_eps);
      }
      unflatten(result.params, p);
    }
    const double epoch_loss = loss_sum / static_cast<double>(n);
    const double accuracy = static_cast<double>(correct) / static_cast<double>(n);
    if (!std::isfinite(epoch_loss)) throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch));
    result.report.epoch_loss.push_back(epoch_loss);
    result.report.train_accuracy.push_back(accuracy);
    result.report.epoch_wall_s.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (progress) progress(epoch, epoch_loss, accuracy);
  }
  result.report.checksum = checksum(result.params);
  return result;
}

std::vector<Prediction> predict(const ModelParams& params, const EpochSet& set, std::size_t batch_size) {
  if (batch_size == 0) throw InputError("batch size must be positive");
  std::vector<Prediction> out;
  out.reserve(set.size());
  for (std::size_t start = 0; start < set.size(); start += batch_size) {
    std::vector<const Epoch*> batch;
    for (std::size_t i = start; i < std::min(set.size(), start + batch_size); ++i) batch.push_back(&set.epochs[i]);
    const Eigen::MatrixXd logits = forward(params, batch);
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
      const Eigen::RowVectorXd e = (logits.row(r).array() - logits.row(r).maxCoeff()).exp();
      const Eigen::RowVectorXd p = e / e.sum();
      Prediction pred;
      pred.probabilities.assign(p.data(), p.data() + p.size());
      Eigen::Index arg = 0;
      p.maxCoeff(&arg);
      pred.label = static_cast<Label>(arg);
      out.push_back(std::move(pred));
    }
  }
  return out;
}

}  // namespace neurowave
