#include "neurowave/ica.hpp"

#include "neurowave/error.hpp"
#include "neurowave/fft.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace neurowave {
namespace {

// (W W^T)^{-1/2} W
Eigen::MatrixXd symmetric_decorrelation(const Eigen::MatrixXd& w) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w * w.transpose());
  const Eigen::VectorXd inv_sqrt = es.eigenvalues().array().max(1e-300).rsqrt();
  return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose() * w;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double heartbeat_prominence(const Eigen::Ref<const Eigen::RowVectorXd>& s, double fs, const LabelerConfig& cfg) {
  const auto bin = static_cast<Eigen::Index>(std::max(1.0, std::round(0.02 * fs)));
  const Eigen::Index n = s.size() / bin;
  const double env_fs = fs / static_cast<double>(bin);
  const auto lo = static_cast<Eigen::Index>(std::ceil(cfg.heartbeat_min_period_s * env_fs));
  const auto hi = static_cast<Eigen::Index>(std::floor(cfg.heartbeat_max_period_s * env_fs));
  if (n < 2 * hi + 1 || lo < 1) return 0.0;

  std::vector<double> env(static_cast<std::size_t>(n));
  for (Eigen::Index b = 0; b < n; ++b) env[static_cast<std::size_t>(b)] = s.segment(b * bin, bin).squaredNorm() / static_cast<double>(bin);
  const double mean = std::accumulate(env.begin(), env.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double& v : env) {
    v -= mean;
    var += v * v;
  }
  var /= static_cast<double>(n);
  if (var <= 1e-6 * mean * mean || var <= 0.0) return 0.0;

  std::vector<std::complex<double>> buf(fft::next_power_of_two(2 * static_cast<std::size_t>(n)));
  for (std::size_t i = 0; i < env.size(); ++i) buf[i] = env[i];
  fft::transform(buf);
  for (auto& v : buf) v = std::norm(v);
  fft::transform(buf, true);
  const double r0 = buf[0].real();
  auto r = [&](Eigen::Index lag) { return buf[static_cast<std::size_t>(lag)].real() / r0; };

  Eigen::Index peak_lag = lo;
  for (Eigen::Index lag = lo; lag <= hi; ++lag) {
    if (r(lag) > r(peak_lag)) peak_lag = lag;
  }
  double trough = r(peak_lag);
  for (Eigen::Index lag = std::max<Eigen::Index>(1, lo / 2); lag <= peak_lag; ++lag) trough = std::min(trough, r(lag));
  return r(peak_lag) - trough;
}

}  // namespace

std::string_view to_string(ComponentCategory c) {
  switch (c) {
    case ComponentCategory::muscle:
      return "muscle";
    case ComponentCategory::heartbeat:
      return "heartbeat";
    case ComponentCategory::line_noise:
      return "line_noise";
    case ComponentCategory::channel_noise:
      return "channel_noise";
    case ComponentCategory::eye_blink:
      return "eye_blink";
    case ComponentCategory::brain:
      return "brain";
    case ComponentCategory::other:
      return "other";
  }
  return "other";
}

ComponentCategory category_from_string(std::string_view s) {
  for (auto c : kAllCategories) {
    if (to_string(c) == s) return c;
  }
  throw InputError("unknown component category '" + std::string(s) + "'");
}

ComponentCategory argmax(const CategoryScores& scores) {
  const auto it = std::max_element(scores.begin(), scores.end());
  return kAllCategories[static_cast<std::size_t>(it - scores.begin())];
}

IcaModel fit_ica(const Recording& rec, std::size_t k, std::uint64_t seed, const IcaOptions& options) {
  rec.validate();
  const auto channels = static_cast<Eigen::Index>(rec.channels());
  const auto kk = static_cast<Eigen::Index>(k);
  if (k == 0 || kk > channels) throw InputError("ICA component count must lie in [1, channels]");
  if (rec.samples() < 2 * k) throw DataError("recording too short for ICA");

  const Eigen::VectorXd mean = rec.data.rowwise().mean();
  Eigen::Index stride = 1;
  if (options.max_fit_samples > 0 && rec.samples() > options.max_fit_samples) {
    stride = static_cast<Eigen::Index>((rec.samples() + options.max_fit_samples - 1) / options.max_fit_samples);
  }
  const Eigen::Index n = (rec.data.cols() + stride - 1) / stride;
  Eigen::MatrixXd x(channels, n);
  for (Eigen::Index j = 0; j < n; ++j) x.col(j) = rec.data.col(j * stride) - mean;

  // PCA whitening onto the top-k eigenvectors.
  const Eigen::MatrixXd cov = x * x.transpose() / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const Eigen::VectorXd evals = es.eigenvalues().tail(kk).reverse();
  const Eigen::MatrixXd evecs = es.eigenvectors().rightCols(kk).rowwise().reverse();
  const double largest = es.eigenvalues()(channels - 1);
  if (!(largest > 0.0) || evals(kk - 1) <= 1e-10 * largest) {
    throw NumericalError("rank-deficient data: only " +
                         std::to_string((es.eigenvalues().array() > 1e-10 * largest).count()) +
                         " informative dimensions for " + std::to_string(k) + " components");
  }
  const Eigen::MatrixXd whitening = evals.array().rsqrt().matrix().asDiagonal() * evecs.transpose();
  const Eigen::MatrixXd dewhitening = evecs * evals.array().sqrt().matrix().asDiagonal();
  const Eigen::MatrixXd z = whitening * x;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd w(kk, kk);
  for (Eigen::Index i = 0; i < kk; ++i)
    for (Eigen::Index j = 0; j < kk; ++j) w(i, j) = normal(rng);
  w = symmetric_decorrelation(w);

  const double inv_n = 1.0 / static_cast<double>(n);
  int iter = 0;
  bool converged = false;
  while (iter < options.max_iterations) {
    ++iter;
    const Eigen::MatrixXd g = (w * z).array().tanh().matrix();
    const Eigen::VectorXd g_prime_mean = (1.0 - g.array().square()).rowwise().mean();
    Eigen::MatrixXd w_new = g * z.transpose() * inv_n - g_prime_mean.asDiagonal() * w;
    w_new = symmetric_decorrelation(w_new);
    const double lim = (1.0 - (w_new * w.transpose()).diagonal().array().abs()).abs().maxCoeff();
    w = std::move(w_new);
    if (lim < options.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) throw ConvergenceError("FastICA did not converge", iter);

  IcaModel model;
  model.unmixing = w * whitening;
  model.mixing = dewhitening * w.transpose();
  model.mean = mean;
  model.iterations = iter;

  // Canonical order: decreasing back-projected variance (unit-variance
  // sources, so the squared mixing-column norm); sign so the largest weight is positive.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(kk));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return model.mixing.col(a).squaredNorm() > model.mixing.col(b).squaredNorm();
  });
  Eigen::MatrixXd unmixing(kk, channels), mixing(channels, kk);
  for (Eigen::Index i = 0; i < kk; ++i) {
    const Eigen::Index src = order[static_cast<std::size_t>(i)];
    Eigen::Index arg = 0;
    model.mixing.col(src).cwiseAbs().maxCoeff(&arg);
    const double sign = model.mixing(arg, src) < 0.0 ? -1.0 : 1.0;
    mixing.col(i) = sign * model.mixing.col(src);
    unmixing.row(i) = sign * model.unmixing.row(src);
  }
  model.mixing = std::move(mixing);
  model.unmixing = std::move(unmixing);
  return model;
}

Eigen::MatrixXd ica_sources(const IcaModel& model, const Recording& rec) {
  if (model.channels() != rec.channels()) throw InputError("ICA model and recording channel counts differ");
  return model.unmixing * (rec.data.colwise() - model.mean);
}

std::vector<ComponentFeatures> component_features(const IcaModel& model, const Recording& rec,
                                                  const LabelerConfig& cfg) {
  const Eigen::MatrixXd sources = ica_sources(model, rec);
  const double fs = rec.sample_rate_hz;
  const std::size_t nfft = std::max<std::size_t>(256, fft::next_power_of_two(static_cast<std::size_t>(2.0 * fs)));

  std::vector<ComponentFeatures> out;
  std::vector<double> row(static_cast<std::size_t>(sources.cols()));
  for (Eigen::Index i = 0; i < sources.rows(); ++i) {
    Eigen::Map<Eigen::RowVectorXd>(row.data(), sources.cols()) = sources.row(i);
    const fft::Psd psd = fft::welch(row, fs, nfft);
    ComponentFeatures f;
    double total = 0.0, line = 0.0, high = 0.0, low = 0.0, best = -1.0;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int fit_n = 0;
    for (std::size_t b = 1; b < psd.power.size(); ++b) {
      const double hz = psd.freqs_hz[b];
      const double p = psd.power[b];
      total += p;
      const bool in_line = std::abs(hz - cfg.mains_hz) <= cfg.line_halfwidth_hz;
      if (in_line) line += p;
      if (hz > cfg.muscle_cutoff_hz && !in_line) high += p;
      if (hz < cfg.eye_cutoff_hz) low += p;
      if (p > best) best = p, f.dominant_hz = hz;
      if (hz >= cfg.slope_fit_low_hz && hz <= cfg.slope_fit_high_hz) {
        const double lx = std::log10(hz), ly = std::log10(p + 1e-300);
        sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
        ++fit_n;
      }
    }
    if (total > 0.0) {
      f.line_fraction = line / total;
      f.high_frequency_fraction = high / total;
      f.low_frequency_fraction = low / total;
    }
    if (fit_n >= 2) {
      const double denom = fit_n * sxx - sx * sx;
      f.spectral_slope = denom != 0.0 ? (fit_n * sxy - sx * sy) / denom : 0.0;
    }
    f.heartbeat_prominence = heartbeat_prominence(sources.row(i), fs, cfg);
    const Eigen::VectorXd energy = model.mixing.col(i).array().square();
    f.channel_concentration = energy.sum() > 0.0 ? energy.maxCoeff() / energy.sum() : 0.0;
    out.push_back(f);
  }
  return out;
}

CategoryScores score_component(const ComponentFeatures& f, const LabelerConfig& cfg) {
  auto idx = [](ComponentCategory c) { return static_cast<std::size_t>(c); };
  CategoryScores ev{};
  ev[idx(ComponentCategory::line_noise)] = logistic((f.line_fraction - cfg.line_fraction) / 0.03);
  ev[idx(ComponentCategory::muscle)] = logistic((f.high_frequency_fraction - cfg.muscle_fraction) / 0.03);
  ev[idx(ComponentCategory::heartbeat)] = logistic((f.heartbeat_prominence - cfg.heartbeat_prominence) / 0.03);
  ev[idx(ComponentCategory::channel_noise)] = logistic((f.channel_concentration - cfg.channel_concentration) / 0.01);
  ev[idx(ComponentCategory::eye_blink)] =
      cfg.eyes_closed ? 0.0 : logistic((f.low_frequency_fraction - cfg.eye_fraction) / 0.03);

  double remaining = 1.0;
  double total = 0.0;
  for (double e : ev) {
    remaining *= 1.0 - e;
    total += e;
  }
  const double brainness = logistic((cfg.brain_slope_max - f.spectral_slope) / 0.1) *
                           logistic((f.spectral_slope - cfg.brain_slope_min) / 0.1);
  ev[idx(ComponentCategory::brain)] = remaining * brainness;
  ev[idx(ComponentCategory::other)] = remaining * (1.0 - brainness);
  total += remaining;
  for (double& e : ev) e /= total;
  return ev;
}

IcaModel label_components(const IcaModel& model, const Recording& rec, const LabelerConfig& cfg) {
  IcaModel out = model;
  out.scores.clear();
  for (const auto& f : component_features(model, rec, cfg)) out.scores.push_back(score_component(f, cfg));
  return out;
}

std::vector<std::size_t> components_to_remove(const IcaModel& model, const std::set<ComponentCategory>& remove,
                                              double threshold) {
  if (!model.labeled()) throw InputError("ICA components must be labeled before removal");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < model.scores.size(); ++i) {
    const ComponentCategory best = argmax(model.scores[i]);
    if (remove.contains(best) && model.scores[i][static_cast<std::size_t>(best)] >= threshold) out.push_back(i);
  }
  return out;
}

Recording remove_and_reconstruct(const IcaModel& model, const Recording& rec,
                                 const std::set<ComponentCategory>& remove, double threshold,
                                 const ReconstructOptions& options) {
  rec.validate();
  const auto removed = components_to_remove(model, remove, threshold);
  Recording out = rec;
  // Column blocks bound the temporary memory on long recordings.
  constexpr Eigen::Index kBlock = 1 << 16;
  for (Eigen::Index c0 = 0; c0 < rec.data.cols(); c0 += kBlock) {
    const Eigen::Index w = std::min(kBlock, rec.data.cols() - c0);
    const Eigen::MatrixXd centered = rec.data.middleCols(c0, w).colwise() - model.mean;
    Eigen::MatrixXd sources = model.unmixing * centered;
    if (options.add_back_residual) {
      // x - A s_removed keeps everything outside the removed components.
      Eigen::MatrixXd dropped = Eigen::MatrixXd::Zero(sources.rows(), w);
      for (auto i : removed) dropped.row(static_cast<Eigen::Index>(i)) = sources.row(static_cast<Eigen::Index>(i));
      out.data.middleCols(c0, w) -= model.mixing * dropped;
    } else {
      for (auto i : removed) sources.row(static_cast<Eigen::Index>(i)).setZero();
      out.data.middleCols(c0, w) = (model.mixing * sources).colwise() + model.mean;
    }
  }
  return out;
}

}  // namespace neurowave
