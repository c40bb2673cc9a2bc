#include "neurowave/spectral.hpp"

#include "neurowave/error.hpp"
#include "neurowave/fft.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace neurowave {

Spectrum fft_magnitude(const Eigen::MatrixXd& window, double sample_rate_hz, const SpectrumOptions& options) {
  const auto length = static_cast<std::size_t>(window.rows());
  if (!fft::is_power_of_two(length)) throw InputError("epoch length must be a power of two");
  if (!(sample_rate_hz > 0.0)) throw InputError("sample rate must be positive");
  Spectrum spec;
  spec.bin_hz = sample_rate_hz / static_cast<double>(length);
  spec.magnitudes.resize(static_cast<Eigen::Index>(length / 2 + 1), window.cols());

  std::vector<double> taper(length, 1.0);
  if (options.hann) {
    for (std::size_t i = 0; i < length; ++i) {
      taper[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(length));
    }
  }
  std::vector<double> column(length);
  for (Eigen::Index c = 0; c < window.cols(); ++c) {
    for (std::size_t i = 0; i < length; ++i) column[i] = window(static_cast<Eigen::Index>(i), c) * taper[i];
    const auto mag = fft::real_magnitude(column);
    for (std::size_t k = 0; k < mag.size(); ++k) spec.magnitudes(static_cast<Eigen::Index>(k), c) = mag[k];
  }
  return spec;
}

Spectrum fft_magnitude(const Epoch& epoch, double sample_rate_hz, const SpectrumOptions& options) {
  return fft_magnitude(Eigen::MatrixXd(epoch.window.cast<double>()), sample_rate_hz, options);
}

Eigen::VectorXd band_power(const Spectrum& spec, double low_hz, double high_hz) {
  const double nyquist = spec.bin_hz * static_cast<double>(spec.bins() - 1);
  if (!(low_hz >= 0.0) || !(low_hz < high_hz) || high_hz > nyquist + 1e-9) {
    throw InputError("band must satisfy 0 <= low < high <= Nyquist");
  }
  Eigen::VectorXd power = Eigen::VectorXd::Zero(spec.magnitudes.cols());
  for (Eigen::Index k = 0; k < spec.magnitudes.rows(); ++k) {
    const double f = static_cast<double>(k) * spec.bin_hz;
    if (f >= low_hz && f < high_hz) power += spec.magnitudes.row(k).transpose().array().square().matrix();
  }
  return power;
}

Eigen::VectorXd band_power(const Spectrum& spec, const Band& band) {
  return band_power(spec, band.low_hz, band.high_hz);
}

Eigen::MatrixXd log_magnitude(const Spectrum& spec) { return spec.magnitudes.array().log1p().matrix(); }

}  // namespace neurowave
