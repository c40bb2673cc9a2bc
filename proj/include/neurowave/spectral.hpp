#pragma once

#include "neurowave/types.hpp"

#include <string_view>

namespace neurowave {

// One-sided magnitude spectrum per channel: bins x channels, bins = L/2 + 1.
struct Spectrum {
  Eigen::MatrixXd magnitudes;
  double bin_hz = 0.0;

  std::size_t bins() const { return static_cast<std::size_t>(magnitudes.rows()); }
};

struct SpectrumOptions {
  bool hann = false;
};

// Unnormalized DFT magnitudes; L must be a power of two.
Spectrum fft_magnitude(const Epoch& epoch, double sample_rate_hz, const SpectrumOptions& options = {});
Spectrum fft_magnitude(const Eigen::MatrixXd& window, double sample_rate_hz, const SpectrumOptions& options = {});

// Sum of squared magnitudes over bins whose center lies in [low_hz, high_hz).
Eigen::VectorXd band_power(const Spectrum& spec, double low_hz, double high_hz);

struct Band {
  std::string_view name;
  double low_hz;
  double high_hz;
};

inline constexpr Band kDelta{"delta", 0.5, 4.0};
inline constexpr Band kTheta{"theta", 4.0, 8.0};
inline constexpr Band kAlpha{"alpha", 8.0, 12.0};
inline constexpr Band kBeta{"beta", 12.0, 30.0};
inline constexpr Band kGamma{"gamma", 30.0, 80.0};
inline constexpr Band kPresetBands[] = {kDelta, kTheta, kAlpha, kBeta, kGamma};

Eigen::VectorXd band_power(const Spectrum& spec, const Band& band);

// log(1 + |X|), the representation fed to the frequency tower.
Eigen::MatrixXd log_magnitude(const Spectrum& spec);

}  // namespace neurowave
