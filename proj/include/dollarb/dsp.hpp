#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dollarb::dsp {

enum class FilterKind { lowpass, highpass };

/// One second-order section, a0 normalized to 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

struct BiquadCascade {
  std::vector<Biquad> sections;
  FilterKind kind = FilterKind::lowpass;
  double cutoff_hz = 0.0;
  int order = 0;
  double sample_rate_hz = 0.0;

  /// H(e^{jω}) at `freq_hz`, evaluated directly from the coefficients.
  std::complex<double> response(double freq_hz) const {
    const double w = 2.0 * std::numbers::pi * freq_hz / sample_rate_hz;
    const std::complex<double> z1 = std::polar(1.0, -w);
    const std::complex<double> z2 = z1 * z1;
    std::complex<double> h = 1.0;
    for (const auto& s : sections)
      h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
    return h;
  }

  double magnitude(double freq_hz) const { return std::abs(response(freq_hz)); }
};

/// Butterworth low/high-pass as a cascade of biquads, designed by the
/// bilinear transform with the cutoff pre-warped so |H(cutoff)| = 1/√2.
inline BiquadCascade design_butterworth(FilterKind kind, int order, double cutoff_hz,
                                        double sample_rate_hz) {
  if (order < 2 || order % 2 != 0)
    throw std::invalid_argument("design_butterworth: order must be even and >= 2, got " +
                                std::to_string(order));
  if (!(sample_rate_hz > 0.0))
    throw std::invalid_argument("design_butterworth: sample rate must be positive");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < sample_rate_hz / 2.0))
    throw std::invalid_argument("design_butterworth: cutoff must lie in (0, Nyquist)");

  BiquadCascade out;
  out.kind = kind;
  out.order = order;
  out.cutoff_hz = cutoff_hz;
  out.sample_rate_hz = sample_rate_hz;

  const double k = std::tan(std::numbers::pi * cutoff_hz / sample_rate_hz);
  const double k2 = k * k;
  for (int i = 0; i < order / 2; ++i) {
    // Each conjugate pole pair of the analog prototype sits at angle θ from
    // the imaginary axis; its section quality factor is 1/(2 sin θ).
    const double theta = std::numbers::pi * (2.0 * i + 1.0) / (2.0 * order);
    const double q = 1.0 / (2.0 * std::sin(theta));
    const double norm = 1.0 / (1.0 + k / q + k2);
    Biquad s;
    s.a1 = 2.0 * (k2 - 1.0) * norm;
    s.a2 = (1.0 - k / q + k2) * norm;
    if (kind == FilterKind::lowpass) {
      s.b0 = k2 * norm;
      s.b1 = 2.0 * s.b0;
    } else {
      s.b0 = norm;
      s.b1 = -2.0 * s.b0;
    }
    s.b2 = s.b0;
    out.sections.push_back(s);
  }
  return out;
}

/// Causal direct-form-II-transposed filtering, zero initial state.
inline std::vector<double> filter_forward(const BiquadCascade& cascade,
                                          std::span<const double> signal) {
  std::vector<double> y(signal.begin(), signal.end());
  for (const auto& s : cascade.sections) {
    double z1 = 0.0, z2 = 0.0;
    for (double& v : y) {
      const double x = v;
      const double out = s.b0 * x + z1;
      z1 = s.b1 * x - s.a1 * out + z2;
      z2 = s.b2 * x - s.a2 * out;
      v = out;
    }
  }
  return y;
}

inline std::vector<double> rectify(std::span<const double> signal) {
  std::vector<double> out;
  out.reserve(signal.size());
  for (double v : signal)
    out.push_back(std::abs(v));
  return out;
}

namespace detail {
inline std::size_t window_count(std::size_t length, std::size_t window, std::size_t hop,
                                const char* who) {
  if (window == 0 || hop == 0)
    throw std::invalid_argument(std::string(who) + ": window and hop must be positive");
  if (hop > window)
    throw std::invalid_argument(std::string(who) + ": hop must not exceed window");
  if (window > length)
    throw std::invalid_argument(std::string(who) + ": window longer than signal");
  return (length - window) / hop + 1;
}
} // namespace detail

/// Mean of each full window; partial trailing windows are dropped.
inline std::vector<double> moving_average_downsample(std::span<const double> signal,
                                                     std::size_t window, std::size_t hop) {
  const std::size_t count = detail::window_count(signal.size(), window, hop, "moving_average_downsample");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    double sum = 0.0;
    for (std::size_t k = i * hop; k < i * hop + window; ++k)
      sum += signal[k];
    out[i] = sum / static_cast<double>(window);
  }
  return out;
}

/// Root-mean-square of each full window, same windowing as moving_average_downsample.
inline std::vector<double> rms_windows(std::span<const double> signal, std::size_t window,
                                       std::size_t hop) {
  const std::size_t count = detail::window_count(signal.size(), window, hop, "rms_windows");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    double sum = 0.0;
    for (std::size_t k = i * hop; k < i * hop + window; ++k)
      sum += signal[k] * signal[k];
    out[i] = std::sqrt(sum / static_cast<double>(window));
  }
  return out;
}

inline std::vector<double> diff(std::span<const double> signal) {
  if (signal.size() < 2)
    throw std::invalid_argument("diff: need at least 2 samples");
  std::vector<double> out(signal.size() - 1);
  for (std::size_t i = 0; i + 1 < signal.size(); ++i)
    out[i] = signal[i + 1] - signal[i];
  return out;
}

inline std::size_t samples_for(double seconds, double sample_rate_hz) {
  return static_cast<std::size_t>(std::llround(seconds * sample_rate_hz));
}

struct LinearEnvelopeConfig {
  int order = 4;
  double highpass_hz = 40.0;
  double lowpass_hz = 40.0;
  double window_s = 0.100;
  double hop_s = 0.050;
};

/// Highpass → rectify → lowpass → moving-average downsample. With the
/// defaults a 2000 Hz recording comes out at 20 Hz.
inline std::vector<double> emg_linear_envelope(std::span<const double> signal, double sample_rate_hz,
                                               const LinearEnvelopeConfig& cfg = {}) {
  const auto hp = design_butterworth(FilterKind::highpass, cfg.order, cfg.highpass_hz, sample_rate_hz);
  const auto lp = design_butterworth(FilterKind::lowpass, cfg.order, cfg.lowpass_hz, sample_rate_hz);
  const auto smoothed = filter_forward(lp, rectify(filter_forward(hp, signal)));
  return moving_average_downsample(smoothed, samples_for(cfg.window_s, sample_rate_hz),
                                   samples_for(cfg.hop_s, sample_rate_hz));
}

/// Output rate of emg_linear_envelope for a given input rate.
inline double envelope_rate_hz(double sample_rate_hz, const LinearEnvelopeConfig& cfg = {}) {
  return sample_rate_hz / static_cast<double>(samples_for(cfg.hop_s, sample_rate_hz));
}

} // namespace dollarb::dsp
