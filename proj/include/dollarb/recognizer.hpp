#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dollarb/core.hpp"
#include "dollarb/linalg.hpp"

namespace dollarb {

/// Piecewise-linear resampling of a channel onto `n` evenly spaced points
/// spanning the same interval. The first and last samples are kept exactly.
inline std::vector<double> resample_channel(std::span<const double> points, std::size_t n) {
  const std::size_t N = points.size();
  if (N < 2)
    throw std::invalid_argument("resample_channel: need at least 2 input points");
  if (n < 2)
    throw std::invalid_argument("resample_channel: need at least 2 output points");
  std::vector<double> out(n);
  const double span = static_cast<double>(N - 1);
  const double steps = static_cast<double>(n - 1);
  out.front() = points.front();
  out.back() = points.back();
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const double t = static_cast<double>(j) * span / steps;
    auto i = static_cast<std::size_t>(std::floor(t));
    if (i >= N - 1)
      i = N - 2;
    const double frac = t - static_cast<double>(i);
    out[j] = frac == 0.0 ? points[i] : points[i] + frac * (points[i + 1] - points[i]);
  }
  return out;
}

/// Resamples every channel to `cfg.n` points, demeans each channel, then
/// scales each biosignal group so the population standard deviation over
/// all of its samples is 1. A group with no spread is left at zero.
inline ProcessedGesture normalize(const RawGesture& g, const BiosignalLayout& layout,
                                  const RecognizerConfig& cfg) {
  cfg.validate();
  if (g.signals.size() != layout.group_count())
    throw DataError("normalize: gesture does not match the layout's group count");
  const std::size_t n = cfg.n;
  ProcessedGesture out{Matrix(layout.total_channels(), n)};

  std::size_t row = 0;
  for (std::size_t gi = 0; gi < layout.group_count(); ++gi) {
    const auto& chans = g.signals[gi];
    if (chans.size() != layout.group(gi).channel_count)
      throw DataError("normalize: channel-count mismatch in group '" + layout.group(gi).name + "'");
    const std::size_t first = row;
    double peak = 0.0;
    for (const auto& ch : chans) {
      auto resampled = resample_channel(ch, n);
      double mean = 0.0;
      for (double v : resampled) {
        mean += v;
        peak = std::max(peak, std::abs(v));
      }
      mean /= static_cast<double>(n);
      auto dst = out.data.row(row++);
      for (std::size_t t = 0; t < n; ++t)
        dst[t] = resampled[t] - mean;
    }

    // Demeaned samples have zero joint mean, so the population std is the
    // root of the mean square.
    double sq = 0.0;
    for (std::size_t r = first; r < row; ++r)
      for (double v : out.data.row(r))
        sq += v * v;
    const double sigma = std::sqrt(sq / static_cast<double>((row - first) * n));
    const bool flat = sigma == 0.0 || sigma <= 1e-12 * peak;
    for (std::size_t r = first; r < row; ++r)
      for (double& v : out.data.row(r))
        v = flat ? 0.0 : v / sigma;
  }
  return out;
}

/// (1/(n−1))·D·Dᵀ for a c×n matrix.
inline Matrix covariance(const Matrix& d) {
  const std::size_t c = d.rows();
  const std::size_t n = d.cols();
  if (n < 2)
    throw std::invalid_argument("covariance: need at least 2 columns");
  Matrix cov(c, c);
  const double scale = 1.0 / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < c; ++i) {
    auto ri = d.row(i);
    for (std::size_t j = i; j < c; ++j) {
      auto rj = d.row(j);
      double s = 0.0;
      for (std::size_t t = 0; t < n; ++t)
        s += ri[t] * rj[t];
      cov(i, j) = cov(j, i) = s * scale;
    }
  }
  return cov;
}

/// flatten(Dᵀ·U): all components of time 0, then time 1, and so on.
inline std::vector<double> project(const ProcessedGesture& g, const Matrix& components) {
  const std::size_t c = g.channels();
  const std::size_t n = g.n();
  const std::size_t k = components.cols();
  if (components.rows() != c)
    throw DataError("project: components have " + std::to_string(components.rows()) +
                    " rows, gesture has " + std::to_string(c) + " channels");
  std::vector<double> out(n * k, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double* dst = out.data() + t * k;
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double x = g.data(ch, t);
      if (x == 0.0)
        continue;
      auto u = components.row(ch);
      for (std::size_t j = 0; j < k; ++j)
        dst[j] += x * u[j];
    }
  }
  return out;
}

struct PcaResult {
  Matrix components;               // c × nPC
  std::vector<double> latent_points;
  std::vector<double> eigenvalues; // all c, descending
};

inline PcaResult compute_pca(const ProcessedGesture& g, std::size_t num_components) {
  const std::size_t c = g.channels();
  if (num_components < 1)
    throw std::invalid_argument("compute_pca: nPC must be at least 1");
  if (num_components > c)
    throw std::invalid_argument("compute_pca: nPC (" + std::to_string(num_components) +
                                ") exceeds channel count (" + std::to_string(c) + ")");
  auto eig = jacobi_eigen(covariance(g.data));
  if (!eig.converged)
    throw std::runtime_error("compute_pca: Jacobi iteration did not converge");
  sort_descending(eig);
  fix_signs(eig.vectors);

  PcaResult out;
  out.components = Matrix(c, num_components);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < num_components; ++j)
      out.components(i, j) = eig.vectors(i, j);
  out.latent_points = project(g, out.components);
  out.eigenvalues = std::move(eig.values);
  return out;
}

inline LatentTemplate enroll(const ProcessedGesture& processed, std::string label, std::size_t num_components) {
  auto pca = compute_pca(processed, num_components);
  return {std::move(label), std::move(pca.components), std::move(pca.latent_points)};
}

inline LatentTemplate enroll(const RawGesture& g, const BiosignalLayout& layout, const RecognizerConfig& cfg) {
  cfg.validate();
  if (cfg.num_components > layout.total_channels())
    throw std::invalid_argument("enroll: nPC (" + std::to_string(cfg.num_components) +
                                ") exceeds channel count (" + std::to_string(layout.total_channels()) + ")");
  return enroll(normalize(g, layout, cfg), g.label, cfg.num_components);
}

/// L1 distance between equally long point arrays.
inline double path_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("path_distance: length mismatch (" + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()) + ")");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    d += std::abs(a[i] - b[i]);
  return d;
}

/// Distance from an already normalized candidate to one template, in that
/// template's latent space.
inline double template_distance(const ProcessedGesture& candidate, const LatentTemplate& t) {
  return path_distance(project(candidate, t.components), t.points);
}

/// Scores a normalized candidate against every template; the first template
/// with the smallest distance wins.
inline RecognitionResult recognize(const ProcessedGesture& candidate, std::span<const LatentTemplate> templates) {
  if (templates.empty())
    throw DataError("recognize: no templates");
  const std::size_t k = templates.front().num_components();
  for (std::size_t i = 0; i < templates.size(); ++i) {
    const auto& t = templates[i];
    if (t.num_components() != k)
      throw DataError("recognize: template " + std::to_string(i) + " has a different nPC");
    if (t.components.rows() != candidate.channels())
      throw DataError("recognize: template " + std::to_string(i) + " was built for " +
                      std::to_string(t.components.rows()) + " channels, candidate has " +
                      std::to_string(candidate.channels()));
    if (t.points.size() != candidate.n() * k)
      throw DataError("recognize: template " + std::to_string(i) + " was built with a different n");
  }

  RecognitionResult r;
  r.all_distances.reserve(templates.size());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < templates.size(); ++i) {
    const double d = template_distance(candidate, templates[i]);
    r.all_distances.push_back(d);
    if (d < best) {
      best = d;
      r.matched_template_index = i;
    }
  }
  r.distance = r.all_distances[r.matched_template_index];
  r.matched_label = templates[r.matched_template_index].label;
  return r;
}

inline RecognitionResult recognize(const RawGesture& candidate, std::span<const LatentTemplate> templates,
                                   const BiosignalLayout& layout, const RecognizerConfig& cfg) {
  cfg.validate();
  if (templates.empty())
    throw DataError("recognize: no templates");
  for (std::size_t i = 0; i < templates.size(); ++i)
    if (templates[i].num_components() != cfg.num_components || templates[i].n() != cfg.n)
      throw DataError("recognize: template " + std::to_string(i) + " does not match n=" +
                      std::to_string(cfg.n) + ", nPC=" + std::to_string(cfg.num_components));
  return recognize(normalize(candidate, layout, cfg), templates);
}

} // namespace dollarb
