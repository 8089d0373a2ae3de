#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dollarb/core.hpp"
#include "dollarb/dsp.hpp"

namespace dollarb::segmentation {

struct SegmentBounds {
  double start_s = 0.0;
  double stop_s = 0.0;
};

struct SegmentationConfig {
  std::string emg_group = "emg";
  double rms_window_s = 0.100;
  double rms_hop_s = 0.050;
  std::size_t top_amplitude = 3;
  std::size_t top_variance = 3;
  double variance_floor = 0.1; // relative to the largest channel variance
  double aggressive_threshold = 0.3;
  double conservative_threshold = 0.15;
  double edge_threshold = 0.3;
  /// Starts in the last `wrong_area` of the trace and stops in the first
  /// `wrong_area` are discarded.
  double wrong_area = 1.0 / 3.0;
  /// A channel only proposes cutoffs if its RMS peak is at least this
  /// multiple of its 10th-percentile RMS.
  double activity_ratio = 3.0;
};

/// Optional start/stop index pair on an RMS trace.
struct Cutoff {
  std::optional<std::size_t> start;
  std::optional<std::size_t> stop;
};

namespace detail {

inline std::size_t argmax(std::span<const double> x) {
  return static_cast<std::size_t>(std::max_element(x.begin(), x.end()) - x.begin());
}

inline std::size_t argmin(std::span<const double> x) {
  return static_cast<std::size_t>(std::min_element(x.begin(), x.end()) - x.begin());
}

inline double level(std::span<const double> c, double fraction) {
  const auto [lo, hi] = std::minmax_element(c.begin(), c.end());
  return fraction * (*hi - *lo) + *lo;
}

inline double population_variance(std::span<const double> x) {
  if (x.empty())
    return 0.0;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x)
    s += (v - mean) * (v - mean);
  return s / static_cast<double>(x.size());
}

/// Indices of the `k` largest values, ties to the lowest index.
inline std::vector<std::size_t> top_k(std::span<const double> values, std::size_t k) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

} // namespace detail

/// Range threshold at `fraction` of (max − min) above the minimum. The start
/// is the last sample below the threshold before the first sample at or
/// above it; the stop is the first sample below it after the last one at or
/// above it. Either is absent when the trace touches that end above
/// threshold, and both are absent for a flat trace.
inline Cutoff threshold_cutoffs(std::span<const double> c, double fraction) {
  Cutoff out;
  if (c.empty())
    return out;
  const auto [lo, hi] = std::minmax_element(c.begin(), c.end());
  if (*hi == *lo)
    return out;
  const double thr = detail::level(c, fraction);
  std::size_t first = c.size(), last = 0;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c[i] >= thr) {
      first = std::min(first, i);
      last = i;
    }
  if (first > 0)
    out.start = first - 1;
  if (last + 1 < c.size())
    out.stop = last + 1;
  return out;
}

/// Recording that begins (ends) above `thr` starts (stops) at the boundary.
inline Cutoff edge_cutoffs(std::span<const double> c, double thr) {
  Cutoff out;
  if (c.empty())
    return out;
  if (c.front() > thr)
    out.start = 0;
  if (c.back() > thr)
    out.stop = c.size() - 1;
  return out;
}

struct CutoffCandidates {
  std::vector<std::size_t> starts;
  std::vector<std::size_t> stops;
};

/// Every heuristic start/stop index for one RMS trace.
///
/// Largest rise and largest fall over the whole trace; the aggressive and
/// conservative range thresholds; the edge check; and the largest first- and
/// second-difference changes restricted to the lead-in before the threshold
/// start or the tail after the threshold stop. A second-difference index i
/// refers to the sample i+1 it is centred on. Stop-side second-difference
/// candidates look for the convex corner at the foot of the fall, mirroring
/// the start side.
inline CutoffCandidates candidate_cutoffs(std::span<const double> c, const SegmentationConfig& cfg = {}) {
  const std::size_t len = c.size();
  if (len < 4)
    throw std::invalid_argument("candidate_cutoffs: need at least 4 samples");
  const auto d1 = dsp::diff(c);
  const auto d2 = dsp::diff(d1);
  const std::span<const double> dc(d1), d2c(d2);

  CutoffCandidates out;
  out.starts.push_back(detail::argmax(dc));
  out.stops.push_back(detail::argmin(dc) + 1);

  const auto aggressive = threshold_cutoffs(c, cfg.aggressive_threshold);
  const auto conservative = threshold_cutoffs(c, cfg.conservative_threshold);
  const auto edge = edge_cutoffs(c, detail::level(c, cfg.edge_threshold));

  for (const auto* cut : {&aggressive, &conservative, &edge}) {
    if (cut->start)
      out.starts.push_back(*cut->start);
    if (cut->stop)
      out.stops.push_back(*cut->stop);
  }

  auto rise_before = [&](std::span<const double> d, std::size_t below, std::size_t centre) {
    const std::size_t end = std::min(below + 1, d.size());
    return detail::argmax(d.first(end)) + centre;
  };
  auto fall_after = [&](std::size_t below) {
    const std::size_t from = below - 1; // below >= 1 by construction
    return from + detail::argmin(dc.subspan(from)) + 1;
  };
  auto foot_after = [&](std::size_t below) {
    const std::size_t from = std::min(below >= 2 ? below - 2 : 0, d2c.size() - 1);
    return from + detail::argmax(d2c.subspan(from)) + 1;
  };

  if (aggressive.start) {
    const std::size_t below = *aggressive.start;
    out.starts.push_back(rise_before(dc, below, 0));
    out.starts.push_back(rise_before(dc, below, 0));
    out.starts.push_back(rise_before(d2c, below, 1));
  }
  if (aggressive.stop) {
    out.stops.push_back(fall_after(*aggressive.stop));
    out.stops.push_back(foot_after(*aggressive.stop));
  }
  if (conservative.stop)
    out.stops.push_back(fall_after(*conservative.stop));
  return out;
}

/// Drops starts in the final and stops in the first `cfg.wrong_area` of a
/// trace of length `len`.
inline void discard_wrong_area(CutoffCandidates& c, std::size_t len, const SegmentationConfig& cfg = {}) {
  const double last = static_cast<double>(len - 1);
  std::erase_if(c.starts, [&](std::size_t i) { return static_cast<double>(i) > (1.0 - cfg.wrong_area) * last; });
  std::erase_if(c.stops, [&](std::size_t i) { return static_cast<double>(i) < cfg.wrong_area * last; });
}

/// Union of the top channels by participant-wide amplitude and by variance
/// of `traces`, minus channels whose variance is below the floor. Sorted.
inline std::vector<std::size_t> select_relevant_channels(std::span<const std::vector<double>> traces,
                                                         std::span<const double> participant_max_amplitudes,
                                                         const SegmentationConfig& cfg = {}) {
  if (traces.empty())
    throw std::invalid_argument("select_relevant_channels: no channels");
  if (participant_max_amplitudes.size() != traces.size())
    throw std::invalid_argument("select_relevant_channels: one max amplitude per channel is required");
  std::vector<double> var;
  var.reserve(traces.size());
  for (const auto& t : traces)
    var.push_back(detail::population_variance(t));
  const double max_var = *std::max_element(var.begin(), var.end());

  std::vector<std::size_t> chosen = detail::top_k(participant_max_amplitudes, cfg.top_amplitude);
  for (auto i : detail::top_k(var, cfg.top_variance))
    chosen.push_back(i);
  std::sort(chosen.begin(), chosen.end());
  chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
  std::erase_if(chosen, [&](std::size_t i) { return var[i] < cfg.variance_floor * max_var; });
  return chosen;
}

inline bool is_active(std::span<const double> trace, const SegmentationConfig& cfg = {}) {
  if (trace.empty())
    return false;
  std::vector<double> sorted(trace.begin(), trace.end());
  std::sort(sorted.begin(), sorted.end());
  const double peak = sorted.back();
  const double floor = sorted[static_cast<std::size_t>(0.1 * static_cast<double>(sorted.size() - 1))];
  return peak > 0.0 && peak >= cfg.activity_ratio * floor;
}

/// Per-channel maximum of the rectified EMG of one gesture.
inline std::vector<double> channel_max_amplitudes(const RawGesture& g, std::size_t emg_index) {
  std::vector<double> out;
  for (const auto& ch : g.signals.at(emg_index)) {
    double m = 0.0;
    for (double v : ch)
      m = std::max(m, std::abs(v));
    out.push_back(m);
  }
  return out;
}

inline std::size_t emg_group_index(const BiosignalLayout& layout, const SegmentationConfig& cfg) {
  const auto idx = layout.find(cfg.emg_group);
  if (!idx)
    throw DataError("segment: layout has no biosignal group named '" + cfg.emg_group + "'");
  return *idx;
}

/// Rectified per-channel EMG maxima over all of each participant's gestures.
inline std::map<std::string, std::vector<double>> participant_max_amplitudes(
    std::span<const RawGesture> gestures, const BiosignalLayout& layout, const SegmentationConfig& cfg = {}) {
  const std::size_t emg = emg_group_index(layout, cfg);
  std::map<std::string, std::vector<double>> out;
  for (const auto& g : gestures) {
    const auto m = channel_max_amplitudes(g, emg);
    auto [it, inserted] = out.try_emplace(g.participant, m);
    if (!inserted)
      for (std::size_t i = 0; i < m.size(); ++i)
        it->second[i] = std::max(it->second[i], m[i]);
  }
  return out;
}

struct SegmentReport {
  SegmentBounds bounds;
  std::vector<std::size_t> relevant_channels;
  CutoffCandidates candidates; // pooled over relevant active channels, after wrong-area filtering
  bool full_recording = false; // no usable candidates, bounds span everything
};

inline double duration_s(const RawGesture& g, std::size_t group, double rate) {
  return static_cast<double>(g.sample_count(group)) / rate;
}

/// Finds gesture bounds from the rectified raw EMG and reports the
/// intermediate choices. The earliest start and latest stop over all
/// candidates win.
inline SegmentReport segment_report(const RawGesture& g, const BiosignalLayout& layout,
                                    std::span<const double> participant_max_amps, const SegmentationConfig& cfg = {}) {
  const std::size_t emg = emg_group_index(layout, cfg);
  const double rate = layout.group(emg).sample_rate_hz;
  const double total = duration_s(g, emg, rate);
  SegmentReport rep;
  rep.bounds = {0.0, total};
  rep.full_recording = true;

  const std::size_t window = std::max<std::size_t>(1, dsp::samples_for(cfg.rms_window_s, rate));
  const std::size_t hop = std::clamp<std::size_t>(dsp::samples_for(cfg.rms_hop_s, rate), 1, window);
  const std::size_t n = g.sample_count(emg);
  if (n < window || (n - window) / hop + 1 < 4)
    return rep;

  std::vector<std::vector<double>> traces;
  for (const auto& ch : g.signals[emg])
    traces.push_back(dsp::rms_windows(dsp::rectify(ch), window, hop));
  rep.relevant_channels = select_relevant_channels(traces, participant_max_amps, cfg);

  for (auto ch : rep.relevant_channels) {
    if (!is_active(traces[ch], cfg))
      continue;
    auto cand = candidate_cutoffs(traces[ch], cfg);
    discard_wrong_area(cand, traces[ch].size(), cfg);
    rep.candidates.starts.insert(rep.candidates.starts.end(), cand.starts.begin(), cand.starts.end());
    rep.candidates.stops.insert(rep.candidates.stops.end(), cand.stops.begin(), cand.stops.end());
  }

  SegmentBounds b{0.0, total};
  if (!rep.candidates.starts.empty()) {
    const auto i = *std::min_element(rep.candidates.starts.begin(), rep.candidates.starts.end());
    b.start_s = static_cast<double>(i * hop) / rate;
  }
  if (!rep.candidates.stops.empty()) {
    const auto j = *std::max_element(rep.candidates.stops.begin(), rep.candidates.stops.end());
    b.stop_s = std::min(total, static_cast<double>(j * hop + window) / rate);
  }
  if (b.start_s < b.stop_s && !(rep.candidates.starts.empty() && rep.candidates.stops.empty())) {
    rep.bounds = b;
    rep.full_recording = false;
  }
  return rep;
}

inline SegmentBounds segment(const RawGesture& g, const BiosignalLayout& layout,
                             std::span<const double> participant_max_amps, const SegmentationConfig& cfg = {}) {
  return segment_report(g, layout, participant_max_amps, cfg).bounds;
}

/// Half-open sample range [first, last) of a group covering `b`.
inline std::pair<std::size_t, std::size_t> sample_range(const SegmentBounds& b, double rate, std::size_t n) {
  constexpr double eps = 1e-9;
  auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(b.start_s * rate - eps)));
  auto last = static_cast<std::size_t>(std::max(0.0, std::ceil(b.stop_s * rate - eps)));
  last = std::min(last, n);
  first = std::min(first, n);
  if (last < first + 2) {
    last = std::min(n, first + 2);
    first = last >= 2 ? last - 2 : 0;
  }
  return {first, last};
}

/// Keeps only the samples inside `b`, for every group at its own rate.
inline RawGesture crop(const RawGesture& g, const BiosignalLayout& layout, const SegmentBounds& b) {
  RawGesture out = g;
  for (std::size_t gi = 0; gi < layout.group_count(); ++gi) {
    const auto [first, last] = sample_range(b, layout.group(gi).sample_rate_hz, g.sample_count(gi));
    for (auto& ch : out.signals[gi])
      ch = Channel(ch.begin() + static_cast<std::ptrdiff_t>(first), ch.begin() + static_cast<std::ptrdiff_t>(last));
  }
  return out;
}

} // namespace dollarb::segmentation
