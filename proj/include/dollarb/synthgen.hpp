#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "dollarb/core.hpp"
#include "dollarb/dataset_io.hpp"
#include "dollarb/random.hpp"
#include "dollarb/recognizer.hpp"

namespace dollarb::synth {

/// 16 EMG channels at 2000 Hz and 12 six-axis IMUs at 148 Hz.
inline BiosignalLayout default_layout() {
  return BiosignalLayout({{"emg", 16, 2000.0}, {"imu", 72, 148.0}});
}

enum class VariationKind { time, speed, size };

inline Condition condition_for(VariationKind k) {
  switch (k) {
  case VariationKind::time: return Condition::variation_time;
  case VariationKind::speed: return Condition::variation_speed;
  case VariationKind::size: return Condition::variation_size;
  }
  return Condition::variation_time;
}

struct SynthSpec {
  std::uint64_t seed = 0;
  std::size_t classes = 10;
  std::size_t trials_per_class = 10;
  std::size_t participants = 1;
  std::vector<Condition> conditions{Condition::personalized};
  std::size_t variation_trials_per_class = 3;
  BiosignalLayout layout = default_layout();
  std::size_t active_channels_per_class = 20;
  double noise_sigma = 0.6;           // relative to the group's amplitude scale; passes the separability audit on the default corpus
  double jitter_lo = 0.8;             // per (trial, channel) amplitude factor
  double jitter_hi = 1.2;
  double duration_s = 1.0;
  double speed_factor = 2.0;
  double size_factor = 2.0;
  double drift_factor = 1.5;
  double participant_spread = 0.0;    // 0: every participant shares the class prototypes
  bool emg_carrier = false;           // EMG as |prototype| × white carrier instead of the smooth prototype

  void validate() const {
    if (classes < 1 || trials_per_class < 1 || participants < 1)
      throw std::invalid_argument("synth spec: classes, trials and participants must be positive");
    if (active_channels_per_class < 1 || active_channels_per_class > layout.total_channels())
      throw std::invalid_argument("synth spec: active channels must be in [1, total channels]");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
      throw std::invalid_argument("synth spec: noise sigma must be non-negative");
    if (!(jitter_lo > 0.0) || !(jitter_lo <= jitter_hi))
      throw std::invalid_argument("synth spec: amplitude jitter needs 0 < lo <= hi");
    if (!(duration_s > 0.0) || !(speed_factor > 0.0) || !(size_factor > 0.0) || !(drift_factor > 0.0))
      throw std::invalid_argument("synth spec: duration and variation factors must be positive");
    if (!(participant_spread >= 0.0))
      throw std::invalid_argument("synth spec: participant spread must be non-negative");
    if (conditions.empty())
      throw std::invalid_argument("synth spec: at least one condition is required");
    for (std::size_t gi = 0; gi < layout.group_count(); ++gi)
      if (samples_in_group(gi) < 2)
        throw std::invalid_argument("synth spec: duration too short for group '" + layout.group(gi).name + "'");
  }

  std::size_t samples_in_group(std::size_t gi) const {
    return static_cast<std::size_t>(std::llround(duration_s * layout.group(gi).sample_rate_hz)) + 1;
  }
};

inline std::vector<Condition> parse_conditions(const std::vector<std::string>& names) {
  std::vector<Condition> out;
  for (const auto& n : names) {
    auto c = condition_from_string(n);
    if (!c) {
      if (n == "time") c = Condition::variation_time;
      else if (n == "speed") c = Condition::variation_speed;
      else if (n == "size") c = Condition::variation_size;
    }
    if (!c)
      throw std::invalid_argument("unknown condition '" + n + "'");
    out.push_back(*c);
  }
  return out;
}

/// Overrides the fields present in a JSON spec object. Unknown keys are errors.
inline void apply_json(SynthSpec& spec, const nlohmann::json& j) {
  if (!j.is_object())
    throw std::invalid_argument("synth spec must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    const auto& v = *it;
    if (k == "seed") spec.seed = v.get<std::uint64_t>();
    else if (k == "classes") spec.classes = v.get<std::size_t>();
    else if (k == "trials_per_class") spec.trials_per_class = v.get<std::size_t>();
    else if (k == "participants") spec.participants = v.get<std::size_t>();
    else if (k == "conditions") spec.conditions = parse_conditions(v.get<std::vector<std::string>>());
    else if (k == "variation_trials_per_class") spec.variation_trials_per_class = v.get<std::size_t>();
    else if (k == "layout") spec.layout = layout_from_json(v, "synth spec layout");
    else if (k == "active_channels_per_class") spec.active_channels_per_class = v.get<std::size_t>();
    else if (k == "noise_sigma") spec.noise_sigma = v.get<double>();
    else if (k == "amplitude_jitter") {
      const auto lohi = v.get<std::vector<double>>();
      if (lohi.size() != 2)
        throw std::invalid_argument("synth spec: amplitude_jitter must be [lo, hi]");
      spec.jitter_lo = lohi[0];
      spec.jitter_hi = lohi[1];
    }
    else if (k == "duration_s") spec.duration_s = v.get<double>();
    else if (k == "speed_factor") spec.speed_factor = v.get<double>();
    else if (k == "size_factor") spec.size_factor = v.get<double>();
    else if (k == "drift_factor") spec.drift_factor = v.get<double>();
    else if (k == "participant_spread") spec.participant_spread = v.get<double>();
    else if (k == "emg_carrier") spec.emg_carrier = v.get<bool>();
    else throw std::invalid_argument("synth spec: unknown field '" + k + "'");
  }
}

/// EMG-like groups live around 1e-4 native units, everything else around 1.
inline double group_scale(const BiosignalGroup& g) {
  std::string lower = g.name;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lower.find("emg") != std::string::npos ? 1e-4 : 1.0;
}

inline std::string class_label(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "gesture_%02zu", k);
  return buf;
}

inline std::string participant_name(std::size_t p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "p%02zu", p);
  return buf;
}

/// Sum of 2 to 4 Gaussian-windowed sinusoids over normalized time u ∈ [0, 1].
struct Prototype {
  struct Bump {
    double amplitude, centre, width, cycles, phase;
  };
  std::vector<Bump> bumps;

  static Prototype random(Rng& rng) {
    Prototype p;
    const auto count = 2 + rng.below(3);
    for (std::uint64_t i = 0; i < count; ++i) {
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      p.bumps.push_back({sign * rng.uniform(0.5, 1.0), rng.uniform(0.25, 0.75), rng.uniform(0.06, 0.15),
                         rng.uniform(0.5, 3.0), rng.uniform(0.0, 2.0 * std::numbers::pi)});
    }
    return p;
  }

  double operator()(double u) const {
    double v = 0.0;
    for (const auto& b : bumps) {
      const double z = (u - b.centre) / b.width;
      v += b.amplitude * std::exp(-0.5 * z * z) * std::sin(2.0 * std::numbers::pi * b.cycles * u + b.phase);
    }
    return v;
  }
};

/// The per-class structure every trial is drawn around.
class ClassModel {
public:
  ClassModel(const SynthSpec& spec, std::size_t cls) : spec_(&spec), active_(spec.layout.total_channels(), false) {
    auto rng = Rng::stream(spec.seed, {hash_key("class"), cls});
    const auto& layout = spec.layout;
    const std::size_t total = layout.total_channels();
    // Spread the active channels over groups in proportion to their size,
    // at least one per group, so no group is pure noise for a class.
    std::size_t assigned = 0;
    for (std::size_t gi = 0; gi < layout.group_count(); ++gi) {
      const std::size_t cc = layout.group(gi).channel_count;
      std::size_t want = gi + 1 == layout.group_count()
                             ? spec.active_channels_per_class - std::min(assigned, spec.active_channels_per_class)
                             : static_cast<std::size_t>(std::llround(static_cast<double>(spec.active_channels_per_class * cc) /
                                                                     static_cast<double>(total)));
      want = std::clamp<std::size_t>(want, 1, cc);
      assigned += want;
      const std::size_t off = layout.channel_offset(gi);
      for (auto idx : rng.sample_without_replacement(cc, want))
        active_[off + idx] = true;
    }
    for (std::size_t ch = 0; ch < total; ++ch) {
      auto prng = Rng::stream(spec.seed, {hash_key("prototype"), cls, ch});
      prototypes_.push_back(Prototype::random(prng));
    }
  }

  bool active(std::size_t ch) const { return active_.at(ch); }

  /// Prototype value of channel `ch` at normalized time `u` for `participant`.
  double value(std::size_t ch, double u, const Prototype* deviation) const {
    if (!active_[ch])
      return 0.0;
    double v = prototypes_[ch](u);
    if (deviation)
      v += spec_->participant_spread * (*deviation)(u);
    return v;
  }

private:
  const SynthSpec* spec_;
  std::vector<bool> active_;
  std::vector<Prototype> prototypes_;
};

/// Draws one trial: prototype × per-channel amplitude jitter + white noise,
/// sampled at each group's native rate.
inline RawGesture draw_trial(const SynthSpec& spec, const ClassModel& model, std::size_t cls, std::size_t participant,
                             Condition condition, std::size_t trial, std::uint64_t stream) {
  const auto& layout = spec.layout;
  RawGesture g;
  g.label = class_label(cls);
  g.participant = participant_name(participant);
  g.condition = condition;
  g.trial = static_cast<int>(trial);
  g.signals.resize(layout.group_count());
  std::size_t ch = 0;
  for (std::size_t gi = 0; gi < layout.group_count(); ++gi) {
    const auto& grp = layout.group(gi);
    const double scale = group_scale(grp);
    const bool carrier = spec.emg_carrier && scale < 1.0;
    const std::size_t n = spec.samples_in_group(gi);
    for (std::size_t k = 0; k < grp.channel_count; ++k, ++ch) {
      auto rng = Rng::stream(spec.seed, {hash_key("trial"), participant, stream, cls,
                                         trial, ch});
      Prototype deviation;
      const bool deviate = spec.participant_spread > 0.0;
      if (deviate) {
        auto drng = Rng::stream(spec.seed, {hash_key("participant"), participant, cls, ch});
        deviation = Prototype::random(drng);
      }
      const double jitter = rng.uniform(spec.jitter_lo, spec.jitter_hi);
      Channel samples(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double u = static_cast<double>(i) / static_cast<double>(n - 1);
        double v = model.value(ch, u, deviate ? &deviation : nullptr) * jitter;
        if (carrier)
          v = std::abs(v) * rng.normal();
        samples[i] = scale * v + (spec.noise_sigma > 0.0 ? scale * spec.noise_sigma * rng.normal() : 0.0);
      }
      g.signals[gi].push_back(std::move(samples));
    }
  }
  return g;
}

/// Applies one articulation variation to `base`.
///
/// time: gain ramps from 1 to `drift_factor` across the recording, plus
/// fresh noise. speed: every channel is time-compressed by `speed_factor`
/// through linear resampling. size: amplitudes × `size_factor`.
inline RawGesture generate_variation(const RawGesture& base, VariationKind kind, const SynthSpec& spec) {
  RawGesture out = base;
  out.condition = condition_for(kind);
  const auto& layout = spec.layout;
  if (base.signals.size() != layout.group_count())
    throw DataError("generate_variation: gesture does not match the spec layout");
  std::size_t ch = 0;
  for (std::size_t gi = 0; gi < layout.group_count(); ++gi) {
    const double scale = group_scale(layout.group(gi));
    for (auto& samples : out.signals[gi]) {
      const std::size_t n = samples.size();
      switch (kind) {
      case VariationKind::time: {
        auto rng = Rng::stream(spec.seed, {hash_key("variation"), hash_key(base.label), hash_key(base.participant),
                                           static_cast<std::uint64_t>(base.trial), ch});
        for (std::size_t i = 0; i < n; ++i) {
          const double u = static_cast<double>(i) / static_cast<double>(n - 1);
          samples[i] *= 1.0 + (spec.drift_factor - 1.0) * u;
          if (spec.noise_sigma > 0.0)
            samples[i] += scale * spec.noise_sigma * rng.normal();
        }
        break;
      }
      case VariationKind::speed: {
        const auto m = static_cast<std::size_t>(std::llround(static_cast<double>(n - 1) / spec.speed_factor)) + 1;
        samples = resample_channel(samples, std::max<std::size_t>(m, 2));
        break;
      }
      case VariationKind::size:
        for (double& v : samples)
          v *= spec.size_factor;
        break;
      }
      ++ch;
    }
  }
  return out;
}

inline RawGesture draw_trial(const SynthSpec& spec, const ClassModel& model, std::size_t cls, std::size_t participant,
                             Condition condition, std::size_t trial) {
  return draw_trial(spec, model, cls, participant, condition, trial, static_cast<std::uint64_t>(condition));
}

/// Deterministic corpus: participants → conditions → classes → trials.
/// Variation conditions get `variation_trials_per_class` fresh base trials
/// each, with the variation applied.
inline Dataset generate(const SynthSpec& spec) {
  spec.validate();
  Dataset ds{spec.layout, {}};
  std::vector<ClassModel> models;
  for (std::size_t k = 0; k < spec.classes; ++k)
    models.emplace_back(spec, k);
  for (std::size_t p = 0; p < spec.participants; ++p)
    for (auto cond : spec.conditions)
      for (std::size_t k = 0; k < spec.classes; ++k) {
        if (!is_variation(cond)) {
          for (std::size_t t = 0; t < spec.trials_per_class; ++t)
            ds.gestures.push_back(draw_trial(spec, models[k], k, p, cond, t));
          continue;
        }
        const auto kind = cond == Condition::variation_time    ? VariationKind::time
                          : cond == Condition::variation_speed ? VariationKind::speed
                                                               : VariationKind::size;
        for (std::size_t t = 0; t < spec.variation_trials_per_class; ++t) {
          // Variation bases use their own streams, apart from the plain trials.
          auto base = draw_trial(spec, models[k], k, p, Condition::personalized, t,
                                 100 + static_cast<std::uint64_t>(kind));
          ds.gestures.push_back(generate_variation(base, kind, spec));
        }
      }
  return ds;
}

struct SeparabilityAudit {
  double max_within = 0.0;  // largest same-label distance
  double min_between = std::numeric_limits<double>::infinity();
  std::size_t violations = 0; // gestures whose farthest same-label neighbour is not closer than their nearest other-label one
  bool passed() const { return violations == 0; }
};

/// Brute-force pairwise L2 distances between normalized gestures.
inline SeparabilityAudit separability_audit(const Dataset& ds, const RecognizerConfig& cfg = {}) {
  std::vector<ProcessedGesture> norm;
  for (const auto& g : ds.gestures)
    norm.push_back(normalize(g, ds.layout, cfg));
  const std::size_t m = norm.size();
  std::vector<double> dist(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      double s = 0.0;
      auto a = norm[i].data.values();
      auto b = norm[j].data.values();
      for (std::size_t k = 0; k < a.size(); ++k)
        s += (a[k] - b[k]) * (a[k] - b[k]);
      dist[i * m + j] = dist[j * m + i] = std::sqrt(s);
    }
  SeparabilityAudit audit;
  for (std::size_t i = 0; i < m; ++i) {
    double far_same = 0.0, near_other = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j)
        continue;
      if (ds.gestures[i].label == ds.gestures[j].label)
        far_same = std::max(far_same, dist[i * m + j]);
      else
        near_other = std::min(near_other, dist[i * m + j]);
    }
    audit.max_within = std::max(audit.max_within, far_same);
    audit.min_between = std::min(audit.min_between, near_other);
    if (!(far_same < near_other))
      ++audit.violations;
  }
  return audit;
}

/// Rectified-EMG test recording: silence, a noise-carrier burst on a few
/// channels, silence. Optionally an IMU group at its own rate carrying a
/// smooth bump over the same interval.
struct BurstSpec {
  double lead_s = 1.0;
  double burst_s = 2.0;
  double tail_s = 1.0;
  std::size_t emg_channels = 16;
  double emg_rate_hz = 2000.0;
  std::size_t active_channels = 3;
  double amplitude = 1e-4;
  double noise_floor = 0.01; // silence level relative to amplitude
  std::size_t imu_channels = 0;
  double imu_rate_hz = 148.0;
  bool silent = false;       // no burst at all
};

struct PaddedBurst {
  BiosignalLayout layout;
  RawGesture gesture;
  double burst_start_s = 0.0;
  double burst_stop_s = 0.0;
};

inline PaddedBurst make_padded_burst(const BurstSpec& spec, std::uint64_t seed) {
  std::vector<BiosignalGroup> groups{{"emg", spec.emg_channels, spec.emg_rate_hz}};
  if (spec.imu_channels > 0)
    groups.push_back({"imu", spec.imu_channels, spec.imu_rate_hz});
  PaddedBurst out{BiosignalLayout(std::move(groups)), {}, spec.lead_s, spec.lead_s + spec.burst_s};
  const double total = spec.lead_s + spec.burst_s + spec.tail_s;

  auto rng = Rng::stream(seed, {hash_key("burst")});
  const auto active = rng.sample_without_replacement(spec.emg_channels, std::min(spec.active_channels, spec.emg_channels));
  std::vector<double> gain(spec.emg_channels, 0.0);
  for (auto ch : active)
    gain[ch] = rng.uniform(0.4, 1.0);

  out.gesture.label = "burst";
  out.gesture.participant = "p00";
  out.gesture.signals.resize(out.layout.group_count());
  const auto n_emg = static_cast<std::size_t>(std::llround(total * spec.emg_rate_hz));
  for (std::size_t ch = 0; ch < spec.emg_channels; ++ch) {
    auto crng = Rng::stream(seed, {hash_key("burst-emg"), ch});
    Channel x(n_emg);
    for (std::size_t i = 0; i < n_emg; ++i) {
      const double t = static_cast<double>(i) / spec.emg_rate_hz;
      const bool on = !spec.silent && t >= out.burst_start_s && t < out.burst_stop_s;
      x[i] = spec.amplitude * ((on ? gain[ch] : 0.0) + spec.noise_floor) * crng.normal();
    }
    out.gesture.signals[0].push_back(std::move(x));
  }
  if (spec.imu_channels > 0) {
    const auto n_imu = static_cast<std::size_t>(std::llround(total * spec.imu_rate_hz));
    for (std::size_t ch = 0; ch < spec.imu_channels; ++ch) {
      auto crng = Rng::stream(seed, {hash_key("burst-imu"), ch});
      Channel x(n_imu);
      for (std::size_t i = 0; i < n_imu; ++i) {
        const double t = static_cast<double>(i) / spec.imu_rate_hz;
        const bool on = !spec.silent && t >= out.burst_start_s && t < out.burst_stop_s;
        const double u = (t - out.burst_start_s) / spec.burst_s;
        x[i] = (on ? std::sin(std::numbers::pi * u) : 0.0) + 0.01 * crng.normal();
      }
      out.gesture.signals[1].push_back(std::move(x));
    }
  }
  return out;
}

} // namespace dollarb::synth
