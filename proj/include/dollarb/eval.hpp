#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "dollarb/dataset_io.hpp"
#include "dollarb/random.hpp"
#include "dollarb/recognizer.hpp"
#include "dollarb/synthgen.hpp"

namespace dollarb::eval {

enum class Protocol { user_dependent, articulation_variability, user_independent };

inline std::string_view to_string(Protocol p) noexcept {
  switch (p) {
  case Protocol::user_dependent: return "user_dependent";
  case Protocol::articulation_variability: return "articulation_variability";
  case Protocol::user_independent: return "user_independent";
  }
  return "user_dependent";
}

/// Accepts the long names and the short CLI forms ud, var, ui.
inline std::optional<Protocol> protocol_from_string(std::string_view s) noexcept {
  if (s == "ud" || s == "user_dependent")
    return Protocol::user_dependent;
  if (s == "var" || s == "articulation_variability")
    return Protocol::articulation_variability;
  if (s == "ui" || s == "user_independent")
    return Protocol::user_independent;
  return std::nullopt;
}

inline std::vector<std::size_t> default_template_counts(Protocol p) {
  if (p == Protocol::user_independent)
    return {1, 3, 7};
  return {1, 2, 3, 4, 5, 6, 7, 8, 9};
}

struct EvalConfig {
  Protocol protocol = Protocol::user_dependent;
  std::vector<std::size_t> templates_T = default_template_counts(Protocol::user_dependent);
  std::size_t repetitions = 100;
  std::uint64_t seed = 0;
  RecognizerConfig recognizer;
  /// Wall-clock timing makes the report non-reproducible, so it is opt-in.
  bool timing = false;

  void validate() const {
    if (templates_T.empty())
      throw std::invalid_argument("eval config: at least one template count is required");
    for (auto t : templates_T)
      if (t < 1)
        throw std::invalid_argument("eval config: template counts must be >= 1");
    if (repetitions < 1)
      throw std::invalid_argument("eval config: repetitions must be >= 1");
    recognizer.validate();
  }
};

/// One (participant, T, cell) entry. `cell` names the candidate pool:
/// personalized, standardized, or a variation kind (time, speed, size).
struct Cell {
  std::string participant;
  std::size_t T = 0;
  std::string cell;
  std::size_t trials = 0;
  std::size_t errors = 0;

  double error_rate() const {
    return trials == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(trials);
  }
};

struct Timing {
  std::size_t recognitions = 0;
  double mean_ms = 0.0;
  double sd_ms = 0.0;
};

inline Timing summarize_ms(const std::vector<double>& samples) {
  Timing t;
  t.recognitions = samples.size();
  if (samples.empty())
    return t;
  double sum = 0.0;
  for (double s : samples)
    sum += s;
  t.mean_ms = sum / static_cast<double>(samples.size());
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double s : samples)
      ss += (s - t.mean_ms) * (s - t.mean_ms);
    t.sd_ms = std::sqrt(ss / static_cast<double>(samples.size() - 1));
  }
  return t;
}

struct SummaryRow {
  std::size_t T = 0;
  std::string cell;
  double mean_error_rate = 0.0;
  std::size_t participants = 0;
};

struct EvaluationReport {
  EvalConfig config;
  std::vector<Cell> cells;
  std::optional<Timing> timing;

  /// Mean over participants of each (T, cell) error rate, in first-seen order.
  std::vector<SummaryRow> summary() const {
    std::vector<SummaryRow> rows;
    for (const auto& c : cells) {
      auto it = std::find_if(rows.begin(), rows.end(), [&](const SummaryRow& r) { return r.T == c.T && r.cell == c.cell; });
      if (it == rows.end()) {
        rows.push_back({c.T, c.cell, 0.0, 0});
        it = rows.end() - 1;
      }
      it->mean_error_rate += c.error_rate();
      ++it->participants;
    }
    for (auto& r : rows)
      r.mean_error_rate /= static_cast<double>(r.participants);
    return rows;
  }

  /// Mean error rate at `T` for `cell`, or nullopt if absent.
  std::optional<double> mean_error(std::size_t T, std::string_view cell) const {
    for (const auto& r : summary())
      if (r.T == T && r.cell == cell)
        return r.mean_error_rate;
    return std::nullopt;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["protocol"] = std::string(to_string(config.protocol));
    j["seed"] = config.seed;
    j["repetitions"] = config.repetitions;
    j["templates_T"] = config.templates_T;
    j["config"] = {{"n", config.recognizer.n}, {"nPC", config.recognizer.num_components}};
    auto& jc = j["cells"] = nlohmann::ordered_json::array();
    for (const auto& c : cells)
      jc.push_back({{"participant", c.participant},
                    {"T", c.T},
                    {"cell", c.cell},
                    {"trials", c.trials},
                    {"errors", c.errors},
                    {"error_rate", c.error_rate()}});
    auto& js = j["summary"] = nlohmann::ordered_json::array();
    for (const auto& r : summary())
      js.push_back({{"T", r.T}, {"cell", r.cell}, {"mean_error_rate", r.mean_error_rate}, {"participants", r.participants}});
    if (timing)
      j["timing"] = {{"recognitions", timing->recognitions}, {"mean_ms", timing->mean_ms}, {"sd_ms", timing->sd_ms}};
    return j;
  }

  std::string to_csv() const {
    std::ostringstream out;
    out << "protocol,participant,T,cell,trials,errors,error_rate\n";
    for (const auto& c : cells) {
      char rate[32];
      std::snprintf(rate, sizeof rate, "%.17g", c.error_rate());
      out << to_string(config.protocol) << ',' << c.participant << ',' << c.T << ',' << c.cell << ',' << c.trials << ','
          << c.errors << ',' << rate << '\n';
    }
    return out.str();
  }
};

/// Lazily normalizes candidates, enrolls templates, and memoizes
/// candidate-to-template distances for one dataset. A template's latent
/// space depends only on its own gesture, so every (candidate, template)
/// distance is fixed and can be reused across repetitions.
class DistanceCache {
public:
  DistanceCache(const Dataset& ds, const RecognizerConfig& cfg)
      : ds_(&ds), cfg_(cfg), processed_(ds.gestures.size()), templates_(ds.gestures.size()) {
    if (cfg.num_components > ds.layout.total_channels())
      throw std::invalid_argument("evaluate: nPC (" + std::to_string(cfg.num_components) + ") exceeds channel count (" +
                                  std::to_string(ds.layout.total_channels()) + ")");
  }

  const ProcessedGesture& processed(std::size_t i) {
    if (!processed_[i])
      processed_[i] = normalize(ds_->gestures[i], ds_->layout, cfg_);
    return *processed_[i];
  }

  const LatentTemplate& latent(std::size_t i) {
    if (!templates_[i])
      templates_[i] = enroll(processed(i), ds_->gestures[i].label, cfg_.num_components);
    return *templates_[i];
  }

  double distance(std::size_t candidate, std::size_t tmpl) {
    const auto key = static_cast<std::uint64_t>(candidate) * ds_->gestures.size() + tmpl;
    if (auto it = memo_.find(key); it != memo_.end())
      return it->second;
    const double d = template_distance(processed(candidate), latent(tmpl));
    memo_.emplace(key, d);
    return d;
  }

  /// Label of the first template with the smallest distance.
  const std::string& classify(std::size_t candidate, const std::vector<std::size_t>& templates) {
    if (templates.empty())
      throw DataError("recognize: no templates");
    std::size_t best = templates.front();
    double best_d = std::numeric_limits<double>::infinity();
    for (auto t : templates) {
      const double d = distance(candidate, t);
      if (d < best_d) {
        best_d = d;
        best = t;
      }
    }
    return ds_->gestures[best].label;
  }

  /// Full, uncached recognition; used for timing.
  double timed_recognition_ms(std::size_t candidate, const std::vector<std::size_t>& templates) {
    std::vector<LatentTemplate> set;
    for (auto t : templates)
      set.push_back(latent(t));
    const auto t0 = std::chrono::steady_clock::now();
    auto r = recognize(ds_->gestures[candidate], set, ds_->layout, cfg_);
    const auto t1 = std::chrono::steady_clock::now();
    (void)r;
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
  }

private:
  const Dataset* ds_;
  RecognizerConfig cfg_;
  std::vector<std::optional<ProcessedGesture>> processed_;
  std::vector<std::optional<LatentTemplate>> templates_;
  std::unordered_map<std::uint64_t, double> memo_;
};

/// Dataset indices grouped participant → label → condition, all sorted.
using Index = std::map<std::string, std::map<std::string, std::map<Condition, std::vector<std::size_t>>>>;

inline Index build_index(const Dataset& ds) {
  Index idx;
  for (std::size_t i = 0; i < ds.gestures.size(); ++i) {
    const auto& g = ds.gestures[i];
    idx[g.participant][g.label][g.condition].push_back(i);
  }
  return idx;
}

inline const std::vector<std::size_t>& samples_of(const Index& idx, const std::string& participant,
                                                  const std::string& label, Condition c) {
  static const std::vector<std::size_t> empty;
  auto p = idx.find(participant);
  if (p == idx.end())
    return empty;
  auto l = p->second.find(label);
  if (l == p->second.end())
    return empty;
  auto s = l->second.find(c);
  return s == l->second.end() ? empty : s->second;
}

/// One user-dependent draw: T templates and one disjoint candidate per class.
struct UserDependentSplit {
  std::vector<std::size_t> templates;             // ordered by class, then draw order
  std::vector<std::pair<std::string, std::size_t>> candidates; // (label, dataset index)
};

inline UserDependentSplit draw_user_dependent_split(const Index& idx, const std::string& participant,
                                                    std::size_t participant_no, std::size_t T, std::size_t rep,
                                                    std::uint64_t seed) {
  auto rng = Rng::stream(seed, {hash_key("user_dependent"), participant_no, T, rep});
  UserDependentSplit split;
  for (const auto& [label, by_cond] : idx.at(participant)) {
    const auto& pool = samples_of(idx, participant, label, Condition::personalized);
    if (pool.empty())
      continue;
    if (pool.size() < T + 1)
      throw DataError("evaluate: participant '" + participant + "' class '" + label + "' has " +
                      std::to_string(pool.size()) + " personalized samples, T=" + std::to_string(T) + " needs " +
                      std::to_string(T + 1));
    const auto pick = rng.sample_without_replacement(pool.size(), T + 1);
    for (std::size_t k = 0; k < T; ++k)
      split.templates.push_back(pool[pick[k]]);
    split.candidates.emplace_back(label, pool[pick[T]]);
  }
  for (const auto& [label, cand] : split.candidates)
    if (std::find(split.templates.begin(), split.templates.end(), cand) != split.templates.end())
      throw std::logic_error("evaluate: candidate drawn as a template");
  return split;
}

namespace detail {

inline std::vector<std::string> participants_with(const Index& idx, Condition c) {
  std::vector<std::string> out;
  for (const auto& [p, labels] : idx)
    for (const auto& [l, conds] : labels)
      if (conds.count(c)) {
        out.push_back(p);
        break;
      }
  return out;
}

inline std::size_t participant_number(const Index& idx, const std::string& p) {
  return static_cast<std::size_t>(std::distance(idx.begin(), idx.find(p)));
}

struct TimingSink {
  bool enabled = false;
  std::vector<double> ms;
};

inline void time_once(TimingSink& sink, DistanceCache& cache, std::size_t rep, std::size_t candidate,
                      const std::vector<std::size_t>& templates) {
  if (sink.enabled && rep == 0)
    sink.ms.push_back(cache.timed_recognition_ms(candidate, templates));
}

} // namespace detail

inline EvaluationReport run_user_dependent(const Dataset& ds, const EvalConfig& cfg) {
  cfg.validate();
  const auto idx = build_index(ds);
  const auto people = detail::participants_with(idx, Condition::personalized);
  if (people.empty())
    throw DataError("evaluate: no personalized-condition samples");
  DistanceCache cache(ds, cfg.recognizer);
  detail::TimingSink sink{cfg.timing, {}};
  EvaluationReport rep{cfg, {}, std::nullopt};
  for (const auto& p : people) {
    const auto pno = detail::participant_number(idx, p);
    for (auto T : cfg.templates_T) {
      Cell cell{p, T, "personalized", 0, 0};
      for (std::size_t r = 0; r < cfg.repetitions; ++r) {
        const auto split = draw_user_dependent_split(idx, p, pno, T, r, cfg.seed);
        for (const auto& [label, cand] : split.candidates) {
          ++cell.trials;
          if (cache.classify(cand, split.templates) != label)
            ++cell.errors;
          detail::time_once(sink, cache, r, cand, split.templates);
        }
      }
      rep.cells.push_back(std::move(cell));
    }
  }
  if (cfg.timing)
    rep.timing = summarize_ms(sink.ms);
  return rep;
}

inline EvaluationReport run_articulation_variability(const Dataset& ds, const EvalConfig& cfg) {
  cfg.validate();
  const auto idx = build_index(ds);
  const auto people = detail::participants_with(idx, Condition::personalized);
  if (people.empty())
    throw DataError("evaluate: no personalized-condition samples to draw templates from");
  const std::vector<std::pair<Condition, std::string>> kinds{
      {Condition::variation_time, "time"}, {Condition::variation_speed, "speed"}, {Condition::variation_size, "size"}};

  DistanceCache cache(ds, cfg.recognizer);
  detail::TimingSink sink{cfg.timing, {}};
  EvaluationReport rep{cfg, {}, std::nullopt};
  bool any = false;
  for (const auto& p : people) {
    const auto pno = detail::participant_number(idx, p);
    std::vector<std::pair<Condition, std::string>> present;
    for (const auto& k : kinds)
      for (const auto& [label, conds] : idx.at(p))
        if (conds.count(k.first)) {
          present.push_back(k);
          break;
        }
    if (present.empty())
      continue;
    any = true;
    for (auto T : cfg.templates_T) {
      std::vector<Cell> cells;
      for (const auto& k : present)
        cells.push_back({p, T, k.second, 0, 0});
      for (std::size_t r = 0; r < cfg.repetitions; ++r) {
        // Same stream as the user-dependent protocol, so both see the same templates.
        const auto split = draw_user_dependent_split(idx, p, pno, T, r, cfg.seed);
        auto rng = Rng::stream(cfg.seed, {hash_key("variation"), pno, T, r});
        for (std::size_t ki = 0; ki < present.size(); ++ki)
          for (const auto& [label, conds] : idx.at(p)) {
            const auto& pool = samples_of(idx, p, label, present[ki].first);
            if (pool.empty())
              continue;
            const auto cand = pool[static_cast<std::size_t>(rng.below(pool.size()))];
            ++cells[ki].trials;
            if (cache.classify(cand, split.templates) != label)
              ++cells[ki].errors;
            detail::time_once(sink, cache, r, cand, split.templates);
          }
      }
      for (auto& c : cells)
        rep.cells.push_back(std::move(c));
    }
  }
  if (!any)
    throw DataError("evaluate: missing variation samples (time, speed or size condition)");
  if (cfg.timing)
    rep.timing = summarize_ms(sink.ms);
  return rep;
}

inline EvaluationReport run_user_independent(const Dataset& ds, const EvalConfig& cfg) {
  cfg.validate();
  const auto idx = build_index(ds);
  const auto people = detail::participants_with(idx, Condition::standardized);
  if (people.size() < 2)
    throw DataError("evaluate: leave-one-out needs at least 2 participants with standardized samples");
  for (const auto& p : people)
    for (const auto& [label, conds] : idx.at(p)) {
      const auto& pool = samples_of(idx, p, label, Condition::standardized);
      for (auto T : cfg.templates_T)
        if (!pool.empty() && pool.size() < T)
          throw DataError("evaluate: participant '" + p + "' class '" + label + "' has " + std::to_string(pool.size()) +
                          " standardized samples, T=" + std::to_string(T) + " needs " + std::to_string(T));
    }

  DistanceCache cache(ds, cfg.recognizer);
  detail::TimingSink sink{cfg.timing, {}};
  EvaluationReport rep{cfg, {}, std::nullopt};
  for (const auto& held : people) {
    const auto hno = detail::participant_number(idx, held);
    for (auto T : cfg.templates_T) {
      Cell cell{held, T, "standardized", 0, 0};
      for (std::size_t r = 0; r < cfg.repetitions; ++r) {
        auto rng = Rng::stream(cfg.seed, {hash_key("user_independent"), hno, T, r});
        std::vector<std::size_t> templates;
        for (const auto& q : people) {
          if (q == held)
            continue;
          for (const auto& [label, conds] : idx.at(q)) {
            const auto& pool = samples_of(idx, q, label, Condition::standardized);
            if (pool.empty())
              continue;
            for (auto k : rng.sample_without_replacement(pool.size(), T))
              templates.push_back(pool[k]);
          }
        }
        for (const auto& [label, conds] : idx.at(held)) {
          const auto& pool = samples_of(idx, held, label, Condition::standardized);
          if (pool.empty())
            continue;
          const auto cand = pool[static_cast<std::size_t>(rng.below(pool.size()))];
          ++cell.trials;
          if (cache.classify(cand, templates) != label)
            ++cell.errors;
          detail::time_once(sink, cache, r, cand, templates);
        }
      }
      rep.cells.push_back(std::move(cell));
    }
  }
  if (cfg.timing)
    rep.timing = summarize_ms(sink.ms);
  return rep;
}

inline EvaluationReport run(const Dataset& ds, const EvalConfig& cfg) {
  switch (cfg.protocol) {
  case Protocol::user_dependent: return run_user_dependent(ds, cfg);
  case Protocol::articulation_variability: return run_articulation_variability(ds, cfg);
  case Protocol::user_independent: return run_user_independent(ds, cfg);
  }
  return run_user_dependent(ds, cfg);
}

struct BenchResult {
  std::size_t template_count = 0;
  std::size_t iterations = 0;
  std::size_t warmup = 0;
  double cold_ms = 0.0; // first call, before any warmup
  double mean_ms = 0.0; // warmed
  double sd_ms = 0.0;

  nlohmann::ordered_json to_json() const {
    return {{"templates", template_count}, {"iterations", iterations}, {"warmup", warmup},
            {"cold_ms", cold_ms},          {"mean_ms", mean_ms},       {"sd_ms", sd_ms}};
  }
};

/// Times recognize() against `template_count` pre-enrolled synthetic
/// templates. Each timed call includes resampling and normalizing the
/// candidate plus every per-template projection; enrollment and data
/// generation are excluded.
inline BenchResult bench_recognition(const BiosignalLayout& layout, const RecognizerConfig& cfg,
                                     std::size_t template_count, std::size_t iterations = 100,
                                     std::size_t warmup = 5, std::uint64_t seed = 0) {
  if (template_count < 1)
    throw std::invalid_argument("bench: need at least one template");
  if (iterations < 1)
    throw std::invalid_argument("bench: need at least one iteration");
  synth::SynthSpec spec;
  spec.seed = seed;
  spec.layout = layout;
  spec.classes = template_count;
  spec.active_channels_per_class = std::min(spec.active_channels_per_class, layout.total_channels());
  spec.trials_per_class = 1 + (iterations + template_count - 1) / template_count;
  const auto data = synth::generate(spec);

  std::vector<LatentTemplate> templates;
  std::vector<const RawGesture*> candidates;
  for (const auto& g : data.gestures) {
    if (g.trial == 0)
      templates.push_back(enroll(g, layout, cfg));
    else
      candidates.push_back(&g);
  }

  auto once = [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    auto r = recognize(*candidates[i % candidates.size()], templates, layout, cfg);
    const auto t1 = std::chrono::steady_clock::now();
    if (r.all_distances.size() != templates.size())
      throw std::logic_error("bench: unexpected result size");
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
  };

  BenchResult out;
  out.template_count = template_count;
  out.iterations = iterations;
  out.warmup = warmup;
  out.cold_ms = once(0);
  for (std::size_t i = 0; i < warmup; ++i)
    once(i);
  std::vector<double> ms;
  for (std::size_t i = 0; i < iterations; ++i)
    ms.push_back(once(i));
  const auto t = summarize_ms(ms);
  out.mean_ms = t.mean_ms;
  out.sd_ms = t.sd_ms;
  return out;
}

} // namespace dollarb::eval
