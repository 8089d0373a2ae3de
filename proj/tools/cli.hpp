#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dollarb/dollarb.hpp"
#include "json_config.hpp"

namespace dollarb::cli {

enum ExitCode : int { ok = 0, usage = 1, data = 2 };

/// Bad flag values discovered after CLI11 has parsed them.
class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// "9", "1,3,7" or "1..9".
inline std::vector<std::size_t> parse_counts(const std::string& text) {
  auto number = [&](std::string_view s) {
    std::size_t v = 0;
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || p != end || v == 0)
      throw UsageError("invalid count list '" + text + "': expected positive integers like 9, 1,3,7 or 1..9");
    return v;
  };
  std::vector<std::size_t> out;
  if (auto dots = text.find(".."); dots != std::string::npos) {
    const auto lo = number(std::string_view(text).substr(0, dots));
    const auto hi = number(std::string_view(text).substr(dots + 2));
    if (lo > hi)
      throw UsageError("invalid range '" + text + "'");
    for (auto v = lo; v <= hi; ++v)
      out.push_back(v);
    return out;
  }
  std::string_view rest(text);
  while (true) {
    const auto comma = rest.find(',');
    out.push_back(number(rest.substr(0, comma)));
    if (comma == std::string_view::npos)
      break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out)
    throw IoError(path.string() + ": cannot write");
  out << text;
  if (!out)
    throw IoError(path.string() + ": write failed");
}

inline BiosignalLayout read_layout(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw DataError(path.string() + ": missing layout file");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": invalid JSON (" + e.what() + ")");
  }
  return layout_from_json(j, path.string());
}

inline nlohmann::ordered_json result_json(const RecognitionResult& r) {
  return {{"matched_label", r.matched_label},
          {"matched_template_index", r.matched_template_index},
          {"distance", r.distance},
          {"all_distances", r.all_distances}};
}

/// Command-line front end. Machine-readable output goes to `out`,
/// diagnostics to `err`. Returns 0 on success, 1 on usage errors and 2 on
/// data or validation errors.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Biosignal gesture recognition: synthesize, segment, preprocess, enroll, recognize, evaluate, bench",
               "dollarb"};
  app.require_subcommand(1);
  app.get_formatter()->column_width(34);

  std::string config_file; // consumed by expand_config, listed for --help
  auto add_sub = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_file, "JSON file of flag values; explicit flags take precedence");
    return sub;
  };

  // synth
  synth::SynthSpec spec;
  std::uint64_t synth_seed = 0;
  std::string synth_out, synth_layout, synth_spec_file, synth_conditions;
  bool synth_audit = false;
  auto* synth_cmd = add_sub("synth", "Write a deterministic synthetic gesture dataset");
  synth_cmd->add_option("--seed", synth_seed, "Random seed")->required();
  synth_cmd->add_option("--out", synth_out, "Output dataset directory")->required();
  synth_cmd->add_option("--spec", synth_spec_file, "JSON generator spec; flags override its fields");
  synth_cmd->add_option("--layout", synth_layout, "layout.json to generate for (default: 16 EMG @ 2000 Hz + 72 IMU @ 148 Hz)");
  auto* o_classes = synth_cmd->add_option("--classes", spec.classes, "Gesture classes");
  auto* o_trials = synth_cmd->add_option("--trials", spec.trials_per_class, "Trials per class and condition");
  auto* o_participants = synth_cmd->add_option("--participants", spec.participants, "Participants");
  auto* o_conditions = synth_cmd->add_option("--conditions", synth_conditions,
                                             "Comma list of personalized, standardized, time, speed, size");
  auto* o_vtrials = synth_cmd->add_option("--variation-trials", spec.variation_trials_per_class, "Trials per class per variation");
  auto* o_active = synth_cmd->add_option("--active", spec.active_channels_per_class, "Active channels per class");
  auto* o_noise = synth_cmd->add_option("--noise", spec.noise_sigma, "White-noise sigma relative to group amplitude");
  auto* o_jlo = synth_cmd->add_option("--jitter-lo", spec.jitter_lo, "Lower amplitude jitter factor");
  auto* o_jhi = synth_cmd->add_option("--jitter-hi", spec.jitter_hi, "Upper amplitude jitter factor");
  auto* o_duration = synth_cmd->add_option("--duration", spec.duration_s, "Recording length in seconds");
  auto* o_speed = synth_cmd->add_option("--speed-factor", spec.speed_factor, "Time compression of speed variations");
  auto* o_size = synth_cmd->add_option("--size-factor", spec.size_factor, "Amplitude factor of size variations");
  auto* o_drift = synth_cmd->add_option("--drift-factor", spec.drift_factor, "Final gain of time-drift variations");
  auto* o_spread = synth_cmd->add_option("--participant-spread", spec.participant_spread, "Per-participant prototype deviation");
  auto* o_carrier = synth_cmd->add_flag("--emg-carrier", spec.emg_carrier, "Modulate EMG onto a white carrier");
  synth_cmd->add_flag("--audit", synth_audit, "Run the separability audit and include it in the summary");

  // segment
  segmentation::SegmentationConfig seg_cfg;
  std::string seg_dataset, seg_out, seg_report;
  auto* seg_cmd = add_sub("segment", "Crop every gesture to its detected EMG activity");
  seg_cmd->add_option("--dataset", seg_dataset, "Input dataset directory")->required();
  seg_cmd->add_option("--out", seg_out, "Output dataset directory")->required();
  seg_cmd->add_option("--report", seg_report, "Bounds report path (default: standard output)");
  seg_cmd->add_option("--emg-group", seg_cfg.emg_group, "Biosignal group holding raw EMG")->capture_default_str();
  seg_cmd->add_option("--rms-window", seg_cfg.rms_window_s, "RMS window in seconds")->capture_default_str();
  seg_cmd->add_option("--rms-hop", seg_cfg.rms_hop_s, "RMS hop in seconds")->capture_default_str();

  // preprocess
  std::string pre_dataset, pre_out, pre_group = "emg";
  auto* pre_cmd = add_sub("preprocess", "Replace raw EMG with its linear envelope");
  pre_cmd->add_option("--dataset", pre_dataset, "Input dataset directory")->required();
  pre_cmd->add_option("--out", pre_out, "Output dataset directory")->required();
  pre_cmd->add_option("--emg-group", pre_group, "Biosignal group holding raw EMG")->capture_default_str();

  // enroll
  RecognizerConfig enroll_cfg;
  std::string enroll_dataset, enroll_out, enroll_condition, enroll_participant;
  std::size_t per_class = 0;
  std::uint64_t enroll_seed = 0;
  auto* enroll_cmd = add_sub("enroll", "Build a template store from a dataset");
  enroll_cmd->add_option("--dataset", enroll_dataset, "Input dataset directory")->required();
  enroll_cmd->add_option("--out", enroll_out, "Template store path")->required();
  enroll_cmd->add_option("--n", enroll_cfg.n, "Resampled points per channel")->capture_default_str();
  enroll_cmd->add_option("--npc", enroll_cfg.num_components, "Principal components kept")->capture_default_str();
  enroll_cmd->add_option("--condition", enroll_condition, "Only enroll gestures of this condition");
  enroll_cmd->add_option("--participant", enroll_participant, "Only enroll gestures of this participant");
  auto* o_enroll_seed = enroll_cmd->add_option("--seed", enroll_seed, "Seed for --per-class sampling");
  enroll_cmd->add_option("--per-class", per_class, "Randomly pick this many gestures per class")->needs(o_enroll_seed);

  // recognize
  std::string rec_store, rec_dataset;
  std::size_t rec_index = 0;
  auto* rec_cmd = add_sub("recognize", "Match dataset gestures against a template store");
  rec_cmd->add_option("--templates", rec_store, "Template store path")->required();
  rec_cmd->add_option("--dataset", rec_dataset, "Dataset holding the candidate gestures")->required();
  auto* o_index = rec_cmd->add_option("--index", rec_index, "Recognize only this gesture (0-based)");

  // evaluate
  eval::EvalConfig eval_cfg;
  std::string eval_protocol, eval_T, eval_dataset, eval_out, eval_csv;
  auto* eval_cmd = add_sub("evaluate", "Run an evaluation protocol over a dataset");
  eval_cmd->add_option("--protocol", eval_protocol, "ud, var or ui")->required()->check(CLI::IsMember({"ud", "var", "ui"}));
  eval_cmd->add_option("--T", eval_T, "Template counts: 9, 1,3,7 or 1..9 (default 1..9; ui: 1,3,7)");
  eval_cmd->add_option("--reps", eval_cfg.repetitions, "Repetitions per template count")->capture_default_str();
  eval_cmd->add_option("--seed", eval_cfg.seed, "Random seed")->required();
  eval_cmd->add_option("--dataset", eval_dataset, "Dataset directory")->required();
  eval_cmd->add_option("--out", eval_out, "Report path (default: standard output)");
  eval_cmd->add_option("--csv", eval_csv, "Also write a flat CSV here");
  eval_cmd->add_option("--n", eval_cfg.recognizer.n, "Resampled points per channel")->capture_default_str();
  eval_cmd->add_option("--npc", eval_cfg.recognizer.num_components, "Principal components kept")->capture_default_str();
  eval_cmd->add_flag("--timing", eval_cfg.timing, "Add wall-clock timing (makes the report non-reproducible)");

  // bench
  RecognizerConfig bench_cfg;
  std::string bench_templates = "3,9", bench_layout, bench_out;
  std::size_t bench_iters = 100, bench_warmup = 5;
  std::uint64_t bench_seed = 0;
  auto* bench_cmd = add_sub("bench", "Time recognition against pre-enrolled synthetic templates");
  bench_cmd->add_option("--seed", bench_seed, "Random seed for the synthetic gestures")->required();
  bench_cmd->add_option("--templates", bench_templates, "Template counts to time")->capture_default_str();
  bench_cmd->add_option("--iterations", bench_iters, "Timed calls per template count")->capture_default_str();
  bench_cmd->add_option("--warmup", bench_warmup, "Untimed calls before timing")->capture_default_str();
  bench_cmd->add_option("--n", bench_cfg.n, "Resampled points per channel")->capture_default_str();
  bench_cmd->add_option("--npc", bench_cfg.num_components, "Principal components kept")->capture_default_str();
  bench_cmd->add_option("--layout", bench_layout, "layout.json (default: 16 EMG + 72 IMU channels)");
  bench_cmd->add_option("--out", bench_out, "Result path (default: standard output)");

  std::vector<std::string> expanded;
  try {
    expanded = expand_config(args);
  } catch (const ConfigFileError& e) {
    err << "error: " << e.what() << "\n";
    return usage;
  }
  std::vector<const char*> argv{"dollarb"};
  for (const auto& a : expanded)
    argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      const auto subs = app.get_subcommands();
      out << (subs.empty() ? app.help() : subs.back()->help());
      return ok;
    }
    err << "error: " << e.what() << "\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.back()->help());
    return usage;
  }

  try {
    if (*synth_cmd) {
      if (!synth_spec_file.empty()) {
        std::ifstream in(synth_spec_file);
        if (!in)
          throw DataError(synth_spec_file + ": cannot open spec");
        synth::SynthSpec from_file;
        synth::apply_json(from_file, nlohmann::json::parse(in));
        // Explicit flags win over the spec file.
        auto keep = [](const CLI::Option* o, auto& dst, const auto& flag_value) {
          if (o->count() > 0)
            dst = flag_value;
        };
        keep(o_classes, from_file.classes, spec.classes);
        keep(o_trials, from_file.trials_per_class, spec.trials_per_class);
        keep(o_participants, from_file.participants, spec.participants);
        keep(o_vtrials, from_file.variation_trials_per_class, spec.variation_trials_per_class);
        keep(o_active, from_file.active_channels_per_class, spec.active_channels_per_class);
        keep(o_noise, from_file.noise_sigma, spec.noise_sigma);
        keep(o_jlo, from_file.jitter_lo, spec.jitter_lo);
        keep(o_jhi, from_file.jitter_hi, spec.jitter_hi);
        keep(o_duration, from_file.duration_s, spec.duration_s);
        keep(o_speed, from_file.speed_factor, spec.speed_factor);
        keep(o_size, from_file.size_factor, spec.size_factor);
        keep(o_drift, from_file.drift_factor, spec.drift_factor);
        keep(o_spread, from_file.participant_spread, spec.participant_spread);
        keep(o_carrier, from_file.emg_carrier, spec.emg_carrier);
        spec = std::move(from_file);
      }
      spec.seed = synth_seed;
      if (o_conditions->count() > 0) {
        std::vector<std::string> names;
        std::stringstream ss(synth_conditions);
        for (std::string item; std::getline(ss, item, ',');)
          names.push_back(item);
        try {
          spec.conditions = synth::parse_conditions(names);
        } catch (const std::invalid_argument& e) {
          throw UsageError(e.what());
        }
      }
      if (!synth_layout.empty())
        spec.layout = read_layout(synth_layout);
      if (spec.active_channels_per_class > spec.layout.total_channels() && o_active->count() == 0)
        spec.active_channels_per_class = spec.layout.total_channels();
      const auto ds = synth::generate(spec);
      save_dataset(synth_out, ds);
      nlohmann::ordered_json summary{{"out", synth_out},
                                     {"seed", spec.seed},
                                     {"gestures", ds.gestures.size()},
                                     {"channels", ds.layout.total_channels()}};
      if (synth_audit) {
        const auto a = synth::separability_audit(ds);
        summary["audit"] = {{"passed", a.passed()},
                            {"violations", a.violations},
                            {"max_within", a.max_within},
                            {"min_between", a.min_between}};
      }
      out << summary.dump(2) << "\n";
      return ok;
    }

    if (*seg_cmd) {
      auto ds = load_dataset(seg_dataset);
      const auto maxima = segmentation::participant_max_amplitudes(ds.gestures, ds.layout, seg_cfg);
      nlohmann::ordered_json report = nlohmann::ordered_json::array();
      std::vector<RawGesture> cropped;
      for (std::size_t i = 0; i < ds.gestures.size(); ++i) {
        const auto& g = ds.gestures[i];
        const auto r = segmentation::segment_report(g, ds.layout, maxima.at(g.participant), seg_cfg);
        report.push_back({{"index", i},
                          {"label", g.label},
                          {"participant", g.participant},
                          {"trial", g.trial},
                          {"start_s", r.bounds.start_s},
                          {"stop_s", r.bounds.stop_s},
                          {"full_recording", r.full_recording},
                          {"relevant_channels", r.relevant_channels}});
        cropped.push_back(segmentation::crop(g, ds.layout, r.bounds));
      }
      save_dataset(seg_out, ds.layout, cropped);
      if (seg_report.empty())
        out << report.dump(2) << "\n";
      else
        write_text(seg_report, report.dump(2) + "\n");
      return ok;
    }

    if (*pre_cmd) {
      auto ds = load_dataset(pre_dataset);
      const auto gi = ds.layout.find(pre_group);
      if (!gi)
        throw DataError(pre_dataset + ": layout has no biosignal group named '" + pre_group + "'");
      auto groups = ds.layout.groups();
      const double rate = groups[*gi].sample_rate_hz;
      groups[*gi].sample_rate_hz = dsp::envelope_rate_hz(rate);
      for (std::size_t i = 0; i < ds.gestures.size(); ++i)
        for (auto& ch : ds.gestures[i].signals[*gi]) {
          try {
            ch = dsp::emg_linear_envelope(ch, rate);
          } catch (const std::invalid_argument& e) {
            throw DataError(pre_dataset + ": gesture " + std::to_string(i) + ": " + e.what());
          }
        }
      save_dataset(pre_out, BiosignalLayout(std::move(groups)), ds.gestures);
      out << nlohmann::ordered_json{{"out", pre_out}, {"gestures", ds.gestures.size()}}.dump(2) << "\n";
      return ok;
    }

    if (*enroll_cmd) {
      enroll_cfg.validate();
      auto ds = load_dataset(enroll_dataset);
      std::optional<Condition> cond;
      if (!enroll_condition.empty()) {
        cond = condition_from_string(enroll_condition);
        if (!cond)
          throw UsageError("unknown condition '" + enroll_condition + "'");
      }
      std::vector<std::size_t> chosen;
      for (std::size_t i = 0; i < ds.gestures.size(); ++i) {
        const auto& g = ds.gestures[i];
        if ((!cond || g.condition == *cond) && (enroll_participant.empty() || g.participant == enroll_participant))
          chosen.push_back(i);
      }
      if (per_class > 0) {
        std::map<std::string, std::vector<std::size_t>> by_label;
        for (auto i : chosen)
          by_label[ds.gestures[i].label].push_back(i);
        chosen.clear();
        std::size_t cls = 0;
        for (const auto& [label, pool] : by_label) {
          auto rng = Rng::stream(enroll_seed, {hash_key("enroll"), cls++});
          for (auto k : rng.sample_without_replacement(pool.size(), per_class))
            chosen.push_back(pool[k]);
        }
      }
      TemplateStore store{enroll_cfg, ds.layout, {}};
      for (auto i : chosen)
        store.templates.push_back(enroll(ds.gestures[i], ds.layout, enroll_cfg));
      save_template_store(enroll_out, store);
      out << nlohmann::ordered_json{{"out", enroll_out},
                                    {"templates", store.templates.size()},
                                    {"n", enroll_cfg.n},
                                    {"nPC", enroll_cfg.num_components},
                                    {"U_rows", ds.layout.total_channels()},
                                    {"U_cols", enroll_cfg.num_components}}
                 .dump(2)
          << "\n";
      return ok;
    }

    if (*rec_cmd) {
      const auto store = load_template_store(rec_store);
      if (store.templates.empty())
        throw DataError(rec_store + ": no templates");
      auto ds = load_dataset(rec_dataset);
      if (ds.layout.hash() != store.layout.hash())
        throw DataError(rec_dataset + ": layout does not match the template store's layout");
      if (o_index->count() > 0) {
        if (rec_index >= ds.gestures.size())
          throw UsageError("--index " + std::to_string(rec_index) + " out of range (dataset has " +
                           std::to_string(ds.gestures.size()) + " gestures)");
        out << result_json(recognize(ds.gestures[rec_index], store.templates, ds.layout, store.config)).dump(2) << "\n";
        return ok;
      }
      nlohmann::ordered_json all = nlohmann::ordered_json::array();
      for (const auto& g : ds.gestures)
        all.push_back(result_json(recognize(g, store.templates, ds.layout, store.config)));
      out << all.dump(2) << "\n";
      return ok;
    }

    if (*eval_cmd) {
      eval_cfg.protocol = *eval::protocol_from_string(eval_protocol);
      eval_cfg.templates_T = eval_T.empty() ? eval::default_template_counts(eval_cfg.protocol) : parse_counts(eval_T);
      const auto ds = load_dataset(eval_dataset);
      const auto report = eval::run(ds, eval_cfg);
      const auto text = report.to_json().dump(2) + "\n";
      if (eval_out.empty())
        out << text;
      else
        write_text(eval_out, text);
      if (!eval_csv.empty())
        write_text(eval_csv, report.to_csv());
      return ok;
    }

    if (*bench_cmd) {
      const auto layout = bench_layout.empty() ? synth::default_layout() : read_layout(bench_layout);
      bench_cfg.validate();
      nlohmann::ordered_json results = nlohmann::ordered_json::array();
      for (auto t : parse_counts(bench_templates))
        results.push_back(eval::bench_recognition(layout, bench_cfg, t, bench_iters, bench_warmup, bench_seed).to_json());
      nlohmann::ordered_json doc{{"seed", bench_seed},
                                 {"n", bench_cfg.n},
                                 {"nPC", bench_cfg.num_components},
                                 {"channels", layout.total_channels()},
                                 {"results", results}};
      if (bench_out.empty())
        out << doc.dump(2) << "\n";
      else
        write_text(bench_out, doc.dump(2) + "\n");
      return ok;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return usage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return data;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return data;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return data;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return data;
  }
  return usage;
}

} // namespace dollarb::cli
