#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dollarb/core.hpp"

namespace dollarb {

struct Dataset {
  BiosignalLayout layout;
  std::vector<RawGesture> gestures;
};

inline nlohmann::json layout_to_json(const BiosignalLayout& layout) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : layout.groups())
    groups.push_back({{"name", g.name}, {"channels", g.channel_count}, {"sample_rate_hz", g.sample_rate_hz}});
  return {{"groups", groups}};
}

inline BiosignalLayout layout_from_json(const nlohmann::json& j, const std::string& where) {
  try {
    std::vector<BiosignalGroup> groups;
    for (const auto& g : j.at("groups")) {
      const auto channels = g.at("channels").get<long long>();
      if (channels < 1)
        throw DataError(where + ": group channels must be positive");
      groups.push_back({g.at("name").get<std::string>(), static_cast<std::size_t>(channels),
                        g.at("sample_rate_hz").get<double>()});
    }
    return BiosignalLayout(std::move(groups));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + ": malformed layout (" + e.what() + ")");
  } catch (const DataError& e) {
    throw DataError(where + ": " + e.what());
  }
}

inline nlohmann::json gesture_to_json(const RawGesture& g, const BiosignalLayout& layout) {
  nlohmann::json signals = nlohmann::json::object();
  for (std::size_t gi = 0; gi < layout.group_count(); ++gi)
    signals[layout.group(gi).name] = g.signals[gi];
  return {{"label", g.label},
          {"participant", g.participant},
          {"condition", std::string(to_string(g.condition))},
          {"trial", g.trial},
          {"signals", std::move(signals)}};
}

inline RawGesture gesture_from_json(const nlohmann::json& j, const BiosignalLayout& layout,
                                    const std::string& where) {
  RawGesture g;
  try {
    g.label = j.at("label").get<std::string>();
    g.participant = j.value("participant", std::string{});
    const auto cond = j.value("condition", std::string("personalized"));
    const auto parsed = condition_from_string(cond);
    if (!parsed)
      throw DataError(where + ": unknown condition '" + cond + "'");
    g.condition = *parsed;
    g.trial = j.value("trial", 0);
    const auto& signals = j.at("signals");
    for (auto it = signals.begin(); it != signals.end(); ++it)
      if (!layout.find(it.key()))
        throw DataError(where + ": biosignal '" + it.key() + "' is not in the layout");
    g.signals.resize(layout.group_count());
    for (std::size_t gi = 0; gi < layout.group_count(); ++gi) {
      const auto& name = layout.group(gi).name;
      if (!signals.contains(name))
        throw DataError(where + ": missing biosignal '" + name + "'");
      const auto& chans = signals.at(name);
      if (!chans.is_array())
        throw DataError(where + ": biosignal '" + name + "' must be a list of channels");
      for (const auto& ch : chans) {
        Channel samples;
        samples.reserve(ch.size());
        for (const auto& v : ch) {
          if (!v.is_number())
            throw DataError(where + ": non-finite sample in biosignal '" + name + "'");
          samples.push_back(v.get<double>());
        }
        g.signals[gi].push_back(std::move(samples));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + ": malformed gesture record (" + e.what() + ")");
  }
  validate(g, layout, where);
  return g;
}

/// Reads `layout.json` and every `*.jsonl` file in `dir` (files in name
/// order, records in line order). Blank lines are skipped.
inline Dataset load_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const auto layout_path = dir / "layout.json";
  std::ifstream lin(layout_path);
  if (!lin)
    throw DataError(layout_path.string() + ": missing layout file");
  nlohmann::json lj;
  try {
    lin >> lj;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(layout_path.string() + ": malformed layout (" + e.what() + ")");
  }
  Dataset ds{layout_from_json(lj, layout_path.string()), {}};

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  for (const auto& file : files) {
    std::ifstream in(file);
    if (!in)
      throw IoError(file.string() + ": cannot open");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos)
        continue;
      const std::string where = file.string() + ":" + std::to_string(lineno);
      nlohmann::json rec;
      try {
        rec = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw DataError(where + ": invalid JSON (" + e.what() + ")");
      }
      ds.gestures.push_back(gesture_from_json(rec, ds.layout, where));
    }
  }
  return ds;
}

/// Writes `layout.json` and `gestures.jsonl` into `dir`, creating it if
/// needed. Every gesture is validated before anything touches the disk.
inline void save_dataset(const std::filesystem::path& dir, const BiosignalLayout& layout,
                         const std::vector<RawGesture>& gestures) {
  for (std::size_t i = 0; i < gestures.size(); ++i)
    validate(gestures[i], layout, "gesture " + std::to_string(i));

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw IoError(dir.string() + ": cannot create directory (" + ec.message() + ")");

  {
    std::ofstream out(dir / "layout.json");
    if (!out)
      throw IoError((dir / "layout.json").string() + ": cannot write");
    out << layout_to_json(layout).dump(2) << '\n';
    if (!out)
      throw IoError((dir / "layout.json").string() + ": write failed");
  }
  std::ofstream out(dir / "gestures.jsonl");
  if (!out)
    throw IoError((dir / "gestures.jsonl").string() + ": cannot write");
  for (const auto& g : gestures)
    out << gesture_to_json(g, layout).dump() << '\n';
  if (!out)
    throw IoError((dir / "gestures.jsonl").string() + ": write failed");
}

inline void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  save_dataset(dir, ds.layout, ds.gestures);
}

} // namespace dollarb
