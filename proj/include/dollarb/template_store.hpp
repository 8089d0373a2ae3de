#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dollarb/dataset_io.hpp"
#include "dollarb/recognizer.hpp"

namespace dollarb {

/// Enrolled templates plus the configuration and layout they were built for.
struct TemplateStore {
  RecognizerConfig config;
  BiosignalLayout layout;
  std::vector<LatentTemplate> templates;
};

inline nlohmann::json store_to_json(const TemplateStore& s) {
  nlohmann::json templates = nlohmann::json::array();
  for (const auto& t : s.templates) {
    const auto u = t.components.values();
    templates.push_back({{"label", t.label},
                         {"U", std::vector<double>(u.begin(), u.end())},
                         {"points", t.points}});
  }
  return {{"config", {{"n", s.config.n}, {"nPC", s.config.num_components}}},
          {"layout_hash", s.layout.hash()},
          {"layout", layout_to_json(s.layout)},
          {"templates", std::move(templates)}};
}

inline TemplateStore store_from_json(const nlohmann::json& j, const std::string& where) {
  try {
    RecognizerConfig cfg{j.at("config").at("n").get<std::size_t>(),
                         j.at("config").at("nPC").get<std::size_t>()};
    if (cfg.n < 2 || cfg.num_components < 1)
      throw DataError(where + ": invalid config");
    auto layout = layout_from_json(j.at("layout"), where);
    if (j.at("layout_hash").get<std::string>() != layout.hash())
      throw DataError(where + ": layout hash does not match the stored layout");
    const std::size_t c = layout.total_channels();
    if (cfg.num_components > c)
      throw DataError(where + ": nPC exceeds the layout's channel count");

    TemplateStore store{cfg, std::move(layout), {}};
    std::size_t idx = 0;
    for (const auto& tj : j.at("templates")) {
      const std::string at = where + ": template " + std::to_string(idx++);
      auto u = tj.at("U").get<std::vector<double>>();
      auto points = tj.at("points").get<std::vector<double>>();
      if (u.size() != c * cfg.num_components)
        throw DataError(at + ": U must have " + std::to_string(c) + "x" +
                        std::to_string(cfg.num_components) + " entries");
      if (points.size() != cfg.n * cfg.num_components)
        throw DataError(at + ": points must have n*nPC entries");
      LatentTemplate t{tj.at("label").get<std::string>(), Matrix(c, cfg.num_components), std::move(points)};
      std::copy(u.begin(), u.end(), t.components.values().begin());
      store.templates.push_back(std::move(t));
    }
    return store;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + ": malformed template store (" + e.what() + ")");
  }
}

inline void save_template_store(const std::filesystem::path& path, const TemplateStore& s) {
  std::ofstream out(path);
  if (!out)
    throw IoError(path.string() + ": cannot write");
  out << store_to_json(s).dump() << '\n';
  if (!out)
    throw IoError(path.string() + ": write failed");
}

inline TemplateStore load_template_store(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw IoError(path.string() + ": cannot open template store");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": invalid JSON (" + e.what() + ")");
  }
  return store_from_json(j, path.string());
}

} // namespace dollarb
