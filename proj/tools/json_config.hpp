#pragma once

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace dollarb::cli {

class ConfigFileError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string scalar(const nlohmann::json& v, const std::string& key) {
  if (v.is_string())
    return v.get<std::string>();
  if (v.is_number())
    return v.dump();
  throw ConfigFileError("config key '" + key + "': values must be strings, numbers, booleans or arrays of those");
}

inline bool given(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

} // namespace detail

/// Replaces `--config FILE` with the flags stored in FILE, a flat JSON
/// object keyed by long option names without the leading dashes. Flags
/// already on the command line win. `true` adds a bare flag, `false` omits
/// it, arrays repeat the option.
inline std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  std::string file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size())
        throw ConfigFileError("--config needs a file name");
      file = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
    } else {
      out.push_back(args[i]);
    }
  }
  if (file.empty())
    return out;

  std::ifstream in(file);
  if (!in)
    throw ConfigFileError(file + ": cannot open config file");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigFileError(file + ": config file is not valid JSON (" + e.what() + ")");
  }
  if (!j.is_object())
    throw ConfigFileError(file + ": config file must hold a JSON object");

  const std::vector<std::string> explicit_args = out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string flag = "--" + it.key();
    if (detail::given(explicit_args, flag))
      continue;
    const auto& v = *it;
    if (v.is_boolean()) {
      if (v.get<bool>())
        out.push_back(flag);
    } else if (v.is_array()) {
      for (const auto& item : v) {
        out.push_back(flag);
        out.push_back(detail::scalar(item, it.key()));
      }
    } else {
      out.push_back(flag);
      out.push_back(detail::scalar(v, it.key()));
    }
  }
  return out;
}

} // namespace dollarb::cli
