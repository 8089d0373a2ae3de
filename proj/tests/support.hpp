#pragma once

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <string>

#include "dollarb/core.hpp"
#include "dollarb/random.hpp"

namespace testing_support {

/// Fresh empty directory under the system temp dir, removed on scope exit.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("dollarb-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

/// Gaussian-noise gesture with per-group random scale and length.
inline dollarb::RawGesture random_gesture(const dollarb::BiosignalLayout& layout, dollarb::Rng& rng,
                                          std::string label = "g") {
  dollarb::RawGesture g;
  g.label = std::move(label);
  g.participant = "p00";
  for (std::size_t gi = 0; gi < layout.group_count(); ++gi) {
    const auto len = static_cast<std::size_t>(8 + rng.below(120));
    const double scale = std::pow(10.0, rng.uniform(-4.0, 2.0));
    std::vector<dollarb::Channel> chans;
    for (std::size_t k = 0; k < layout.group(gi).channel_count; ++k) {
      dollarb::Channel x(len);
      const double offset = rng.uniform(-5.0, 5.0) * scale;
      for (auto& v : x)
        v = offset + scale * rng.normal();
      chans.push_back(std::move(x));
    }
    g.signals.push_back(std::move(chans));
  }
  return g;
}

} // namespace testing_support
