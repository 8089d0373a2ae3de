#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "dollarb/error.hpp"
#include "dollarb/matrix.hpp"

namespace dollarb {

struct BiosignalGroup {
  std::string name;
  std::size_t channel_count = 0;
  double sample_rate_hz = 0.0;

  friend bool operator==(const BiosignalGroup&, const BiosignalGroup&) = default;
};

/// Ordered biosignal groups. Group order, then channel order within a group,
/// fixes the row order of every processed gesture.
class BiosignalLayout {
public:
  explicit BiosignalLayout(std::vector<BiosignalGroup> groups) : groups_(std::move(groups)) {
    if (groups_.empty())
      throw DataError("layout: at least one biosignal group is required");
    std::unordered_set<std::string> seen;
    for (const auto& g : groups_) {
      if (g.name.empty())
        throw DataError("layout: group name must not be empty");
      if (!seen.insert(g.name).second)
        throw DataError("layout: duplicate group name '" + g.name + "'");
      if (g.channel_count < 1)
        throw DataError("layout: group '" + g.name + "' needs at least one channel");
      if (!(g.sample_rate_hz > 0.0) || !std::isfinite(g.sample_rate_hz))
        throw DataError("layout: group '" + g.name + "' needs a positive sample rate");
    }
  }

  const std::vector<BiosignalGroup>& groups() const noexcept { return groups_; }
  std::size_t group_count() const noexcept { return groups_.size(); }
  const BiosignalGroup& group(std::size_t i) const { return groups_.at(i); }

  std::size_t total_channels() const noexcept {
    std::size_t c = 0;
    for (const auto& g : groups_)
      c += g.channel_count;
    return c;
  }

  /// First row of group `i` in the concatenated c×n matrix.
  std::size_t channel_offset(std::size_t i) const {
    std::size_t off = 0;
    for (std::size_t k = 0; k < i; ++k)
      off += groups_.at(k).channel_count;
    return off;
  }

  std::optional<std::size_t> find(std::string_view name) const noexcept {
    for (std::size_t i = 0; i < groups_.size(); ++i)
      if (groups_[i].name == name)
        return i;
    return std::nullopt;
  }

  /// FNV-1a over a canonical text form; identifies the layout in template stores.
  std::string hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](std::string_view s) {
      for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
      }
    };
    for (const auto& g : groups_) {
      char rate[64];
      std::snprintf(rate, sizeof rate, "%.17g", g.sample_rate_hz);
      feed(g.name);
      feed(":");
      feed(std::to_string(g.channel_count));
      feed(":");
      feed(rate);
      feed(";");
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
  }

  friend bool operator==(const BiosignalLayout&, const BiosignalLayout&) = default;

private:
  std::vector<BiosignalGroup> groups_;
};

enum class Condition { personalized, variation_time, variation_speed, variation_size, standardized };

inline std::string_view to_string(Condition c) noexcept {
  switch (c) {
  case Condition::personalized: return "personalized";
  case Condition::variation_time: return "variation_time";
  case Condition::variation_speed: return "variation_speed";
  case Condition::variation_size: return "variation_size";
  case Condition::standardized: return "standardized";
  }
  return "personalized";
}

inline std::optional<Condition> condition_from_string(std::string_view s) noexcept {
  for (auto c : {Condition::personalized, Condition::variation_time, Condition::variation_speed,
                 Condition::variation_size, Condition::standardized})
    if (to_string(c) == s)
      return c;
  return std::nullopt;
}

inline bool is_variation(Condition c) noexcept {
  return c == Condition::variation_time || c == Condition::variation_speed ||
         c == Condition::variation_size;
}

using Channel = std::vector<double>;

/// One recorded gesture. `signals[g][k]` is channel k of layout group g.
struct RawGesture {
  std::string label;
  std::string participant;
  Condition condition = Condition::personalized;
  int trial = 0;
  std::vector<std::vector<Channel>> signals;

  std::size_t sample_count(std::size_t group) const {
    const auto& g = signals.at(group);
    return g.empty() ? 0 : g.front().size();
  }

  friend bool operator==(const RawGesture&, const RawGesture&) = default;
};

/// Throws DataError naming `where` if the gesture does not fit the layout.
inline void validate(const RawGesture& g, const BiosignalLayout& layout,
                     std::string_view where = "gesture") {
  const std::string at(where);
  if (g.signals.size() != layout.group_count())
    throw DataError(at + ": expected " + std::to_string(layout.group_count()) +
                    " biosignal groups, got " + std::to_string(g.signals.size()));
  for (std::size_t gi = 0; gi < layout.group_count(); ++gi) {
    const auto& grp = layout.group(gi);
    const auto& chans = g.signals[gi];
    if (chans.size() != grp.channel_count)
      throw DataError(at + ": channel-count mismatch in group '" + grp.name + "' (expected " +
                      std::to_string(grp.channel_count) + ", got " +
                      std::to_string(chans.size()) + ")");
    const std::size_t n = chans.front().size();
    if (n < 2)
      throw DataError(at + ": group '" + grp.name + "' has fewer than 2 samples");
    for (const auto& ch : chans) {
      if (ch.size() != n)
        throw DataError(at + ": channels of group '" + grp.name + "' differ in length");
      for (double v : ch)
        if (!std::isfinite(v))
          throw DataError(at + ": non-finite sample in group '" + grp.name + "'");
    }
  }
}

struct RecognizerConfig {
  std::size_t n = 64;
  std::size_t num_components = 50;

  void validate() const {
    if (n < 2)
      throw std::invalid_argument("recognizer config: n must be at least 2");
    if (num_components < 1)
      throw std::invalid_argument("recognizer config: nPC must be at least 1");
  }

  friend bool operator==(const RecognizerConfig&, const RecognizerConfig&) = default;
};

/// Resampled and normalized gesture: c rows in layout order, n columns.
struct ProcessedGesture {
  Matrix data;

  std::size_t channels() const noexcept { return data.rows(); }
  std::size_t n() const noexcept { return data.cols(); }
};

struct LatentTemplate {
  std::string label;
  Matrix components;          // c × nPC, orthonormal columns
  std::vector<double> points; // flatten(Dᵀ·U), time-major, length n·nPC

  std::size_t num_components() const noexcept { return components.cols(); }
  std::size_t n() const noexcept {
    return components.cols() == 0 ? 0 : points.size() / components.cols();
  }

  friend bool operator==(const LatentTemplate&, const LatentTemplate&) = default;
};

struct RecognitionResult {
  std::string matched_label;
  std::size_t matched_template_index = 0;
  double distance = 0.0;
  std::vector<double> all_distances;
};

} // namespace dollarb
