#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "dollarb/segmentation.hpp"
#include "dollarb/synthgen.hpp"

using namespace dollarb;
using namespace dollarb::segmentation;

namespace {

bool contains(const std::vector<std::size_t>& v, std::size_t x) { return std::find(v.begin(), v.end(), x) != v.end(); }

SegmentBounds bounds_for(const synth::PaddedBurst& b) {
  const auto maxima = channel_max_amplitudes(b.gesture, 0);
  return segment(b.gesture, b.layout, maxima);
}

double duration(const synth::PaddedBurst& b) {
  return static_cast<double>(b.gesture.sample_count(0)) / b.layout.group(0).sample_rate_hz;
}

} // namespace

TEST(Cutoffs, TrapezoidSlopes) {
  const std::vector<double> c{0, 0, 0, 1, 2, 2, 2, 1, 0, 0, 0};
  const auto cand = candidate_cutoffs(c);
  ASSERT_FALSE(cand.starts.empty());
  ASSERT_FALSE(cand.stops.empty());
  // largest rise first appears at difference 2 (c[2] → c[3]); largest fall
  // first at difference 6, reported one past it
  EXPECT_EQ(cand.starts.front(), 2u);
  EXPECT_EQ(cand.stops.front(), 7u);
  for (auto s : cand.starts)
    EXPECT_LE(s, 3u);
  for (auto s : cand.stops)
    EXPECT_GE(s, 7u);
  for (auto s : cand.stops)
    EXPECT_LT(s, c.size());
}

TEST(Cutoffs, RampThreshold) {
  std::vector<double> c(11);
  for (std::size_t i = 0; i < c.size(); ++i)
    c[i] = static_cast<double>(i);
  // level 3: first sample at or above it is 3, so the last one below is 2
  const auto t = threshold_cutoffs(c, 0.3);
  EXPECT_EQ(t.start, 2u);
  EXPECT_FALSE(t.stop);
  const auto cons = threshold_cutoffs(c, 0.15);
  EXPECT_EQ(cons.start, 1u);
  EXPECT_TRUE(contains(candidate_cutoffs(c).starts, 2u));
}

TEST(Cutoffs, FlatTraceHasNoThresholdCrossing) {
  const auto t = threshold_cutoffs(std::vector<double>(8, 1.0), 0.3);
  EXPECT_FALSE(t.start);
  EXPECT_FALSE(t.stop);
}

TEST(Cutoffs, EdgeAtBothEnds) {
  const std::vector<double> c{5, 5, 4, 0, 0, 0, 4, 5};
  const auto e = edge_cutoffs(c, 1.5);
  EXPECT_EQ(e.start, 0u);
  EXPECT_EQ(e.stop, 7u);
  const auto inner = edge_cutoffs(std::vector<double>{0, 5, 0}, 1.5);
  EXPECT_FALSE(inner.start);
  EXPECT_FALSE(inner.stop);
  EXPECT_TRUE(contains(candidate_cutoffs(std::vector<double>{5, 5, 5, 4, 1, 0, 0, 0, 0}).starts, 0u));
}

TEST(Cutoffs, AllIndicesValid) {
  auto rng = Rng::stream(1, {});
  for (int t = 0; t < 200; ++t) {
    std::vector<double> c(4 + rng.below(60));
    for (auto& v : c)
      v = std::abs(rng.normal());
    const auto cand = candidate_cutoffs(c);
    for (auto i : cand.starts)
      EXPECT_LT(i, c.size());
    for (auto i : cand.stops)
      EXPECT_LT(i, c.size());
  }
  EXPECT_THROW(candidate_cutoffs(std::vector<double>{1, 2, 3}), std::invalid_argument);
}

TEST(Cutoffs, WrongAreaFilter) {
  CutoffCandidates c{{0, 5, 7, 10}, {0, 3, 4, 10}};
  discard_wrong_area(c, 11);
  EXPECT_EQ(c.starts, (std::vector<std::size_t>{0, 5}));
  EXPECT_EQ(c.stops, (std::vector<std::size_t>{4, 10}));
}

TEST(Channels, DominantChannelIsSelected) {
  std::vector<std::vector<double>> traces(4, std::vector<double>{1, 2, 1, 2});
  traces[0] = {10, 20, 10, 20};
  const std::vector<double> maxima{20, 2, 2, 2};
  EXPECT_TRUE(contains(select_relevant_channels(traces, maxima), 0u));
}

TEST(Channels, IdenticalChannelsPickFirstThree) {
  const std::vector<std::vector<double>> traces(6, std::vector<double>{1, 3, 1, 3});
  EXPECT_EQ(select_relevant_channels(traces, std::vector<double>(6, 3.0)), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Channels, BurstChannelsAndNothingBelowFloor) {
  synth::BurstSpec spec;
  spec.emg_channels = 6;
  spec.active_channels = 2;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto b = synth::make_padded_burst(spec, seed);
    SegmentationConfig cfg;
    std::vector<std::vector<double>> traces;
    for (const auto& ch : b.gesture.signals[0])
      traces.push_back(dsp::rms_windows(dsp::rectify(ch), 200, 100));
    const auto chosen = select_relevant_channels(traces, channel_max_amplitudes(b.gesture, 0), cfg);

    std::vector<double> var;
    for (const auto& t : traces) {
      double m = 0, s = 0;
      for (double v : t)
        m += v;
      m /= static_cast<double>(t.size());
      for (double v : t)
        s += (v - m) * (v - m);
      var.push_back(s / static_cast<double>(t.size()));
    }
    const double vmax = *std::max_element(var.begin(), var.end());
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < var.size(); ++i)
      if (var[i] > 1e-3 * vmax)
        active.push_back(i);
    ASSERT_EQ(active.size(), 2u);
    EXPECT_EQ(chosen, active);
    for (auto i : chosen)
      EXPECT_GE(var[i], 0.1 * vmax);
  }
}

TEST(Segment, OneSecondPaddingRecovered) {
  const auto b = synth::make_padded_burst({}, 42);
  const auto s = bounds_for(b);
  EXPECT_LE(s.start_s, 1.0);
  EXPECT_GE(s.start_s, 0.85);
  EXPECT_GE(s.stop_s, 3.0);
  EXPECT_LE(s.stop_s, 3.15);
}

TEST(Segment, ManyBurstsAreContainedTightly) {
  std::size_t good = 0;
  const std::size_t trials = 60;
  for (std::uint64_t seed = 0; seed < trials; ++seed) {
    auto rng = Rng::stream(seed, {7});
    synth::BurstSpec spec;
    spec.lead_s = rng.uniform(0.5, 1.5);
    spec.burst_s = rng.uniform(0.8, 2.5);
    spec.tail_s = rng.uniform(0.5, 1.5);
    spec.active_channels = 1 + rng.below(4);
    const auto b = synth::make_padded_burst(spec, seed);
    const auto s = bounds_for(b);
    if (s.start_s <= b.burst_start_s && s.stop_s >= b.burst_stop_s && b.burst_start_s - s.start_s <= 0.150 &&
        s.stop_s - b.burst_stop_s <= 0.150)
      ++good;
  }
  EXPECT_GE(good, trials * 95 / 100);
}

TEST(Segment, SilenceGivesWholeRecording) {
  synth::BurstSpec spec;
  spec.silent = true;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto b = synth::make_padded_burst(spec, seed);
    const auto rep = segment_report(b.gesture, b.layout, channel_max_amplitudes(b.gesture, 0));
    EXPECT_TRUE(rep.full_recording);
    EXPECT_EQ(rep.bounds.start_s, 0.0);
    EXPECT_EQ(rep.bounds.stop_s, duration(b));
  }
}

TEST(Segment, BurstAtTimeZeroStartsAtZero) {
  synth::BurstSpec spec;
  spec.lead_s = 0.0;
  const auto b = synth::make_padded_burst(spec, 3);
  const auto s = bounds_for(b);
  EXPECT_EQ(s.start_s, 0.0);
  EXPECT_GE(s.stop_s, b.burst_stop_s);
}

TEST(Segment, BoundsAreOrderedAndInsideRecording) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto rng = Rng::stream(seed, {8});
    synth::BurstSpec spec;
    spec.lead_s = rng.uniform(0.0, 1.0);
    spec.tail_s = rng.uniform(0.0, 1.0);
    const auto b = synth::make_padded_burst(spec, seed);
    const auto s = bounds_for(b);
    EXPECT_GE(s.start_s, 0.0);
    EXPECT_LT(s.start_s, s.stop_s);
    EXPECT_LE(s.stop_s, duration(b));
  }
}

TEST(Segment, MorePaddingNeverShrinksTheGap) {
  // Extra lead-in moves the detected start by the same amount, within one hop.
  synth::BurstSpec short_lead, long_lead;
  short_lead.lead_s = 1.0;
  long_lead.lead_s = 1.5;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto a = bounds_for(synth::make_padded_burst(short_lead, seed));
    const auto b = bounds_for(synth::make_padded_burst(long_lead, seed));
    EXPECT_NEAR(b.start_s - a.start_s, 0.5, 0.1);
  }
}

TEST(Segment, MissingEmgGroup) {
  BiosignalLayout layout({{"imu", 2, 100.0}});
  RawGesture g{"a", "p", Condition::personalized, 0, {{{1, 2, 3}, {1, 2, 3}}}};
  EXPECT_THROW(segment(g, layout, std::vector<double>{1, 1}), DataError);
}

TEST(Crop, CrossRateSlicesAgree) {
  synth::BurstSpec spec;
  spec.imu_channels = 6;
  const auto b = synth::make_padded_burst(spec, 5);
  const auto maxima = channel_max_amplitudes(b.gesture, 0);
  const auto s = segment(b.gesture, b.layout, maxima);
  const auto cropped = crop(b.gesture, b.layout, s);
  for (std::size_t gi = 0; gi < 2; ++gi) {
    const double rate = b.layout.group(gi).sample_rate_hz;
    const auto [first, last] = sample_range(s, rate, b.gesture.sample_count(gi));
    EXPECT_EQ(cropped.sample_count(gi), last - first);
    const double t0 = static_cast<double>(first) / rate, t1 = static_cast<double>(last - 1) / rate;
    EXPECT_GE(t0, s.start_s - 1e-9);
    EXPECT_LT(t0 - s.start_s, 1.0 / rate + 1e-9);
    EXPECT_LT(t1, s.stop_s);
    EXPECT_LE(s.stop_s - t1, 1.0 / rate + 1e-9);
    EXPECT_EQ(cropped.signals[gi][0].front(), b.gesture.signals[gi][0][first]);
  }
}

TEST(Crop, TinyIntervalKeepsTwoSamples) {
  const auto [first, last] = sample_range({0.5, 0.5001}, 100.0, 100);
  EXPECT_EQ(last - first, 2u);
  const auto [f2, l2] = sample_range({0.999, 1.0}, 100.0, 100);
  EXPECT_EQ(l2, 100u);
  EXPECT_EQ(l2 - f2, 2u);
}
