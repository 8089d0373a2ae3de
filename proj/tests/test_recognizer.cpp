#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "dollarb/recognizer.hpp"
#include "oracle/straight_line.hpp"
#include "support.hpp"

using namespace dollarb;

namespace {

RawGesture single_group(std::vector<Channel> chans, std::string label = "g") {
  return RawGesture{std::move(label), "p00", Condition::personalized, 0, {std::move(chans)}};
}

BiosignalLayout layout_of(std::size_t channels) { return BiosignalLayout({{"s", channels, 100.0}}); }

oracle::Groups as_groups(const RawGesture& g) { return g.signals; }

RawGesture scaled_group(RawGesture g, std::size_t group, double k) {
  for (auto& ch : g.signals[group])
    for (auto& v : ch)
      v *= k;
  return g;
}

const BiosignalLayout two_rates({{"emg", 4, 2000.0}, {"imu", 6, 148.0}});

} // namespace

TEST(Resample, Examples) {
  EXPECT_EQ(resample_channel(std::vector<double>{0, 3, 6, 9}, 3), (std::vector<double>{0, 4.5, 9}));
  const auto r = resample_channel(std::vector<double>{0, 10, 0}, 5);
  const std::vector<double> expected{0, 5, 10, 5, 0};
  for (std::size_t i = 0; i < 5; ++i)
    EXPECT_NEAR(r[i], expected[i], 1e-12);
}

TEST(Resample, IdentityWhenLengthsMatch) {
  auto rng = Rng::stream(1, {});
  for (int t = 0; t < 20; ++t) {
    std::vector<double> x(2 + rng.below(100));
    for (auto& v : x)
      v = rng.normal();
    const auto r = resample_channel(x, x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      EXPECT_NEAR(r[i], x[i], 1e-12);
  }
}

TEST(Resample, LinearRampsAndEndpoints) {
  auto rng = Rng::stream(2, {});
  for (int t = 0; t < 50; ++t) {
    const std::size_t N = 2 + rng.below(300), n = 2 + rng.below(300);
    const double a = rng.uniform(-5, 5), b = rng.uniform(-5, 5);
    std::vector<double> x(N);
    for (std::size_t i = 0; i < N; ++i)
      x[i] = a + b * static_cast<double>(i);
    const auto r = resample_channel(x, n);
    ASSERT_EQ(r.size(), n);
    EXPECT_EQ(r.front(), x.front());
    EXPECT_EQ(r.back(), x.back());
    for (std::size_t j = 0; j < n; ++j) {
      const double time = static_cast<double>(j) * static_cast<double>(N - 1) / static_cast<double>(n - 1);
      EXPECT_NEAR(r[j], a + b * time, 1e-12 * std::max(1.0, std::abs(a) + std::abs(b) * N));
    }
  }
}

TEST(Resample, Preconditions) {
  EXPECT_THROW(resample_channel(std::vector<double>{1}, 4), std::invalid_argument);
  EXPECT_THROW(resample_channel(std::vector<double>{1, 2}, 1), std::invalid_argument);
}

TEST(Normalize, SingleChannel) {
  const auto p = normalize(single_group({{1, 2, 3}}), layout_of(1), {3, 1});
  const double s = std::sqrt(2.0 / 3.0);
  EXPECT_NEAR(p.data(0, 0), -1.0 / s, 1e-12);
  EXPECT_NEAR(p.data(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(p.data(0, 2), 1.0 / s, 1e-12);
  EXPECT_NEAR(p.data(0, 0), -1.22474, 1e-5);
}

TEST(Normalize, FlatChannelStaysFlatInSharedGroup) {
  const auto p = normalize(single_group({{1, 2, 3}, {10, 10, 10}}), layout_of(2), {3, 1});
  EXPECT_NEAR(p.data(0, 0), -std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(p.data(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(p.data(0, 2), std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(p.data(0, 2), 1.73205, 1e-5);
  for (std::size_t t = 0; t < 3; ++t)
    EXPECT_EQ(p.data(1, t), 0.0);
}

TEST(Normalize, AllZeroGestureHasNoNaN) {
  const auto p = normalize(single_group({{0, 0, 0, 0}, {0, 0, 0, 0}}), layout_of(2), {5, 1});
  for (double v : p.data.values())
    EXPECT_EQ(v, 0.0);
}

TEST(Normalize, ContractOnRandomGestures) {
  auto rng = Rng::stream(3, {});
  const RecognizerConfig cfg{32, 4};
  for (int t = 0; t < 100; ++t) {
    const auto p = normalize(testing_support::random_gesture(two_rates, rng), two_rates, cfg);
    for (std::size_t r = 0; r < p.channels(); ++r) {
      double mean = 0;
      for (std::size_t c = 0; c < cfg.n; ++c)
        mean += p.data(r, c);
      EXPECT_LE(std::abs(mean / cfg.n), 1e-9);
    }
    for (std::size_t gi = 0; gi < two_rates.group_count(); ++gi) {
      double ss = 0;
      const auto first = two_rates.channel_offset(gi), count = two_rates.group(gi).channel_count;
      for (std::size_t r = first; r < first + count; ++r)
        for (std::size_t c = 0; c < cfg.n; ++c)
          ss += p.data(r, c) * p.data(r, c);
      EXPECT_NEAR(std::sqrt(ss / static_cast<double>(count * cfg.n)), 1.0, 1e-9);
    }
  }
}

TEST(Pca, TwoChannelByHand) {
  ProcessedGesture d{Matrix::from_rows({{1, 0, -1}, {2, 0, -2}})};
  const auto cov = covariance(d.data);
  EXPECT_NEAR(cov(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(cov(0, 1), 2.0, 1e-12);
  EXPECT_NEAR(cov(1, 1), 4.0, 1e-12);
  const auto pca = compute_pca(d, 1);
  EXPECT_NEAR(pca.eigenvalues[0], 5.0, 1e-12);
  EXPECT_NEAR(pca.eigenvalues[1], 0.0, 1e-12);
  EXPECT_NEAR(pca.components(0, 0), 1 / std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(pca.components(1, 0), 2 / std::sqrt(5.0), 1e-12);
  // Dᵀ·u with u = [1, 2]/√5
  ASSERT_EQ(pca.latent_points.size(), 3u);
  EXPECT_NEAR(pca.latent_points[0], std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(pca.latent_points[1], 0.0, 1e-12);
  EXPECT_NEAR(pca.latent_points[2], -std::sqrt(5.0), 1e-12);
}

TEST(Pca, ZeroChannelContributesNothing) {
  ProcessedGesture d{Matrix::from_rows({{1, -1, 0}, {0, 0, 0}})};
  const auto pca = compute_pca(d, 2);
  EXPECT_NEAR(pca.components(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(pca.components(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(pca.eigenvalues[1], 0.0, 1e-12);
}

TEST(Pca, RandomBasisDiagonalizesCovariance) {
  auto rng = Rng::stream(4, {});
  for (int t = 0; t < 20; ++t) {
    ProcessedGesture d{Matrix(6, 64)};
    for (auto& v : d.data.values())
      v = rng.normal();
    const auto pca = compute_pca(d, 6);
    const auto cov = covariance(d.data);
    const auto U = pca.components;
    const auto M = multiply(multiply(U.transposed(), cov), U);
    const auto I = multiply(U.transposed(), U);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) {
        EXPECT_NEAR(I(i, j), i == j ? 1.0 : 0.0, 1e-8);
        if (i != j)
          EXPECT_NEAR(M(i, j), 0.0, 1e-8);
        else
          EXPECT_NEAR(M(i, i), pca.eigenvalues[i], 1e-8);
      }
  }
}

TEST(Pca, TooManyComponents) {
  ProcessedGesture d{Matrix(2, 5, 1.0)};
  EXPECT_THROW(compute_pca(d, 3), std::invalid_argument);
  EXPECT_THROW(enroll(single_group({{1, 2, 3}}), layout_of(1), {8, 2}), std::invalid_argument);
}

TEST(Distance, Examples) {
  EXPECT_EQ(path_distance(std::vector<double>{1, 2}, std::vector<double>{1, 2}), 0.0);
  EXPECT_EQ(path_distance(std::vector<double>{0, 0}, std::vector<double>{1, -2}), 3.0);
  EXPECT_THROW(path_distance(std::vector<double>{0}, std::vector<double>{1, -2}), std::invalid_argument);
}

TEST(Recognize, SelfMatchAmongFive) {
  auto rng = Rng::stream(5, {});
  const RecognizerConfig cfg{32, 6};
  std::vector<RawGesture> gs;
  std::vector<LatentTemplate> ts;
  for (int i = 0; i < 5; ++i) {
    gs.push_back(testing_support::random_gesture(two_rates, rng, "c" + std::to_string(i)));
    ts.push_back(enroll(gs.back(), two_rates, cfg));
  }
  const auto r = recognize(gs[2], ts, two_rates, cfg);
  EXPECT_EQ(r.matched_template_index, 2u);
  EXPECT_EQ(r.matched_label, "c2");
  EXPECT_LE(r.distance, 1e-9);
  EXPECT_EQ(r.all_distances.size(), 5u);
}

TEST(Recognize, FirstMinimumWinsTies) {
  auto rng = Rng::stream(6, {});
  const RecognizerConfig cfg{16, 3};
  const auto g = testing_support::random_gesture(two_rates, rng);
  auto a = enroll(g, two_rates, cfg);
  auto b = a;
  a.label = "first";
  b.label = "second";
  const std::vector<LatentTemplate> ts{a, b};
  const auto r = recognize(g, ts, two_rates, cfg);
  EXPECT_EQ(r.matched_template_index, 0u);
  EXPECT_EQ(r.matched_label, "first");
}

TEST(Recognize, NoTemplates) {
  auto rng = Rng::stream(7, {});
  const auto g = testing_support::random_gesture(two_rates, rng);
  EXPECT_THROW(recognize(g, std::vector<LatentTemplate>{}, two_rates, {16, 3}), DataError);
}

TEST(Recognize, MismatchedTemplateRejected) {
  auto rng = Rng::stream(8, {});
  const auto g = testing_support::random_gesture(two_rates, rng);
  const std::vector<LatentTemplate> ts{enroll(g, two_rates, {16, 3})};
  EXPECT_THROW(recognize(g, ts, two_rates, {32, 3}), DataError);
}

TEST(Invariance, GroupScalingLeavesTemplateUnchanged) {
  auto rng = Rng::stream(9, {});
  const RecognizerConfig cfg{32, 5};
  for (int t = 0; t < 20; ++t) {
    const auto g = testing_support::random_gesture(two_rates, rng);
    const auto base = enroll(g, two_rates, cfg);
    const auto scaled = enroll(scaled_group(g, t % 2, 10.0), two_rates, cfg);
    for (std::size_t i = 0; i < base.points.size(); ++i)
      EXPECT_NEAR(scaled.points[i], base.points[i], 1e-9 * std::max(1.0, std::abs(base.points[i])));
    for (std::size_t i = 0; i < base.components.values().size(); ++i)
      EXPECT_NEAR(scaled.components.values()[i], base.components.values()[i], 1e-9);
  }
}

TEST(Invariance, OffsetPerChannelIsRemoved) {
  auto rng = Rng::stream(10, {});
  const RecognizerConfig cfg{32, 4};
  const auto g = testing_support::random_gesture(two_rates, rng);
  auto shifted = g;
  for (auto& grp : shifted.signals)
    for (auto& ch : grp) {
      const double off = rng.uniform(-100, 100);
      for (auto& v : ch)
        v += off;
    }
  const std::vector<LatentTemplate> ts{enroll(g, two_rates, cfg)};
  EXPECT_LE(recognize(shifted, ts, two_rates, cfg).distance, 1e-7);
}

TEST(Invariance, MirroredGestureIsDistinct) {
  auto rng = Rng::stream(11, {});
  const RecognizerConfig cfg{32, 4};
  const auto g = testing_support::random_gesture(two_rates, rng, "plain");
  auto m = scaled_group(scaled_group(g, 0, -1.0), 1, -1.0);
  m.label = "mirror";
  const std::vector<LatentTemplate> ts{enroll(g, two_rates, cfg), enroll(m, two_rates, cfg)};
  const auto r = recognize(m, ts, two_rates, cfg);
  EXPECT_EQ(r.matched_label, "mirror");
  EXPECT_GT(r.all_distances[0], 1e-3);
}

TEST(Invariance, SpeedChangeCollapsesAfterResampling) {
  // N = 127 samples compressed ×2 to 64: every compressed node lands on an
  // original node, and with n = 64 nodes both resample to the same points.
  BiosignalLayout layout({{"s", 3, 126.0}});
  RawGesture slow{"g", "p", Condition::personalized, 0, {{}}}, fast = slow;
  for (std::size_t k = 0; k < 3; ++k) {
    Channel a(127), b(64);
    for (std::size_t i = 0; i < 127; ++i)
      a[i] = std::sin(0.05 * i * (k + 1)) + 0.01 * i * i;
    for (std::size_t i = 0; i < 64; ++i)
      b[i] = a[2 * i];
    slow.signals[0].push_back(a);
    fast.signals[0].push_back(b);
  }
  const RecognizerConfig cfg{64, 3};
  const std::vector<LatentTemplate> ts{enroll(slow, layout, cfg)};
  EXPECT_LE(recognize(fast, ts, layout, cfg).distance, 1e-9);
}

TEST(BruteForce, MatchesStraightLineOracle) {
  auto rng = Rng::stream(12, {});
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t c1 = 1 + rng.below(2), c2 = 1 + rng.below(2);
    BiosignalLayout layout({{"a", c1, 50.0}, {"b", c2, 20.0}});
    const std::size_t c = c1 + c2;
    const std::size_t n = c + 2 + rng.below(8 - c - 1);
    const RecognizerConfig cfg{n, c};
    std::vector<RawGesture> raw;
    std::vector<LatentTemplate> ts;
    std::vector<oracle::Groups> og;
    for (int i = 0; i < 5; ++i) {
      raw.push_back(testing_support::random_gesture(layout, rng));
      ts.push_back(enroll(raw.back(), layout, cfg));
      og.push_back(as_groups(raw.back()));
    }
    const auto cand = testing_support::random_gesture(layout, rng);
    const auto got = recognize(cand, ts, layout, cfg);
    const auto want = oracle::distances(og, as_groups(cand), static_cast<int>(n), static_cast<int>(c));
    for (std::size_t i = 0; i < want.size(); ++i)
      EXPECT_NEAR(got.all_distances[i], want[i], 1e-8 * std::max(1.0, want[i]));
    const auto a = oracle::ranking(got.all_distances), b = oracle::ranking(want);
    EXPECT_EQ(a, b);
  }
}
