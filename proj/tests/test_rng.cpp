#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "marcus/rng.hpp"

using namespace marcus;

TEST(SplitMix, MatchesReferenceOutput) {
  // First output of the reference splitmix64 generator seeded with 0.
  EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafULL);
}

TEST(StreamKey, DistinctAcrossCoordinates) {
  std::set<std::uint64_t> keys;
  for (std::uint64_t p = 0; p < 20; ++p) {
    for (std::uint64_t s = 0; s < 20; ++s) {
      keys.insert(stream_key(1, p, s, Substream::brownian));
      keys.insert(stream_key(1, p, s, Substream::levy));
      keys.insert(stream_key(2, p, s, Substream::brownian));
    }
  }
  EXPECT_EQ(keys.size(), 3u * 400u);
}

TEST(CounterRng, DeterministicAndOpenInterval) {
  CounterRng a(9, 3, 5, Substream::levy), b(9, 3, 5, Substream::levy);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(a(), b());
    const double u = a.uniform();
    b.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(CounterRng, UniformMoments) {
  CounterRng rng(42, 0, 0, Substream::probe);
  const int n = 1000000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    s += u;
    s2 += u * u;
  }
  const double mean = s / n;
  EXPECT_NEAR(mean, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(s2 / n - mean * mean, 1.0 / 12.0, 1e-3);
}

TEST(CounterRng, PlugsIntoStdDistributions) {
  CounterRng rng(7, 1, 2, Substream::exact);
  std::poisson_distribution<int> pd(3.0);
  const int n = 200000;
  double s = 0;
  for (int i = 0; i < n; ++i) s += pd(rng);
  EXPECT_NEAR(s / n, 3.0, 4.0 * std::sqrt(3.0 / n));
}

TEST(IndexedNormal, MomentsAndRandomAccess) {
  const int n = 1000000;
  double s = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = indexed_normal(5, 0, static_cast<std::uint64_t>(i), Substream::brownian);
    s += z;
    s2 += z * z;
    s4 += z * z * z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s4 / n, 3.0, 4.0 * std::sqrt(96.0 / n));
  EXPECT_EQ(indexed_normal(5, 0, 12345, Substream::brownian),
            indexed_normal(5, 0, 12345, Substream::brownian));
  EXPECT_NE(indexed_normal(5, 0, 12344, Substream::brownian),
            indexed_normal(5, 0, 12345, Substream::brownian));
}
