#include "tiltlab/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

using namespace tiltlab;

// Known-answer vector of Philox-4x32-10 for counter 0 and key 0, packed two
// words per 64-bit draw (low word first).
TEST(Philox, KnownAnswerZeroKeyZeroCounter) {
  Philox4x32 g(0, 0);
  EXPECT_EQ(g(), 0xe169c58d6627e8d5ull);
  EXPECT_EQ(g(), 0x9b00dbd8bc57ac4cull);
}

TEST(Philox, DeterministicAndStreamSeparated) {
  Philox4x32 a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto va = a();
    EXPECT_EQ(va, b());
    const auto vc = c(), vd = d();
    EXPECT_NE(va, vc);
    EXPECT_NE(va, vd);
    seen.insert(va);
  }
  EXPECT_EQ(seen.size(), 1000u);
}

TEST(Philox, DerivedStreamsDistinct) {
  std::set<std::uint64_t> ids;
  for (std::uint64_t parent : {0ull, 1ull, 99ull}) {
    for (std::uint64_t i = 0; i < 200; ++i) ids.insert(derive_stream(parent, i));
  }
  EXPECT_EQ(ids.size(), 600u);
  EXPECT_EQ(derive_stream(5, 3), derive_stream(5, 3));
}

TEST(Rng, UniformAndNormalMoments) {
  Rng rng(2024, 0);
  const int N = 200000;
  double su = 0, su2 = 0, sn = 0, sn2 = 0, sn4 = 0;
  for (int i = 0; i < N; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u, su2 += u * u;
    const double z = rng.normal();
    sn += z, sn2 += z * z, sn4 += z * z * z * z;
  }
  // Five-sigma windows.
  EXPECT_NEAR(su / N, 0.5, 5 * std::sqrt(1.0 / 12 / N));
  EXPECT_NEAR(su2 / N, 1.0 / 3, 5 * std::sqrt(4.0 / 45 / N));
  EXPECT_NEAR(sn / N, 0.0, 5 / std::sqrt(N));
  EXPECT_NEAR(sn2 / N, 1.0, 5 * std::sqrt(2.0 / N));
  EXPECT_NEAR(sn4 / N, 3.0, 5 * std::sqrt(96.0 / N));
}

TEST(Rng, BelowCoversRangeUniformly) {
  Rng rng(3, 1);
  std::vector<int> counts(7, 0);
  const int N = 70000;
  for (int i = 0; i < N; ++i) {
    const auto k = rng.below(7);
    ASSERT_LT(k, 7u);
    ++counts[k];
  }
  for (int c : counts) EXPECT_NEAR(c, N / 7.0, 5 * std::sqrt(N / 7.0));
}

TEST(Rng, ChildStreamsReproducible) {
  Rng parent(9, 4);
  Rng c1 = parent.child(2), c2 = parent.child(2), c3 = parent.child(3);
  const double v1 = c1.uniform();
  EXPECT_EQ(v1, c2.uniform());
  EXPECT_NE(v1, c3.uniform());
}
