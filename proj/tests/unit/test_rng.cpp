#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "dtg/errors.hpp"
#include "dtg/rng.hpp"
#include "test_support.hpp"

namespace dtg {
namespace {

TEST(UniformIndex, ExtremeWordsMapToEnds) {
  testing::ScriptedSource lo({testing::kMinWord});
  testing::ScriptedSource hi({testing::kMaxWord});
  for (std::size_t n : {1u, 2u, 7u, 1000u}) {
    EXPECT_EQ(uniform_index(lo, n), 0u);
    EXPECT_EQ(uniform_index(hi, n), n - 1);
  }
  EXPECT_THROW(uniform_index(lo, 0), InvalidArgument);
}

TEST(UniformIndex, CoversRange) {
  Rng rng(1);
  std::set<std::size_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const std::size_t k = rng.index(10);
    ASSERT_LT(k, 10u);
    seen.insert(k);
  }
  EXPECT_EQ(seen.size(), 10u);
}

TEST(Uniform01, HalfOpenUnitInterval) {
  testing::ScriptedSource lo({testing::kMinWord});
  testing::ScriptedSource hi({testing::kMaxWord});
  EXPECT_EQ(uniform01(lo), 0.0);
  EXPECT_LT(uniform01(hi), 1.0);
}

TEST(StandardNormal, FiniteAtExtremesAndMoments) {
  testing::ScriptedSource lo({testing::kMinWord});
  EXPECT_TRUE(std::isfinite(standard_normal(lo)));
  Rng rng(2);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Streams, DeterministicAndDistinct) {
  Rng a = Rng::stream(7, "corpus");
  Rng b = Rng::stream(7, "corpus");
  Rng c = Rng::stream(7, "teacher");
  Rng d = Rng::stream(8, "corpus");
  Rng e = Rng::stream(7, "corpus", {1});
  const auto first = a.next_u64();
  EXPECT_EQ(first, b.next_u64());
  EXPECT_NE(first, c.next_u64());
  EXPECT_NE(first, d.next_u64());
  EXPECT_NE(first, e.next_u64());
  EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
  EXPECT_EQ(stream_tag("x"), stream_tag("x"));
  EXPECT_NE(stream_tag("x"), stream_tag("y"));
}

}  // namespace
}  // namespace dtg
