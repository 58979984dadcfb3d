#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "confts/adaptive.hpp"
#include "confts/error.hpp"
#include "confts/random.hpp"

namespace confts {
namespace {

TEST(AciTest, WorkedUpdates) {
  AciState s(0.1, 0.005, 3);
  EXPECT_EQ(s.alphas, (std::vector<double>{0.1, 0.1, 0.1}));
  aci_update(s, 0, true);
  EXPECT_DOUBLE_EQ(s.alphas[0], 0.1005);
  aci_update(s, 1, false);
  EXPECT_DOUBLE_EQ(s.alphas[1], 0.0955);
  EXPECT_EQ(s.alphas[2], 0.1);
}

TEST(AciTest, ClampsAtZeroAndOne) {
  AciState s(0.1, 0.005, 1);
  s.alphas[0] = 0.002;
  aci_update(s, 0, false);
  EXPECT_EQ(s.alphas[0], 0.0);
  AciState up(0.9, 0.5, 1);
  up.alphas[0] = 0.8;
  aci_update(up, 0, true);
  EXPECT_EQ(up.alphas[0], 1.0);
}

TEST(AciTest, TelescopesWithoutClamp) {
  Rng rng(6);
  AciState s(0.1, 0.001, 1);
  int misses = 0;
  const int n = 500;
  for (int t = 0; t < n; ++t) {
    const bool covered = rng.uniform() > 0.1;
    misses += covered ? 0 : 1;
    aci_update(s, 0, covered);
  }
  EXPECT_NEAR(s.alphas[0], 0.1 + 0.001 * (n * 0.1 - misses), 1e-12);
}

TEST(AciTest, InitGamma) {
  EXPECT_DOUBLE_EQ(init_gamma(100, 932), 1.0 / 932);
  EXPECT_DOUBLE_EQ(init_gamma(100, 50), 1.0 / 100);
  EXPECT_DOUBLE_EQ(init_gamma(100, 100), 0.01);
  EXPECT_THROW(init_gamma(0, 5), Error);
}

TEST(SlidingWindowTest, Fifo) {
  SlidingScoreWindow w(3, std::vector<double>{1, 2, 3});
  EXPECT_EQ(slide(w, 4).contents(), (std::vector<double>{2, 3, 4}));
  SlidingScoreWindow one(1, std::vector<double>{9});
  EXPECT_EQ(slide(one, 5).contents(), (std::vector<double>{5}));
}

TEST(SlidingWindowTest, KeepsLastCapacityPushes) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t cap = 1 + rng.below(10);
    SlidingScoreWindow w(cap);
    std::vector<double> pushed;
    const std::size_t k = rng.below(40);
    for (std::size_t i = 0; i < k; ++i) {
      pushed.push_back(rng.normal());
      w.push(pushed.back());
      ASSERT_LE(w.size(), cap);
    }
    const std::size_t keep = std::min(cap, pushed.size());
    EXPECT_EQ(w.contents(), std::vector<double>(pushed.end() - static_cast<std::ptrdiff_t>(keep), pushed.end()));
  }
}

TEST(SampleTest, SizeContractAndDistinctness) {
  std::vector<double> v(1000);
  for (int i = 0; i < 1000; ++i) v[i] = i;
  const auto w = sample_without_replacement(ScoreSet(v), 100, 42);
  EXPECT_EQ(w.capacity(), 100u);
  const auto c = w.contents();
  ASSERT_EQ(c.size(), 100u);
  EXPECT_EQ(std::set<double>(c.begin(), c.end()).size(), 100u);
  EXPECT_TRUE(std::is_sorted(c.begin(), c.end()));  // original order preserved
  EXPECT_EQ(sample_without_replacement(ScoreSet(v), 100, 42).contents(), c);
}

TEST(SampleTest, SmallSetsKeptWhole) {
  std::vector<double> v{3, 1, 2};
  const auto w = sample_without_replacement(ScoreSet(v), 100, 1);
  EXPECT_EQ(w.capacity(), 3u);
  EXPECT_EQ(w.contents(), v);
  EXPECT_THROW(sample_without_replacement(ScoreSet{}, 10, 1), Error);
}

TEST(SampleTest, InclusionFrequencyIsUniform) {
  // Each element should appear with probability T/n = 0.25.
  const std::size_t n = 40, t = 10, seeds = 20000;
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(i);
  std::vector<std::size_t> hits(n, 0);
  for (std::size_t s = 0; s < seeds; ++s) {
    for (double x : sample_without_replacement(ScoreSet(v), t, s).contents()) ++hits[static_cast<std::size_t>(x)];
  }
  // Binomial sd at p = 0.25 over 20000 draws is ~61 counts; allow 5 sd.
  for (auto h : hits) EXPECT_NEAR(static_cast<double>(h), 5000.0, 310.0);
}

}  // namespace
}  // namespace confts
