#include "dcgd/rng.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

namespace {

TEST(Rng, StreamsAreDeterministic) {
  dcgd::RngStream a(dcgd::stream_key(42, "noise", 3, 17));
  dcgd::RngStream b(dcgd::stream_key(42, "noise", 3, 17));
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, DistinctAddressesDiffer) {
  dcgd::RngStream a(dcgd::stream_key(42, "noise", 3, 17));
  dcgd::RngStream b(dcgd::stream_key(42, "noise", 3, 18));
  dcgd::RngStream c(dcgd::stream_key(42, "delay", 3, 17));
  EXPECT_NE(a.next_u64(), b.next_u64());
  dcgd::RngStream a2(dcgd::stream_key(42, "noise", 3, 17));
  EXPECT_NE(a2.next_u64(), c.next_u64());
}

// one stream's samples do not depend on whether, or when, other streams are
// consumed
TEST(Rng, StreamsAreIndependentOfConsumptionOrder) {
  std::vector<double> noise_first, noise_second;
  {
    for (int t = 0; t < 20; ++t) {
      dcgd::RngStream s(dcgd::stream_key(7, "noise", 0, static_cast<std::uint64_t>(t)));
      noise_first.push_back(s.next_gaussian());
    }
    for (int t = 0; t < 20; ++t) {
      dcgd::RngStream s(dcgd::stream_key(7, "delay", 0, static_cast<std::uint64_t>(t)));
      (void)s.next_u64();
    }
  }
  {
    // interleave delay draws and add a brand-new stream in between
    for (int t = 0; t < 20; ++t) {
      dcgd::RngStream d(dcgd::stream_key(7, "delay", 0, static_cast<std::uint64_t>(t)));
      (void)d.next_u64();
      dcgd::RngStream extra(dcgd::stream_key(7, "extra", 0, static_cast<std::uint64_t>(t)));
      (void)extra.next_double();
      dcgd::RngStream s(dcgd::stream_key(7, "noise", 0, static_cast<std::uint64_t>(t)));
      noise_second.push_back(s.next_gaussian());
    }
  }
  ASSERT_EQ(noise_first.size(), noise_second.size());
  for (std::size_t i = 0; i < noise_first.size(); ++i)
    EXPECT_EQ(noise_first[i], noise_second[i]);  // bitwise
}

TEST(Rng, GaussianMoments) {
  dcgd::RngStream s(dcgd::stream_key(123, "gauss"));
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = s.next_gaussian();
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  EXPECT_NEAR(mean, 0.0, 4.0 / std::sqrt(static_cast<double>(n)));
  EXPECT_NEAR(var, 1.0, 0.02);
}

TEST(Rng, FillGaussianMatchesOddAndEvenLengths) {
  dcgd::RngStream s(dcgd::stream_key(9, "fill"));
  Eigen::VectorXd v(7);
  s.fill_gaussian(v);
  EXPECT_TRUE(v.allFinite());
}

TEST(Rng, UniformIntRange) {
  dcgd::RngStream s(dcgd::stream_key(5, "int"));
  for (int i = 0; i < 1000; ++i) {
    const auto v = s.next_int(1, 5);
    EXPECT_GE(v, 1);
    EXPECT_LE(v, 5);
  }
}

}  // namespace
