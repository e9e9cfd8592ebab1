#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "rebec/param_space.hpp"

using namespace rebec;

namespace {

std::size_t stratum_of(double x, const interval& r, std::size_t n) {
  const auto s = static_cast<std::size_t>(std::floor((x - r.lo) / r.width() * double(n)));
  return std::min(s, n - 1);
}

}  // namespace

TEST(ParamSpace, DefaultsLieStrictlyInsideBounds) {
  const parameter_bounds b;
  const auto d = default_configuration();
  EXPECT_EQ(d, (parameter_vector{1.0, 0.015, 0.00302}));
  for (std::size_t i = 0; i < parameter_count; ++i) {
    EXPECT_LT(b[i].lo, d[i]);
    EXPECT_GT(b[i].hi, d[i]);
  }
}

TEST(ParamSpace, LhsOneDimensionFourStrata) {
  parameter_bounds b;
  b[0] = {0.0, 1.0};
  const auto s = lhs_sample(4, b, 3);
  ASSERT_EQ(s.size(), 4u);
  std::vector<double> xs;
  for (const auto& p : s) xs.push_back(p.drg);
  std::sort(xs.begin(), xs.end());
  EXPECT_LT(xs[0], 0.25);
  EXPECT_GE(xs[1], 0.25);
  EXPECT_LT(xs[1], 0.5);
  EXPECT_GE(xs[2], 0.5);
  EXPECT_LT(xs[2], 0.75);
  EXPECT_GE(xs[3], 0.75);
  EXPECT_LE(xs[3], 1.0);
}

TEST(ParamSpace, LhsSingleSampleInsideBounds) {
  const parameter_bounds b;
  const auto s = lhs_sample(1, b, 99);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_TRUE(b.contains(s[0]));
}

TEST(ParamSpace, LhsIsDeterministicPerSeed) {
  const parameter_bounds b;
  EXPECT_EQ(lhs_sample(20, b, 42), lhs_sample(20, b, 42));
  EXPECT_NE(lhs_sample(20, b, 42), lhs_sample(20, b, 43));
}

TEST(ParamSpace, LhsErrors) {
  EXPECT_THROW(lhs_sample(0, parameter_bounds{}, 1), config_error);
  parameter_bounds bad;
  bad[1] = {0.2, 0.1};
  EXPECT_THROW(lhs_sample(5, bad, 1), config_error);
  parameter_bounds log_bad;
  log_bad.log_scale = true;
  log_bad[0] = {0.0, 1.0};
  EXPECT_THROW(lhs_sample(5, log_bad, 1), config_error);
}

// Every dimension's stratum indices form a permutation of 0..n-1.
TEST(ParamSpace, LhsStratificationPropertyOverSeeds) {
  const parameter_bounds b;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const std::size_t n = 1 + seed % 37;
    const auto s = lhs_sample(n, b, seed);
    ASSERT_EQ(s.size(), n);
    for (std::size_t dim = 0; dim < parameter_count; ++dim) {
      std::vector<std::size_t> strata;
      for (const auto& p : s) {
        ASSERT_TRUE(p.is_finite());
        ASSERT_TRUE(b[dim].contains(p[dim]));
        strata.push_back(stratum_of(p[dim], b[dim], n));
      }
      std::sort(strata.begin(), strata.end());
      for (std::size_t k = 0; k < n; ++k) ASSERT_EQ(strata[k], k) << "seed " << seed << " dim " << dim;
    }
  }
}

TEST(ParamSpace, LogScaledLhsStratifiesInLogSpace) {
  parameter_bounds b;
  b.log_scale = true;
  const std::size_t n = 10;
  const auto s = lhs_sample(n, b, 5);
  for (std::size_t dim = 0; dim < parameter_count; ++dim) {
    const interval logr{std::log10(b[dim].lo), std::log10(b[dim].hi)};
    std::vector<std::size_t> strata;
    for (const auto& p : s) strata.push_back(stratum_of(std::log10(p[dim]), logr, n));
    std::sort(strata.begin(), strata.end());
    for (std::size_t k = 0; k < n; ++k) EXPECT_EQ(strata[k], k);
  }
}

TEST(ParamSpace, ClampCases) {
  const parameter_bounds b;
  const auto d = default_configuration();
  EXPECT_EQ(clamp(d, b), d);

  auto low = d;
  low.drg = 0.01;
  const auto c = clamp(low, b);
  EXPECT_EQ(c.drg, b[0].lo);
  EXPECT_EQ(c.cfw, d.cfw);
  EXPECT_EQ(c.stpm, d.stpm);

  const auto hi = clamp({50.0, 50.0, 50.0}, b);
  EXPECT_EQ(hi, (parameter_vector{b[0].hi, b[1].hi, b[2].hi}));
}

TEST(ParamSpace, ClampIsIdempotent) {
  const parameter_bounds b;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> wide(-5.0, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const parameter_vector p{wide(rng), wide(rng) * 0.1, wide(rng) * 0.01};
    const auto once = clamp(p, b);
    EXPECT_EQ(clamp(once, b), once);
    EXPECT_TRUE(b.contains(once));
  }
}

TEST(ParamSpace, ParameterNames) {
  EXPECT_EQ(parameter_index("drg"), 0u);
  EXPECT_EQ(parameter_index("cfw"), 1u);
  EXPECT_EQ(parameter_index("stpm"), 2u);
  EXPECT_THROW(parameter_index("drf"), config_error);
}
