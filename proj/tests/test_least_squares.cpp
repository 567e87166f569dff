#include <gtest/gtest.h>

#include <random>

#include "jjuniform/least_squares.hpp"

using namespace jju;

TEST(Polyfit, ExactParabola) {
  std::vector<double> x, y;
  for (int i = 0; i < 12; ++i) {
    x.push_back(4.0 * i);
    y.push_back(3.5 - 0.02 * x.back() - 0.0007 * x.back() * x.back());
  }
  const auto c = lsq::polyfit(x, y, 2);
  EXPECT_NEAR(c[0], 3.5, 1e-12);
  EXPECT_NEAR(c[1], -0.02, 1e-13);
  EXPECT_NEAR(c[2], -0.0007, 1e-14);
}

TEST(Polyfit, ConstantData) {
  const std::vector<double> x{0, 1, 4, 9, 16}, y(5, 1500.0);
  const auto c = lsq::polyfit(x, y, 2);
  EXPECT_NEAR(c[0], 1500.0, 1e-10);
  EXPECT_NEAR(c[1], 0.0, 1e-10);
  EXPECT_NEAR(c[2], 0.0, 1e-11);
}

TEST(Polyfit, MatchesNormalEquationsOnNoisyLine) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> x, y;
  for (int i = 0; i < 50; ++i) {
    x.push_back(100.0 + 5.0 * (i % 16));
    y.push_back(0.6 * x.back() - 20.0 + n(rng));
  }
  const auto f = lsq::fit_line(x, y);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double m = static_cast<double>(x.size());
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  EXPECT_NEAR(f.slope, slope, 1e-10);
  EXPECT_NEAR(f.intercept, (sy - slope * sx) / m, 1e-8);
}

TEST(Polyfit, Underdetermined) {
  const std::vector<double> x{2, 2, 2, 5}, y{1, 2, 3, 4};
  EXPECT_THROW(lsq::polyfit(x, y, 2), Underdetermined);
  EXPECT_NO_THROW(lsq::polyfit(x, y, 1));
  const std::vector<double> one{7, 7, 7};
  EXPECT_THROW(lsq::fit_line(one, std::vector<double>{1, 2, 3}), Underdetermined);
  EXPECT_THROW(lsq::polyfit(x, one, 1), DataError);
}

TEST(Statistics, MeanAndDeviation) {
  const std::vector<double> same(7, 0.1);
  EXPECT_EQ(lsq::shifted_mean(same), 0.1);
  EXPECT_EQ(lsq::population_stddev(same, 0.1), 0.0);
  const std::vector<double> v{90.0, 110.0};
  EXPECT_DOUBLE_EQ(lsq::shifted_mean(v), 100.0);
  EXPECT_DOUBLE_EQ(lsq::population_stddev(v, 100.0), 10.0);
  EXPECT_DOUBLE_EQ(lsq::sample_stddev(v), std::sqrt(200.0));
  EXPECT_EQ(lsq::sample_stddev(std::vector<double>{4.0}), 0.0);
  EXPECT_EQ(lsq::distinct_count(std::vector<double>{1, 2, 2, 3, 1}), 3u);
}
