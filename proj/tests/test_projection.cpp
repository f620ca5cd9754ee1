#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "noah/projection.hpp"
#include "oracles.hpp"

using namespace noah;

namespace {

double norm2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

void expect_feasible(const std::vector<double>& a, double cap) {
  double s = 0.0;
  for (double v : a) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    s += v;
  }
  EXPECT_LE(s, cap + 1e-12);
}

std::vector<double> random_z(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> d(-1.5, 2.5);
  std::vector<double> z(n);
  for (auto& v : z) v = d(rng);
  return z;
}

}  // namespace

TEST(Projection, AlreadyFeasible) {
  std::vector<double> z{0.2, 0.3};
  EXPECT_EQ(project_boxcut(z, BoxCut(2, 2)), z);
}

TEST(Projection, ClipAlone) {
  std::vector<double> z{2, 2};
  EXPECT_EQ(project_boxcut(z, BoxCut(2, 2)), (std::vector<double>{1, 1}));
}

TEST(Projection, WaterLevel) {
  std::vector<double> z{0.9, 0.8, 0.5};
  const auto a = project_boxcut(z, BoxCut(3, 1));
  EXPECT_NEAR(a[0], 0.5, 1e-15);
  EXPECT_NEAR(a[1], 0.4, 1e-15);
  EXPECT_NEAR(a[2], 0.1, 1e-15);
}

TEST(Projection, DimensionMismatch) {
  std::vector<double> z{1, 2, 3};
  EXPECT_THROW(project_boxcut(z, BoxCut(2, 1)), DimensionError);
  EXPECT_THROW(BoxCut(0, 1), ValidationError);
  EXPECT_THROW(BoxCut(2, 0), ValidationError);
}

TEST(Projection, CapAboveDimIsClip) {
  std::vector<double> z{3, -1, 0.5};
  EXPECT_EQ(project_boxcut(z, BoxCut(3, 5)), (std::vector<double>{1, 0, 0.5}));
}

TEST(Projection, MatchesEnumerationOracle) {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> dim(1, 4);
  std::uniform_real_distribution<double> capd(0.2, 4.0);
  for (int t = 0; t < 2000; ++t) {
    const auto n = static_cast<std::size_t>(dim(rng));
    const double cap = t % 2 ? std::floor(capd(rng)) + 1.0 : capd(rng);
    const auto z = random_z(rng, n);
    const auto got = project_boxcut(z, BoxCut(n, cap));
    const auto want = oracle::project_by_enumeration(z, cap);
    ASSERT_EQ(want.size(), n);
    for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(got[j], want[j], 1e-8);
  }
}

TEST(Projection, MatchesBisectionOnWaterLevel) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 2 + t % 30;
    const auto z = random_z(rng, n);
    const double cap = 1.0 + t % 3;
    auto f = [&](double mu) {
      double s = 0.0;
      for (double v : z) s += std::clamp(v - mu, 0.0, 1.0);
      return s;
    };
    const auto got = project_boxcut(z, BoxCut(n, cap));
    if (f(0.0) <= cap) continue;
    double lo = 0.0, hi = 10.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) > cap ? lo : hi) = mid;
    }
    for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(got[j], std::clamp(z[j] - hi, 0.0, 1.0), 1e-12);
  }
}

TEST(Projection, CapHoldsTightly) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> big(-1e6, 1e6);
  for (int t = 0; t < 2000; ++t) {
    std::vector<double> z(1 + t % 20);
    for (auto& v : z) v = t % 3 ? big(rng) : 0.5 + 1e-3 * big(rng) * 1e-6;
    const double cap = 1.0 + t % 4;
    expect_feasible(project_boxcut(z, BoxCut(z.size(), cap)), cap);
  }
}

TEST(Projection, Idempotent) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 10000; ++t) {
    const std::size_t n = 1 + t % 8;
    const double cap = 0.5 + t % 4;
    const auto z = random_z(rng, n);
    const auto a = project_boxcut(z, BoxCut(n, cap));
    const auto b = project_boxcut(a, BoxCut(n, cap));
    for (std::size_t j = 0; j < n; ++j) ASSERT_NEAR(a[j], b[j], 1e-12);
  }
}

TEST(Projection, NonExpansive) {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 10000; ++t) {
    const std::size_t n = 1 + t % 8;
    const double cap = 0.5 + t % 4;
    const auto z1 = random_z(rng, n), z2 = random_z(rng, n);
    const BoxCut box(n, cap);
    ASSERT_LE(norm2(project_boxcut(z1, box), project_boxcut(z2, box)), norm2(z1, z2) + 1e-12);
  }
}

TEST(Projection, VariationalInequality) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + t % 6;
    const double cap = 1.0 + t % 3;
    const auto z = random_z(rng, n);
    const auto a = project_boxcut(z, BoxCut(n, cap));
    for (int k = 0; k < 100; ++k) {
      std::vector<double> v(n);
      double s = 0.0;
      for (auto& x : v) s += (x = u01(rng));
      if (s > cap)
        for (auto& x : v) x *= cap / s;
      double ip = 0.0;
      for (std::size_t j = 0; j < n; ++j) ip += (z[j] - a[j]) * (v[j] - a[j]);
      ASSERT_LE(ip, 1e-9);
    }
  }
}
