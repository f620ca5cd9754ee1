#include <gtest/gtest.h>

#include <atomic>
#include <numeric>

#include "noah/common.hpp"

using namespace noah;

TEST(Common, FmtDoubleRoundTrips) {
  for (double v : {0.0, -0.0, 1.0, 0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5e-7}) {
    const auto s = fmt_double(v);
    EXPECT_EQ(parse_double(s, "test"), v) << s;
  }
}

TEST(Common, ParseDoubleRejectsGarbage) {
  EXPECT_THROW(parse_double("1.5x", "here"), ParseError);
  EXPECT_THROW(parse_double("", "here"), ParseError);
  EXPECT_DOUBLE_EQ(parse_double("  2.5 \r", "here"), 2.5);
}

TEST(Common, SplitKeepsEmptyFields) {
  const auto f = split("a,,b,", ',');
  ASSERT_EQ(f.size(), 4u);
  EXPECT_EQ(f[1], "");
  EXPECT_EQ(f[3], "");
}

TEST(Common, DerivedStreamsDiffer) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  Rng a = make_stream(5, 9), b = make_stream(5, 9);
  EXPECT_EQ(a(), b());
}

TEST(Common, Uniform01InRange) {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = uniform01(rng);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Common, ParallelForCoversEveryIndexOnce) {
  for (unsigned w : {1u, 2u, 3u, 8u}) {
    std::vector<std::atomic<int>> hits(101);
    Executor(w).parallel_for(hits.size(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) hits[i]++;
    });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
}

TEST(Common, CompensatedSumBeatsNaive) {
  CompensatedSum s;
  s.add(1e16);
  for (int i = 0; i < 1000; ++i) s.add(1.0);
  s.add(-1e16);
  EXPECT_EQ(s.value(), 1000.0);
}

TEST(Common, DotChecksLength) {
  std::vector<double> a{1, 2}, b{1};
  EXPECT_THROW(dot(a, b), DimensionError);
}

TEST(Common, FnvIsStable) {
  EXPECT_EQ(hash_string("abc"), hash_string("abc"));
  EXPECT_NE(hash_string("abc"), hash_string("abd"));
  Fnv1a h;
  h.add(std::string_view("x"));
  EXPECT_EQ(h.hex().size(), 16u);
}

TEST(Common, ErrorCodes) {
  EXPECT_STREQ(ParseError("x").code(), "parse_error");
  EXPECT_STREQ(ValidationError("x").code(), "validation_error");
  EXPECT_STREQ(DimensionError("x").code(), "dimension_error");
  EXPECT_STREQ(ContractError("x").code(), "contract_error");
}
