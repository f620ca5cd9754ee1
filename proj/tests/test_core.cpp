#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "noah/core.hpp"

using namespace noah;

namespace {

ProblemInstance load_text(const std::string& text, InstanceFormat f = InstanceFormat::Columnar, Budgets b = {}) {
  std::istringstream in(text);
  return load_instance(in, f, b);
}

const std::string kHeader = "member_id,campaign_id,y_conv,y_unsub,ltv,product_type\n";

}  // namespace

TEST(Load, MinimalFile) {
  const auto inst = load_text(kHeader + "m1,c1,0.5,0.01,3,2C\n");
  ASSERT_EQ(inst.scores.size(), 1u);
  EXPECT_EQ(inst.members[0].id, "m1");
  EXPECT_DOUBLE_EQ(inst.scores[0].y_conv, 0.5);
  EXPECT_DOUBLE_EQ(inst.ltv_of(inst.scores[0]), 3.0);
}

TEST(Load, OutOfRangeProbabilityNamesRow) {
  try {
    load_text(kHeader + "m1,c1,0.5,0.01,3,2C\nm1,c2,1.3,0.01,3,2C\n");
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
  }
}

TEST(Load, MalformedRows) {
  EXPECT_THROW(load_text("member,campaign\n"), ParseError);
  EXPECT_THROW(load_text(kHeader + "m1,c1,0.5,0.01\n"), ParseError);
  EXPECT_THROW(load_text(kHeader + "m1,c1,abc,0.01,3,2C\n"), ParseError);
  EXPECT_THROW(load_text(kHeader + "m1,c1,0.5,0.01,3,2X\n"), ValidationError);
  EXPECT_THROW(load_text(kHeader + "m1,c1,0.5,0.01,3,2C\nm1,c1,0.5,0.01,3,2C\n"), ValidationError);
  EXPECT_THROW(load_text(kHeader + "m1,c1,0.5,0.01,-1,2C\n"), ValidationError);
}

TEST(Load, GroupsScoresByMember) {
  const auto inst = load_text(kHeader + "a,c1,0.1,0,1,2B\nb,c1,0.2,0,1,2B\na,c2,0.3,0,1,2C\n");
  ASSERT_EQ(inst.scores.size(), 3u);
  EXPECT_EQ(inst.scores[0].member, 0u);
  EXPECT_EQ(inst.scores[1].member, 0u);
  EXPECT_DOUBLE_EQ(inst.scores[1].y_conv, 0.3);
  EXPECT_EQ(inst.scores[2].member, 1u);
}

TEST(Load, SharedProductColumn) {
  const auto inst = load_text(
      "member_id,campaign_id,y_conv,y_unsub,ltv,product_type,product_id\n"
      "a,c1,0.1,0,4,2B,p\na,c2,0.3,0,4,2B,p\n");
  EXPECT_EQ(inst.ltv.size(), 1u);
  EXPECT_THROW(load_text("member_id,campaign_id,y_conv,y_unsub,ltv,product_type,product_id\n"
                         "a,c1,0.1,0,4,2B,p\na,c2,0.3,0,5,2B,p\n"),
               ValidationError);
}

TEST(Load, RoundTripIsByteIdentical) {
  const auto inst = generate_instance(3, 100, 10);
  for (auto f : {InstanceFormat::Columnar, InstanceFormat::Json}) {
    const auto text = serialize_instance(inst, f);
    const auto again = load_text(text, f, inst.budgets);
    EXPECT_EQ(serialize_instance(again, f), text);
    ASSERT_EQ(again.scores.size(), inst.scores.size());
    for (std::size_t i = 0; i < inst.scores.size(); ++i) {
      EXPECT_EQ(again.scores[i].y_conv, inst.scores[i].y_conv);
      EXPECT_EQ(again.ltv_of(again.scores[i]), inst.ltv_of(inst.scores[i]));
    }
  }
}

TEST(Load, JsonCarriesBudgetsAndFeatures) {
  auto inst = generate_instance(4, 5, 3);
  const auto again = load_text(serialize_instance(inst, InstanceFormat::Json), InstanceFormat::Json);
  EXPECT_EQ(again.budgets.c_2b, inst.budgets.c_2b);
  EXPECT_EQ(again.budgets.c_unsub, inst.budgets.c_unsub);
  EXPECT_EQ(again.members[2].features, inst.members[2].features);
}

TEST(Generate, Deterministic) {
  const auto a = generate_instance(7, 10, 3), b = generate_instance(7, 10, 3);
  EXPECT_EQ(serialize_instance(a, InstanceFormat::Json), serialize_instance(b, InstanceFormat::Json));
  const auto c = generate_instance(8, 10, 3);
  EXPECT_NE(serialize_instance(a, InstanceFormat::Json), serialize_instance(c, InstanceFormat::Json));
}

TEST(Generate, SingleCell) {
  const auto inst = generate_instance(1, 1, 1);
  EXPECT_EQ(inst.scores.size(), 1u);
}

TEST(Generate, RejectsBadSizes) {
  EXPECT_THROW(generate_instance(1, 0, 3), ValidationError);
  EXPECT_THROW(generate_instance(1, 3, -1), ValidationError);
  GeneratorConfig g;
  g.conv_mean = 1.5;
  EXPECT_THROW(generate_instance(1, 3, 3, g), ValidationError);
}

TEST(Generate, ConversionMeanMatchesConfig) {
  GeneratorConfig g;
  const auto inst = generate_instance(11, 1000, 20, g);
  double s = 0.0;
  for (const auto& sc : inst.scores) s += sc.y_conv;
  const double n = static_cast<double>(inst.scores.size());
  const double mean = s / n;
  // Beta(m c, (1-m) c) has variance m (1-m) / (c + 1).
  const double se = std::sqrt(g.conv_mean * (1.0 - g.conv_mean) / (g.conv_concentration + 1.0) / n);
  EXPECT_LE(std::abs(mean - g.conv_mean), 3.0 * se) << mean;
}

TEST(Generate, EligibilityThinsScores) {
  GeneratorConfig g;
  g.eligibility = 0.5;
  const auto inst = generate_instance(2, 200, 10, g);
  EXPECT_LT(inst.scores.size(), 2000u);
  EXPECT_GT(inst.scores.size(), 800u);
  validate(inst);
}

TEST(EmailLp, SingleCell) {
  auto inst = load_text(kHeader + "m,c,0.2,0.05,5,2C\n", InstanceFormat::Columnar, Budgets{1.0, 0, 1, 1});
  const auto sys = build_email_lp(inst);
  ASSERT_EQ(sys.y.size(), 1u);
  EXPECT_DOUBLE_EQ(sys.y[0], -1.0);
  ASSERT_EQ(sys.num_rows(), 3u);
  std::vector<double> one{1.0};
  const auto Da = sys.D.multiply(one);
  EXPECT_DOUBLE_EQ(Da[0], 0.05);
  EXPECT_DOUBLE_EQ(Da[1], 0.0);  // no 2B column
  EXPECT_DOUBLE_EQ(Da[2], -1.0);
  EXPECT_EQ(sys.b, (std::vector<double>{1.0, 0.0, -1.0}));
  EXPECT_EQ(sys.cap, 1.0);
}

TEST(EmailLp, Shape) {
  const auto sys = build_email_lp(generate_instance(1, 3, 2));
  EXPECT_EQ(sys.num_cols(), 6u);
  EXPECT_EQ(sys.num_rows(), 3u);
  EXPECT_EQ(sys.D.cols, 6u);
  EXPECT_EQ(sys.num_members(), 3u);
  EXPECT_EQ(sys.row_labels, (std::vector<std::string>{"unsub", "min_2b", "min_2c"}));
}

TEST(EmailLp, AllOnesObjectiveMatchesDirectSum) {
  const auto inst = generate_instance(5, 50, 7);
  const auto sys = build_email_lp(inst);
  double expect = 0.0;
  for (const auto& s : inst.scores) expect -= s.y_conv * inst.ltv.at({s.member, inst.campaigns[s.campaign].product_id});
  std::vector<double> ones(sys.num_cols(), 1.0);
  EXPECT_NEAR(dot(sys.y, ones), expect, 1e-9 * std::abs(expect));
}

TEST(EmailLp, LinearInLtv) {
  auto inst = generate_instance(6, 20, 4);
  const auto base = build_email_lp(inst);
  for (auto& [k, v] : inst.ltv) v *= 4.0;  // power of two keeps the scaling exact
  const auto scaled = build_email_lp(inst);
  for (std::size_t c = 0; c < base.y.size(); ++c) EXPECT_EQ(scaled.y[c], 4.0 * base.y[c]);
}

TEST(EmailLp, ColumnMappingStable) {
  const auto inst = generate_instance(9, 30, 5);
  const auto a = build_email_lp(inst), b = build_email_lp(inst);
  EXPECT_EQ(a.column_member, b.column_member);
  EXPECT_EQ(a.column_campaign, b.column_campaign);
  EXPECT_EQ(a.fingerprint, b.fingerprint);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t c = 0; c < a.num_cols(); ++c) {
    EXPECT_TRUE(seen.emplace(a.column_member[c], a.column_campaign[c]).second);
    EXPECT_GE(c, a.member_offsets[a.column_member[c]]);
    EXPECT_LT(c, a.member_offsets[a.column_member[c] + 1]);
  }
  EXPECT_EQ(seen.size(), 150u);
}

TEST(EmailLp, FingerprintSeesOrder) {
  const auto a = build_email_lp(generate_instance(9, 30, 5));
  const auto b = build_email_lp(generate_instance(9, 31, 5));
  EXPECT_NE(a.fingerprint, b.fingerprint);
}

TEST(Feasibility, ZeroWhenFeasible) {
  const auto sys = ConstraintSystem::from_dense({-1, -1}, {{1, 1}}, {2}, {2}, 2);
  std::vector<double> a{0.5, 0.5};
  EXPECT_EQ(feasibility_score(sys, a), 0.0);
}

TEST(Feasibility, UnitViolation) {
  // d^T a = b + 1 + |b| with b = 3.
  const auto sys = ConstraintSystem::from_dense({0, 0}, {{4, 3}}, {3}, {2}, 2);
  std::vector<double> a{1.0, 1.0};
  EXPECT_DOUBLE_EQ(feasibility_score(sys, a), 1.0);
}

TEST(Feasibility, MatchesDenseEvaluation) {
  Rng rng(12);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 6, R = 4;
    std::vector<std::vector<double>> D(R, std::vector<double>(n));
    std::vector<double> b(R), a(n), y(n, 0.0);
    for (auto& row : D)
      for (auto& v : row) v = nd(rng);
    for (auto& v : b) v = nd(rng);
    for (auto& v : a) v = uniform01(rng);
    const auto sys = ConstraintSystem::from_dense(y, D, b, {3, 3}, 3);
    double worst = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < n; ++c) s += D[r][c] * a[c];
      worst = std::max(worst, (s - b[r]) / (1.0 + std::abs(b[r])));
    }
    EXPECT_NEAR(feasibility_score(sys, a), worst, 1e-14);
  }
}

TEST(System, FromDenseValidates) {
  EXPECT_THROW(ConstraintSystem::from_dense({1, 2}, {{1}}, {1}, {2}, 1), DimensionError);
  EXPECT_THROW(ConstraintSystem::from_dense({1, 2}, {{1, 1}}, {1}, {3}, 1), DimensionError);
  EXPECT_THROW(ConstraintSystem::from_dense({1, 2}, {{1, 1}}, {1}, {2}, 0), ValidationError);
}

TEST(System, EvaluatePrimalSlack) {
  const auto sys = ConstraintSystem::from_dense({-1, -2}, {{1, 1}, {-1, 0}}, {1.5, -0.5}, {2}, 2);
  const auto p = evaluate_primal(sys, {1.0, 0.25});
  EXPECT_DOUBLE_EQ(p.objective, -1.5);
  EXPECT_DOUBLE_EQ(p.per_row_slack[0], 0.25);
  EXPECT_DOUBLE_EQ(p.per_row_slack[1], 0.5);
  EXPECT_EQ(p.feasibility, 0.0);
}
