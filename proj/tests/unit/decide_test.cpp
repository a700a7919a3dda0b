#include <gtest/gtest.h>

#include <cmath>

#include "define/decide.hpp"
#include "define/errors.hpp"
#include "test_support.hpp"

using namespace define;
using define::testing::toy_schema;

namespace {

SalienceModel model_with(SchemaPtr schema, Eigen::VectorXd p) {
  SalienceModel m;
  m.schema = std::move(schema);
  m.p = std::move(p);
  return m;
}

std::vector<DecisionScore> scores_of(std::initializer_list<std::pair<const char*, double>> list) {
  std::vector<DecisionScore> out;
  for (const auto& [id, s] : list) out.push_back({id, s});
  return out;
}

}  // namespace

TEST(Score, UniformSalienceIsFactorsOverItems) {
  const auto schema = default_schema();
  const auto m = static_cast<Eigen::Index>(schema->item_count());
  const auto model = model_with(schema, Eigen::VectorXd::Constant(m, 1.0 / double(m)));
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    EXPECT_NEAR(score(define::testing::random_profile(rng, schema), model), 15.0 / 33.0, 1e-12);
  }
}

TEST(Score, ToyArithmetic) {
  const auto schema = toy_schema();
  Eigen::Vector2d p(2.0 / 3.0, 1.0 / 3.0);
  Eigen::Vector2d q(0.75, 0.25);
  const auto profile = FactorProfile::from_probabilities(schema, q);
  EXPECT_NEAR(score(profile, model_with(schema, p)), 2.0 / 3.0 * 0.75 + 1.0 / 3.0 * 0.25, 1e-15);
  EXPECT_NEAR(score(p, q), 0.58333333333333, 1e-12);
  EXPECT_DOUBLE_EQ(score(Eigen::Vector2d(1, 0), q), 0.75);
  EXPECT_THROW(score(profile, model_with(toy_schema({3}), Eigen::Vector3d::Constant(1.0 / 3))),
               SchemaMismatch);
}

TEST(Quantile, SpecExample) {
  const auto s = scores_of({{"a", 0.9}, {"b", 0.5}, {"c", 0.1}});
  const auto out = assign_by_quantile(s, {1, 0, 1, 0, 1});
  EXPECT_EQ(out.at("a"), DecisionLabel::strong_buy);
  EXPECT_EQ(out.at("b"), DecisionLabel::hold);
  EXPECT_EQ(out.at("c"), DecisionLabel::strong_sell);
}

TEST(Quantile, TiesFollowProfileId) {
  const auto s = scores_of({{"e", 0.4}, {"c", 0.4}, {"a", 0.4}, {"d", 0.4}, {"b", 0.4}});
  const auto out = assign_by_quantile(s, {1, 1, 1, 1, 1});
  EXPECT_EQ(out.at("a"), DecisionLabel::strong_buy);
  EXPECT_EQ(out.at("b"), DecisionLabel::buy);
  EXPECT_EQ(out.at("c"), DecisionLabel::hold);
  EXPECT_EQ(out.at("d"), DecisionLabel::sell);
  EXPECT_EQ(out.at("e"), DecisionLabel::strong_sell);
}

TEST(Quantile, CountMismatch) {
  const auto s = scores_of({{"a", 0.9}, {"b", 0.5}});
  EXPECT_THROW(assign_by_quantile(s, {1, 0, 0, 0, 0}), CountMismatch);
  EXPECT_THROW(assign_by_quantile(s, {1, 1, 1, 0, 0}), CountMismatch);
}

TEST(Quantile, RankInvariance) {
  Rng rng(8);
  std::vector<DecisionScore> s;
  for (int i = 0; i < 60; ++i) s.push_back({"p" + std::to_string(i), rng.uniform()});
  auto t = s;
  for (auto& x : t) x.score = std::exp(3.0 * x.score) - 10.0;
  const LabelCounts counts{10, 15, 20, 5, 10};
  EXPECT_EQ(assign_by_quantile(s, counts), assign_by_quantile(t, counts));
}

TEST(Threshold, Bands) {
  const Cutpoints c{0.1, 0.2, 0.3, 0.4};
  EXPECT_EQ(assign_by_threshold(0.0, c), DecisionLabel::strong_sell);
  EXPECT_EQ(assign_by_threshold(0.1, c), DecisionLabel::sell);
  EXPECT_EQ(assign_by_threshold(0.25, c), DecisionLabel::hold);
  EXPECT_EQ(assign_by_threshold(0.35, c), DecisionLabel::buy);
  EXPECT_EQ(assign_by_threshold(0.9, c), DecisionLabel::strong_buy);
  EXPECT_THROW(assign_by_threshold(0.5, {0.1, 0.1, 0.3, 0.4}), NonMonotoneCutpoints);
  EXPECT_THROW(assign_by_threshold(0.5, {0.4, 0.3, 0.2, 0.1}), NonMonotoneCutpoints);
}

TEST(Threshold, QuantileCutpointsReproduceAssignment) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<DecisionScore> s;
    for (int i = 0; i < 50; ++i) s.push_back({"p" + std::to_string(i), rng.uniform()});
    LabelCounts counts{};
    std::size_t left = s.size();
    for (std::size_t k = 0; k + 1 < kLabelCount; ++k) {
      counts[k] = rng.below(left + 1);
      left -= counts[k];
    }
    counts[kLabelCount - 1] = left;
    const auto expected = assign_by_quantile(s, counts);
    const auto cuts = quantile_cutpoints(s, counts);
    for (const auto& d : s) {
      EXPECT_EQ(assign_by_threshold(d.score, cuts), expected.at(d.profile_id)) << "trial " << trial;
    }
  }
}

TEST(Threshold, ParseCutpoints) {
  const auto c = parse_cutpoints("0.1, 0.2,0.3,0.4");
  EXPECT_EQ(c, (Cutpoints{0.1, 0.2, 0.3, 0.4}));
  EXPECT_THROW(parse_cutpoints("0.1,0.2,0.3"), Error);
  EXPECT_THROW(parse_cutpoints("0.4,0.3,0.2,0.1"), NonMonotoneCutpoints);
  EXPECT_THROW(parse_cutpoints("a,b,c,d"), Error);
}
