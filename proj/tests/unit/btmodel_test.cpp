#include <gtest/gtest.h>

#include <cmath>

#include "define/btmodel.hpp"
#include "define/errors.hpp"
#include "test_support.hpp"

using namespace define;
using define::testing::toy_schema;

namespace {

ProfileRecord toy_record(const SchemaPtr& schema, std::string id, double p0) {
  Eigen::VectorXd flat(2);
  flat << p0, 1.0 - p0;
  return {std::move(id), "T", Date::parse("2024-01-02"), std::nullopt, std::nullopt,
          FactorProfile::from_probabilities(schema, flat)};
}

LabeledItem item(std::string id, DecisionLabel l, std::optional<std::string> sector = "Energy",
                 std::string ticker = "T") {
  return {std::move(id), l, std::move(sector), std::move(ticker)};
}

Eigen::MatrixXd random_wins(Rng& rng, Eigen::Index m) {
  Eigen::MatrixXd w(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) w(i, j) = i == j ? 0.0 : 0.1 + 5.0 * rng.uniform();
  }
  return w;
}

}  // namespace

TEST(Pairs, StrongBuyBeatsHoldSameSector) {
  const std::vector items{item("A", DecisionLabel::strong_buy), item("B", DecisionLabel::hold)};
  const auto pairs = preference_pairs(items, Regime::same_sector, 1);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0], (PreferencePair{"A", "B", Regime::same_sector}));
}

TEST(Pairs, AdjacentClassesNeverPair) {
  const std::vector items{item("A", DecisionLabel::buy), item("B", DecisionLabel::hold)};
  EXPECT_TRUE(preference_pairs(items, Regime::same_sector, 1).empty());
  for (std::size_t a = 0; a + 1 < kLabelCount; ++a) {
    EXPECT_FALSE(outranks(kAllLabels[a], kAllLabels[a + 1]));
    EXPECT_FALSE(outranks(kAllLabels[a + 1], kAllLabels[a]));
  }
}

TEST(Pairs, HoldBeatsStrongSellRegardlessOfOrder) {
  const std::vector items{item("B", DecisionLabel::strong_sell), item("A", DecisionLabel::hold)};
  const auto pairs = preference_pairs(items, Regime::same_sector, 1);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].winner_profile_id, "A");
  EXPECT_EQ(pairs[0].loser_profile_id, "B");
}

TEST(Pairs, OutrankTableIsExactlyTheSixComparisons) {
  int count = 0;
  for (auto a : kAllLabels) {
    for (auto b : kAllLabels) count += outranks(a, b);
  }
  EXPECT_EQ(count, 6);
}

TEST(Pairs, Regimes) {
  const std::vector items{item("A", DecisionLabel::strong_buy, "Energy", "X"),
                          item("B", DecisionLabel::strong_sell, "energy", "Y"),
                          item("C", DecisionLabel::strong_sell, "Utilities", "X"),
                          item("D", DecisionLabel::strong_sell, std::nullopt, "Z")};
  const auto same = preference_pairs(items, Regime::same_sector, 1);
  ASSERT_EQ(same.size(), 1u);
  EXPECT_EQ(same[0].loser_profile_id, "B");
  const auto cross = preference_pairs(items, Regime::cross_sector, 1);
  ASSERT_EQ(cross.size(), 1u);
  EXPECT_EQ(cross[0].loser_profile_id, "C");
  const auto company = preference_pairs(items, Regime::same_company, 1);
  ASSERT_EQ(company.size(), 1u);
  EXPECT_EQ(company[0].loser_profile_id, "C");
}

TEST(Pairs, CapIsSeededAndDeterministic) {
  std::vector<LabeledItem> items;
  for (int i = 0; i < 40; ++i) items.push_back(item("W" + std::to_string(i), DecisionLabel::strong_buy));
  for (int i = 0; i < 25; ++i) items.push_back(item("L" + std::to_string(i), DecisionLabel::strong_sell));
  ASSERT_EQ(preference_pairs(items, Regime::same_sector, 3).size(), 1000u);
  const auto a = preference_pairs(items, Regime::same_sector, 3, 100);
  const auto b = preference_pairs(items, Regime::same_sector, 3, 100);
  const auto c = preference_pairs(items, Regime::same_sector, 4, 100);
  EXPECT_EQ(a.size(), 100u);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Pairs, JsonlRoundTrip) {
  const std::vector<PreferencePair> pairs{{"A", "B", Regime::same_company}, {"C", "D", Regime::cross_sector}};
  EXPECT_EQ(pairs_from_jsonl(pairs_to_jsonl(pairs)), pairs);
  EXPECT_THROW(pairs_from_jsonl("{\"winner\": \"A\"}\n"), ParseError);
  EXPECT_THROW(parse_regime("sideways"), ConfigError);
}

TEST(Accumulate, ToyCrossProduct) {
  const auto schema = toy_schema();
  const std::vector recs{toy_record(schema, "A", 0.75), toy_record(schema, "B", 0.25)};
  const auto lookup = index_profiles(recs);
  const std::vector<PreferencePair> pairs{{"A", "B", Regime::cross_sector}};
  const auto w = accumulate(pairs, lookup, *schema);
  EXPECT_DOUBLE_EQ(w(0, 1), 0.5625);
  EXPECT_DOUBLE_EQ(w(1, 0), 0.0625);
  EXPECT_EQ(w(0, 0), 0.0);
  EXPECT_EQ(w(1, 1), 0.0);

  const std::vector<PreferencePair> twice{pairs[0], pairs[0]};
  EXPECT_EQ(accumulate(twice, lookup, *schema), 2.0 * w);
  EXPECT_TRUE(accumulate({}, lookup, *schema).isZero());

  const auto diag = accumulate_same_item(pairs, lookup, *schema);
  EXPECT_DOUBLE_EQ(diag[0], 0.75 * 0.25);
  EXPECT_DOUBLE_EQ(diag[1], 0.25 * 0.75);
}

TEST(Accumulate, Errors) {
  const auto schema = toy_schema();
  const std::vector recs{toy_record(schema, "A", 0.75)};
  const auto lookup = index_profiles(recs);
  const std::vector<PreferencePair> pairs{{"A", "Z", Regime::cross_sector}};
  EXPECT_THROW(accumulate(pairs, lookup, *schema), MissingProfile);
  const std::vector<PreferencePair> self{{"A", "A", Regime::cross_sector}};
  EXPECT_THROW(accumulate(self, lookup, *toy_schema({3})), SchemaMismatch);
}

TEST(Fit, TwoItemClosedForm) {
  Eigen::Matrix2d w;
  w << 0, 2, 1, 0;
  const auto r = fit_strengths(w);
  EXPECT_NEAR(r.p[0], 2.0 / 3.0, 1e-6);
  EXPECT_NEAR(r.p[1], 1.0 / 3.0, 1e-6);
  EXPECT_NEAR(win_probability(r.p, 0, 1), 2.0 / 3.0, 1e-6);
}

TEST(Fit, SymmetricGivesUniform) {
  Rng rng(3);
  Eigen::MatrixXd w = random_wins(rng, 6);
  w = (w + w.transpose()).eval();
  const auto r = fit_strengths(w);
  EXPECT_LT((r.p.array() - 1.0 / 6.0).abs().maxCoeff(), 1e-8);
}

TEST(Fit, ScaleInvariantBitTight) {
  Rng rng(9);
  const Eigen::MatrixXd w = random_wins(rng, 5);
  const auto a = fit_strengths(w);
  const auto b = fit_strengths((7.5 * w).eval());
  EXPECT_LE((a.p - b.p).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Fit, PermutationEquivariant) {
  Rng rng(10);
  const Eigen::MatrixXd w = random_wins(rng, 5);
  Eigen::VectorXi perm(5);
  perm << 3, 0, 4, 1, 2;
  const Eigen::PermutationMatrix<Eigen::Dynamic> P(perm);
  const Eigen::MatrixXd wp = P * w * P.transpose();
  const auto a = fit_strengths(w);
  const auto b = fit_strengths(wp);
  EXPECT_LE((P * a.p - b.p).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Fit, MoreWinsNeverLowersStrength) {
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd w = random_wins(rng, 3);
    const double before = fit_strengths(w).p[0];
    w(0, 2) += 1.0;
    EXPECT_GE(fit_strengths(w).p[0], before);
  }
}

TEST(Fit, FloatScalar) {
  Eigen::Matrix2f w;
  w << 0, 2, 1, 0;
  FitOptions<float> opt;
  opt.tol = 1e-6f;
  const auto r = fit_strengths(w, opt);
  EXPECT_NEAR(r.p[0], 2.0f / 3.0f, 1e-5f);
}

TEST(Fit, NotConvergedCarriesLastIterate) {
  Rng rng(4);
  const Eigen::MatrixXd w = random_wins(rng, 4);
  FitOptions<double> opt;
  opt.max_iter = 1;
  try {
    fit_strengths(w, opt);
    FAIL() << "expected NotConverged";
  } catch (const NotConverged& e) {
    EXPECT_EQ(e.iterations(), 1);
    EXPECT_EQ(e.last_iterate().size(), 4);
    EXPECT_NEAR(e.last_iterate().sum(), 1.0, 1e-12);
    EXPECT_GT(e.max_change(), opt.tol);
  }
}

TEST(Fit, Degenerate) {
  EXPECT_THROW(fit_strengths(Eigen::MatrixXd::Zero(1, 1)), DegenerateMatrix);
  EXPECT_THROW(fit_strengths(Eigen::MatrixXd::Zero(2, 3)), DegenerateMatrix);
  Eigen::Matrix2d neg;
  neg << 0, -1, 1, 0;
  EXPECT_THROW(fit_strengths(neg), DegenerateMatrix);
  FitOptions<double> raw;
  raw.regularization = 0.0;
  EXPECT_THROW(fit_strengths(Eigen::MatrixXd::Zero(3, 3), raw), DegenerateMatrix);
  Eigen::Matrix2d one_sided;
  one_sided << 0, 1, 0, 0;
  EXPECT_THROW(fit_strengths(one_sided, raw), DegenerateMatrix);
  EXPECT_NO_THROW(fit_strengths(one_sided));
  const auto zero = fit_strengths(Eigen::MatrixXd::Zero(3, 3));
  EXPECT_LT((zero.p.array() - 1.0 / 3.0).abs().maxCoeff(), 1e-12);
}

TEST(SalienceModel, PairwiseAndTopFactors) {
  const auto schema = toy_schema({2, 2});
  Eigen::Matrix4d w = Eigen::Matrix4d::Ones();
  w.diagonal().setZero();
  const auto uniform = fit(w, schema);
  const auto top = top_factors(uniform, 3);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(schema->flat_index(top[0].first), 0u);
  EXPECT_EQ(schema->flat_index(top[1].first), 1u);
  EXPECT_EQ(schema->flat_index(top[2].first), 2u);
  EXPECT_DOUBLE_EQ(pairwise_prob(uniform, top[0].first, top[1].first), 0.5);

  w(3, 0) = 9.0;
  w(3, 1) = 9.0;
  const auto skewed = fit(w, schema);
  const auto all = top_factors(skewed, 4);
  EXPECT_EQ(schema->flat_index(all[0].first), 3u);
  double sum = 0.0;
  for (const auto& [id, s] : all) sum += s;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  const auto x = schema->outcome_at(0);
  const auto y = schema->outcome_at(3);
  EXPECT_NEAR(pairwise_prob(skewed, x, y) + pairwise_prob(skewed, y, x), 1.0, 1e-15);
  EXPECT_THROW(pairwise_prob(skewed, x, x), PreconditionError);
  EXPECT_THROW(top_factors(skewed, 0), PreconditionError);
  EXPECT_THROW(top_factors(skewed, 5), PreconditionError);
  EXPECT_THROW(fit(Eigen::Matrix3d::Ones(), schema), SchemaMismatch);
}

TEST(SalienceModel, JsonRoundTripAndSchemaCheck) {
  const auto schema = toy_schema({2, 3});
  Rng rng(2);
  auto model = fit(random_wins(rng, 5), schema);
  model.regime = Regime::same_sector;
  model.seed = 17;
  const auto back = model_from_json(model_to_json(model), schema);
  EXPECT_EQ(back.p, model.p);
  EXPECT_EQ(back.regime, model.regime);
  EXPECT_EQ(back.seed, model.seed);
  EXPECT_EQ(back.iterations, model.iterations);
  EXPECT_THROW(model_from_json(model_to_json(model), toy_schema({3, 2})), SchemaMismatch);
  EXPECT_THROW(model_from_json("nope", schema), ParseError);
}
