#include <gtest/gtest.h>

#include <cmath>

#include "define/errors.hpp"
#include "define/evalx.hpp"
#include "define/labeler.hpp"
#include "test_support.hpp"

using namespace define;
using L = DecisionLabel;

namespace {

// Golds: SB x3, B x2, H x2, S x1, SS x2. Six correct; the four misses are
// SB->B, B->H, H->SS, SS->S, so every class is predicted twice.
//   SB: P 2/2, R 2/3, F1 0.8      B: P 1/2, R 1/2, F1 0.5
//   H:  P 1/2, R 1/2, F1 0.5      S: P 1/2, R 1/1, F1 2/3
//   SS: P 1/2, R 1/2, F1 0.5
//   macro P = 3/5, macro R = (19/6)/5 = 19/30, macro F1 = (89/30)/5 = 89/150.
struct TenItems {
  LabelMap golds{{"i0", L::strong_buy}, {"i1", L::strong_buy}, {"i2", L::strong_buy},
                 {"i3", L::buy},        {"i4", L::buy},        {"i5", L::hold},
                 {"i6", L::hold},       {"i7", L::sell},       {"i8", L::strong_sell},
                 {"i9", L::strong_sell}};
  LabelMap preds{{"i0", L::strong_buy}, {"i1", L::strong_buy}, {"i2", L::buy},
                 {"i3", L::buy},        {"i4", L::hold},       {"i5", L::hold},
                 {"i6", L::strong_sell}, {"i7", L::sell},      {"i8", L::strong_sell},
                 {"i9", L::sell}};
};

LabelMap labels_of(std::span<const ProfileRecord> recs) {
  LabelMap out;
  for (const auto& r : recs) out.emplace(r.profile_id, *r.label);
  return out;
}

}  // namespace

TEST(Evaluate, TenItemFixture) {
  TenItems f;
  const auto r = evaluate(f.preds, f.golds);
  EXPECT_EQ(r.n, 10u);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.6);
  EXPECT_NEAR(r.macro_precision, 0.6, 1e-15);
  EXPECT_NEAR(r.macro_recall, 19.0 / 30.0, 1e-15);
  EXPECT_NEAR(r.macro_f1, 89.0 / 150.0, 1e-15);
  const PerClass f1{0.8, 0.5, 0.5, 2.0 / 3.0, 0.5};
  for (std::size_t c = 0; c < kLabelCount; ++c) EXPECT_NEAR(r.f1[c], f1[c], 1e-15) << c;
  EXPECT_EQ(r.support, (LabelCounts{3, 2, 2, 1, 2}));
  EXPECT_EQ(r.confusion.trace(), 6);
  EXPECT_EQ(r.confusion(0, 1), 1);
  EXPECT_EQ(r.confusion(4, 3), 1);
}

TEST(Evaluate, PerfectAndPermutationInvariant) {
  TenItems f;
  const auto perfect = evaluate(f.golds, f.golds);
  EXPECT_EQ(perfect.accuracy, 1.0);
  EXPECT_EQ(perfect.macro_f1, 1.0);
  EXPECT_TRUE((perfect.confusion - ConfusionMatrix(perfect.confusion.diagonal().asDiagonal()))
                  .isZero());

  LabelMap renamed_p;
  LabelMap renamed_g;
  for (const auto& [id, l] : f.preds) renamed_p.emplace("z" + id, l);
  for (const auto& [id, l] : f.golds) renamed_g.emplace("z" + id, l);
  EXPECT_EQ(evaluate(renamed_p, renamed_g).macro_f1, evaluate(f.preds, f.golds).macro_f1);
}

TEST(Evaluate, AllOneColumnAndIdMismatch) {
  TenItems f;
  LabelMap all_buy;
  for (const auto& [id, l] : f.golds) all_buy.emplace(id, L::buy);
  const auto m = confusion(all_buy, f.golds);
  EXPECT_EQ(m.col(1).sum(), 10);
  EXPECT_EQ(m.sum(), 10);
  LabelMap short_preds = f.preds;
  short_preds.erase("i0");
  EXPECT_THROW(evaluate(short_preds, f.golds), IdMismatch);
}

TEST(Evaluate, RowSumsEqualGoldCounts) {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    LabelMap p;
    LabelMap g;
    std::vector<L> gl;
    for (int i = 0; i < 40; ++i) {
      const auto gold = kAllLabels[rng.below(5)];
      g.emplace("x" + std::to_string(i), gold);
      p.emplace("x" + std::to_string(i), kAllLabels[rng.below(5)]);
      gl.push_back(gold);
    }
    const auto m = confusion(p, g);
    const auto counts = class_distribution(gl);
    for (std::size_t c = 0; c < kLabelCount; ++c) {
      EXPECT_EQ(m.row(static_cast<Eigen::Index>(c)).sum(), static_cast<std::int64_t>(counts[c]));
    }
    const auto r = evaluate(p, g);
    EXPECT_GE(r.macro_f1, 0.0);
    EXPECT_LE(r.macro_f1, 1.0);
  }
}

TEST(Evaluate, RandomBaseline) {
  const LabelCounts even{20, 20, 20, 20, 20};
  EXPECT_NEAR(random_baseline_macro_f1(even), 0.2, 1e-15);
  const auto skew = random_baseline_macro_f1({34, 15, 21, 9, 21});
  double expected = 0.0;
  for (double pi : {0.34, 0.15, 0.21, 0.09, 0.21}) expected += 2 * 0.2 * pi / (0.2 + pi);
  EXPECT_NEAR(skew, expected / 5.0, 1e-15);
}

TEST(Evaluate, CsvAndJson) {
  TenItems f;
  const auto r = evaluate(f.preds, f.golds);
  const auto csv = confusion_to_csv(r.confusion);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
  EXPECT_NE(report_to_json(r).find("\"macro_f1\""), std::string::npos);
}

TEST(Agreement, Rates) {
  TenItems f;
  const auto same = agreement_analysis(f.golds, f.golds);
  EXPECT_EQ(same.agreement_rate, 1.0);
  LabelMap shifted;
  for (const auto& [id, l] : f.golds) {
    shifted.emplace(id, l == L::strong_buy ? L::strong_sell : L::strong_buy);
  }
  EXPECT_EQ(agreement_analysis(shifted, f.golds).agreement_rate, 0.0);
  const auto mixed = agreement_analysis(f.preds, f.golds);
  EXPECT_DOUBLE_EQ(mixed.agreement_rate, 0.6);
  EXPECT_NEAR(mixed.conditional(0, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(mixed.conditional(0, 1), 1.0 / 3.0, 1e-15);
  for (Eigen::Index r = 0; r < 5; ++r) EXPECT_NEAR(mixed.conditional.row(r).sum(), 1.0, 1e-15);
}

TEST(Density, MassesPartitionTheFactorCount) {
  const auto schema = default_schema();
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  for (std::size_t x = 0; x < schema->item_count(); ++x) {
    const auto id = schema->outcome_at(x);
    const auto pol = schema->factor(id.factor_index).outcomes[id.outcome_index].polarity;
    n_pos += pol == Polarity::positive;
    n_neg += pol == Polarity::negative;
  }
  ASSERT_GT(n_pos, 0u);
  ASSERT_GT(n_neg, 0u);
  Rng rng(6);
  std::vector<ProfileRecord> recs;
  for (int i = 0; i < 30; ++i) {
    recs.push_back({"d" + std::to_string(i), "T", Date::parse("2024-01-02"), std::nullopt,
                    i % 2 ? std::optional(L::buy) : std::optional(L::sell),
                    define::testing::random_profile(rng, schema)});
  }
  const auto report = density_report(recs);
  EXPECT_EQ(report[label_index(L::buy)].size(), 15u);
  EXPECT_TRUE(report[label_index(L::hold)].empty());
  for (const auto& group : report) {
    for (const auto& pt : group) {
      const auto& rec = *std::find_if(recs.begin(), recs.end(),
                                      [&](const auto& r) { return r.profile_id == pt.profile_id; });
      double neutral = 0.0;
      for (std::size_t x = 0; x < schema->item_count(); ++x) {
        const auto id = schema->outcome_at(x);
        if (schema->factor(id.factor_index).outcomes[id.outcome_index].polarity ==
            Polarity::neutral_uncertain) {
          neutral += rec.profile.flat()[static_cast<Eigen::Index>(x)];
        }
      }
      EXPECT_GE(pt.positive_mass, 0.0);
      EXPECT_LE(pt.positive_mass, 1.0);
      EXPECT_NEAR(pt.positive_mass * double(n_pos) + pt.negative_mass * double(n_neg) + neutral,
                  15.0, 1e-12);
    }
  }
}

TEST(Density, PositiveMassOfUniformGrades) {
  const auto schema = define::testing::toy_schema({2, 2});
  Eigen::Vector4d flat(0.75, 0.25, 0.75, 0.25);
  std::vector<ProfileRecord> recs{{"a", "T", Date::parse("2024-01-02"), std::nullopt, L::hold,
                                   FactorProfile::from_probabilities(schema, flat)}};
  const auto report = density_report(recs);
  ASSERT_EQ(report[label_index(L::hold)].size(), 1u);
  EXPECT_DOUBLE_EQ(report[label_index(L::hold)][0].positive_mass, 0.75);
  EXPECT_EQ(density_to_csv(report).substr(0, 16), "label,profile_id");
}

TEST(Synth, Apportion) {
  EXPECT_EQ(apportion(500, {34, 15, 21, 9, 21}), (LabelCounts{170, 75, 105, 45, 105}));
  EXPECT_EQ(apportion(7, {1, 1, 1, 1, 1}), (LabelCounts{2, 2, 1, 1, 1}));
  const auto c = apportion(101, {34, 15, 21, 9, 21});
  std::size_t sum = 0;
  for (auto x : c) sum += x;
  EXPECT_EQ(sum, 101u);
  EXPECT_THROW(apportion(10, {0, 0, 0, 0, 0}), ConfigError);
}

TEST(Synth, DeterministicAndOrdered) {
  const auto schema = default_schema();
  SynthSpec spec;
  spec.seed = 7;
  spec.n = 200;
  spec.planted = schema->outcome_at(2);
  const auto a = synth_corpus(spec, schema);
  const auto b = synth_corpus(spec, schema);
  ASSERT_EQ(a.size(), 200u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].profile_id, b[i].profile_id);
    EXPECT_EQ(a[i].label, b[i].label);
    EXPECT_TRUE(a[i].profile == b[i].profile);
  }
  spec.seed = 8;
  const auto c = synth_corpus(spec, schema);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs |= !(a[i].profile == c[i].profile);
  EXPECT_TRUE(differs);

  // Noise 0: the planted probability rank-orders the labels.
  const auto planted = static_cast<Eigen::Index>(schema->flat_index(spec.planted));
  for (const auto& x : a) {
    for (const auto& y : a) {
      if (label_index(*x.label) < label_index(*y.label)) {
        EXPECT_GE(x.profile.flat()[planted], y.profile.flat()[planted]);
      }
    }
  }
  std::vector<L> labels;
  for (const auto& r : a) labels.push_back(*r.label);
  const auto counts = class_distribution(labels);
  const auto target = apportion(200, spec.proportions);
  for (std::size_t k = 0; k < kLabelCount; ++k) {
    EXPECT_NEAR(double(counts[k]), double(target[k]), 12.0) << k;
  }
}

TEST(Synth, NoiseAndValidation) {
  const auto schema = default_schema();
  SynthSpec spec;
  spec.n = 300;
  spec.noise = 1.0;
  const auto noisy = synth_corpus(spec, schema);
  spec.noise = 0.0;
  const auto clean = synth_corpus(spec, schema);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) changed += clean[i].label != noisy[i].label;
  EXPECT_GT(changed, 150u);
  spec.noise = 1.5;
  EXPECT_THROW(synth_corpus(spec, schema), ConfigError);
  spec.noise = 0.0;
  spec.grade_weights = {0, 0, 0, 0, 0, 0};
  EXPECT_THROW(synth_corpus(spec, schema), ConfigError);
}

TEST(Experiments, FitAndEvaluateRecoversPlantedItem) {
  const auto schema = default_schema();
  SynthSpec spec;
  spec.seed = 3;
  spec.n = 300;
  spec.planted = schema->outcome_at(5);
  const auto train = synth_corpus(spec, schema);
  spec.seed = 4;
  const auto test = synth_corpus(spec, schema);
  const auto r = fit_and_evaluate(train, test, Regime::cross_sector, 1, 3000, schema);
  EXPECT_EQ(schema->flat_index(top_factors(r.model, 1)[0].first), 5u);
  EXPECT_EQ(r.pair_count, 3000u);
  EXPECT_GT(r.report.macro_f1, 0.8);
  EXPECT_EQ(labels_of(test).size(), r.report.n);
}

TEST(Experiments, RegimesAreEqualized) {
  const auto schema = default_schema();
  SynthSpec spec;
  spec.n = 120;
  const auto corpus = synth_corpus(spec, schema);
  const auto results = run_regimes(corpus, corpus, 2, std::nullopt, schema);
  ASSERT_EQ(results.size(), 3u);
  for (const auto& r : results) EXPECT_EQ(r.result.pair_count, results[0].result.pair_count);
}

TEST(Experiments, KSweep) {
  const auto schema = default_schema();
  SynthSpec spec;
  spec.n = 60;
  const auto corpus = synth_corpus(spec, schema);
  const std::vector<std::size_t> ks{1, 3, 5};
  const auto sweep = k_sweep(corpus, ks, false);
  ASSERT_EQ(sweep.size(), 3u);
  EXPECT_EQ(sweep[2].k, 5u);
  EXPECT_EQ(sweep[0].report.n, 60u);
}

TEST(Experiments, SectorGridShape) {
  const auto schema = default_schema();
  SynthSpec spec;
  spec.n = 220;
  const auto corpus = synth_corpus(spec, schema);
  const auto grid = cross_sector_grid(corpus, corpus, 1, 2000, schema);
  EXPECT_EQ(grid.sectors.size(), 11u);
  EXPECT_EQ(grid.macro_f1.rows(), 11);
  EXPECT_EQ(grid.macro_f1.cols(), 11);
  EXPECT_NE(sector_grid_to_csv(grid).find(grid.sectors[0]), std::string::npos);
}
