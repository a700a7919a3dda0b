// Acceptance checks AC1-AC10. Prints one [PASS]/[FAIL] line per criterion
// and exits non-zero when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "define/analogy.hpp"
#include "define/btmodel.hpp"
#include "define/client.hpp"
#include "define/decide.hpp"
#include "define/evalx.hpp"
#include "define/extractor.hpp"
#include "define/ingest.hpp"
#include "define/labeler.hpp"
#include "define/prompts.hpp"
#include "define/random.hpp"
#include "define/schema.hpp"

using namespace define;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string data_path(const std::string& rel) { return std::string(DEFINE_TEST_DATA) + "/" + rel; }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<LikelihoodGrade> random_grades(Rng& rng, std::size_t m) {
  std::vector<LikelihoodGrade> g(m);
  for (auto& x : g) x = grade_from_value(static_cast<int>(rng.below(6)) + 1);
  return g;
}

Eigen::MatrixXd random_wins(Rng& rng, Eigen::Index m) {
  Eigen::MatrixXd w(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) w(i, j) = i == j ? 0.0 : 0.05 + 4.0 * rng.uniform();
  }
  return w;
}

// ---------------------------------------------------------------------------

Outcome ac1_normalization() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto schema = default_schema();
  Rng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto p = FactorProfile::from_grades(schema, random_grades(rng, schema->item_count()));
    for (std::size_t f = 0; f < schema->factor_count(); ++f) {
      worst = std::max(worst, std::abs(p.factor_probabilities(f).sum() - 1.0));
    }
  }
  o.require(worst <= 1e-9, "per-factor sum drift " + fmt("%.3g", worst));
  const std::vector<LikelihoodGrade> g{grade_from_value(6), grade_from_value(2)};
  const auto v = normalize_factor(g);
  o.require(v[0] == 0.75 && v[1] == 0.25, "(6,2) did not normalize to (0.75,0.25) exactly");
  const double secs = seconds_since(t0);
  o.require(secs < 1.0, "runtime " + fmt("%.2fs", secs));
  if (o.pass) o.detail = "max sum drift " + fmt("%.2g", worst) + ", " + fmt("%.3fs", secs);
  return o;
}

Outcome ac2_closed_form() {
  Outcome o;
  Eigen::Matrix2d w;
  w << 0, 2, 1, 0;
  const auto r = fit_strengths(w);
  const double err = std::max(std::abs(r.p[0] - 2.0 / 3.0), std::abs(r.p[1] - 1.0 / 3.0));
  o.require(err <= 1e-6, "error " + fmt("%.3g", err));
  if (o.pass) o.detail = "p = (" + fmt("%.9f", r.p[0]) + ", " + fmt("%.9f", r.p[1]) + ")";
  return o;
}

// Brute-force maximizer of sum_{x != y} w_xy ln(p_x / (p_x + p_y)) over the
// 2-simplex on a 1e-3 grid.
Eigen::Vector3d grid_oracle(const Eigen::Matrix3d& w) {
  constexpr int kSteps = 1000;
  double best = -std::numeric_limits<double>::infinity();
  Eigen::Vector3d arg;
  for (int a = 1; a < kSteps; ++a) {
    for (int b = 1; a + b < kSteps; ++b) {
      const double p[3] = {a / double(kSteps), b / double(kSteps), (kSteps - a - b) / double(kSteps)};
      double ll = 0.0;
      for (int x = 0; x < 3; ++x) {
        for (int y = 0; y < 3; ++y) {
          if (x != y) ll += w(x, y) * std::log(p[x] / (p[x] + p[y]));
        }
      }
      if (ll > best) {
        best = ll;
        arg = Eigen::Vector3d(p[0], p[1], p[2]);
      }
    }
  }
  return arg;
}

Outcome ac3_oracle() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(303);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Matrix3d w = random_wins(rng, 3);
    const auto fitted = fit_strengths(w).p;
    const auto oracle = grid_oracle(w);
    worst = std::max(worst, (fitted - oracle).cwiseAbs().maxCoeff());
  }
  const double secs = seconds_since(t0);
  o.require(worst <= 2e-3, "max coordinate gap " + fmt("%.4g", worst));
  o.require(secs < 30.0, "runtime " + fmt("%.1fs", secs));
  if (o.pass) o.detail = "max coordinate gap " + fmt("%.2g", worst) + ", " + fmt("%.2fs", secs);
  return o;
}

Outcome ac4_invariances() {
  Outcome o;
  Rng rng(404);
  double scale_drift = 0.0;
  double perm_drift = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index m = 3 + static_cast<Eigen::Index>(rng.below(6));
    const Eigen::MatrixXd w = random_wins(rng, m);
    const auto base = fit_strengths(w).p;
    const double c = 0.01 + 100.0 * rng.uniform();
    scale_drift = std::max(scale_drift, (fit_strengths((c * w).eval()).p - base).cwiseAbs().maxCoeff());

    Eigen::VectorXi idx(m);
    for (Eigen::Index i = 0; i < m; ++i) idx[i] = static_cast<int>(i);
    for (Eigen::Index i = m - 1; i > 0; --i) {
      std::swap(idx[i], idx[static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i + 1)))]);
    }
    const Eigen::PermutationMatrix<Eigen::Dynamic> P(idx);
    const Eigen::MatrixXd wp = P * w * P.transpose();
    perm_drift = std::max(perm_drift, (fit_strengths(wp).p - P * base).cwiseAbs().maxCoeff());
  }
  o.require(scale_drift <= 1e-12, "scale drift " + fmt("%.3g", scale_drift));
  o.require(perm_drift <= 1e-12, "permutation drift " + fmt("%.3g", perm_drift));

  double sym_err = 0.0;
  const FitOptions<double> opts;
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng.below(8));
    Eigen::MatrixXd w = random_wins(rng, m);
    w = (w + w.transpose()).eval();
    const auto p = fit_strengths(w, opts).p;
    sym_err = std::max(sym_err, (p.array() - 1.0 / double(m)).abs().maxCoeff());
  }
  o.require(sym_err <= opts.tol, "symmetric fit off uniform by " + fmt("%.3g", sym_err));
  if (o.pass) {
    o.detail = "scale " + fmt("%.2g", scale_drift) + ", permutation " + fmt("%.2g", perm_drift) +
               ", symmetric " + fmt("%.2g", sym_err);
  }
  return o;
}

Outcome ac5_kl() {
  Outcome o;
  const auto schema = default_schema();
  Rng rng(505);
  double min_distinct = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 1000; ++trial) {
    const auto p = FactorProfile::from_grades(schema, random_grades(rng, schema->item_count()));
    const auto q = trial % 10 == 0
                       ? p
                       : FactorProfile::from_grades(schema, random_grades(rng, schema->item_count()));
    const double d = kl_divergence(p, q);
    const bool equal = p.flat() == q.flat();
    o.require(d >= 0.0, "negative divergence");
    o.require((d <= 1e-12) == equal, "zero-iff-equal violated at trial " + std::to_string(trial));
    if (!equal) min_distinct = std::min(min_distinct, d);
  }
  const auto toy = std::make_shared<const FactorSchema>(std::vector<FactorSpec>{
      {0, "Toy", FactorCategory::company_specific, "", {{"a", Polarity::positive}, {"b", Polarity::negative}}}});
  const auto p = FactorProfile::from_probabilities(toy, Eigen::Vector2d(0.75, 0.25));
  const auto q = FactorProfile::from_probabilities(toy, Eigen::Vector2d(0.25, 0.75));
  const double worked = kl_divergence(p, q);
  o.require(std::abs(worked - 0.5 * std::log(3.0)) <= 1e-9, "worked value " + fmt("%.12f", worked));
  if (o.pass) {
    o.detail = "0.5 ln 3 -> " + fmt("%.9f", worked) + ", min distinct divergence " +
               fmt("%.3g", min_distinct);
  }
  return o;
}

Outcome ac6_retrieval() {
  Outcome o;
  const auto schema = default_schema();
  Rng rng(606);
  std::vector<ProfileRecord> recs;
  for (int i = 0; i < 200; ++i) {
    recs.push_back({"R" + std::to_string(i), "T" + std::to_string(i % 20), Date::parse("2024-01-02"),
                    std::nullopt, kAllLabels[rng.below(5)],
                    FactorProfile::from_grades(schema, random_grades(rng, schema->item_count()))});
  }
  ProfileRecord copy = recs[17];
  copy.profile_id = "COPY";
  recs.push_back(copy);
  const auto corpus = corpus_from(recs);
  RetrieveOptions opt;
  opt.target_id = recs[17].profile_id;
  const auto a = retrieve(recs[17].profile, corpus, opt);
  const auto b = retrieve(recs[17].profile, corpus, opt);
  o.require(RetrieveOptions{}.k == 5 && kDefaultNeighbors == 5, "default K is not 5");
  o.require(a.size() == 5, "returned " + std::to_string(a.size()) + " neighbours");
  o.require(!a.empty() && a[0].profile_id == "COPY" && a[0].divergence == 0.0,
            "self-copy not first at divergence 0");
  for (std::size_t i = 1; i < a.size(); ++i) {
    o.require(a[i - 1].divergence <= a[i].divergence, "divergences not ascending");
  }
  bool same = a.size() == b.size();
  for (std::size_t i = 0; same && i < a.size(); ++i) {
    same = a[i].profile_id == b[i].profile_id && a[i].divergence == b[i].divergence;
  }
  o.require(same, "retrieval not deterministic");
  if (o.pass) o.detail = "copy first at 0, K=5, ascending, repeatable";
  return o;
}

Outcome ac7_labeler() {
  Outcome o;
  o.require(label_from_return(6.0) == DecisionLabel::strong_buy, "+6% not strong-buy");
  o.require(label_from_return(0.0) == DecisionLabel::hold, "0% not hold");
  o.require(label_from_return(-3.5) == DecisionLabel::sell, "-3.5% not sell");
  o.require(label_from_return(2.0) == DecisionLabel::hold, "+2.0% not hold");

  // Each return falls in exactly one band, and that band is the label.
  Rng rng(707);
  for (int i = 0; i < 100000; ++i) {
    const double r = -20.0 + 40.0 * rng.uniform();
    const bool bands[5] = {r > 5.0, r > 2.0 && r <= 5.0, r >= -2.0 && r <= 2.0,
                           r >= -5.0 && r < -2.0, r < -5.0};
    int hits = 0;
    std::size_t which = 0;
    for (std::size_t b = 0; b < 5; ++b) {
      if (bands[b]) {
        ++hits;
        which = b;
      }
    }
    o.require(hits == 1, "return " + fmt("%.6f", r) + " hits " + std::to_string(hits) + " bands");
    o.require(label_index(label_from_return(r)) == which, "return " + fmt("%.6f", r) + " mislabelled");
    if (!o.pass) break;
  }
  if (o.pass) o.detail = "4 worked examples, 1e5 random returns partitioned";
  return o;
}

Outcome ac8_synthetic() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto schema = default_schema();
  constexpr std::uint64_t kSeed = 42;
  constexpr std::size_t kCap = 5000;

  SynthSpec spec;
  spec.n = 500;
  spec.planted = schema->parse_item("Financial Health:positive outlook");
  const auto planted = schema->flat_index(spec.planted);

  auto run_at = [&](double noise) {
    spec.noise = noise;
    spec.seed = kSeed;
    const auto train = synth_corpus(spec, schema);
    spec.seed = kSeed + 1;
    const auto test = synth_corpus(spec, schema);
    std::vector<DecisionLabel> golds;
    for (const auto& r : test) golds.push_back(*r.label);
    auto result = fit_and_evaluate(train, test, Regime::cross_sector, kSeed, kCap, schema);
    return std::make_pair(std::move(result), class_distribution(golds));
  };

  const auto [clean, clean_counts] = run_at(0.0);
  const auto top = top_factors(clean.model, 1)[0].first;
  o.require(schema->flat_index(top) == planted,
            "planted item ranked below " + schema->item_label(schema->flat_index(top)));
  o.require(clean.report.macro_f1 >= 0.90, "noise 0 macro F1 " + fmt("%.4f", clean.report.macro_f1));

  const auto [noisy, noisy_counts] = run_at(0.3);
  const double baseline = random_baseline_macro_f1(noisy_counts);
  o.require(noisy.report.macro_f1 >= baseline + 0.10,
            "noise 0.3 macro F1 " + fmt("%.4f", noisy.report.macro_f1) + " vs baseline " +
                fmt("%.4f", baseline));

  const auto [heavy, heavy_counts] = run_at(0.5);
  o.require(clean.report.macro_f1 >= noisy.report.macro_f1 &&
                noisy.report.macro_f1 >= heavy.report.macro_f1,
            "macro F1 not monotone over noise 0, 0.3, 0.5");

  const double secs = seconds_since(t0);
  o.require(secs < 60.0, "runtime " + fmt("%.1fs", secs));
  if (o.pass) {
    o.detail = "planted #1; macro F1 " + fmt("%.3f", clean.report.macro_f1) + " (noise 0), " +
               fmt("%.3f", noisy.report.macro_f1) + " (0.3, baseline " + fmt("%.3f", baseline) +
               "), " + fmt("%.3f", heavy.report.macro_f1) + " (0.5); " + fmt("%.1fs", secs);
  }
  return o;
}

Outcome ac9_metrics() {
  Outcome o;
  using L = DecisionLabel;
  // Worked by hand: per-class F1 0.8, 0.5, 0.5, 2/3, 0.5.
  const LabelMap golds{{"i0", L::strong_buy}, {"i1", L::strong_buy}, {"i2", L::strong_buy},
                       {"i3", L::buy},        {"i4", L::buy},        {"i5", L::hold},
                       {"i6", L::hold},       {"i7", L::sell},       {"i8", L::strong_sell},
                       {"i9", L::strong_sell}};
  const LabelMap preds{{"i0", L::strong_buy}, {"i1", L::strong_buy}, {"i2", L::buy},
                       {"i3", L::buy},        {"i4", L::hold},       {"i5", L::hold},
                       {"i6", L::strong_sell}, {"i7", L::sell},      {"i8", L::strong_sell},
                       {"i9", L::sell}};
  const auto r = evaluate(preds, golds);
  o.require(r.accuracy == 0.6, "accuracy " + fmt("%.17g", r.accuracy));
  o.require(std::abs(r.macro_precision - 0.6) <= 1e-15, "macro precision " + fmt("%.17g", r.macro_precision));
  o.require(std::abs(r.macro_recall - 19.0 / 30.0) <= 1e-15, "macro recall " + fmt("%.17g", r.macro_recall));
  o.require(std::abs(r.macro_f1 - 89.0 / 150.0) <= 1e-15, "macro F1 " + fmt("%.17g", r.macro_f1));

  Rng rng(909);
  for (int trial = 0; trial < 1000 && o.pass; ++trial) {
    LabelMap p;
    LabelMap g;
    std::vector<L> gl;
    const int n = 1 + static_cast<int>(rng.below(60));
    for (int i = 0; i < n; ++i) {
      const auto gold = kAllLabels[rng.below(5)];
      g.emplace(std::to_string(i), gold);
      p.emplace(std::to_string(i), kAllLabels[rng.below(5)]);
      gl.push_back(gold);
    }
    const auto m = confusion(p, g);
    const auto counts = class_distribution(gl);
    for (std::size_t c = 0; c < kLabelCount; ++c) {
      o.require(m.row(static_cast<Eigen::Index>(c)).sum() == static_cast<std::int64_t>(counts[c]),
                "confusion row sum mismatch");
    }
  }
  if (o.pass) o.detail = "accuracy 0.6, macro F1 89/150 exact; 1000 random row-sum checks";
  return o;
}

Outcome ac10_extraction() {
  Outcome o;
  const auto schema = default_schema();
  const auto t = load_transcript(data_path("dal/transcript.json"));
  const auto prices = load_prices(data_path("dal/prices.csv"), t.ticker);
  const auto fin = load_financials(data_path("dal/financials.csv"), t.ticker);
  FixtureClient client(data_path("fixtures"));

  const auto a = extract_profile(client, t, prices, &fin, schema);
  const auto b = extract_profile(client, t, prices, &fin, schema);
  o.require(a.flat() == b.flat() && a == b, "two fixture runs differ");
  const ProfileRecord rec{"DAL-2021Q3", t.ticker, t.announcement_date, t.sector, std::nullopt, a};
  o.require(profile_to_jsonl_line(rec) + "\n" == slurp(data_path("dal/expected_profile.jsonl")),
            "profile differs from the bundled expected output");

  const auto rendered = [](const ChatExchange& ex) {
    return "[system]\n" + ex.system_message + "\n[user]\n" + ex.user_message + "\n";
  };
  std::vector<std::size_t> transcript_factors;
  for (const auto& f : schema->factors()) {
    if (f.category != FactorCategory::historical_metric) transcript_factors.push_back(f.id);
  }
  o.require(rendered(build_profile_prompt(t, *schema, transcript_factors)) ==
                slurp(data_path("golden/profile_prompt.txt")),
            "profile prompt differs from golden");
  const auto eps = *schema->find_factor("Historical Earnings Per Share (EPS)");
  o.require(rendered(build_history_prompt(eps_history_table(fin), t.announcement_date,
                                          schema->factor(eps))) ==
                slurp(data_path("golden/history_prompt.txt")),
            "history prompt differs from golden");
  o.require(rendered(build_cot_prompt(CotPayload::factor_profile, render_profile(a), t.ticker,
                                      t.announcement_date)) ==
                slurp(data_path("golden/cot_prompt.txt")),
            "chain-of-thought prompt differs from golden");
  std::vector<LikelihoodGrade> g1(schema->item_count(), grade_from_value(4));
  std::vector<LikelihoodGrade> g2(schema->item_count(), grade_from_value(2));
  g1[14] = grade_from_value(6);
  g2[15] = grade_from_value(5);
  const std::vector<AnalogyExample> examples{
      {FactorProfile::from_grades(schema, g1), DecisionLabel::strong_buy},
      {FactorProfile::from_grades(schema, g2), DecisionLabel::sell}};
  o.require(rendered(build_analogy_prompt(examples, a, t.ticker, t.announcement_date)) ==
                slurp(data_path("golden/analogy_prompt.txt")),
            "analogical prompt differs from golden");
  if (o.pass) o.detail = "bit-identical profile; 4 prompt templates match golden files";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> checks{
      {"AC1 normalization", ac1_normalization},
      {"AC2 two-item closed form", ac2_closed_form},
      {"AC3 grid-search likelihood oracle", ac3_oracle},
      {"AC4 scale/permutation invariance", ac4_invariances},
      {"AC5 KL divergence properties", ac5_kl},
      {"AC6 retrieval", ac6_retrieval},
      {"AC7 labeler bands", ac7_labeler},
      {"AC8 synthetic planted-factor pipeline", ac8_synthetic},
      {"AC9 metrics fixture", ac9_metrics},
      {"AC10 extraction determinism", ac10_extraction},
  };
  int failures = 0;
  for (const auto& [name, check] : checks) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << name << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
