#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include "define/errors.hpp"
#include "define/evalx.hpp"
#include "define/extractor.hpp"
#include "define/labeler.hpp"

namespace define {

namespace {

SalienceModel fit_on(std::span<const ProfileRecord> train, Regime regime, std::uint64_t seed,
                     std::optional<std::size_t> cap, const SchemaPtr& schema,
                     std::size_t* pair_count) {
  const auto items = labeled_items(train);
  const auto pairs = preference_pairs(items, regime, seed, cap);
  if (pair_count) *pair_count = pairs.size();
  auto model = fit(accumulate(pairs, index_profiles(train), *schema), schema);
  model.regime = regime;
  model.seed = seed;
  return model;
}

std::vector<ProfileRecord> labelled(std::span<const ProfileRecord> records) {
  std::vector<ProfileRecord> out;
  for (const auto& r : records) {
    if (r.label) out.push_back(r);
  }
  return out;
}

// Rank-quantile predictions against the test set's own gold distribution.
EvalReport evaluate_model(const SalienceModel& model, std::span<const ProfileRecord> test) {
  const auto gold_records = labelled(test);
  LabelMap golds;
  std::vector<DecisionLabel> gold_list;
  for (const auto& r : gold_records) {
    golds.emplace(r.profile_id, *r.label);
    gold_list.push_back(*r.label);
  }
  const auto scores = score_all(gold_records, model);
  const auto preds = assign_by_quantile(scores, class_distribution(gold_list));
  return evaluate(preds, golds);
}

std::string csv_double(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

FitAndEval fit_and_evaluate(std::span<const ProfileRecord> train,
                            std::span<const ProfileRecord> test, Regime regime,
                            std::uint64_t seed, std::optional<std::size_t> cap,
                            SchemaPtr schema) {
  FitAndEval out;
  out.model = fit_on(train, regime, seed, cap, schema, &out.pair_count);
  out.report = evaluate_model(out.model, test);
  return out;
}

std::vector<RegimeResult> run_regimes(std::span<const ProfileRecord> train,
                                      std::span<const ProfileRecord> test, std::uint64_t seed,
                                      std::optional<std::size_t> cap, SchemaPtr schema) {
  constexpr std::array regimes{Regime::same_sector, Regime::cross_sector, Regime::same_company};
  const auto items = labeled_items(train);
  std::array<std::size_t, 3> candidates{};
  std::optional<std::size_t> common;
  for (std::size_t r = 0; r < regimes.size(); ++r) {
    candidates[r] = preference_pairs(items, regimes[r], seed).size();
    if (candidates[r] > 0) common = common ? std::min(*common, candidates[r]) : candidates[r];
  }
  if (common && cap) common = std::min(*common, *cap);
  if (!common) common = cap;

  std::vector<RegimeResult> out;
  for (std::size_t r = 0; r < regimes.size(); ++r) {
    out.push_back({regimes[r], candidates[r],
                   fit_and_evaluate(train, test, regimes[r], seed, common, schema)});
  }
  return out;
}

SectorGrid cross_sector_grid(std::span<const ProfileRecord> train,
                             std::span<const ProfileRecord> test, std::uint64_t seed,
                             std::optional<std::size_t> cap, SchemaPtr schema) {
  std::set<std::string> names;
  for (const auto& r : train) {
    if (r.sector) names.insert(*r.sector);
  }
  for (const auto& r : test) {
    if (r.sector) names.insert(*r.sector);
  }
  SectorGrid grid;
  grid.sectors.assign(names.begin(), names.end());
  const auto s = static_cast<Eigen::Index>(grid.sectors.size());
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  grid.macro_f1 = Eigen::MatrixXd::Constant(s, s, nan);
  grid.accuracy = Eigen::MatrixXd::Constant(s, s, nan);

  const auto in_sector = [](std::span<const ProfileRecord> rs, const std::string& name) {
    std::vector<ProfileRecord> out;
    for (const auto& r : rs) {
      if (r.label && r.sector == name) out.push_back(r);
    }
    return out;
  };
  std::vector<std::vector<ProfileRecord>> test_by_sector;
  for (const auto& name : grid.sectors) test_by_sector.push_back(in_sector(test, name));

  for (Eigen::Index i = 0; i < s; ++i) {
    const auto train_i = in_sector(train, grid.sectors[static_cast<std::size_t>(i)]);
    std::size_t pairs = 0;
    const auto model = fit_on(train_i, Regime::same_sector, seed, cap, schema, &pairs);
    if (pairs == 0) continue;
    for (Eigen::Index j = 0; j < s; ++j) {
      const auto& test_j = test_by_sector[static_cast<std::size_t>(j)];
      if (test_j.empty()) continue;
      const auto report = evaluate_model(model, test_j);
      grid.macro_f1(i, j) = report.macro_f1;
      grid.accuracy(i, j) = report.accuracy;
    }
  }
  return grid;
}

std::string sector_grid_to_csv(const SectorGrid& grid) {
  std::ostringstream out;
  out << "train_sector,test_sector,macro_f1,accuracy\n";
  for (std::size_t i = 0; i < grid.sectors.size(); ++i) {
    for (std::size_t j = 0; j < grid.sectors.size(); ++j) {
      const auto a = static_cast<Eigen::Index>(i);
      const auto b = static_cast<Eigen::Index>(j);
      out << '"' << grid.sectors[i] << "\",\"" << grid.sectors[j] << "\","
          << csv_double(grid.macro_f1(a, b)) << ',' << csv_double(grid.accuracy(a, b)) << '\n';
    }
  }
  return out.str();
}

std::vector<KSweepPoint> k_sweep(std::span<const ProfileRecord> records,
                                 std::span<const std::size_t> ks, bool exclude_same_ticker) {
  if (ks.empty()) throw PreconditionError("k sweep needs at least one K");
  const auto max_k = *std::max_element(ks.begin(), ks.end());
  const auto corpus = corpus_from(records);
  std::vector<LabelMap> preds(ks.size());
  LabelMap golds;
  for (const auto& entry : corpus) {
    RetrieveOptions opt;
    opt.k = max_k;
    opt.target_id = entry.profile_id;
    if (exclude_same_ticker) opt.exclude_ticker = entry.ticker;
    const auto neighbors = retrieve(*entry.profile, corpus, opt);
    golds.emplace(entry.profile_id, entry.label);
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const auto k = std::min(ks[i], neighbors.size());
      preds[i].emplace(entry.profile_id,
                       majority_vote(std::span<const Neighbor>(neighbors.data(), k)));
    }
  }
  std::vector<KSweepPoint> out;
  for (std::size_t i = 0; i < ks.size(); ++i) out.push_back({ks[i], evaluate(preds[i], golds)});
  return out;
}

CotRun run_cot_baseline(CompletionClient& client, CotPayload kind,
                        std::span<const ProfileRecord> records,
                        const std::map<std::string, std::string>& payloads) {
  CotRun run;
  LabelMap golds;
  for (const auto& r : records) {
    if (!r.label) continue;
    const auto it = payloads.find(r.profile_id);
    if (it == payloads.end()) {
      throw PreconditionError("no baseline payload for profile '" + r.profile_id + "'");
    }
    const auto exchange = build_cot_prompt(kind, it->second, r.ticker, r.date);
    const auto reply = parse_decision_reply(client.complete(exchange), /*require_idx=*/false);
    run.predictions.emplace(r.profile_id, reply.recommendation);
    golds.emplace(r.profile_id, *r.label);
  }
  run.report = evaluate(run.predictions, golds);
  return run;
}

}  // namespace define
