#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "define/analogy.hpp"
#include "define/btmodel.hpp"
#include "define/client.hpp"
#include "define/decide.hpp"
#include "define/decision_label.hpp"
#include "define/ingest.hpp"
#include "define/prompts.hpp"

namespace define {

using LabelMap = std::map<std::string, DecisionLabel>;
// Rows are gold labels, columns predictions, both in kAllLabels order.
using ConfusionMatrix = Eigen::Matrix<std::int64_t, 5, 5>;
using PerClass = std::array<double, kLabelCount>;

struct EvalReport {
  std::size_t n = 0;
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  PerClass precision{};
  PerClass recall{};
  PerClass f1{};
  LabelCounts support{};  // gold counts
  ConfusionMatrix confusion = ConfusionMatrix::Zero();
};

// Throws IdMismatch unless both maps cover the same ids.
ConfusionMatrix confusion(const LabelMap& preds, const LabelMap& golds);

// Macro means run over the classes that occur in the gold or predicted
// labels; a 0/0 precision, recall or F1 counts as 0.
EvalReport evaluate(const LabelMap& preds, const LabelMap& golds);

std::string report_to_json(const EvalReport& report);
std::string confusion_to_csv(const ConfusionMatrix& m);

// Expected macro F1 of a predictor that picks each label uniformly at
// random, given the gold class proportions: the mean over present classes
// of 2 * 0.2 * pi_c / (0.2 + pi_c).
double random_baseline_macro_f1(const LabelCounts& gold_counts);

struct AgreementReport {
  std::size_t n = 0;
  double agreement_rate = 0.0;
  // counts(r, c): nearest-neighbour label r, system prediction c.
  ConfusionMatrix counts = ConfusionMatrix::Zero();
  // Row-normalized counts; rows with no cases are zero.
  Eigen::Matrix<double, 5, 5> conditional = Eigen::Matrix<double, 5, 5>::Zero();
};

AgreementReport agreement_analysis(const LabelMap& system_preds, const LabelMap& nearest_labels);
std::string agreement_to_json(const AgreementReport& report);

struct DensityPoint {
  std::string profile_id;
  double positive_mass = 0.0;  // mean probability over positive-polarity items
  double negative_mass = 0.0;  // mean probability over negative-polarity items
};

using DensityReport = std::array<std::vector<DensityPoint>, kLabelCount>;

// Labelled records only, grouped by label.
DensityReport density_report(std::span<const ProfileRecord> records);
std::string density_to_csv(const DensityReport& report);

// ---------------------------------------------------------------------------
// Synthetic planted-factor corpus.

struct SynthSpec {
  std::uint64_t seed = 0;
  std::size_t n = 500;
  OutcomeId planted{};
  double noise = 0.0;
  // Unnormalized weights over grades 1..6 for the planted item's factor.
  std::array<double, 6> grade_weights{1, 1, 1, 1, 1, 1};
  // Weights for every other factor. The default keeps distractors away from
  // the extreme grades, so that at n = 500 their chance correlation with the
  // labels stays small next to the planted signal.
  std::array<double, 6> distractor_weights{0, 1, 2, 2, 1, 0};
  // Target label proportions, strong-buy first.
  std::array<double, kLabelCount> proportions{34, 15, 21, 9, 21};
};

// Largest-remainder split of n into the given proportions.
LabelCounts apportion(std::size_t n, const std::array<double, kLabelCount>& proportions);

// Profiles with randomly drawn grades; the planted item's probability is
// the latent score. Labels follow the latent score by quantile (equal
// latents always share a label), then each label is redrawn uniformly over
// the five classes with probability `noise`. Records carry synthetic
// tickers (four quarters per company) and one of eleven sectors.
std::vector<ProfileRecord> synth_corpus(const SynthSpec& spec, SchemaPtr schema);

// ---------------------------------------------------------------------------
// Experiment runners.

struct FitAndEval {
  SalienceModel model;
  std::size_t pair_count = 0;
  EvalReport report;
};

// Fits on train (pairs under the regime, capped), predicts test by rank
// quantile against the test gold counts, and evaluates.
FitAndEval fit_and_evaluate(std::span<const ProfileRecord> train,
                            std::span<const ProfileRecord> test, Regime regime,
                            std::uint64_t seed, std::optional<std::size_t> cap,
                            SchemaPtr schema);

struct RegimeResult {
  Regime regime = Regime::cross_sector;
  std::size_t candidate_pairs = 0;
  FitAndEval result;
};

// All three regimes, each downsampled to the same pair count (the smallest
// candidate count, further limited by cap) so that they are comparable.
std::vector<RegimeResult> run_regimes(std::span<const ProfileRecord> train,
                                      std::span<const ProfileRecord> test, std::uint64_t seed,
                                      std::optional<std::size_t> cap, SchemaPtr schema);

struct SectorGrid {
  std::vector<std::string> sectors;
  // macro_f1(i, j): trained on sector i, tested on sector j; NaN when the
  // cell cannot be fitted or has no test profiles.
  Eigen::MatrixXd macro_f1;
  Eigen::MatrixXd accuracy;
};

SectorGrid cross_sector_grid(std::span<const ProfileRecord> train,
                             std::span<const ProfileRecord> test, std::uint64_t seed,
                             std::optional<std::size_t> cap, SchemaPtr schema);
std::string sector_grid_to_csv(const SectorGrid& grid);

struct KSweepPoint {
  std::size_t k = 0;
  EvalReport report;
};

// Leave-one-out majority vote over the K nearest profiles.
std::vector<KSweepPoint> k_sweep(std::span<const ProfileRecord> records,
                                 std::span<const std::size_t> ks, bool exclude_same_ticker);

// Chain-of-thought baseline: payloads[id] is the transcript text, summary or
// rendered profile for that record.
struct CotRun {
  LabelMap predictions;
  EvalReport report;
};

CotRun run_cot_baseline(CompletionClient& client, CotPayload kind,
                        std::span<const ProfileRecord> records,
                        const std::map<std::string, std::string>& payloads);

}  // namespace define
