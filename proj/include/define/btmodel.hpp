#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "define/bradley_terry.hpp"
#include "define/decision_label.hpp"
#include "define/ingest.hpp"
#include "define/schema.hpp"

namespace define {

enum class Regime { same_sector, cross_sector, same_company };

std::string_view to_string(Regime r);
Regime parse_regime(std::string_view text);

// A transcript's label and grouping keys, the input to pair generation.
struct LabeledItem {
  std::string profile_id;
  DecisionLabel label = DecisionLabel::hold;
  std::optional<std::string> sector;
  std::string ticker;
};

std::vector<LabeledItem> labeled_items(std::span<const ProfileRecord> records);

struct PreferencePair {
  std::string winner_profile_id;
  std::string loser_profile_id;
  Regime regime = Regime::cross_sector;
  friend bool operator==(const PreferencePair&, const PreferencePair&) = default;
};

// The comparison list: strong-buy beats hold, sell and strong-sell; buy
// beats sell and strong-sell; hold beats strong-sell. Adjacent classes are
// never compared.
bool outranks(DecisionLabel a, DecisionLabel b);

// Whether two items may be paired under a regime. Items without a sector
// never pair under the sector regimes.
bool regime_admits(Regime regime, const LabeledItem& a, const LabeledItem& b);

// Every qualifying ordered pair over items i < j (in input order); when
// more than `cap` qualify, a seeded uniform subset of size `cap` is kept in
// enumeration order.
std::vector<PreferencePair> preference_pairs(std::span<const LabeledItem> items, Regime regime,
                                             std::uint64_t seed,
                                             std::optional<std::size_t> cap = std::nullopt);

// M x M expected-occurrence wins, item index = flattened outcome index.
using ComparisonMatrix = Eigen::MatrixXd;
using ProfileLookup = std::unordered_map<std::string, const FactorProfile*>;

ProfileLookup index_profiles(std::span<const ProfileRecord> records);

// For each pair (A beats B) and each x != y: w_xy += P(x|A) P(y|B).
ComparisonMatrix accumulate(std::span<const PreferencePair> pairs, const ProfileLookup& profiles,
                            const FactorSchema& schema);

// The same-item reading: v_x = sum over pairs of P(x|A) P(x|B). Kept for
// inspection; as a win matrix it is diagonal and carries no ranking signal.
Eigen::VectorXd accumulate_same_item(std::span<const PreferencePair> pairs,
                                     const ProfileLookup& profiles, const FactorSchema& schema);

/// Fitted salience over the schema's outcome items.
struct SalienceModel {
  SchemaPtr schema;
  Eigen::VectorXd p;  // simplex, strictly positive
  int iterations = 0;
  double max_change = 0.0;
  double tol = 0.0;
  std::optional<Regime> regime;
  std::optional<std::uint64_t> seed;
};

SalienceModel fit(const ComparisonMatrix& matrix, SchemaPtr schema,
                  const FitOptions<double>& options = {});

double pairwise_prob(const SalienceModel& model, OutcomeId x, OutcomeId y);

// Descending salience, ties by flat index; 1 <= k <= M.
std::vector<std::pair<OutcomeId, double>> top_factors(const SalienceModel& model, std::size_t k);

std::string model_to_json(const SalienceModel& model);
// Throws SchemaMismatch when the stored schema hash differs.
SalienceModel model_from_json(std::string_view text, SchemaPtr schema);
void save_model(const SalienceModel& model, const std::string& path);
SalienceModel load_model(const std::string& path, SchemaPtr schema);

std::string pairs_to_jsonl(std::span<const PreferencePair> pairs);
std::vector<PreferencePair> pairs_from_jsonl(std::string_view text);

}  // namespace define
