#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "define/btmodel.hpp"
#include "define/decision_label.hpp"
#include "define/schema.hpp"

namespace define {

struct DecisionScore {
  std::string profile_id;
  double score = 0.0;
};

/// Salience-weighted outcome mass: sum_x p_x P(x | profile).
template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar score(const Eigen::MatrixBase<DerivedP>& salience,
                               const Eigen::MatrixBase<DerivedQ>& probabilities) {
  return salience.dot(probabilities);
}

// Throws SchemaMismatch.
double score(const FactorProfile& profile, const SalienceModel& model);

std::vector<DecisionScore> score_all(std::span<const ProfileRecord> records,
                                     const SalienceModel& model);

// Highest scores get strong-buy, then buy, and so on down the counts; equal
// scores are ordered by ascending profile id. Throws CountMismatch unless
// the counts sum to the number of scores.
std::map<std::string, DecisionLabel> assign_by_quantile(std::span<const DecisionScore> scores,
                                                        const LabelCounts& target_counts);

using Cutpoints = std::array<double, 4>;

// score < c0 -> strong-sell, c0 <= score < c1 -> sell, ..., score >= c3 ->
// strong-buy. Throws NonMonotoneCutpoints unless strictly ascending.
DecisionLabel assign_by_threshold(double score, const Cutpoints& cutpoints);

// Cutpoints halfway between the neighbouring scores at each class boundary
// of the quantile assignment, so that assign_by_threshold reproduces it on
// this batch whenever boundary scores differ. Empty classes share a cutpoint
// position, nudged apart to stay strictly ascending.
Cutpoints quantile_cutpoints(std::span<const DecisionScore> scores, const LabelCounts& counts);

Cutpoints parse_cutpoints(std::string_view text);

}  // namespace define
