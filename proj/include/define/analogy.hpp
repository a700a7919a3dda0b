#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "define/client.hpp"
#include "define/decision_label.hpp"
#include "define/ingest.hpp"
#include "define/schema.hpp"

namespace define {

/// Discrete KL divergence sum_i P_i ln(P_i / Q_i) in nats. Over a flattened
/// profile this is the sum of the per-factor divergences. Entries must be
/// strictly positive; the result is clamped at 0 against rounding.
template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar kl_divergence(const Eigen::MatrixBase<DerivedP>& p,
                                        const Eigen::MatrixBase<DerivedQ>& q) {
  using Scalar = typename DerivedP::Scalar;
  const Scalar d = (p.array() * (p.array() / q.array()).log()).sum();
  return d > Scalar(0) ? d : Scalar(0);
}

// Throws SchemaMismatch.
double kl_divergence(const FactorProfile& p, const FactorProfile& q);

struct Neighbor {
  std::string profile_id;
  double divergence = 0.0;
  DecisionLabel label = DecisionLabel::hold;
};

struct CorpusEntry {
  std::string profile_id;
  const FactorProfile* profile = nullptr;
  DecisionLabel label = DecisionLabel::hold;
  std::string ticker;
};

// Labelled records only; records without a label are skipped.
std::vector<CorpusEntry> corpus_from(std::span<const ProfileRecord> records);

inline constexpr std::size_t kDefaultNeighbors = 5;

struct RetrieveOptions {
  std::size_t k = kDefaultNeighbors;
  std::optional<std::string> target_id;      // excluded from the candidates
  std::optional<std::string> exclude_ticker; // drops the company's own history
};

// The min(k, |candidates|) entries with the smallest KL(target || entry),
// ascending, ties by profile id. Throws EmptyCorpus when nothing remains to
// compare against, PreconditionError for k = 0.
std::vector<Neighbor> retrieve(const FactorProfile& target, std::span<const CorpusEntry> corpus,
                               const RetrieveOptions& options = {});

// Most frequent label; a tie goes to whichever tied label appears first
// (i.e. nearest) in the neighbour list.
DecisionLabel majority_vote(std::span<const Neighbor> neighbors);

struct AnalogicalDecision {
  std::size_t chosen_idx = 0;  // 1-based into the neighbour list
  DecisionLabel label = DecisionLabel::hold;
  std::string justification;
  std::string chosen_profile_id;
};

// Asks the model to pick the most analogous neighbour and a decision.
// Throws MalformedResponse, IdxOutOfRange or UnknownAction.
AnalogicalDecision analogical_decision(CompletionClient& client, const FactorProfile& target,
                                       std::span<const Neighbor> neighbors,
                                       std::span<const CorpusEntry> corpus,
                                       std::string_view company, Date date);

std::string neighbors_to_json(std::span<const Neighbor> neighbors);

}  // namespace define
