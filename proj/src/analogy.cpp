#include "define/analogy.hpp"

#include <algorithm>
#include <array>
#include <unordered_map>

#include "define/errors.hpp"
#include "define/extractor.hpp"
#include "define/prompts.hpp"
#include "json.hpp"

namespace define {

double kl_divergence(const FactorProfile& p, const FactorProfile& q) {
  require_same_schema(p.schema(), q.schema());
  return kl_divergence(p.flat(), q.flat());
}

std::vector<CorpusEntry> corpus_from(std::span<const ProfileRecord> records) {
  std::vector<CorpusEntry> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (r.label) out.push_back({r.profile_id, &r.profile, *r.label, r.ticker});
  }
  return out;
}

std::vector<Neighbor> retrieve(const FactorProfile& target, std::span<const CorpusEntry> corpus,
                               const RetrieveOptions& options) {
  if (options.k == 0) throw PreconditionError("k must be at least 1");
  std::vector<Neighbor> scored;
  scored.reserve(corpus.size());
  for (const auto& e : corpus) {
    if (options.target_id && e.profile_id == *options.target_id) continue;
    if (options.exclude_ticker && e.ticker == *options.exclude_ticker) continue;
    scored.push_back({e.profile_id, kl_divergence(target, *e.profile), e.label});
  }
  if (scored.empty()) throw EmptyCorpus("no candidate profiles to retrieve from");
  const auto k = std::min(options.k, scored.size());
  const auto by_divergence = [](const Neighbor& a, const Neighbor& b) {
    if (a.divergence != b.divergence) return a.divergence < b.divergence;
    return a.profile_id < b.profile_id;
  };
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(),
                    by_divergence);
  scored.resize(k);
  return scored;
}

DecisionLabel majority_vote(std::span<const Neighbor> neighbors) {
  if (neighbors.empty()) throw PreconditionError("majority vote over no neighbours");
  std::array<std::size_t, kLabelCount> votes{};
  for (const auto& n : neighbors) ++votes[label_index(n.label)];
  const auto best = *std::max_element(votes.begin(), votes.end());
  for (const auto& n : neighbors) {
    if (votes[label_index(n.label)] == best) return n.label;
  }
  return neighbors.front().label;
}

AnalogicalDecision analogical_decision(CompletionClient& client, const FactorProfile& target,
                                       std::span<const Neighbor> neighbors,
                                       std::span<const CorpusEntry> corpus,
                                       std::string_view company, Date date) {
  if (neighbors.empty()) throw PreconditionError("analogical decision needs neighbours");
  std::unordered_map<std::string, const CorpusEntry*> by_id;
  for (const auto& e : corpus) by_id.emplace(e.profile_id, &e);

  std::vector<AnalogyExample> examples;
  examples.reserve(neighbors.size());
  for (const auto& n : neighbors) {
    const auto it = by_id.find(n.profile_id);
    if (it == by_id.end()) throw MissingProfile("neighbour '" + n.profile_id + "' not in corpus");
    examples.push_back({*it->second->profile, n.label});
  }

  const auto exchange = build_analogy_prompt(examples, target, company, date);
  const auto reply = parse_decision_reply(client.complete(exchange), /*require_idx=*/true);
  const auto k = static_cast<long long>(neighbors.size());
  if (*reply.idx < 1 || *reply.idx > k) {
    throw IdxOutOfRange("reply chose example " + std::to_string(*reply.idx) + " of " +
                        std::to_string(k));
  }
  AnalogicalDecision out;
  out.chosen_idx = static_cast<std::size_t>(*reply.idx);
  out.label = reply.recommendation;
  out.justification = reply.justification;
  out.chosen_profile_id = neighbors[out.chosen_idx - 1].profile_id;
  return out;
}

std::string neighbors_to_json(std::span<const Neighbor> neighbors) {
  auto arr = nlohmann::json::array();
  for (const auto& n : neighbors) {
    arr.push_back({{"profile_id", n.profile_id},
                   {"divergence", n.divergence},
                   {"label", std::string(to_string(n.label))}});
  }
  return arr.dump(2);
}

}  // namespace define
