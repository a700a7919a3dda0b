#include "define/decide.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "define/errors.hpp"

namespace define {

double score(const FactorProfile& profile, const SalienceModel& model) {
  require_same_schema(profile.schema(), *model.schema);
  return score(model.p, profile.flat());
}

std::vector<DecisionScore> score_all(std::span<const ProfileRecord> records,
                                     const SalienceModel& model) {
  std::vector<DecisionScore> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({r.profile_id, score(r.profile, model)});
  return out;
}

namespace {

std::size_t total(const LabelCounts& counts) {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

void require_counts(std::span<const DecisionScore> scores, const LabelCounts& counts) {
  if (total(counts) != scores.size()) {
    throw CountMismatch("target counts sum to " + std::to_string(total(counts)) + " but there are " +
                        std::to_string(scores.size()) + " scores");
  }
}

// Descending by score, ties by ascending id.
std::vector<const DecisionScore*> ranked(std::span<const DecisionScore> scores) {
  std::vector<const DecisionScore*> order;
  order.reserve(scores.size());
  for (const auto& s : scores) {
    if (!std::isfinite(s.score)) throw ValidationError("score for '" + s.profile_id + "' is not finite");
    order.push_back(&s);
  }
  std::sort(order.begin(), order.end(), [](const DecisionScore* a, const DecisionScore* b) {
    if (a->score != b->score) return a->score > b->score;
    return a->profile_id < b->profile_id;
  });
  return order;
}

}  // namespace

std::map<std::string, DecisionLabel> assign_by_quantile(std::span<const DecisionScore> scores,
                                                        const LabelCounts& target_counts) {
  require_counts(scores, target_counts);
  const auto order = ranked(scores);
  std::map<std::string, DecisionLabel> out;
  std::size_t pos = 0;
  for (auto label : kAllLabels) {
    for (std::size_t k = 0; k < target_counts[label_index(label)]; ++k, ++pos) {
      if (!out.emplace(order[pos]->profile_id, label).second) {
        throw ValidationError("duplicate profile id '" + order[pos]->profile_id + "'");
      }
    }
  }
  return out;
}

DecisionLabel assign_by_threshold(double score, const Cutpoints& c) {
  for (std::size_t i = 1; i < c.size(); ++i) {
    if (!(c[i - 1] < c[i])) throw NonMonotoneCutpoints("cutpoints must be strictly ascending");
  }
  if (score < c[0]) return DecisionLabel::strong_sell;
  if (score < c[1]) return DecisionLabel::sell;
  if (score < c[2]) return DecisionLabel::hold;
  if (score < c[3]) return DecisionLabel::buy;
  return DecisionLabel::strong_buy;
}

Cutpoints quantile_cutpoints(std::span<const DecisionScore> scores, const LabelCounts& counts) {
  if (scores.empty()) throw PreconditionError("cannot derive cutpoints from an empty batch");
  require_counts(scores, counts);
  const auto order = ranked(scores);
  const std::size_t n = order.size();
  // Ascending view: position i holds the i-th lowest score.
  auto low = [&](std::size_t i) { return order[n - 1 - i]->score; };
  constexpr double inf = std::numeric_limits<double>::infinity();

  Cutpoints cut{};
  std::size_t boundary = 0;
  for (std::size_t i = 0; i < cut.size(); ++i) {
    // Cutpoint i sits above the bottom classes strong-sell .. (strong-sell - i).
    boundary += counts[kLabelCount - 1 - i];
    double c;
    if (boundary == 0) {
      c = -inf;  // placed below the lowest score once all cutpoints are known
    } else if (boundary == n) {
      c = std::nextafter(low(n - 1), inf);
    } else {
      const double a = low(boundary - 1);
      const double b = low(boundary);
      c = a + (b - a) / 2.0;
      if (c <= a && a < b) c = b;
    }
    if (i > 0 && c <= cut[i - 1] && cut[i - 1] > -inf) c = std::nextafter(cut[i - 1], inf);
    cut[i] = c;
  }
  // Empty bottom classes: step down from the lowest score so it stays above
  // every one of their cutpoints.
  double below = low(0);
  for (std::size_t i = cut.size(); i-- > 0;) {
    if (cut[i] > -inf) continue;
    below = std::nextafter(below, -inf);
    cut[i] = below;
  }
  return cut;
}

Cutpoints parse_cutpoints(std::string_view text) {
  Cutpoints cut{};
  std::size_t i = 0;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    auto field = text.substr(start, comma == std::string_view::npos ? text.npos : comma - start);
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
    if (i >= cut.size()) throw ConfigError("expected exactly 4 cutpoints");
    double v = 0;
    auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || p != field.data() + field.size()) {
      throw ConfigError("cutpoint '" + std::string(field) + "' is not a number");
    }
    cut[i++] = v;
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (i != cut.size()) throw ConfigError("expected exactly 4 cutpoints");
  for (std::size_t k = 1; k < cut.size(); ++k) {
    if (!(cut[k - 1] < cut[k])) throw NonMonotoneCutpoints("cutpoints must be strictly ascending");
  }
  return cut;
}

}  // namespace define
