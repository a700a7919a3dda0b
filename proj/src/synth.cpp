#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "define/errors.hpp"
#include "define/evalx.hpp"
#include "define/random.hpp"

namespace define {

namespace {

constexpr std::array<const char*, 11> kSectors = {
    "Basic Materials", "Communication Services", "Consumer Cyclical", "Consumer Defensive",
    "Energy",          "Financial Services",     "Healthcare",        "Industrials",
    "Real Estate",     "Technology",             "Utilities"};

constexpr std::size_t kQuartersPerCompany = 4;

std::string padded(const char* prefix, std::size_t v, int width) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, v);
  return buf;
}

}  // namespace

LabelCounts apportion(std::size_t n, const std::array<double, kLabelCount>& proportions) {
  double total = 0;
  for (double p : proportions) {
    if (!(p >= 0) || !std::isfinite(p)) throw ConfigError("label proportions must be non-negative");
    total += p;
  }
  if (total <= 0) throw ConfigError("label proportions must not all be zero");

  LabelCounts counts{};
  std::array<double, kLabelCount> remainder{};
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < kLabelCount; ++c) {
    const double exact = static_cast<double>(n) * proportions[c] / total;
    counts[c] = static_cast<std::size_t>(std::floor(exact));
    remainder[c] = exact - std::floor(exact);
    assigned += counts[c];
  }
  std::array<std::size_t, kLabelCount> order{};
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % kLabelCount]];
  return counts;
}

std::vector<ProfileRecord> synth_corpus(const SynthSpec& spec, SchemaPtr schema) {
  if (spec.noise < 0.0 || spec.noise > 1.0) throw ConfigError("noise must be in [0, 1]");
  if (spec.n == 0) throw ConfigError("corpus size must be positive");
  const auto planted = schema->flat_index(spec.planted);  // validates the item
  const auto m = schema->item_count();

  const auto weights_of = [](const std::array<double, 6>& w) {
    std::vector<double> out(w.begin(), w.end());
    if (std::any_of(out.begin(), out.end(), [](double x) { return !(x >= 0); }) ||
        std::accumulate(out.begin(), out.end(), 0.0) <= 0) {
      throw ConfigError("grade weights must be non-negative and not all zero");
    }
    return out;
  };
  const auto planted_weights = weights_of(spec.grade_weights);
  const auto distractor_weights = weights_of(spec.distractor_weights);
  const auto planted_factor = spec.planted.factor_index;

  Rng rng(spec.seed);
  std::vector<ProfileRecord> out;
  out.reserve(spec.n);
  const Date base = Date::parse("2023-01-15");
  for (std::size_t i = 0; i < spec.n; ++i) {
    std::vector<LikelihoodGrade> grades;
    grades.reserve(m);
    for (std::size_t f = 0; f < schema->factor_count(); ++f) {
      const auto& w = f == planted_factor ? planted_weights : distractor_weights;
      for (std::size_t j = 0; j < schema->outcome_count(f); ++j) {
        grades.push_back(grade_from_value(static_cast<int>(rng.categorical(w)) + 1));
      }
    }
    const auto company = i / kQuartersPerCompany;
    ProfileRecord rec{
        padded("SYN-", i, 5),
        padded("SYN", company, 4),
        base.plus_days(static_cast<int>(91 * (i % kQuartersPerCompany))),
        std::string(kSectors[company % kSectors.size()]),
        std::nullopt,
        FactorProfile::from_grades(schema, std::move(grades)),
    };
    out.push_back(std::move(rec));
  }

  // Rank by latent score (descending, ties by index) and give each group of
  // equal latents the class that the quantile split assigns to the group's
  // middle rank.
  std::vector<std::size_t> order(spec.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto latent = [&](std::size_t i) {
    return out[i].profile.flat()[static_cast<Eigen::Index>(planted)];
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return latent(a) > latent(b); });
  const auto counts = apportion(spec.n, spec.proportions);
  std::vector<DecisionLabel> by_rank(spec.n);
  {
    std::size_t pos = 0;
    for (auto l : kAllLabels) {
      for (std::size_t k = 0; k < counts[label_index(l)]; ++k) by_rank[pos++] = l;
    }
  }
  for (std::size_t start = 0; start < spec.n;) {
    std::size_t end = start + 1;
    while (end < spec.n && latent(order[end]) == latent(order[start])) ++end;
    const auto label = by_rank[start + (end - start - 1) / 2];
    for (std::size_t r = start; r < end; ++r) out[order[r]].label = label;
    start = end;
  }

  if (spec.noise > 0.0) {
    for (auto& rec : out) {
      if (rng.uniform() < spec.noise) rec.label = kAllLabels[rng.below(kLabelCount)];
    }
  }
  return out;
}

}  // namespace define
