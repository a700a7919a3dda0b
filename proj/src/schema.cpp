#include "define/schema.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "define/digest.hpp"
#include "define/errors.hpp"
#include "json.hpp"

namespace define {

using nlohmann::json;

std::string normalize_token(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char raw : text) {
    auto c = static_cast<unsigned char>(raw);
    if (raw == '-' || raw == '_' || std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::string_view to_string(FactorCategory c) {
  switch (c) {
    case FactorCategory::macroeconomic: return "macroeconomic";
    case FactorCategory::company_specific: return "company-specific";
    case FactorCategory::historical_metric: return "historical-metric";
  }
  return "?";
}

std::string_view to_string(Polarity p) {
  switch (p) {
    case Polarity::positive: return "positive";
    case Polarity::negative: return "negative";
    case Polarity::neutral_uncertain: return "neutral-uncertain";
  }
  return "?";
}

FactorCategory parse_category(std::string_view text) {
  const auto t = normalize_token(text);
  if (t == "macroeconomic") return FactorCategory::macroeconomic;
  if (t == "company specific") return FactorCategory::company_specific;
  if (t == "historical metric") return FactorCategory::historical_metric;
  throw ValidationError("unknown factor category '" + std::string(text) + "'");
}

Polarity parse_polarity(std::string_view text) {
  const auto t = normalize_token(text);
  if (t == "positive") return Polarity::positive;
  if (t == "negative") return Polarity::negative;
  if (t == "neutral uncertain") return Polarity::neutral_uncertain;
  throw ValidationError("unknown outcome polarity '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// FactorSchema

namespace {

json schema_json(std::span<const FactorSpec> factors) {
  json arr = json::array();
  for (const auto& f : factors) {
    json outcomes = json::array();
    for (const auto& o : f.outcomes) {
      outcomes.push_back({{"name", o.name}, {"polarity", to_string(o.polarity)}});
    }
    arr.push_back({{"id", f.id},
                   {"name", f.name},
                   {"category", to_string(f.category)},
                   {"description", f.description},
                   {"outcomes", std::move(outcomes)}});
  }
  return json{{"factors", std::move(arr)}};
}

}  // namespace

FactorSchema::FactorSchema(std::vector<FactorSpec> factors) : factors_(std::move(factors)) {
  if (factors_.empty()) throw ValidationError("schema has no factors");
  std::set<std::string> names;
  offsets_.reserve(factors_.size() + 1);
  offsets_.push_back(0);
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    const auto& f = factors_[i];
    if (f.id != i) {
      throw ValidationError("factor '" + f.name + "' has id " + std::to_string(f.id) +
                            ", expected " + std::to_string(i));
    }
    if (f.name.empty()) throw ValidationError("factor " + std::to_string(i) + " has no name");
    if (!names.insert(normalize_token(f.name)).second) {
      throw ValidationError("duplicate factor name '" + f.name + "'");
    }
    if (f.outcomes.size() < 2) {
      throw ValidationError("factor '" + f.name + "' needs at least two outcomes");
    }
    std::set<std::string> outcome_names;
    for (const auto& o : f.outcomes) {
      if (o.name.empty() || !outcome_names.insert(normalize_token(o.name)).second) {
        throw ValidationError("factor '" + f.name + "' has empty or duplicate outcome '" +
                              o.name + "'");
      }
    }
    offsets_.push_back(offsets_.back() + f.outcomes.size());
  }
  hash_ = sha256_hex(schema_json(factors_).dump());
}

std::size_t FactorSchema::flat_index(OutcomeId id) const {
  if (id.factor_index >= factors_.size() ||
      id.outcome_index >= factors_[id.factor_index].outcomes.size()) {
    throw PreconditionError("outcome id (" + std::to_string(id.factor_index) + ", " +
                            std::to_string(id.outcome_index) + ") outside schema");
  }
  return offsets_[id.factor_index] + id.outcome_index;
}

OutcomeId FactorSchema::outcome_at(std::size_t flat) const {
  if (flat >= item_count()) {
    throw PreconditionError("flat index " + std::to_string(flat) + " outside schema");
  }
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), flat);
  const auto factor = static_cast<std::size_t>(it - offsets_.begin()) - 1;
  return {factor, flat - offsets_[factor]};
}

Polarity FactorSchema::polarity(std::size_t flat) const {
  const auto id = outcome_at(flat);
  return factors_[id.factor_index].outcomes[id.outcome_index].polarity;
}

std::string FactorSchema::item_label(std::size_t flat) const {
  const auto id = outcome_at(flat);
  const auto& f = factors_[id.factor_index];
  return f.name + " (" + f.outcomes[id.outcome_index].name + ")";
}

std::optional<std::size_t> FactorSchema::find_factor(std::string_view name) const {
  const auto key = normalize_token(name);
  for (const auto& f : factors_) {
    if (normalize_token(f.name) == key) return f.id;
  }
  return std::nullopt;
}

std::optional<std::size_t> FactorSchema::find_outcome(std::size_t factor_index,
                                                      std::string_view name) const {
  const auto key = normalize_token(name);
  const auto& outcomes = factor(factor_index).outcomes;
  for (std::size_t j = 0; j < outcomes.size(); ++j) {
    if (normalize_token(outcomes[j].name) == key) return j;
  }
  return std::nullopt;
}

OutcomeId FactorSchema::parse_item(std::string_view spec) const {
  const auto colon = spec.rfind(':');
  if (colon == std::string_view::npos) {
    throw ValidationError("item '" + std::string(spec) + "' must be FACTOR:OUTCOME");
  }
  const auto factor_part = spec.substr(0, colon);
  const auto outcome_part = spec.substr(colon + 1);
  std::optional<std::size_t> factor;
  std::size_t number = 0;
  auto [ptr, ec] = std::from_chars(factor_part.data(), factor_part.data() + factor_part.size(),
                                   number);
  if (ec == std::errc() && ptr == factor_part.data() + factor_part.size()) {
    if (number >= 1 && number <= factors_.size()) factor = number - 1;
  } else {
    factor = find_factor(factor_part);
  }
  if (!factor) throw ValidationError("unknown factor '" + std::string(factor_part) + "'");
  auto outcome = find_outcome(*factor, outcome_part);
  if (!outcome) {
    throw ValidationError("factor '" + factors_[*factor].name + "' has no outcome '" +
                          std::string(outcome_part) + "'");
  }
  return {*factor, *outcome};
}

std::string FactorSchema::to_json() const { return schema_json(factors_).dump(2); }

FactorSchema FactorSchema::from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("schema file: ") + e.what());
  }
  try {
    std::vector<FactorSpec> factors;
    for (const auto& f : doc.at("factors")) {
      FactorSpec spec;
      spec.id = f.at("id").get<std::size_t>();
      spec.name = f.at("name").get<std::string>();
      spec.category = parse_category(f.at("category").get<std::string>());
      spec.description = f.value("description", "");
      for (const auto& o : f.at("outcomes")) {
        spec.outcomes.push_back(
            {o.at("name").get<std::string>(), parse_polarity(o.at("polarity").get<std::string>())});
      }
      factors.push_back(std::move(spec));
    }
    return FactorSchema(std::move(factors));
  } catch (const json::exception& e) {
    throw SchemaViolation(std::string("schema file: ") + e.what());
  }
}

FactorSchema FactorSchema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open schema file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

namespace {

FactorSpec two_way(std::size_t id, std::string name, FactorCategory cat, std::string desc,
                   std::string first, Polarity first_polarity) {
  return FactorSpec{id,
                    std::move(name),
                    cat,
                    std::move(desc),
                    {{std::move(first), first_polarity},
                     {"unknown-or-uncertain", Polarity::neutral_uncertain}}};
}

FactorSpec three_way(std::size_t id, std::string name, std::string desc) {
  return FactorSpec{id,
                    std::move(name),
                    FactorCategory::historical_metric,
                    std::move(desc),
                    {{"bullish", Polarity::positive},
                     {"stable", Polarity::neutral_uncertain},
                     {"bearish", Polarity::negative}}};
}

FactorSchema build_default_schema() {
  using C = FactorCategory;
  using P = Polarity;
  std::vector<FactorSpec> f;
  f.push_back(two_way(0, "Economic Health", C::macroeconomic,
                      "Economic health refers to the overall stability and performance of the "
                      "economy, reflected in factors like growth, employment, inflation, and "
                      "market confidence.",
                      "positive-outlook", P::positive));
  f.push_back(two_way(1, "Market Sentiment and Investor Psychology", C::macroeconomic,
                      "Market sentiment reflects the overall mood or attitude of investors toward "
                      "a particular market, influenced by news, economic data, and global events. "
                      "Investor psychology refers to the emotions and cognitive biases that drive "
                      "decisions, often leading to behaviors like fear-driven selling or "
                      "greed-fueled buying.",
                      "optimistic", P::positive));
  f.push_back(two_way(2, "Political Events and Government Policies", C::macroeconomic,
                      "Elections, legislation, trade policy, taxation and other government actions "
                      "that can shift the operating environment for the company.",
                      "major-upheaval", P::negative));
  f.push_back(two_way(3, "Natural Disasters and Black Swan Events", C::macroeconomic,
                      "Rare, high-impact events such as pandemics, extreme weather or natural "
                      "disasters that can disrupt economies, supply chains and demand.",
                      "major-impact", P::negative));
  f.push_back(two_way(4, "Geopolitical Issues", C::macroeconomic,
                      "International tensions, wars, sanctions and conflicts between countries "
                      "that affect markets, costs or access to customers.",
                      "escalation-to-conflict", P::negative));
  f.push_back(two_way(5, "Mergers and Major Acquisitions", C::company_specific,
                      "Announced or completed mergers, acquisitions, divestitures and major "
                      "strategic partnerships.",
                      "positive-outlook", P::positive));
  f.push_back(two_way(6, "Regulatory Changes and Legal Issues", C::company_specific,
                      "Changes in regulation, litigation, investigations and compliance matters "
                      "that affect the company's business.",
                      "happened-positive-outlook", P::positive));
  f.push_back(two_way(7, "Financial Health", C::company_specific,
                      "Balance sheet strength, liquidity, debt levels, cash flow and margins.",
                      "positive-outlook", P::positive));
  f.push_back(two_way(8, "Company Growth", C::company_specific,
                      "Revenue, customer and market-share growth and the outlook given in "
                      "guidance.",
                      "positive-outlook", P::positive));
  f.push_back(two_way(9, "Company Product Launches", C::company_specific,
                      "New products, services or features introduced or planned, and their "
                      "reception.",
                      "positive-outlook", P::positive));
  f.push_back(two_way(10, "Supply Chain", C::company_specific,
                      "Availability and cost of inputs, logistics, inventory levels and supplier "
                      "relationships.",
                      "positive-outlook", P::positive));
  f.push_back(two_way(11, "Technological Innovation", C::company_specific,
                      "Investment in and adoption of new technology, research and development, and "
                      "digital capabilities.",
                      "positive-outlook", P::positive));
  f.push_back(three_way(12, "Historical Earnings Per Share (EPS)",
                        "Reported earnings per share over the quarters preceding the call."));
  f.push_back(three_way(13, "Historical Revenue",
                        "Reported revenue over the quarters preceding the call."));
  f.push_back(three_way(14, "Historical Stock Prices",
                        "Daily closing stock prices leading up to the call."));
  return FactorSchema(std::move(f));
}

}  // namespace

SchemaPtr default_schema() {
  static const SchemaPtr schema = std::make_shared<const FactorSchema>(build_default_schema());
  return schema;
}

// ---------------------------------------------------------------------------
// Grades

namespace {

constexpr std::array<LikelihoodGrade, 6> kGradesDescending = {
    LikelihoodGrade::very_likely,       LikelihoodGrade::likely,
    LikelihoodGrade::somewhat_likely,   LikelihoodGrade::somewhat_unlikely,
    LikelihoodGrade::unlikely,          LikelihoodGrade::very_unlikely,
};

}  // namespace

std::span<const LikelihoodGrade> all_grades() { return kGradesDescending; }

LikelihoodGrade grade_from_value(int value) {
  if (value < 1 || value > 6) {
    throw UnknownGrade("grade value " + std::to_string(value) + " outside 1..6");
  }
  return static_cast<LikelihoodGrade>(value);
}

std::string_view render_grade(LikelihoodGrade g) {
  switch (g) {
    case LikelihoodGrade::very_unlikely: return "very unlikely";
    case LikelihoodGrade::unlikely: return "unlikely";
    case LikelihoodGrade::somewhat_unlikely: return "somewhat unlikely";
    case LikelihoodGrade::somewhat_likely: return "somewhat likely";
    case LikelihoodGrade::likely: return "likely";
    case LikelihoodGrade::very_likely: return "very likely";
  }
  return "?";
}

LikelihoodGrade parse_grade(std::string_view text) {
  const auto key = normalize_token(text);
  for (auto g : kGradesDescending) {
    if (key == render_grade(g)) return g;
  }
  throw UnknownGrade("unknown likelihood grade '" + std::string(text) + "'");
}

Eigen::VectorXd normalize_factor(std::span<const LikelihoodGrade> grades) {
  if (grades.size() < 2) {
    throw ArityMismatch("a factor needs at least two outcome grades, got " +
                        std::to_string(grades.size()));
  }
  Eigen::VectorXd values(static_cast<Eigen::Index>(grades.size()));
  for (std::size_t j = 0; j < grades.size(); ++j) {
    values[static_cast<Eigen::Index>(j)] = grade_value(grades[j]);
  }
  return normalize_weights(values);
}

Eigen::VectorXd normalize_factor(const FactorSchema& schema, std::size_t factor_index,
                                 std::span<const LikelihoodGrade> grades) {
  if (grades.size() != schema.outcome_count(factor_index)) {
    throw ArityMismatch("factor '" + schema.factor(factor_index).name + "' expects " +
                        std::to_string(schema.outcome_count(factor_index)) + " grades, got " +
                        std::to_string(grades.size()));
  }
  return normalize_factor(grades);
}

// ---------------------------------------------------------------------------
// FactorProfile

FactorProfile::FactorProfile(SchemaPtr schema, Eigen::VectorXd probs,
                             std::vector<std::string> summaries,
                             std::optional<std::vector<LikelihoodGrade>> grades)
    : schema_(std::move(schema)),
      probs_(std::move(probs)),
      summaries_(std::move(summaries)),
      grades_(std::move(grades)) {
  if (!schema_) throw PreconditionError("profile requires a schema");
  if (summaries_.empty()) summaries_.assign(schema_->factor_count(), "");
  validate();
}

void FactorProfile::validate() const {
  const auto& s = *schema_;
  if (static_cast<std::size_t>(probs_.size()) != s.item_count()) {
    throw ValidationError("profile has " + std::to_string(probs_.size()) +
                          " probabilities, schema has " + std::to_string(s.item_count()) +
                          " items");
  }
  if (summaries_.size() != s.factor_count()) {
    throw ValidationError("profile has " + std::to_string(summaries_.size()) +
                          " summaries, schema has " + std::to_string(s.factor_count()) +
                          " factors");
  }
  if (grades_ && grades_->size() != s.item_count()) {
    throw ValidationError("profile grade count does not match schema item count");
  }
  for (std::size_t i = 0; i < s.factor_count(); ++i) {
    const auto seg = factor_probabilities(i);
    for (Eigen::Index j = 0; j < seg.size(); ++j) {
      const double p = seg[j];
      if (!std::isfinite(p) || p <= 0.0 || p > 1.0) {
        throw ValidationError("factor '" + s.factor(i).name + "' has probability " +
                              std::to_string(p) + " outside (0, 1]");
      }
    }
    const double sum = seg.sum();
    if (std::abs(sum - 1.0) > kProfileTolerance) {
      throw ValidationError("factor '" + s.factor(i).name + "' probabilities sum to " +
                            std::to_string(sum) + ", expected 1");
    }
  }
}

FactorProfile FactorProfile::from_grades(SchemaPtr schema, std::vector<LikelihoodGrade> flat_grades,
                                         std::vector<std::string> summaries) {
  if (!schema) throw PreconditionError("profile requires a schema");
  if (flat_grades.size() != schema->item_count()) {
    throw ArityMismatch("expected " + std::to_string(schema->item_count()) + " grades, got " +
                        std::to_string(flat_grades.size()));
  }
  Eigen::VectorXd probs(static_cast<Eigen::Index>(schema->item_count()));
  for (std::size_t i = 0; i < schema->factor_count(); ++i) {
    const auto off = schema->offset(i);
    const auto n = schema->outcome_count(i);
    probs.segment(static_cast<Eigen::Index>(off), static_cast<Eigen::Index>(n)) =
        normalize_factor(std::span<const LikelihoodGrade>(flat_grades).subspan(off, n));
  }
  return FactorProfile(std::move(schema), std::move(probs), std::move(summaries),
                       std::move(flat_grades));
}

FactorProfile FactorProfile::from_probabilities(SchemaPtr schema, Eigen::VectorXd flat,
                                                std::vector<std::string> summaries) {
  return FactorProfile(std::move(schema), std::move(flat), std::move(summaries), std::nullopt);
}

bool operator==(const FactorProfile& a, const FactorProfile& b) {
  return *a.schema_ == *b.schema_ && a.probs_ == b.probs_ && a.summaries_ == b.summaries_ &&
         a.grades_ == b.grades_;
}

Eigen::VectorXd flatten(const FactorProfile& profile) { return profile.flat(); }

FactorProfile unflatten(SchemaPtr schema, const Eigen::VectorXd& flat,
                        std::vector<std::string> summaries) {
  return FactorProfile::from_probabilities(std::move(schema), flat, std::move(summaries));
}

void require_same_schema(const FactorSchema& a, const FactorSchema& b) {
  if (!(a == b)) {
    throw SchemaMismatch("profiles/models use different factor schemas (" +
                         a.hash().substr(0, 12) + " vs " + b.hash().substr(0, 12) + ")");
  }
}

}  // namespace define
