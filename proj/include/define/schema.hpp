#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace define {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

enum class FactorCategory { macroeconomic, company_specific, historical_metric };
enum class Polarity { positive, negative, neutral_uncertain };

std::string_view to_string(FactorCategory c);
std::string_view to_string(Polarity p);
FactorCategory parse_category(std::string_view text);
Polarity parse_polarity(std::string_view text);

struct OutcomeSpec {
  std::string name;
  Polarity polarity;
};

struct FactorSpec {
  std::size_t id = 0;
  std::string name;
  FactorCategory category = FactorCategory::macroeconomic;
  std::string description;
  std::vector<OutcomeSpec> outcomes;
};

// (factor, outcome) coordinates of a single outcome item.
struct OutcomeId {
  std::size_t factor_index = 0;
  std::size_t outcome_index = 0;
  friend bool operator==(const OutcomeId&, const OutcomeId&) = default;
};

// Lowercase, with '-', '_' and whitespace runs collapsed to single spaces.
// Used for every case-insensitive name lookup (grades, factors, outcomes).
std::string normalize_token(std::string_view text);

/// The fixed factor taxonomy. Items are flattened factor-major, so the
/// outcomes of factor i occupy [offset(i), offset(i) + outcome_count(i)).
class FactorSchema {
 public:
  // Validates ids (0..n-1 in order), unique names, >= 2 outcomes per factor
  // and unique outcome names within a factor. Throws ValidationError.
  explicit FactorSchema(std::vector<FactorSpec> factors);

  std::size_t factor_count() const { return factors_.size(); }
  std::size_t item_count() const { return offsets_.back(); }
  std::span<const FactorSpec> factors() const { return factors_; }
  const FactorSpec& factor(std::size_t i) const { return factors_.at(i); }

  std::size_t offset(std::size_t factor_index) const { return offsets_.at(factor_index); }
  std::size_t outcome_count(std::size_t factor_index) const {
    return factors_.at(factor_index).outcomes.size();
  }

  std::size_t flat_index(OutcomeId id) const;
  OutcomeId outcome_at(std::size_t flat) const;
  Polarity polarity(std::size_t flat) const;
  // "Factor Name (outcome-name)"
  std::string item_label(std::size_t flat) const;

  std::optional<std::size_t> find_factor(std::string_view name) const;
  std::optional<std::size_t> find_outcome(std::size_t factor_index, std::string_view name) const;
  // Parses "FACTOR:OUTCOME" where FACTOR is a 1-based number or a name.
  OutcomeId parse_item(std::string_view spec) const;

  // SHA-256 of the canonical JSON form; identifies the schema in model files.
  const std::string& hash() const { return hash_; }

  std::string to_json() const;
  static FactorSchema from_json(std::string_view text);
  static FactorSchema load(const std::string& path);

  friend bool operator==(const FactorSchema& a, const FactorSchema& b) {
    return a.hash_ == b.hash_;
  }

 private:
  std::vector<FactorSpec> factors_;
  std::vector<std::size_t> offsets_;
  std::string hash_;
};

using SchemaPtr = std::shared_ptr<const FactorSchema>;

// Built-in 15-factor taxonomy (33 outcome items). Shared, immutable.
SchemaPtr default_schema();

enum class LikelihoodGrade : int {
  very_unlikely = 1,
  unlikely = 2,
  somewhat_unlikely = 3,
  somewhat_likely = 4,
  likely = 5,
  very_likely = 6,
};

inline constexpr int grade_value(LikelihoodGrade g) { return static_cast<int>(g); }
LikelihoodGrade grade_from_value(int value);
LikelihoodGrade parse_grade(std::string_view text);
std::string_view render_grade(LikelihoodGrade g);
// All six grades, most likely first (the order prompts list them in).
std::span<const LikelihoodGrade> all_grades();

/// Ratio normalization of positive weights.
template <typename Derived>
Vector<typename Derived::Scalar> normalize_weights(const Eigen::MatrixBase<Derived>& values) {
  return values / values.sum();
}

Eigen::VectorXd normalize_factor(std::span<const LikelihoodGrade> grades);
Eigen::VectorXd normalize_factor(const FactorSchema& schema, std::size_t factor_index,
                                 std::span<const LikelihoodGrade> grades);

/// Per-factor outcome distributions for one transcript. Probabilities are
/// stored flattened in schema order; grades are kept when the profile was
/// built from verbalized likelihoods.
class FactorProfile {
 public:
  static FactorProfile from_grades(SchemaPtr schema, std::vector<LikelihoodGrade> flat_grades,
                                   std::vector<std::string> summaries = {});
  static FactorProfile from_probabilities(SchemaPtr schema, Eigen::VectorXd flat,
                                          std::vector<std::string> summaries = {});

  const FactorSchema& schema() const { return *schema_; }
  const SchemaPtr& schema_ptr() const { return schema_; }

  const Eigen::VectorXd& flat() const { return probs_; }
  auto factor_probabilities(std::size_t i) const {
    return probs_.segment(static_cast<Eigen::Index>(schema_->offset(i)),
                          static_cast<Eigen::Index>(schema_->outcome_count(i)));
  }
  double probability(OutcomeId id) const {
    return probs_[static_cast<Eigen::Index>(schema_->flat_index(id))];
  }
  const std::vector<std::string>& summaries() const { return summaries_; }
  const std::optional<std::vector<LikelihoodGrade>>& grades() const { return grades_; }

  friend bool operator==(const FactorProfile& a, const FactorProfile& b);

 private:
  FactorProfile(SchemaPtr schema, Eigen::VectorXd probs, std::vector<std::string> summaries,
                std::optional<std::vector<LikelihoodGrade>> grades);
  void validate() const;

  SchemaPtr schema_;
  Eigen::VectorXd probs_;
  std::vector<std::string> summaries_;
  std::optional<std::vector<LikelihoodGrade>> grades_;
};

inline constexpr double kProfileTolerance = 1e-9;

Eigen::VectorXd flatten(const FactorProfile& profile);
FactorProfile unflatten(SchemaPtr schema, const Eigen::VectorXd& flat,
                        std::vector<std::string> summaries = {});

// Throws SchemaMismatch unless both schemas are the same taxonomy.
void require_same_schema(const FactorSchema& a, const FactorSchema& b);

}  // namespace define
