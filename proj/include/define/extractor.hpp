#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "define/client.hpp"
#include "define/decision_label.hpp"
#include "define/ingest.hpp"
#include "define/prompts.hpp"
#include "define/schema.hpp"

namespace define {

struct FactorGrades {
  std::string summary;
  std::vector<LikelihoodGrade> grades;  // schema outcome order
};

// Parses a factor-profile reply restricted to `factor_indices` (all factors
// when empty). Factor and outcome names match case-insensitively. Errors
// name the offending factor/outcome: MalformedJSON, MissingFactor,
// MissingOutcome, UnknownGrade.
std::map<std::size_t, FactorGrades> parse_factor_grades(
    std::string_view text, const FactorSchema& schema,
    std::span<const std::size_t> factor_indices = {});

FactorProfile parse_profile_response(std::string_view text, const SchemaPtr& schema);

// Reply to a historical-trend prompt: `{"<name>": {"bullish": ..., ...}}` or
// the inner object directly.
std::vector<LikelihoodGrade> parse_history_response(std::string_view text,
                                                    const FactorSpec& factor);

enum class HistoryMetric { eps, revenue, stock_price };

// Maps a historical-metric factor to its data source by name.
HistoryMetric history_metric_for(const FactorSpec& factor);

// Transcript factors are graded from one profile prompt; each
// historical-metric factor from its own history prompt. Financials are
// required when the schema has EPS or revenue factors.
FactorProfile extract_profile(CompletionClient& client, const TranscriptRecord& transcript,
                              const PriceSeries& prices, const FinancialHistory* financials,
                              const SchemaPtr& schema);

// Parsed recommendation reply (chain-of-thought or analogical prompts).
struct DecisionReply {
  std::optional<long long> idx;
  DecisionLabel recommendation = DecisionLabel::hold;
  std::string justification;
  std::string thoughts;
};

// Throws MalformedResponse for non-JSON or missing keys, UnknownAction for an
// unrecognized recommendation. "Action 2: buy" style answers are accepted.
DecisionReply parse_decision_reply(std::string_view text, bool require_idx);

}  // namespace define
