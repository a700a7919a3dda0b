#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "define/date.hpp"
#include "define/decision_label.hpp"
#include "define/ingest.hpp"
#include "define/schema.hpp"

namespace define {

enum class ResponseFormat { free_text, json };

// One system + user message pair sent to a chat-completion service.
struct ChatExchange {
  std::string system_message;
  std::string user_message;
  ResponseFormat response_format = ResponseFormat::json;

  // Canonical serialization; its SHA-256 keys recorded fixtures.
  std::string canonical() const;
  std::string hash() const;

  friend bool operator==(const ChatExchange&, const ChatExchange&) = default;
};

// Factor name as written inside prompts: "Economic health". Words that are
// entirely uppercase (acronyms) keep their casing.
std::string prompt_factor_name(std::string_view name);

// Text block listing each factor, its summary and outcome probabilities.
std::string render_profile(const FactorProfile& profile);

// Prepared remarks followed by Q&A, one "Speaker: text" line per turn.
std::string render_transcript(const TranscriptRecord& transcript);

// Factor-profile elicitation over the given factors (all when empty).
ChatExchange build_profile_prompt(const TranscriptRecord& transcript, const FactorSchema& schema,
                                  std::span<const std::size_t> factor_indices = {});

// A dated metric table fed to the historical-trend prompt.
struct HistoryTable {
  std::string name;          // e.g. "Historical Stock Prices"
  std::string description;
  std::string value_column;  // e.g. "Close Price"
  std::vector<MetricPoint> rows;
};

HistoryTable price_history_table(const PriceSeries& series);
HistoryTable eps_history_table(const FinancialHistory& history);
HistoryTable revenue_history_table(const FinancialHistory& history);

// Rows dated after `announce_date` are dropped; throws EmptySeries when
// nothing remains. `factor` supplies the outcome names.
ChatExchange build_history_prompt(const HistoryTable& table, Date announce_date,
                                  const FactorSpec& factor);

enum class CotPayload { transcript, summary, factor_profile };

// Throws TemplateError when the payload or company is empty.
ChatExchange build_cot_prompt(CotPayload kind, std::string_view payload, std::string_view company,
                              Date date);

struct AnalogyExample {
  FactorProfile profile;
  DecisionLabel label;
};

// Throws PreconditionError for an empty example list, TemplateError for an
// empty company.
ChatExchange build_analogy_prompt(std::span<const AnalogyExample> examples,
                                  const FactorProfile& target, std::string_view company, Date date);

}  // namespace define
