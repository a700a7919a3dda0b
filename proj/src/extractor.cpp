#include "define/extractor.hpp"

#include <cctype>
#include <numeric>

#include "define/errors.hpp"
#include "json.hpp"

namespace define {

using nlohmann::json;

namespace {

// Model replies sometimes wrap the JSON object in a code fence or prose.
std::optional<json> parse_json_reply(std::string_view text) {
  if (auto doc = json::parse(text, nullptr, false); !doc.is_discarded()) return doc;
  const auto open = text.find('{');
  const auto close = text.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    return std::nullopt;
  }
  auto doc = json::parse(text.substr(open, close - open + 1), nullptr, false);
  if (doc.is_discarded()) return std::nullopt;
  return doc;
}

// Case-insensitive object lookup through normalize_token.
const json* find_key(const json& obj, std::string_view name) {
  if (!obj.is_object()) return nullptr;
  const auto key = normalize_token(name);
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (normalize_token(it.key()) == key) return &it.value();
  }
  return nullptr;
}

const json* find_factor_entry(const json& root, const FactorSpec& f) {
  if (const auto* e = find_key(root, f.name)) return e;
  // Allow the prompt's sentence-cased rendering and a "factors" wrapper.
  if (const auto* wrapped = find_key(root, "factors")) return find_factor_entry(*wrapped, f);
  return nullptr;
}

LikelihoodGrade grade_for(const json& likelihoods, const FactorSpec& f, std::size_t j) {
  const auto& outcome = f.outcomes[j].name;
  const json* value = find_key(likelihoods, outcome);
  if (value == nullptr) {
    throw MissingOutcome("factor '" + f.name + "' is missing outcome '" + outcome + "'");
  }
  if (!value->is_string()) {
    throw UnknownGrade("factor '" + f.name + "', outcome '" + outcome +
                       "': likelihood must be a string");
  }
  try {
    return parse_grade(value->get<std::string>());
  } catch (const UnknownGrade&) {
    throw UnknownGrade("factor '" + f.name + "', outcome '" + outcome +
                       "': unknown likelihood '" + value->get<std::string>() + "'");
  }
}

std::vector<std::size_t> all_or(std::span<const std::size_t> indices, std::size_t n) {
  std::vector<std::size_t> out(indices.begin(), indices.end());
  if (out.empty()) {
    out.resize(n);
    std::iota(out.begin(), out.end(), std::size_t{0});
  }
  return out;
}

bool contains_word(const std::string& haystack, std::string_view needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

std::map<std::size_t, FactorGrades> parse_factor_grades(std::string_view text,
                                                        const FactorSchema& schema,
                                                        std::span<const std::size_t> factor_indices) {
  const auto doc = parse_json_reply(text);
  if (!doc || !doc->is_object()) throw MalformedJSON("profile reply is not a JSON object");

  std::map<std::size_t, FactorGrades> out;
  for (auto i : all_or(factor_indices, schema.factor_count())) {
    const auto& f = schema.factor(i);
    const json* entry = find_factor_entry(*doc, f);
    if (entry == nullptr) throw MissingFactor("reply is missing factor '" + f.name + "'");
    if (!entry->is_object()) throw MalformedJSON("factor '" + f.name + "' must be an object");

    FactorGrades fg;
    if (const auto* s = find_key(*entry, "summary"); s && s->is_string()) {
      fg.summary = s->get<std::string>();
    }
    const json* likelihoods = find_key(*entry, "likelihoods");
    if (likelihoods == nullptr) likelihoods = find_key(*entry, "outcomes");
    if (likelihoods == nullptr) likelihoods = entry;
    for (std::size_t j = 0; j < f.outcomes.size(); ++j) {
      fg.grades.push_back(grade_for(*likelihoods, f, j));
    }
    out.emplace(i, std::move(fg));
  }
  return out;
}

FactorProfile parse_profile_response(std::string_view text, const SchemaPtr& schema) {
  const auto parsed = parse_factor_grades(text, *schema);
  std::vector<LikelihoodGrade> flat;
  std::vector<std::string> summaries;
  for (const auto& [i, fg] : parsed) {
    flat.insert(flat.end(), fg.grades.begin(), fg.grades.end());
    summaries.push_back(fg.summary);
  }
  return FactorProfile::from_grades(schema, std::move(flat), std::move(summaries));
}

std::vector<LikelihoodGrade> parse_history_response(std::string_view text,
                                                    const FactorSpec& factor) {
  const auto doc = parse_json_reply(text);
  if (!doc || !doc->is_object()) throw MalformedJSON("history reply is not a JSON object");
  const json* likelihoods = &*doc;
  if (find_key(*doc, factor.outcomes.front().name) == nullptr) {
    likelihoods = nullptr;
    for (const auto& [key, value] : doc->items()) {
      if (value.is_object()) {
        likelihoods = &value;
        break;
      }
    }
  }
  if (likelihoods == nullptr) {
    throw MissingFactor("history reply has no likelihoods for '" + factor.name + "'");
  }
  std::vector<LikelihoodGrade> grades;
  for (std::size_t j = 0; j < factor.outcomes.size(); ++j) {
    grades.push_back(grade_for(*likelihoods, factor, j));
  }
  return grades;
}

HistoryMetric history_metric_for(const FactorSpec& factor) {
  const auto name = normalize_token(factor.name);
  if (contains_word(name, "eps") || contains_word(name, "earnings")) return HistoryMetric::eps;
  if (contains_word(name, "revenue")) return HistoryMetric::revenue;
  if (contains_word(name, "price") || contains_word(name, "stock")) {
    return HistoryMetric::stock_price;
  }
  throw ValidationError("no historical data source for factor '" + factor.name + "'");
}

FactorProfile extract_profile(CompletionClient& client, const TranscriptRecord& transcript,
                              const PriceSeries& prices, const FinancialHistory* financials,
                              const SchemaPtr& schema) {
  const auto& s = *schema;
  std::vector<std::size_t> transcript_factors;
  std::vector<std::size_t> history_factors;
  for (const auto& f : s.factors()) {
    (f.category == FactorCategory::historical_metric ? history_factors : transcript_factors)
        .push_back(f.id);
  }

  std::vector<std::vector<LikelihoodGrade>> grades(s.factor_count());
  std::vector<std::string> summaries(s.factor_count());

  if (!transcript_factors.empty()) {
    const auto exchange = build_profile_prompt(transcript, s, transcript_factors);
    auto parsed = parse_factor_grades(client.complete(exchange), s, transcript_factors);
    for (auto& [i, fg] : parsed) {
      grades[i] = std::move(fg.grades);
      summaries[i] = std::move(fg.summary);
    }
  }

  for (auto i : history_factors) {
    const auto& f = s.factor(i);
    const auto metric = history_metric_for(f);
    if (metric != HistoryMetric::stock_price && financials == nullptr) {
      throw EmptySeries("factor '" + f.name + "' needs financial history for " +
                        transcript.ticker);
    }
    const HistoryTable table = metric == HistoryMetric::eps       ? eps_history_table(*financials)
                               : metric == HistoryMetric::revenue ? revenue_history_table(*financials)
                                                                  : price_history_table(prices);
    const auto exchange = build_history_prompt(table, transcript.announcement_date, f);
    grades[i] = parse_history_response(client.complete(exchange), f);
  }

  std::vector<LikelihoodGrade> flat;
  for (const auto& g : grades) flat.insert(flat.end(), g.begin(), g.end());
  return FactorProfile::from_grades(schema, std::move(flat), std::move(summaries));
}

DecisionReply parse_decision_reply(std::string_view text, bool require_idx) {
  const auto doc = parse_json_reply(text);
  if (!doc || !doc->is_object()) throw MalformedResponse("decision reply is not a JSON object");

  DecisionReply reply;
  const json* rec = find_key(*doc, "recommendation");
  if (rec == nullptr || !rec->is_string()) {
    throw MalformedResponse("decision reply lacks a string 'recommendation'");
  }
  std::string action = normalize_token(rec->get<std::string>());
  if (action.rfind("action", 0) == 0) {
    if (auto colon = action.find(':'); colon != std::string::npos) action = action.substr(colon + 1);
  }
  while (!action.empty() && (action.back() == '.' || action.back() == ' ')) action.pop_back();
  while (!action.empty() && action.front() == ' ') action.erase(action.begin());
  const auto label = try_parse_label(action);
  if (!label) throw UnknownAction("unknown recommendation '" + rec->get<std::string>() + "'");
  reply.recommendation = *label;

  if (const json* idx = find_key(*doc, "idx")) {
    if (idx->is_number_integer()) {
      reply.idx = idx->get<long long>();
    } else if (idx->is_string()) {
      try {
        std::size_t used = 0;
        const auto s = idx->get<std::string>();
        reply.idx = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
      } catch (const std::exception&) {
        throw MalformedResponse("'idx' is not an integer");
      }
    } else {
      throw MalformedResponse("'idx' is not an integer");
    }
  } else if (require_idx) {
    throw MalformedResponse("decision reply lacks 'idx'");
  }
  if (const json* j = find_key(*doc, "justification"); j && j->is_string()) {
    reply.justification = j->get<std::string>();
  }
  if (const json* t = find_key(*doc, "thoughts"); t && t->is_string()) {
    reply.thoughts = t->get<std::string>();
  }
  return reply;
}

}  // namespace define
