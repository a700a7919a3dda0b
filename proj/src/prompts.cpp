#include "define/prompts.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <numeric>

#include "define/digest.hpp"
#include "define/errors.hpp"
#include "json.hpp"

namespace define {

namespace {

constexpr std::string_view kTranscriptAnalystSystem =
    "You are a financial analyst specializing in earnings call transcripts. You will receive the "
    "complete transcript of an earnings call, which includes both the prepared remarks and the "
    "Q&A session. Your job is to identify the key factors from the transcript and assign "
    "probabilities to the potential outcomes of these factors.";

constexpr std::string_view kHistoryAnalystSystem =
    "You are a financial analyst specializing in historical data analysis, including stock "
    "prices, earnings per share (EPS), and revenue. Your goal is to assess the likelihood of "
    "different market trends based on past data.";

constexpr std::string_view kRecommendationSystem =
    "You're a financial analyst specializing in giving investors buy or sell recommendations by "
    "thoroughly analyzing earnings call transcripts.";

std::string grade_vocabulary() {
  std::string out = "{";
  for (auto g : all_grades()) {
    if (out.size() > 1) out += ", ";
    out += render_grade(g);
  }
  return out + "}";
}

std::string outcome_list(const FactorSpec& f) {
  std::string out = "{";
  for (const auto& o : f.outcomes) {
    if (out.size() > 1) out += ", ";
    out += o.name;
  }
  return out + "}";
}

std::string format_probability(double p) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f", p);
  return buf;
}

std::string format_value(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string action_options() {
  return " - Action 1: strong buy: The stock price will increase by more than 5%\n"
         " - Action 2: buy: The stock price will increase by 2% to 5%\n"
         " - Action 3: hold: The stock price is expected to remain stable, fluctuating between "
         "-2% to 2%\n"
         " - Action 4: sell: The stock price will decrease by 2% to 5%\n"
         " - Action 5: strong sell: The stock price will decrease by more than 5%\n";
}

std::string initial_problem(std::string_view company, Date date) {
  return "Based on your analysis of the earnings call for " + std::string(company) + " held on " +
         date.iso() +
         ", decide on the most likely analyst recommendation for the next 30 days from these "
         "options:\n\n" +
         action_options();
}

void require_company(std::string_view company) {
  bool blank = true;
  for (char c : company) blank = blank && std::isspace(static_cast<unsigned char>(c));
  if (blank) throw TemplateError("prompt template requires a company name");
}

}  // namespace

std::string ChatExchange::canonical() const {
  nlohmann::json j{{"system_message", system_message},
                   {"user_message", user_message},
                   {"response_format", response_format == ResponseFormat::json ? "json" : "text"}};
  return j.dump();
}

std::string ChatExchange::hash() const { return sha256_hex(canonical()); }

std::string prompt_factor_name(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  std::size_t i = 0;
  bool first_word = true;
  while (i < name.size()) {
    if (std::isspace(static_cast<unsigned char>(name[i]))) {
      out.push_back(name[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < name.size() && !std::isspace(static_cast<unsigned char>(name[j]))) ++j;
    std::string word(name.substr(i, j - i));
    bool has_lower = false;
    bool has_letter = false;
    for (char c : word) {
      has_lower = has_lower || std::islower(static_cast<unsigned char>(c));
      has_letter = has_letter || std::isalpha(static_cast<unsigned char>(c));
    }
    const bool acronym = has_letter && !has_lower && word.size() > 1;
    if (!acronym) {
      for (std::size_t k = 0; k < word.size(); ++k) {
        auto c = static_cast<unsigned char>(word[k]);
        word[k] = static_cast<char>(first_word && k == 0 ? std::toupper(c) : std::tolower(c));
      }
    }
    out += word;
    first_word = false;
    i = j;
  }
  return out;
}

std::string render_profile(const FactorProfile& profile) {
  const auto& schema = profile.schema();
  std::string out;
  for (std::size_t i = 0; i < schema.factor_count(); ++i) {
    const auto& f = schema.factor(i);
    out += "- " + prompt_factor_name(f.name) + ":";
    if (!profile.summaries()[i].empty()) out += " " + profile.summaries()[i];
    out += "\n";
    const auto probs = profile.factor_probabilities(i);
    for (std::size_t j = 0; j < f.outcomes.size(); ++j) {
      out += "    " + f.outcomes[j].name + ": " +
             format_probability(probs[static_cast<Eigen::Index>(j)]) + "\n";
    }
  }
  return out;
}

std::string render_transcript(const TranscriptRecord& t) {
  std::string out = "# Prepared Remarks\n";
  for (const auto& u : t.prepared_remarks) out += u.speaker + ": " + u.text + "\n";
  out += "\n# Questions and Answers\n";
  for (const auto& qa : t.qa_pairs) {
    out += qa.question.speaker + ": " + qa.question.text + "\n";
    out += qa.answer.speaker + ": " + qa.answer.text + "\n";
  }
  return out;
}

ChatExchange build_profile_prompt(const TranscriptRecord& transcript, const FactorSchema& schema,
                                  std::span<const std::size_t> factor_indices) {
  std::vector<std::size_t> indices(factor_indices.begin(), factor_indices.end());
  if (indices.empty()) {
    indices.resize(schema.factor_count());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
  }

  std::string user =
      "Your task is to conduct a comprehensive analysis of the earnings call transcript below. "
      "Be sure to accurately capture the important factors and estimate the likelihood of each "
      "factor resulting in specific outcomes.\n\n";
  user += "Earnings Call Transcript for Company " + transcript.ticker + "\n\n";
  user += render_transcript(transcript);
  user += "\nPlease analyze the above earnings call transcript, focusing on the following key "
          "factors:\n\n";
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto& f = schema.factor(indices[k]);
    user += std::to_string(k + 1) + ". " + prompt_factor_name(f.name) + ": " + f.description +
            " Outcomes: " + outcome_list(f) + "\n\n";
  }
  user +=
      "Please take the time to thoroughly understand the transcript. For each key factor, provide "
      "a detailed summary based on the given transcript. Then, review all associated outcomes and "
      "assess the likelihood of each outcome. The likelihood should be strictly selected from the "
      "following options: " +
      grade_vocabulary() + ". Format your response in JSON.\n\n";

  nlohmann::ordered_json example = nlohmann::ordered_json::object();
  const auto& first = schema.factor(indices.front());
  nlohmann::ordered_json likelihoods = nlohmann::ordered_json::object();
  for (const auto& o : first.outcomes) likelihoods[o.name] = "<likelihood>";
  example[prompt_factor_name(first.name)] = {{"summary", "<summary of this factor>"},
                                             {"likelihoods", likelihoods}};
  user += "# Example Output:\n" + example.dump() + "\n\n# Your Output:\n";

  return {std::string(kTranscriptAnalystSystem), std::move(user), ResponseFormat::json};
}

HistoryTable price_history_table(const PriceSeries& series) {
  HistoryTable t{"Historical Stock Prices",
                 "Daily closing prices of " + (series.ticker.empty() ? "the stock" : series.ticker) +
                     " leading up to the earnings announcement.",
                 "Close Price",
                 {}};
  for (const auto& p : series.points) t.rows.push_back({p.date, p.close});
  return t;
}

HistoryTable eps_history_table(const FinancialHistory& h) {
  return {"Historical EPS",
          "Reported earnings per share of " + (h.ticker.empty() ? "the company" : h.ticker) +
              " for past quarters.",
          "EPS", h.eps};
}

HistoryTable revenue_history_table(const FinancialHistory& h) {
  return {"Historical Revenue",
          "Reported revenue of " + (h.ticker.empty() ? "the company" : h.ticker) +
              " for past quarters.",
          "Revenue", h.revenue};
}

ChatExchange build_history_prompt(const HistoryTable& table, Date announce_date,
                                  const FactorSpec& factor) {
  std::string rows;
  std::size_t kept = 0;
  for (const auto& r : table.rows) {
    if (r.date > announce_date) continue;
    rows += r.date.iso() + "  " + format_value(r.value) + "\n";
    ++kept;
  }
  if (kept == 0) {
    throw EmptySeries("no " + table.name + " data on or before " + announce_date.iso());
  }

  std::string user = "The potential outcomes to consider are: " + outcome_list(factor) +
                     ". For each outcome, please assign a likelihood level from the following "
                     "options: " +
                     grade_vocabulary() + ".\n\n";
  user += "Below, you will be provided with a historical data table:\n";
  user += table.name + ": " + table.description + "\n\n";
  user += "Date        " + table.value_column + "\n" + rows + "\n";
  user += "Please analyze this historical data and provide the likelihood of each outcome in JSON "
          "format.\n\n";

  static constexpr std::string_view kExampleGrades[] = {"very likely", "somewhat likely",
                                                        "unlikely"};
  nlohmann::ordered_json likelihoods = nlohmann::ordered_json::object();
  for (std::size_t j = 0; j < factor.outcomes.size(); ++j) {
    likelihoods[factor.outcomes[j].name] = j < 3 ? std::string(kExampleGrades[j]) : "<likelihood>";
  }
  nlohmann::ordered_json example = {{table.name, likelihoods}};
  user += "# Example Output:\n" + example.dump() + "\n\n# Your Output:\n";

  return {std::string(kHistoryAnalystSystem), std::move(user), ResponseFormat::json};
}

ChatExchange build_cot_prompt(CotPayload kind, std::string_view payload, std::string_view company,
                              Date date) {
  require_company(company);
  if (payload.empty()) throw TemplateError("chain-of-thought prompt requires a payload");
  std::string_view kind_name = kind == CotPayload::transcript ? "transcript"
                               : kind == CotPayload::summary  ? "summary"
                                                              : "factor profile";
  std::string user = initial_problem(company, date) + "\n";
  user += "Below is the " + std::string(kind_name) + " from " + std::string(company) +
          "'s earnings call on " + date.iso() + ":\n\n";
  user += std::string(payload);
  if (user.back() != '\n') user += "\n";
  user += "\nPlease think step by step and respond with the analyst recommendation for this stock "
          "in JSON format, including these keys: ('thoughts', 'recommendation', "
          "'justification'). 'thoughts' should be your detailed reasoning steps, "
          "'recommendation' should be one of the actions mentioned above for 30 days trading, "
          "'justification' should clearly explain your recommendation.\n";
  return {std::string(kRecommendationSystem), std::move(user), ResponseFormat::json};
}

ChatExchange build_analogy_prompt(std::span<const AnalogyExample> examples,
                                  const FactorProfile& target, std::string_view company,
                                  Date date) {
  if (examples.empty()) throw PreconditionError("analogical prompt needs at least one example");
  require_company(company);

  std::string user =
      "Here are several example company profiles. Each profile highlights key factors from an "
      "earnings call transcript and probabilities for potential outcomes based on those factors. "
      "Each profile represents a specific company and is based on its historical earnings call "
      "data. Your job is to pick the most analogous example and use its strategy to solve the "
      "initial problem.\n\n";
  for (std::size_t k = 0; k < examples.size(); ++k) {
    user += "Example Company Profile " + std::to_string(k + 1) + ":\n";
    user += render_profile(examples[k].profile);
    user += "Analyst recommendation: " + std::string(display_name(examples[k].label)) + "\n\n";
  }
  user += "** Initial Problem **\n\n";
  user += initial_problem(company, date) + "\n";
  user += "Below is the company profile summarized from " + std::string(company) +
          "'s earnings call on " + date.iso() +
          " and the historical price trend probabilities judged by an analyst:\n\n";
  user += render_profile(target);
  user += "\n** Solve the Initial Problem **\n\n";
  user += "Please respond with the analyst recommendation for this stock in JSON format, "
          "including these keys: ('idx', 'recommendation', 'justification'). 'idx' is the index "
          "of the most analogous example profile, and 'recommendation' should be one of the "
          "actions mentioned above for 30 days of trading, and 'justification' should clearly "
          "explain your recommendation using the strategy you learned from the selected example "
          "company profile.\n";
  return {std::string(kRecommendationSystem), std::move(user), ResponseFormat::json};
}

}  // namespace define
