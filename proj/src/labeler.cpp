#include "define/labeler.hpp"

#include <algorithm>
#include <cctype>

#include "define/errors.hpp"
#include "define/schema.hpp"

namespace define {

std::string_view to_string(DecisionLabel l) {
  switch (l) {
    case DecisionLabel::strong_buy: return "strong-buy";
    case DecisionLabel::buy: return "buy";
    case DecisionLabel::hold: return "hold";
    case DecisionLabel::sell: return "sell";
    case DecisionLabel::strong_sell: return "strong-sell";
  }
  return "?";
}

std::string_view display_name(DecisionLabel l) {
  switch (l) {
    case DecisionLabel::strong_buy: return "strong buy";
    case DecisionLabel::buy: return "buy";
    case DecisionLabel::hold: return "hold";
    case DecisionLabel::sell: return "sell";
    case DecisionLabel::strong_sell: return "strong sell";
  }
  return "?";
}

std::string_view short_name(DecisionLabel l) {
  switch (l) {
    case DecisionLabel::strong_buy: return "SB";
    case DecisionLabel::buy: return "B";
    case DecisionLabel::hold: return "H";
    case DecisionLabel::sell: return "S";
    case DecisionLabel::strong_sell: return "SS";
  }
  return "?";
}

std::optional<DecisionLabel> try_parse_label(std::string_view text) {
  const auto key = normalize_token(text);
  for (auto l : kAllLabels) {
    if (key == display_name(l) || key == normalize_token(short_name(l))) return l;
  }
  return std::nullopt;
}

DecisionLabel parse_label(std::string_view text) {
  if (auto l = try_parse_label(text)) return *l;
  throw UnknownAction("unknown decision label '" + std::string(text) + "'");
}

DecisionLabel label_from_return(double r) {
  if (r > 5.0) return DecisionLabel::strong_buy;
  if (r > 2.0) return DecisionLabel::buy;
  if (r >= -2.0) return DecisionLabel::hold;
  if (r >= -5.0) return DecisionLabel::sell;
  return DecisionLabel::strong_sell;
}

LabeledReturn label_from_prices(const PriceSeries& series, Date announce_date, int horizon_days) {
  if (horizon_days < 1) throw PreconditionError("horizon_days must be >= 1");
  auto first_on_or_after = [&](Date d) {
    return std::lower_bound(series.points.begin(), series.points.end(), d,
                            [](const PricePoint& p, Date v) { return p.date < v; });
  };
  const auto base = first_on_or_after(announce_date);
  if (base == series.points.end()) {
    throw InsufficientHistory("no trading date on or after " + announce_date.iso() +
                              (series.ticker.empty() ? "" : " for " + series.ticker));
  }
  const Date target = announce_date.plus_days(horizon_days);
  const auto horizon = first_on_or_after(target);
  if (horizon == series.points.end()) {
    throw InsufficientHistory("no trading date on or after horizon " + target.iso() +
                              (series.ticker.empty() ? "" : " for " + series.ticker));
  }
  LabeledReturn out;
  out.return_pct = 100.0 * (horizon->close - base->close) / base->close;
  out.label = label_from_return(out.return_pct);
  out.base_date = base->date;
  out.horizon_date = horizon->date;
  return out;
}

LabelCounts class_distribution(std::span<const DecisionLabel> labels) {
  LabelCounts counts{};
  for (auto l : labels) ++counts[label_index(l)];
  return counts;
}

}  // namespace define
