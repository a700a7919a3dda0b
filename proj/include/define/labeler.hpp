#pragma once

#include <span>

#include "define/date.hpp"
#include "define/decision_label.hpp"
#include "define/ingest.hpp"

namespace define {

inline constexpr int kDefaultHorizonDays = 30;

struct LabeledReturn {
  DecisionLabel label = DecisionLabel::hold;
  double return_pct = 0.0;
  Date base_date;
  Date horizon_date;
};

// Bands: > 5 strong-buy, (2, 5] buy, [-2, 2] hold, [-5, -2) sell, < -5
// strong-sell. Return is in percent.
DecisionLabel label_from_return(double return_pct);

// Both anchors snap forward to the first trading date on or after
// announce_date and announce_date + horizon_days (calendar days).
LabeledReturn label_from_prices(const PriceSeries& series, Date announce_date,
                                int horizon_days = kDefaultHorizonDays);

LabelCounts class_distribution(std::span<const DecisionLabel> labels);

}  // namespace define
