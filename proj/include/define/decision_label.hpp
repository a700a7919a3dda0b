#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace define {

// Five-way investment decision, most bullish first. The enumerator value is
// the row/column index used by confusion matrices and count vectors.
enum class DecisionLabel : int { strong_buy = 0, buy, hold, sell, strong_sell };

inline constexpr std::size_t kLabelCount = 5;
inline constexpr std::array<DecisionLabel, kLabelCount> kAllLabels = {
    DecisionLabel::strong_buy, DecisionLabel::buy, DecisionLabel::hold, DecisionLabel::sell,
    DecisionLabel::strong_sell};

// Per-class counts indexed by label_index().
using LabelCounts = std::array<std::size_t, kLabelCount>;

inline constexpr std::size_t label_index(DecisionLabel l) { return static_cast<std::size_t>(l); }

// "strong-buy", "buy", ...
std::string_view to_string(DecisionLabel l);
// "strong buy", ... as written in prompts.
std::string_view display_name(DecisionLabel l);
// "SB", "B", "H", "S", "SS"
std::string_view short_name(DecisionLabel l);

// Accepts any casing and '-', '_' or ' ' separators, plus the short names.
std::optional<DecisionLabel> try_parse_label(std::string_view text);
// Throws UnknownAction.
DecisionLabel parse_label(std::string_view text);

}  // namespace define
