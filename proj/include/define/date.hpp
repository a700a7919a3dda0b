#pragma once

#include <chrono>
#include <compare>
#include <string>
#include <string_view>

namespace define {

// Calendar (trading) date without a time zone, serialized as ISO-8601.
class Date {
 public:
  Date() = default;
  explicit Date(std::chrono::sys_days days) : days_(days) {}

  // Accepts exactly YYYY-MM-DD; throws ParseError otherwise.
  static Date parse(std::string_view text);

  std::string iso() const;
  std::chrono::sys_days days() const { return days_; }

  Date plus_days(int n) const { return Date(days_ + std::chrono::days(n)); }

  friend auto operator<=>(const Date&, const Date&) = default;

 private:
  std::chrono::sys_days days_{};
};

}  // namespace define
