#pragma once

#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace phyloclust {

/// Calendar date stored as days since 1970-01-01.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::chrono::sys_days days) : days_(days.time_since_epoch().count()) {}
  constexpr static Date from_days(int days) {
    Date d;
    d.days_ = days;
    return d;
  }

  static Date ymd(int y, unsigned m, unsigned d) {
    return Date(std::chrono::sys_days(std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}));
  }

  /// Strict ISO-8601 calendar date (YYYY-MM-DD). nullopt on anything else, including 2015-13-01.
  static std::optional<Date> parse(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
      if (text[i] < '0' || text[i] > '9') return std::nullopt;
    auto num = [&](std::size_t pos, std::size_t len) {
      int v = 0;
      for (std::size_t i = pos; i < pos + len; ++i) v = v * 10 + (text[i] - '0');
      return v;
    };
    const std::chrono::year_month_day ymd{std::chrono::year{num(0, 4)},
                                          std::chrono::month{static_cast<unsigned>(num(5, 2))},
                                          std::chrono::day{static_cast<unsigned>(num(8, 2))}};
    if (!ymd.ok()) return std::nullopt;
    return Date(std::chrono::sys_days(ymd));
  }

  std::string iso() const {
    const std::chrono::year_month_day ymd{std::chrono::sys_days(std::chrono::days(days_))};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
  }

  constexpr int days() const { return days_; }

  friend constexpr auto operator<=>(const Date&, const Date&) = default;

 private:
  int days_ = 0;
};

}  // namespace phyloclust
