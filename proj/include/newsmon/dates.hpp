#pragma once

#include <chrono>
#include <compare>
#include <string>
#include <string_view>

namespace newsmon {

/// Calendar day (UTC, day resolution).
class Date {
public:
    Date() = default;
    explicit Date(std::chrono::sys_days days) : days_(days) {}
    Date(int y, unsigned m, unsigned d);

    /// Strict "YYYY-MM-DD"; throws DataError on anything else.
    static Date parse(std::string_view text);

    std::string to_string() const;
    std::chrono::sys_days days() const { return days_; }

    Date operator+(int n) const { return Date(days_ + std::chrono::days{n}); }
    friend int operator-(const Date& a, const Date& b) {
        return static_cast<int>((a.days_ - b.days_).count());
    }
    friend auto operator<=>(const Date&, const Date&) = default;

private:
    std::chrono::sys_days days_{};
};

/// Zero-based week index of `date` counted from `start` (week 0 begins at start).
inline int week_index(const Date& start, const Date& date) {
    int diff = date - start;
    return diff >= 0 ? diff / 7 : -((-diff + 6) / 7);
}

} // namespace newsmon
