#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace ncd {

/// Single-year ages 0..=110; the terminal age absorbs everyone older.
inline constexpr int kMaxAge = 110;
inline constexpr int kAgeCount = kMaxAge + 1;

enum class Sex { female, male };

std::string_view to_string(Sex sex);
Sex parse_sex(std::string_view text);

/// Inclusive calendar-year interval.
struct YearRange {
    int first = 0;
    int last = -1;

    int size() const noexcept { return last >= first ? last - first + 1 : 0; }
    bool contains(int year) const noexcept { return year >= first && year <= last; }
    bool empty() const noexcept { return size() == 0; }
    bool operator==(const YearRange &) const = default;
};

/// Inclusive single-year age band.
struct AgeBand {
    int lo = 0;
    int hi = kMaxAge;

    int width() const noexcept { return hi >= lo ? hi - lo + 1 : 0; }
    bool contains(int age) const noexcept { return age >= lo && age <= hi; }
    bool operator==(const AgeBand &) const = default;
};

/// Dense age x calendar-year table. Ages are contiguous within a year.
class Surface {
  public:
    Surface() = default;
    explicit Surface(YearRange years, double fill = 0.0);

    double &operator()(int age, int year) { return values_[index(age, year)]; }
    double operator()(int age, int year) const { return values_[index(age, year)]; }

    /// Ages above 110 read the terminal row.
    double at_clamped(int age, int year) const {
        return values_[index(age > kMaxAge ? kMaxAge : age, year)];
    }

    const YearRange &years() const noexcept { return years_; }
    bool empty() const noexcept { return values_.empty(); }

    std::span<double> year_slice(int year) {
        return {values_.data() + offset(year), static_cast<std::size_t>(kAgeCount)};
    }
    std::span<const double> year_slice(int year) const {
        return {values_.data() + offset(year), static_cast<std::size_t>(kAgeCount)};
    }
    std::span<const double> values() const noexcept { return values_; }

    /// Bit-level equality; NaN cells compare equal to NaN cells.
    bool identical(const Surface &other) const;
    bool operator==(const Surface &other) const { return identical(other); }

  private:
    std::size_t offset(int year) const {
        return static_cast<std::size_t>(year - years_.first) * kAgeCount;
    }
    std::size_t index(int age, int year) const { return offset(year) + static_cast<std::size_t>(age); }

    YearRange years_{};
    std::vector<double> values_;
};

} // namespace ncd
