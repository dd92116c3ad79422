#include "ncd/grid.hpp"

#include "ncd/error.hpp"

#include <bit>
#include <cstdint>
#include <string>

namespace ncd {

std::string_view to_string(Sex sex) {
    return sex == Sex::female ? "female" : "male";
}

Sex parse_sex(std::string_view text) {
    if (text == "female" || text == "f") {
        return Sex::female;
    }
    if (text == "male" || text == "m") {
        return Sex::male;
    }
    throw ValidationError("unknown sex '" + std::string(text) + "'");
}

Surface::Surface(YearRange years, double fill)
    : years_(years), values_(static_cast<std::size_t>(years.size()) * kAgeCount, fill) {}

bool Surface::identical(const Surface &other) const {
    if (years_ != other.years_ || values_.size() != other.values_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (std::bit_cast<std::uint64_t>(values_[i]) != std::bit_cast<std::uint64_t>(other.values_[i])) {
            return false;
        }
    }
    return true;
}

ParseError::ParseError(std::string file, std::size_t row, const std::string &what)
    : Error(file + (row > 0 ? ":" + std::to_string(row) : std::string()) + ": " + what),
      file_(std::move(file)), row_(row) {}

} // namespace ncd
