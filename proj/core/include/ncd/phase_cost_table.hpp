#pragma once

#include "ncd/grid.hpp"

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ncd {

enum class Phase { first_year, prevalent, last_year };

inline constexpr std::array<Phase, 3> kPhases = {Phase::first_year, Phase::prevalent, Phase::last_year};

std::string_view to_string(Phase phase);
Phase parse_phase(std::string_view text);

/// Cost per case-year by disease x single-year age x phase for one sex.
class PhaseCostTable {
  public:
    using AgeCosts = std::array<std::vector<double>, 3>;

    void set(const std::string &disease, int age, Phase phase, double cost);
    double cost(const std::string &disease, int age, Phase phase) const;

    bool covers(const std::string &disease) const { return costs_.contains(disease); }
    bool empty() const noexcept { return costs_.empty(); }
    const std::map<std::string, AgeCosts> &entries() const noexcept { return costs_; }

    PhaseCostTable scaled(double factor) const;

    bool operator==(const PhaseCostTable &) const = default;

  private:
    std::map<std::string, AgeCosts> costs_;
};

} // namespace ncd
