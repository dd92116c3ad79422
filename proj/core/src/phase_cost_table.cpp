#include "ncd/phase_cost_table.hpp"

#include "ncd/error.hpp"

namespace ncd {

std::string_view to_string(Phase phase) {
    switch (phase) {
    case Phase::first_year:
        return "first_year";
    case Phase::prevalent:
        return "prevalent";
    case Phase::last_year:
        return "last_year";
    }
    return "?";
}

Phase parse_phase(std::string_view text) {
    for (const Phase phase : kPhases) {
        if (text == to_string(phase)) {
            return phase;
        }
    }
    throw ValidationError("unknown phase '" + std::string(text) + "'");
}

void PhaseCostTable::set(const std::string &disease, int age, Phase phase, double cost) {
    if (age < 0 || age > kMaxAge) {
        throw ValidationError("phase cost age out of range: " + std::to_string(age));
    }
    if (!(cost >= 0.0)) {
        throw ValidationError("negative phase cost for " + disease + " at age " + std::to_string(age));
    }
    auto &entry = costs_[disease];
    for (auto &ages : entry) {
        if (ages.empty()) {
            ages.assign(kAgeCount, 0.0);
        }
    }
    entry[static_cast<std::size_t>(phase)][static_cast<std::size_t>(age)] = cost;
}

double PhaseCostTable::cost(const std::string &disease, int age, Phase phase) const {
    const auto it = costs_.find(disease);
    if (it == costs_.end()) {
        return 0.0;
    }
    const int clamped = age > kMaxAge ? kMaxAge : age;
    return it->second[static_cast<std::size_t>(phase)][static_cast<std::size_t>(clamped)];
}

PhaseCostTable PhaseCostTable::scaled(double factor) const {
    PhaseCostTable out = *this;
    for (auto &[code, phases] : out.costs_) {
        for (auto &ages : phases) {
            for (double &c : ages) {
                c *= factor;
            }
        }
    }
    return out;
}

} // namespace ncd
