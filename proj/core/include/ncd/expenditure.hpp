#pragma once

#include "ncd/phase_cost_table.hpp"
#include "ncd/projection.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace ncd {

struct ExpenditureOptions {
    /// Cells below this age are excluded from totals.
    int min_age = 30;
    double discount_rate = 0.0;
    int discount_base_year = 2022;

    static ExpenditureOptions from(const RunConfig &config);
};

struct ExpenditureBreakdown {
    double total = 0.0;
    std::vector<double> by_disease;
    /// Cells where incident + dying cases exceeded prevalent cases.
    std::size_t floored_cells = 0;
};

/// Per (disease, age, year): incident x first-year cost + dying x last-year
/// cost + max(0, prevalent - incident - dying) x prevalent cost, summed over
/// ages >= min_age and the given years. Throws ValidationError when the cost
/// table lacks a disease of the projection.
ExpenditureBreakdown project_expenditure(const ProjectionResult &result, const PhaseCostTable &costs,
                                         YearRange years, const ExpenditureOptions &options = {});

/// Total per projection year, first year first.
std::vector<double> expenditure_by_year(const ProjectionResult &result, const PhaseCostTable &costs,
                                        const ExpenditureOptions &options = {});

/// envelope / modelled; throws ValidationError when either is not positive.
double envelope_scale_factor(double envelope, double modelled);

/// Rescales all costs so modelled all-age expenditure in `reference_year`
/// under `bau` equals `envelope`. Reference years before the projection
/// use its first year.
PhaseCostTable scale_to_envelope(const PhaseCostTable &costs, const ProjectionResult &bau, double envelope,
                                 int reference_year);

struct EquivalentAge {
    double age = 65.0;
    /// Degenerate plateau, non-monotone morbidity, or no crossing before the clamp.
    bool flagged = false;
};

/// Exact age at which scenario morbidity equals BAU morbidity at exact age 65,
/// clamped to [25, 110].
EquivalentAge equivalent_age_65(const ProjectionResult &bau, const ProjectionResult &scenario, int year);

/// Expenditure and projection of one scenario (possibly sexes combined).
struct ScenarioOutcome {
    std::string name;
    /// One entry per projection year.
    std::vector<double> expenditure;
    const ProjectionResult *result = nullptr;
};

/// The four expenditure measures of a period: raw total, and totals per
/// person-year for all ages, ages 25-64, and ages 25 to the equivalent age.
struct PanelRates {
    std::array<double, 4> values{};
};

/// `equivalent_ages` holds one exact age per year of `period` (65 for BAU).
/// Throws ValidationError when a denominator is zero.
PanelRates rate_denominators(const ScenarioOutcome &outcome, YearRange period,
                             std::span<const double> equivalent_ages);

struct PeriodLine {
    std::string scenario;
    YearRange period;
    double total = 0.0;
    double savings = 0.0;
    /// (BAU - scenario) / BAU.
    double savings_fraction = 0.0;
};

struct PanelLine {
    std::string scenario;
    YearRange period;
    char panel = 'a';
    double savings_fraction = 0.0;
};

struct EquivalentAgeLine {
    std::string scenario;
    int year = 0;
    double a_star = 65.0;
    bool flagged = false;
};

struct ExpenditureReport {
    std::vector<PeriodLine> totals;
    std::vector<PanelLine> panels;
    std::vector<EquivalentAgeLine> equivalent_ages;
};

/// BAU first, then each scenario, for every reporting period.
ExpenditureReport savings_report(const ScenarioOutcome &bau, std::span<const ScenarioOutcome> scenarios,
                                 const RunConfig &config);

/// Single-stratum convenience over projections and one cost table.
ExpenditureReport savings_report(const ProjectionResult &bau,
                                 const std::vector<std::pair<std::string, const ProjectionResult *>> &scenarios,
                                 const PhaseCostTable &costs, const RunConfig &config);

} // namespace ncd
