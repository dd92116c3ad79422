#include "ncd/expenditure.hpp"

#include "ncd/error.hpp"

#include <algorithm>
#include <cmath>

namespace ncd {

namespace {

constexpr double kEquivalentAgeAnchor = 65.0;
constexpr int kWorkingAgeLo = 25;
constexpr int kWorkingAgeHi = 64;

double discount(const ExpenditureOptions &options, int year) {
    if (options.discount_rate == 0.0) {
        return 1.0;
    }
    return std::pow(1.0 + options.discount_rate, -(year - options.discount_base_year));
}

double savings_fraction(double bau, double scenario) {
    if (bau == 0.0) {
        return 0.0;
    }
    return (bau - scenario) / bau;
}

} // namespace

ExpenditureOptions ExpenditureOptions::from(const RunConfig &config) {
    return {config.expenditure_min_age, config.discount_rate, config.intervention_start};
}

ExpenditureBreakdown project_expenditure(const ProjectionResult &result, const PhaseCostTable &costs, YearRange years,
                                         const ExpenditureOptions &options) {
    if (!result.years.contains(years.first) || !result.years.contains(years.last)) {
        throw ValidationError("expenditure period outside the projection");
    }
    ExpenditureBreakdown out;
    out.by_disease.assign(result.diseases.size(), 0.0);
    for (std::size_t k = 0; k < result.diseases.size(); ++k) {
        const auto &d = result.diseases[k];
        if (!costs.covers(d.disease)) {
            throw ValidationError("cost table has no entry for disease " + d.disease);
        }
        const auto &table = costs.entries().at(d.disease);
        const auto &first_year = table[static_cast<std::size_t>(Phase::first_year)];
        const auto &prevalent = table[static_cast<std::size_t>(Phase::prevalent)];
        const auto &last_year = table[static_cast<std::size_t>(Phase::last_year)];
        double disease_total = 0.0;
        for (int y = years.first; y <= years.last; ++y) {
            const double factor = discount(options, y);
            double year_total = 0.0;
            for (int a = std::max(options.min_age, 0); a <= kMaxAge; ++a) {
                const auto ua = static_cast<std::size_t>(a);
                const double cases = result.population(a, y) * d.prevalence(a, y);
                const double incident = d.incident(a, y);
                const double dying = d.deaths(a, y);
                double continuing = cases - incident - dying;
                if (continuing < 0.0) {
                    continuing = 0.0;
                    ++out.floored_cells;
                }
                year_total += incident * first_year[ua] + dying * last_year[ua] + continuing * prevalent[ua];
            }
            disease_total += factor * year_total;
        }
        out.by_disease[k] = disease_total;
        out.total += disease_total;
    }
    return out;
}

std::vector<double> expenditure_by_year(const ProjectionResult &result, const PhaseCostTable &costs,
                                        const ExpenditureOptions &options) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(result.years.size()));
    for (int y = result.years.first; y <= result.years.last; ++y) {
        out.push_back(project_expenditure(result, costs, {y, y}, options).total);
    }
    return out;
}

double envelope_scale_factor(double envelope, double modelled) {
    if (!(envelope > 0.0)) {
        throw ValidationError("expenditure envelope must be positive");
    }
    if (!(modelled > 0.0)) {
        throw ValidationError("modelled expenditure is zero; cannot scale to envelope");
    }
    return envelope / modelled;
}

PhaseCostTable scale_to_envelope(const PhaseCostTable &costs, const ProjectionResult &bau, double envelope,
                                 int reference_year) {
    const int year = std::clamp(reference_year, bau.years.first, bau.years.last);
    ExpenditureOptions all_ages;
    all_ages.min_age = 0;
    const double modelled = project_expenditure(bau, costs, {year, year}, all_ages).total;
    return costs.scaled(envelope_scale_factor(envelope, modelled));
}

EquivalentAge equivalent_age_65(const ProjectionResult &bau, const ProjectionResult &scenario, int year) {
    const double target = morbidity_rate(bau, kEquivalentAgeAnchor, year);
    auto m = [&](int age) { return scenario.morbidity(age, year); };
    const int anchor = static_cast<int>(kEquivalentAgeAnchor);
    const double at_anchor = m(anchor);

    if (at_anchor == target) {
        return {kEquivalentAgeAnchor, m(anchor + 1) == at_anchor};
    }
    bool non_monotone = false;
    if (at_anchor < target) {
        for (int a = anchor; a < kMaxAge; ++a) {
            const double lo = m(a);
            const double hi = m(a + 1);
            if (hi < lo) {
                non_monotone = true;
            }
            if (lo < target && hi >= target) {
                return {a + (target - lo) / (hi - lo), non_monotone};
            }
        }
        return {static_cast<double>(kMaxAge), true};
    }
    for (int a = anchor; a > kWorkingAgeLo; --a) {
        const double hi = m(a);
        const double lo = m(a - 1);
        if (hi < lo) {
            non_monotone = true;
        }
        if (lo <= target && hi > target) {
            return {(a - 1) + (target - lo) / (hi - lo), non_monotone};
        }
    }
    return {static_cast<double>(kWorkingAgeLo), true};
}

PanelRates rate_denominators(const ScenarioOutcome &outcome, YearRange period, std::span<const double> equivalent_ages) {
    const ProjectionResult &r = *outcome.result;
    if (static_cast<int>(equivalent_ages.size()) != period.size()) {
        throw ValidationError("one equivalent age per period year is required");
    }
    double total = 0.0;
    double py_all = 0.0;
    double py_working = 0.0;
    double py_extended = 0.0;
    for (int y = period.first; y <= period.last; ++y) {
        total += outcome.expenditure[static_cast<std::size_t>(y - r.years.first)];
        py_all += person_years(r, {0, kMaxAge}, {y, y});
        py_working += person_years(r, {kWorkingAgeLo, kWorkingAgeHi}, {y, y});
        py_extended += person_years_exact(r, kWorkingAgeLo, equivalent_ages[static_cast<std::size_t>(y - period.first)], y);
    }
    if (!(py_all > 0.0) || !(py_working > 0.0) || !(py_extended > 0.0)) {
        throw ValidationError("zero person-years in a rate denominator for " + outcome.name);
    }
    return {{total, total / py_all, total / py_working, total / py_extended}};
}

ExpenditureReport savings_report(const ScenarioOutcome &bau, std::span<const ScenarioOutcome> scenarios,
                                 const RunConfig &config) {
    ExpenditureReport report;
    const YearRange years = bau.result->years;
    std::vector<double> bau_ages(static_cast<std::size_t>(years.size()), kEquivalentAgeAnchor);
    for (int y = years.first; y <= years.last; ++y) {
        report.equivalent_ages.push_back({bau.name, y, kEquivalentAgeAnchor, false});
    }

    std::vector<std::vector<double>> scenario_ages;
    for (const auto &s : scenarios) {
        if (s.result->years != years) {
            throw ValidationError("scenario " + s.name + " is not on the BAU grid");
        }
        std::vector<double> ages;
        for (int y = years.first; y <= years.last; ++y) {
            const auto eq = equivalent_age_65(*bau.result, *s.result, y);
            ages.push_back(eq.age);
            report.equivalent_ages.push_back({s.name, y, eq.age, eq.flagged});
        }
        scenario_ages.push_back(std::move(ages));
    }

    auto period_ages = [&](const std::vector<double> &ages, YearRange p) {
        return std::span<const double>(ages).subspan(static_cast<std::size_t>(p.first - years.first),
                                                     static_cast<std::size_t>(p.size()));
    };
    static constexpr std::array<char, 4> kPanels = {'a', 'b', 'c', 'd'};

    for (const auto &period : config.reporting_periods) {
        const PanelRates base = rate_denominators(bau, period, period_ages(bau_ages, period));
        report.totals.push_back({bau.name, period, base.values[0], 0.0, 0.0});
        for (std::size_t p = 0; p < kPanels.size(); ++p) {
            report.panels.push_back({bau.name, period, kPanels[p], 0.0});
        }
        for (std::size_t k = 0; k < scenarios.size(); ++k) {
            const auto &s = scenarios[k];
            const PanelRates rates = rate_denominators(s, period, period_ages(scenario_ages[k], period));
            report.totals.push_back({s.name, period, rates.values[0], base.values[0] - rates.values[0],
                                     savings_fraction(base.values[0], rates.values[0])});
            for (std::size_t p = 0; p < kPanels.size(); ++p) {
                report.panels.push_back(
                    {s.name, period, kPanels[p], savings_fraction(base.values[p], rates.values[p])});
            }
        }
    }
    return report;
}

ExpenditureReport savings_report(const ProjectionResult &bau,
                                 const std::vector<std::pair<std::string, const ProjectionResult *>> &scenarios,
                                 const PhaseCostTable &costs, const RunConfig &config) {
    const auto options = ExpenditureOptions::from(config);
    const ScenarioOutcome base{"bau", expenditure_by_year(bau, costs, options), &bau};
    std::vector<ScenarioOutcome> outcomes;
    for (const auto &[name, result] : scenarios) {
        outcomes.push_back({name, expenditure_by_year(*result, costs, options), result});
    }
    return savings_report(base, outcomes, config);
}

} // namespace ncd
