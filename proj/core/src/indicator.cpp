#include "ncd/indicator.hpp"

#include "ncd/error.hpp"

#include <cmath>
#include <vector>

namespace ncd {

double q40_30_from_rates(std::span<const double> rates) {
    double sum = 0.0;
    for (const double m : rates) {
        sum += m;
    }
    return -std::expm1(-sum);
}

double compute_40q30(const ProjectionResult &result, int year) {
    if (!result.years.contains(year)) {
        throw ValidationError("40q30: year " + std::to_string(year) + " outside the projection");
    }
    // The youngest cohort in `year` is aged (year - first year).
    if (year - result.years.first > kIndicatorBand.lo) {
        throw ValidationError("40q30: ages below " + std::to_string(year - result.years.first) + " have no cohort in " +
                              std::to_string(year));
    }
    std::vector<double> rates(static_cast<std::size_t>(kIndicatorBand.width()), 0.0);
    for (const auto &d : result.diseases) {
        if (!d.ncd4_member) {
            continue;
        }
        for (int a = kIndicatorBand.lo; a <= kIndicatorBand.hi; ++a) {
            rates[static_cast<std::size_t>(a - kIndicatorBand.lo)] += d.mortality_rate(a, year);
        }
    }
    return q40_30_from_rates(rates);
}

double observed_40q30(const CountryDataset &ds, int year) {
    if (!ds.observed_years.contains(year)) {
        throw ValidationError("40q30: year " + std::to_string(year) + " outside the observed window");
    }
    std::vector<double> rates(static_cast<std::size_t>(kIndicatorBand.width()), 0.0);
    for (const auto &d : ds.registry) {
        if (!d.ncd4_member) {
            continue;
        }
        const auto &prev = ds.series(d.code, Measure::prevalence);
        const auto &cfr = ds.series(d.code, Measure::case_fatality);
        for (int a = kIndicatorBand.lo; a <= kIndicatorBand.hi; ++a) {
            const double m = prev(a, year) * cfr(a, year);
            if (std::isnan(m)) {
                throw ValidationError("40q30: missing " + d.code + " data at age " + std::to_string(a) + " year " +
                                      std::to_string(year));
            }
            rates[static_cast<std::size_t>(a - kIndicatorBand.lo)] += m;
        }
    }
    return q40_30_from_rates(rates);
}

double IndicatorSeries::value(int year) const {
    const auto it = q40_30.find(year);
    if (it == q40_30.end()) {
        throw ValidationError("indicator series has no value for " + std::to_string(year));
    }
    return it->second;
}

double IndicatorSeries::baseline_value() const {
    return value(baseline_year);
}

double IndicatorSeries::reduction() const {
    const double base = baseline_value();
    if (!(base > 0.0)) {
        throw ValidationError("indicator baseline value is zero");
    }
    return 1.0 - value(target_year) / base;
}

IndicatorSeries indicator_series(const CountryDataset &ds, const ProjectionResult &result, const RunConfig &config) {
    IndicatorSeries s;
    s.baseline_year = config.indicator_baseline_year;
    s.target_year = config.target_year;
    for (int y = ds.observed_years.first; y <= ds.observed_years.last; ++y) {
        s.q40_30[y] = observed_40q30(ds, y);
    }
    for (int y = result.years.first; y <= result.years.last; ++y) {
        s.q40_30[y] = compute_40q30(result, y);
    }
    return s;
}

std::string_view to_string(Attainment attainment) {
    return attainment == Attainment::on_track ? "on_track" : "off_track";
}

AttainmentResult classify_attainment(double reduction, const RunConfig &config) {
    AttainmentResult r;
    r.reduction = reduction;
    r.gap = config.target_fraction - reduction;
    r.status = reduction >= config.target_fraction ? Attainment::on_track : Attainment::off_track;
    return r;
}

AttainmentResult classify_attainment(const IndicatorSeries &series, const RunConfig &config) {
    return classify_attainment(series.reduction(), config);
}

} // namespace ncd
