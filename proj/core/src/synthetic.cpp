#include "ncd/synthetic.hpp"

#include "ncd/error.hpp"
#include "ncd/trend.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace ncd::synthetic {

namespace {

constexpr double kMaxSyntheticRate = 2.0;

double log_linear(double at_50, double age_slope, double apc, int age, int years_since_start) {
    return std::min(kMaxSyntheticRate, at_50 * std::exp(age_slope * (age - 50) + apc * years_since_start));
}

double remission_at(const DiseaseParams &d, int age) {
    const int capped = std::min(age, 100);
    return d.remission * std::exp(d.remission_age_slope * (capped - 50));
}

} // namespace

std::vector<DiseaseParams> demo_diseases() {
    std::vector<DiseaseParams> out(4);
    out[0].code = "ihd";
    out[0].label = "Ischaemic heart disease";
    out[0].disability_weight = 0.08;
    out[0].incidence_at_50 = 0.0035;
    out[0].incidence_age_slope = 0.075;
    out[0].incidence_apc = -0.012;
    out[0].fatality_at_50 = 0.025;
    out[0].fatality_age_slope = 0.05;
    out[0].fatality_apc = -0.015;
    out[0].remission = 0.01;
    out[0].cost_first_year = 15000.0;
    out[0].cost_prevalent = 2500.0;
    out[0].cost_last_year = 30000.0;

    out[1].code = "stroke";
    out[1].label = "Stroke";
    out[1].disability_weight = 0.2;
    out[1].incidence_at_50 = 0.0015;
    out[1].incidence_age_slope = 0.08;
    out[1].incidence_apc = -0.01;
    out[1].fatality_at_50 = 0.04;
    out[1].fatality_age_slope = 0.045;
    out[1].fatality_apc = -0.012;
    out[1].remission = 0.005;
    out[1].cost_first_year = 25000.0;
    out[1].cost_prevalent = 4000.0;
    out[1].cost_last_year = 35000.0;

    out[2].code = "diabetes";
    out[2].label = "Diabetes mellitus type 2";
    out[2].disability_weight = 0.05;
    out[2].incidence_at_50 = 0.006;
    out[2].incidence_age_slope = 0.03;
    out[2].incidence_apc = 0.005;
    out[2].fatality_at_50 = 0.006;
    out[2].fatality_age_slope = 0.06;
    out[2].fatality_apc = -0.01;
    out[2].remission = 0.01;
    out[2].cost_first_year = 3000.0;
    out[2].cost_prevalent = 1500.0;
    out[2].cost_last_year = 12000.0;

    out[3].code = "colorectal";
    out[3].label = "Colorectal cancer";
    out[3].disability_weight = 0.25;
    out[3].incidence_at_50 = 0.0006;
    out[3].incidence_age_slope = 0.07;
    out[3].incidence_apc = -0.004;
    out[3].fatality_at_50 = 0.12;
    out[3].fatality_age_slope = 0.02;
    out[3].fatality_apc = -0.015;
    out[3].remission = 0.12;
    out[3].cost_first_year = 45000.0;
    out[3].cost_prevalent = 3000.0;
    out[3].cost_last_year = 50000.0;
    return out;
}

std::vector<DiseaseParams> generic_diseases(int n) {
    std::vector<DiseaseParams> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double u = n > 1 ? static_cast<double>(k) / (n - 1) : 0.5;
        DiseaseParams d;
        d.code = "d" + std::to_string(k + 1);
        d.label = "Synthetic disease " + std::to_string(k + 1);
        d.ncd4_member = k % 11 != 10;
        d.disability_weight = 0.02 + 0.2 * u;
        d.incidence_at_50 = 0.0002 + 0.002 * (1.0 - u);
        d.incidence_age_slope = 0.03 + 0.05 * u;
        d.incidence_apc = -0.015 + 0.012 * u;
        d.fatality_at_50 = 0.005 + 0.1 * u;
        d.fatality_age_slope = 0.02 + 0.03 * (1.0 - u);
        d.fatality_apc = -0.02 + 0.012 * (1.0 - u);
        d.remission = 0.005 + 0.08 * u;
        d.cost_first_year = 2000.0 + 30000.0 * u;
        d.cost_prevalent = 800.0 + 2500.0 * (1.0 - u);
        d.cost_last_year = 10000.0 + 30000.0 * u;
        out.push_back(std::move(d));
    }
    return out;
}

DiseaseRegistry registry_for(const std::vector<DiseaseParams> &diseases) {
    DiseaseRegistry registry;
    for (const auto &d : diseases) {
        registry.add({d.code, d.label, d.ncd4_member, d.disability_weight});
    }
    return registry;
}

Surface remission_surface(const DiseaseParams &disease, YearRange years) {
    Surface s(years);
    for (int y = years.first; y <= years.last; ++y) {
        for (int a = 0; a <= kMaxAge; ++a) {
            s(a, y) = remission_at(disease, a);
        }
    }
    return s;
}

CountryDataset make_stratum(const StratumParams &params, const RunConfig &config) {
    const YearRange years = config.observed_years();
    CountryDataset ds;
    ds.country = params.country;
    ds.sex = params.sex;
    ds.registry = registry_for(params.diseases);
    ds.observed_years = years;
    for (int a = 0; a <= kMaxAge; ++a) {
        ds.age_groups.push_back({a, a});
    }
    ds.all_cause = Surface(years);

    for (int y = years.first; y <= years.last; ++y) {
        for (int a = 0; a <= kMaxAge; ++a) {
            ds.all_cause(a, y) = std::exp(params.background_log_rate_at_0 + params.background_age_slope * a +
                                          params.background_apc * (y - years.first));
        }
    }

    for (const auto &d : params.diseases) {
        Surface inc(years);
        Surface cfr(years);
        Surface prev(years);
        Surface mort(years);
        const Surface rem = remission_surface(d, years);
        for (int y = years.first; y <= years.last; ++y) {
            for (int a = 0; a <= kMaxAge; ++a) {
                inc(a, y) = log_linear(d.incidence_at_50, d.incidence_age_slope, d.incidence_apc, a, y - years.first);
                cfr(a, y) = log_linear(d.fatality_at_50, d.fatality_age_slope, d.fatality_apc, a, y - years.first);
            }
        }
        auto step = [&](double p, int a, int y) {
            const auto next = advance_disease({1.0 - p, p}, rate_to_probability(inc(a, y)),
                                              rate_to_probability(cfr(a, y)), rate_to_probability(rem(a, y)));
            return next.diseased;
        };
        // First-year profile: a cohort aged through the first year's rates.
        prev(0, years.first) = d.birth_prevalence;
        for (int a = 0; a < kMaxAge; ++a) {
            prev(a + 1, years.first) = step(prev(a, years.first), a, years.first);
        }
        for (int y = years.first; y < years.last; ++y) {
            prev(0, y + 1) = d.birth_prevalence;
            for (int a = 0; a < kMaxAge; ++a) {
                prev(a + 1, y + 1) = step(prev(a, y), a, y);
            }
        }
        for (int y = years.first; y <= years.last; ++y) {
            for (int a = 0; a <= kMaxAge; ++a) {
                mort(a, y) = prev(a, y) * cfr(a, y);
                ds.all_cause(a, y) += mort(a, y);
            }
        }
        auto &series = ds.rates[d.code];
        series.emplace(Measure::incidence, std::move(inc));
        series.emplace(Measure::prevalence, std::move(prev));
        series.emplace(Measure::cause_mortality, std::move(mort));
        series.emplace(Measure::case_fatality, std::move(cfr));

        for (int a = 0; a <= kMaxAge; ++a) {
            const double scale = std::exp(d.cost_age_slope * (a - 50));
            ds.phase_costs.set(d.code, a, Phase::first_year, d.cost_first_year * scale);
            ds.phase_costs.set(d.code, a, Phase::prevalent, d.cost_prevalent * scale);
            ds.phase_costs.set(d.code, a, Phase::last_year, d.cost_last_year * scale);
        }
    }

    for (int a = 0; a <= kMaxAge; ++a) {
        ds.baseline_population[static_cast<std::size_t>(a)] =
            a <= 60 ? params.population_per_age
                    : params.population_per_age * std::exp(-params.population_decline_after_60 * (a - 60));
    }
    if (params.envelope > 0.0) {
        ds.expenditure_envelope = params.envelope;
        ds.envelope_year = params.envelope_year;
    }
    return ds;
}

namespace {

constexpr std::array<const char *, 35> kCountries = {
    "AUS", "NZL", "AUT", "BEL", "CAN", "CHE", "CHL", "CZE", "DEU", "DNK", "ESP", "EST",
    "FIN", "FRA", "GBR", "GRC", "HUN", "IRL", "ISL", "ISR", "ITA", "JPN", "KOR", "LTU",
    "LUX", "LVA", "MEX", "NLD", "NOR", "POL", "PRT", "SVK", "SVN", "SWE", "USA"};

} // namespace

std::vector<std::string> country_codes(int n) {
    if (n < 1 || n > static_cast<int>(kCountries.size())) {
        throw ValidationError("synthetic world supports 1 to " + std::to_string(kCountries.size()) + " countries");
    }
    return {kCountries.begin(), kCountries.begin() + n};
}

std::vector<CountryDataset> world(const WorldParams &params, const RunConfig &config) {
    const auto base = params.diseases == 0 ? demo_diseases() : generic_diseases(params.diseases);
    std::vector<CountryDataset> out;
    int c = 0;
    for (const auto &code : country_codes(params.countries)) {
        // Deterministic spread by index; golden-ratio steps avoid lining countries up.
        const double u = std::fmod(0.618034 * c, 1.0);
        const double size = 0.3 + 1.7 * u;
        const double trend = 0.85 + 0.4 * std::fmod(0.381966 * (c + 1), 1.0);
        for (const Sex sex : {Sex::female, Sex::male}) {
            StratumParams p;
            p.country = code;
            p.sex = sex;
            p.diseases = base;
            for (auto &d : p.diseases) {
                d.incidence_apc *= trend;
                d.fatality_apc *= trend;
                if (sex == Sex::male) {
                    d.incidence_at_50 *= 1.3;
                    d.fatality_at_50 *= 1.15;
                }
            }
            p.population_per_age *= size * (sex == Sex::male ? 0.97 : 1.0);
            p.background_log_rate_at_0 += 0.2 * u + (sex == Sex::male ? 0.3 : 0.0);
            p.envelope = 4e9 * size;
            out.push_back(make_stratum(p, config));
        }
        ++c;
    }
    return out;
}

void coarsen(CountryDataset &ds, int width) {
    if (width < 1) {
        throw ValidationError("age group width must be positive");
    }
    std::vector<AgeGroup> groups;
    for (int lo = 0; lo <= kMaxAge; lo += width) {
        groups.push_back({lo, std::min(lo + width - 1, kMaxAge)});
    }
    if (groups.size() > 1 && groups.back().hi - groups.back().lo + 1 < width) {
        groups.pop_back();
        groups.back().hi = kMaxAge;
    }
    const auto &pop = ds.baseline_population;
    auto collapse = [&](Surface &s) {
        for (int y = ds.observed_years.first; y <= ds.observed_years.last; ++y) {
            for (const auto &g : groups) {
                double num = 0.0;
                double den = 0.0;
                for (int a = g.lo; a <= g.hi; ++a) {
                    const double w = pop[static_cast<std::size_t>(a)] + 1e-9;
                    num += w * s(a, y);
                    den += w;
                }
                for (int a = g.lo; a <= g.hi; ++a) {
                    s(a, y) = num / den;
                }
            }
        }
    };
    for (auto &[code, series] : ds.rates) {
        series.erase(Measure::case_fatality);
        series.erase(Measure::remission);
        for (auto &[measure, surface] : series) {
            collapse(surface);
        }
    }
    collapse(ds.all_cause);
    ds.age_groups = std::move(groups);
}

} // namespace ncd::synthetic
