#include "ncd/projection.hpp"

#include "ncd/error.hpp"

#include <algorithm>
#include <cmath>

namespace ncd {

namespace {

constexpr double kMinPrevalenceForWeight = 1e-9;

struct DiseaseRates {
    double incidence;
    double fatality;
    double remission;
    double fatality_rate;
};

DiseaseRates rates_at(const DiseaseTrajectories &d, int age, int year, std::size_t &caps) {
    DiseaseRates r{};
    r.incidence = rate_to_probability(d.incidence.values.at_clamped(age, year));
    r.fatality_rate = d.case_fatality.values.at_clamped(age, year);
    r.fatality = rate_to_probability(r.fatality_rate);
    r.remission = rate_to_probability(d.remission.values.at_clamped(age, year));
    if (r.remission > 1.0 - r.fatality) {
        r.remission = 1.0 - r.fatality;
        ++caps;
    }
    return r;
}

// Disability per prevalent case, by disease and age.
std::vector<std::vector<double>> morbidity_weights(const CountryDataset &ds, const RunConfig &config) {
    std::vector<std::vector<double>> weights;
    for (const auto &d : ds.registry) {
        std::vector<double> w(kAgeCount, d.disability_weight);
        if (config.morbidity_source == MorbiditySource::yld_rate) {
            std::fill(w.begin(), w.end(), 0.0);
            if (ds.has_series(d.code, Measure::yld_rate)) {
                const auto &yld = ds.series(d.code, Measure::yld_rate);
                const auto &prev = ds.series(d.code, Measure::prevalence);
                const int year = ds.observed_years.last;
                for (int a = 0; a <= kMaxAge; ++a) {
                    const double p = prev(a, year);
                    if (p > kMinPrevalenceForWeight && !std::isnan(yld(a, year))) {
                        w[static_cast<std::size_t>(a)] = std::min(1.0, yld(a, year) / p);
                    }
                }
            }
        }
        weights.push_back(std::move(w));
    }
    return weights;
}

// Share accumulators: alive-weighted sums plus unweighted sums for rows where
// nobody is alive (so shares stay defined for the indicator).
struct ShareCell {
    double weighted = 0.0;
    double plain = 0.0;
};

struct ShareSurface {
    YearRange years;
    std::vector<ShareCell> cells;

    explicit ShareSurface(YearRange y) : years(y), cells(static_cast<std::size_t>(y.size()) * kAgeCount) {}
    ShareCell &at(int age, int year) {
        return cells[static_cast<std::size_t>(year - years.first) * kAgeCount + static_cast<std::size_t>(age)];
    }
    Surface finish(const Surface &population, const Surface &cohort_count) const {
        Surface out(years);
        for (int y = years.first; y <= years.last; ++y) {
            for (int a = 0; a <= kMaxAge; ++a) {
                const auto &c = cells[static_cast<std::size_t>(y - years.first) * kAgeCount + static_cast<std::size_t>(a)];
                const double pop = population(a, y);
                const double n = cohort_count(a, y);
                out(a, y) = pop > 0.0 ? c.weighted / pop : (n > 0.0 ? c.plain / n : 0.0);
            }
        }
        return out;
    }
};

void check_grid(const BauTrajectories &t, const DiseaseRegistry &registry, YearRange years) {
    if (t.diseases.size() != registry.size()) {
        throw ValidationError("trajectories do not match the disease registry");
    }
    for (std::size_t k = 0; k < registry.size(); ++k) {
        const auto &d = t.diseases[k];
        if (d.disease != registry[k].code) {
            throw ValidationError("trajectory order differs from registry at " + registry[k].code);
        }
        for (const auto *s : {&d.incidence.values, &d.case_fatality.values, &d.remission.values}) {
            if (!s->years().contains(years.first) || !s->years().contains(years.last)) {
                throw ValidationError("trajectories for " + d.disease + " do not cover the projection years");
            }
        }
    }
    if (!t.all_cause.values.years().contains(years.first) || !t.all_cause.values.years().contains(years.last)) {
        throw ValidationError("all-cause trajectory does not cover the projection years");
    }
}

} // namespace

const DiseaseOutcome &ProjectionResult::disease(const std::string &code) const {
    for (const auto &d : diseases) {
        if (d.disease == code) {
            return d;
        }
    }
    throw ValidationError("no projection outcome for disease " + code);
}

ProjectionResult run_projection(const CountryDataset &ds, const BauTrajectories &bau, const BauTrajectories &scenario,
                                const RunConfig &config, const ProjectionOptions &options) {
    const int first = config.intervention_start;
    const int last = options.last_year == 0 ? config.horizon_year : options.last_year;
    const YearRange years{first, last};
    if (years.empty() || last > config.horizon_year) {
        throw ValidationError("invalid projection year range");
    }
    check_grid(bau, ds.registry, years);
    check_grid(scenario, ds.registry, years);

    const bool same = &bau == &scenario;
    const std::size_t n_dis = ds.registry.size();
    const int n_steps = years.size();
    const auto weights = morbidity_weights(ds, config);

    ProjectionResult res;
    res.years = years;
    res.population = Surface(years);
    res.population_end = Surface(years);
    res.person_years = Surface(years);
    res.deaths = Surface(years);
    Surface cohort_count(years);
    std::vector<ShareSurface> prevalence(n_dis, ShareSurface(years));
    std::vector<ShareSurface> mortality(n_dis, ShareSurface(years));
    ShareSurface morbidity(years);
    for (std::size_t k = 0; k < n_dis; ++k) {
        DiseaseOutcome o;
        o.disease = ds.registry[k].code;
        o.ncd4_member = ds.registry[k].ncd4_member;
        o.deaths = Surface(years);
        o.incident = Surface(years);
        o.remitted = Surface(years);
        res.diseases.push_back(std::move(o));
    }
    if (options.record_cohorts) {
        CohortTrace trace;
        const auto per_cohort = std::vector<std::vector<double>>(kAgeCount, std::vector<double>(n_steps + 1, 0.0));
        trace.alive = per_cohort;
        trace.cumulative_deaths = per_cohort;
        trace.susceptible.assign(n_dis, per_cohort);
        trace.diseased.assign(n_dis, per_cohort);
        res.cohorts = std::move(trace);
    }

    std::vector<const Surface *> observed_prevalence;
    for (const auto &d : ds.registry) {
        observed_prevalence.push_back(&ds.series(d.code, Measure::prevalence));
    }

    std::vector<DiseaseShares> scen_shares(n_dis);
    std::vector<DiseaseShares> bau_shares(n_dis);
    std::vector<DiseaseRates> scen_rates(n_dis);

    for (int cohort = 0; cohort <= kMaxAge; ++cohort) {
        double alive = ds.baseline_population[static_cast<std::size_t>(cohort)];
        double cumulative = 0.0;
        for (std::size_t k = 0; k < n_dis; ++k) {
            const double p0 = (*observed_prevalence[k])(cohort, ds.observed_years.last);
            scen_shares[k] = {1.0 - p0, p0};
            bau_shares[k] = scen_shares[k];
        }
        auto record_trace = [&](int step) {
            if (!res.cohorts) {
                return;
            }
            auto &t = *res.cohorts;
            const auto c = static_cast<std::size_t>(cohort);
            const auto s = static_cast<std::size_t>(step);
            t.alive[c][s] = alive;
            t.cumulative_deaths[c][s] = cumulative;
            for (std::size_t k = 0; k < n_dis; ++k) {
                t.susceptible[k][c][s] = scen_shares[k].susceptible;
                t.diseased[k][c][s] = scen_shares[k].diseased;
            }
        };
        record_trace(0);

        for (int step = 0; step < n_steps; ++step) {
            const int year = first + step;
            const int age = cohort + step;
            const int row = std::min(age, kMaxAge);

            double delta = 0.0;
            for (std::size_t k = 0; k < n_dis; ++k) {
                scen_rates[k] = rates_at(scenario.diseases[k], row, year, res.diagnostics.remission_caps);
                if (!same) {
                    std::size_t ignored = 0;
                    const auto b = rates_at(bau.diseases[k], row, year, ignored);
                    delta += scen_shares[k].diseased * scen_rates[k].fatality - bau_shares[k].diseased * b.fatality;
                    bau_shares[k] = advance_disease(bau_shares[k], b.incidence, b.fatality, b.remission);
                }
            }
            double q = rate_to_probability(bau.all_cause.values.at_clamped(row, year)) + delta;
            if (q < 0.0 || q > 1.0) {
                q = std::clamp(q, 0.0, 1.0);
                ++res.diagnostics.clamped_death_probability;
            }
            const double dying = alive * q;
            const double survivors = alive - dying;

            res.population(row, year) += alive;
            res.population_end(row, year) += survivors;
            res.person_years(row, year) += 0.5 * (alive + survivors);
            res.deaths(row, year) += dying;
            cohort_count(row, year) += 1.0;

            double disability = 0.0;
            for (std::size_t k = 0; k < n_dis; ++k) {
                const auto &sh = scen_shares[k];
                const auto &r = scen_rates[k];
                auto &o = res.diseases[k];
                auto &pc = prevalence[k].at(row, year);
                pc.weighted += alive * sh.diseased;
                pc.plain += sh.diseased;
                auto &mc = mortality[k].at(row, year);
                mc.weighted += alive * sh.diseased * r.fatality_rate;
                mc.plain += sh.diseased * r.fatality_rate;
                o.deaths(row, year) += alive * sh.diseased * r.fatality;
                o.incident(row, year) += alive * sh.susceptible * r.incidence;
                o.remitted(row, year) += alive * sh.diseased * r.remission;
                disability += sh.diseased * weights[k][static_cast<std::size_t>(row)];
            }
            auto &mb = morbidity.at(row, year);
            mb.weighted += alive * disability;
            mb.plain += disability;

            for (std::size_t k = 0; k < n_dis; ++k) {
                scen_shares[k] =
                    advance_disease(scen_shares[k], scen_rates[k].incidence, scen_rates[k].fatality, scen_rates[k].remission);
                if (same) {
                    bau_shares[k] = scen_shares[k];
                }
            }
            alive = survivors;
            cumulative += dying;
            record_trace(step + 1);
        }
    }

    for (std::size_t k = 0; k < n_dis; ++k) {
        res.diseases[k].prevalence = prevalence[k].finish(res.population, cohort_count);
        res.diseases[k].mortality_rate = mortality[k].finish(res.population, cohort_count);
    }
    res.morbidity = morbidity.finish(res.population, cohort_count);
    return res;
}

ProjectionResult run_projection(const CountryDataset &ds, const BauTrajectories &bau, const RunConfig &config,
                                const ProjectionOptions &options) {
    return run_projection(ds, bau, bau, config, options);
}

double person_years(const ProjectionResult &result, AgeBand band, YearRange years) {
    if (band.width() == 0 || band.lo < 0 || band.hi > kMaxAge) {
        throw ValidationError("empty or out-of-range age band");
    }
    if (!result.years.contains(years.first) || !result.years.contains(years.last)) {
        throw ValidationError("year range outside the projection");
    }
    double total = 0.0;
    for (int y = years.first; y <= years.last; ++y) {
        for (int a = band.lo; a <= band.hi; ++a) {
            total += result.person_years(a, y);
        }
    }
    return total;
}

double person_years_exact(const ProjectionResult &result, double lo, double hi, int year) {
    if (!(lo < hi) || lo < 0.0 || hi > kMaxAge + 1) {
        throw ValidationError("empty or out-of-range exact-age interval");
    }
    double total = 0.0;
    for (int a = static_cast<int>(std::floor(lo)); a <= kMaxAge && a < hi; ++a) {
        const double overlap = std::min(hi, a + 1.0) - std::max(lo, static_cast<double>(a));
        if (overlap >= 1.0) {
            total += result.person_years(a, year);
        } else if (overlap > 0.0) {
            total += overlap * result.person_years(a, year);
        }
    }
    return total;
}

double morbidity_rate(const ProjectionResult &result, double age, int year) {
    if (!(age >= 0.0 && age <= kMaxAge)) {
        throw ValidationError("morbidity age outside [0, 110]");
    }
    const int lo = static_cast<int>(std::floor(age));
    if (lo >= kMaxAge) {
        return result.morbidity(kMaxAge, year);
    }
    const double frac = age - lo;
    const double m0 = result.morbidity(lo, year);
    if (frac == 0.0) {
        return m0;
    }
    return m0 + frac * (result.morbidity(lo + 1, year) - m0);
}

ProjectionResult combine_strata(const ProjectionResult &a, const ProjectionResult &b) {
    if (a.years != b.years || a.diseases.size() != b.diseases.size()) {
        throw ValidationError("cannot combine projections on different grids");
    }
    ProjectionResult out = a;
    out.cohorts.reset();
    auto add = [](Surface &x, const Surface &y) {
        for (int yr = x.years().first; yr <= x.years().last; ++yr) {
            for (int age = 0; age <= kMaxAge; ++age) {
                x(age, yr) += y(age, yr);
            }
        }
    };
    auto weighted = [&](Surface &x, const Surface &y) {
        for (int yr = x.years().first; yr <= x.years().last; ++yr) {
            for (int age = 0; age <= kMaxAge; ++age) {
                const double pa = a.population(age, yr);
                const double pb = b.population(age, yr);
                x(age, yr) = pa + pb > 0.0 ? (pa * x(age, yr) + pb * y(age, yr)) / (pa + pb)
                                           : 0.5 * (x(age, yr) + y(age, yr));
            }
        }
    };
    for (std::size_t k = 0; k < out.diseases.size(); ++k) {
        auto &o = out.diseases[k];
        const auto &other = b.diseases[k];
        if (o.disease != other.disease) {
            throw ValidationError("cannot combine projections with different registries");
        }
        weighted(o.prevalence, other.prevalence);
        weighted(o.mortality_rate, other.mortality_rate);
        add(o.deaths, other.deaths);
        add(o.incident, other.incident);
        add(o.remitted, other.remitted);
    }
    weighted(out.morbidity, b.morbidity);
    add(out.population, b.population);
    add(out.population_end, b.population_end);
    add(out.person_years, b.person_years);
    add(out.deaths, b.deaths);
    out.diagnostics.clamped_death_probability += b.diagnostics.clamped_death_probability;
    out.diagnostics.remission_caps += b.diagnostics.remission_caps;
    return out;
}

} // namespace ncd
