#pragma once

#include "ncd/dataset.hpp"
#include "ncd/trend.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ncd {

/// Per-disease outcomes on the (age, year) grid of a projection. Shares are
/// population-weighted over the cohorts in a cell; counts are summed.
struct DiseaseOutcome {
    std::string disease;
    bool ncd4_member = true;
    Surface prevalence;
    Surface deaths;
    Surface incident;
    Surface remitted;
    /// prevalence x case-fatality rate: the cause-specific mortality rate.
    Surface mortality_rate;

    bool operator==(const DiseaseOutcome &) const = default;
};

/// Per-cohort state at the start of every projection year, plus the state
/// after the last year. Index [cohort][step], step 0 = baseline.
struct CohortTrace {
    std::vector<std::vector<double>> alive;
    std::vector<std::vector<double>> cumulative_deaths;
    /// [disease][cohort][step]
    std::vector<std::vector<std::vector<double>>> susceptible;
    std::vector<std::vector<std::vector<double>>> diseased;

    double baseline(int cohort) const { return alive[static_cast<std::size_t>(cohort)].front(); }
    bool operator==(const CohortTrace &) const = default;
};

struct ProjectionDiagnostics {
    /// Cells where BAU all-cause probability plus the disease adjustment left [0, 1].
    std::size_t clamped_death_probability = 0;
    /// Cohort-years where remission was capped at 1 - case fatality.
    std::size_t remission_caps = 0;

    bool operator==(const ProjectionDiagnostics &) const = default;
};

/// Cell (age, year) holds the cohort aged `age` at the start of `year`;
/// the terminal age row collects every cohort aged 110 or more.
struct ProjectionResult {
    YearRange years;
    Surface population;
    Surface population_end;
    Surface person_years;
    Surface deaths;
    std::vector<DiseaseOutcome> diseases;
    /// Prevalence-weighted disability.
    Surface morbidity;
    std::optional<CohortTrace> cohorts;
    ProjectionDiagnostics diagnostics;

    const DiseaseOutcome &disease(const std::string &code) const;
    bool operator==(const ProjectionResult &) const = default;
};

struct ProjectionOptions {
    bool record_cohorts = false;
    /// Last simulated year; 0 means the configured horizon.
    int last_year = 0;
};

/// Projects the closed baseline cohort from `intervention_start`. The baseline
/// population and observed prevalence of the last data year enter the first
/// projection year at their baseline ages. Scenario all-cause mortality is the
/// BAU probability plus the sum over diseases of the change in disease death
/// probability (diseased share x case fatality) relative to BAU.
ProjectionResult run_projection(const CountryDataset &ds, const BauTrajectories &bau, const BauTrajectories &scenario,
                                const RunConfig &config, const ProjectionOptions &options = {});

/// BAU run: the scenario surfaces are the BAU surfaces.
ProjectionResult run_projection(const CountryDataset &ds, const BauTrajectories &bau, const RunConfig &config,
                                const ProjectionOptions &options = {});

/// Person-years summed over an inclusive age band and a year range.
/// Throws ValidationError on an empty band or one outside 0..110.
double person_years(const ProjectionResult &result, AgeBand band, YearRange years);

/// Person-years over the exact-age interval [lo, hi) for one year; fractional
/// bounds take the matching share of a single-year cell.
double person_years_exact(const ProjectionResult &result, double lo, double hi, int year);

/// Morbidity at an exact age, linearly interpolated between single-year ages.
double morbidity_rate(const ProjectionResult &result, double age, int year);

/// Sums two strata (e.g. sexes) on the same grid; shares are population-weighted.
ProjectionResult combine_strata(const ProjectionResult &a, const ProjectionResult &b);

} // namespace ncd
