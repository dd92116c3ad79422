#pragma once

#include "ncd/dataset.hpp"
#include "ncd/grid.hpp"

#include <span>
#include <string>
#include <vector>

namespace ncd {

/// Log-linear trend of a rate over calendar time.
struct ApcFit {
    /// Continuous log-scale slope per year.
    double apc = 0.0;
    int anchor_year = 2021;
    double anchor_value = 0.0;
    int n_obs = 0;
    double residual_sd = 0.0;
    /// Set when the series was mostly zero and apc was forced to 0.
    bool fallback = false;
};

struct FitOptions {
    double floor = 1e-12;
    double max_floored_fraction = 0.5;
};

/// OLS of ln(max(value, floor)) on year. NaN values are skipped.
/// Throws FitError with fewer than two usable observations. When more than
/// half the observations were floored, returns apc = 0 anchored at the last
/// observed value with `fallback` set.
ApcFit fit_apc(std::span<const int> years, std::span<const double> values, int anchor_year,
               const FitOptions &options = {});

/// anchor * exp(apc * (year - anchor_year)).
double forecast_rate(const ApcFit &fit, int year);

enum class Provenance { observed, forecast };

std::string_view to_string(Provenance provenance);

/// Rate surface over age x calendar year, observed window plus forecast.
struct RateTrajectory {
    std::string disease;
    Measure measure = Measure::incidence;
    Surface values;
    int last_observed_year = 2021;

    Provenance provenance(int year) const {
        return year <= last_observed_year ? Provenance::observed : Provenance::forecast;
    }
};

/// Three-state (susceptible, diseased, dead-of-disease) annual step, with the
/// surviving shares renormalised to sum to one. Inputs are annual probabilities.
struct DiseaseShares {
    double susceptible = 1.0;
    double diseased = 0.0;
};

DiseaseShares advance_disease(DiseaseShares shares, double incidence_p, double fatality_p, double remission_p);

/// Annual probability from a rate and back.
double rate_to_probability(double rate);
double probability_to_rate(double probability);

struct RemissionSolution {
    /// Remission rates on the observed grid.
    Surface remission;
    /// Prevalence gap left where remission had to be clamped; 0 elsewhere.
    Surface residual;
    /// 1 where the solved remission was clamped, 0 elsewhere.
    Surface clamped;
    std::size_t clamped_cells = 0;
};

/// Inverts the three-state recurrence cohort-wise: remission at (age, year)
/// is chosen so that prevalence at (age + 1, year + 1) matches the input.
/// The last observed year and the terminal age have no successor cell and
/// copy their neighbour (previous year, age 109). Throws InconsistencyError
/// for prevalence 1 with positive incidence.
RemissionSolution solve_remission(const Surface &incidence, const Surface &prevalence, const Surface &case_fatality,
                                  const std::string &disease = {});

struct DiseaseTrajectories {
    std::string disease;
    bool ncd4_member = true;
    RateTrajectory incidence;
    RateTrajectory case_fatality;
    RateTrajectory remission;
};

struct FitDiagnostic {
    std::string disease;
    Measure measure = Measure::incidence;
    AgeGroup group;
    double apc = 0.0;
    std::string note;
};

/// Business-as-usual rate surfaces for one stratum. Scenario surfaces share this shape.
struct BauTrajectories {
    std::vector<DiseaseTrajectories> diseases;
    RateTrajectory all_cause;
    std::vector<FitDiagnostic> diagnostics;
    std::size_t remission_clamped_cells = 0;

    const DiseaseTrajectories &disease(const std::string &code) const;
};

/// Fits and forecasts every disease measure per input age group and the
/// all-cause rate (forecast to the target year, then held constant).
BauTrajectories build_bau(const CountryDataset &ds, const RunConfig &config);

} // namespace ncd
