#pragma once

// Cohort-coherent synthetic strata for demos, tests and benchmarks. Rates are
// log-linear in calendar year and log-linear in age; prevalence is produced by
// forward-simulating the three-state disease model, so the remission solver
// can recover the generating remission exactly.

#include "ncd/dataset.hpp"

#include <string>
#include <vector>

namespace ncd::synthetic {

struct DiseaseParams {
    std::string code;
    std::string label;
    bool ncd4_member = true;
    double disability_weight = 0.1;
    /// Rates at age 50 in the first observed year.
    double incidence_at_50 = 0.004;
    double incidence_age_slope = 0.06;
    double incidence_apc = -0.01;
    double fatality_at_50 = 0.03;
    double fatality_age_slope = 0.04;
    double fatality_apc = -0.012;
    /// Remission rate, constant in time; ages above 100 use the age-100 value.
    double remission = 0.02;
    double remission_age_slope = 0.0;
    double birth_prevalence = 1e-4;
    /// Costs per case-year at age 50; scaled by exp(cost_age_slope * (age - 50)).
    double cost_first_year = 8000.0;
    double cost_prevalent = 2000.0;
    double cost_last_year = 20000.0;
    double cost_age_slope = 0.01;
};

struct StratumParams {
    std::string country = "AUS";
    Sex sex = Sex::female;
    std::vector<DiseaseParams> diseases;
    /// Non-disease mortality: exp(background_log_rate_at_0 + background_age_slope * age).
    double background_log_rate_at_0 = -9.0;
    double background_age_slope = 0.085;
    double background_apc = -0.01;
    /// Baseline population per single year of age up to 60, declining after.
    double population_per_age = 150000.0;
    double population_decline_after_60 = 0.07;
    double envelope = 0.0;
    int envelope_year = 2021;
};

/// The four named demo diseases (ischaemic heart disease, stroke, diabetes,
/// colorectal cancer) with illustrative, non-authoritative parameters.
std::vector<DiseaseParams> demo_diseases();

/// `n` generic diseases with parameters spread deterministically by index.
std::vector<DiseaseParams> generic_diseases(int n);

DiseaseRegistry registry_for(const std::vector<DiseaseParams> &diseases);

/// Rates at single-year ages for config.observed_years(); no remission series
/// is emitted, so it is solved downstream.
CountryDataset make_stratum(const StratumParams &params, const RunConfig &config);

struct WorldParams {
    /// First `countries` codes of a fixed ISO3 list (at most 35).
    int countries = 2;
    /// 0 selects the four demo diseases, otherwise generic_diseases(diseases).
    int diseases = 0;
};

/// Both sexes for each country; countries differ in size, background
/// mortality and trend strength so attainment varies across strata.
std::vector<CountryDataset> world(const WorldParams &params, const RunConfig &config);

std::vector<std::string> country_codes(int n);

/// Collapses rates to `width`-year age groups (the last group runs to 110), the
/// way burden estimates usually arrive. Group values are population-weighted
/// means; case fatality is dropped so loading derives it from the means.
void coarsen(CountryDataset &ds, int width);

/// Generating remission surface for one disease on the observed grid.
Surface remission_surface(const DiseaseParams &disease, YearRange years);

} // namespace ncd::synthetic
