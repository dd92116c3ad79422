#pragma once

// Fixture builders and brute-force oracles shared by the unit and acceptance tests.

#include "ncd/dataset.hpp"
#include "ncd/projection.hpp"
#include "ncd/trend.hpp"

#include <cmath>
#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace ncd::testing {

using RateFn = std::function<double(int age, int year)>;

inline Surface surface_of(YearRange years, const RateFn &fn) {
    Surface s(years);
    for (int y = years.first; y <= years.last; ++y) {
        for (int a = 0; a <= kMaxAge; ++a) {
            s(a, y) = fn(a, y);
        }
    }
    return s;
}

inline RateFn constant(double v) {
    return [v](int, int) { return v; };
}

struct DiseaseFixture {
    std::string code = "d1";
    bool ncd4 = true;
    double weight = 0.1;
    RateFn incidence = constant(0.01);
    RateFn fatality = constant(0.05);
    RateFn remission = constant(0.0);
    /// Prevalence in the last observed year, by baseline age.
    RateFn baseline_prevalence = constant(0.05);
};

/// Dataset plus hand-set trajectories covering observed and projection years,
/// bypassing fitting entirely.
struct Fixture {
    RunConfig config;
    CountryDataset ds;
    BauTrajectories bau;
};

inline Fixture make_fixture(const std::vector<DiseaseFixture> &diseases, const RateFn &all_cause,
                            const std::vector<double> &population) {
    Fixture f;
    const YearRange observed = f.config.observed_years();
    const YearRange all{observed.first, f.config.horizon_year};
    f.ds.country = "TST";
    f.ds.observed_years = observed;
    f.ds.baseline_population = population;
    f.ds.all_cause = surface_of(observed, all_cause);
    for (const auto &d : diseases) {
        f.ds.registry.add({d.code, d.code, d.ncd4, d.weight});
        auto &series = f.ds.rates[d.code];
        series.emplace(Measure::prevalence, surface_of(observed, [&](int a, int) { return d.baseline_prevalence(a, 0); }));
        series.emplace(Measure::incidence, surface_of(observed, d.incidence));
        series.emplace(Measure::case_fatality, surface_of(observed, d.fatality));
        series.emplace(Measure::remission, surface_of(observed, d.remission));
        series.emplace(Measure::cause_mortality, surface_of(observed, [&](int a, int y) {
                           return d.baseline_prevalence(a, 0) * d.fatality(a, y);
                       }));
        DiseaseTrajectories t;
        t.disease = d.code;
        t.ncd4_member = d.ncd4;
        t.incidence = {d.code, Measure::incidence, surface_of(all, d.incidence), observed.last};
        t.case_fatality = {d.code, Measure::case_fatality, surface_of(all, d.fatality), observed.last};
        t.remission = {d.code, Measure::remission, surface_of(all, d.remission), observed.last};
        f.bau.diseases.push_back(std::move(t));
    }
    f.bau.all_cause = {std::string(kAllCauseCode), Measure::all_cause_mortality, surface_of(all, all_cause),
                       observed.last};
    return f;
}

inline std::vector<double> uniform_population(double n) { return std::vector<double>(kAgeCount, n); }

inline double prob(double rate) { return 1.0 - std::exp(-rate); }

/// Brute-force reimplementation of the projection for one cohort: disease
/// sub-models kept as unnormalised counts (susceptible, diseased) of an
/// initial unit mass, with disease deaths leaving the sub-model.
struct OracleCell {
    double alive = 0.0;
    double dying = 0.0;
    std::vector<double> prevalence;
    std::vector<double> incident;
    std::vector<double> disease_deaths;
    std::vector<double> remitted;
};

/// cells[step] for cohort `cohort` run from intervention_start under
/// `scenario`, linked to `bau` through disease death probabilities.
inline std::vector<OracleCell> oracle_cohort(const Fixture &f, const BauTrajectories &scenario, int cohort,
                                             int last_year) {
    const std::size_t n = f.bau.diseases.size();
    std::vector<double> s_scen(n), c_scen(n), s_bau(n), c_bau(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double p0 = f.ds.series(f.bau.diseases[k].disease, Measure::prevalence)(cohort, f.ds.observed_years.last);
        s_scen[k] = s_bau[k] = 1.0 - p0;
        c_scen[k] = c_bau[k] = p0;
    }
    double alive = f.ds.baseline_population[static_cast<std::size_t>(cohort)];
    std::vector<OracleCell> out;
    for (int year = f.config.intervention_start; year <= last_year; ++year) {
        const int age = std::min(cohort + (year - f.config.intervention_start), kMaxAge);
        OracleCell cell;
        cell.alive = alive;
        double adjust = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const auto &sd = scenario.diseases[k];
            const auto &bd = f.bau.diseases[k];
            const double i = prob(sd.incidence.values(age, year));
            const double fat = prob(sd.case_fatality.values(age, year));
            const double r = std::min(prob(sd.remission.values(age, year)), 1.0 - fat);
            const double bi = prob(bd.incidence.values(age, year));
            const double bf = prob(bd.case_fatality.values(age, year));
            const double br = std::min(prob(bd.remission.values(age, year)), 1.0 - bf);

            const double share = c_scen[k] / (s_scen[k] + c_scen[k]);
            const double susc = s_scen[k] / (s_scen[k] + c_scen[k]);
            const double bshare = c_bau[k] / (s_bau[k] + c_bau[k]);
            adjust += share * fat - bshare * bf;
            cell.prevalence.push_back(share);
            cell.incident.push_back(alive * susc * i);
            cell.disease_deaths.push_back(alive * share * fat);
            cell.remitted.push_back(alive * share * r);

            const double s_next = s_scen[k] * (1.0 - i) + c_scen[k] * r;
            const double c_next = c_scen[k] * (1.0 - fat - r) + s_scen[k] * i;
            s_scen[k] = s_next;
            c_scen[k] = c_next;
            const double bs_next = s_bau[k] * (1.0 - bi) + c_bau[k] * br;
            const double bc_next = c_bau[k] * (1.0 - bf - br) + s_bau[k] * bi;
            s_bau[k] = bs_next;
            c_bau[k] = bc_next;
        }
        const double q = std::clamp(prob(f.bau.all_cause.values(age, year)) + adjust, 0.0, 1.0);
        cell.dying = alive * q;
        alive -= cell.dying;
        out.push_back(std::move(cell));
    }
    return out;
}

inline std::filesystem::path temp_dir(const std::string &name) {
    // Per-process suffix: ctest -j runs each case in its own process.
    auto dir = std::filesystem::temp_directory_path() /
               ("ncd_pmslt_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_file(const std::filesystem::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace ncd::testing
