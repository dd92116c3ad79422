#include "support.hpp"

#include "ncd/error.hpp"
#include "ncd/scenario.hpp"
#include "ncd/synthetic.hpp"

#include <gtest/gtest.h>

using namespace ncd;
using namespace ncd::testing;

namespace {

std::vector<DiseaseFixture> three_diseases() {
    std::vector<DiseaseFixture> d(3);
    d[0].code = "a";
    d[0].incidence = [](int age, int year) { return 0.001 * std::exp(0.05 * age - 0.01 * (year - 2021)); };
    d[0].fatality = [](int age, int) { return 0.02 + 0.001 * age; };
    d[0].remission = constant(0.03);
    d[0].baseline_prevalence = [](int age, int) { return std::min(0.5, 0.002 * age); };
    d[1].code = "b";
    d[1].ncd4 = false;
    d[1].incidence = constant(0.004);
    d[1].fatality = constant(0.2);
    d[1].remission = constant(0.3);
    d[1].baseline_prevalence = constant(0.01);
    d[2].code = "c";
    d[2].weight = 0.3;
    d[2].incidence = [](int age, int) { return age < 40 ? 0.0 : 0.002; };
    d[2].fatality = constant(0.0);
    d[2].remission = constant(0.0);
    d[2].baseline_prevalence = [](int age, int) { return age < 40 ? 0.0 : 0.05; };
    return d;
}

RateFn gompertz() {
    return [](int age, int year) { return 2e-4 * std::exp(0.08 * age - 0.01 * (year - 2021)); };
}

std::vector<double> sloped_population() {
    std::vector<double> p(kAgeCount);
    for (int a = 0; a <= kMaxAge; ++a) {
        p[static_cast<std::size_t>(a)] = 1000.0 + 37.0 * (kMaxAge - a);
    }
    return p;
}

BauTrajectories scaled_copy(const BauTrajectories &bau, double inc, double fat, double rem) {
    BauTrajectories s = bau;
    for (auto &d : s.diseases) {
        for (int y = 2022; y <= 2040; ++y) {
            for (double &v : d.incidence.values.year_slice(y)) v *= inc;
            for (double &v : d.case_fatality.values.year_slice(y)) v *= fat;
            for (double &v : d.remission.values.year_slice(y)) v *= rem;
        }
    }
    return s;
}

// Oracle surfaces assembled from per-cohort brute-force runs.
void expect_matches_oracle(const Fixture &f, const BauTrajectories &scenario, const ProjectionResult &r) {
    const YearRange years = r.years;
    const std::size_t n = f.bau.diseases.size();
    Surface pop(years), deaths(years);
    std::vector<Surface> weighted(n, Surface(years)), incident(n, Surface(years)), dd(n, Surface(years)),
        remitted(n, Surface(years));
    for (int c = 0; c <= kMaxAge; ++c) {
        const auto cells = oracle_cohort(f, scenario, c, years.last);
        for (int s = 0; s < years.size(); ++s) {
            const int y = years.first + s;
            const int a = std::min(c + s, kMaxAge);
            const auto &cell = cells[static_cast<std::size_t>(s)];
            pop(a, y) += cell.alive;
            deaths(a, y) += cell.dying;
            for (std::size_t k = 0; k < n; ++k) {
                weighted[k](a, y) += cell.alive * cell.prevalence[k];
                incident[k](a, y) += cell.incident[k];
                dd[k](a, y) += cell.disease_deaths[k];
                remitted[k](a, y) += cell.remitted[k];
            }
        }
    }
    auto close = [](double got, double want) { return std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want)); };
    for (int y = years.first; y <= years.last; ++y) {
        for (int a = 0; a <= kMaxAge; ++a) {
            ASSERT_TRUE(close(r.population(a, y), pop(a, y))) << a << " " << y;
            ASSERT_TRUE(close(r.deaths(a, y), deaths(a, y))) << a << " " << y;
            for (std::size_t k = 0; k < n; ++k) {
                const auto &o = r.diseases[k];
                ASSERT_TRUE(close(o.prevalence(a, y) * pop(a, y), weighted[k](a, y))) << k << " " << a << " " << y;
                ASSERT_TRUE(close(o.incident(a, y), incident[k](a, y))) << k << " " << a << " " << y;
                ASSERT_TRUE(close(o.deaths(a, y), dd[k](a, y))) << k << " " << a << " " << y;
                ASSERT_TRUE(close(o.remitted(a, y), remitted[k](a, y))) << k << " " << a << " " << y;
            }
        }
    }
}

} // namespace

TEST(Projection, SingleCohortMatchesBruteForce) {
    std::vector<double> pop(kAgeCount, 0.0);
    pop[40] = 1000.0;
    DiseaseFixture d;
    d.incidence = constant(0.02);
    d.fatality = constant(0.1);
    d.baseline_prevalence = constant(0.0);
    const Fixture f = make_fixture({d}, constant(0.0), pop);
    const auto r = run_projection(f.ds, f.bau, f.config);

    // i = f constant, r = 0, starting disease free: C' = (C(1-f) + (1-C)i)/(1 - Cf).
    const double i = prob(0.02);
    const double fat = prob(0.1);
    double c = 0.0;
    for (int y = 2022; y <= 2040; ++y) {
        const int age = 40 + (y - 2022);
        EXPECT_NEAR(r.diseases[0].prevalence(age, y), c, 1e-14) << y;
        EXPECT_EQ(r.population(age, y), 1000.0);
        c = (c * (1.0 - fat) + (1.0 - c) * i) / (1.0 - c * fat);
    }
    EXPECT_EQ(r.diagnostics.clamped_death_probability, 0u);
}

TEST(Projection, MultiDiseaseMatchesBruteForce) {
    const Fixture f = make_fixture(three_diseases(), gompertz(), sloped_population());
    expect_matches_oracle(f, f.bau, run_projection(f.ds, f.bau, f.config));
    const BauTrajectories scen = scaled_copy(f.bau, 0.8, 0.7, 1.4);
    expect_matches_oracle(f, scen, run_projection(f.ds, f.bau, scen, f.config));
}

TEST(Projection, IdenticalScenarioIsBitIdentical) {
    const Fixture f = make_fixture(three_diseases(), gompertz(), sloped_population());
    const BauTrajectories copy = f.bau;
    const auto a = run_projection(f.ds, f.bau, f.config);
    const auto b = run_projection(f.ds, f.bau, copy, f.config);
    EXPECT_TRUE(a == b);
    EXPECT_TRUE(a.morbidity.identical(b.morbidity));
}

TEST(Projection, Deterministic) {
    const Fixture f = make_fixture(three_diseases(), gompertz(), sloped_population());
    EXPECT_TRUE(run_projection(f.ds, f.bau, f.config) == run_projection(f.ds, f.bau, f.config));
}

TEST(Projection, LinearInPopulation) {
    Fixture f = make_fixture(three_diseases(), gompertz(), sloped_population());
    const auto base = run_projection(f.ds, f.bau, f.config);
    for (double &v : f.ds.baseline_population) {
        v *= 2.0;
    }
    const auto twice = run_projection(f.ds, f.bau, f.config);
    for (int y = 2022; y <= 2040; ++y) {
        for (int a = 0; a <= kMaxAge; ++a) {
            ASSERT_EQ(twice.population(a, y), 2.0 * base.population(a, y));
            ASSERT_EQ(twice.person_years(a, y), 2.0 * base.person_years(a, y));
            ASSERT_EQ(twice.deaths(a, y), 2.0 * base.deaths(a, y));
            ASSERT_EQ(twice.morbidity(a, y), base.morbidity(a, y));
            for (std::size_t k = 0; k < 3; ++k) {
                ASSERT_EQ(twice.diseases[k].prevalence(a, y), base.diseases[k].prevalence(a, y));
                ASSERT_EQ(twice.diseases[k].incident(a, y), 2.0 * base.diseases[k].incident(a, y));
            }
        }
    }
}

TEST(PersonYears, HalfDyingGivesSeventyFive) {
    std::vector<double> pop(kAgeCount, 0.0);
    pop[50] = 100.0;
    const Fixture f = make_fixture({}, constant(std::log(2.0)), pop);
    const auto r = run_projection(f.ds, f.bau, f.config);
    EXPECT_NEAR(r.person_years(50, 2022), 75.0, 1e-12);
    EXPECT_NEAR(person_years(r, {50, 50}, {2022, 2022}), 75.0, 1e-12);
    EXPECT_NEAR(person_years(r, {51, 51}, {2023, 2023}), 37.5, 1e-12);
}

TEST(PersonYears, ConstantPopulationCountsCells) {
    const Fixture f = make_fixture({}, constant(0.0), uniform_population(10.0));
    const auto r = run_projection(f.ds, f.bau, f.config);
    // Band 30..39 over 2022..2026: every cell holds one cohort of 10.
    EXPECT_EQ(person_years(r, {30, 39}, {2022, 2026}), 10.0 * 10 * 5);
}

TEST(PersonYears, BandIsAdditive) {
    const Fixture f = make_fixture(three_diseases(), gompertz(), sloped_population());
    const auto r = run_projection(f.ds, f.bau, f.config);
    double sum = 0.0;
    for (int a = 30; a <= 69; ++a) {
        sum += r.person_years(a, 2030);
    }
    EXPECT_EQ(person_years(r, {30, 69}, {2030, 2030}), sum);
    EXPECT_THROW(person_years(r, {40, 39}, {2030, 2030}), ValidationError);
    EXPECT_NEAR(person_years_exact(r, 25.0, 65.0, 2030), person_years(r, {25, 64}, {2030, 2030}), 1e-9);
    EXPECT_NEAR(person_years_exact(r, 25.0, 25.5, 2030), 0.5 * r.person_years(25, 2030), 1e-12);
    for (int y = 2022; y <= 2040; ++y) {
        for (int a = 0; a <= kMaxAge; ++a) {
            ASSERT_LE(r.person_years(a, y), std::max(r.population(a, y), r.population_end(a, y)));
        }
    }
}

TEST(Morbidity, InterpolatesBetweenAges) {
    DiseaseFixture d;
    d.weight = 0.2;
    d.baseline_prevalence = [](int age, int) { return age == 65 ? 0.30 : (age == 66 ? 0.34 : 0.1); };
    const Fixture f = make_fixture({d}, gompertz(), uniform_population(100.0));
    const auto r = run_projection(f.ds, f.bau, f.config);
    EXPECT_NEAR(morbidity_rate(r, 65.5, 2022), 0.064, 1e-15);
    EXPECT_NEAR(morbidity_rate(r, 65.0, 2022), 0.06, 1e-15);
}

TEST(Morbidity, ZeroWeightsGiveZero) {
    auto diseases = three_diseases();
    for (auto &d : diseases) {
        d.weight = 0.0;
    }
    const Fixture f = make_fixture(diseases, gompertz(), sloped_population());
    const auto r = run_projection(f.ds, f.bau, f.config);
    for (const double v : r.morbidity.values()) {
        ASSERT_EQ(v, 0.0);
    }
}

TEST(Conservation, ClosureAndNormalisation) {
    RunConfig cfg;
    synthetic::StratumParams p;
    p.diseases = synthetic::demo_diseases();
    const auto ds = synthetic::make_stratum(p, cfg);
    const auto bau = build_bau(ds, cfg);
    const auto r = run_projection(ds, bau, cfg, {true, 0});
    ASSERT_TRUE(r.cohorts.has_value());
    const auto &t = *r.cohorts;
    for (int c = 0; c <= kMaxAge; ++c) {
        const auto uc = static_cast<std::size_t>(c);
        for (std::size_t s = 0; s < t.alive[uc].size(); ++s) {
            const double base = t.baseline(c);
            ASSERT_NEAR(t.alive[uc][s] + t.cumulative_deaths[uc][s], base, 1e-9 * base);
            for (std::size_t k = 0; k < t.diseased.size(); ++k) {
                ASSERT_NEAR(t.susceptible[k][uc][s] + t.diseased[k][uc][s], 1.0, 1e-12);
            }
        }
    }
    EXPECT_EQ(r.diagnostics.clamped_death_probability, 0u);
}

namespace {

struct SignRun {
    Fixture f;
    ProjectionResult bau;
    ProjectionResult scen;
};

SignRun sign_run(double inc, double fat, double rem) {
    DiseaseFixture d;
    d.incidence = [](int age, int) { return 0.0005 * std::exp(0.06 * age); };
    d.fatality = [](int age, int) { return 0.01 * std::exp(0.03 * age); };
    d.remission = constant(0.05);
    d.baseline_prevalence = [](int age, int) { return std::min(0.4, 0.003 * age); };
    SignRun s{make_fixture({d}, gompertz(), sloped_population()), {}, {}};
    const auto scen = scaled_copy(s.f.bau, inc, fat, rem);
    s.bau = run_projection(s.f.ds, s.f.bau, s.f.config, {true, 0});
    s.scen = run_projection(s.f.ds, s.f.bau, scen, s.f.config, {true, 0});
    return s;
}

void expect_cumulative_deaths_not_above(const SignRun &s) {
    const auto &b = *s.bau.cohorts;
    const auto &x = *s.scen.cohorts;
    for (std::size_t c = 0; c < b.alive.size(); ++c) {
        for (std::size_t k = 0; k < b.alive[c].size(); ++k) {
            ASSERT_LE(x.cumulative_deaths[c][k], b.cumulative_deaths[c][k] * (1.0 + 1e-12)) << c << " " << k;
        }
    }
}

} // namespace

TEST(Signs, LowerFatalityRaisesPrevalence) {
    const auto s = sign_run(1.0, 0.7, 1.0);
    for (int y = 2022; y <= 2040; ++y) {
        for (int a = 0; a <= kMaxAge; ++a) {
            ASSERT_GE(s.scen.diseases[0].prevalence(a, y), s.bau.diseases[0].prevalence(a, y) * (1.0 - 1e-12))
                << a << " " << y;
        }
    }
    expect_cumulative_deaths_not_above(s);
}

TEST(Signs, HigherRemissionLowersPrevalence) {
    const auto s = sign_run(1.0, 1.0, 1.5);
    for (int y = 2022; y <= 2040; ++y) {
        for (int a = 0; a <= kMaxAge; ++a) {
            ASSERT_LE(s.scen.diseases[0].prevalence(a, y), s.bau.diseases[0].prevalence(a, y) * (1.0 + 1e-12));
        }
    }
}

TEST(Signs, PreventionLowersPrevalenceAndDeaths) {
    const auto s = sign_run(0.7, 1.0, 1.0);
    for (int y = 2022; y <= 2040; ++y) {
        for (int a = 0; a <= kMaxAge; ++a) {
            ASSERT_LE(s.scen.diseases[0].prevalence(a, y), s.bau.diseases[0].prevalence(a, y) * (1.0 + 1e-12));
        }
    }
    expect_cumulative_deaths_not_above(s);
}

TEST(CombineStrata, SumsCountsAndWeightsShares) {
    const Fixture f = make_fixture(three_diseases(), gompertz(), sloped_population());
    Fixture g = make_fixture(three_diseases(), gompertz(), uniform_population(500.0));
    const auto a = run_projection(f.ds, f.bau, f.config);
    const auto b = run_projection(g.ds, g.bau, g.config);
    const auto c = combine_strata(a, b);
    EXPECT_EQ(c.population(30, 2025), a.population(30, 2025) + b.population(30, 2025));
    const double want = (a.diseases[0].prevalence(30, 2025) * a.population(30, 2025) +
                         b.diseases[0].prevalence(30, 2025) * b.population(30, 2025)) /
                        c.population(30, 2025);
    EXPECT_NEAR(c.diseases[0].prevalence(30, 2025), want, 1e-15);
}
