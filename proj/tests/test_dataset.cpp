#include "support.hpp"

#include "ncd/error.hpp"
#include "ncd/synthetic.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace ncd;
using namespace ncd::testing;

namespace {

RunConfig short_window() {
    RunConfig c;
    c.data_first_year = 2010;
    c.indicator_baseline_year = 2015;
    return c;
}

// Two diseases, two age groups [0,49] and [50,110], every measure present.
struct CsvFixture {
    std::filesystem::path dir;
    RunConfig config = short_window();

    explicit CsvFixture(const std::string &name) : dir(temp_dir(name)) {
        write_file(dir / "registry.csv", "code,label,ncd4_member,disability_weight\n"
                                         "ihd,Ischaemic heart disease,1,0.1\n"
                                         "copd,\"COPD, chronic\",1,0.2\n");
        std::ostringstream rates;
        rates << "country,sex,disease,measure,age_lo,age_hi,year,value\n";
        for (int y = config.data_first_year; y <= config.data_last_year; ++y) {
            for (const auto &[lo, hi] : {std::pair{0, 49}, std::pair{50, 110}}) {
                const double k = lo == 0 ? 1.0 : 4.0;
                rates << "AUS,female,ihd,incidence," << lo << ',' << hi << ',' << y << ',' << 0.001 * k << '\n';
                rates << "AUS,female,ihd,prevalence," << lo << ',' << hi << ',' << y << ',' << 0.04 << '\n';
                rates << "AUS,female,ihd,cause_mortality," << lo << ',' << hi << ',' << y << ',' << 0.002 << '\n';
                rates << "AUS,female,ihd,remission," << lo << ',' << hi << ',' << y << ',' << 0.0 << '\n';
                rates << "AUS,female,copd,incidence," << lo << ',' << hi << ',' << y << ',' << 0.002 * k << '\n';
                rates << "AUS,female,copd,prevalence," << lo << ',' << hi << ',' << y << ',' << 0.05 << '\n';
                rates << "AUS,female,copd,cause_mortality," << lo << ',' << hi << ',' << y << ',' << 0.001 << '\n';
                rates << "AUS,female,copd,remission," << lo << ',' << hi << ',' << y << ',' << 0.0 << '\n';
                rates << "AUS,female,all,all_cause_mortality," << lo << ',' << hi << ',' << y << ',' << 0.01 * k
                      << '\n';
            }
        }
        rates_text = rates.str();
        write_file(dir / "rates.csv", rates_text);
        write_file(dir / "population.csv", "country,sex,age_lo,age_hi,year,count\n"
                                           "AUS,female,0,4,2021,1000\n"
                                           "AUS,female,5,110,2021,10600\n"
                                           "AUS,female,0,4,2020,999999\n");
    }

    std::string rates_text;

    std::vector<CountryDataset> load() const {
        return load_datasets(InputPaths::in_directory(dir), load_registry(dir / "registry.csv"), config);
    }
    void append_rate(const std::string &row) const { write_file(dir / "rates.csv", rates_text + row + "\n"); }
};

} // namespace

TEST(Dataset, ExpandsGroupsConstantWithin) {
    CsvFixture fx("expand");
    const auto strata = fx.load();
    ASSERT_EQ(strata.size(), 1u);
    const auto &ds = strata.front();
    EXPECT_EQ(ds.registry.size(), 2u);
    EXPECT_EQ(ds.registry[1].label, "COPD, chronic");
    const Surface &inc = ds.series("ihd", Measure::incidence);
    for (int y = 2010; y <= 2021; ++y) {
        for (int a = 0; a <= 49; ++a) {
            EXPECT_EQ(inc(a, y), 0.001);
        }
        for (int a = 50; a <= kMaxAge; ++a) {
            EXPECT_EQ(inc(a, y), 0.004);
        }
    }
    EXPECT_TRUE(validate_dataset(ds).entries.empty());
}

TEST(Dataset, CaseFatalityIsMortalityOverPrevalence) {
    CsvFixture fx("cfr");
    const auto ds = fx.load().front();
    EXPECT_NEAR(ds.series("ihd", Measure::case_fatality)(60, 2015), 0.05, 1e-15);
    EXPECT_NEAR(ds.series("copd", Measure::case_fatality)(10, 2021), 0.02, 1e-15);
}

TEST(Dataset, PopulationExpansionPreservesMass) {
    CsvFixture fx("mass");
    const auto ds = fx.load().front();
    double total = 0.0;
    for (const double v : ds.baseline_population) {
        total += v;
    }
    EXPECT_NEAR(total, 11600.0, 1e-9);
    EXPECT_DOUBLE_EQ(ds.baseline_population[0], 200.0);
    EXPECT_DOUBLE_EQ(ds.baseline_population[110], 100.0);
}

TEST(Dataset, NegativePrevalenceNamesCell) {
    CsvFixture fx("negative");
    fx.append_rate("AUS,female,ihd,prevalence,0,49,2009,-0.01");
    try {
        fx.load();
        FAIL() << "expected a parse error";
    } catch (const ParseError &e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("rates.csv"), std::string::npos);
        EXPECT_NE(msg.find("ihd"), std::string::npos);
        EXPECT_NE(msg.find("prevalence"), std::string::npos);
        EXPECT_GT(e.row(), 0u);
    }
}

TEST(Dataset, ZeroPrevalenceWithDeathsIsRejected) {
    CsvFixture fx("zero_prev");
    std::string text = fx.rates_text;
    const std::string needle = "AUS,female,ihd,prevalence,50,110,2016,0.04";
    text.replace(text.find(needle), needle.size(), "AUS,female,ihd,prevalence,50,110,2016,0");
    write_file(fx.dir / "rates.csv", text);
    try {
        fx.load();
        FAIL() << "expected a validation error";
    } catch (const ValidationError &e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("ihd"), std::string::npos);
        EXPECT_NE(msg.find("age 50"), std::string::npos);
        EXPECT_NE(msg.find("2016"), std::string::npos);
    }
}

TEST(Dataset, DuplicateCellIsParseError) {
    CsvFixture fx("dup");
    fx.append_rate("AUS,female,ihd,incidence,0,49,2015,0.001");
    EXPECT_THROW(fx.load(), ParseError);
}

TEST(Dataset, MalformedRowIsParseError) {
    CsvFixture fx("malformed");
    fx.append_rate("AUS,female,ihd,incidence,0,49,2015");
    EXPECT_THROW(fx.load(), ParseError);
    fx.append_rate("AUS,female,ihd,incidence,0,49,2015,abc");
    EXPECT_THROW(fx.load(), ParseError);
}

TEST(Dataset, UnknownDiseaseRowsAreIgnored) {
    CsvFixture fx("unknown");
    fx.append_rate("AUS,female,asthma,incidence,0,49,2015,0.001");
    EXPECT_NO_THROW(fx.load());
}

TEST(Dataset, SelectionFiltersStrata) {
    CsvFixture fx("select");
    const auto none = load_datasets(InputPaths::in_directory(fx.dir), load_registry(fx.dir / "registry.csv"),
                                    fx.config, {}, Sex::male);
    EXPECT_TRUE(none.empty());
}

TEST(Dataset, MissingRemissionIsInformational) {
    RunConfig cfg;
    synthetic::StratumParams p;
    p.diseases = synthetic::demo_diseases();
    const auto ds = synthetic::make_stratum(p, cfg);
    const auto report = validate_dataset(ds);
    EXPECT_TRUE(report.run_ready());
    EXPECT_EQ(report.count(Severity::blocking), 0u);
    ASSERT_EQ(report.count(Severity::info), 4u);
    EXPECT_NE(report.entries.front().message.find("remission: to be solved"), std::string::npos);
}

TEST(Dataset, MissingYearsGiveOneGapPerCell) {
    RunConfig cfg;
    synthetic::StratumParams p;
    p.diseases = synthetic::demo_diseases();
    auto ds = synthetic::make_stratum(p, cfg);
    Surface &inc = ds.rates.at("ihd").at(Measure::incidence);
    for (int y = 2000; y <= 2005; ++y) {
        for (double &v : inc.year_slice(y)) {
            v = std::nan("");
        }
    }
    const auto report = validate_dataset(ds);
    EXPECT_FALSE(report.run_ready());
    EXPECT_EQ(report.count(Severity::blocking), 6u * kAgeCount);
}

TEST(Dataset, CanonicalRoundTripIsBitExact) {
    RunConfig cfg;
    std::vector<CountryDataset> strata;
    for (const Sex sex : {Sex::female, Sex::male}) {
        synthetic::StratumParams p;
        p.sex = sex;
        p.diseases = synthetic::demo_diseases();
        p.envelope = 1.5e9;
        p.population_per_age = sex == Sex::female ? 123456.789 : 98765.4321;
        strata.push_back(synthetic::make_stratum(p, cfg));
    }
    const auto dir = temp_dir("roundtrip");
    write_canonical(strata, dir);
    const auto back = load_datasets(InputPaths::in_directory(dir), load_registry(dir / "registry.csv"), cfg);
    ASSERT_EQ(back.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_TRUE(back[i].same_data(strata[i])) << "stratum " << i;
    }
}

TEST(Dataset, RegistryRejectsBadEntries) {
    DiseaseRegistry r;
    r.add({"a", "A", true, 0.1});
    EXPECT_THROW(r.add({"a", "again", true, 0.1}), ValidationError);
    EXPECT_THROW(r.add({"all", "reserved", true, 0.1}), ValidationError);
    EXPECT_THROW(r.add({"b", "B", true, 1.5}), ValidationError);
    EXPECT_EQ(r.find("a")->label, "A");
    EXPECT_EQ(r.find("zzz"), nullptr);
}

TEST(Dataset, PhaseCostsFillFromNearestAge) {
    CsvFixture fx("phase");
    write_file(fx.dir / "phase_costs.csv", "country,sex,disease,phase,age_lo,age_hi,cost_usd\n"
                                           "*,female,ihd,prevalent,30,110,100\n"
                                           "AUS,female,ihd,prevalent,60,110,250\n"
                                           "*,female,ihd,first_year,30,110,10\n"
                                           "*,female,ihd,last_year,30,110,5\n");
    const auto ds = fx.load().front();
    EXPECT_EQ(ds.phase_costs.cost("ihd", 45, Phase::prevalent), 100.0);
    EXPECT_EQ(ds.phase_costs.cost("ihd", 70, Phase::prevalent), 250.0);
    EXPECT_EQ(ds.phase_costs.cost("ihd", 10, Phase::prevalent), 100.0);
    EXPECT_FALSE(ds.notes.empty());
}

TEST(RunConfigTest, RejectsBadOrdering) {
    RunConfig c;
    c.target_year = 2041;
    EXPECT_THROW(c.validate(), ConfigError);
    c = RunConfig{};
    c.target_fraction = 1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    EXPECT_NO_THROW(RunConfig{}.validate());
}
