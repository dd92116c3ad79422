#include "ncd/dataset.hpp"

#include "csv.hpp"
#include "ncd/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

namespace ncd {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
constexpr double kMinPrevalenceForCfr = 1e-9;

constexpr std::array<Measure, 7> kMeasures = {
    Measure::incidence,  Measure::prevalence,          Measure::cause_mortality, Measure::case_fatality,
    Measure::remission,  Measure::all_cause_mortality, Measure::yld_rate,
};

struct RateRow {
    std::string disease;
    Measure measure;
    AgeGroup group;
    int year;
    double value;
    std::size_t row;
};

struct PhaseRow {
    std::string disease;
    Phase phase;
    AgeGroup group;
    double cost;
    bool wildcard;
};

struct StratumRows {
    std::vector<RateRow> rates;
    std::vector<std::pair<AgeGroup, double>> population;
    std::vector<PhaseRow> phases;
};

using StratumKey = std::pair<std::string, Sex>;

bool selected(const std::vector<std::string> &countries, std::optional<Sex> sex, const std::string &country,
              Sex row_sex) {
    if (sex && *sex != row_sex) {
        return false;
    }
    return countries.empty() || std::find(countries.begin(), countries.end(), country) != countries.end();
}

AgeGroup read_group(const csv::Reader &reader) {
    const AgeGroup group{reader.integer("age_lo"), reader.integer("age_hi")};
    if (group.lo < 0 || group.hi < group.lo || group.hi > kMaxAge) {
        reader.fail("invalid age group [" + std::to_string(group.lo) + ", " + std::to_string(group.hi) + "]");
    }
    return group;
}

Sex read_sex(const csv::Reader &reader) {
    try {
        return parse_sex(reader.field("sex"));
    } catch (const ValidationError &e) {
        reader.fail(e.what());
    }
}

bool parse_flag(std::string_view text) {
    if (text == "1" || text == "true" || text == "TRUE" || text == "yes") {
        return true;
    }
    if (text == "0" || text == "false" || text == "FALSE" || text == "no") {
        return false;
    }
    throw ValidationError("not a boolean: '" + std::string(text) + "'");
}

std::string cell_name(const std::string &disease, Measure measure, int age, int year) {
    std::ostringstream os;
    os << disease << "/" << to_string(measure) << " age " << age << " year " << year;
    return os.str();
}

// Groups must not overlap; the last one extends to the terminal age.
std::vector<AgeGroup> collect_groups(const std::vector<RateRow> &rows, const std::string &file) {
    std::set<std::pair<int, int>> distinct;
    for (const auto &r : rows) {
        distinct.emplace(r.group.lo, r.group.hi);
    }
    std::vector<AgeGroup> groups;
    for (const auto &[lo, hi] : distinct) {
        if (!groups.empty() && lo <= groups.back().hi) {
            throw ParseError(file, 0,
                             "overlapping age groups [" + std::to_string(groups.back().lo) + ", " +
                                 std::to_string(groups.back().hi) + "] and [" + std::to_string(lo) + ", " +
                                 std::to_string(hi) + "]");
        }
        groups.push_back({lo, hi});
    }
    return groups;
}

int effective_hi(const AgeGroup &group, const std::vector<AgeGroup> &groups) {
    return (!groups.empty() && group == groups.back()) ? kMaxAge : group.hi;
}

CountryDataset assemble(const StratumKey &key, StratumRows &rows, const DiseaseRegistry &registry,
                        const RunConfig &config, const InputPaths &paths,
                        const std::map<std::string, std::pair<int, double>> &envelopes) {
    CountryDataset ds;
    ds.country = key.first;
    ds.sex = key.second;
    ds.registry = registry;
    ds.observed_years = config.observed_years();
    ds.age_groups = collect_groups(rows.rates, paths.rates.string());
    ds.all_cause = Surface(ds.observed_years, kMissing);

    const std::string rates_file = paths.rates.string();
    for (const auto &r : rows.rates) {
        Surface *target = nullptr;
        if (r.measure == Measure::all_cause_mortality) {
            target = &ds.all_cause;
        } else {
            auto &series = ds.rates[r.disease];
            auto it = series.find(r.measure);
            if (it == series.end()) {
                it = series.emplace(r.measure, Surface(ds.observed_years, kMissing)).first;
            }
            target = &it->second;
        }
        const int hi = effective_hi(r.group, ds.age_groups);
        for (int age = r.group.lo; age <= hi; ++age) {
            double &cell = (*target)(age, r.year);
            if (!std::isnan(cell)) {
                throw ParseError(rates_file, r.row, "duplicate value for " + cell_name(r.disease, r.measure, age, r.year));
            }
            cell = r.value;
        }
    }

    for (const auto &[group, count] : rows.population) {
        const double per_age = count / static_cast<double>(group.hi - group.lo + 1);
        for (int age = group.lo; age <= group.hi; ++age) {
            ds.baseline_population[static_cast<std::size_t>(age)] += per_age;
        }
    }

    if (const auto it = envelopes.find(ds.country); it != envelopes.end()) {
        ds.envelope_year = it->second.first;
        ds.expenditure_envelope = it->second.second * config.cpi_factor * config.ppp_factor;
    }

    // Country-specific phase rows take precedence over wildcard rows. Ages a
    // disease/phase does not cover take the cost of the nearest covered age.
    const double money = config.cpi_factor * config.ppp_factor;
    std::map<std::pair<std::string, Phase>, std::vector<double>> phase_values;
    for (const bool wildcard_pass : {true, false}) {
        for (const auto &p : rows.phases) {
            if (p.wildcard != wildcard_pass) {
                continue;
            }
            auto &ages = phase_values[{p.disease, p.phase}];
            ages.resize(kAgeCount, kMissing);
            for (int age = p.group.lo; age <= p.group.hi; ++age) {
                ages[static_cast<std::size_t>(age)] = p.cost * money;
            }
        }
    }
    for (const auto &[key, ages] : phase_values) {
        for (int age = 0; age <= kMaxAge; ++age) {
            double cost = ages[static_cast<std::size_t>(age)];
            if (std::isnan(cost)) {
                for (int d = 1; d <= kMaxAge && std::isnan(cost); ++d) {
                    for (const int near : {age - d, age + d}) {
                        if (near >= 0 && near <= kMaxAge && !std::isnan(ages[static_cast<std::size_t>(near)])) {
                            cost = ages[static_cast<std::size_t>(near)];
                            break;
                        }
                    }
                }
                ds.notes.push_back({key.first, age, 0,
                                    std::string(to_string(key.second)) + " cost filled from nearest covered age"});
            }
            ds.phase_costs.set(key.first, age, key.second, cost);
        }
    }

    // Prevalence of exactly zero cannot carry cause-specific deaths.
    for (const auto &[code, series] : ds.rates) {
        const auto p = series.find(Measure::prevalence);
        const auto m = series.find(Measure::cause_mortality);
        if (p == series.end() || m == series.end()) {
            continue;
        }
        for (int year = ds.observed_years.first; year <= ds.observed_years.last; ++year) {
            for (int age = 0; age <= kMaxAge; ++age) {
                if (p->second(age, year) == 0.0 && m->second(age, year) > 0.0) {
                    throw ValidationError("prevalence is 0 but cause_mortality is " +
                                          csv::format_number(m->second(age, year)) + " at " + code + " age " +
                                          std::to_string(age) + " year " + std::to_string(year));
                }
            }
        }
    }

    derive_case_fatality(ds);
    return ds;
}

} // namespace

std::string_view to_string(Measure measure) {
    switch (measure) {
    case Measure::incidence:
        return "incidence";
    case Measure::prevalence:
        return "prevalence";
    case Measure::cause_mortality:
        return "cause_mortality";
    case Measure::case_fatality:
        return "case_fatality";
    case Measure::remission:
        return "remission";
    case Measure::all_cause_mortality:
        return "all_cause_mortality";
    case Measure::yld_rate:
        return "yld_rate";
    }
    return "?";
}

Measure parse_measure(std::string_view text) {
    for (const Measure m : kMeasures) {
        if (text == to_string(m)) {
            return m;
        }
    }
    throw ValidationError("unknown measure '" + std::string(text) + "'");
}

DiseaseRegistry::DiseaseRegistry(std::vector<DiseaseId> diseases) {
    for (auto &d : diseases) {
        add(std::move(d));
    }
}

void DiseaseRegistry::add(DiseaseId disease) {
    if (disease.code.empty() || disease.code == kAllCauseCode) {
        throw ValidationError("invalid disease code '" + disease.code + "'");
    }
    if (find(disease.code) != nullptr) {
        throw ValidationError("duplicate disease code '" + disease.code + "'");
    }
    if (!(disease.disability_weight >= 0.0 && disease.disability_weight <= 1.0)) {
        throw ValidationError("disability weight outside [0,1] for '" + disease.code + "'");
    }
    diseases_.push_back(std::move(disease));
}

const DiseaseId *DiseaseRegistry::find(std::string_view code) const {
    const auto it = std::find_if(diseases_.begin(), diseases_.end(), [&](const DiseaseId &d) { return d.code == code; });
    return it == diseases_.end() ? nullptr : &*it;
}

void RunConfig::validate() const {
    if (!(data_first_year < data_last_year)) {
        throw ConfigError("data_first_year must precede data_last_year");
    }
    if (!(indicator_baseline_year < intervention_start && intervention_start <= target_year &&
          target_year < horizon_year)) {
        throw ConfigError("require indicator_baseline_year < intervention_start <= target_year < horizon_year");
    }
    if (!observed_years().contains(indicator_baseline_year)) {
        throw ConfigError("indicator_baseline_year must lie in the observed window");
    }
    if (intervention_start != data_last_year + 1) {
        throw ConfigError("intervention_start must be the year after data_last_year");
    }
    if (!(target_fraction > 0.0 && target_fraction < 1.0)) {
        throw ConfigError("target_fraction must lie in (0, 1)");
    }
    if (!(discount_rate >= 0.0) || !(cpi_factor > 0.0) || !(ppp_factor > 0.0)) {
        throw ConfigError("discount_rate must be >= 0 and currency factors > 0");
    }
    for (const auto &p : reporting_periods) {
        if (p.empty() || p.first < intervention_start || p.last > horizon_year) {
            throw ConfigError("reporting period outside the projection window");
        }
    }
    if (expenditure_min_age < 0 || expenditure_min_age > kMaxAge) {
        throw ConfigError("expenditure_min_age out of range");
    }
}

bool CountryDataset::has_series(const std::string &disease, Measure measure) const {
    const auto it = rates.find(disease);
    return it != rates.end() && it->second.contains(measure);
}

const Surface &CountryDataset::series(const std::string &disease, Measure measure) const {
    const auto it = rates.find(disease);
    if (it == rates.end() || !it->second.contains(measure)) {
        throw ValidationError("no " + std::string(to_string(measure)) + " series for " + disease);
    }
    return it->second.at(measure);
}

bool CountryDataset::same_data(const CountryDataset &o) const {
    return country == o.country && sex == o.sex && registry == o.registry && observed_years == o.observed_years &&
           age_groups == o.age_groups && baseline_population == o.baseline_population && rates == o.rates &&
           all_cause == o.all_cause && expenditure_envelope == o.expenditure_envelope &&
           envelope_year == o.envelope_year && phase_costs == o.phase_costs;
}

InputPaths InputPaths::in_directory(const std::filesystem::path &dir) {
    InputPaths p;
    p.rates = dir / "rates.csv";
    p.population = dir / "population.csv";
    p.registry = dir / "registry.csv";
    if (std::filesystem::exists(dir / "envelope.csv")) {
        p.envelope = dir / "envelope.csv";
    }
    if (std::filesystem::exists(dir / "phase_costs.csv")) {
        p.phase_costs = dir / "phase_costs.csv";
    }
    return p;
}

DiseaseRegistry load_registry(const std::filesystem::path &path) {
    csv::Reader reader(path, {"code", "label", "ncd4_member", "disability_weight"});
    DiseaseRegistry registry;
    while (reader.next()) {
        try {
            registry.add({std::string(reader.field("code")), std::string(reader.field("label")),
                          parse_flag(reader.field("ncd4_member")), csv::parse_double(reader.field("disability_weight"))});
        } catch (const ValidationError &e) {
            reader.fail(e.what());
        }
    }
    if (registry.empty()) {
        throw ParseError(path.string(), 0, "registry is empty");
    }
    return registry;
}

std::vector<CountryDataset> load_datasets(const InputPaths &paths, const DiseaseRegistry &registry,
                                          const RunConfig &config, const std::vector<std::string> &countries,
                                          std::optional<Sex> sex) {
    config.validate();
    const YearRange observed = config.observed_years();
    std::map<StratumKey, StratumRows> strata;

    {
        csv::Reader reader(paths.rates, {"country", "sex", "disease", "measure", "age_lo", "age_hi", "year", "value"});
        while (reader.next()) {
            const std::string country(reader.field("country"));
            const Sex row_sex = read_sex(reader);
            if (!selected(countries, sex, country, row_sex)) {
                continue;
            }
            Measure measure;
            try {
                measure = parse_measure(reader.field("measure"));
            } catch (const ValidationError &e) {
                reader.fail(e.what());
            }
            std::string disease(reader.field("disease"));
            if ((disease == kAllCauseCode) != (measure == Measure::all_cause_mortality)) {
                reader.fail("all_cause_mortality rows must use disease '" + std::string(kAllCauseCode) + "'");
            }
            if (measure != Measure::all_cause_mortality && registry.find(disease) == nullptr) {
                continue; // not modelled
            }
            const AgeGroup group = read_group(reader);
            const int year = reader.integer("year");
            const double value = reader.number("value");
            if (!(value >= 0.0)) {
                reader.fail("negative value " + csv::format_number(value) + " for " +
                            cell_name(disease, measure, group.lo, year));
            }
            if ((measure == Measure::prevalence || measure == Measure::yld_rate) && value > 1.0) {
                reader.fail("proportion above 1 for " + cell_name(disease, measure, group.lo, year));
            }
            if (!observed.contains(year)) {
                continue;
            }
            strata[{country, row_sex}].rates.push_back(
                {std::move(disease), measure, group, year, value, reader.row()});
        }
    }

    {
        csv::Reader reader(paths.population, {"country", "sex", "age_lo", "age_hi", "year", "count"});
        while (reader.next()) {
            const std::string country(reader.field("country"));
            const Sex row_sex = read_sex(reader);
            if (!selected(countries, sex, country, row_sex) || reader.integer("year") != config.data_last_year) {
                continue;
            }
            const AgeGroup group = read_group(reader);
            const double count = reader.number("count");
            if (!(count >= 0.0)) {
                reader.fail("negative population count");
            }
            strata[{country, row_sex}].population.emplace_back(group, count);
        }
    }

    std::map<std::string, std::pair<int, double>> envelopes;
    if (paths.envelope) {
        csv::Reader reader(*paths.envelope, {"country", "year", "total_expenditure_usd"});
        while (reader.next()) {
            const std::string country(reader.field("country"));
            const int year = reader.integer("year");
            const double total = reader.number("total_expenditure_usd");
            if (!(total > 0.0)) {
                reader.fail("expenditure envelope must be positive");
            }
            auto [it, inserted] = envelopes.try_emplace(country, year, total);
            if (!inserted && year > it->second.first) {
                it->second = {year, total};
            }
        }
    }

    if (paths.phase_costs) {
        csv::Reader reader(*paths.phase_costs, {"country", "sex", "disease", "phase", "age_lo", "age_hi", "cost_usd"});
        std::vector<std::pair<Sex, PhaseRow>> wildcard_rows;
        while (reader.next()) {
            const std::string country(reader.field("country"));
            const Sex row_sex = read_sex(reader);
            PhaseRow row;
            row.disease = std::string(reader.field("disease"));
            try {
                row.phase = parse_phase(reader.field("phase"));
            } catch (const ValidationError &e) {
                reader.fail(e.what());
            }
            row.group = read_group(reader);
            row.cost = reader.number("cost_usd");
            if (!(row.cost >= 0.0)) {
                reader.fail("negative phase cost");
            }
            row.wildcard = country == "*";
            if (row.wildcard) {
                wildcard_rows.emplace_back(row_sex, std::move(row));
            } else if (selected(countries, sex, country, row_sex)) {
                strata[{country, row_sex}].phases.push_back(std::move(row));
            }
        }
        for (auto &[key, rows] : strata) {
            for (const auto &[row_sex, row] : wildcard_rows) {
                if (row_sex == key.second) {
                    rows.phases.push_back(row);
                }
            }
        }
    }

    std::vector<CountryDataset> out;
    out.reserve(strata.size());
    for (auto &[key, rows] : strata) {
        if (rows.rates.empty()) {
            throw ValidationError("no rate rows for " + key.first + "/" + std::string(to_string(key.second)));
        }
        out.push_back(assemble(key, rows, registry, config, paths, envelopes));
    }
    return out;
}

CountryDataset load_country_dataset(const InputPaths &paths, const DiseaseRegistry &registry,
                                    const RunConfig &config, const std::string &country, Sex sex) {
    auto all = load_datasets(paths, registry, config, {country}, sex);
    if (all.empty()) {
        throw ValidationError("no data for " + country + "/" + std::string(to_string(sex)));
    }
    return std::move(all.front());
}

void derive_case_fatality(CountryDataset &ds) {
    for (auto &[code, series] : ds.rates) {
        if (series.contains(Measure::case_fatality)) {
            continue;
        }
        const auto p = series.find(Measure::prevalence);
        const auto m = series.find(Measure::cause_mortality);
        if (p == series.end() || m == series.end()) {
            continue;
        }
        Surface cfr(ds.observed_years, kMissing);
        for (int year = ds.observed_years.first; year <= ds.observed_years.last; ++year) {
            for (int age = 0; age <= kMaxAge; ++age) {
                const double prev = p->second(age, year);
                const double mort = m->second(age, year);
                if (std::isnan(prev) || std::isnan(mort)) {
                    continue;
                }
                if (prev < kMinPrevalenceForCfr) {
                    cfr(age, year) = 0.0;
                    if (mort > 0.0) {
                        ds.notes.push_back({code, age, year, "prevalence below 1e-9; case fatality set to 0"});
                    }
                } else {
                    cfr(age, year) = mort / prev;
                }
            }
        }
        series.emplace(Measure::case_fatality, std::move(cfr));
    }
}

bool DiagnosticsReport::run_ready() const {
    return count(Severity::blocking) == 0;
}

std::size_t DiagnosticsReport::count(Severity severity) const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [&](const Diagnostic &d) { return d.severity == severity; }));
}

DiagnosticsReport validate_dataset(const CountryDataset &ds) {
    DiagnosticsReport report;
    auto blocking = [&](std::string msg) { report.entries.push_back({Severity::blocking, std::move(msg)}); };

    auto check_surface = [&](const std::string &disease, Measure measure, const Surface &s) {
        for (int year = ds.observed_years.first; year <= ds.observed_years.last; ++year) {
            for (int age = 0; age <= kMaxAge; ++age) {
                const double v = s(age, year);
                if (std::isnan(v)) {
                    blocking("missing " + cell_name(disease, measure, age, year));
                } else if (v < 0.0) {
                    blocking("negative " + cell_name(disease, measure, age, year));
                } else if (measure == Measure::prevalence && v > 1.0) {
                    blocking("prevalence above 1 at " + cell_name(disease, measure, age, year));
                }
            }
        }
    };

    for (const auto &disease : ds.registry) {
        for (const Measure m : {Measure::incidence, Measure::prevalence, Measure::cause_mortality}) {
            if (!ds.has_series(disease.code, m)) {
                blocking(disease.code + ": missing " + std::string(to_string(m)) + " series");
            }
        }
        if (!ds.has_series(disease.code, Measure::remission)) {
            report.entries.push_back({Severity::info, disease.code + ": remission: to be solved"});
        }
        if (const auto it = ds.rates.find(disease.code); it != ds.rates.end()) {
            for (const auto &[measure, surface] : it->second) {
                check_surface(disease.code, measure, surface);
            }
        }
        if (!ds.phase_costs.empty() && !ds.phase_costs.covers(disease.code)) {
            blocking(disease.code + ": no phase costs");
        }
    }
    if (ds.all_cause.empty()) {
        blocking("missing all_cause_mortality series");
    } else {
        check_surface(std::string(kAllCauseCode), Measure::all_cause_mortality, ds.all_cause);
    }
    for (int age = 0; age <= kMaxAge; ++age) {
        if (!(ds.baseline_population[static_cast<std::size_t>(age)] >= 0.0)) {
            blocking("negative baseline population at age " + std::to_string(age));
        }
    }
    return report;
}

void write_canonical(const std::vector<CountryDataset> &strata, const std::filesystem::path &dir) {
    std::filesystem::create_directories(dir);
    std::ofstream rates(dir / "rates.csv");
    std::ofstream population(dir / "population.csv");
    std::ofstream envelope(dir / "envelope.csv");
    std::ofstream phases(dir / "phase_costs.csv");
    std::ofstream registry(dir / "registry.csv");
    rates << "country,sex,disease,measure,age_lo,age_hi,year,value\n";
    population << "country,sex,age_lo,age_hi,year,count\n";
    envelope << "country,year,total_expenditure_usd\n";
    phases << "country,sex,disease,phase,age_lo,age_hi,cost_usd\n";
    registry << "code,label,ncd4_member,disability_weight\n";

    if (!strata.empty()) {
        for (const auto &d : strata.front().registry) {
            registry << csv::escape(d.code) << ',' << csv::escape(d.label) << ',' << (d.ncd4_member ? 1 : 0) << ','
                     << csv::format_number(d.disability_weight) << '\n';
        }
    }

    std::set<std::string> envelopes_written;
    for (const auto &ds : strata) {
        const std::string prefix = csv::escape(ds.country) + "," + std::string(to_string(ds.sex)) + ",";
        auto write_surface = [&](const std::string &disease, Measure measure, const Surface &s) {
            for (int year = ds.observed_years.first; year <= ds.observed_years.last; ++year) {
                for (const auto &g : ds.age_groups) {
                    const double v = s(g.lo, year);
                    if (std::isnan(v)) {
                        continue;
                    }
                    rates << prefix << csv::escape(disease) << ',' << to_string(measure) << ',' << g.lo << ','
                          << g.hi << ',' << year << ',' << csv::format_number(v) << '\n';
                }
            }
        };
        for (const auto &[code, series] : ds.rates) {
            for (const auto &[measure, surface] : series) {
                write_surface(code, measure, surface);
            }
        }
        if (!ds.all_cause.empty()) {
            write_surface(std::string(kAllCauseCode), Measure::all_cause_mortality, ds.all_cause);
        }
        for (int age = 0; age <= kMaxAge; ++age) {
            population << prefix << age << ',' << age << ',' << ds.observed_years.last << ','
                       << csv::format_number(ds.baseline_population[static_cast<std::size_t>(age)]) << '\n';
        }
        if (ds.expenditure_envelope && envelopes_written.insert(ds.country).second) {
            envelope << csv::escape(ds.country) << ',' << ds.envelope_year << ','
                     << csv::format_number(*ds.expenditure_envelope) << '\n';
        }
        for (const auto &[code, table] : ds.phase_costs.entries()) {
            for (const Phase phase : kPhases) {
                for (int age = 0; age <= kMaxAge; ++age) {
                    phases << prefix << csv::escape(code) << ',' << to_string(phase) << ',' << age << ',' << age
                           << ',' << csv::format_number(table[static_cast<std::size_t>(phase)][static_cast<std::size_t>(age)])
                           << '\n';
                }
            }
        }
    }
}

} // namespace ncd
