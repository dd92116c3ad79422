#pragma once

#include "ncd/grid.hpp"
#include "ncd/phase_cost_table.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ncd {

enum class Measure {
    incidence,
    prevalence,
    cause_mortality,
    case_fatality,
    remission,
    all_cause_mortality,
    yld_rate,
};

std::string_view to_string(Measure measure);
Measure parse_measure(std::string_view text);

/// Disease code used in rates.csv for all-cause rows.
inline constexpr std::string_view kAllCauseCode = "all";

struct DiseaseId {
    std::string code;
    std::string label;
    bool ncd4_member = true;
    double disability_weight = 0.0;

    bool operator==(const DiseaseId &) const = default;
};

/// The configurable set of modelled diseases, kept in insertion order.
class DiseaseRegistry {
  public:
    DiseaseRegistry() = default;
    explicit DiseaseRegistry(std::vector<DiseaseId> diseases);

    /// Throws ValidationError on a duplicate or reserved code.
    void add(DiseaseId disease);

    const DiseaseId *find(std::string_view code) const;
    std::size_t size() const noexcept { return diseases_.size(); }
    bool empty() const noexcept { return diseases_.empty(); }
    const DiseaseId &operator[](std::size_t i) const { return diseases_[i]; }
    auto begin() const noexcept { return diseases_.begin(); }
    auto end() const noexcept { return diseases_.end(); }

    bool operator==(const DiseaseRegistry &) const = default;

  private:
    std::vector<DiseaseId> diseases_;
};

enum class MorbiditySource { disability_weight, yld_rate };

struct RunConfig {
    int data_first_year = 1990;
    int data_last_year = 2021;
    int intervention_start = 2022;
    int target_year = 2030;
    int horizon_year = 2040;
    int indicator_baseline_year = 2015;
    double target_fraction = 1.0 / 3.0;
    std::vector<YearRange> reporting_periods = {{2022, 2030}, {2031, 2040}};
    double discount_rate = 0.0;
    /// Currency adjusters applied to costs and envelopes at load.
    double cpi_factor = 1.0;
    double ppp_factor = 1.0;
    /// Headline expenditure covers ages >= this.
    int expenditure_min_age = 30;
    MorbiditySource morbidity_source = MorbiditySource::disability_weight;

    YearRange observed_years() const { return {data_first_year, data_last_year}; }
    YearRange projection_years() const { return {intervention_start, horizon_year}; }

    /// Throws ConfigError when the year ordering or target fraction is invalid.
    void validate() const;
};

struct AgeGroup {
    int lo = 0;
    int hi = 0;
    bool operator==(const AgeGroup &) const = default;
};

/// Observed surfaces for one disease, keyed by measure. Missing cells are NaN.
using MeasureSeries = std::map<Measure, Surface>;

struct LoadNote {
    std::string disease;
    int age = 0;
    int year = 0;
    std::string message;
};

struct CountryDataset {
    std::string country;
    Sex sex = Sex::female;
    DiseaseRegistry registry;
    YearRange observed_years{1990, 2021};
    /// Input age groups for rates (constant within group after expansion).
    std::vector<AgeGroup> age_groups;
    std::vector<double> baseline_population = std::vector<double>(kAgeCount, 0.0);
    std::map<std::string, MeasureSeries> rates;
    Surface all_cause;
    std::optional<double> expenditure_envelope;
    int envelope_year = 0;
    PhaseCostTable phase_costs;
    std::vector<LoadNote> notes;

    bool has_series(const std::string &disease, Measure measure) const;
    const Surface &series(const std::string &disease, Measure measure) const;

    /// Bit-exact comparison of everything except load notes.
    bool same_data(const CountryDataset &other) const;
};

struct InputPaths {
    std::filesystem::path rates;
    std::filesystem::path population;
    std::filesystem::path registry;
    std::optional<std::filesystem::path> envelope;
    std::optional<std::filesystem::path> phase_costs;

    /// Default file names under a data directory; optional files only if present.
    static InputPaths in_directory(const std::filesystem::path &dir);
};

DiseaseRegistry load_registry(const std::filesystem::path &path);

/// Loads every (country, sex) stratum present in the files, filtered by the
/// optional selections. Strata come back sorted by country then sex.
std::vector<CountryDataset> load_datasets(const InputPaths &paths, const DiseaseRegistry &registry,
                                          const RunConfig &config,
                                          const std::vector<std::string> &countries = {},
                                          std::optional<Sex> sex = std::nullopt);

CountryDataset load_country_dataset(const InputPaths &paths, const DiseaseRegistry &registry,
                                    const RunConfig &config, const std::string &country, Sex sex);

/// Derives case fatality as cause_mortality / prevalence wherever no observed
/// case_fatality series exists. Cells with prevalence below 1e-9 get 0 and a note.
void derive_case_fatality(CountryDataset &ds);

enum class Severity { info, blocking };

struct Diagnostic {
    Severity severity = Severity::blocking;
    std::string message;
};

struct DiagnosticsReport {
    std::vector<Diagnostic> entries;

    bool run_ready() const;
    std::size_t count(Severity severity) const;
};

DiagnosticsReport validate_dataset(const CountryDataset &ds);

/// Writes the canonical single-year CSV set (rates, population, registry,
/// envelope, phase_costs) for the given strata into `dir`. Money is written
/// already adjusted, so reload with cpi/ppp factors of 1.
void write_canonical(const std::vector<CountryDataset> &strata, const std::filesystem::path &dir);

} // namespace ncd
