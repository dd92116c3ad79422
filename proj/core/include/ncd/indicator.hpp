#pragma once

#include "ncd/dataset.hpp"
#include "ncd/projection.hpp"

#include <map>
#include <span>
#include <string_view>

namespace ncd {

inline constexpr AgeBand kIndicatorBand{30, 69};

/// 1 - exp(-sum of single-year NCD4 mortality rates over ages 30..69).
double q40_30_from_rates(std::span<const double> rates_30_to_69);

/// Period 40q30 from modelled prevalence x case fatality of NCD4 diseases.
/// Throws ValidationError when the year is outside the projection or any age
/// in 30..69 has no cohort in that year.
double compute_40q30(const ProjectionResult &result, int year);

/// Period 40q30 from the observed surfaces (prevalence x case fatality).
double observed_40q30(const CountryDataset &ds, int year);

struct IndicatorSeries {
    std::map<int, double> q40_30;
    int baseline_year = 2015;
    int target_year = 2030;

    double baseline_value() const;
    double value(int year) const;
    /// 1 - q(target) / q(baseline).
    double reduction() const;
};

/// Observed years from the dataset, projection years from the result.
IndicatorSeries indicator_series(const CountryDataset &ds, const ProjectionResult &result, const RunConfig &config);

enum class Attainment { on_track, off_track };

std::string_view to_string(Attainment attainment);

struct AttainmentResult {
    Attainment status = Attainment::off_track;
    double reduction = 0.0;
    /// target_fraction - reduction; negative when the target is exceeded.
    double gap = 0.0;
};

AttainmentResult classify_attainment(double reduction, const RunConfig &config);
AttainmentResult classify_attainment(const IndicatorSeries &series, const RunConfig &config);

} // namespace ncd
