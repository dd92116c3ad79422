#include "ncd/trend.hpp"

#include "ncd/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ncd {

namespace {

// Rate equivalent of an annual probability of 1 - 1e-13.
constexpr double kMaxRate = 29.9336;
constexpr double kTinyPrevalence = 1e-15;

struct LogMoments {
    int n = 0;
    int floored = 0;
    double mean_year = 0.0;
    double mean_log = 0.0;
    double sxx = 0.0;
    double sxy = 0.0;
    double last_value = std::numeric_limits<double>::quiet_NaN();
};

// Sums are taken relative to the first usable observation so that constant
// series produce an exactly zero slope.
LogMoments log_moments(std::span<const int> years, std::span<const double> values, double floor) {
    LogMoments m;
    double x0 = 0.0;
    double y0 = 0.0;
    double sum_dx = 0.0;
    double sum_dy = 0.0;
    std::vector<std::pair<double, double>> points;
    points.reserve(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        const double v = values[k];
        if (std::isnan(v)) {
            continue;
        }
        if (v < floor) {
            ++m.floored;
        }
        const double x = static_cast<double>(years[k]);
        const double y = std::log(std::max(v, floor));
        if (m.n == 0) {
            x0 = x;
            y0 = y;
        }
        points.emplace_back(x - x0, y - y0);
        sum_dx += x - x0;
        sum_dy += y - y0;
        ++m.n;
        m.last_value = v;
    }
    if (m.n == 0) {
        return m;
    }
    const double dx_bar = sum_dx / m.n;
    const double dy_bar = sum_dy / m.n;
    for (const auto &[dx, dy] : points) {
        m.sxx += (dx - dx_bar) * (dx - dx_bar);
        m.sxy += (dx - dx_bar) * (dy - dy_bar);
    }
    m.mean_year = x0 + dx_bar;
    m.mean_log = y0 + dy_bar;
    return m;
}

struct FitGroup {
    int lo;
    int hi;
};

std::vector<FitGroup> fit_groups(const CountryDataset &ds) {
    std::vector<FitGroup> groups;
    std::vector<bool> covered(kAgeCount, false);
    for (std::size_t g = 0; g < ds.age_groups.size(); ++g) {
        const auto &ag = ds.age_groups[g];
        const int hi = g + 1 == ds.age_groups.size() ? kMaxAge : ag.hi;
        groups.push_back({ag.lo, hi});
        for (int a = ag.lo; a <= hi; ++a) {
            covered[static_cast<std::size_t>(a)] = true;
        }
    }
    for (int a = 0; a <= kMaxAge; ++a) {
        if (!covered[static_cast<std::size_t>(a)]) {
            groups.push_back({a, a});
        }
    }
    std::sort(groups.begin(), groups.end(), [](const FitGroup &x, const FitGroup &y) { return x.lo < y.lo; });
    return groups;
}

// Fits one APC per age group on the group-mean series, then anchors every
// single-year age on its own series with that slope.
RateTrajectory fit_surface(const std::string &disease, Measure measure, const Surface &observed,
                           const std::vector<FitGroup> &groups, int anchor_year, int horizon_year,
                           int hold_after_year, std::vector<FitDiagnostic> &diagnostics) {
    const YearRange obs = observed.years();
    RateTrajectory traj;
    traj.disease = disease;
    traj.measure = measure;
    traj.last_observed_year = obs.last;
    traj.values = Surface({obs.first, horizon_year});

    std::vector<int> years(static_cast<std::size_t>(obs.size()));
    for (int k = 0; k < obs.size(); ++k) {
        years[static_cast<std::size_t>(k)] = obs.first + k;
    }
    std::vector<double> series(years.size());

    for (const auto &g : groups) {
        for (std::size_t k = 0; k < years.size(); ++k) {
            const int year = years[k];
            const double first = observed(g.lo, year);
            double sum_dev = 0.0;
            int n = 0;
            bool missing = false;
            for (int a = g.lo; a <= g.hi; ++a) {
                const double v = observed(a, year);
                if (std::isnan(v)) {
                    missing = true;
                    break;
                }
                sum_dev += v - first;
                ++n;
            }
            series[k] = missing ? std::numeric_limits<double>::quiet_NaN() : first + sum_dev / n;
        }

        ApcFit group_fit;
        std::string note;
        try {
            group_fit = fit_apc(years, series, anchor_year);
            if (group_fit.fallback) {
                note = "more than half the observations floored; apc set to 0";
            }
        } catch (const FitError &e) {
            group_fit.apc = 0.0;
            group_fit.fallback = true;
            note = std::string("fit failed (") + e.what() + "); apc set to 0";
        }
        if (group_fit.fallback) {
            diagnostics.push_back({disease, measure, {g.lo, g.hi}, 0.0, note});
        }

        for (int a = g.lo; a <= g.hi; ++a) {
            std::vector<double> own(years.size());
            for (std::size_t k = 0; k < years.size(); ++k) {
                own[k] = observed(a, years[k]);
            }
            double anchor = 0.0;
            if (group_fit.fallback) {
                for (auto it = own.rbegin(); it != own.rend(); ++it) {
                    if (!std::isnan(*it)) {
                        anchor = *it;
                        break;
                    }
                }
            } else {
                const auto m = log_moments(years, own, FitOptions{}.floor);
                anchor = m.n == 0 ? 0.0 : std::exp(m.mean_log + group_fit.apc * (anchor_year - m.mean_year));
            }
            const ApcFit age_fit{group_fit.apc, anchor_year, anchor, group_fit.n_obs, 0.0, group_fit.fallback};
            for (int year = obs.first; year <= horizon_year; ++year) {
                double v = 0.0;
                if (year <= obs.last && group_fit.fallback) {
                    v = std::isnan(own[static_cast<std::size_t>(year - obs.first)])
                            ? anchor
                            : own[static_cast<std::size_t>(year - obs.first)];
                } else {
                    v = forecast_rate(age_fit, std::min(year, std::max(hold_after_year, anchor_year)));
                }
                traj.values(a, year) = v;
            }
        }
    }
    return traj;
}

} // namespace

ApcFit fit_apc(std::span<const int> years, std::span<const double> values, int anchor_year,
               const FitOptions &options) {
    if (years.size() != values.size()) {
        throw FitError("years and values differ in length");
    }
    const LogMoments m = log_moments(years, values, options.floor);
    if (m.n < 2) {
        throw FitError("fewer than 2 usable observations");
    }
    ApcFit fit;
    fit.anchor_year = anchor_year;
    fit.n_obs = m.n;
    if (static_cast<double>(m.floored) > options.max_floored_fraction * m.n) {
        fit.apc = 0.0;
        fit.anchor_value = m.last_value;
        fit.fallback = true;
        return fit;
    }
    if (m.sxx <= 0.0) {
        throw FitError("observations share a single year");
    }
    fit.apc = m.sxy / m.sxx;
    fit.anchor_value = std::exp(m.mean_log + fit.apc * (anchor_year - m.mean_year));
    if (m.n > 2) {
        double ssr = 0.0;
        for (std::size_t k = 0; k < values.size(); ++k) {
            if (std::isnan(values[k])) {
                continue;
            }
            const double fitted = m.mean_log + fit.apc * (years[k] - m.mean_year);
            const double r = std::log(std::max(values[k], options.floor)) - fitted;
            ssr += r * r;
        }
        fit.residual_sd = std::sqrt(ssr / (m.n - 2));
    }
    return fit;
}

double forecast_rate(const ApcFit &fit, int year) {
    return std::max(0.0, fit.anchor_value * std::exp(fit.apc * (year - fit.anchor_year)));
}

std::string_view to_string(Provenance provenance) {
    return provenance == Provenance::observed ? "observed" : "forecast";
}

double rate_to_probability(double rate) {
    return -std::expm1(-rate);
}

double probability_to_rate(double probability) {
    if (probability >= 1.0) {
        return kMaxRate;
    }
    return std::min(kMaxRate, -std::log1p(-probability));
}

DiseaseShares advance_disease(DiseaseShares s, double incidence_p, double fatality_p, double remission_p) {
    const double survivors = 1.0 - s.diseased * fatality_p;
    if (survivors <= 0.0) {
        return {1.0, 0.0};
    }
    const double diseased = s.diseased * (1.0 - fatality_p - remission_p) + s.susceptible * incidence_p;
    const double susceptible = s.susceptible * (1.0 - incidence_p) + s.diseased * remission_p;
    return {susceptible / survivors, diseased / survivors};
}

RemissionSolution solve_remission(const Surface &incidence, const Surface &prevalence, const Surface &case_fatality,
                                  const std::string &disease) {
    const YearRange years = prevalence.years();
    if (incidence.years() != years || case_fatality.years() != years) {
        throw ValidationError("solve_remission: surfaces do not share a grid");
    }
    RemissionSolution out{Surface(years), Surface(years), Surface(years), 0};

    for (int year = years.first; year < years.last; ++year) {
        for (int age = 0; age < kMaxAge; ++age) {
            const double c = prevalence(age, year);
            const double s = 1.0 - c;
            const double target = prevalence(age + 1, year + 1);
            const double i = rate_to_probability(incidence(age, year));
            const double f = rate_to_probability(case_fatality(age, year));
            if (c >= 1.0 && i > 0.0) {
                throw InconsistencyError("prevalence is 1 with positive incidence at " + disease + " age " +
                                         std::to_string(age) + " year " + std::to_string(year));
            }
            auto predicted = [&](double r) { return (c * (1.0 - f - r) + s * i) / (1.0 - c * f); };

            double r = 0.0;
            double residual = 0.0;
            if (c < kTinyPrevalence) {
                residual = std::abs(target - predicted(0.0));
            } else {
                r = (c * (1.0 - f) + s * i - target * (1.0 - c * f)) / c;
                if (r < 0.0) {
                    r = 0.0;
                    residual = target - predicted(0.0);
                } else if (r > 1.0 - f) {
                    r = 1.0 - f;
                    residual = predicted(r) - target;
                }
            }
            out.remission(age, year) = probability_to_rate(r);
            out.residual(age, year) = std::max(residual, 0.0);
            if (residual > 0.0) {
                out.clamped(age, year) = 1.0;
                ++out.clamped_cells;
            }
        }
        out.remission(kMaxAge, year) = out.remission(kMaxAge - 1, year);
        out.residual(kMaxAge, year) = out.residual(kMaxAge - 1, year);
        out.clamped(kMaxAge, year) = out.clamped(kMaxAge - 1, year);
    }
    for (int age = 0; age <= kMaxAge; ++age) {
        out.remission(age, years.last) = out.remission(age, years.last - 1);
        out.residual(age, years.last) = out.residual(age, years.last - 1);
        out.clamped(age, years.last) = out.clamped(age, years.last - 1);
    }
    return out;
}

const DiseaseTrajectories &BauTrajectories::disease(const std::string &code) const {
    for (const auto &d : diseases) {
        if (d.disease == code) {
            return d;
        }
    }
    throw ValidationError("no trajectories for disease " + code);
}

BauTrajectories build_bau(const CountryDataset &ds, const RunConfig &config) {
    config.validate();
    const auto groups = fit_groups(ds);
    const int anchor = config.data_last_year;
    const int horizon = config.horizon_year;

    BauTrajectories bau;
    for (const auto &d : ds.registry) {
        DiseaseTrajectories dt;
        dt.disease = d.code;
        dt.ncd4_member = d.ncd4_member;
        const Surface &inc = ds.series(d.code, Measure::incidence);
        const Surface &cfr = ds.series(d.code, Measure::case_fatality);
        dt.incidence = fit_surface(d.code, Measure::incidence, inc, groups, anchor, horizon, horizon, bau.diagnostics);
        dt.case_fatality =
            fit_surface(d.code, Measure::case_fatality, cfr, groups, anchor, horizon, horizon, bau.diagnostics);
        if (ds.has_series(d.code, Measure::remission)) {
            dt.remission = fit_surface(d.code, Measure::remission, ds.series(d.code, Measure::remission), groups,
                                       anchor, horizon, horizon, bau.diagnostics);
        } else {
            const auto solved = solve_remission(inc, ds.series(d.code, Measure::prevalence), cfr, d.code);
            bau.remission_clamped_cells += solved.clamped_cells;
            dt.remission =
                fit_surface(d.code, Measure::remission, solved.remission, groups, anchor, horizon, horizon, bau.diagnostics);
        }
        bau.diseases.push_back(std::move(dt));
    }
    bau.all_cause = fit_surface(std::string(kAllCauseCode), Measure::all_cause_mortality, ds.all_cause, groups, anchor,
                                horizon, config.target_year, bau.diagnostics);
    return bau;
}

} // namespace ncd
