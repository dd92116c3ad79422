#include "ncd/scenario.hpp"

#include "ncd/error.hpp"
#include "ncd/projection.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace ncd {

namespace {

// Slack for the monotonicity check; reductions are O(0.1).
constexpr double kMonotoneSlack = 1e-12;

void scale_forecast(RateTrajectory &traj, double log_slope_shift, const ScenarioSpec &spec) {
    if (log_slope_shift == 0.0) {
        return;
    }
    const YearRange years = traj.values.years();
    for (int y = spec.accumulate_from + 1; y <= years.last; ++y) {
        const int accumulated = std::min(y, spec.active_last) - spec.accumulate_from;
        const double factor = std::exp(log_slope_shift * accumulated);
        for (double &v : traj.values.year_slice(y)) {
            v *= factor;
        }
    }
}

struct Channels {
    double incidence = 0.0;
    double case_fatality = 0.0;
    double remission = 0.0;
};

Channels channels(const ScenarioSpec &spec) {
    switch (spec.kind) {
    case ScenarioKind::bau:
        return {};
    case ScenarioKind::prevention:
        return {-spec.delta, 0.0, 0.0};
    case ScenarioKind::treatment_default:
        return {0.0, -spec.delta, spec.delta};
    case ScenarioKind::treatment_cfr_only:
        return {0.0, -spec.delta, 0.0};
    case ScenarioKind::treatment_remission_only:
        return {0.0, 0.0, spec.delta};
    case ScenarioKind::blended:
        return {-spec.blend_fraction * spec.prevention_delta, -spec.blend_fraction * spec.treatment_delta,
                spec.blend_fraction * spec.treatment_delta};
    }
    return {};
}

double baseline_q(const CountryDataset &ds, const RunConfig &config) {
    const double q = observed_40q30(ds, config.indicator_baseline_year);
    if (!(q > 0.0)) {
        throw ValidationError("40q30 in the indicator baseline year is zero");
    }
    return q;
}

double reduction_with_baseline(const CountryDataset &ds, const BauTrajectories &bau, const ScenarioSpec &spec,
                               const RunConfig &config, double q_base) {
    const ProjectionOptions options{false, config.target_year};
    if (spec.kind == ScenarioKind::bau) {
        return 1.0 - compute_40q30(run_projection(ds, bau, config, options), config.target_year) / q_base;
    }
    const BauTrajectories scenario = apply_acceleration(bau, spec);
    const auto result = run_projection(ds, bau, scenario, config, options);
    return 1.0 - compute_40q30(result, config.target_year) / q_base;
}

AccelerationSolution bisect(const std::function<double(double)> &reduction, double upper, const RunConfig &config,
                            const SolverOptions &options, const std::function<ScenarioSpec(double)> &make_spec,
                            const std::string &label) {
    const double target = config.target_fraction;
    AccelerationSolution sol;
    const double r0 = reduction(0.0);
    sol.trace.emplace_back(0.0, r0);
    if (r0 >= target) {
        sol.spec = make_spec(0.0);
        sol.achieved_reduction = r0;
        sol.bracket_hi = 0.0;
        return sol;
    }
    const double r_max = reduction(upper);
    sol.trace.emplace_back(upper, r_max);
    if (r_max < target) {
        std::ostringstream os;
        os << label << ": target reduction " << target << " unreachable; maximum " << r_max << " at " << upper;
        throw UnreachableTarget(os.str(), r_max);
    }

    double lo = 0.0;
    double hi = upper;
    double x = upper;
    double r = r_max;
    for (int it = 0; it < options.max_iterations; ++it) {
        x = 0.5 * (lo + hi);
        r = reduction(x);
        sol.trace.emplace_back(x, r);
        ++sol.iterations;
        if (std::abs(r - target) < options.tolerance) {
            break;
        }
        if (r < target) {
            lo = x;
        } else {
            hi = x;
        }
    }

    auto sorted = sol.trace;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 1; k < sorted.size(); ++k) {
        if (sorted[k].second < sorted[k - 1].second - kMonotoneSlack) {
            std::ostringstream os;
            os << label << ": reduction decreases from " << sorted[k - 1].second << " at " << sorted[k - 1].first
               << " to " << sorted[k].second << " at " << sorted[k].first;
            throw NonMonotoneError(os.str());
        }
    }
    sol.spec = make_spec(x);
    sol.achieved_reduction = r;
    sol.bracket_lo = lo;
    sol.bracket_hi = hi;
    return sol;
}

} // namespace

std::string_view to_string(ScenarioKind kind) {
    switch (kind) {
    case ScenarioKind::bau:
        return "bau";
    case ScenarioKind::prevention:
        return "prevention";
    case ScenarioKind::treatment_default:
        return "treatment_default";
    case ScenarioKind::treatment_cfr_only:
        return "treatment_cfr_only";
    case ScenarioKind::treatment_remission_only:
        return "treatment_remission_only";
    case ScenarioKind::blended:
        return "blended";
    }
    return "?";
}

ScenarioKind parse_scenario_kind(std::string_view text) {
    for (const ScenarioKind k : {ScenarioKind::bau, ScenarioKind::prevention, ScenarioKind::treatment_default,
                                 ScenarioKind::treatment_cfr_only, ScenarioKind::treatment_remission_only,
                                 ScenarioKind::blended}) {
        if (text == to_string(k)) {
            return k;
        }
    }
    throw ConfigError("unknown scenario kind '" + std::string(text) + "'");
}

ScenarioSpec ScenarioSpec::for_kind(ScenarioKind kind, double delta, const RunConfig &config) {
    ScenarioSpec s;
    s.kind = kind;
    s.delta = delta;
    s.accumulate_from = config.data_last_year;
    s.active_last = config.target_year;
    s.validate();
    return s;
}

ScenarioSpec ScenarioSpec::blended_spec(double prevention_delta, double treatment_delta, double fraction,
                                        const RunConfig &config) {
    ScenarioSpec s;
    s.kind = ScenarioKind::blended;
    s.prevention_delta = prevention_delta;
    s.treatment_delta = treatment_delta;
    s.blend_fraction = fraction;
    s.accumulate_from = config.data_last_year;
    s.active_last = config.target_year;
    s.validate();
    return s;
}

void ScenarioSpec::validate() const {
    if (!(delta >= 0.0) || !(prevention_delta >= 0.0) || !(treatment_delta >= 0.0)) {
        throw ValidationError("scenario deltas must be >= 0");
    }
    if (!(blend_fraction >= 0.0 && blend_fraction <= 1.0)) {
        throw ValidationError("blend fraction must lie in [0, 1]");
    }
    if (!(accumulate_from < active_last)) {
        throw ValidationError("active window must end after it starts");
    }
}

BauTrajectories apply_acceleration(const BauTrajectories &bau, const ScenarioSpec &spec) {
    spec.validate();
    BauTrajectories out = bau;
    const Channels c = channels(spec);
    for (auto &d : out.diseases) {
        scale_forecast(d.incidence, c.incidence, spec);
        scale_forecast(d.case_fatality, c.case_fatality, spec);
        scale_forecast(d.remission, c.remission, spec);
    }
    return out;
}

double reduction_for(const CountryDataset &ds, const BauTrajectories &bau, const ScenarioSpec &spec,
                     const RunConfig &config) {
    return reduction_with_baseline(ds, bau, spec, config, baseline_q(ds, config));
}

AccelerationSolution solve_acceleration(const CountryDataset &ds, const BauTrajectories &bau, ScenarioKind kind,
                                        const RunConfig &config, const SolverOptions &options) {
    if (kind == ScenarioKind::blended) {
        throw ValidationError("use solve_blended for the blended scenario");
    }
    const double q_base = baseline_q(ds, config);
    auto make = [&](double delta) { return ScenarioSpec::for_kind(kind, delta, config); };
    if (kind == ScenarioKind::bau) {
        AccelerationSolution sol;
        sol.spec = make(0.0);
        sol.achieved_reduction = reduction_with_baseline(ds, bau, sol.spec, config, q_base);
        return sol;
    }
    auto reduction = [&](double delta) { return reduction_with_baseline(ds, bau, make(delta), config, q_base); };
    return bisect(reduction, options.max_delta, config, options, make, std::string(to_string(kind)));
}

AccelerationSolution solve_blended(const CountryDataset &ds, const BauTrajectories &bau, double prevention_delta,
                                   double treatment_delta, const RunConfig &config, const SolverOptions &options) {
    const double q_base = baseline_q(ds, config);
    auto make = [&](double alpha) {
        return ScenarioSpec::blended_spec(prevention_delta, treatment_delta, alpha, config);
    };
    if (prevention_delta == 0.0 && treatment_delta == 0.0) {
        AccelerationSolution sol;
        sol.spec = make(0.0);
        sol.achieved_reduction = reduction_with_baseline(ds, bau, sol.spec, config, q_base);
        return sol;
    }
    auto reduction = [&](double alpha) { return reduction_with_baseline(ds, bau, make(alpha), config, q_base); };
    return bisect(reduction, 1.0, config, options, make, "blended");
}

} // namespace ncd
