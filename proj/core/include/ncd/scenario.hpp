#pragma once

#include "ncd/dataset.hpp"
#include "ncd/indicator.hpp"
#include "ncd/trend.hpp"

#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace ncd {

enum class ScenarioKind {
    bau,
    prevention,
    treatment_default,
    treatment_cfr_only,
    treatment_remission_only,
    blended,
};

inline constexpr std::array<ScenarioKind, 5> kInterventionKinds = {
    ScenarioKind::prevention, ScenarioKind::treatment_default, ScenarioKind::treatment_cfr_only,
    ScenarioKind::treatment_remission_only, ScenarioKind::blended,
};

std::string_view to_string(ScenarioKind kind);
ScenarioKind parse_scenario_kind(std::string_view text);

/// Rate acceleration applied over the active window, after which each
/// measure resumes its BAU slope from the level it reached.
struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::bau;
    /// Added to (or subtracted from) the log-slope, per year. 0.0253 = 2.53pp.
    double delta = 0.0;
    /// Blended only: component deltas and the common scale applied to both.
    double prevention_delta = 0.0;
    double treatment_delta = 0.0;
    double blend_fraction = 0.0;
    /// Acceleration accumulates from the last data year to the target year.
    int accumulate_from = 2021;
    int active_last = 2030;

    static ScenarioSpec for_kind(ScenarioKind kind, double delta, const RunConfig &config);
    static ScenarioSpec blended_spec(double prevention_delta, double treatment_delta, double fraction,
                                     const RunConfig &config);

    /// Throws ValidationError for negative deltas or a blend fraction outside [0, 1].
    void validate() const;
};

/// Scenario rate surfaces: BAU values times exp(+-delta * (min(year, active_last) - accumulate_from))
/// for projection years; observed years are untouched.
BauTrajectories apply_acceleration(const BauTrajectories &bau, const ScenarioSpec &spec);

/// 1 - q(target) / q(baseline) for one scenario, projecting only to the target year.
double reduction_for(const CountryDataset &ds, const BauTrajectories &bau, const ScenarioSpec &spec,
                     const RunConfig &config);

struct SolverOptions {
    double max_delta = 0.30;
    double tolerance = 1e-6;
    int max_iterations = 60;
};

struct AccelerationSolution {
    ScenarioSpec spec;
    double achieved_reduction = 0.0;
    int iterations = 0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    /// (delta or blend fraction, reduction) for every evaluated point.
    std::vector<std::pair<double, double>> trace;
};

/// Bisection on delta in [0, max_delta]. Returns delta 0 with no iterations when
/// BAU already meets the target. Throws UnreachableTarget when max_delta falls
/// short, NonMonotoneError when evaluated reductions decrease with delta.
AccelerationSolution solve_acceleration(const CountryDataset &ds, const BauTrajectories &bau, ScenarioKind kind,
                                        const RunConfig &config, const SolverOptions &options = {});

/// Bisection on a common scale in [0, 1] applied to both the prevention and
/// treatment deltas.
AccelerationSolution solve_blended(const CountryDataset &ds, const BauTrajectories &bau, double prevention_delta,
                                   double treatment_delta, const RunConfig &config, const SolverOptions &options = {});

} // namespace ncd
