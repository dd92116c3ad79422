#pragma once

// Batch orchestration: load -> BAU -> solve -> scenarios -> reports.
// Every stage writes plain CSV (plus summary.json) into the output directory.

#include "ncd/dataset.hpp"
#include "ncd/expenditure.hpp"
#include "ncd/indicator.hpp"
#include "ncd/scenario.hpp"
#include "ncd/trend.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ncd {

/// Overrides the default input directory when the config names none.
inline constexpr const char *kDataDirEnv = "NCD_PMSLT_DATA_DIR";

struct RunManifest {
    std::optional<std::filesystem::path> config_path;
    std::filesystem::path data_dir;
    RunConfig config;
    std::vector<std::string> countries;
    std::optional<Sex> sex;
    /// Intervention kinds to solve; blended pulls in prevention and treatment_default.
    std::vector<ScenarioKind> scenarios{kInterventionKinds.begin(), kInterventionKinds.end()};
    std::filesystem::path out_dir = "out";
    int jobs = 1;
    SolverOptions solver;
    std::optional<std::filesystem::path> dump_trajectories;
    std::optional<std::filesystem::path> dump_projection;
};

/// Applies a key=value config file ('#' comments). Relative data_dir values
/// resolve against the file's directory. Throws ConfigError on unknown keys or
/// malformed values.
void apply_config_file(RunManifest &manifest, const std::filesystem::path &path);

/// Applies one key=value setting; the key set is documented in the README.
void apply_setting(RunManifest &manifest, const std::string &key, const std::string &value);

/// Comma separated scenario kinds; "bau" is accepted and ignored (always run).
std::vector<ScenarioKind> parse_scenario_list(const std::string &text);

/// Kinds actually solved for a request, in canonical order.
std::vector<ScenarioKind> solve_order(const std::vector<ScenarioKind> &requested);

/// Loaded, validated and fitted stratum.
struct StratumFit {
    CountryDataset dataset;
    BauTrajectories bau;
    DiagnosticsReport diagnostics;
};

struct KindSolution {
    ScenarioKind kind = ScenarioKind::prevention;
    bool reachable = false;
    /// Solved delta, blend fraction for blended; the search bound when unreachable.
    double delta = 0.0;
    double achieved_reduction = 0.0;
    int iterations = 0;
    std::string note;
};

struct StratumSolution {
    std::string country;
    Sex sex = Sex::female;
    AttainmentResult bau;
    std::vector<KindSolution> kinds;

    const KindSolution *find(ScenarioKind kind) const;
    /// Scenario spec rebuilt from the solved deltas; nullopt when unreachable.
    std::optional<ScenarioSpec> spec(ScenarioKind kind, const RunConfig &config) const;
};

/// Loads the selected strata and fits BAU, `jobs` strata at a time.
/// Throws ValidationError when a stratum is not run-ready.
std::vector<StratumFit> fit_strata(const RunManifest &manifest, std::ostream &log);

StratumSolution solve_stratum(const StratumFit &fit, const RunManifest &manifest);
std::vector<StratumSolution> solve_strata(const std::vector<StratumFit> &fits, const RunManifest &manifest,
                                          std::ostream &log);

/// Reads solutions.csv; throws PipelineOrderError when it is missing or lacks a
/// selected stratum.
std::vector<StratumSolution> read_solutions(const std::filesystem::path &path, const std::vector<StratumFit> &fits);

void write_fit_outputs(const std::vector<StratumFit> &fits, const RunManifest &manifest);
void write_solve_outputs(const std::vector<StratumSolution> &solutions, const RunManifest &manifest);
void write_report_outputs(const std::vector<StratumFit> &fits, const std::vector<StratumSolution> &solutions,
                          const RunManifest &manifest, std::ostream &log);

/// Content hashes of the inputs and the resolved settings, written as manifest.txt.
std::string determinism_stamp(const RunManifest &manifest);

enum class Command { fit, solve, report, all };

/// Runs one command and maps failures to exit codes: 0 success, 2 input
/// error, 3 pipeline-order error, 4 when some target was unreachable.
int run_command(Command command, const RunManifest &manifest, std::ostream &log);

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitOrderError = 3;
inline constexpr int kExitUnreachable = 4;

} // namespace ncd
