#include "ncd/pipeline.hpp"

#include "csv.hpp"
#include "ncd/error.hpp"
#include "ncd/projection.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace ncd {

namespace fs = std::filesystem;

namespace {

// Runs fn(0..n-1) on up to `jobs` threads. Results go into caller-owned slots,
// so output order never depends on scheduling. The lowest-index failure wins.
template <typename F> void parallel_for(std::size_t n, int jobs, F &&fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto threads = static_cast<std::size_t>(std::max(1, jobs));
    if (threads <= 1 || n <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < std::min(threads, n); ++t) {
            pool.emplace_back(worker);
        }
    }
    for (auto &e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::vector<std::string> split_list(const std::string &text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

double config_number(const std::string &key, const std::string &value) {
    try {
        return csv::parse_double(value);
    } catch (const Error &) {
        throw ConfigError(key + ": not a number: '" + value + "'");
    }
}

int config_int(const std::string &key, const std::string &value) {
    try {
        return csv::parse_int(value);
    } catch (const Error &) {
        throw ConfigError(key + ": not an integer: '" + value + "'");
    }
}

std::string period_label(YearRange p) { return std::to_string(p.first) + "-" + std::to_string(p.last); }

std::string num(double v) { return csv::format_number(v); }

fs::path data_dir_of(const RunManifest &m) {
    if (!m.data_dir.empty()) {
        return m.data_dir;
    }
    if (const char *env = std::getenv(kDataDirEnv); env != nullptr && *env != '\0') {
        return env;
    }
    return fs::current_path();
}

std::ofstream open_output(const fs::path &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot write " + path.string());
    }
    return out;
}

// One file per stratum when several strata share a dump request.
fs::path dump_path(const fs::path &requested, const CountryDataset &ds, std::size_t strata) {
    if (strata <= 1) {
        return requested;
    }
    fs::path p = requested;
    p.replace_filename(requested.stem().string() + "_" + ds.country + "_" + std::string(to_string(ds.sex)) +
                       requested.extension().string());
    return p;
}

std::uint64_t fnv1a(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    std::uint64_t h = 1469598103934665603ULL;
    char buf[1 << 14];
    while (in) {
        in.read(buf, sizeof buf);
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    return h;
}

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::optional<Sex> parse_sex_selection(const std::string &text) {
    if (text.empty() || text == "both" || text == "all") {
        return std::nullopt;
    }
    try {
        return parse_sex(text);
    } catch (const Error &) {
        throw ConfigError("unknown sex '" + text + "'");
    }
}

} // namespace

void apply_setting(RunManifest &m, const std::string &key, const std::string &value) {
    RunConfig &c = m.config;
    if (key == "data_dir") {
        m.data_dir = value;
    } else if (key == "data_first_year") {
        c.data_first_year = config_int(key, value);
    } else if (key == "data_last_year") {
        c.data_last_year = config_int(key, value);
    } else if (key == "intervention_start") {
        c.intervention_start = config_int(key, value);
    } else if (key == "target_year") {
        c.target_year = config_int(key, value);
    } else if (key == "horizon_year") {
        c.horizon_year = config_int(key, value);
    } else if (key == "indicator_baseline_year") {
        c.indicator_baseline_year = config_int(key, value);
    } else if (key == "target_fraction") {
        c.target_fraction = config_number(key, value);
    } else if (key == "reporting_periods") {
        c.reporting_periods.clear();
        for (const auto &item : split_list(value)) {
            const auto dash = item.find('-');
            if (dash == std::string::npos) {
                throw ConfigError("reporting_periods: expected first-last, got '" + item + "'");
            }
            c.reporting_periods.push_back(
                {config_int(key, trim(item.substr(0, dash))), config_int(key, trim(item.substr(dash + 1)))});
        }
    } else if (key == "discount_rate") {
        c.discount_rate = config_number(key, value);
    } else if (key == "cpi_factor") {
        c.cpi_factor = config_number(key, value);
    } else if (key == "ppp_factor") {
        c.ppp_factor = config_number(key, value);
    } else if (key == "expenditure_min_age") {
        c.expenditure_min_age = config_int(key, value);
    } else if (key == "morbidity_source") {
        if (value == "disability_weight") {
            c.morbidity_source = MorbiditySource::disability_weight;
        } else if (value == "yld_rate") {
            c.morbidity_source = MorbiditySource::yld_rate;
        } else {
            throw ConfigError("morbidity_source must be disability_weight or yld_rate");
        }
    } else if (key == "countries") {
        m.countries = split_list(value);
    } else if (key == "sex") {
        m.sex = parse_sex_selection(value);
    } else if (key == "scenarios") {
        m.scenarios = parse_scenario_list(value);
    } else if (key == "jobs") {
        m.jobs = config_int(key, value);
    } else if (key == "max_delta") {
        m.solver.max_delta = config_number(key, value);
    } else if (key == "solver_tolerance") {
        m.solver.tolerance = config_number(key, value);
    } else if (key == "max_iterations") {
        m.solver.max_iterations = config_int(key, value);
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

void apply_config_file(RunManifest &m, const fs::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path.string());
    }
    m.config_path = path;
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(row) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            apply_setting(m, key, value);
        } catch (const ConfigError &e) {
            throw ConfigError(path.string() + ":" + std::to_string(row) + ": " + e.what());
        }
        if (key == "data_dir" && m.data_dir.is_relative()) {
            m.data_dir = path.parent_path() / m.data_dir;
        }
    }
    m.config.validate();
}

std::vector<ScenarioKind> parse_scenario_list(const std::string &text) {
    std::vector<ScenarioKind> out;
    for (const auto &item : split_list(text)) {
        const ScenarioKind k = parse_scenario_kind(item);
        if (k != ScenarioKind::bau && std::find(out.begin(), out.end(), k) == out.end()) {
            out.push_back(k);
        }
    }
    return out;
}

std::vector<ScenarioKind> solve_order(const std::vector<ScenarioKind> &requested) {
    auto wants = [&](ScenarioKind k) { return std::find(requested.begin(), requested.end(), k) != requested.end(); };
    const bool blended = wants(ScenarioKind::blended);
    std::vector<ScenarioKind> out;
    for (const ScenarioKind k : kInterventionKinds) {
        const bool component =
            blended && (k == ScenarioKind::prevention || k == ScenarioKind::treatment_default);
        if (wants(k) || component) {
            out.push_back(k);
        }
    }
    return out;
}

const KindSolution *StratumSolution::find(ScenarioKind kind) const {
    for (const auto &k : kinds) {
        if (k.kind == kind) {
            return &k;
        }
    }
    return nullptr;
}

std::optional<ScenarioSpec> StratumSolution::spec(ScenarioKind kind, const RunConfig &config) const {
    const KindSolution *k = find(kind);
    if (k == nullptr || !k->reachable) {
        return std::nullopt;
    }
    if (kind != ScenarioKind::blended) {
        return ScenarioSpec::for_kind(kind, k->delta, config);
    }
    const KindSolution *p = find(ScenarioKind::prevention);
    const KindSolution *t = find(ScenarioKind::treatment_default);
    if (p == nullptr || t == nullptr || !p->reachable || !t->reachable) {
        return std::nullopt;
    }
    return ScenarioSpec::blended_spec(p->delta, t->delta, k->delta, config);
}

std::vector<StratumFit> fit_strata(const RunManifest &manifest, std::ostream &log) {
    manifest.config.validate();
    const InputPaths paths = InputPaths::in_directory(data_dir_of(manifest));
    const DiseaseRegistry registry = load_registry(paths.registry);
    auto datasets = load_datasets(paths, registry, manifest.config, manifest.countries, manifest.sex);
    if (datasets.empty()) {
        throw ValidationError("no stratum in " + paths.rates.string() + " matches the selection");
    }
    for (const auto &c : manifest.countries) {
        const bool found = std::any_of(datasets.begin(), datasets.end(), [&](const auto &d) { return d.country == c; });
        if (!found) {
            throw ValidationError("country " + c + " not found in " + paths.rates.string());
        }
    }
    std::vector<StratumFit> fits(datasets.size());
    parallel_for(datasets.size(), manifest.jobs, [&](std::size_t i) {
        StratumFit &f = fits[i];
        f.dataset = std::move(datasets[i]);
        f.diagnostics = validate_dataset(f.dataset);
        if (!f.diagnostics.run_ready()) {
            std::string first;
            for (const auto &d : f.diagnostics.entries) {
                if (d.severity == Severity::blocking) {
                    first = d.message;
                    break;
                }
            }
            throw ValidationError(f.dataset.country + "/" + std::string(to_string(f.dataset.sex)) + ": " +
                                  std::to_string(f.diagnostics.count(Severity::blocking)) +
                                  " blocking issue(s), first: " + first);
        }
        f.bau = build_bau(f.dataset, manifest.config);
    });
    for (const auto &f : fits) {
        log << "fit " << f.dataset.country << "/" << to_string(f.dataset.sex) << ": " << f.bau.diseases.size()
            << " diseases, " << f.bau.remission_clamped_cells << " clamped remission cells\n";
    }
    return fits;
}

StratumSolution solve_stratum(const StratumFit &fit, const RunManifest &manifest) {
    const RunConfig &config = manifest.config;
    StratumSolution out;
    out.country = fit.dataset.country;
    out.sex = fit.dataset.sex;
    out.bau = classify_attainment(
        reduction_for(fit.dataset, fit.bau, ScenarioSpec::for_kind(ScenarioKind::bau, 0.0, config), config), config);

    for (const ScenarioKind kind : solve_order(manifest.scenarios)) {
        KindSolution ks;
        ks.kind = kind;
        const double bound = kind == ScenarioKind::blended ? 1.0 : manifest.solver.max_delta;
        try {
            AccelerationSolution sol;
            if (kind == ScenarioKind::blended) {
                const KindSolution *p = out.find(ScenarioKind::prevention);
                const KindSolution *t = out.find(ScenarioKind::treatment_default);
                if (!p->reachable || !t->reachable) {
                    ks.delta = bound;
                    ks.note = "component scenario unreachable";
                    out.kinds.push_back(ks);
                    continue;
                }
                sol = solve_blended(fit.dataset, fit.bau, p->delta, t->delta, config, manifest.solver);
                ks.delta = sol.spec.blend_fraction;
            } else {
                sol = solve_acceleration(fit.dataset, fit.bau, kind, config, manifest.solver);
                ks.delta = sol.spec.delta;
            }
            ks.reachable = true;
            ks.achieved_reduction = sol.achieved_reduction;
            ks.iterations = sol.iterations;
        } catch (const UnreachableTarget &e) {
            ks.delta = bound;
            ks.achieved_reduction = e.max_reduction();
            ks.note = e.what();
        } catch (const NonMonotoneError &e) {
            ks.delta = bound;
            ks.achieved_reduction = std::nan("");
            ks.note = e.what();
        }
        out.kinds.push_back(ks);
    }
    return out;
}

std::vector<StratumSolution> solve_strata(const std::vector<StratumFit> &fits, const RunManifest &manifest,
                                          std::ostream &log) {
    std::vector<StratumSolution> out(fits.size());
    parallel_for(fits.size(), manifest.jobs, [&](std::size_t i) { out[i] = solve_stratum(fits[i], manifest); });
    for (const auto &s : out) {
        for (const auto &k : s.kinds) {
            if (!k.reachable) {
                log << "solve " << s.country << "/" << to_string(s.sex) << " " << to_string(k.kind)
                    << ": unreachable (" << k.note << ")\n";
            }
        }
    }
    return out;
}

std::vector<StratumSolution> read_solutions(const fs::path &path, const std::vector<StratumFit> &fits) {
    if (!fs::exists(path)) {
        throw PipelineOrderError(path.string() + " not found; run 'solve' first");
    }
    std::map<std::pair<std::string, Sex>, StratumSolution> by_key;
    csv::Reader reader(path, {"country", "sex", "kind", "delta", "achieved_reduction", "iterations", "reachable"});
    while (reader.next()) {
        const std::string country(reader.field("country"));
        const Sex sex = parse_sex(reader.field("sex"));
        const std::string_view kind_text = reader.field("kind");
        auto &s = by_key[{country, sex}];
        s.country = country;
        s.sex = sex;
        if (kind_text == "bau") {
            s.bau.reduction = reader.number("achieved_reduction");
            continue;
        }
        KindSolution k;
        k.kind = parse_scenario_kind(kind_text);
        k.delta = reader.number("delta");
        const std::string_view achieved = reader.field("achieved_reduction");
        k.achieved_reduction = achieved.empty() ? std::nan("") : csv::parse_double(achieved);
        k.iterations = reader.integer("iterations");
        k.reachable = reader.integer("reachable") != 0;
        s.kinds.push_back(k);
    }
    std::vector<StratumSolution> out;
    for (const auto &f : fits) {
        const auto it = by_key.find({f.dataset.country, f.dataset.sex});
        if (it == by_key.end()) {
            throw PipelineOrderError(path.string() + " has no solution for " + f.dataset.country + "/" +
                                     std::string(to_string(f.dataset.sex)) + "; rerun 'solve'");
        }
        out.push_back(it->second);
    }
    return out;
}

void write_fit_outputs(const std::vector<StratumFit> &fits, const RunManifest &manifest) {
    auto diag = open_output(manifest.out_dir / "fit_diagnostics.csv");
    diag << "country,sex,disease,measure,age_lo,age_hi,apc,note\n";
    for (const auto &f : fits) {
        const std::string sex(to_string(f.dataset.sex));
        for (const auto &d : f.bau.diagnostics) {
            diag << csv::escape(f.dataset.country) << ',' << sex << ',' << csv::escape(d.disease) << ','
                 << to_string(d.measure) << ',' << d.group.lo << ',' << d.group.hi << ',' << num(d.apc) << ','
                 << csv::escape(d.note) << '\n';
        }
        if (f.bau.remission_clamped_cells > 0) {
            diag << csv::escape(f.dataset.country) << ',' << sex << ",*,remission,0," << kMaxAge << ",,"
                 << csv::escape(std::to_string(f.bau.remission_clamped_cells) + " remission cells clamped") << '\n';
        }
        for (const auto &d : f.diagnostics.entries) {
            diag << csv::escape(f.dataset.country) << ',' << sex << ",*,,,,," << csv::escape(d.message) << '\n';
        }
    }

    if (!manifest.dump_trajectories) {
        return;
    }
    for (const auto &f : fits) {
        auto out = open_output(dump_path(*manifest.dump_trajectories, f.dataset, fits.size()));
        out << "disease,measure,age,year,value,provenance\n";
        auto emit = [&](const RateTrajectory &t, bool solved) {
            const YearRange years = t.values.years();
            for (int y = years.first; y <= years.last; ++y) {
                const std::string prov =
                    solved && t.provenance(y) == Provenance::observed ? "solved" : std::string(to_string(t.provenance(y)));
                for (int a = 0; a <= kMaxAge; ++a) {
                    out << csv::escape(t.disease) << ',' << to_string(t.measure) << ',' << a << ',' << y << ','
                        << num(t.values(a, y)) << ',' << prov << '\n';
                }
            }
        };
        for (const auto &d : f.bau.diseases) {
            emit(d.incidence, false);
            emit(d.case_fatality, false);
            emit(d.remission, !f.dataset.has_series(d.disease, Measure::remission));
        }
        emit(f.bau.all_cause, false);
    }
}

void write_solve_outputs(const std::vector<StratumSolution> &solutions, const RunManifest &manifest) {
    auto sol = open_output(manifest.out_dir / "solutions.csv");
    auto att = open_output(manifest.out_dir / "attainment.csv");
    sol << "country,sex,kind,delta_pp,achieved_reduction,iterations,reachable,delta\n";
    att << "country,sex,scenario,reduction_2030,on_track\n";
    for (const auto &s : solutions) {
        const std::string key = csv::escape(s.country) + "," + std::string(to_string(s.sex)) + ",";
        sol << key << "bau,0," << num(s.bau.reduction) << ",0,1,0\n";
        att << key << "bau," << num(s.bau.reduction) << ',' << (s.bau.status == Attainment::on_track ? 1 : 0)
            << '\n';
        for (const auto &k : s.kinds) {
            const std::string achieved = std::isnan(k.achieved_reduction) ? "" : num(k.achieved_reduction);
            // Blended carries the blend fraction, which has no percentage-point reading.
            const std::string pp = k.kind == ScenarioKind::blended ? "" : num(k.delta * 100.0);
            sol << key << to_string(k.kind) << ',' << pp << ',' << achieved << ',' << k.iterations
                << ',' << (k.reachable ? 1 : 0) << ',' << num(k.delta) << '\n';
            // A solved kind meets the target to within the solver tolerance.
            const bool on_track = k.reachable && !std::isnan(k.achieved_reduction) &&
                                  k.achieved_reduction >= manifest.config.target_fraction - manifest.solver.tolerance;
            att << key << to_string(k.kind) << ',' << achieved << ',' << (on_track ? 1 : 0) << '\n';
        }
    }
}

namespace {

struct ScenarioRun {
    std::string name;
    ProjectionResult result;
    IndicatorSeries indicator;
    std::vector<double> expenditure;
};

struct StratumReport {
    std::vector<ScenarioRun> runs; // BAU first
};

// Scenario names reachable in every stratum of a country, in solve order.
std::vector<std::string> common_scenarios(const std::vector<const StratumReport *> &reports) {
    std::vector<std::string> out;
    for (const auto &run : reports.front()->runs) {
        const bool everywhere = std::all_of(reports.begin(), reports.end(), [&](const StratumReport *r) {
            return std::any_of(r->runs.begin(), r->runs.end(), [&](const ScenarioRun &x) { return x.name == run.name; });
        });
        if (everywhere) {
            out.push_back(run.name);
        }
    }
    return out;
}

const ScenarioRun &run_named(const StratumReport &r, const std::string &name) {
    return *std::find_if(r.runs.begin(), r.runs.end(), [&](const ScenarioRun &x) { return x.name == name; });
}

void write_projection_dump(std::ostream &out, const StratumReport &report) {
    out << "scenario,age,year,population,person_years,deaths_all,disease,prevalence,deaths_d,incident,remitted\n";
    for (const auto &run : report.runs) {
        const ProjectionResult &r = run.result;
        for (int y = r.years.first; y <= r.years.last; ++y) {
            for (int a = 0; a <= kMaxAge; ++a) {
                const std::string head = run.name + "," + std::to_string(a) + "," + std::to_string(y) + "," +
                                         num(r.population(a, y)) + "," + num(r.person_years(a, y)) + "," +
                                         num(r.deaths(a, y)) + ",";
                for (const auto &d : r.diseases) {
                    out << head << csv::escape(d.disease) << ',' << num(d.prevalence(a, y)) << ','
                        << num(d.deaths(a, y)) << ',' << num(d.incident(a, y)) << ',' << num(d.remitted(a, y))
                        << '\n';
                }
            }
        }
    }
}

} // namespace

void write_report_outputs(const std::vector<StratumFit> &fits, const std::vector<StratumSolution> &solutions,
                          const RunManifest &manifest, std::ostream &log) {
    const RunConfig &config = manifest.config;
    std::vector<StratumReport> reports(fits.size());
    parallel_for(fits.size(), manifest.jobs, [&](std::size_t i) {
        const StratumFit &f = fits[i];
        StratumReport &rep = reports[i];
        ProjectionResult bau = run_projection(f.dataset, f.bau, config);
        IndicatorSeries ind = indicator_series(f.dataset, bau, config);
        rep.runs.push_back({"bau", std::move(bau), std::move(ind), {}});
        for (const auto &k : solutions[i].kinds) {
            const auto spec = solutions[i].spec(k.kind, config);
            if (!spec) {
                continue;
            }
            const BauTrajectories scen = apply_acceleration(f.bau, *spec);
            ProjectionResult r = run_projection(f.dataset, f.bau, scen, config);
            IndicatorSeries si = indicator_series(f.dataset, r, config);
            rep.runs.push_back({std::string(to_string(k.kind)), std::move(r), std::move(si), {}});
        }
    });

    // Costs: one envelope scale per country, shared by its strata.
    std::map<std::string, std::vector<std::size_t>> by_country;
    for (std::size_t i = 0; i < fits.size(); ++i) {
        by_country[fits[i].dataset.country].push_back(i);
        if (fits[i].dataset.phase_costs.empty()) {
            throw ValidationError("no phase costs for " + fits[i].dataset.country);
        }
    }
    const auto options = ExpenditureOptions::from(config);
    for (const auto &[country, idx] : by_country) {
        double scale = 1.0;
        const CountryDataset &first = fits[idx.front()].dataset;
        if (first.expenditure_envelope) {
            const int year = std::clamp(first.envelope_year, config.intervention_start, config.horizon_year);
            ExpenditureOptions all_ages;
            all_ages.min_age = 0;
            double modelled = 0.0;
            for (const std::size_t i : idx) {
                modelled += project_expenditure(reports[i].runs.front().result, fits[i].dataset.phase_costs,
                                                {year, year}, all_ages)
                                .total;
            }
            scale = envelope_scale_factor(*first.expenditure_envelope, modelled);
            log << "report " << country << ": cost scale " << scale << " to envelope in " << year << '\n';
        }
        for (const std::size_t i : idx) {
            const PhaseCostTable costs = fits[i].dataset.phase_costs.scaled(scale);
            for (auto &run : reports[i].runs) {
                run.expenditure = expenditure_by_year(run.result, costs, options);
            }
        }
    }

    auto ind = open_output(manifest.out_dir / "indicator.csv");
    ind << "country,sex,scenario,year,q40_30\n";
    for (std::size_t i = 0; i < fits.size(); ++i) {
        const std::string key = csv::escape(fits[i].dataset.country) + "," + std::string(to_string(fits[i].dataset.sex));
        for (const auto &run : reports[i].runs) {
            for (const auto &[year, q] : run.indicator.q40_30) {
                ind << key << ',' << run.name << ',' << year << ',' << num(q) << '\n';
            }
        }
    }

    auto exp = open_output(manifest.out_dir / "expenditure.csv");
    auto pan = open_output(manifest.out_dir / "panels.csv");
    auto eqa = open_output(manifest.out_dir / "equivalent_age.csv");
    exp << "country,sex,scenario,period,total_usd,savings_usd,savings_pct\n";
    pan << "country,scenario,period,panel,value_pct\n";
    eqa << "country,scenario,year,a_star\n";
    nlohmann::ordered_json summary;
    summary["target_fraction"] = config.target_fraction;
    summary["countries"] = nlohmann::ordered_json::array();

    auto write_totals = [&](const std::string &country, const std::string &sex, const ExpenditureReport &rep) {
        for (const auto &t : rep.totals) {
            exp << csv::escape(country) << ',' << sex << ',' << t.scenario << ',' << period_label(t.period) << ','
                << num(t.total) << ',' << num(t.savings) << ',' << num(t.savings_fraction * 100.0) << '\n';
        }
    };
    auto outcomes_for = [](const StratumReport &r, const std::vector<std::string> &names) {
        std::vector<ScenarioOutcome> out;
        for (const auto &n : names) {
            const ScenarioRun &run = run_named(r, n);
            out.push_back({n, run.expenditure, &run.result});
        }
        return out;
    };

    for (const auto &[country, idx] : by_country) {
        std::vector<const StratumReport *> reps;
        for (const std::size_t i : idx) {
            reps.push_back(&reports[i]);
        }
        const std::vector<std::string> names = common_scenarios(reps);
        const std::vector<std::string> scenario_names(names.begin() + 1, names.end());

        for (const std::size_t i : idx) {
            const auto outs = outcomes_for(reports[i], names);
            const auto rep = savings_report(outs.front(), std::span(outs).subspan(1), config);
            write_totals(country, std::string(to_string(fits[i].dataset.sex)), rep);
        }

        // Country level: a single stratum as is, or both sexes combined.
        std::vector<ProjectionResult> combined;
        std::vector<ScenarioOutcome> outs;
        std::string sex_label;
        if (idx.size() == 1) {
            outs = outcomes_for(reports[idx.front()], names);
            sex_label = std::string(to_string(fits[idx.front()].dataset.sex));
        } else {
            sex_label = "both";
            combined.reserve(names.size());
            for (const auto &n : names) {
                ProjectionResult r = run_named(reports[idx[0]], n).result;
                std::vector<double> spend = run_named(reports[idx[0]], n).expenditure;
                for (std::size_t k = 1; k < idx.size(); ++k) {
                    const ScenarioRun &other = run_named(reports[idx[k]], n);
                    r = combine_strata(r, other.result);
                    for (std::size_t y = 0; y < spend.size(); ++y) {
                        spend[y] += other.expenditure[y];
                    }
                }
                combined.push_back(std::move(r));
                outs.push_back({n, std::move(spend), nullptr});
            }
            for (std::size_t k = 0; k < outs.size(); ++k) {
                outs[k].result = &combined[k];
            }
        }
        const auto rep = savings_report(outs.front(), std::span(outs).subspan(1), config);
        if (idx.size() > 1) {
            write_totals(country, sex_label, rep);
        }
        for (const auto &p : rep.panels) {
            pan << csv::escape(country) << ',' << p.scenario << ',' << period_label(p.period) << ',' << p.panel << ','
                << num(p.savings_fraction * 100.0) << '\n';
        }
        for (const auto &e : rep.equivalent_ages) {
            eqa << csv::escape(country) << ',' << e.scenario << ',' << e.year << ',' << num(e.a_star) << '\n';
            if (e.flagged) {
                log << "report " << country << " " << e.scenario << " " << e.year
                    << ": equivalent age flagged (plateau, non-monotone or clamped)\n";
            }
        }

        nlohmann::ordered_json c;
        c["country"] = country;
        c["sex"] = sex_label;
        c["rows"] = nlohmann::ordered_json::array();
        for (const auto &t : rep.totals) {
            nlohmann::ordered_json row;
            row["scenario"] = t.scenario;
            row["period"] = period_label(t.period);
            row["total_usd"] = t.total;
            row["savings_usd"] = t.savings;
            row["savings_pct"] = t.savings_fraction * 100.0;
            c["rows"].push_back(std::move(row));
        }
        summary["countries"].push_back(std::move(c));
        if (scenario_names.size() + 1 < reps.front()->runs.size()) {
            log << "report " << country << ": scenarios unreachable in some stratum are left out of country totals\n";
        }
    }
    auto js = open_output(manifest.out_dir / "summary.json");
    js << summary.dump(2) << '\n';

    if (manifest.dump_projection) {
        for (std::size_t i = 0; i < fits.size(); ++i) {
            auto out = open_output(dump_path(*manifest.dump_projection, fits[i].dataset, fits.size()));
            write_projection_dump(out, reports[i]);
        }
    }
}

std::string determinism_stamp(const RunManifest &m) {
    const InputPaths paths = InputPaths::in_directory(data_dir_of(m));
    std::ostringstream os;
    std::vector<fs::path> inputs = {paths.registry, paths.rates, paths.population};
    if (paths.envelope) {
        inputs.push_back(*paths.envelope);
    }
    if (paths.phase_costs) {
        inputs.push_back(*paths.phase_costs);
    }
    if (m.config_path) {
        inputs.push_back(*m.config_path);
    }
    for (const auto &p : inputs) {
        os << "input " << p.filename().string() << " fnv1a64=" << (fs::exists(p) ? hex(fnv1a(p)) : "missing") << '\n';
    }
    const RunConfig &c = m.config;
    os << "years " << c.data_first_year << ' ' << c.data_last_year << ' ' << c.intervention_start << ' '
       << c.target_year << ' ' << c.horizon_year << ' ' << c.indicator_baseline_year << '\n';
    os << "target_fraction " << num(c.target_fraction) << '\n';
    os << "discount_rate " << num(c.discount_rate) << " cpi " << num(c.cpi_factor) << " ppp " << num(c.ppp_factor)
       << '\n';
    os << "expenditure_min_age " << c.expenditure_min_age << '\n';
    os << "morbidity_source " << (c.morbidity_source == MorbiditySource::yld_rate ? "yld_rate" : "disability_weight")
       << '\n';
    os << "periods";
    for (const auto &p : c.reporting_periods) {
        os << ' ' << period_label(p);
    }
    os << "\ncountries";
    for (const auto &cc : m.countries) {
        os << ' ' << cc;
    }
    os << "\nsex " << (m.sex ? std::string(to_string(*m.sex)) : "both") << "\nscenarios";
    for (const auto k : m.scenarios) {
        os << ' ' << to_string(k);
    }
    os << "\nsolver " << num(m.solver.max_delta) << ' ' << num(m.solver.tolerance) << ' ' << m.solver.max_iterations
       << '\n';
    return os.str();
}

int run_command(Command command, const RunManifest &manifest, std::ostream &log) {
    try {
        fs::create_directories(manifest.out_dir);
        if (command == Command::report && !fs::exists(manifest.out_dir / "solutions.csv")) {
            throw PipelineOrderError((manifest.out_dir / "solutions.csv").string() + " not found; run 'solve' first");
        }
        const auto fits = fit_strata(manifest, log);
        std::vector<StratumSolution> solutions;
        switch (command) {
        case Command::fit:
            write_fit_outputs(fits, manifest);
            break;
        case Command::solve:
            solutions = solve_strata(fits, manifest, log);
            write_solve_outputs(solutions, manifest);
            break;
        case Command::report:
            solutions = read_solutions(manifest.out_dir / "solutions.csv", fits);
            write_report_outputs(fits, solutions, manifest, log);
            break;
        case Command::all:
            write_fit_outputs(fits, manifest);
            solutions = solve_strata(fits, manifest, log);
            write_solve_outputs(solutions, manifest);
            write_report_outputs(fits, solutions, manifest, log);
            break;
        }
        auto stamp = open_output(manifest.out_dir / "manifest.txt");
        stamp << determinism_stamp(manifest);

        const bool unreachable = std::any_of(solutions.begin(), solutions.end(), [](const StratumSolution &s) {
            return std::any_of(s.kinds.begin(), s.kinds.end(), [](const KindSolution &k) { return !k.reachable; });
        });
        return unreachable ? kExitUnreachable : kExitOk;
    } catch (const PipelineOrderError &e) {
        log << "error: " << e.what() << '\n';
        return kExitOrderError;
    } catch (const Error &e) {
        log << "error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const fs::filesystem_error &e) {
        log << "error: " << e.what() << '\n';
        return kExitInputError;
    }
}

} // namespace ncd
