// Batch front end. Data goes to files under --out; progress and errors to stderr.

#include "ncd/error.hpp"
#include "ncd/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

std::string join(const std::vector<std::string> &parts) {
    std::string out;
    for (const auto &p : parts) {
        out += (out.empty() ? "" : ",") + p;
    }
    return out;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Proportional multistate lifetable runs for the NCD 40q30 target"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> countries;
    std::string sex;
    std::vector<std::string> scenarios;
    std::string out_dir;
    int jobs = 0;
    std::string dump_trajectories;
    std::string dump_projection;

    // Options may sit before or after the subcommand.
    app.add_option("--config", config_path, "key = value run configuration")->check(CLI::ExistingFile);
    app.add_option("--countries", countries, "country codes (comma separated)")->delimiter(',');
    app.add_option("--sex", sex, "female, male or both");
    app.add_option("--scenarios", scenarios, "scenario kinds (comma separated)")->delimiter(',');
    app.add_option("--out", out_dir, "output directory (default: out)");
    app.add_option("--jobs", jobs, "strata processed concurrently")->check(CLI::PositiveNumber);
    app.add_option("--dump-trajectories", dump_trajectories, "write BAU surfaces to this CSV");
    app.add_option("--dump-projection", dump_projection, "write projected cells to this CSV");

    struct Sub {
        const char *name;
        const char *help;
        ncd::Command command;
    };
    const Sub subs[] = {
        {"fit", "load inputs and fit BAU trends", ncd::Command::fit},
        {"solve", "classify attainment and solve accelerations", ncd::Command::solve},
        {"report", "project scenarios and write expenditure reports", ncd::Command::report},
        {"all", "fit, solve and report", ncd::Command::all},
    };
    for (const auto &s : subs) {
        app.add_subcommand(s.name, s.help)->fallthrough();
    }

    CLI11_PARSE(app, argc, argv);

    ncd::RunManifest manifest;
    try {
        if (!config_path.empty()) {
            manifest.config_path = config_path;
            ncd::apply_config_file(manifest, config_path);
        }
        if (!countries.empty()) {
            ncd::apply_setting(manifest, "countries", join(countries));
        }
        if (!sex.empty()) {
            ncd::apply_setting(manifest, "sex", sex);
        }
        if (!scenarios.empty()) {
            ncd::apply_setting(manifest, "scenarios", join(scenarios));
        }
        if (jobs > 0) {
            manifest.jobs = jobs;
        }
    } catch (const ncd::Error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return ncd::kExitInputError;
    }
    if (!out_dir.empty()) {
        manifest.out_dir = out_dir;
    }
    if (!dump_trajectories.empty()) {
        manifest.dump_trajectories = dump_trajectories;
    }
    if (!dump_projection.empty()) {
        manifest.dump_projection = dump_projection;
    }

    for (const auto &s : subs) {
        if (app.got_subcommand(s.name)) {
            return ncd::run_command(s.command, manifest, std::cerr);
        }
    }
    return ncd::kExitInputError;
}
