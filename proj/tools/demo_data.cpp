// Writes a synthetic input directory in the canonical CSV layout.
// The numbers are illustrative only; nothing here is real burden data.

#include "ncd/error.hpp"
#include "ncd/synthetic.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

int main(int argc, char **argv) {
    CLI::App app{"Generate synthetic PMSLT input data"};
    std::string out;
    ncd::synthetic::WorldParams world;
    app.add_option("dir", out, "output directory")->required();
    app.add_option("--countries", world.countries, "number of countries (1-35)")->check(CLI::Range(1, 35));
    app.add_option("--diseases", world.diseases, "generic disease count; 0 uses the four demo diseases")
        ->check(CLI::NonNegativeNumber);
    int age_width = 1;
    app.add_option("--age-width", age_width, "width of the age groups written for rates")->check(CLI::Range(1, 111));
    CLI11_PARSE(app, argc, argv);

    try {
        std::filesystem::create_directories(out);
        auto strata = ncd::synthetic::world(world, ncd::RunConfig{});
        if (age_width > 1) {
            for (auto &ds : strata) {
                ncd::synthetic::coarsen(ds, age_width);
            }
        }
        ncd::write_canonical(strata, out);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    std::cerr << "wrote " << world.countries << " countries x 2 sexes to " << out << '\n';
    return 0;
}
