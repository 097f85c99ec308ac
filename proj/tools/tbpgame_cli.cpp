// tbpgame solve|simulate|verify --scenario FILE [options]

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "tbpgame/run.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Transboundary pollution game: feedback Nash equilibria on 2-D domains"};
    app.require_subcommand(1, 1);

    std::string scenario;
    tbpgame::RunOptions opts;
    std::string out = "out";

    const std::map<std::string, tbpgame::Mode> modes{{"solve", tbpgame::Mode::Solve},
                                                     {"simulate", tbpgame::Mode::Simulate},
                                                     {"verify", tbpgame::Mode::Verify}};
    const std::map<std::string, const char*> help{
        {"solve", "value functions, emissions and steady state"},
        {"simulate", "solve, then integrate the equilibrium dynamics and payoffs"},
        {"verify", "solve, then run invariant, payoff, deviation and expectation checks"}};
    for (const auto& [name, mode] : modes) {
        auto* sub = app.add_subcommand(name, help.at(name));
        sub->add_option("--scenario", scenario, "scenario file")->required()->check(CLI::ExistingFile);
        sub->add_option("--nx", opts.nx, "cells across the bounding box in x")->check(CLI::PositiveNumber);
        sub->add_option("--ny", opts.ny, "cells across the bounding box in y")->check(CLI::PositiveNumber);
        sub->add_option("--tol", opts.tol, "linear solver relative residual tolerance");
        sub->add_option("--out", out, "output directory")->capture_default_str();
        sub->add_option("--format", opts.format, "field file format")->check(CLI::IsMember({"csv", "vtk"}));
        sub->add_option("--T", opts.T, "simulation horizon");
        sub->add_option("--dt", opts.dt, "time step");
        sub->final_callback([&opts, mode = mode] { opts.mode = mode; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : tbpgame::exit_input;
    }
    opts.out = out;
    return tbpgame::run(scenario, opts, std::cout, std::cerr);
}
