#pragma once

#include <filesystem>
#include <string>

#include "tbpgame/tbpgame.hpp"

namespace tbpgame::testing {

inline std::filesystem::path scenario_path(const std::string& name) {
    return std::filesystem::path(TBPGAME_SCENARIO_DIR) / (name + ".json");
}

inline Scenario load(const std::string& name) { return parse_scenario(scenario_path(name)); }

inline Problem problem(const std::string& name) { return build_problem(load(name)); }

inline Grid unit_square(int n) { return build_grid({{0, 0, 1, 1}}, n, n); }

/// Single region covering the grid, uniform coefficients.
inline Problem single_region(const Grid& grid, double k, double c, double rho, double phi, const BoundarySpec& bc,
                             const ConvectionField& conv = {}) {
    std::vector<Rect> whole = grid.domain();
    RegionPartition part = partition_regions(grid, {whole}, 1);
    return make_problem(grid, std::move(part), Coefficients::uniform(grid, k, c, rho, {phi}), conv, bc);
}

inline Field random_field(Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Field f(n);
    for (Eigen::Index i = 0; i < n; ++i) f[i] = d(rng);
    return f;
}

} // namespace tbpgame::testing
