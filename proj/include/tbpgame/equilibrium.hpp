#pragma once

// Stationary feedback Nash equilibrium with affine value functions
//   V_i(P) = w_i + <v_i, P>.
// Each v_i solves the adjoint elliptic problem (A* - rho) v_i = phi_i 1_i,
// the strategies are u_i = -1/v_i on the player's own region, and the
// steady-state stock solves A P + sum_j u_j 1_j = 0.

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tbpgame/assembly.hpp"
#include "tbpgame/error.hpp"
#include "tbpgame/geometry.hpp"
#include "tbpgame/linsolve.hpp"

namespace tbpgame {

/// Everything needed to compute and simulate an equilibrium.
struct Problem {
    Grid grid;
    RegionPartition partition;
    Coefficients coeff;
    ConvectionField convection;
    BoundarySpec boundary;
    std::optional<BoundarySpec> adjoint_boundary;
    SparseOperator primal;
    SparseOperator adjoint;

    int players() const { return partition.players(); }
    double cell_volume() const { return grid.cell_volume(); }
};

/// Assembles both operators. With explicit adjoint boundary data the adjoint
/// is assembled directly and the primal is its transpose; otherwise the
/// adjoint is the transpose of the primal.
inline Problem make_problem(Grid grid, RegionPartition partition, Coefficients coeff, ConvectionField convection,
                            BoundarySpec boundary, std::optional<BoundarySpec> adjoint_boundary = std::nullopt) {
    coeff.validate(grid, partition.players());
    Problem p{std::move(grid), std::move(partition), std::move(coeff), std::move(convection),
              std::move(boundary), std::move(adjoint_boundary), {}, {}};
    if (p.adjoint_boundary) {
        p.boundary.resolve(p.grid);  // coverage check on the primal data too
        p.adjoint = assemble_adjoint_direct(p.grid, p.coeff, p.convection, *p.adjoint_boundary);
        p.primal = assemble_adjoint(p.adjoint);
    } else {
        p.primal = assemble_primal(p.grid, p.coeff, p.convection, p.boundary);
        p.adjoint = assemble_adjoint(p.primal);
    }
    return p;
}

struct PlayerSolution {
    Field v;  ///< adjoint / value gradient, negative everywhere
    Field u;  ///< emissions, positive on the player's region, zero elsewhere
    double w = 0.0;
    SolveReport report;
};

struct EquilibriumSolution {
    std::vector<PlayerSolution> players;
    Field steady_state;
    SolveReport steady_report;

    std::vector<Field> emissions() const {
        std::vector<Field> out;
        for (const auto& p : players) out.push_back(p.u);
        return out;
    }
};

/// Factorization of the shifted adjoint  A* - rho I, shared by all players.
class ValueSolver {
public:
    ValueSolver(const SparseOperator& adjoint, double rho, SolverOptions opts = {})
        : solver_(shifted(adjoint, rho), opts) {}

    /// v solving (A* - rho) v = load; throws SignViolation unless v < 0.
    std::pair<Field, SolveReport> solve(const Field& load) const {
        if (!(load.minCoeff() >= 0.0) || !(load.maxCoeff() > 0.0))
            throw InputError("player value: load must be non-negative and nonzero (φ must be positive)");
        auto [v, rep] = solver_.solve(load);
        for (Eigen::Index c = 0; c < v.size(); ++c) {
            if (!(v[c] < 0.0)) {
                std::ostringstream os;
                os << "player value: v = " << v[c] << " >= 0 at cell " << c
                   << " (maximum principle violated; check the convection discretization)";
                throw SignViolation(os.str());
            }
        }
        return {std::move(v), rep};
    }

private:
    static Eigen::SparseMatrix<double> shifted(const SparseOperator& adjoint, double rho) {
        if (!(rho > 0.0)) throw InputError("ρ must be positive");
        Eigen::SparseMatrix<double> id(adjoint.size(), adjoint.size());
        id.setIdentity();
        Eigen::SparseMatrix<double> m = adjoint.matrix - rho * id;
        m.makeCompressed();
        return m;
    }

    LinearSolver solver_;
};

inline std::pair<Field, SolveReport> solve_player_value(const SparseOperator& adjoint, double rho,
                                                        const Field& load, SolverOptions opts = {}) {
    return ValueSolver(adjoint, rho, opts).solve(load);
}

/// u_i = -1/v_i on the cells of `player`, zero elsewhere.
inline Field emissions_from_value(const Field& v, const RegionPartition& partition, int player) {
    Field u = Field::Zero(v.size());
    for (int c : partition.cells(player)) {
        if (!(v[c] < 0.0)) {
            std::ostringstream os;
            os << "emissions: v = " << v[c] << " is not negative at cell " << c << " of player " << player + 1;
            throw SignViolation(os.str());
        }
        u[c] = -1.0 / v[c];
    }
    return u;
}

/// w_i = (1/rho) [ int_{Omega_i} log u_i + sum_j int_{Omega_j} v_i u_j ]
/// (the second integral equals -sum_j int v_i / v_j since u_j = -1/v_j).
inline double compute_w(int player, const std::vector<Field>& values, const std::vector<Field>& emissions,
                        double rho, const RegionPartition& partition, double cell_volume) {
    const int J = partition.players();
    if (static_cast<int>(values.size()) <= player)
        throw InputError("compute_w: missing value field for player " + std::to_string(player + 1));
    if (static_cast<int>(emissions.size()) != J)
        throw InputError("compute_w: need emissions of all " + std::to_string(J) + " players");
    const Field& vi = values[player];
    double own = 0.0;
    for (int c : partition.cells(player)) own += std::log(emissions[player][c]);
    own *= cell_volume;
    double cross = 0.0;
    for (int j = 0; j < J; ++j) {
        double s = 0.0;
        for (int c : partition.cells(j)) s += vi[c] * emissions[j][c];
        cross += s * cell_volume;
    }
    return (own + cross) / rho;
}

/// P solving A P + sum_j u_j = 0.
inline std::pair<Field, SolveReport> steady_state_pollution(const SparseOperator& primal,
                                                            const std::vector<Field>& emissions,
                                                            SolverOptions opts = {}) {
    if (!primal.info.absorbing)
        throw SolverError("steady state: no steady state exists (alpha = 0 on the whole boundary and c = 0)");
    Field source = Field::Zero(primal.size());
    for (const auto& u : emissions) source += u;
    auto [P, rep] = LinearSolver(primal.matrix, opts).solve(-source);
    const double scale = P.size() ? P.cwiseAbs().maxCoeff() : 0.0;
    for (Eigen::Index c = 0; c < P.size(); ++c) {
        if (P[c] < -1e-12 * scale) {
            std::ostringstream os;
            os << "steady state: negative stock " << P[c] << " at cell " << c;
            throw SignViolation(os.str());
        }
    }
    return {std::move(P), rep};
}

/// V_i(P) = w_i + <v_i, P>.
inline double value_function(double w, const Field& v, const Field& P, double cell_volume) {
    if (v.size() != P.size()) throw InputError("value_function: field sizes differ");
    return w + inner(v, P, cell_volume);
}

inline EquilibriumSolution solve_equilibrium(const Problem& problem, SolverOptions opts = {}) {
    const int J = problem.players();
    const double vol = problem.cell_volume();
    const ValueSolver values(problem.adjoint, problem.coeff.rho, opts);

    EquilibriumSolution sol;
    sol.players.resize(J);
    for (int i = 0; i < J; ++i) {
        auto [v, rep] = values.solve(indicator_load(problem.partition, i, problem.coeff.phi[i]));
        sol.players[i].u = emissions_from_value(v, problem.partition, i);
        sol.players[i].v = std::move(v);
        sol.players[i].report = rep;
    }
    std::vector<Field> vs, us;
    for (const auto& p : sol.players) {
        vs.push_back(p.v);
        us.push_back(p.u);
    }
    for (int i = 0; i < J; ++i) sol.players[i].w = compute_w(i, vs, us, problem.coeff.rho, problem.partition, vol);
    auto [P, rep] = steady_state_pollution(problem.primal, us, opts);
    sol.steady_state = std::move(P);
    sol.steady_report = rep;
    return sol;
}

} // namespace tbpgame
