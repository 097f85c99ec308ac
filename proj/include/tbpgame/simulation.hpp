#pragma once

// Time-domain oracle for the equilibrium: backward-Euler integration of the
// controlled dynamics and trapezoidal discounted payoffs with an analytic
// steady-state tail.

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "tbpgame/assembly.hpp"
#include "tbpgame/equilibrium.hpp"
#include "tbpgame/error.hpp"
#include "tbpgame/linsolve.hpp"

namespace tbpgame {

struct SimulationOptions {
    int snapshot_stride = 0;    ///< store P every n steps (0: initial and terminal only)
    std::vector<Field> probes;  ///< record <g, P(t)> for each g at every step
    SolverOptions solver;
};

struct Trajectory {
    double dt = 0.0;
    std::vector<double> times;                      ///< t_0 .. t_N
    std::vector<std::vector<double>> region_means;  ///< [step][player]
    std::vector<std::vector<double>> probe_values;  ///< [step][probe]
    std::vector<double> snapshot_times;
    std::vector<Field> snapshots;
    Field terminal;
    Field before_terminal;

    double horizon() const { return times.empty() ? 0.0 : times.back(); }

    /// max |dP/dt| at the horizon relative to max |P(T)|.
    double terminal_drift() const {
        const double scale = terminal.cwiseAbs().maxCoeff();
        const double rate = (terminal - before_terminal).cwiseAbs().maxCoeff() / dt;
        return scale > 0.0 ? rate / scale : rate;
    }
};

inline std::vector<double> region_means(const Field& P, const RegionPartition& partition) {
    std::vector<double> out(partition.players(), 0.0);
    for (int i = 0; i < partition.players(); ++i) {
        double s = 0.0;
        for (int c : partition.cells(i)) s += P[c];
        out[i] = s / static_cast<double>(partition.cells(i).size());
    }
    return out;
}

/// Backward-Euler trajectory of  dP/dt = A P + sum_j u_j  from P0 over [0, T].
inline Trajectory simulate(const SparseOperator& primal, const RegionPartition& partition, const Field& P0,
                           const std::vector<Field>& controls, double T, double dt,
                           const SimulationOptions& opts = {}) {
    if (!(dt > 0.0)) throw InputError("simulate: dt must be positive");
    if (!(T >= dt)) throw InputError("simulate: horizon must be at least one step");
    if (P0.size() != primal.size()) throw InputError("simulate: initial state has wrong size");
    const long steps = std::lround(T / dt);

    Field source = Field::Zero(primal.size());
    for (const auto& u : controls) {
        if (u.size() != primal.size()) throw InputError("simulate: control field has wrong size");
        source += u;
    }

    const ImplicitStepper stepper(primal, dt, opts.solver);
    Trajectory tr;
    tr.dt = dt;
    tr.times.reserve(steps + 1);
    tr.region_means.reserve(steps + 1);

    auto record = [&](long n, const Field& P) {
        const double t = static_cast<double>(n) * dt;
        tr.times.push_back(t);
        tr.region_means.push_back(region_means(P, partition));
        if (!opts.probes.empty()) {
            std::vector<double> pv;
            pv.reserve(opts.probes.size());
            for (const auto& g : opts.probes) pv.push_back(inner(g, P, primal.cell_volume));
            tr.probe_values.push_back(std::move(pv));
        }
        if (n == 0 || n == steps || (opts.snapshot_stride > 0 && n % opts.snapshot_stride == 0)) {
            tr.snapshot_times.push_back(t);
            tr.snapshots.push_back(P);
        }
    };

    Field P = P0;
    Field prev = P0;
    record(0, P);
    for (long n = 1; n <= steps; ++n) {
        prev = P;
        P = stepper.step(P, source);
        if (!P.allFinite()) {
            std::ostringstream os;
            os << "simulate: non-finite state at t = " << static_cast<double>(n) * dt;
            throw SolverError(os.str());
        }
        record(n, P);
    }
    tr.terminal = P;
    tr.before_terminal = prev;
    return tr;
}

struct PayoffReport {
    double value = 0.0;
    double horizon_part = 0.0;  ///< trapezoid over [0, T]
    double tail_part = 0.0;     ///< (e^{-rho T}/rho) * integrand at P(T)
    double tail_residual = 0.0; ///< estimated tail error from the terminal drift
    bool tail_warning = false;
};

/// J_i = int_0^inf e^{-rho t} int_{Omega_i} (log u_i - phi_i P) dx dt, with the
/// state frozen at P(T) beyond the horizon.
inline PayoffReport discounted_payoff(int player, const Trajectory& traj, const Field& u, const RegionPartition& partition,
                                      double rho, double phi, double cell_volume) {
    if (!(rho > 0.0)) throw InputError("discounted_payoff: ρ must be positive");
    if (traj.times.size() < 2) throw InputError("discounted_payoff: trajectory has no steps");
    double log_u = 0.0;
    for (int c : partition.cells(player)) {
        if (!(u[c] > 0.0)) throw InputError("discounted_payoff: emissions must be positive on the player's region");
        log_u += std::log(u[c]);
    }
    log_u *= cell_volume;
    const double area = partition.area(player);
    auto integrand = [&](std::size_t n) { return log_u - phi * area * traj.region_means[n][player]; };

    PayoffReport r;
    double prev = integrand(0);
    for (std::size_t n = 1; n < traj.times.size(); ++n) {
        const double cur = std::exp(-rho * traj.times[n]) * integrand(n);
        r.horizon_part += 0.5 * (traj.times[n] - traj.times[n - 1]) * (prev + cur);
        prev = cur;
    }
    const double T = traj.horizon();
    const std::size_t last = traj.times.size() - 1;
    r.tail_part = std::exp(-rho * T) / rho * integrand(last);
    r.value = r.horizon_part + r.tail_part;

    // A state still moving at rate m at T shifts the tail by about
    // phi * area * m * e^{-rho T} / rho^2.
    const double slope = (traj.region_means[last][player] - traj.region_means[last - 1][player]) /
                         (traj.times[last] - traj.times[last - 1]);
    r.tail_residual = std::abs(phi * area * slope) * std::exp(-rho * T) / (rho * rho);
    r.tail_warning = r.tail_residual > 1e-3 * std::max(std::abs(r.value), std::numeric_limits<double>::min());
    return r;
}

/// Payoff of `player` when it scales its equilibrium emissions by `scale`
/// while the others keep theirs.
inline PayoffReport deviation_payoff(int player, double scale, const Problem& problem,
                                     const EquilibriumSolution& eq, const Field& P0, double T, double dt,
                                     const SimulationOptions& opts = {}) {
    if (!(scale > 0.0)) throw InputError("deviation_payoff: scale must be positive");
    auto controls = eq.emissions();
    controls[player] *= scale;
    const Trajectory tr = simulate(problem.primal, problem.partition, P0, controls, T, dt, opts);
    return discounted_payoff(player, tr, controls[player], problem.partition, problem.coeff.rho,
                             problem.coeff.phi[player], problem.cell_volume());
}

} // namespace tbpgame
