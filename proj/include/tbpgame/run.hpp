#pragma once

// solve / simulate / verify drivers behind the command-line tool.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "tbpgame/assembly.hpp"
#include "tbpgame/diagnostics.hpp"
#include "tbpgame/equilibrium.hpp"
#include "tbpgame/error.hpp"
#include "tbpgame/field_io.hpp"
#include "tbpgame/scenario.hpp"
#include "tbpgame/simulation.hpp"

namespace tbpgame {

enum class Mode { Solve, Simulate, Verify };

enum ExitCode : int { exit_ok = 0, exit_solver = 1, exit_verification = 2, exit_input = 3 };

struct RunOptions {
    Mode mode = Mode::Solve;
    std::optional<int> nx, ny;
    std::optional<double> tol;
    std::optional<std::string> format;
    std::optional<double> T, dt;
    std::filesystem::path out = "out";
};

/// Grid, format and time-step overrides from the command line.
inline void apply_overrides(Scenario& s, const RunOptions& o) {
    if (o.nx) s.nx = *o.nx;
    if (o.ny) s.ny = *o.ny;
    if (o.format) s.output_format = *o.format;
    if (o.T) s.simulation.T = *o.T;
    if (o.dt) s.simulation.dt = *o.dt;
    validate_scenario(s);
}

inline SolverOptions solver_options(const RunOptions& o) {
    SolverOptions so;
    if (o.tol) {
        if (!(*o.tol > 0.0)) throw InputError("--tol must be positive");
        so.tol = *o.tol;
    }
    return so;
}

// ---------------------------------------------------------------------------
// Summary

struct PlayerSummary {
    int player = 0;  ///< 1-based
    double w = 0.0;
    double mean_u = 0.0;
    double max_u = 0.0;
    Vec2 argmax;
    double mean_P = 0.0;
};

inline std::vector<PlayerSummary> summarize(const Problem& pb, const EquilibriumSolution& eq) {
    std::vector<PlayerSummary> out;
    for (int i = 0; i < pb.players(); ++i) {
        const Field& u = eq.players[i].u;
        const int c = region_argmax(u, pb.partition, i);
        out.push_back({i + 1, eq.players[i].w, region_mean(u, pb.partition, i), u[c], pb.grid.center(c),
                       region_mean(eq.steady_state, pb.partition, i)});
    }
    return out;
}

inline void write_summary(std::ostream& os, const std::vector<PlayerSummary>& rows) {
    os << "player,w,mean_u,max_u,argmax_x,argmax_y,mean_Pss\n";
    for (const auto& r : rows)
        os << r.player << ',' << format_double(r.w) << ',' << format_double(r.mean_u) << ','
           << format_double(r.max_u) << ',' << format_double(r.argmax.x) << ',' << format_double(r.argmax.y) << ','
           << format_double(r.mean_P) << '\n';
}

// ---------------------------------------------------------------------------
// Checks shared by verify and the test suites

/// max over `pairs` random field pairs of |<A p, v> - <p, A* v>| / sum_k |(A p)_k v_k| vol.
inline double adjoint_identity_error(const Problem& pb, int pairs, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const auto n = static_cast<Eigen::Index>(pb.primal.size());
    const double vol = pb.cell_volume();
    double worst = 0.0;
    for (int k = 0; k < pairs; ++k) {
        Field p(n), v(n);
        for (Eigen::Index c = 0; c < n; ++c) p[c] = dist(rng);
        for (Eigen::Index c = 0; c < n; ++c) v[c] = dist(rng);
        const Field Ap = pb.primal.matrix * p;
        const Field Av = pb.adjoint.matrix * v;
        const double lhs = inner(Ap, v, vol);
        const double rhs = inner(p, Av, vol);
        const double scale = std::max((Ap.cwiseProduct(v)).cwiseAbs().sum(), (p.cwiseProduct(Av)).cwiseAbs().sum()) * vol;
        worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
    return worst;
}

/// Largest entry of |A*_direct - A_primal^T| relative to the largest entry,
/// with both built from their own boundary data.
inline double adjoint_consistency_error(const Problem& pb) {
    const SparseOperator primal = assemble_primal(pb.grid, pb.coeff, pb.convection, pb.boundary);
    const SparseOperator direct = pb.adjoint_boundary
                                      ? assemble_adjoint_direct(pb.grid, pb.coeff, pb.convection, *pb.adjoint_boundary)
                                      : pb.adjoint;
    const Eigen::SparseMatrix<double> diff = direct.matrix - Eigen::SparseMatrix<double>(primal.matrix.transpose());
    double dmax = 0.0, scale = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(diff, k); it; ++it) dmax = std::max(dmax, std::abs(it.value()));
    for (int k = 0; k < direct.matrix.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(direct.matrix, k); it; ++it)
            scale = std::max(scale, std::abs(it.value()));
    return scale > 0.0 ? dmax / scale : dmax;
}

inline CheckResult check_signs(const Problem& pb, const EquilibriumSolution& eq) {
    CheckResult r{"sign v<0 u>0", true, 0.0, 0.0, {}};
    double vmax = -std::numeric_limits<double>::infinity(), umin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < pb.players(); ++i) {
        vmax = std::max(vmax, eq.players[i].v.maxCoeff());
        for (int c : pb.partition.cells(i)) umin = std::min(umin, eq.players[i].u[c]);
    }
    r.passed = vmax < 0.0 && umin > 0.0;
    r.value = vmax;
    std::ostringstream os;
    os << "max v " << vmax << " min u " << umin;
    r.detail = os.str();
    return r;
}

/// Payoffs of all players along one trajectory.
inline std::vector<PayoffReport> payoffs(const Problem& pb, const EquilibriumSolution& eq, const Trajectory& tr) {
    std::vector<PayoffReport> out;
    for (int i = 0; i < pb.players(); ++i)
        out.push_back(discounted_payoff(i, tr, eq.players[i].u, pb.partition, pb.coeff.rho, pb.coeff.phi[i],
                                        pb.cell_volume()));
    return out;
}

inline SimulationOptions value_probes(const EquilibriumSolution& eq, const SolverOptions& so) {
    SimulationOptions opts;
    opts.solver = so;
    for (const auto& p : eq.players) opts.probes.push_back(p.v);
    return opts;
}

/// e^{-rho t} |V_i(P(t))| along a trajectory recorded with value_probes.
inline std::vector<double> discounted_values(const Trajectory& tr, const EquilibriumSolution& eq, int i, double rho) {
    std::vector<double> out;
    out.reserve(tr.times.size());
    for (std::size_t n = 0; n < tr.times.size(); ++n)
        out.push_back(std::exp(-rho * tr.times[n]) * std::abs(eq.players[i].w + tr.probe_values[n][i]));
    return out;
}

/// Transversality on a trajectory from P0 recorded with value_probes:
/// e^{-rho t}|V_i(P(t))| non-increasing for t >= t_settle and below
/// `fraction` |V_i(P0)| at the horizon.
inline CheckResult check_transversality(const Trajectory& tr, const EquilibriumSolution& eq, int i, double rho,
                                        double vol, double t_settle, double fraction) {
    const auto d = discounted_values(tr, eq, i, rho);
    bool decreasing = true;
    for (std::size_t n = 1; n < d.size(); ++n)
        if (tr.times[n - 1] >= t_settle && d[n] > d[n - 1]) decreasing = false;
    const double v0 = std::abs(eq.players[i].w + tr.probe_values.front()[i]);
    const double ratio = d.back() / v0;
    const double bound = std::exp(-rho * tr.horizon()) *
                         (std::abs(eq.players[i].w) + std::abs(inner(eq.players[i].v, eq.steady_state, vol))) * 1.01;
    std::ostringstream os;
    os << "ratio " << ratio << (decreasing ? "" : " not decreasing") << " bound " << d.back() << " < " << bound;
    return {"transversality player " + std::to_string(i + 1), decreasing && ratio < fraction && d.back() < bound,
            ratio, fraction, os.str()};
}

// ---------------------------------------------------------------------------
// Drivers

struct RunContext {
    Scenario scenario;
    RunOptions options;
    Problem problem;
    EquilibriumSolution solution;
};

inline std::string field_ext(const Scenario& s) { return s.output_format == "vtk" ? ".vtk" : ".csv"; }

inline FieldFormat field_format(const Scenario& s) { return s.output_format == "vtk" ? FieldFormat::Vtk : FieldFormat::Csv; }

inline void write_solution(const RunContext& ctx) {
    std::filesystem::create_directories(ctx.options.out);
    const auto& pb = ctx.problem;
    const auto fmt = field_format(ctx.scenario);
    const std::string ext = field_ext(ctx.scenario);
    for (int i = 0; i < pb.players(); ++i) {
        const std::string id = std::to_string(i + 1);
        write_field(ctx.solution.players[i].v, pb.grid, fmt, ctx.options.out / ("v_" + id + ext), "v_" + id);
        write_field(ctx.solution.players[i].u, pb.grid, fmt, ctx.options.out / ("u_" + id + ext), "u_" + id);
    }
    write_field(ctx.solution.steady_state, pb.grid, fmt, ctx.options.out / ("P_ss" + ext), "P_ss");
    std::ofstream os(ctx.options.out / "summary.csv");
    write_summary(os, summarize(pb, ctx.solution));
}

inline RunContext prepare(const std::filesystem::path& scenario_path, const RunOptions& o) {
    Scenario s = parse_scenario(scenario_path);
    apply_overrides(s, o);
    Problem pb = build_problem(s);
    EquilibriumSolution eq = solve_equilibrium(pb, solver_options(o));
    return {std::move(s), o, std::move(pb), std::move(eq)};
}

inline void write_trajectory(std::ostream& os, const Trajectory& tr, const EquilibriumSolution& eq, double rho) {
    const std::size_t J = eq.players.size();
    const std::size_t stride = std::max<std::size_t>(1, (tr.times.size() + 1999) / 2000);
    os << "t";
    for (std::size_t i = 0; i < J; ++i) os << ",mean_P_" << i + 1;
    for (std::size_t i = 0; i < J; ++i) os << ",discounted_V_" << i + 1;
    os << '\n';
    for (std::size_t n = 0; n < tr.times.size(); ++n) {
        if (n % stride != 0 && n + 1 != tr.times.size()) continue;
        os << format_double(tr.times[n]);
        for (std::size_t i = 0; i < J; ++i) os << ',' << format_double(tr.region_means[n][i]);
        for (std::size_t i = 0; i < J; ++i)
            os << ',' << format_double(std::exp(-rho * tr.times[n]) * (eq.players[i].w + tr.probe_values[n][i]));
        os << '\n';
    }
}

/// simulate: trajectory from P0 = 0 plus payoffs from 0 and P_ss.
inline void run_simulate(const RunContext& ctx, std::ostream& log) {
    const auto& pb = ctx.problem;
    const auto& eq = ctx.solution;
    const auto so = solver_options(ctx.options);
    const double T = ctx.scenario.simulation.T, dt = ctx.scenario.simulation.dt;
    const Field zero = Field::Zero(pb.primal.size());

    const Trajectory from_zero = simulate(pb.primal, pb.partition, zero, eq.emissions(), T, dt, value_probes(eq, so));
    const Trajectory from_ss =
        simulate(pb.primal, pb.partition, eq.steady_state, eq.emissions(), T, dt, value_probes(eq, so));
    {
        std::ofstream os(ctx.options.out / "trajectory.csv");
        write_trajectory(os, from_zero, eq, pb.coeff.rho);
    }
    std::ofstream os(ctx.options.out / "payoff.csv");
    os << "player,initial,J,V,rel_error,tail_residual\n";
    const std::pair<const char*, const Trajectory*> runs[] = {{"zero", &from_zero}, {"steady", &from_ss}};
    for (const auto& [label, tr] : runs) {
        const auto J = payoffs(pb, eq, *tr);
        for (int i = 0; i < pb.players(); ++i) {
            const double V = value_function(eq.players[i].w, eq.players[i].v, tr->snapshots.front(), pb.cell_volume());
            os << i + 1 << ',' << label << ',' << format_double(J[i].value) << ',' << format_double(V) << ','
               << format_double(std::abs(J[i].value - V) / std::abs(V)) << ',' << format_double(J[i].tail_residual)
               << '\n';
            if (J[i].tail_warning)
                log << "warning: player " << i + 1 << " tail residual " << J[i].tail_residual
                    << " (terminal state not stationary)\n";
        }
    }
}

/// Solves a reference scenario named by a compare_means expectation,
/// relative to the directory of the scenario being verified.
inline ReferenceSolver reference_solver(const RunContext& ctx) {
    auto cache = std::make_shared<std::map<std::string, EquilibriumSolution>>();
    const auto base = ctx.scenario.source.parent_path();
    const RunOptions o = ctx.options;
    return [cache, base, o](const std::string& name) -> EquilibriumSolution {
        auto it = cache->find(name);
        if (it != cache->end()) return it->second;
        Scenario s = parse_scenario(base / name);
        apply_overrides(s, o);
        EquilibriumSolution eq = solve_equilibrium(build_problem(s), solver_options(o));
        return cache->emplace(name, std::move(eq)).first->second;
    };
}

/// Runs every invariant, oracle and expectation check.
inline std::vector<CheckResult> run_checks(const RunContext& ctx, std::ostream& log) {
    const auto& pb = ctx.problem;
    const auto& eq = ctx.solution;
    const auto so = solver_options(ctx.options);
    const auto& sim = ctx.scenario.simulation;
    const double vol = pb.cell_volume();
    std::vector<CheckResult> out;
    auto add = [&](CheckResult r) {
        log << (r.passed ? "PASS " : "FAIL ") << r.name << "  " << r.detail << '\n';
        out.push_back(std::move(r));
    };

    {
        const double e = adjoint_identity_error(pb, 20, 20240601);
        std::ostringstream os;
        os << "max relative defect " << e;
        add({"adjoint identity", e <= 1e-13, e, 1e-13, os.str()});
    }
    {
        const double e = adjoint_consistency_error(pb);
        std::ostringstream os;
        os << "max |A*_direct - A^T| / max|A*| = " << e;
        add({"direct adjoint vs transpose", e <= 1e-12, e, 1e-12, os.str()});
    }
    add(check_signs(pb, eq));

    const Field zero = Field::Zero(pb.primal.size());
    const Trajectory from_zero = simulate(pb.primal, pb.partition, zero, eq.emissions(), sim.T, sim.dt, value_probes(eq, so));
    {
        const double scale = eq.steady_state.cwiseAbs().maxCoeff();
        const double e = (from_zero.terminal - eq.steady_state).cwiseAbs().maxCoeff() / scale;
        std::ostringstream os;
        os << "||P(T) - P_ss|| / ||P_ss|| = " << e;
        add({"steady-state agreement", e <= 1e-4, e, 1e-4, os.str()});
    }
    const auto J0 = payoffs(pb, eq, from_zero);
    const Trajectory from_ss =
        simulate(pb.primal, pb.partition, eq.steady_state, eq.emissions(), sim.T, sim.dt, value_probes(eq, so));
    const auto Jss = payoffs(pb, eq, from_ss);
    for (int i = 0; i < pb.players(); ++i) {
        const double V0 = eq.players[i].w;
        const double Vss = value_function(eq.players[i].w, eq.players[i].v, eq.steady_state, vol);
        const double e0 = std::abs(J0[i].value - V0) / std::abs(V0);
        const double ess = std::abs(Jss[i].value - Vss) / std::abs(Vss);
        std::ostringstream os;
        os << "J(0) " << J0[i].value << " V(0) " << V0 << " J(Pss) " << Jss[i].value << " V(Pss) " << Vss;
        add({"payoff vs value player " + std::to_string(i + 1), e0 <= 0.01 && ess <= 0.01, std::max(e0, ess), 0.01,
             os.str()});
    }

    std::vector<int> deviators = sim.deviation_players;
    if (deviators.empty())
        for (int i = 1; i <= pb.players(); ++i) deviators.push_back(i);
    for (int p : deviators) {
        const int i = p - 1;
        for (double s : sim.deviation_scales) {
            SimulationOptions opts;
            opts.solver = so;
            const double Jd = deviation_payoff(i, s, pb, eq, zero, sim.T, sim.dt, opts).value;
            std::ostringstream os, name;
            os << "J(s) " << Jd << " J(1) " << J0[i].value;
            name << "nash deviation player " << p << " s=" << s;
            add({name.str(), Jd < J0[i].value, J0[i].value - Jd, 0.0, os.str()});
        }
    }

    for (int i = 0; i < pb.players(); ++i)
        add(check_transversality(from_zero, eq, i, pb.coeff.rho, vol, 0.1 * sim.T, 0.2));

    const ReferenceSolver ref = reference_solver(ctx);
    for (const auto& e : ctx.scenario.expectations) add(check_expectation(e, pb, eq, ref));
    return out;
}

inline void write_checks(std::ostream& os, const std::vector<CheckResult>& checks) {
    os << "check,status,value,limit\n";
    for (const auto& c : checks)
        os << '"' << c.name << "\"," << (c.passed ? "PASS" : "FAIL") << ',' << format_double(c.value) << ','
           << format_double(c.limit) << '\n';
}

inline void write_report(const std::filesystem::path& path, const std::string& status, const std::string& message,
                         const std::vector<CheckResult>& checks) {
    nlohmann::json j;
    j["status"] = status;
    if (!message.empty()) j["message"] = message;
    j["checks"] = nlohmann::json::array();
    for (const auto& c : checks)
        j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"limit", c.limit},
                               {"detail", c.detail}});
    std::ofstream os(path);
    os << j.dump(2) << '\n';
}

/// Full CLI behaviour; returns the process exit code.
inline int run(const std::filesystem::path& scenario_path, const RunOptions& o, std::ostream& log, std::ostream& err) {
    std::vector<CheckResult> checks;
    auto fail = [&](int code, const char* status, const std::string& msg) {
        err << "error: " << msg << '\n';
        std::error_code ec;
        std::filesystem::create_directories(o.out, ec);
        if (!ec) write_report(o.out / "report.json", status, msg, checks);
        return code;
    };
    try {
        const RunContext ctx = prepare(scenario_path, o);
        write_solution(ctx);
        write_summary(log, summarize(ctx.problem, ctx.solution));
        if (o.mode == Mode::Simulate) run_simulate(ctx, log);
        if (o.mode == Mode::Verify) {
            checks = run_checks(ctx, log);
            {
                std::ofstream os(o.out / "verify.csv");
                write_checks(os, checks);
            }
            int failed = 0;
            for (const auto& c : checks) failed += c.passed ? 0 : 1;
            write_report(o.out / "report.json", failed ? "verification_failed" : "ok", {}, checks);
            log << checks.size() - failed << '/' << checks.size() << " checks passed\n";
            if (failed) return exit_verification;
        }
        return exit_ok;
    } catch (const InputError& e) {
        return fail(exit_input, "input_error", e.what());
    } catch (const SolverError& e) {
        return fail(exit_solver, "solver_failure", e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(exit_input, "io_error", e.what());
    } catch (const Error& e) {
        return fail(exit_solver, "error", e.what());
    }
}

} // namespace tbpgame
