#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace tbpgame;
using namespace tbpgame::testing;

namespace {

constexpr double c = 0.5, rho = 0.01;

// v = -phi/(c + rho), u = (c + rho)/phi, P = u/c and
// w = (1/rho)(log u + v u) = (1/rho)(log u - 1) for a single isolated region.
const double v_exact = -1.0 / (c + rho);
const double u_exact = c + rho;
const double P_exact = u_exact / c;
const double w_exact = (std::log(u_exact) - 1.0) / rho;

}

class Isolated : public ::testing::TestWithParam<int> {};

TEST_P(Isolated, ClosedFormConstants) {
    const Problem pb = single_region(unit_square(GetParam()), 1.0, c, rho, 1.0, BoundarySpec::uniform(0.0));
    const auto eq = solve_equilibrium(pb);
    const auto& p = eq.players[0];
    for (Eigen::Index k = 0; k < p.v.size(); ++k) {
        EXPECT_NEAR(p.v[k], v_exact, 1e-8 * std::abs(v_exact));
        EXPECT_NEAR(p.u[k], u_exact, 1e-8 * u_exact);
        EXPECT_NEAR(eq.steady_state[k], P_exact, 1e-8 * P_exact);
    }
    EXPECT_NEAR(p.w, w_exact, 1e-8 * std::abs(w_exact));
    EXPECT_NEAR(value_function(p.w, p.v, Field::Zero(p.v.size()), pb.cell_volume()), p.w, 0.0);
    EXPECT_NEAR(value_function(p.w, p.v, eq.steady_state, pb.cell_volume()), w_exact + v_exact * P_exact,
                1e-8 * std::abs(w_exact));
}

INSTANTIATE_TEST_SUITE_P(Resolutions, Isolated, ::testing::Values(4, 10, 25));

TEST(Equilibrium, BundledIsolatedScenario) {
    const auto eq = solve_equilibrium(problem("isolated"));
    EXPECT_NEAR(eq.players[0].w, -167.33445532637, 1e-6);
    EXPECT_NEAR(eq.players[0].v.mean(), -1.96078431372549, 1e-10);
}

TEST(Equilibrium, ValueFunctionIsAffine) {
    const Problem pb = problem("example1");
    const auto eq = solve_equilibrium(pb);
    const Field P = random_field(pb.primal.size(), 1), Q = random_field(pb.primal.size(), 2);
    const auto& p = eq.players[0];
    const double vol = pb.cell_volume();
    EXPECT_NEAR(value_function(p.w, p.v, P + Q, vol) - value_function(p.w, p.v, Q, vol),
                value_function(p.w, p.v, P, vol) - p.w, 1e-10);
}

TEST(Equilibrium, SignsEverywhere) {
    for (const char* name : {"example1", "example2", "example3", "example4", "example5", "example6"}) {
        const Problem pb = problem(name);
        const auto eq = solve_equilibrium(pb);
        for (int i = 0; i < pb.players(); ++i) {
            EXPECT_LT(eq.players[i].v.maxCoeff(), 0.0) << name;
            for (int k = 0; k < static_cast<int>(pb.grid.size()); ++k) {
                if (pb.partition.region_of(k) == i)
                    EXPECT_GT(eq.players[i].u[k], 0.0);
                else
                    EXPECT_EQ(eq.players[i].u[k], 0.0);
            }
        }
        EXPECT_GE(eq.steady_state.minCoeff(), 0.0) << name;
    }
}

TEST(Equilibrium, ExampleOneSymmetry) {
    const Problem pb = problem("example1");
    const auto eq = solve_equilibrium(pb);
    EXPECT_NEAR(eq.players[0].w, eq.players[1].w, 1e-9 * std::abs(eq.players[0].w));
    const auto& v1 = eq.players[0].v;
    const auto ymirror = Reflection::across(Axis::Y, 0.5);
    double in1 = 0.0, in2 = 0.0;
    for (int k = 0; k < static_cast<int>(pb.grid.size()); ++k) {
        EXPECT_NEAR(v1[k], v1[mirror_cell(pb.grid, k, ymirror)], 1e-12);
        (pb.partition.region_of(k) == 0 ? in1 : in2) += std::abs(v1[k]);
    }
    EXPECT_GT(in1, in2);
    // Emissions along the middle row fall off away from the interface.
    const int j = pb.grid.ny() / 2;
    for (int i = 1; i < pb.grid.nx() / 2; ++i)
        EXPECT_GT(eq.players[0].u[pb.grid.index(i, j)], eq.players[0].u[pb.grid.index(i - 1, j)]);
}

TEST(Equilibrium, PlayerDecoupling) {
    Scenario s = load("example3");
    const auto base = solve_equilibrium(build_problem(s));
    s.phi[1] = 3.0;
    s.phi[3] = 0.25;
    const auto changed = solve_equilibrium(build_problem(s));
    EXPECT_EQ(base.players[0].v, changed.players[0].v);
    EXPECT_EQ(base.players[2].v, changed.players[2].v);
    EXPECT_NE(base.players[1].v, changed.players[1].v);
}

TEST(Equilibrium, EmissionsFromValue) {
    const Problem pb = problem("example1");
    Field v = Field::Constant(pb.primal.size(), -1.0);
    const Field u = emissions_from_value(v, pb.partition, 0);
    for (int k = 0; k < static_cast<int>(pb.grid.size()); ++k)
        EXPECT_EQ(u[k], pb.partition.region_of(k) == 0 ? 1.0 : 0.0);
    v[pb.partition.cells(0).front()] = 0.0;
    EXPECT_THROW(emissions_from_value(v, pb.partition, 0), SignViolation);
}

TEST(Equilibrium, ZeroEmissionsGiveZeroStock) {
    const Problem pb = problem("example2");
    const auto [P, rep] = steady_state_pollution(pb.primal, {Field::Zero(pb.primal.size())});
    EXPECT_EQ(P.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Equilibrium, NonAbsorbingHasNoSteadyState) {
    const Problem pb = single_region(unit_square(6), 1.0, 0.0, 0.01, 1.0, BoundarySpec::uniform(0.0));
    EXPECT_THROW(steady_state_pollution(pb.primal, {Field::Ones(pb.primal.size())}), SolverError);
    // The value problem still has a unique solution since rho > 0.
    EXPECT_NO_THROW(solve_player_value(pb.adjoint, 0.01, Field::Ones(pb.primal.size())));
}

TEST(Equilibrium, RejectsBadLoad) {
    const Problem pb = problem("example1");
    EXPECT_THROW(solve_player_value(pb.adjoint, 0.01, Field::Zero(pb.primal.size())), InputError);
    EXPECT_THROW(solve_player_value(pb.adjoint, 0.01, -Field::Ones(pb.primal.size())), InputError);
    EXPECT_THROW(solve_player_value(pb.adjoint, 0.0, Field::Ones(pb.primal.size())), InputError);
}

TEST(Equilibrium, ComputeWMatchesDefinition) {
    const Problem pb = problem("example3");
    const auto eq = solve_equilibrium(pb);
    const double vol = pb.cell_volume();
    for (int i = 0; i < pb.players(); ++i) {
        double own = 0.0, cross = 0.0;
        for (int k : pb.partition.cells(i)) own += std::log(-1.0 / eq.players[i].v[k]) * vol;
        for (int j = 0; j < pb.players(); ++j)
            for (int k : pb.partition.cells(j)) cross -= eq.players[i].v[k] / eq.players[j].v[k] * vol;
        EXPECT_NEAR(eq.players[i].w, (own + cross) / rho, 1e-9 * std::abs(eq.players[i].w));
    }
}
