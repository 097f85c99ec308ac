#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace tbpgame;
using namespace tbpgame::testing;

namespace {

struct Isolated {
    Problem pb = single_region(unit_square(8), 1.0, 0.5, 0.01, 1.0, BoundarySpec::uniform(0.0));
    EquilibriumSolution eq = solve_equilibrium(pb);
};

}

TEST(Simulate, ScalarStockCurve) {
    const Isolated s;
    double prev_err = 0.0;
    for (double dt : {0.02, 0.01}) {
        const auto tr = simulate(s.pb.primal, s.pb.partition, Field::Zero(64), s.eq.emissions(), 20.0, dt);
        double err = 0.0;
        for (std::size_t n = 0; n < tr.times.size(); ++n)
            err = std::max(err, std::abs(tr.region_means[n][0] - 1.02 * (1.0 - std::exp(-0.5 * tr.times[n]))));
        EXPECT_LT(err, 0.01 * dt / 0.01);
        if (prev_err > 0.0) EXPECT_NEAR(prev_err / err, 2.0, 0.2);
        prev_err = err;
    }
}

TEST(Simulate, SteadyStateIsFixed) {
    const Problem pb = problem("example4");
    const auto eq = solve_equilibrium(pb);
    const auto tr = simulate(pb.primal, pb.partition, eq.steady_state, eq.emissions(), 1.0, 0.1);
    EXPECT_LE((tr.terminal - eq.steady_state).cwiseAbs().maxCoeff(), 1e-9 * eq.steady_state.maxCoeff());
}

TEST(Simulate, FreeDecayIsMonotone) {
    const Problem pb = problem("example1");
    const Field P0 = random_field(pb.primal.size(), 4).cwiseAbs();
    SimulationOptions opts;
    opts.snapshot_stride = 10;
    const auto tr = simulate(pb.primal, pb.partition, P0, {}, 20.0, 0.05, opts);
    for (std::size_t n = 1; n < tr.times.size(); ++n) {
        EXPECT_LT(tr.region_means[n][0], tr.region_means[n - 1][0]);
        EXPECT_GT(tr.times[n], tr.times[n - 1]);
    }
    for (std::size_t n = 1; n < tr.snapshot_times.size(); ++n) EXPECT_GT(tr.snapshot_times[n], tr.snapshot_times[n - 1]);
    EXPECT_LT(tr.terminal.maxCoeff(), 1e-3);
}

TEST(Simulate, RejectsBadArguments) {
    const Problem pb = problem("example1");
    const Field P0 = Field::Zero(pb.primal.size());
    EXPECT_THROW(simulate(pb.primal, pb.partition, P0, {}, 1.0, 0.0), InputError);
    EXPECT_THROW(simulate(pb.primal, pb.partition, P0, {}, 0.001, 0.01), InputError);
    EXPECT_THROW(simulate(pb.primal, pb.partition, Field::Zero(3), {}, 1.0, 0.1), InputError);
}

TEST(Payoff, MatchesValueOnIsolatedRegion) {
    const Isolated s;
    const double vol = s.pb.cell_volume();
    for (const Field& P0 : {Field(Field::Zero(64)), s.eq.steady_state}) {
        const auto tr = simulate(s.pb.primal, s.pb.partition, P0, s.eq.emissions(), 200.0, 0.01);
        const auto J = discounted_payoff(0, tr, s.eq.players[0].u, s.pb.partition, 0.01, 1.0, vol);
        const double V = value_function(s.eq.players[0].w, s.eq.players[0].v, P0, vol);
        EXPECT_LE(std::abs(J.value - V) / std::abs(V), 0.01);
        EXPECT_FALSE(J.tail_warning);
    }
}

TEST(Payoff, ConstantIntegrand) {
    // phi = 0 and u = e: the running payoff is |Omega| for all t.
    const Isolated s;
    const auto tr = simulate(s.pb.primal, s.pb.partition, Field::Zero(64), s.eq.emissions(), 200.0, 0.01);
    const Field u = Field::Constant(64, std::exp(1.0));
    const auto J = discounted_payoff(0, tr, u, s.pb.partition, 0.01, 0.0, s.pb.cell_volume());
    EXPECT_NEAR(J.value, 1.0 / 0.01, 1e-6 * 100.0);
}

TEST(Payoff, TailWarningWhenFarFromSteady) {
    const Isolated s;
    const auto tr = simulate(s.pb.primal, s.pb.partition, Field::Zero(64), s.eq.emissions(), 1.0, 0.01);
    const auto J = discounted_payoff(0, tr, s.eq.players[0].u, s.pb.partition, 0.01, 1.0, s.pb.cell_volume());
    EXPECT_TRUE(J.tail_warning);
    EXPECT_GT(J.tail_residual, 0.0);
}

TEST(Payoff, ConvergesFirstOrderInDt) {
    const Isolated s;
    const double V = s.eq.players[0].w;
    std::vector<double> err;
    for (double dt : {0.04, 0.02, 0.01}) {
        const auto tr = simulate(s.pb.primal, s.pb.partition, Field::Zero(64), s.eq.emissions(), 200.0, dt);
        err.push_back(std::abs(
            discounted_payoff(0, tr, s.eq.players[0].u, s.pb.partition, 0.01, 1.0, s.pb.cell_volume()).value - V));
    }
    EXPECT_LT(err[1], err[0]);
    EXPECT_LT(err[2], err[1]);
}

TEST(Deviation, ScaledEmissionsLoseOnExampleOne) {
    const Problem pb = problem("example1");
    const auto eq = solve_equilibrium(pb);
    const Field P0 = Field::Zero(pb.primal.size());
    const double J1 = deviation_payoff(0, 1.0, pb, eq, P0, 200.0, 0.01).value;
    const auto tr = simulate(pb.primal, pb.partition, P0, eq.emissions(), 200.0, 0.01);
    EXPECT_EQ(J1, discounted_payoff(0, tr, eq.players[0].u, pb.partition, pb.coeff.rho, 1.0, pb.cell_volume()).value);
    for (double s : {0.5, 2.0}) EXPECT_LT(deviation_payoff(0, s, pb, eq, P0, 200.0, 0.01).value, J1) << s;
    EXPECT_THROW(deviation_payoff(0, 0.0, pb, eq, P0, 200.0, 0.01), InputError);
}
