#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace tbpgame;
using namespace tbpgame::testing;

namespace {

std::string minimal(const std::string& phi = "1") {
    return R"({"name": "m", "domain": [[0, 0, 1, 1]], "grid": {"nx": 4, "ny": 4},
               "regions": [[[0, 0, 1, 1]]],
               "coefficients": {"k": 1, "c": 0.5, "rho": 0.01, "phi": [)" +
           phi + R"(]},
               "boundary": [{"alpha": 0}]})";
}

std::string error_of(const std::string& text) {
    try {
        parse_scenario_text(text);
    } catch (const InputError& e) {
        return e.what();
    }
    return {};
}

Scenario random_scenario(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> pos(0.01, 5.0), any(-5.0, 5.0);
    std::uniform_int_distribution<int> cells(2, 12);
    Scenario s;
    s.name = "random";
    s.description = "generated";
    const int n = 2 * cells(rng);
    s.domain = {{0, 0, 1, 1}};
    s.nx = n;
    s.ny = n;
    const double cut = static_cast<double>(std::uniform_int_distribution<int>(1, n - 1)(rng)) / n;
    s.regions = {{{0, 0, cut, 1}}, {{cut, 0, 1, 1}}};
    s.k = pos(rng);
    s.c = pos(rng);
    s.rho = pos(rng);
    s.phi = {pos(rng), pos(rng)};
    s.boundary.rules.push_back({{Side::West, 0.0, std::make_pair(0.0, 1.0)}, {pos(rng), false}});
    s.boundary.rules.push_back({{}, {pos(rng), false}});
    if (rng() % 2) s.adjoint_boundary = BoundarySpec{{BoundaryRule{{}, {pos(rng), true}}}};
    s.convection.fallback = {any(rng), any(rng)};
    ConvectionPiece piece;
    piece.value = {any(rng), any(rng)};
    piece.where.push_back({Rect{0, 0, cut, 1}, {HalfPlane{any(rng), any(rng), any(rng), HalfPlane::Relation::GreaterEqual}}});
    s.convection.pieces.push_back(piece);
    s.simulation.T = 10.0 * pos(rng);
    s.simulation.dt = 0.01 * pos(rng);
    s.simulation.deviation_scales = {pos(rng), pos(rng)};
    s.simulation.deviation_players = {1};
    s.output_format = rng() % 2 ? "csv" : "vtk";
    s.expectations.push_back({"symmetric", {{"player", 1}, {"axis", "y"}, {"line", 0.5}}});
    return s;
}

}

TEST(Scenario, RoundTripBundled) {
    for (const char* name : {"isolated", "example1", "example2", "example3", "example4", "example5", "example6"}) {
        const Scenario s = load(name);
        EXPECT_EQ(parse_scenario_text(serialize_scenario(s)), s) << name;
    }
}

TEST(Scenario, RoundTripRandom) {
    std::mt19937_64 rng(12345);
    for (int k = 0; k < 200; ++k) {
        const Scenario s = random_scenario(rng);
        const std::string text = serialize_scenario(s);
        const Scenario back = parse_scenario_text(text);
        ASSERT_EQ(back, s) << text;
        EXPECT_EQ(serialize_scenario(back), text);
    }
}

TEST(Scenario, ExampleOneContents) {
    const Scenario s = load("example1");
    EXPECT_EQ(s.players(), 2);
    EXPECT_TRUE(s.convection.is_zero());
    const Problem pb = build_problem(s);
    for (const auto& r : s.boundary.resolve(pb.grid)) EXPECT_EQ(r.alpha, 0.0);
}

TEST(Scenario, ExampleSixContents) {
    const Scenario s = load("example6");
    const Problem pb = build_problem(s);
    const auto bc = s.boundary.resolve(pb.grid);
    for (std::size_t k = 0; k < bc.size(); ++k) {
        const auto& seg = pb.grid.segments()[k];
        const bool robin = seg.side == Side::West && seg.line == 0.0;
        EXPECT_EQ(bc[k].alpha, robin ? 1.0 : 0.0);
    }
    ASSERT_TRUE(s.adjoint_boundary);
    for (int c = 0; c < static_cast<int>(pb.grid.size()); ++c) {
        const Vec2 p = pb.grid.center(c);
        const Vec2 b = s.convection.at(p.x, p.y);
        EXPECT_TRUE((b == Vec2{4, 0}) || (b == Vec2{0, 4}));
    }
    EXPECT_EQ(s.convection.at(0.25, 0.25), (Vec2{4, 0}));
    EXPECT_EQ(s.convection.at(0.75, 0.75), (Vec2{0, 4}));
    EXPECT_EQ(s.convection.at(0.6, 0.1), (Vec2{4, 0}));
    EXPECT_EQ(s.convection.at(0.9, 0.4), (Vec2{0, 4}));
    EXPECT_EQ(s.convection.at(0.6, 1.6), (Vec2{0, 4}));
    EXPECT_EQ(s.convection.at(0.9, 1.9), (Vec2{4, 0}));
    EXPECT_EQ(s.convection.at(1.25, 1.75), (Vec2{4, 0}));
}

TEST(Scenario, NegativePhiRejected) {
    const std::string e = error_of(minimal("-1"));
    EXPECT_NE(e.find("φ must be positive"), std::string::npos) << e;
}

TEST(Scenario, SyntaxErrorHasLocation) {
    std::string text = minimal();
    text.insert(text.find("\"grid\""), ",");
    const std::string e = error_of(text);
    EXPECT_NE(e.find("line"), std::string::npos) << e;
}

TEST(Scenario, FieldErrorsNamePath) {
    std::string t = minimal();
    t.replace(t.find("\"nx\": 4"), 7, "\"nx\": 4.5");
    EXPECT_NE(error_of(t).find("grid.nx"), std::string::npos);

    t = minimal();
    t.replace(t.find("\"rho\": 0.01"), 11, "\"rho\": 0");
    EXPECT_NE(error_of(t).find("ρ must be positive"), std::string::npos);

    t = minimal();
    t.replace(t.find("{\"alpha\": 0}"), 12, "{\"alpha\": 0, \"P_b\": 2}");
    EXPECT_NE(error_of(t).find("boundary[0].P_b"), std::string::npos);

    t = minimal();
    t.replace(t.find("{\"alpha\": 0}"), 12, "{\"alpha\": 0, \"convective_correction\": true}");
    EXPECT_NE(error_of(t).find("convective_correction"), std::string::npos);

    t = minimal();
    t.replace(t.find("\"regions\": [[[0, 0, 1, 1]]]"), 27, "\"regions\": [[[0, 0, 0.5, 1]]]");
    EXPECT_FALSE(error_of(t).empty());

    t = minimal();
    t.erase(t.rfind(',', t.find("\"boundary\"")));
    t += "}";
    EXPECT_NE(error_of(t).find("'boundary': missing"), std::string::npos) << error_of(t);
}

TEST(Scenario, MissingFile) {
    EXPECT_THROW(parse_scenario("/nonexistent/scenario.json"), InputError);
}

TEST(Scenario, ScalarPhiBroadcasts) {
    std::string t = minimal();
    t.replace(t.find("\"phi\": [1]"), 10, "\"phi\": 2");
    EXPECT_EQ(parse_scenario_text(t).phi, std::vector<double>{2.0});
}
