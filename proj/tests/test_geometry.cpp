#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "support.hpp"

using namespace tbpgame;
using namespace tbpgame::testing;

namespace {

const std::vector<Rect> l_domain{{0, 0, 1, 0.5}, {0.5, 0, 1, 2}, {1, 1.5, 1.5, 2}};

}

TEST(Grid, UnitSquareCounts) {
    const Grid g = unit_square(10);
    EXPECT_EQ(g.size(), 100u);
    EXPECT_EQ(g.boundary_faces().size(), 40u);
    EXPECT_EQ(g.interior_faces().size(), 180u);
    EXPECT_EQ(g.segments().size(), 4u);
    EXPECT_DOUBLE_EQ(g.hx(), 0.1);
}

TEST(Grid, LShapeArea) {
    // Six 0.5 x 0.5 blocks.
    const Grid g = build_grid(l_domain, 30, 40);
    EXPECT_NEAR(g.area(), 1.5, 1e-12);
    EXPECT_EQ(g.size(), 600u);
}

TEST(Grid, EveryBoundaryFaceHasOneSegment) {
    const Grid g = build_grid(l_domain, 30, 40);
    std::vector<int> hits(g.boundary_faces().size(), 0);
    for (std::size_t s = 0; s < g.segments().size(); ++s)
        for (int f : g.segments()[s].faces) {
            ++hits[f];
            EXPECT_EQ(g.boundary_faces()[f].segment, static_cast<int>(s));
        }
    for (int h : hits) EXPECT_EQ(h, 1);
    double perimeter = 0.0;
    for (const auto& s : g.segments()) perimeter += s.length();
    EXPECT_NEAR(perimeter, 7.0, 1e-12);
}

TEST(Grid, CellsInsideDomain) {
    const Grid g = build_grid(l_domain, 30, 40);
    for (int c = 0; c < static_cast<int>(g.size()); ++c) {
        const Vec2 p = g.center(c);
        bool inside = false;
        for (const auto& r : l_domain) inside = inside || r.contains(p.x, p.y);
        EXPECT_TRUE(inside);
        EXPECT_EQ(g.locate(p.x, p.y), c);
    }
}

TEST(Grid, MisalignedCornerRejected) {
    EXPECT_THROW(build_grid({{0, 0, 1, 1}, {0.33, 1, 1, 2}}, 10, 20), InputError);
    EXPECT_NO_THROW(build_grid({{0, 0, 1, 1}, {0.3, 1, 1, 2}}, 10, 20));
}

TEST(Grid, InvalidInputs) {
    EXPECT_THROW(build_grid({}, 10, 10), InputError);
    EXPECT_THROW(build_grid({{0, 0, 1, 1}}, 1, 10), InputError);
    EXPECT_THROW(build_grid({{0, 0, 0, 1}}, 10, 10), InputError);
    // Two blocks touching only at a corner.
    EXPECT_THROW(build_grid({{0, 0, 1, 1}, {1, 1, 2, 2}}, 10, 10), InputError);
}

TEST(Partition, ExampleOneHalves) {
    const Grid g = build_grid({{0, 0, 1, 1}}, 20, 20);
    const auto p = partition_regions(g, {{{0, 0, 0.5, 1}}, {{0.5, 0, 1, 1}}}, 2);
    EXPECT_DOUBLE_EQ(p.area(0), 0.5);
    EXPECT_DOUBLE_EQ(p.area(1), 0.5);
    EXPECT_NEAR(p.interface_length(g, 0, 1), 1.0, 1e-12);
}

TEST(Partition, SingleRegionHasNoInterfaces) {
    const Grid g = unit_square(20);
    const auto p = partition_regions(g, {{{0, 0, 1, 1}}}, 1);
    EXPECT_DOUBLE_EQ(p.area(0), 1.0);
    EXPECT_TRUE(p.interfaces().empty());
}

TEST(Partition, ExampleThree) {
    const Problem pb = problem("example3");
    const auto& p = pb.partition;
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(p.area(i), 0.5, 1e-12);
    EXPECT_NEAR(p.interface_length(pb.grid, 1, 2), 0.5, 1e-12);
    EXPECT_NEAR(p.interface_length(pb.grid, 1, 3), 0.5, 1e-12);
    EXPECT_EQ(p.neighbours(0).size(), 1u);
    EXPECT_EQ(p.neighbours(1).size(), 3u);
    EXPECT_EQ(p.neighbours(2).size(), 2u);
    EXPECT_EQ(p.neighbours(3).size(), 2u);
}

TEST(Partition, AreasSumToDomain) {
    for (const char* name : {"example1", "example3", "example4"}) {
        const Problem pb = problem(name);
        const auto& a = pb.partition.areas();
        EXPECT_NEAR(std::accumulate(a.begin(), a.end(), 0.0), pb.grid.area(), 1e-12) << name;
        std::size_t cells = 0;
        for (int i = 0; i < pb.players(); ++i) cells += pb.partition.cells(i).size();
        EXPECT_EQ(cells, pb.grid.size()) << name;
    }
}

TEST(Partition, Errors) {
    const Grid g = unit_square(10);
    EXPECT_THROW(partition_regions(g, {{{0, 0, 0.5, 1}}}, 2), InputError);
    EXPECT_THROW(partition_regions(g, {{{0, 0, 0.55, 1}}, {{0.55, 0, 1, 1}}}, 2), InputError);
    EXPECT_THROW(partition_regions(g, {{{0, 0, 0.6, 1}}, {{0.5, 0, 1, 1}}}, 2), InputError);
    EXPECT_THROW(partition_regions(g, {{{0, 0, 0.5, 1}}, {{0.5, 0, 1, 0.5}}}, 2), InputError);
    EXPECT_THROW(partition_regions(g, {{{0, 0, 0.5, 1}}, {{0.5, 0, 1.5, 1}}}, 2), InputError);
}

TEST(Boundary, FirstMatchAndCoverage) {
    const Grid g = unit_square(10);
    BoundarySpec spec;
    spec.rules.push_back({{Side::West, 0.0, std::nullopt}, {1.0, false}});
    spec.rules.push_back({{}, {0.0, false}});
    const auto r = spec.resolve(g);
    for (std::size_t s = 0; s < g.segments().size(); ++s)
        EXPECT_DOUBLE_EQ(r[s].alpha, g.segments()[s].side == Side::West ? 1.0 : 0.0);

    BoundarySpec partial;
    partial.rules.push_back({{Side::West, std::nullopt, std::nullopt}, {1.0, false}});
    EXPECT_THROW(partial.resolve(g), InputError);
    EXPECT_THROW(BoundarySpec::uniform(-1.0).resolve(g), InputError);
}

TEST(Convection, ZeroField) {
    const Grid g = unit_square(10);
    const auto s = sample_convection(ConvectionField::uniform({0, 0}), g);
    for (double v : s.interior) EXPECT_EQ(v, 0.0);
    for (double v : s.divergence) EXPECT_EQ(v, 0.0);
}

TEST(Convection, UniformField) {
    const Grid g = unit_square(10);
    const auto s = sample_convection(ConvectionField::uniform({4, 0}), g);
    for (std::size_t f = 0; f < s.interior.size(); ++f)
        EXPECT_EQ(s.interior[f], g.interior_faces()[f].axis == Axis::X ? 4.0 : 0.0);
    for (double v : s.divergence) EXPECT_NEAR(v, 0.0, 1e-12);
    EXPECT_TRUE(s.divergent_cells().empty());
}

TEST(Convection, ExampleSixIsDiscretelySolenoidal) {
    // Both switching lines have normal (1,1)/sqrt(2), across which (4,0)
    // and (0,4) share the normal component.
    const Problem pb = problem("example6");
    const auto s = sample_convection(pb.convection, pb.grid);
    EXPECT_TRUE(s.divergent_cells(1e-9).empty());
}

TEST(Convection, SwitchAcrossMainDiagonalIsFlagged) {
    // (4,0) below y = x, (0,4) above: normal components differ, so cells
    // straddling the line carry divergence and nothing else does.
    const Grid g = unit_square(20);
    ConvectionField f;
    f.fallback = {0, 4};
    f.pieces.push_back({{4, 0}, {ConvectionClause{std::nullopt, {HalfPlane{1, -1, 0, HalfPlane::Relation::GreaterEqual}}}}});
    const auto s = sample_convection(f, g);
    const auto bad = s.divergent_cells(1e-9);
    EXPECT_FALSE(bad.empty());
    for (int c : bad) {
        const Vec2 p = g.center(c);
        EXPECT_LE(std::abs(p.x - p.y), g.hx() * 1.0001) << p.x << "," << p.y;
    }
}

TEST(Convection, FirstPieceWins) {
    ConvectionField f;
    f.pieces.push_back({{1, 0}, {ConvectionClause{Rect{0, 0, 1, 1}, {}}}});
    f.pieces.push_back({{0, 1}, {}});
    EXPECT_EQ(f.at(0.5, 0.5), (Vec2{1, 0}));
    EXPECT_EQ(f.at(1.5, 0.5), (Vec2{0, 1}));
    HalfPlane hp{1, 1, -1, HalfPlane::Relation::Less};
    EXPECT_TRUE(hp.contains(0.2, 0.2));
    EXPECT_FALSE(hp.contains(0.5, 0.5));
}
