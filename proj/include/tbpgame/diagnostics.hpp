#pragma once

// Qualitative checks on an equilibrium: reflection symmetry, monotone
// profiles, region-mean orderings and emitter locations.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "tbpgame/equilibrium.hpp"
#include "tbpgame/error.hpp"
#include "tbpgame/geometry.hpp"
#include "tbpgame/scenario.hpp"

namespace tbpgame {

struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0.0;  ///< measured quantity (margin, error, ...)
    double limit = 0.0;
    std::string detail;
};

/// Which field a check looks at.
enum class FieldKind { Emissions, Stock };

inline FieldKind field_kind_from_string(const std::string& s) {
    if (s == "u") return FieldKind::Emissions;
    if (s == "P") return FieldKind::Stock;
    throw InputError("expectation field must be \"u\" or \"P\", got \"" + s + "\"");
}

/// Sum of all players' emissions, or the steady-state stock.
inline Field select_field(const EquilibriumSolution& eq, FieldKind kind) {
    if (kind == FieldKind::Stock) return eq.steady_state;
    Field total = Field::Zero(eq.steady_state.size());
    for (const auto& p : eq.players) total += p.u;
    return total;
}

inline double region_mean(const Field& f, const RegionPartition& partition, int player) {
    double s = 0.0;
    for (int c : partition.cells(player)) s += f[c];
    return s / static_cast<double>(partition.cells(player).size());
}

/// Cell of the largest value inside the region (first one on ties).
inline int region_argmax(const Field& f, const RegionPartition& partition, int player) {
    int best = -1;
    for (int c : partition.cells(player))
        if (best < 0 || f[c] > f[best]) best = c;
    return best;
}

inline double domain_mean(const Field& f) { return f.mean(); }

/// Reflection across x = line, y = line, or through a point.
struct Reflection {
    enum class Kind { AcrossX, AcrossY, Point };
    Kind kind = Kind::AcrossX;
    Vec2 centre;  ///< line coordinate in .x (AcrossX) or .y (AcrossY)

    static Reflection across(Axis a, double line) {
        return a == Axis::X ? Reflection{Kind::AcrossX, {line, 0.0}} : Reflection{Kind::AcrossY, {0.0, line}};
    }
    static Reflection through(Vec2 p) { return {Kind::Point, p}; }

    Vec2 operator()(Vec2 p) const {
        switch (kind) {
        case Kind::AcrossX: return {2.0 * centre.x - p.x, p.y};
        case Kind::AcrossY: return {p.x, 2.0 * centre.y - p.y};
        case Kind::Point: return {2.0 * centre.x - p.x, 2.0 * centre.y - p.y};
        }
        return p;
    }
};

/// Active cell holding the image of the center of `cell`, or -1.
inline int mirror_cell(const Grid& grid, int cell, const Reflection& m) {
    const Vec2 p = m(grid.center(cell));
    return grid.locate(p.x, p.y);
}

inline double rect_distance(const Rect& r, Vec2 p) {
    const double dx = std::max({r.x0 - p.x, 0.0, p.x - r.x1});
    const double dy = std::max({r.y0 - p.y, 0.0, p.y - r.y1});
    return std::hypot(dx, dy);
}

inline double region_distance(const RegionPartition& partition, int player, Vec2 p) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& r : partition.rects(player)) d = std::min(d, rect_distance(r, p));
    return d;
}

namespace detail {

inline std::string player_name(int i) { return "player " + std::to_string(i + 1); }

inline void require_player(const Problem& pb, int i, const std::string& what) {
    if (i < 0 || i >= pb.players()) throw InputError(what + ": player index out of range");
}

} // namespace detail

/// max |u_a - mirror(u_b)| over the cells of player a.
inline CheckResult check_mirror_swap(const Problem& pb, const EquilibriumSolution& eq, int a, int b,
                                     const Reflection& m, double tol) {
    detail::require_player(pb, a, "mirror_swap");
    detail::require_player(pb, b, "mirror_swap");
    CheckResult r{"mirror_swap " + detail::player_name(a) + "/" + detail::player_name(b), true, 0.0, tol, {}};
    for (int c : pb.partition.cells(a)) {
        const int k = mirror_cell(pb.grid, c, m);
        if (k < 0 || pb.partition.region_of(k) != b) {
            r.passed = false;
            r.detail = "geometry is not mirror symmetric";
            return r;
        }
        r.value = std::max(r.value, std::abs(eq.players[a].u[c] - eq.players[b].u[k]));
    }
    r.passed = r.value <= tol;
    return r;
}

/// max |u_i - mirror(u_i)| over the player's cells.
inline CheckResult check_symmetric(const Problem& pb, const EquilibriumSolution& eq, int i, const Reflection& m,
                                   double tol) {
    detail::require_player(pb, i, "symmetric");
    CheckResult r{"symmetric " + detail::player_name(i), true, 0.0, tol, {}};
    for (int c : pb.partition.cells(i)) {
        const int k = mirror_cell(pb.grid, c, m);
        if (k < 0 || pb.partition.region_of(k) != i) {
            r.passed = false;
            r.detail = "region is not mirror symmetric";
            return r;
        }
        r.value = std::max(r.value, std::abs(eq.players[i].u[c] - eq.players[i].u[k]));
    }
    r.passed = r.value <= tol;
    return r;
}

/// u_i strictly decreasing with distance from the line along every grid row
/// (Axis::X) or column (Axis::Y). `value` is the smallest step.
inline CheckResult check_decreasing_from_line(const Problem& pb, const EquilibriumSolution& eq, int i, Axis axis,
                                              double line) {
    detail::require_player(pb, i, "decreasing_from_line");
    CheckResult r{"decreasing_from_line " + detail::player_name(i), true,
                  std::numeric_limits<double>::infinity(), 0.0, {}};
    std::map<int, std::vector<std::pair<double, double>>> lines;  // row/column -> (distance, u)
    for (int c : pb.partition.cells(i)) {
        const Vec2 p = pb.grid.center(c);
        const int key = axis == Axis::X ? pb.grid.iy(c) : pb.grid.ix(c);
        lines[key].push_back({std::abs((axis == Axis::X ? p.x : p.y) - line), eq.players[i].u[c]});
    }
    for (auto& [key, pts] : lines) {
        std::sort(pts.begin(), pts.end());
        for (std::size_t n = 1; n < pts.size(); ++n) {
            const double step = pts[n - 1].second - pts[n].second;
            if (step < r.value) r.value = step;
            if (!(step > 0.0) && r.passed) {
                r.passed = false;
                std::ostringstream os;
                os << "not decreasing on line " << key << " at distance " << pts[n].first;
                r.detail = os.str();
            }
        }
    }
    return r;
}

/// The player's emission maximum sits in a cell touching the boundary line.
inline CheckResult check_argmax_on_boundary(const Problem& pb, const EquilibriumSolution& eq, int i, Side side,
                                            double line) {
    detail::require_player(pb, i, "argmax_on_boundary");
    const int c = region_argmax(eq.players[i].u, pb.partition, i);
    const Vec2 p = pb.grid.center(c);
    const bool vertical = side == Side::West || side == Side::East;
    const double h = vertical ? pb.grid.hx() : pb.grid.hy();
    const double dist = std::abs((vertical ? p.x : p.y) - line);
    bool touches = false;
    for (const auto& f : pb.grid.boundary_faces())
        if (f.cell == c && f.side == side && std::abs((vertical ? f.midpoint.x : f.midpoint.y) - line) < 1e-9)
            touches = true;
    std::ostringstream os;
    os << "argmax at (" << p.x << ", " << p.y << ")";
    return {"argmax_on_boundary " + detail::player_name(i), touches, dist, 0.5 * h, os.str()};
}

/// Region means ordered group by group: every member of group g beats every
/// member of group g+1 ("decreasing") or is beaten by it ("increasing").
inline CheckResult check_region_mean_order(const Problem& pb, const EquilibriumSolution& eq, FieldKind kind,
                                           const std::vector<std::vector<int>>& groups, bool decreasing) {
    const Field f = select_field(eq, kind);
    CheckResult r{std::string("region_mean_order ") + (kind == FieldKind::Emissions ? "u" : "P"), true,
                  std::numeric_limits<double>::infinity(), 0.0, {}};
    std::ostringstream os;
    std::vector<std::pair<double, double>> ranges;  // (min, max) per group
    for (const auto& g : groups) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int i : g) {
            detail::require_player(pb, i, "region_mean_order");
            const double m = region_mean(f, pb.partition, i);
            lo = std::min(lo, m);
            hi = std::max(hi, m);
            os << detail::player_name(i) << '=' << m << ' ';
        }
        ranges.push_back({lo, hi});
    }
    for (std::size_t g = 1; g < ranges.size(); ++g) {
        const double gap = decreasing ? ranges[g - 1].first - ranges[g].second : ranges[g].first - ranges[g - 1].second;
        r.value = std::min(r.value, gap);
        if (!(gap > 0.0)) r.passed = false;
    }
    r.detail = os.str();
    return r;
}

inline CheckResult check_region_mean_greater(const Problem& pb, const EquilibriumSolution& eq, FieldKind kind,
                                             int greater, int lesser) {
    detail::require_player(pb, greater, "region_mean_greater");
    detail::require_player(pb, lesser, "region_mean_greater");
    const Field f = select_field(eq, kind);
    const double a = region_mean(f, pb.partition, greater);
    const double b = region_mean(f, pb.partition, lesser);
    std::ostringstream os;
    os << detail::player_name(greater) << '=' << a << ' ' << detail::player_name(lesser) << '=' << b;
    return {std::string("region_mean_greater ") + (kind == FieldKind::Emissions ? "u" : "P"), a > b, a - b, 0.0,
            os.str()};
}

/// u_a on the cells of player a touching player b, strictly decreasing with
/// distance from the region of player `from`.
inline CheckResult check_interface_decreasing(const Problem& pb, const EquilibriumSolution& eq, int a, int b,
                                              int from) {
    detail::require_player(pb, a, "interface_decreasing");
    detail::require_player(pb, b, "interface_decreasing");
    detail::require_player(pb, from, "interface_decreasing");
    CheckResult r{"interface_decreasing " + detail::player_name(a), true, std::numeric_limits<double>::infinity(),
                  0.0, {}};
    std::vector<int> cells;
    for (int f : pb.partition.interface(a, b)) {
        const auto& face = pb.grid.interior_faces()[f];
        cells.push_back(pb.partition.region_of(face.lower) == a ? face.lower : face.upper);
    }
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    if (cells.size() < 2) {
        r.passed = false;
        r.detail = "interface has fewer than two cells";
        return r;
    }
    std::vector<std::pair<double, double>> pts;
    for (int c : cells) pts.push_back({region_distance(pb.partition, from, pb.grid.center(c)), eq.players[a].u[c]});
    std::sort(pts.begin(), pts.end());
    for (std::size_t n = 1; n < pts.size(); ++n) {
        const double step = pts[n - 1].second - pts[n].second;
        r.value = std::min(r.value, step);
        if (!(step > 0.0)) r.passed = false;
    }
    return r;
}

/// Neighbour receiving the largest net drift flux out of `player` (drift is
/// along -b), or -1 when nothing flows out into a neighbour.
inline int downstream_neighbour(const Problem& pb, int player) {
    const ConvectionSample s = sample_convection(pb.convection, pb.grid);
    std::map<int, double> flux;
    const auto& faces = pb.grid.interior_faces();
    for (const auto& [key, ids] : pb.partition.interfaces()) {
        if (key.first != player && key.second != player) continue;
        for (int f : ids) {
            const bool lower_is_player = pb.partition.region_of(faces[f].lower) == player;
            const double out = (lower_is_player ? -s.interior[f] : s.interior[f]) * pb.grid.face_length(faces[f].axis);
            flux[key.first == player ? key.second : key.first] += out;
        }
    }
    int best = -1;
    double best_flux = 0.0;
    for (const auto& [j, q] : flux)
        if (q > best_flux) {
            best = j;
            best_flux = q;
        }
    return best;
}

/// For every player with a downstream neighbour, the emission argmax lies
/// within `fraction` of the region's depth from the downstream interface.
inline CheckResult check_argmax_near_downstream(const Problem& pb, const EquilibriumSolution& eq, double fraction) {
    CheckResult r{"argmax_near_downstream", true, 0.0, fraction, {}};
    std::ostringstream os;
    int checked = 0;
    for (int i = 0; i < pb.players(); ++i) {
        const int j = downstream_neighbour(pb, i);
        if (j < 0) continue;
        ++checked;
        const auto& ids = pb.partition.interface(i, j);
        const auto& faces = pb.grid.interior_faces();
        const Axis axis = faces[ids.front()].axis;
        double line = 0.0;
        for (int f : ids) line += axis == Axis::X ? faces[f].midpoint.x : faces[f].midpoint.y;
        line /= static_cast<double>(ids.size());
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& rect : pb.partition.rects(i)) {
            lo = std::min(lo, axis == Axis::X ? rect.x0 : rect.y0);
            hi = std::max(hi, axis == Axis::X ? rect.x1 : rect.y1);
        }
        const Vec2 p = pb.grid.center(region_argmax(eq.players[i].u, pb.partition, i));
        const double depth = std::abs((axis == Axis::X ? p.x : p.y) - line) / (hi - lo);
        r.value = std::max(r.value, depth);
        const bool ok = depth <= fraction;
        if (!ok) r.passed = false;
        os << detail::player_name(i) << "->" << detail::player_name(j) << " depth " << depth << (ok ? "" : " FAIL")
           << "; ";
    }
    if (checked == 0) {
        r.passed = false;
        os << "no player has a downstream neighbour";
    }
    r.detail = os.str();
    return r;
}

/// Mean of the field over cells touching the selected boundary, below the
/// domain mean.
inline CheckResult check_boundary_band_below_mean(const Problem& pb, const EquilibriumSolution& eq, FieldKind kind,
                                                  const BoundarySelector& where) {
    const Field f = select_field(eq, kind);
    std::vector<int> cells;
    for (const auto& seg : pb.grid.segments()) {
        if (!where.matches(seg)) continue;
        for (int fi : seg.faces) cells.push_back(pb.grid.boundary_faces()[fi].cell);
    }
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    if (cells.empty()) return {"boundary_band_below_mean", false, 0.0, 0.0, "no boundary cells selected"};
    double band = 0.0;
    for (int c : cells) band += f[c];
    band /= static_cast<double>(cells.size());
    const double mean = domain_mean(f);
    std::ostringstream os;
    os << "band " << band << " domain " << mean;
    return {"boundary_band_below_mean", band < mean, mean - band, 0.0, os.str()};
}

/// Domain mean of this solution against a reference solution.
inline CheckResult check_compare_means(const EquilibriumSolution& eq, const EquilibriumSolution& ref, FieldKind kind,
                                       bool greater, const std::string& ref_name) {
    const double a = domain_mean(select_field(eq, kind));
    const double b = domain_mean(select_field(ref, kind));
    std::ostringstream os;
    os << "this " << a << ' ' << ref_name << ' ' << b;
    const double margin = greater ? a - b : b - a;
    return {std::string("compare_means ") + (kind == FieldKind::Emissions ? "u" : "P") + (greater ? " > " : " < ") +
                ref_name,
            margin > 0.0, margin, 0.0, os.str()};
}

/// Resolves the `reference` of a compare_means expectation to a solution.
using ReferenceSolver = std::function<EquilibriumSolution(const std::string&)>;

namespace detail {

inline int player_param(const nlohmann::json& p, const char* key) { return p.at(key).get<int>() - 1; }

inline Axis axis_param(const nlohmann::json& p) {
    const std::string a = p.at("axis").get<std::string>();
    if (a == "x") return Axis::X;
    if (a == "y") return Axis::Y;
    throw InputError("expectation axis must be \"x\" or \"y\"");
}

/// {"axis": "x"|"y", "line": L} or {"center": [x, y]}.
inline Reflection reflection_param(const nlohmann::json& p) {
    if (p.contains("center")) {
        const auto c = p.at("center").get<std::vector<double>>();
        if (c.size() != 2) throw InputError("expectation center must be [x, y]");
        return Reflection::through({c[0], c[1]});
    }
    return Reflection::across(axis_param(p), p.at("line").get<double>());
}

inline BoundarySelector selector_param(const nlohmann::json& p) {
    BoundarySelector s;
    if (p.contains("side")) {
        s.side = side_from_string(p.at("side").get<std::string>());
        if (!s.side) throw InputError("expectation side must be west, east, south or north");
    }
    if (p.contains("line")) s.line = p.at("line").get<double>();
    return s;
}

} // namespace detail

/// Evaluates one scenario expectation. Parameters use 1-based players.
inline CheckResult check_expectation(const Expectation& e, const Problem& pb, const EquilibriumSolution& eq,
                                     const ReferenceSolver& reference = {}) {
    const auto& p = e.params;
    try {
        CheckResult r;
        if (e.type == "mirror_swap") {
            const auto pl = p.at("players").get<std::vector<int>>();
            if (pl.size() != 2) throw InputError("mirror_swap needs two players");
            r = check_mirror_swap(pb, eq, pl[0] - 1, pl[1] - 1, detail::reflection_param(p), p.value("tol", 1e-9));
        } else if (e.type == "symmetric") {
            r = check_symmetric(pb, eq, detail::player_param(p, "player"), detail::reflection_param(p),
                                p.value("tol", 1e-9));
        } else if (e.type == "decreasing_from_line") {
            r = check_decreasing_from_line(pb, eq, detail::player_param(p, "player"), detail::axis_param(p),
                                           p.at("line").get<double>());
        } else if (e.type == "argmax_on_boundary") {
            const BoundarySelector s = detail::selector_param(p);
            if (!s.side || !s.line) throw InputError("argmax_on_boundary needs side and line");
            r = check_argmax_on_boundary(pb, eq, detail::player_param(p, "player"), *s.side, *s.line);
        } else if (e.type == "region_mean_order") {
            std::vector<std::vector<int>> groups;
            for (const auto& g : p.at("groups")) {
                std::vector<int> ids;
                for (const auto& i : g) ids.push_back(i.get<int>() - 1);
                groups.push_back(ids);
            }
            const std::string order = p.value("order", std::string("decreasing"));
            if (order != "decreasing" && order != "increasing")
                throw InputError("region_mean_order order must be decreasing or increasing");
            r = check_region_mean_order(pb, eq, field_kind_from_string(p.at("field").get<std::string>()), groups,
                                        order == "decreasing");
        } else if (e.type == "region_mean_greater") {
            r = check_region_mean_greater(pb, eq, field_kind_from_string(p.at("field").get<std::string>()),
                                          detail::player_param(p, "greater"), detail::player_param(p, "lesser"));
        } else if (e.type == "interface_decreasing") {
            r = check_interface_decreasing(pb, eq, detail::player_param(p, "player"),
                                           detail::player_param(p, "other"), detail::player_param(p, "from"));
        } else if (e.type == "argmax_near_downstream") {
            r = check_argmax_near_downstream(pb, eq, p.value("fraction", 0.25));
        } else if (e.type == "boundary_band_below_mean") {
            r = check_boundary_band_below_mean(pb, eq, field_kind_from_string(p.at("field").get<std::string>()),
                                               detail::selector_param(p));
        } else if (e.type == "compare_means") {
            if (!reference) throw InputError("compare_means needs a reference resolver");
            const std::string ref = p.at("reference").get<std::string>();
            const std::string rel = p.at("relation").get<std::string>();
            if (rel != ">" && rel != "<") throw InputError("compare_means relation must be > or <");
            r = check_compare_means(eq, reference(ref), field_kind_from_string(p.at("field").get<std::string>()),
                                    rel == ">", ref);
        } else {
            throw InputError("unknown expectation type \"" + e.type + "\"");
        }
        if (p.contains("label")) r.name = p.at("label").get<std::string>();
        return r;
    } catch (const nlohmann::json::exception& ex) {
        throw InputError("expectation " + e.type + ": " + ex.what());
    }
}

} // namespace tbpgame
