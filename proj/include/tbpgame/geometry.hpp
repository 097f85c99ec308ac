#pragma once

// Cell-centered Cartesian grids over rectilinear domains, player partitions,
// boundary segments and piecewise-constant convection fields.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "tbpgame/error.hpp"

namespace tbpgame {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

/// Closed axis-aligned rectangle [x0,x1] x [y0,y1].
struct Rect {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() * height(); }

    bool contains(double x, double y, double eps = 1e-12) const {
        return x >= x0 - eps && x <= x1 + eps && y >= y0 - eps && y <= y1 + eps;
    }

    friend bool operator==(const Rect&, const Rect&) = default;
};

inline std::string to_string(const Rect& r) {
    std::ostringstream os;
    os << '[' << r.x0 << ',' << r.x1 << "]x[" << r.y0 << ',' << r.y1 << ']';
    return os.str();
}

enum class Axis { X, Y };

/// Side of a cell; doubles as the outward normal direction of a boundary face.
enum class Side { West, East, South, North };

inline Vec2 outward_normal(Side s) {
    switch (s) {
    case Side::West: return {-1.0, 0.0};
    case Side::East: return {1.0, 0.0};
    case Side::South: return {0.0, -1.0};
    case Side::North: return {0.0, 1.0};
    }
    return {};
}

inline const char* to_string(Side s) {
    switch (s) {
    case Side::West: return "west";
    case Side::East: return "east";
    case Side::South: return "south";
    case Side::North: return "north";
    }
    return "?";
}

inline std::optional<Side> side_from_string(const std::string& s) {
    if (s == "west") return Side::West;
    if (s == "east") return Side::East;
    if (s == "south") return Side::South;
    if (s == "north") return Side::North;
    return std::nullopt;
}

/// Face shared by two active cells. `lower` is the west (x faces) or south
/// (y faces) cell; the unit normal points from `lower` to `upper`.
struct InteriorFace {
    int lower = -1;
    int upper = -1;
    Axis axis = Axis::X;
    Vec2 midpoint;
};

struct BoundaryFace {
    int cell = -1;
    Side side = Side::West;
    int segment = -1;
    Vec2 midpoint;
};

/// Maximal straight run of boundary faces sharing one outward normal.
struct BoundarySegment {
    Side side = Side::West;
    double line = 0.0;  ///< x (west/east) or y (south/north) of the run
    double lo = 0.0;    ///< extent along the run
    double hi = 0.0;
    std::vector<int> faces;

    double length() const { return hi - lo; }
};

namespace detail {

inline bool lattice_index(double coord, double origin, double h, long& index) {
    const double k = (coord - origin) / h;
    const double r = std::round(k);
    if (std::abs(k - r) > 1e-9 * std::max(1.0, std::abs(k))) return false;
    index = static_cast<long>(r);
    return true;
}

} // namespace detail

/// Uniform cell-centered grid over the bounding box of a union of rectangles,
/// with an active-cell mask for non-rectangular (L-shaped) domains.
class Grid {
public:
    double x0() const { return x0_; }
    double y0() const { return y0_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double hx() const { return hx_; }
    double hy() const { return hy_; }
    double cell_volume() const { return hx_ * hy_; }

    std::size_t size() const { return cells_.size(); }
    double area() const { return static_cast<double>(size()) * cell_volume(); }

    const std::vector<Rect>& domain() const { return domain_; }

    int ix(int cell) const { return cells_[cell][0]; }
    int iy(int cell) const { return cells_[cell][1]; }
    Vec2 center(int cell) const {
        return {x0_ + (ix(cell) + 0.5) * hx_, y0_ + (iy(cell) + 0.5) * hy_};
    }

    /// Active index of bounding-box cell (i, j), or -1.
    int index(int i, int j) const {
        if (i < 0 || j < 0 || i >= nx_ || j >= ny_) return -1;
        return mask_[static_cast<std::size_t>(j) * nx_ + i];
    }

    /// Active cell whose closed footprint contains (x, y), or -1.
    int locate(double x, double y) const {
        const int i = static_cast<int>(std::floor((x - x0_) / hx_));
        const int j = static_cast<int>(std::floor((y - y0_) / hy_));
        return index(i, j);
    }

    int neighbour(int cell, Side s) const {
        const int i = ix(cell), j = iy(cell);
        switch (s) {
        case Side::West: return index(i - 1, j);
        case Side::East: return index(i + 1, j);
        case Side::South: return index(i, j - 1);
        case Side::North: return index(i, j + 1);
        }
        return -1;
    }

    const std::vector<InteriorFace>& interior_faces() const { return interior_; }
    const std::vector<BoundaryFace>& boundary_faces() const { return boundary_; }
    const std::vector<BoundarySegment>& segments() const { return segments_; }

    double face_length(Axis a) const { return a == Axis::X ? hy_ : hx_; }
    double face_length(Side s) const {
        return (s == Side::West || s == Side::East) ? hy_ : hx_;
    }
    /// Center-to-center distance across a face normal to `s`.
    double normal_spacing(Side s) const {
        return (s == Side::West || s == Side::East) ? hx_ : hy_;
    }

    /// True when `r` has lattice-aligned corners.
    bool aligned(const Rect& r) const {
        long k = 0;
        return detail::lattice_index(r.x0, x0_, hx_, k) && detail::lattice_index(r.x1, x0_, hx_, k) &&
               detail::lattice_index(r.y0, y0_, hy_, k) && detail::lattice_index(r.y1, y0_, hy_, k);
    }

private:
    friend Grid build_grid(const std::vector<Rect>&, int, int);

    double x0_ = 0.0, y0_ = 0.0, hx_ = 0.0, hy_ = 0.0;
    int nx_ = 0, ny_ = 0;
    std::vector<Rect> domain_;
    std::vector<int> mask_;
    std::vector<std::array<int, 2>> cells_;
    std::vector<InteriorFace> interior_;
    std::vector<BoundaryFace> boundary_;
    std::vector<BoundarySegment> segments_;
};

/// Builds the grid whose active cells tile the union of `domain`. `nx`, `ny`
/// count cells across the bounding box.
inline Grid build_grid(const std::vector<Rect>& domain, int nx, int ny) {
    if (domain.empty()) throw InputError("build_grid: empty domain");
    if (nx < 2 || ny < 2) throw InputError("build_grid: nx and ny must be at least 2");
    for (const auto& r : domain) {
        if (!(r.x1 > r.x0) || !(r.y1 > r.y0))
            throw InputError("build_grid: rectangle " + to_string(r) + " has non-positive area");
    }

    Grid g;
    g.domain_ = domain;
    double X0 = domain[0].x0, Y0 = domain[0].y0, X1 = domain[0].x1, Y1 = domain[0].y1;
    for (const auto& r : domain) {
        X0 = std::min(X0, r.x0);
        Y0 = std::min(Y0, r.y0);
        X1 = std::max(X1, r.x1);
        Y1 = std::max(Y1, r.y1);
    }
    g.x0_ = X0;
    g.y0_ = Y0;
    g.nx_ = nx;
    g.ny_ = ny;
    g.hx_ = (X1 - X0) / nx;
    g.hy_ = (Y1 - Y0) / ny;

    for (const auto& r : domain) {
        if (!g.aligned(r)) {
            std::ostringstream os;
            os << "build_grid: rectangle " << to_string(r)
               << " is not aligned with the grid lattice (hx=" << g.hx_ << ", hy=" << g.hy_ << ')';
            throw InputError(os.str());
        }
    }

    g.mask_.assign(static_cast<std::size_t>(nx) * ny, -1);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const double xc = X0 + (i + 0.5) * g.hx_;
            const double yc = Y0 + (j + 0.5) * g.hy_;
            const bool inside = std::any_of(domain.begin(), domain.end(),
                                            [&](const Rect& r) { return r.contains(xc, yc, 0.0); });
            if (inside) {
                g.mask_[static_cast<std::size_t>(j) * nx + i] = static_cast<int>(g.cells_.size());
                g.cells_.push_back({i, j});
            }
        }
    }
    if (g.cells_.empty()) throw InputError("build_grid: domain contains no cells");

    // Edge connectivity.
    std::vector<char> seen(g.cells_.size(), 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    std::size_t reached = 1;
    while (!q.empty()) {
        const int c = q.front();
        q.pop();
        for (Side s : {Side::West, Side::East, Side::South, Side::North}) {
            const int n = g.neighbour(c, s);
            if (n >= 0 && !seen[n]) {
                seen[n] = 1;
                ++reached;
                q.push(n);
            }
        }
    }
    if (reached != g.cells_.size()) throw InputError("build_grid: active region is not edge-connected");

    // Faces. Boundary faces are keyed by (side, lattice line, along index)
    // so that segments can be formed from exact integer runs.
    struct Key {
        int side;
        int line;
        int along;
        int face;
    };
    std::vector<Key> keys;
    for (int c = 0; c < static_cast<int>(g.cells_.size()); ++c) {
        const int i = g.ix(c), j = g.iy(c);
        const Vec2 xc = g.center(c);
        const int e = g.index(i + 1, j);
        if (e >= 0) g.interior_.push_back({c, e, Axis::X, {xc.x + 0.5 * g.hx_, xc.y}});
        const int n = g.index(i, j + 1);
        if (n >= 0) g.interior_.push_back({c, n, Axis::Y, {xc.x, xc.y + 0.5 * g.hy_}});
        for (Side s : {Side::West, Side::East, Side::South, Side::North}) {
            if (g.neighbour(c, s) >= 0) continue;
            const Vec2 nrm = outward_normal(s);
            const Vec2 mid{xc.x + 0.5 * g.hx_ * nrm.x, xc.y + 0.5 * g.hy_ * nrm.y};
            int line = 0, along = 0;
            switch (s) {
            case Side::West: line = i; along = j; break;
            case Side::East: line = i + 1; along = j; break;
            case Side::South: line = j; along = i; break;
            case Side::North: line = j + 1; along = i; break;
            }
            keys.push_back({static_cast<int>(s), line, along, static_cast<int>(g.boundary_.size())});
            g.boundary_.push_back({c, s, -1, mid});
        }
    }
    std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
        return std::tie(a.side, a.line, a.along) < std::tie(b.side, b.line, b.along);
    });
    for (std::size_t k = 0; k < keys.size(); ++k) {
        const bool starts = k == 0 || keys[k].side != keys[k - 1].side || keys[k].line != keys[k - 1].line ||
                            keys[k].along != keys[k - 1].along + 1;
        const Side s = static_cast<Side>(keys[k].side);
        const bool vertical = s == Side::West || s == Side::East;
        if (starts) {
            BoundarySegment seg;
            seg.side = s;
            seg.line = vertical ? X0 + keys[k].line * g.hx_ : Y0 + keys[k].line * g.hy_;
            seg.lo = vertical ? Y0 + keys[k].along * g.hy_ : X0 + keys[k].along * g.hx_;
            g.segments_.push_back(seg);
        }
        auto& seg = g.segments_.back();
        seg.hi = vertical ? Y0 + (keys[k].along + 1) * g.hy_ : X0 + (keys[k].along + 1) * g.hx_;
        seg.faces.push_back(keys[k].face);
        g.boundary_[keys[k].face].segment = static_cast<int>(g.segments_.size()) - 1;
    }
    return g;
}

// ---------------------------------------------------------------------------
// Player regions

/// Assignment of active cells to players. Player indices are 0-based in code
/// and 1-based in files and reports.
class RegionPartition {
public:
    int players() const { return static_cast<int>(areas_.size()); }
    int region_of(int cell) const { return region_[cell]; }
    const std::vector<int>& region_map() const { return region_; }
    const std::vector<int>& cells(int player) const { return cells_[player]; }
    double area(int player) const { return areas_[player]; }
    const std::vector<double>& areas() const { return areas_; }
    const std::vector<Rect>& rects(int player) const { return rects_[player]; }

    /// Interior faces on the common boundary of players a and b.
    const std::vector<int>& interface(int a, int b) const {
        static const std::vector<int> none;
        const auto it = interfaces_.find(std::minmax(a, b));
        return it == interfaces_.end() ? none : it->second;
    }
    double interface_length(const Grid& grid, int a, int b) const {
        double len = 0.0;
        for (int f : interface(a, b)) len += grid.face_length(grid.interior_faces()[f].axis);
        return len;
    }
    const std::map<std::pair<int, int>, std::vector<int>>& interfaces() const { return interfaces_; }

    /// Players sharing at least one face with `player`.
    std::vector<int> neighbours(int player) const {
        std::vector<int> out;
        for (const auto& [key, faces] : interfaces_) {
            if (key.first == player) out.push_back(key.second);
            if (key.second == player) out.push_back(key.first);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    friend RegionPartition partition_regions(const Grid&, const std::vector<std::vector<Rect>>&, int);

    std::vector<int> region_;
    std::vector<std::vector<int>> cells_;
    std::vector<double> areas_;
    std::vector<std::vector<Rect>> rects_;
    std::map<std::pair<int, int>, std::vector<int>> interfaces_;
};

inline RegionPartition partition_regions(const Grid& grid, const std::vector<std::vector<Rect>>& regions, int J) {
    if (J < 1) throw InputError("partition_regions: need at least one player");
    if (static_cast<int>(regions.size()) != J)
        throw InputError("partition_regions: expected " + std::to_string(J) + " regions, got " +
                         std::to_string(regions.size()));

    RegionPartition p;
    p.rects_ = regions;
    p.region_.assign(grid.size(), -1);
    p.cells_.resize(J);
    p.areas_.assign(J, 0.0);

    for (int r = 0; r < J; ++r) {
        if (regions[r].empty())
            throw InputError("partition_regions: region " + std::to_string(r + 1) + " has no rectangles");
        for (const auto& rect : regions[r]) {
            if (!(rect.x1 > rect.x0) || !(rect.y1 > rect.y0))
                throw InputError("partition_regions: rectangle " + to_string(rect) + " has non-positive area");
            if (!grid.aligned(rect))
                throw InputError("partition_regions: region " + std::to_string(r + 1) + " rectangle " +
                                 to_string(rect) + " cuts through grid cells");
        }
    }

    for (int c = 0; c < static_cast<int>(grid.size()); ++c) {
        const Vec2 xc = grid.center(c);
        for (int r = 0; r < J; ++r) {
            const bool inside = std::any_of(regions[r].begin(), regions[r].end(),
                                            [&](const Rect& rect) { return rect.contains(xc.x, xc.y, 0.0); });
            if (!inside) continue;
            if (p.region_[c] >= 0 && p.region_[c] != r) {
                std::ostringstream os;
                os << "partition_regions: regions " << p.region_[c] + 1 << " and " << r + 1
                   << " overlap at (" << xc.x << ',' << xc.y << ')';
                throw InputError(os.str());
            }
            p.region_[c] = r;
        }
        if (p.region_[c] < 0) {
            std::ostringstream os;
            os << "partition_regions: cell at (" << xc.x << ',' << xc.y << ") is not covered by any region";
            throw InputError(os.str());
        }
        p.cells_[p.region_[c]].push_back(c);
    }

    // Region rectangles may not reach outside the active domain.
    for (int r = 0; r < J; ++r) {
        for (const auto& rect : regions[r]) {
            const long inside_x = std::lround(rect.width() / grid.hx());
            const long inside_y = std::lround(rect.height() / grid.hy());
            long covered = 0;
            for (int c : p.cells_[r]) {
                const Vec2 xc = grid.center(c);
                if (rect.contains(xc.x, xc.y, 0.0)) ++covered;
            }
            if (covered != inside_x * inside_y)
                throw InputError("partition_regions: region " + std::to_string(r + 1) + " rectangle " +
                                 to_string(rect) + " extends outside the domain");
        }
    }

    for (int r = 0; r < J; ++r) {
        if (p.cells_[r].empty())
            throw InputError("partition_regions: region " + std::to_string(r + 1) + " contains no cells");
        p.areas_[r] = static_cast<double>(p.cells_[r].size()) * grid.cell_volume();
    }

    const auto& faces = grid.interior_faces();
    for (int f = 0; f < static_cast<int>(faces.size()); ++f) {
        const int a = p.region_[faces[f].lower], b = p.region_[faces[f].upper];
        if (a != b) p.interfaces_[std::minmax(a, b)].push_back(f);
    }
    return p;
}

// ---------------------------------------------------------------------------
// Boundary conditions

/// Selects boundary segments by side, line coordinate and extent. Unset
/// fields match anything.
struct BoundarySelector {
    std::optional<Side> side;
    std::optional<double> line;
    std::optional<std::pair<double, double>> range;

    bool matches(const BoundarySegment& s, double eps = 1e-9) const {
        if (side && *side != s.side) return false;
        if (line && std::abs(*line - s.line) > eps) return false;
        if (range && (s.lo < range->first - eps || s.hi > range->second + eps)) return false;
        return true;
    }

    friend bool operator==(const BoundarySelector&, const BoundarySelector&) = default;
};

/// Robin condition  alpha*P + k*grad(P).n = 0  (alpha = 0: no flux).
/// With `convective_correction` (adjoint side only) the coefficient becomes
/// alpha - b.n, i.e.  k*grad(v).n + (alpha - b.n)*v = 0.
struct RobinCondition {
    double alpha = 0.0;
    bool convective_correction = false;

    friend bool operator==(const RobinCondition&, const RobinCondition&) = default;
};

struct BoundaryRule {
    BoundarySelector where;
    RobinCondition condition;

    friend bool operator==(const BoundaryRule&, const BoundaryRule&) = default;
};

/// Ordered rule list; each segment takes the first matching rule.
struct BoundarySpec {
    std::vector<BoundaryRule> rules;

    static BoundarySpec uniform(double alpha) { return {{BoundaryRule{{}, {alpha, false}}}}; }

    /// Per-segment condition. Throws when a segment is uncovered or alpha < 0.
    std::vector<RobinCondition> resolve(const Grid& grid) const {
        std::vector<RobinCondition> out;
        out.reserve(grid.segments().size());
        for (const auto& seg : grid.segments()) {
            const auto it = std::find_if(rules.begin(), rules.end(),
                                         [&](const BoundaryRule& r) { return r.where.matches(seg); });
            if (it == rules.end()) {
                std::ostringstream os;
                os << "boundary segment " << to_string(seg.side) << " at " << seg.line << " [" << seg.lo << ','
                   << seg.hi << "] has no boundary condition";
                throw InputError(os.str());
            }
            if (!(it->condition.alpha >= 0.0)) throw InputError("boundary alpha must be non-negative");
            out.push_back(it->condition);
        }
        return out;
    }

    friend bool operator==(const BoundarySpec&, const BoundarySpec&) = default;
};

// ---------------------------------------------------------------------------
// Convection

/// Half-plane  a*x + b*y + c < 0  or  >= 0.
struct HalfPlane {
    enum class Relation { Less, GreaterEqual };
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    Relation relation = Relation::Less;

    bool contains(double x, double y) const {
        const double s = a * x + b * y + c;
        return relation == Relation::Less ? s < 0.0 : s >= 0.0;
    }

    friend bool operator==(const HalfPlane&, const HalfPlane&) = default;
};

/// Intersection of an optional rectangle with any number of half-planes.
struct ConvectionClause {
    std::optional<Rect> rect;
    std::vector<HalfPlane> halfplanes;

    bool contains(double x, double y) const {
        if (rect && !rect->contains(x, y)) return false;
        return std::all_of(halfplanes.begin(), halfplanes.end(),
                           [&](const HalfPlane& h) { return h.contains(x, y); });
    }

    friend bool operator==(const ConvectionClause&, const ConvectionClause&) = default;
};

/// Constant vector on a union of clauses. No clauses means everywhere.
struct ConvectionPiece {
    Vec2 value;
    std::vector<ConvectionClause> where;

    bool contains(double x, double y) const {
        return where.empty() || std::any_of(where.begin(), where.end(),
                                            [&](const ConvectionClause& c) { return c.contains(x, y); });
    }

    friend bool operator==(const ConvectionPiece&, const ConvectionPiece&) = default;
};

/// Piecewise-constant field b(x). First matching piece wins; points outside
/// every piece take `fallback`, so the field is total.
struct ConvectionField {
    std::vector<ConvectionPiece> pieces;
    Vec2 fallback;

    static ConvectionField uniform(Vec2 b) { return {{}, b}; }

    Vec2 at(double x, double y) const {
        for (const auto& p : pieces)
            if (p.contains(x, y)) return p.value;
        return fallback;
    }

    bool is_zero() const {
        return fallback == Vec2{} && std::all_of(pieces.begin(), pieces.end(),
                                                 [](const ConvectionPiece& p) { return p.value == Vec2{}; });
    }

    friend bool operator==(const ConvectionField&, const ConvectionField&) = default;
};

/// Normal velocities sampled at face midpoints.
struct ConvectionSample {
    std::vector<double> interior;    ///< b.e, e pointing from lower to upper cell
    std::vector<double> boundary;    ///< b.n, n the outward normal
    std::vector<double> divergence;  ///< per-cell discrete divergence

    /// Cells whose discrete divergence exceeds `tol` in magnitude.
    std::vector<int> divergent_cells(double tol = 1e-12) const {
        std::vector<int> out;
        for (int c = 0; c < static_cast<int>(divergence.size()); ++c)
            if (std::abs(divergence[c]) > tol) out.push_back(c);
        return out;
    }
};

inline ConvectionSample sample_convection(const ConvectionField& field, const Grid& grid) {
    ConvectionSample s;
    const auto& faces = grid.interior_faces();
    const auto& bfaces = grid.boundary_faces();
    s.interior.resize(faces.size());
    s.boundary.resize(bfaces.size());
    s.divergence.assign(grid.size(), 0.0);
    const double vol = grid.cell_volume();

    for (std::size_t f = 0; f < faces.size(); ++f) {
        const auto& face = faces[f];
        const Vec2 b = field.at(face.midpoint.x, face.midpoint.y);
        const double bn = face.axis == Axis::X ? b.x : b.y;
        s.interior[f] = bn;
        const double flux = bn * grid.face_length(face.axis) / vol;
        s.divergence[face.lower] += flux;
        s.divergence[face.upper] -= flux;
    }
    for (std::size_t f = 0; f < bfaces.size(); ++f) {
        const auto& face = bfaces[f];
        const double bn = dot(field.at(face.midpoint.x, face.midpoint.y), outward_normal(face.side));
        s.boundary[f] = bn;
        s.divergence[face.cell] += bn * grid.face_length(face.side) / vol;
    }
    return s;
}

} // namespace tbpgame
