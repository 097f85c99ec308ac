#pragma once

// Scenario files: JSON documents describing geometry, players, coefficients,
// boundary and convection data, simulation settings and the qualitative
// expectations checked by `verify`. See docs/scenario-format.md.

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "tbpgame/equilibrium.hpp"
#include "tbpgame/error.hpp"
#include "tbpgame/geometry.hpp"

namespace tbpgame {

using json = nlohmann::json;

struct SimulationParams {
    double T = 200.0;
    double dt = 0.01;
    std::vector<double> deviation_scales{0.5, 0.9, 1.1, 2.0};
    std::vector<int> deviation_players;  ///< 1-based; empty means all players

    friend bool operator==(const SimulationParams&, const SimulationParams&) = default;
};

/// Named qualitative check with free-form parameters (see diagnostics.hpp).
struct Expectation {
    std::string type;
    json params;

    friend bool operator==(const Expectation&, const Expectation&) = default;
};

struct Scenario {
    std::string name;
    std::string description;
    std::vector<Rect> domain;
    int nx = 0;
    int ny = 0;
    std::vector<std::vector<Rect>> regions;
    double k = 1.0;
    double c = 0.0;
    double rho = 0.0;
    std::vector<double> phi;
    BoundarySpec boundary;
    std::optional<BoundarySpec> adjoint_boundary;
    ConvectionField convection;
    SimulationParams simulation;
    std::string output_format = "csv";
    std::vector<Expectation> expectations;
    std::filesystem::path source;  ///< file the scenario was read from, if any (not serialized)

    int players() const { return static_cast<int>(regions.size()); }

    friend bool operator==(const Scenario& a, const Scenario& b) {
        return a.name == b.name && a.description == b.description && a.domain == b.domain && a.nx == b.nx &&
               a.ny == b.ny && a.regions == b.regions && a.k == b.k && a.c == b.c && a.rho == b.rho &&
               a.phi == b.phi && a.boundary == b.boundary && a.adjoint_boundary == b.adjoint_boundary &&
               a.convection == b.convection && a.simulation == b.simulation &&
               a.output_format == b.output_format && a.expectations == b.expectations;
    }
};

namespace detail {

class Reader {
public:
    [[noreturn]] static void fail(const std::string& path, const std::string& what) {
        throw InputError("scenario field '" + path + "': " + what);
    }

    static const json& member(const json& j, const std::string& key, const std::string& path) {
        if (!j.is_object()) fail(path, "expected an object");
        const auto it = j.find(key);
        if (it == j.end()) fail(join(path, key), "missing");
        return *it;
    }

    static const json* optional_member(const json& j, const std::string& key, const std::string& path) {
        if (!j.is_object()) fail(path, "expected an object");
        const auto it = j.find(key);
        return it == j.end() ? nullptr : &*it;
    }

    static double number(const json& j, const std::string& path) {
        if (!j.is_number()) fail(path, "expected a number");
        return j.get<double>();
    }

    static int integer(const json& j, const std::string& path) {
        if (!j.is_number_integer()) fail(path, "expected an integer");
        return j.get<int>();
    }

    static std::string string(const json& j, const std::string& path) {
        if (!j.is_string()) fail(path, "expected a string");
        return j.get<std::string>();
    }

    static bool boolean(const json& j, const std::string& path) {
        if (!j.is_boolean()) fail(path, "expected true or false");
        return j.get<bool>();
    }

    static const json& array(const json& j, const std::string& path) {
        if (!j.is_array()) fail(path, "expected an array");
        return j;
    }

    static Vec2 vec2(const json& j, const std::string& path) {
        if (!j.is_array() || j.size() != 2) fail(path, "expected [x, y]");
        return {number(j[0], path + "[0]"), number(j[1], path + "[1]")};
    }

    static Rect rect(const json& j, const std::string& path) {
        if (!j.is_array() || j.size() != 4) fail(path, "expected [x0, y0, x1, y1]");
        Rect r{number(j[0], path + "[0]"), number(j[1], path + "[1]"), number(j[2], path + "[2]"),
               number(j[3], path + "[3]")};
        if (!(r.x1 > r.x0) || !(r.y1 > r.y0)) fail(path, "rectangle must have positive area");
        return r;
    }

    static std::vector<Rect> rects(const json& j, const std::string& path) {
        std::vector<Rect> out;
        for (std::size_t i = 0; i < array(j, path).size(); ++i) out.push_back(rect(j[i], index(path, i)));
        return out;
    }

    static std::string join(const std::string& path, const std::string& key) {
        return path.empty() ? key : path + "." + key;
    }
    static std::string index(const std::string& path, std::size_t i) {
        return path + "[" + std::to_string(i) + "]";
    }
};

inline json rect_json(const Rect& r) { return json::array({r.x0, r.y0, r.x1, r.y1}); }

inline BoundarySpec parse_boundary(const json& j, const std::string& path, bool adjoint) {
    using R = Reader;
    BoundarySpec spec;
    for (std::size_t i = 0; i < R::array(j, path).size(); ++i) {
        const std::string p = R::index(path, i);
        const json& e = j[i];
        BoundaryRule rule;
        if (const json* s = R::optional_member(e, "side", p)) {
            const auto side = side_from_string(R::string(*s, R::join(p, "side")));
            if (!side) R::fail(R::join(p, "side"), "expected west, east, south or north");
            rule.where.side = side;
        }
        if (const json* l = R::optional_member(e, "line", p)) rule.where.line = R::number(*l, R::join(p, "line"));
        if (const json* r = R::optional_member(e, "range", p)) {
            const Vec2 lohi = R::vec2(*r, R::join(p, "range"));
            rule.where.range = std::make_pair(lohi.x, lohi.y);
        }
        rule.condition.alpha = R::number(R::member(e, "alpha", p), R::join(p, "alpha"));
        if (!(rule.condition.alpha >= 0.0)) R::fail(R::join(p, "alpha"), "α must be non-negative");
        if (const json* pb = R::optional_member(e, "P_b", p)) {
            if (R::number(*pb, R::join(p, "P_b")) != 0.0)
                R::fail(R::join(p, "P_b"), "exterior pollution P_b must be zero");
        }
        if (const json* cc = R::optional_member(e, "convective_correction", p)) {
            rule.condition.convective_correction = R::boolean(*cc, R::join(p, "convective_correction"));
            if (rule.condition.convective_correction && !adjoint)
                R::fail(R::join(p, "convective_correction"), "only valid in adjoint_boundary");
        }
        spec.rules.push_back(rule);
    }
    if (spec.rules.empty()) R::fail(path, "at least one boundary rule is required");
    return spec;
}

inline json boundary_json(const BoundarySpec& spec, bool adjoint) {
    json out = json::array();
    for (const auto& r : spec.rules) {
        json e = json::object();
        if (r.where.side) e["side"] = to_string(*r.where.side);
        if (r.where.line) e["line"] = *r.where.line;
        if (r.where.range) e["range"] = json::array({r.where.range->first, r.where.range->second});
        e["alpha"] = r.condition.alpha;
        if (adjoint) e["convective_correction"] = r.condition.convective_correction;
        out.push_back(e);
    }
    return out;
}

inline ConvectionField parse_convection(const json& j, const std::string& path) {
    using R = Reader;
    ConvectionField f;
    if (const json* fb = R::optional_member(j, "fallback", path)) f.fallback = R::vec2(*fb, R::join(path, "fallback"));
    if (const json* pieces = R::optional_member(j, "pieces", path)) {
        const std::string pp = R::join(path, "pieces");
        for (std::size_t i = 0; i < R::array(*pieces, pp).size(); ++i) {
            const std::string p = R::index(pp, i);
            ConvectionPiece piece;
            piece.value = R::vec2(R::member((*pieces)[i], "value", p), R::join(p, "value"));
            if (const json* where = R::optional_member((*pieces)[i], "where", p)) {
                const std::string wp = R::join(p, "where");
                for (std::size_t k = 0; k < R::array(*where, wp).size(); ++k) {
                    const std::string cp = R::index(wp, k);
                    ConvectionClause clause;
                    if (const json* r = R::optional_member((*where)[k], "rect", cp))
                        clause.rect = R::rect(*r, R::join(cp, "rect"));
                    if (const json* hs = R::optional_member((*where)[k], "halfplanes", cp)) {
                        const std::string hp = R::join(cp, "halfplanes");
                        for (std::size_t m = 0; m < R::array(*hs, hp).size(); ++m) {
                            const std::string q = R::index(hp, m);
                            const json& h = (*hs)[m];
                            HalfPlane plane;
                            plane.a = R::number(R::member(h, "a", q), R::join(q, "a"));
                            plane.b = R::number(R::member(h, "b", q), R::join(q, "b"));
                            plane.c = R::number(R::member(h, "c", q), R::join(q, "c"));
                            const std::string rel = R::string(R::member(h, "relation", q), R::join(q, "relation"));
                            if (rel == "<")
                                plane.relation = HalfPlane::Relation::Less;
                            else if (rel == ">=")
                                plane.relation = HalfPlane::Relation::GreaterEqual;
                            else
                                R::fail(R::join(q, "relation"), "expected \"<\" or \">=\"");
                            clause.halfplanes.push_back(plane);
                        }
                    }
                    piece.where.push_back(std::move(clause));
                }
            }
            f.pieces.push_back(std::move(piece));
        }
    }
    return f;
}

inline json convection_json(const ConvectionField& f) {
    json pieces = json::array();
    for (const auto& p : f.pieces) {
        json where = json::array();
        for (const auto& c : p.where) {
            json cl = json::object();
            if (c.rect) cl["rect"] = rect_json(*c.rect);
            if (!c.halfplanes.empty()) {
                json hs = json::array();
                for (const auto& h : c.halfplanes)
                    hs.push_back({{"a", h.a},
                                  {"b", h.b},
                                  {"c", h.c},
                                  {"relation", h.relation == HalfPlane::Relation::Less ? "<" : ">="}});
                cl["halfplanes"] = hs;
            }
            where.push_back(cl);
        }
        json e = {{"value", json::array({p.value.x, p.value.y})}};
        if (!where.empty()) e["where"] = where;
        pieces.push_back(e);
    }
    return {{"fallback", json::array({f.fallback.x, f.fallback.y})}, {"pieces", pieces}};
}

} // namespace detail

inline json to_json(const Scenario& s) {
    using detail::rect_json;
    json j;
    j["name"] = s.name;
    if (!s.description.empty()) j["description"] = s.description;
    json dom = json::array();
    for (const auto& r : s.domain) dom.push_back(rect_json(r));
    j["domain"] = dom;
    j["grid"] = {{"nx", s.nx}, {"ny", s.ny}};
    json regions = json::array();
    for (const auto& reg : s.regions) {
        json rr = json::array();
        for (const auto& r : reg) rr.push_back(rect_json(r));
        regions.push_back(rr);
    }
    j["regions"] = regions;
    j["coefficients"] = {{"k", s.k}, {"c", s.c}, {"rho", s.rho}, {"phi", s.phi}};
    j["boundary"] = detail::boundary_json(s.boundary, false);
    if (s.adjoint_boundary) j["adjoint_boundary"] = detail::boundary_json(*s.adjoint_boundary, true);
    j["convection"] = detail::convection_json(s.convection);
    j["simulation"] = {{"T", s.simulation.T},
                       {"dt", s.simulation.dt},
                       {"deviation_scales", s.simulation.deviation_scales},
                       {"deviation_players", s.simulation.deviation_players}};
    j["output"] = {{"format", s.output_format}};
    json ex = json::array();
    for (const auto& e : s.expectations) {
        json o = e.params.is_object() ? e.params : json::object();
        o["type"] = e.type;
        ex.push_back(o);
    }
    j["expectations"] = ex;
    return j;
}

inline std::string serialize_scenario(const Scenario& s) { return to_json(s).dump(2) + "\n"; }

/// Builds the discrete problem. Throws InputError on any geometric or
/// coefficient invariant violation.
inline Problem build_problem(const Scenario& s) {
    Grid grid = build_grid(s.domain, s.nx, s.ny);
    RegionPartition part = partition_regions(grid, s.regions, s.players());
    Coefficients coeff = Coefficients::uniform(grid, s.k, s.c, s.rho, s.phi);
    return make_problem(std::move(grid), std::move(part), std::move(coeff), s.convection, s.boundary,
                        s.adjoint_boundary);
}

/// Checks every invariant without assembling operators.
inline void validate_scenario(const Scenario& s) {
    if (!(s.k > 0.0)) throw InputError("coefficients.k: k must be positive");
    if (!(s.c >= 0.0)) throw InputError("coefficients.c: c must be non-negative");
    if (!(s.rho > 0.0)) throw InputError("coefficients.rho: ρ must be positive");
    if (s.regions.empty()) throw InputError("regions: at least one player is required");
    if (s.phi.size() != s.regions.size())
        throw InputError("coefficients.phi: expected one φ per region (" + std::to_string(s.regions.size()) + ")");
    for (std::size_t i = 0; i < s.phi.size(); ++i)
        if (!(s.phi[i] > 0.0))
            throw InputError("coefficients.phi[" + std::to_string(i) + "]: φ must be positive");
    if (!(s.simulation.dt > 0.0)) throw InputError("simulation.dt: must be positive");
    if (!(s.simulation.T >= s.simulation.dt)) throw InputError("simulation.T: must be at least dt");
    for (double v : s.simulation.deviation_scales)
        if (!(v > 0.0)) throw InputError("simulation.deviation_scales: scales must be positive");
    for (int p : s.simulation.deviation_players)
        if (p < 1 || p > s.players()) throw InputError("simulation.deviation_players: player index out of range");
    if (s.output_format != "csv" && s.output_format != "vtk")
        throw InputError("output.format: expected csv or vtk");
    const Grid grid = build_grid(s.domain, s.nx, s.ny);
    partition_regions(grid, s.regions, s.players());
    s.boundary.resolve(grid);
    if (s.adjoint_boundary) s.adjoint_boundary->resolve(grid);
}

inline Scenario scenario_from_json(const json& j) {
    using R = detail::Reader;
    Scenario s;
    s.name = R::string(R::member(j, "name", ""), "name");
    if (const json* d = R::optional_member(j, "description", "")) s.description = R::string(*d, "description");
    s.domain = R::rects(R::member(j, "domain", ""), "domain");
    const json& grid = R::member(j, "grid", "");
    s.nx = R::integer(R::member(grid, "nx", "grid"), "grid.nx");
    s.ny = R::integer(R::member(grid, "ny", "grid"), "grid.ny");
    const json& regions = R::member(j, "regions", "");
    for (std::size_t i = 0; i < R::array(regions, "regions").size(); ++i)
        s.regions.push_back(R::rects(regions[i], R::index("regions", i)));

    const json& co = R::member(j, "coefficients", "");
    s.k = R::number(R::member(co, "k", "coefficients"), "coefficients.k");
    s.c = R::number(R::member(co, "c", "coefficients"), "coefficients.c");
    s.rho = R::number(R::member(co, "rho", "coefficients"), "coefficients.rho");
    const json& phi = R::member(co, "phi", "coefficients");
    if (phi.is_number()) {
        s.phi.assign(s.regions.size(), phi.get<double>());
    } else {
        for (std::size_t i = 0; i < R::array(phi, "coefficients.phi").size(); ++i)
            s.phi.push_back(R::number(phi[i], R::index("coefficients.phi", i)));
    }

    s.boundary = detail::parse_boundary(R::member(j, "boundary", ""), "boundary", false);
    if (const json* ab = R::optional_member(j, "adjoint_boundary", ""))
        s.adjoint_boundary = detail::parse_boundary(*ab, "adjoint_boundary", true);
    if (const json* cv = R::optional_member(j, "convection", "")) s.convection = detail::parse_convection(*cv, "convection");

    if (const json* sim = R::optional_member(j, "simulation", "")) {
        if (const json* v = R::optional_member(*sim, "T", "simulation")) s.simulation.T = R::number(*v, "simulation.T");
        if (const json* v = R::optional_member(*sim, "dt", "simulation")) s.simulation.dt = R::number(*v, "simulation.dt");
        if (const json* v = R::optional_member(*sim, "deviation_scales", "simulation")) {
            s.simulation.deviation_scales.clear();
            for (std::size_t i = 0; i < R::array(*v, "simulation.deviation_scales").size(); ++i)
                s.simulation.deviation_scales.push_back(R::number((*v)[i], R::index("simulation.deviation_scales", i)));
        }
        if (const json* v = R::optional_member(*sim, "deviation_players", "simulation")) {
            for (std::size_t i = 0; i < R::array(*v, "simulation.deviation_players").size(); ++i)
                s.simulation.deviation_players.push_back(
                    R::integer((*v)[i], R::index("simulation.deviation_players", i)));
        }
    }
    if (const json* out = R::optional_member(j, "output", "")) {
        if (const json* f = R::optional_member(*out, "format", "output")) s.output_format = R::string(*f, "output.format");
    }
    if (const json* ex = R::optional_member(j, "expectations", "")) {
        for (std::size_t i = 0; i < R::array(*ex, "expectations").size(); ++i) {
            const std::string p = R::index("expectations", i);
            Expectation e;
            e.type = R::string(R::member((*ex)[i], "type", p), R::join(p, "type"));
            e.params = (*ex)[i];
            e.params.erase("type");
            s.expectations.push_back(std::move(e));
        }
    }
    validate_scenario(s);
    return s;
}

inline Scenario parse_scenario_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("scenario: ") + e.what());
    }
    return scenario_from_json(j);
}

inline Scenario parse_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("scenario: cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    Scenario s;
    try {
        s = parse_scenario_text(buf.str());
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
    s.source = path;
    return s;
}

} // namespace tbpgame
