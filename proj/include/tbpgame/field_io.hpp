#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "tbpgame/assembly.hpp"
#include "tbpgame/error.hpp"
#include "tbpgame/geometry.hpp"

namespace tbpgame {

enum class FieldFormat { Csv, Vtk };

/// Value written for inactive bounding-box cells in VTK output.
inline constexpr double vtk_blank = -9999.0;

/// Shortest-exact is not required; 17 significant digits round-trip any double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw InputError("cannot parse number '" + std::string(s) + "'");
    return v;
}

/// Rows `x,y,value` at cell centers in row-major order (y outer, x inner).
inline void write_field_csv(std::ostream& os, const Field& f, const Grid& grid) {
    os << "x,y,value\n";
    for (int c = 0; c < static_cast<int>(grid.size()); ++c) {
        const Vec2 xc = grid.center(c);
        os << format_double(xc.x) << ',' << format_double(xc.y) << ',' << format_double(f[c]) << '\n';
    }
}

/// Legacy VTK structured points with cell data over the bounding box.
inline void write_field_vtk(std::ostream& os, const Field& f, const Grid& grid, const std::string& name) {
    os << "# vtk DataFile Version 3.0\n"
       << name << "\n"
       << "ASCII\n"
       << "DATASET STRUCTURED_POINTS\n"
       << "DIMENSIONS " << grid.nx() + 1 << ' ' << grid.ny() + 1 << " 1\n"
       << "ORIGIN " << format_double(grid.x0()) << ' ' << format_double(grid.y0()) << " 0\n"
       << "SPACING " << format_double(grid.hx()) << ' ' << format_double(grid.hy()) << " 1\n"
       << "CELL_DATA " << grid.nx() * grid.ny() << "\n"
       << "SCALARS " << name << " double 1\n"
       << "LOOKUP_TABLE default\n";
    for (int j = 0; j < grid.ny(); ++j) {
        for (int i = 0; i < grid.nx(); ++i) {
            const int c = grid.index(i, j);
            os << format_double(c >= 0 ? f[c] : vtk_blank) << '\n';
        }
    }
}

inline void write_field(const Field& f, const Grid& grid, FieldFormat format, const std::filesystem::path& path,
                        const std::string& name = "field") {
    if (f.size() != static_cast<Eigen::Index>(grid.size())) throw InputError("write_field: field does not match grid");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_field: cannot open " + path.string());
    if (format == FieldFormat::Csv)
        write_field_csv(out, f, grid);
    else
        write_field_vtk(out, f, grid, name);
    if (!out) throw Error("write_field: write failed for " + path.string());
}

/// Reads a CSV written by write_field_csv for the same grid.
inline Field read_field_csv(const std::filesystem::path& path, const Grid& grid) {
    std::ifstream in(path);
    if (!in) throw InputError("read_field_csv: cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "x,y,value")
        throw InputError("read_field_csv: missing header in " + path.string());
    Field f(static_cast<Eigen::Index>(grid.size()));
    int c = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (c >= static_cast<int>(grid.size())) throw InputError("read_field_csv: too many rows");
        const auto p1 = line.find(',');
        const auto p2 = line.find(',', p1 + 1);
        if (p1 == std::string::npos || p2 == std::string::npos)
            throw InputError("read_field_csv: malformed row " + std::to_string(c + 2));
        const std::string_view sv(line);
        const double x = parse_double(sv.substr(0, p1));
        const double y = parse_double(sv.substr(p1 + 1, p2 - p1 - 1));
        const Vec2 xc = grid.center(c);
        if (std::abs(x - xc.x) > 1e-9 * (1.0 + std::abs(xc.x)) || std::abs(y - xc.y) > 1e-9 * (1.0 + std::abs(xc.y)))
            throw InputError("read_field_csv: row " + std::to_string(c + 2) + " does not match the grid");
        f[c++] = parse_double(sv.substr(p2 + 1));
    }
    if (c != static_cast<int>(grid.size())) throw InputError("read_field_csv: too few rows");
    return f;
}

} // namespace tbpgame
