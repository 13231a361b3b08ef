#include "twoscale/vtk.hpp"

#include <fstream>
#include <stdexcept>

namespace twoscale {

namespace {

std::ofstream open_or_throw(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out.precision(16);
    return out;
}

void write_header(std::ofstream& out, const std::string& title, std::size_t n_points) {
    out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << n_points << " double\n";
}

void write_cells(std::ofstream& out, const std::vector<std::array<int, 4>>& cells) {
    out << "CELLS " << cells.size() << " " << cells.size() * 5 << "\n";
    for (const auto& c : cells) out << "4 " << c[0] << " " << c[1] << " " << c[2] << " " << c[3] << "\n";
    out << "CELL_TYPES " << cells.size() << "\n";
    for (std::size_t i = 0; i < cells.size(); ++i) out << "9\n";
}

void write_scalars(std::ofstream& out, const std::string& name, const std::vector<double>& v) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double a : v) out << a << "\n";
}

}  // namespace

void write_vtk_macro(const Grid& grid,
                     const std::vector<std::pair<std::string, const std::vector<double>*>>& fields,
                     const std::string& path) {
    for (const auto& [name, values] : fields)
        if (static_cast<int>(values->size()) != grid.node_count())
            throw std::runtime_error("field '" + name + "' does not match the node count");

    std::ofstream out = open_or_throw(path);
    write_header(out, "macro solution", grid.node_count());
    for (int i = 0; i < grid.node_count(); ++i) {
        const Vec2 p = grid.node(i);
        out << p.x << " " << p.y << " 0\n";
    }
    std::vector<std::array<int, 4>> cells(grid.cell_count());
    for (int c = 0; c < grid.cell_count(); ++c) cells[c] = grid.cell_nodes(c);
    write_cells(out, cells);
    out << "POINT_DATA " << grid.node_count() << "\n";
    for (const auto& [name, values] : fields) write_scalars(out, name, *values);
}

void write_vtk_micro(const MicroField& V, const Grid& macro, const Grid& micro,
                     const CompiledDiffeo& map, double scale, const std::string& path) {
    const int n_patch = micro.node_count();
    const std::size_t n_points = std::size_t(macro.node_count()) * n_patch;

    std::ofstream out = open_or_throw(path);
    write_header(out, "micro solutions (pushed forward)", n_points);
    for (int i = 0; i < macro.node_count(); ++i) {
        const Vec2 x = macro.node(i);
        for (int j = 0; j < n_patch; ++j) {
            const Vec2 y = map.map(x, micro.node(j));
            out << x.x + scale * y.x << " " << x.y + scale * y.y << " 0\n";
        }
    }
    std::vector<std::array<int, 4>> cells;
    cells.reserve(std::size_t(macro.node_count()) * micro.cell_count());
    for (int i = 0; i < macro.node_count(); ++i) {
        const int offset = i * n_patch;
        for (int c = 0; c < micro.cell_count(); ++c) {
            auto nodes = micro.cell_nodes(c);
            cells.push_back({nodes[0] + offset, nodes[1] + offset, nodes[2] + offset,
                             nodes[3] + offset});
        }
    }
    write_cells(out, cells);
    out << "POINT_DATA " << n_points << "\n";
    out << "SCALARS v double 1\nLOOKUP_TABLE default\n";
    for (int i = 0; i < macro.node_count(); ++i)
        for (int j = 0; j < n_patch; ++j) out << V[i][j] << "\n";
}

}  // namespace twoscale
