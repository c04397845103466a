#include "poro/io.hpp"

#include "poro/error.hpp"

#include <cstdio>
#include <fstream>

namespace poro {

std::string csv_number(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header)
    : out_(out), columns_(header.size())
{
    row_text(header);
}

void CsvWriter::row_text(const std::vector<std::string>& cells)
{
    if (cells.size() != columns_) {
        throw DimensionError("CsvWriter: row has " + std::to_string(cells.size()) + " cells, header has " +
                             std::to_string(columns_));
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
        out_ << (i ? "," : "") << cells[i];
    }
    out_ << '\n';
}

void CsvWriter::row(const std::vector<std::optional<double>>& cells)
{
    std::vector<std::string> text;
    text.reserve(cells.size());
    for (const auto& c : cells) {
        text.push_back(c ? csv_number(*c) : std::string());
    }
    row_text(text);
}

void write_vtk(std::ostream& out, const Mesh& mesh, const DofMap& dofs, const FieldState& s,
               const std::string& title)
{
    const int nv = mesh.num_vertices();
    if (s.u.size() != dofs.num_u() || s.p.size() != nv || s.xi.size() != nv || s.eta.size() != nv ||
        s.q.size() != nv) {
        throw DimensionError("write_vtk: state does not match the mesh");
    }
    out << "# vtk DataFile Version 2.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << nv << " double\n";
    for (const Vec2& x : mesh.vertices) {
        out << csv_number(x.x()) << ' ' << csv_number(x.y()) << " 0\n";
    }
    const int nt = mesh.num_triangles();
    out << "CELLS " << nt << ' ' << 4 * nt << '\n';
    for (const auto& t : mesh.triangles) {
        out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    }
    out << "CELL_TYPES " << nt << '\n';
    for (int i = 0; i < nt; ++i) {
        out << "5\n";
    }
    out << "POINT_DATA " << nv << '\n';
    out << "VECTORS displacement double\n";
    for (int v = 0; v < nv; ++v) {
        out << csv_number(s.u[dofs.u_dof(v, 0)]) << ' ' << csv_number(s.u[dofs.u_dof(v, 1)]) << " 0\n";
    }
    const auto scalars = [&](const char* name, const Vector& f) {
        out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (int v = 0; v < nv; ++v) {
            out << csv_number(f[v]) << '\n';
        }
    };
    scalars("pressure", s.p);
    scalars("xi", s.xi);
    scalars("eta", s.eta);
    scalars("q", s.q);
}

void write_text_file(const std::string& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw Error("cannot open '" + path + "' for writing");
    }
    f << text;
    if (!f) {
        throw Error("failed writing '" + path + "'");
    }
}

} // namespace poro
