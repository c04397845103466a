#pragma once

#include "poro/assembly.hpp"
#include "poro/mesh.hpp"
#include "poro/stepper.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace poro {

/// %.17g, which reads back to the same double.
std::string csv_number(double v);

/// Comma-separated writer with LF line endings. Empty optionals become empty cells.
class CsvWriter {
public:
    CsvWriter(std::ostream& out, const std::vector<std::string>& header);
    void row(const std::vector<std::optional<double>>& cells);
    void row_text(const std::vector<std::string>& cells);

private:
    std::ostream& out_;
    std::size_t columns_;
};

/// Legacy ASCII VTK 2.0 unstructured grid of the P1 triangles with vertex
/// data: displacement (P2 values at vertices), pressure, xi, eta, q.
void write_vtk(std::ostream& out, const Mesh& mesh, const DofMap& dofs, const FieldState& state,
               const std::string& title = "poroelastic fields");

void write_text_file(const std::string& path, const std::string& text);

} // namespace poro
