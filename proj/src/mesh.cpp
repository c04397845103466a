#include "poro/mesh.hpp"

#include "poro/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>

namespace poro {

Vec2 outward_normal(Side s)
{
    switch (s) {
    case Side::Gamma1: return {1.0, 0.0};
    case Side::Gamma2: return {0.0, -1.0};
    case Side::Gamma3: return {-1.0, 0.0};
    case Side::Gamma4: return {0.0, 1.0};
    }
    return {0.0, 0.0};
}

Vec2 Mesh::p2_node(int node) const
{
    if (node < num_vertices()) {
        return vertices[node];
    }
    const Edge& e = edges[node - num_vertices()];
    return 0.5 * (vertices[e.v[0]] + vertices[e.v[1]]);
}

std::array<int, 6> Mesh::p2_nodes_of(int tri) const
{
    const auto& t = triangles[tri];
    const auto& te = triangle_edges[tri];
    return {t[0], t[1], t[2], edges[te[0]].midpoint_node, edges[te[1]].midpoint_node,
            edges[te[2]].midpoint_node};
}

double Mesh::signed_area(int tri) const
{
    const auto& t = triangles[tri];
    const Vec2 a = vertices[t[1]] - vertices[t[0]];
    const Vec2 b = vertices[t[2]] - vertices[t[0]];
    return 0.5 * (a.x() * b.y() - a.y() * b.x());
}

Mesh build_rect_mesh(int nx, int ny, const Rect& rect)
{
    if (nx < 1 || ny < 1) {
        throw InvalidArgument("build_rect_mesh: cell counts must be >= 1, got nx=" +
                              std::to_string(nx) + " ny=" + std::to_string(ny));
    }
    if (!(rect.x1 > rect.x0) || !(rect.y1 > rect.y0)) {
        throw InvalidArgument("build_rect_mesh: degenerate rectangle");
    }

    Mesh mesh;
    mesh.rect = rect;
    mesh.nx = nx;
    mesh.ny = ny;

    const double dx = (rect.x1 - rect.x0) / nx;
    const double dy = (rect.y1 - rect.y0) / ny;
    mesh.vertices.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            // Pin the last row/column to the rectangle exactly.
            const double x = (i == nx) ? rect.x1 : rect.x0 + i * dx;
            const double y = (j == ny) ? rect.y1 : rect.y0 + j * dy;
            mesh.vertices.emplace_back(x, y);
        }
    }

    // Every cell is split along its (i,j)-(i+1,j+1) diagonal.
    mesh.triangles.reserve(static_cast<std::size_t>(2 * nx * ny));
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int v00 = mesh.vertex_at(i, j);
            const int v10 = mesh.vertex_at(i + 1, j);
            const int v11 = mesh.vertex_at(i + 1, j + 1);
            const int v01 = mesh.vertex_at(i, j + 1);
            mesh.triangles.push_back({v00, v10, v11});
            mesh.triangles.push_back({v00, v11, v01});
        }
    }

    std::map<std::pair<int, int>, int> edge_index;
    std::vector<int> edge_owner_count;
    mesh.triangle_edges.resize(mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        for (int k = 0; k < 3; ++k) {
            int a = tri[k];
            int b = tri[(k + 1) % 3];
            if (a > b) {
                std::swap(a, b);
            }
            auto [it, inserted] = edge_index.try_emplace({a, b}, mesh.num_edges());
            if (inserted) {
                mesh.edges.push_back(Edge{{a, b}, -1});
                edge_owner_count.push_back(0);
            }
            ++edge_owner_count[it->second];
            mesh.triangle_edges[t][k] = it->second;
        }
    }
    for (int e = 0; e < mesh.num_edges(); ++e) {
        mesh.edges[e].midpoint_node = mesh.num_vertices() + e;
    }

    mesh.edge_side.assign(mesh.edges.size(), std::nullopt);
    for (int e = 0; e < mesh.num_edges(); ++e) {
        if (edge_owner_count[e] == 1) {
            mesh.boundary_edges.push_back(BoundaryEdge{e, Side::Gamma1});
        }
    }

    double h = 0.0;
    for (const auto& e : mesh.edges) {
        h = std::max(h, (mesh.vertices[e.v[1]] - mesh.vertices[e.v[0]]).norm());
    }
    mesh.h = h;

    classify_boundary(mesh);
    return mesh;
}

void classify_boundary(Mesh& mesh)
{
    constexpr double tol = 1e-12;
    const Rect& r = mesh.rect;
    mesh.edge_side.assign(mesh.edges.size(), std::nullopt);
    for (auto& be : mesh.boundary_edges) {
        const Edge& e = mesh.edges[be.edge];
        const Vec2 m = 0.5 * (mesh.vertices[e.v[0]] + mesh.vertices[e.v[1]]);
        if (std::abs(m.x() - r.x1) <= tol) {
            be.side = Side::Gamma1;
        } else if (std::abs(m.y() - r.y0) <= tol) {
            be.side = Side::Gamma2;
        } else if (std::abs(m.x() - r.x0) <= tol) {
            be.side = Side::Gamma3;
        } else if (std::abs(m.y() - r.y1) <= tol) {
            be.side = Side::Gamma4;
        } else {
            throw InternalConsistencyError("classify_boundary: boundary edge " +
                                           std::to_string(be.edge) +
                                           " does not lie on any rectangle side");
        }
        mesh.edge_side[be.edge] = be.side;
    }
}

} // namespace poro
