#pragma once

#include <Eigen/Core>

#include <array>
#include <optional>
#include <vector>

namespace poro {

using Vec2 = Eigen::Vector2d;

// Sides of an axis-aligned rectangle: right, bottom, left, top.
enum class Side { Gamma1 = 0, Gamma2 = 1, Gamma3 = 2, Gamma4 = 3 };

inline constexpr std::array<Side, 4> kAllSides{Side::Gamma1, Side::Gamma2, Side::Gamma3,
                                                Side::Gamma4};

inline int side_index(Side s) { return static_cast<int>(s); }

/// Outward unit normal of a rectangle side.
Vec2 outward_normal(Side s);

struct Rect {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 1.0;
    double y1 = 1.0;

    double area() const { return (x1 - x0) * (y1 - y0); }
};

struct Edge {
    std::array<int, 2> v;   // vertex indices, v[0] < v[1]
    int midpoint_node = -1; // P2 node index (num_vertices + edge index)
};

struct BoundaryEdge {
    int edge = -1;
    Side side = Side::Gamma1;
};

/// Structured triangulation of a rectangle.
///
/// P2 node numbering: vertices first (same indices), then one node per edge at
/// index `num_vertices() + edge`. Each triangle lists its vertices counterclockwise
/// and its edges in the local order (v0,v1), (v1,v2), (v2,v0).
class Mesh {
public:
    Rect rect;
    int nx = 0;
    int ny = 0;
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<std::array<int, 3>> triangle_edges;
    std::vector<Edge> edges;
    std::vector<BoundaryEdge> boundary_edges;
    std::vector<std::optional<Side>> edge_side; // per edge, empty for interior edges
    double h = 0.0;

    int num_vertices() const { return static_cast<int>(vertices.size()); }
    int num_triangles() const { return static_cast<int>(triangles.size()); }
    int num_edges() const { return static_cast<int>(edges.size()); }
    int num_p2_nodes() const { return num_vertices() + num_edges(); }

    Vec2 p2_node(int node) const;
    std::array<int, 6> p2_nodes_of(int tri) const;
    double signed_area(int tri) const;
    bool is_boundary_edge(int e) const { return edge_side[e].has_value(); }

    /// Vertex index of grid point (i, j).
    int vertex_at(int i, int j) const { return j * (nx + 1) + i; }
};

Mesh build_rect_mesh(int nx, int ny, const Rect& rect = {});

/// Tags boundary edges (edges owned by a single triangle) by the side their
/// midpoint lies on.
void classify_boundary(Mesh& mesh);

} // namespace poro
