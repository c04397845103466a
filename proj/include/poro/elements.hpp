#pragma once

#include "poro/mesh.hpp"

#include <Eigen/Core>

#include <array>
#include <vector>

namespace poro {

using Mat2 = Eigen::Matrix2d;
using Bary = std::array<double, 3>;

enum class BasisKind { P1, P2 };

/// Basis values and gradients with respect to the reference coordinates
/// (r, s), where the reference triangle is (0,0), (1,0), (0,1) and the
/// barycentric coordinates are (1 - r - s, r, s).
struct BasisEval {
    std::vector<double> values;
    std::vector<Vec2> ref_gradients;
};

int num_basis(BasisKind kind);

/// P1: the three barycentric coordinates. P2: vertex functions l_i(2 l_i - 1)
/// followed by edge functions 4 l0 l1, 4 l1 l2, 4 l2 l0.
BasisEval eval_basis(BasisKind kind, const Bary& point);

struct QuadratureRule {
    std::vector<Bary> points; // barycentric for triangles; (1-s, s, 0) for edges
    std::vector<double> weights;
    int exactness_degree = 0;

    std::size_t size() const { return weights.size(); }
};

/// Symmetric rule on the reference triangle (weights sum to 1/2).
QuadratureRule triangle_quadrature(int min_degree);

/// Gauss-Legendre rule on the unit interval; the edge parameter s is stored as
/// the second barycentric coordinate.
QuadratureRule edge_quadrature(int min_degree);

inline constexpr int kDefaultTriangleDegree = 4;
inline constexpr int kDataTriangleDegree = 6;
inline constexpr int kDefaultEdgeDegree = 5;

struct AffineMap {
    Vec2 origin;
    Mat2 jacobian;     // columns: x1 - x0, x2 - x0
    Mat2 inv_transpose;
    double abs_det = 0.0;
    double det = 0.0;

    Vec2 map(const Bary& b) const { return origin + jacobian * Vec2(b[1], b[2]); }
    Vec2 physical_gradient(const Vec2& ref_grad) const { return inv_transpose * ref_grad; }
};

AffineMap affine_map(const Mesh& mesh, int tri);

/// Basis values and reference gradients tabulated at the points of a rule.
struct Tabulation {
    std::vector<BasisEval> at;
};

Tabulation tabulate(BasisKind kind, const QuadratureRule& rule);

} // namespace poro
