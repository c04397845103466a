#include "poro/elements.hpp"

#include "poro/error.hpp"

#include <Eigen/LU>

#include <cmath>
#include <string>

namespace poro {

namespace {

const std::array<Vec2, 3> kBaryGrad{Vec2(-1.0, -1.0), Vec2(1.0, 0.0), Vec2(0.0, 1.0)};

void add_s3(QuadratureRule& r, double w)
{
    r.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
    r.weights.push_back(w);
}

void add_s21(QuadratureRule& r, double a, double w)
{
    const double b = 1.0 - 2.0 * a;
    r.points.push_back({a, a, b});
    r.points.push_back({a, b, a});
    r.points.push_back({b, a, a});
    r.weights.insert(r.weights.end(), 3, w);
}

void add_s111(QuadratureRule& r, double a, double b, double w)
{
    const double c = 1.0 - a - b;
    r.points.push_back({a, b, c});
    r.points.push_back({a, c, b});
    r.points.push_back({b, a, c});
    r.points.push_back({b, c, a});
    r.points.push_back({c, a, b});
    r.points.push_back({c, b, a});
    r.weights.insert(r.weights.end(), 6, w);
}

} // namespace

int num_basis(BasisKind kind)
{
    return kind == BasisKind::P1 ? 3 : 6;
}

BasisEval eval_basis(BasisKind kind, const Bary& l)
{
    constexpr double tol = 1e-14;
    const double sum = l[0] + l[1] + l[2];
    if (std::abs(sum - 1.0) > tol || l[0] < -tol || l[1] < -tol || l[2] < -tol) {
        throw InvalidArgument("eval_basis: point is outside the reference simplex");
    }

    BasisEval out;
    if (kind == BasisKind::P1) {
        out.values = {l[0], l[1], l[2]};
        out.ref_gradients = {kBaryGrad[0], kBaryGrad[1], kBaryGrad[2]};
        return out;
    }

    out.values.resize(6);
    out.ref_gradients.resize(6);
    for (int i = 0; i < 3; ++i) {
        out.values[i] = l[i] * (2.0 * l[i] - 1.0);
        out.ref_gradients[i] = (4.0 * l[i] - 1.0) * kBaryGrad[i];
    }
    for (int k = 0; k < 3; ++k) {
        const int i = k;
        const int j = (k + 1) % 3;
        out.values[3 + k] = 4.0 * l[i] * l[j];
        out.ref_gradients[3 + k] = 4.0 * (l[j] * kBaryGrad[i] + l[i] * kBaryGrad[j]);
    }
    return out;
}

QuadratureRule triangle_quadrature(int min_degree)
{
    QuadratureRule r;
    switch (min_degree) {
    case 1:
        add_s3(r, 0.5);
        r.exactness_degree = 1;
        break;
    case 2:
        add_s21(r, 1.0 / 6.0, 1.0 / 6.0);
        r.exactness_degree = 2;
        break;
    case 3:
    case 4:
        add_s21(r, 0.4459484909159648863183293, 0.1116907948390057328475035);
        add_s21(r, 0.09157621350977074345957146, 0.05497587182766093381916316);
        r.exactness_degree = 4;
        break;
    case 5: {
        const double s15 = std::sqrt(15.0);
        add_s3(r, 9.0 / 80.0);
        add_s21(r, (6.0 - s15) / 21.0, (155.0 - s15) / 2400.0);
        add_s21(r, (6.0 + s15) / 21.0, (155.0 + s15) / 2400.0);
        r.exactness_degree = 5;
        break;
    }
    case 6:
        add_s21(r, 0.2492867451709104212916386, 0.05839313786318968301264481);
        add_s21(r, 0.0630890144915022283403316, 0.0254224531851034084604684);
        add_s111(r, 0.05314504984481694735324967, 0.3103524510337844054166077,
                 0.04142553780918678759677673);
        r.exactness_degree = 6;
        break;
    default:
        throw InvalidArgument("triangle_quadrature: unsupported degree " +
                              std::to_string(min_degree) + " (supported: 1..6)");
    }
    return r;
}

QuadratureRule edge_quadrature(int min_degree)
{
    QuadratureRule r;
    auto add = [&r](double s, double w) {
        r.points.push_back({1.0 - s, s, 0.0});
        r.weights.push_back(w);
    };
    if (min_degree == 1) {
        add(0.5, 1.0);
        r.exactness_degree = 1;
    } else if (min_degree == 2 || min_degree == 3) {
        const double d = 0.5 / std::sqrt(3.0);
        add(0.5 - d, 0.5);
        add(0.5 + d, 0.5);
        r.exactness_degree = 3;
    } else if (min_degree == 4 || min_degree == 5) {
        const double d = 0.5 * std::sqrt(0.6);
        add(0.5 - d, 5.0 / 18.0);
        add(0.5, 8.0 / 18.0);
        add(0.5 + d, 5.0 / 18.0);
        r.exactness_degree = 5;
    } else {
        throw InvalidArgument("edge_quadrature: unsupported degree " +
                              std::to_string(min_degree) + " (supported: 1..5)");
    }
    return r;
}

AffineMap affine_map(const Mesh& mesh, int tri)
{
    const auto& t = mesh.triangles[tri];
    const Vec2& x0 = mesh.vertices[t[0]];
    AffineMap m;
    m.origin = x0;
    m.jacobian.col(0) = mesh.vertices[t[1]] - x0;
    m.jacobian.col(1) = mesh.vertices[t[2]] - x0;
    m.det = m.jacobian.determinant();
    m.abs_det = std::abs(m.det);
    m.inv_transpose = m.jacobian.inverse().transpose();
    return m;
}

Tabulation tabulate(BasisKind kind, const QuadratureRule& rule)
{
    Tabulation tab;
    tab.at.reserve(rule.size());
    for (const auto& p : rule.points) {
        tab.at.push_back(eval_basis(kind, p));
    }
    return tab;
}

} // namespace poro
