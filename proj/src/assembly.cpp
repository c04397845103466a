#include "poro/assembly.hpp"

#include "poro/error.hpp"

#include <Eigen/Dense>
#include <Eigen/QR>

#include <string>

namespace poro {

namespace {

using Triplet = Eigen::Triplet<double>;

void check_dofs(const Mesh& mesh, const DofMap& dofs, const char* who)
{
    if (dofs.num_p2_nodes != mesh.num_p2_nodes() || dofs.num_vertices != mesh.num_vertices()) {
        throw DimensionError(std::string(who) + ": dof map does not match the mesh");
    }
}

SparseMatrix from_triplets(int rows, int cols, const std::vector<Triplet>& trips)
{
    SparseMatrix m(rows, cols);
    m.setFromTriplets(trips.begin(), trips.end());
    m.makeCompressed();
    return m;
}

struct P2EdgeShape {
    double a, b, m; // endpoint v[0], endpoint v[1], midpoint
};

P2EdgeShape p2_edge_shape(double s)
{
    return {(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)};
}

} // namespace

DofMap make_dofmap(const Mesh& mesh)
{
    return {mesh.num_p2_nodes(), mesh.num_vertices()};
}

void add_block(std::vector<Triplet>& target, const SparseMatrix& block, int row0, int col0,
               double scale)
{
    for (int j = 0; j < block.outerSize(); ++j) {
        for (SparseMatrix::InnerIterator it(block, j); it; ++it) {
            target.emplace_back(row0 + static_cast<int>(it.row()), col0 + static_cast<int>(it.col()),
                                scale * it.value());
        }
    }
}

SparseMatrix assemble_elasticity(const Mesh& mesh, const DofMap& dofs, double mu)
{
    check_dofs(mesh, dofs, "assemble_elasticity");
    const QuadratureRule rule = triangle_quadrature(kDefaultTriangleDegree);
    const Tabulation tab = tabulate(BasisKind::P2, rule);

    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 144);
    std::array<Vec2, 6> grad;
    Eigen::Matrix<double, 12, 12> local;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const AffineMap map = affine_map(mesh, t);
        const auto nodes = mesh.p2_nodes_of(t);
        local.setZero();
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const double w = mu * rule.weights[q] * map.abs_det;
            for (int i = 0; i < 6; ++i) {
                grad[i] = map.physical_gradient(tab.at[q].ref_gradients[i]);
            }
            for (int i = 0; i < 6; ++i) {
                for (int j = 0; j < 6; ++j) {
                    const double gg = grad[i].dot(grad[j]);
                    for (int a = 0; a < 2; ++a) {
                        for (int b = 0; b < 2; ++b) {
                            // eps(phi_i e_a) : eps(phi_j e_b)
                            const double v = 0.5 * ((a == b ? gg : 0.0) + grad[i][b] * grad[j][a]);
                            local(2 * i + a, 2 * j + b) += w * v;
                        }
                    }
                }
            }
        }
        for (int i = 0; i < 6; ++i) {
            for (int a = 0; a < 2; ++a) {
                for (int j = 0; j < 6; ++j) {
                    for (int b = 0; b < 2; ++b) {
                        trips.emplace_back(dofs.u_dof(nodes[i], a), dofs.u_dof(nodes[j], b),
                                           local(2 * i + a, 2 * j + b));
                    }
                }
            }
        }
    }
    return from_triplets(dofs.num_u(), dofs.num_u(), trips);
}

SparseMatrix assemble_div(const Mesh& mesh, const DofMap& dofs)
{
    check_dofs(mesh, dofs, "assemble_div");
    const QuadratureRule rule = triangle_quadrature(kDefaultTriangleDegree);
    const Tabulation p2 = tabulate(BasisKind::P2, rule);
    const Tabulation p1 = tabulate(BasisKind::P1, rule);

    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 36);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const AffineMap map = affine_map(mesh, t);
        const auto nodes = mesh.p2_nodes_of(t);
        const auto& verts = mesh.triangles[t];
        Eigen::Matrix<double, 3, 12> local = Eigen::Matrix<double, 3, 12>::Zero();
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const double w = rule.weights[q] * map.abs_det;
            for (int i = 0; i < 6; ++i) {
                const Vec2 g = map.physical_gradient(p2.at[q].ref_gradients[i]);
                for (int k = 0; k < 3; ++k) {
                    const double psi = p1.at[q].values[k];
                    local(k, 2 * i) += w * g.x() * psi;
                    local(k, 2 * i + 1) += w * g.y() * psi;
                }
            }
        }
        for (int k = 0; k < 3; ++k) {
            for (int i = 0; i < 6; ++i) {
                for (int a = 0; a < 2; ++a) {
                    trips.emplace_back(verts[k], dofs.u_dof(nodes[i], a), local(k, 2 * i + a));
                }
            }
        }
    }
    return from_triplets(dofs.num_scalar(), dofs.num_u(), trips);
}

SparseMatrix assemble_scalar_mass(const Mesh& mesh, const DofMap& dofs)
{
    check_dofs(mesh, dofs, "assemble_scalar_mass");
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 9);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const double area = 0.5 * affine_map(mesh, t).abs_det;
        const auto& v = mesh.triangles[t];
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                trips.emplace_back(v[i], v[j], area * (i == j ? 2.0 : 1.0) / 12.0);
            }
        }
    }
    return from_triplets(dofs.num_scalar(), dofs.num_scalar(), trips);
}

SparseMatrix assemble_scalar_stiffness(const Mesh& mesh, const DofMap& dofs, double coef)
{
    check_dofs(mesh, dofs, "assemble_scalar_stiffness");
    const BasisEval p1 = eval_basis(BasisKind::P1, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 9);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const AffineMap map = affine_map(mesh, t);
        const double area = 0.5 * map.abs_det;
        const auto& v = mesh.triangles[t];
        std::array<Vec2, 3> g;
        for (int i = 0; i < 3; ++i) {
            g[i] = map.physical_gradient(p1.ref_gradients[i]);
        }
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                trips.emplace_back(v[i], v[j], coef * area * g[i].dot(g[j]));
            }
        }
    }
    return from_triplets(dofs.num_scalar(), dofs.num_scalar(), trips);
}

SparseMatrix assemble_vector_mass(const Mesh& mesh, const DofMap& dofs)
{
    check_dofs(mesh, dofs, "assemble_vector_mass");
    const QuadratureRule rule = triangle_quadrature(kDefaultTriangleDegree);
    const Tabulation tab = tabulate(BasisKind::P2, rule);
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 72);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const AffineMap map = affine_map(mesh, t);
        const auto nodes = mesh.p2_nodes_of(t);
        Eigen::Matrix<double, 6, 6> local = Eigen::Matrix<double, 6, 6>::Zero();
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const double w = rule.weights[q] * map.abs_det;
            const auto& phi = tab.at[q].values;
            for (int i = 0; i < 6; ++i) {
                for (int j = 0; j < 6; ++j) {
                    local(i, j) += w * phi[i] * phi[j];
                }
            }
        }
        for (int i = 0; i < 6; ++i) {
            for (int j = 0; j < 6; ++j) {
                for (int a = 0; a < 2; ++a) {
                    trips.emplace_back(dofs.u_dof(nodes[i], a), dofs.u_dof(nodes[j], a), local(i, j));
                }
            }
        }
    }
    return from_triplets(dofs.num_u(), dofs.num_u(), trips);
}

LoadVectors assemble_load(const Mesh& mesh, const DofMap& dofs, const SourceFunctions& sources,
                          const BoundaryConditionSpec& bcs, const MaterialParams& params, double t)
{
    check_dofs(mesh, dofs, "assemble_load");
    LoadVectors out{Vector::Zero(dofs.num_u()), Vector::Zero(dofs.num_scalar())};

    const QuadratureRule rule = triangle_quadrature(kDataTriangleDegree);
    const Tabulation p2 = tabulate(BasisKind::P2, rule);
    const Vec2 rho_g = params.rho_g();
    const bool gravity = rho_g.squaredNorm() > 0.0;
    const BasisEval p1c = eval_basis(BasisKind::P1, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});

    if (sources.f || sources.phi || gravity) {
        for (int tri = 0; tri < mesh.num_triangles(); ++tri) {
            const AffineMap map = affine_map(mesh, tri);
            const auto nodes = mesh.p2_nodes_of(tri);
            const auto& verts = mesh.triangles[tri];
            for (std::size_t q = 0; q < rule.size(); ++q) {
                const double w = rule.weights[q] * map.abs_det;
                const Vec2 x = map.map(rule.points[q]);
                if (sources.f) {
                    const Vec2 f = sources.f(x, t);
                    for (int i = 0; i < 6; ++i) {
                        const double phi = p2.at[q].values[i];
                        out.mech[dofs.u_dof(nodes[i], 0)] += w * phi * f.x();
                        out.mech[dofs.u_dof(nodes[i], 1)] += w * phi * f.y();
                    }
                }
                if (sources.phi) {
                    const double s = sources.phi(x, t);
                    for (int k = 0; k < 3; ++k) {
                        out.flow[verts[k]] += w * rule.points[q][k] * s;
                    }
                }
            }
            if (gravity) {
                const double area = 0.5 * map.abs_det;
                for (int k = 0; k < 3; ++k) {
                    const Vec2 g = map.physical_gradient(p1c.ref_gradients[k]);
                    out.flow[verts[k]] += params.mobility() * area * rho_g.dot(g);
                }
            }
        }
    }

    const QuadratureRule erule = edge_quadrature(kDefaultEdgeDegree);
    for (const auto& be : mesh.boundary_edges) {
        const SideCondition& sc = bcs[be.side];
        const Edge& e = mesh.edges[be.edge];
        const Vec2& xa = mesh.vertices[e.v[0]];
        const Vec2& xb = mesh.vertices[e.v[1]];
        const double len = (xb - xa).norm();
        const Vec2 n = outward_normal(be.side);
        for (std::size_t q = 0; q < erule.size(); ++q) {
            const double s = erule.points[q][1];
            const double w = erule.weights[q] * len;
            const Vec2 x = (1.0 - s) * xa + s * xb;
            if (sc.traction) {
                const Vec2 g = sc.traction(x, n, t);
                const P2EdgeShape N = p2_edge_shape(s);
                for (int c = 0; c < 2; ++c) {
                    out.mech[dofs.u_dof(e.v[0], c)] += w * N.a * g[c];
                    out.mech[dofs.u_dof(e.v[1], c)] += w * N.b * g[c];
                    out.mech[dofs.u_dof(e.midpoint_node, c)] += w * N.m * g[c];
                }
            }
            if (sc.flow == FlowCondition::Flux && sc.flux) {
                const double phi1 = sc.flux(x, n, t);
                out.flow[e.v[0]] += w * (1.0 - s) * phi1;
                out.flow[e.v[1]] += w * s * phi1;
            }
        }
    }
    return out;
}

Vector interpolate_vector(const Mesh& mesh, const DofMap& dofs, const VectorFn& field, double t)
{
    Vector out = Vector::Zero(dofs.num_u());
    for (int node = 0; node < mesh.num_p2_nodes(); ++node) {
        const Vec2 v = field(mesh.p2_node(node), t);
        out[dofs.u_dof(node, 0)] = v.x();
        out[dofs.u_dof(node, 1)] = v.y();
    }
    return out;
}

Vector interpolate_scalar(const Mesh& mesh, const ScalarFn& field, double t)
{
    Vector out(mesh.num_vertices());
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        out[v] = field(mesh.vertices[v], t);
    }
    return out;
}

std::vector<Vector> rigid_motion_basis(const Mesh& mesh, const DofMap& dofs)
{
    std::vector<Vector> basis;
    basis.push_back(interpolate_vector(mesh, dofs, [](const Vec2&, double) { return Vec2(1.0, 0.0); }, 0.0));
    basis.push_back(interpolate_vector(mesh, dofs, [](const Vec2&, double) { return Vec2(0.0, 1.0); }, 0.0));
    basis.push_back(interpolate_vector(mesh, dofs, [](const Vec2& x, double) { return Vec2(-x.y(), x.x()); }, 0.0));
    return basis;
}

ConstraintSet build_constraints(const Mesh& mesh, const DofMap& dofs,
                                const BoundaryConditionSpec& bcs, const DerivedCoeffs& coeffs,
                                double t, ConstraintTarget target, const Vector* xi_known)
{
    ConstraintSet cs;

    if (target != ConstraintTarget::Flow) {
        std::vector<char> taken(static_cast<std::size_t>(dofs.num_u()), 0);
        for (Side side : kAllSides) {
            const SideCondition& sc = bcs[side];
            for (const auto& be : mesh.boundary_edges) {
                if (be.side != side) {
                    continue;
                }
                const Edge& e = mesh.edges[be.edge];
                for (int c = 0; c < 2; ++c) {
                    if (!sc.displacement[c]) {
                        continue;
                    }
                    for (int node : {e.v[0], e.v[1], e.midpoint_node}) {
                        const int dof = dofs.u_dof(node, c);
                        if (taken[dof]) {
                            continue;
                        }
                        taken[dof] = 1;
                        cs.dirichlet.push_back({dof, (*sc.displacement[c])(mesh.p2_node(node), t)});
                    }
                }
            }
        }

        if (bcs.pure_traction()) {
            const SparseMatrix mass = assemble_vector_mass(mesh, dofs);
            for (const Vector& r : rigid_motion_basis(mesh, dofs)) {
                const Vector row = mass * r;
                AffineConstraint ac;
                for (int i = 0; i < row.size(); ++i) {
                    if (row[i] != 0.0) {
                        ac.terms.emplace_back(i, row[i]);
                    }
                }
                cs.affine.push_back(std::move(ac));
                ++cs.rigid_motion_rows;
            }
        }
    }

    const bool wants_pressure =
        target == ConstraintTarget::Flow || target == ConstraintTarget::Monolithic;
    if (wants_pressure && bcs.has_pressure_dirichlet()) {
        if (!(coeffs.kappa2 > 0.0)) {
            throw UnsupportedConfiguration(
                "pressure Dirichlet data requires kappa2 > 0 (lambda > 0)");
        }
        if (target == ConstraintTarget::Flow &&
            (xi_known == nullptr || xi_known->size() != dofs.num_scalar())) {
            throw InvalidArgument("build_constraints: flow target needs the current xi");
        }
        std::vector<char> taken(static_cast<std::size_t>(mesh.num_vertices()), 0);
        for (Side side : kAllSides) {
            const SideCondition& sc = bcs[side];
            if (sc.flow != FlowCondition::Pressure) {
                continue;
            }
            for (const auto& be : mesh.boundary_edges) {
                if (be.side != side) {
                    continue;
                }
                for (int v : mesh.edges[be.edge].v) {
                    if (taken[v]) {
                        continue;
                    }
                    taken[v] = 1;
                    const double pd = sc.pressure(mesh.vertices[v], t);
                    if (target == ConstraintTarget::Flow) {
                        cs.dirichlet.push_back({v, (pd - coeffs.kappa1 * (*xi_known)[v]) / coeffs.kappa2});
                    } else {
                        AffineConstraint ac;
                        ac.terms = {{dofs.xi_offset() + v, coeffs.kappa1},
                                    {dofs.eta_offset() + v, coeffs.kappa2}};
                        ac.rhs = pd;
                        ac.reaction = {{dofs.eta_offset() + v, 1.0}};
                        cs.affine.push_back(std::move(ac));
                    }
                    ++cs.pressure_rows;
                }
            }
        }
    }
    return cs;
}

namespace {

void check_rank(const SparseMatrix& rows, const char* what)
{
    if (rows.rows() == 0) {
        return;
    }
    const Eigen::MatrixXd gram = Eigen::MatrixXd(rows * SparseMatrix(rows.transpose()));
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
    qr.setThreshold(1e-12);
    if (qr.rank() < rows.rows()) {
        throw SingularConstraints(std::string("constraint ") + what + " rows are rank deficient (rank " +
                                  std::to_string(qr.rank()) + " < " +
                                  std::to_string(rows.rows()) + ")");
    }
}

} // namespace

ConstraintReduction::ConstraintReduction(const SparseMatrix& system, const ConstraintSet& pattern)
{
    if (system.rows() != system.cols()) {
        throw DimensionError("apply_constraints: system matrix must be square");
    }
    full_size_ = static_cast<int>(system.rows());
    num_affine_ = static_cast<int>(pattern.affine.size());

    std::vector<char> fixed(static_cast<std::size_t>(full_size_), 0);
    dirichlet_dofs_.reserve(pattern.dirichlet.size());
    for (const auto& d : pattern.dirichlet) {
        if (d.dof < 0 || d.dof >= full_size_) {
            throw DimensionError("apply_constraints: constrained dof out of range");
        }
        if (fixed[d.dof]) {
            throw InvalidArgument("apply_constraints: dof " + std::to_string(d.dof) +
                                  " appears in two single-dof constraints");
        }
        fixed[d.dof] = 1;
        dirichlet_dofs_.push_back(d.dof);
    }

    reduced_index_.assign(static_cast<std::size_t>(full_size_), -1);
    for (int i = 0; i < full_size_; ++i) {
        if (!fixed[i]) {
            reduced_index_[i] = static_cast<int>(free_dofs_.size());
            free_dofs_.push_back(i);
        }
    }
    const int nf = num_free();

    std::vector<Triplet> red;
    std::vector<Triplet> coup;
    red.reserve(static_cast<std::size_t>(system.nonZeros()));
    for (int j = 0; j < system.outerSize(); ++j) {
        for (SparseMatrix::InnerIterator it(system, j); it; ++it) {
            const int ri = reduced_index_[it.row()];
            if (ri < 0) {
                continue;
            }
            const int rj = reduced_index_[it.col()];
            if (rj >= 0) {
                red.emplace_back(ri, rj, it.value());
            } else {
                coup.emplace_back(ri, static_cast<int>(it.col()), it.value());
            }
        }
    }

    std::vector<Triplet> fixed_terms;
    std::vector<Triplet> c_rows;
    std::vector<Triplet> r_rows;
    for (int k = 0; k < num_affine_; ++k) {
        const AffineConstraint& ac = pattern.affine[k];
        for (const auto& [dof, coef] : ac.terms) {
            if (dof < 0 || dof >= full_size_) {
                throw DimensionError("apply_constraints: affine term out of range");
            }
            const int rd = reduced_index_[dof];
            if (rd >= 0) {
                red.emplace_back(nf + k, rd, coef);
                c_rows.emplace_back(k, rd, coef);
            } else {
                fixed_terms.emplace_back(k, dof, coef);
            }
        }
        const auto& reaction = ac.reaction.empty() ? ac.terms : ac.reaction;
        for (const auto& [dof, coef] : reaction) {
            if (dof < 0 || dof >= full_size_) {
                throw DimensionError("apply_constraints: reaction term out of range");
            }
            const int rd = reduced_index_[dof];
            if (rd >= 0) {
                red.emplace_back(rd, nf + k, coef);
                r_rows.emplace_back(k, rd, coef);
            }
        }
    }

    if (num_affine_ > 0) {
        SparseMatrix c(num_affine_, nf);
        c.setFromTriplets(c_rows.begin(), c_rows.end());
        check_rank(c, "coefficient");
        SparseMatrix r(num_affine_, nf);
        r.setFromTriplets(r_rows.begin(), r_rows.end());
        check_rank(r, "reaction");
    }

    reduced_ = from_triplets(nf + num_affine_, nf + num_affine_, red);
    coupling_ = from_triplets(nf, full_size_, coup);
    affine_fixed_ = from_triplets(num_affine_, full_size_, fixed_terms);
}

void ConstraintReduction::check_pattern(const ConstraintSet& values) const
{
    if (values.dirichlet.size() != dirichlet_dofs_.size() ||
        static_cast<int>(values.affine.size()) != num_affine_) {
        throw InvalidArgument("constraint values do not match the reduction pattern");
    }
    for (std::size_t i = 0; i < dirichlet_dofs_.size(); ++i) {
        if (values.dirichlet[i].dof != dirichlet_dofs_[i]) {
            throw InvalidArgument("constraint values do not match the reduction pattern");
        }
    }
}

Vector ConstraintReduction::reduce_rhs(const Vector& rhs, const ConstraintSet& values) const
{
    if (rhs.size() != full_size_) {
        throw DimensionError("reduce_rhs: right-hand side has the wrong size");
    }
    check_pattern(values);
    const int nf = num_free();
    Vector fixed_values = Vector::Zero(full_size_);
    for (const auto& d : values.dirichlet) {
        fixed_values[d.dof] = d.value;
    }
    Vector out(nf + num_affine_);
    for (int i = 0; i < nf; ++i) {
        out[i] = rhs[free_dofs_[i]];
    }
    out.head(nf) -= coupling_ * fixed_values;
    if (num_affine_ > 0) {
        const Vector moved = affine_fixed_ * fixed_values;
        for (int k = 0; k < num_affine_; ++k) {
            out[nf + k] = values.affine[k].rhs - moved[k];
        }
    }
    return out;
}

Vector ConstraintReduction::expand(const Vector& reduced, const ConstraintSet& values) const
{
    if (reduced.size() != num_free() + num_affine_) {
        throw DimensionError("expand: reduced solution has the wrong size");
    }
    check_pattern(values);
    Vector full = Vector::Zero(full_size_);
    for (int i = 0; i < num_free(); ++i) {
        full[free_dofs_[i]] = reduced[i];
    }
    for (const auto& d : values.dirichlet) {
        full[d.dof] = d.value;
    }
    return full;
}

ReducedSystem apply_constraints(const SparseMatrix& system, const Vector& rhs,
                                const ConstraintSet& constraints)
{
    ConstraintReduction reduction(system, constraints);
    Vector reduced_rhs = reduction.reduce_rhs(rhs, constraints);
    return {std::move(reduction), std::move(reduced_rhs)};
}

} // namespace poro
