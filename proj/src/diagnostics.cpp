#include "poro/diagnostics.hpp"

#include "poro/elements.hpp"
#include "poro/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <map>

namespace poro {

namespace {

double rel_residual(double measured, double reference)
{
    return std::abs(measured - reference) / std::max(1.0, std::abs(reference));
}

double boundary_normal_flux(const Mesh& mesh, const DofMap& dofs, const Vector& u)
{
    double total = 0.0;
    for (const auto& be : mesh.boundary_edges) {
        const Edge& e = mesh.edges[be.edge];
        const double len = (mesh.vertices[e.v[1]] - mesh.vertices[e.v[0]]).norm();
        const Vec2 n = outward_normal(be.side);
        // Simpson's rule is exact for the quadratic trace.
        double un = 0.0;
        for (int c = 0; c < 2; ++c) {
            un += n[c] * (u[dofs.u_dof(e.v[0], c)] + 4.0 * u[dofs.u_dof(e.midpoint_node, c)] +
                          u[dofs.u_dof(e.v[1], c)]);
        }
        total += len * un / 6.0;
    }
    return total;
}

} // namespace

ConservedQuantities reference_quantities(double C_eta, double load_moment, const MaterialParams& params,
                                         int dim)
{
    const DerivedCoeffs k = derive_kappas(params);
    ConservedQuantities c;
    c.C_eta = C_eta;
    c.C_xi = (params.mu * k.kappa1 * C_eta - load_moment) / (dim + params.mu * k.kappa3);
    c.C_q = k.kappa1 * C_eta - k.kappa3 * c.C_xi;
    c.C_p = k.kappa1 * c.C_xi + k.kappa2 * C_eta;
    c.C_u = c.C_q;
    return c;
}

ConservedQuantities measure_quantities(const FieldState& s, const Systems& sys)
{
    const Vector ones_m = sys.scalar_mass() * Vector::Ones(sys.dofs().num_scalar());
    ConservedQuantities c;
    c.C_eta = ones_m.dot(s.eta);
    c.C_xi = ones_m.dot(s.xi);
    c.C_q = ones_m.dot(s.q);
    c.C_p = ones_m.dot(s.p);
    c.C_u = boundary_normal_flux(sys.mesh(), sys.dofs(), s.u);
    return c;
}

double load_moment_x(const Systems& sys, const Vector& mech_load)
{
    const Vector x = interpolate_vector(sys.mesh(), sys.dofs(), [](const Vec2& p, double) { return p; }, 0.0);
    return mech_load.dot(x);
}

ConservationResidual check_conservation(const FieldState& state, const Systems& sys,
                                        const ConservedQuantities& eta_ref,
                                        const ConservedQuantities& xi_ref)
{
    ConservationResidual r;
    const auto& bcs = sys.benchmark().bcs;
    r.eta_applies = bcs.pure_flux();
    r.xi_applies = r.eta_applies && bcs.pure_traction();
    r.measured = measure_quantities(state, sys);
    r.reference = xi_ref;
    r.reference.C_eta = eta_ref.C_eta;
    if (r.eta_applies) {
        r.eta = rel_residual(r.measured.C_eta, eta_ref.C_eta);
    }
    if (r.xi_applies) {
        r.xi = rel_residual(r.measured.C_xi, xi_ref.C_xi);
        r.flux = rel_residual(r.measured.C_u, xi_ref.C_u);
    }
    return r;
}

ConservationTracker::ConservationTracker(Systems& systems, const TimeScheme& scheme)
    : systems_(systems), scheme_(scheme)
{
}

ConservationResidual ConservationTracker::push(const FieldState& state)
{
    const int n = state.step;
    if (n != static_cast<int>(c_eta_.size())) {
        throw InvalidArgument("ConservationTracker: states must be pushed in order from step 0");
    }
    const Vector ones_m = systems_.scalar_mass() * Vector::Ones(systems_.dofs().num_scalar());
    if (n == 0) {
        c_eta_.push_back(ones_m.dot(state.eta));
        ConservedQuantities ref;
        ref.C_eta = c_eta_.back();
        ConservationResidual r = check_conservation(state, systems_, ref, ref);
        r.xi_applies = false;
        r.xi = r.flux = 0.0;
        return r;
    }
    const LoadVectors& L = systems_.loads(state.t);
    c_eta_.push_back(c_eta_.back() + scheme_.dt * L.flow.sum());
    const double moment = load_moment_x(systems_, L.mech);
    const ConservedQuantities eta_ref = reference_quantities(c_eta_[n], moment, systems_.params());
    const ConservedQuantities xi_ref =
        reference_quantities(c_eta_[n - 1 + scheme_.theta], moment, systems_.params());
    return check_conservation(state, systems_, eta_ref, xi_ref);
}

EnergyAuditor::EnergyAuditor(Systems& systems, const TimeScheme& scheme)
    : systems_(systems), scheme_(scheme)
{
}

double EnergyAuditor::energy(const FieldState& s, const Vector& mech) const
{
    const DerivedCoeffs& k = systems_.coeffs();
    const SparseMatrix& M = systems_.scalar_mass();
    return 0.5 * (s.u.dot(systems_.elasticity() * s.u) + k.kappa2 * s.eta_theta.dot(M * s.eta_theta) +
                  k.kappa3 * s.xi.dot(M * s.xi) - 2.0 * mech.dot(s.u));
}

std::optional<EnergyRecord> EnergyAuditor::push(const FieldState& s)
{
    if (s.step == 0) {
        prev_.reset();
        S_ = S_hat_ = 0.0;
        return std::nullopt;
    }
    if (prev_ && prev_->step + 1 != s.step) {
        throw InvalidArgument("EnergyAuditor: states must be consecutive");
    }
    const LoadVectors& L = systems_.loads(s.t);
    EnergyRecord rec;
    rec.ell = s.step - 1;
    rec.J = energy(s, L.mech);
    if (s.step == 1) {
        J0_ = rec.J;
    } else {
        const DerivedCoeffs& k = systems_.coeffs();
        const SparseMatrix& M = systems_.scalar_mass();
        const SparseMatrix& S = systems_.flow_stiffness();
        const double dt = scheme_.dt;
        const Vector du = s.u - prev_->u;
        const Vector deta = s.eta_theta - prev_->eta_theta;
        const Vector dxi = s.xi - prev_->xi;
        const Vector Sp = S * s.p;
        const double elastic = du.dot(systems_.elasticity() * du);
        const double pSp = s.p.dot(Sp);
        const double work = L.flow.dot(s.p); // includes the gravity moment
        const double storage = 0.5 * k.kappa2 * deta.dot(M * deta) + 0.5 * k.kappa3 * dxi.dot(M * dxi);
        const double cross = (1 - scheme_.theta) * k.kappa1 * dt * dxi.dot(Sp);
        S_ += 0.5 * elastic + dt * (pSp - work) + storage - cross;
        S_hat_ += 0.25 * elastic + dt * (0.5 * pSp - work) + storage;
    }
    rec.S = S_;
    rec.S_hat = S_hat_;
    rec.residual = rec.J + S_ - J0_;
    rec.residual_hat = rec.J + S_hat_ - J0_;
    prev_ = s;
    return rec;
}

std::vector<EnergyRecord> energy_audit(Systems& systems, const TimeScheme& scheme,
                                       const std::vector<FieldState>& trajectory)
{
    EnergyAuditor auditor(systems, scheme);
    std::vector<EnergyRecord> out;
    for (const auto& s : trajectory) {
        if (auto r = auditor.push(s)) {
            out.push_back(*r);
        }
    }
    return out;
}

StepErrors step_errors(const Mesh& mesh, const DofMap& dofs, const FieldState& s,
                       const VectorField& exact_u, const ScalarField& exact_p)
{
    const QuadratureRule rule = triangle_quadrature(kDataTriangleDegree);
    const Tabulation p2 = tabulate(BasisKind::P2, rule);
    const Tabulation p1 = tabulate(BasisKind::P1, rule);
    double u0 = 0.0, u1 = 0.0, q0 = 0.0, q1 = 0.0;
    for (int tri = 0; tri < mesh.num_triangles(); ++tri) {
        const AffineMap map = affine_map(mesh, tri);
        const auto nodes = mesh.p2_nodes_of(tri);
        const auto& verts = mesh.triangles[tri];
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const double w = rule.weights[q] * map.abs_det;
            const Vec2 x = map.map(rule.points[q]);
            Vec2 uh = Vec2::Zero();
            Mat2 guh = Mat2::Zero();
            for (int i = 0; i < 6; ++i) {
                const Vec2 g = map.physical_gradient(p2.at[q].ref_gradients[i]);
                const Vec2 c(s.u[dofs.u_dof(nodes[i], 0)], s.u[dofs.u_dof(nodes[i], 1)]);
                uh += p2.at[q].values[i] * c;
                guh += c * g.transpose();
            }
            double ph = 0.0;
            Vec2 gph = Vec2::Zero();
            for (int k = 0; k < 3; ++k) {
                ph += p1.at[q].values[k] * s.p[verts[k]];
                gph += s.p[verts[k]] * map.physical_gradient(p1.at[q].ref_gradients[k]);
            }
            u0 += w * (exact_u.value(x, s.t) - uh).squaredNorm();
            u1 += w * (exact_u.gradient(x, s.t) - guh).squaredNorm();
            q0 += w * std::pow(exact_p.value(x, s.t) - ph, 2);
            q1 += w * (exact_p.gradient(x, s.t) - gph).squaredNorm();
        }
    }
    return {std::sqrt(u0), std::sqrt(u0 + u1), std::sqrt(q0), std::sqrt(q0 + q1)};
}

ErrorAccumulator::ErrorAccumulator(const Systems& systems, const TimeScheme& scheme)
    : systems_(systems), scheme_(scheme)
{
    const Benchmark& b = systems.benchmark();
    if (!b.exact_u || !b.exact_p) {
        throw UnsupportedConfiguration("benchmark '" + b.name + "' has no exact solution");
    }
    exact_u_ = *b.exact_u;
    exact_p_ = *b.exact_p;
}

StepErrors ErrorAccumulator::push(const FieldState& s)
{
    const StepErrors e = step_errors(systems_.mesh(), systems_.dofs(), s, exact_u_, exact_p_);
    report_.per_step.push_back(e);
    report_.u_LinfL2 = std::max(report_.u_LinfL2, e.u_L2);
    report_.p_LinfL2 = std::max(report_.p_LinfL2, e.p_L2);
    if (s.step > 0) {
        sum_u_ += scheme_.dt * e.u_H1 * e.u_H1;
        sum_p_ += scheme_.dt * e.p_H1 * e.p_H1;
    }
    report_.u_L2H1 = std::sqrt(sum_u_);
    report_.p_L2H1 = std::sqrt(sum_p_);
    return e;
}

ErrorReport error_norms(const Systems& systems, const TimeScheme& scheme,
                        const std::vector<FieldState>& trajectory)
{
    ErrorAccumulator acc(systems, scheme);
    for (const auto& s : trajectory) {
        acc.push(s);
    }
    return acc.report();
}

std::vector<std::optional<double>> convergence_rates(const std::vector<double>& h,
                                                     const std::vector<double>& errors)
{
    if (h.size() != errors.size()) {
        throw DimensionError("convergence_rates: h and errors differ in length");
    }
    std::vector<std::optional<double>> out(h.size());
    for (std::size_t i = 1; i < h.size(); ++i) {
        const double ratio = h[i - 1] / h[i];
        if (std::abs(ratio - 2.0) > 1e-9 || !(errors[i] > 0.0) || !(errors[i - 1] > 0.0)) {
            continue;
        }
        out[i] = std::log2(errors[i - 1] / errors[i]);
    }
    return out;
}

LockingIndicator locking_scan(const Mesh& mesh, const Vector& p, double reference_scale,
                              double line_x, double rel_tol)
{
    if (p.size() != mesh.num_vertices()) {
        throw DimensionError("locking_scan: pressure vector does not match the mesh");
    }
    const double tol_x = 1e-12 * std::max(1.0, mesh.rect.x1 - mesh.rect.x0);
    std::vector<std::pair<double, double>> line;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (std::abs(mesh.vertices[v].x() - line_x) <= tol_x) {
            line.emplace_back(mesh.vertices[v].y(), p[v]);
        }
    }
    if (line.size() < 2) {
        throw InvalidArgument("locking_scan: the sample line contains no mesh vertices");
    }
    std::sort(line.begin(), line.end());

    LockingIndicator ind;
    ind.line_x = line_x;
    ind.samples = static_cast<int>(line.size());
    double scale = 0.0;
    ind.min_value = ind.max_value = line.front().second;
    for (const auto& [y, v] : line) {
        scale = std::max(scale, std::abs(v));
        ind.min_value = std::min(ind.min_value, v);
        ind.max_value = std::max(ind.max_value, v);
    }
    const double flat = rel_tol * scale;
    for (std::size_t i = 1; i + 1 < line.size(); ++i) {
        const double left = line[i].second - line[i - 1].second;
        const double right = line[i + 1].second - line[i].second;
        if ((left > flat && right < -flat) || (left < -flat && right > flat)) {
            ++ind.extrema;
        }
    }
    ind.undershoot = std::max(0.0, -ind.min_value) / std::max(1e-30, reference_scale);
    return ind;
}

LockingIndicator locking_scan(const Systems& sys, const FieldState& s, double line_x, double rel_tol)
{
    const Mesh& mesh = sys.mesh();
    const auto& bcs = sys.benchmark().bcs;
    double scale = 0.0;
    bool has_data = false;
    for (const auto& be : mesh.boundary_edges) {
        const SideCondition& sc = bcs[be.side];
        if (sc.flow != FlowCondition::Pressure || !sc.pressure) {
            continue;
        }
        has_data = true;
        for (int v : mesh.edges[be.edge].v) {
            scale = std::max(scale, std::abs(sc.pressure(mesh.vertices[v], s.t)));
        }
    }
    if (!has_data) {
        const double tol_x = 1e-12 * std::max(1.0, mesh.rect.x1 - mesh.rect.x0);
        for (int v = 0; v < mesh.num_vertices(); ++v) {
            if (std::abs(mesh.vertices[v].x() - line_x) <= tol_x) {
                scale = std::max(scale, std::abs(s.p[v]));
            }
        }
    }
    return locking_scan(mesh, s.p, scale, line_x, rel_tol);
}

namespace {

// Orthonormal basis of the complement of span(cols).
Eigen::MatrixXd orthogonal_complement(const Eigen::MatrixXd& cols)
{
    const int n = static_cast<int>(cols.rows());
    const int k = static_cast<int>(cols.cols());
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(cols);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    return q.rightCols(n - k);
}

} // namespace

double estimate_infsup(const Mesh& mesh, PressureSpace space)
{
    const DofMap dofs = make_dofmap(mesh);
    const int nu = dofs.num_u();
    const int np = space == PressureSpace::ContinuousP1 ? mesh.num_vertices() : 3 * mesh.num_triangles();
    if (nu + np > kInfSupDofBudget) {
        throw InvalidArgument("estimate_infsup: " + std::to_string(nu + np) +
                              " unknowns exceed the dense budget of " +
                              std::to_string(kInfSupDofBudget));
    }

    const QuadratureRule rule = triangle_quadrature(kDefaultTriangleDegree);
    const Tabulation p2 = tabulate(BasisKind::P2, rule);
    const Tabulation p1 = tabulate(BasisKind::P1, rule);
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(nu, nu);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(np, nu);
    Eigen::MatrixXd Mp = Eigen::MatrixXd::Zero(np, np);
    for (int tri = 0; tri < mesh.num_triangles(); ++tri) {
        const AffineMap map = affine_map(mesh, tri);
        const auto nodes = mesh.p2_nodes_of(tri);
        std::array<int, 3> prow;
        for (int k = 0; k < 3; ++k) {
            prow[k] = space == PressureSpace::ContinuousP1 ? mesh.triangles[tri][k] : 3 * tri + k;
        }
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const double w = rule.weights[q] * map.abs_det;
            std::array<Vec2, 6> g;
            for (int i = 0; i < 6; ++i) {
                g[i] = map.physical_gradient(p2.at[q].ref_gradients[i]);
            }
            for (int i = 0; i < 6; ++i) {
                for (int j = 0; j < 6; ++j) {
                    const double v = w * g[i].dot(g[j]);
                    for (int a = 0; a < 2; ++a) {
                        L(dofs.u_dof(nodes[i], a), dofs.u_dof(nodes[j], a)) += v;
                    }
                }
                for (int k = 0; k < 3; ++k) {
                    for (int a = 0; a < 2; ++a) {
                        B(prow[k], dofs.u_dof(nodes[i], a)) += w * g[i][a] * p1.at[q].values[k];
                    }
                }
            }
            for (int k = 0; k < 3; ++k) {
                for (int l = 0; l < 3; ++l) {
                    Mp(prow[k], prow[l]) += w * p1.at[q].values[k] * p1.at[q].values[l];
                }
            }
        }
    }

    const SparseMatrix Mu = assemble_vector_mass(mesh, dofs);
    Eigen::MatrixXd rm(nu, 3);
    const auto basis = rigid_motion_basis(mesh, dofs);
    for (int c = 0; c < 3; ++c) {
        rm.col(c) = Mu * basis[c];
    }
    const Eigen::MatrixXd Z = orthogonal_complement(rm);
    const Eigen::MatrixXd Lz = Z.transpose() * L * Z;
    const Eigen::MatrixXd Bz = B * Z;
    const Eigen::LLT<Eigen::MatrixXd> llt(Lz);
    if (llt.info() != Eigen::Success) {
        throw InternalConsistencyError("estimate_infsup: velocity Gram matrix is not positive definite");
    }
    const Eigen::MatrixXd schur = Bz * llt.solve(Bz.transpose());

    const Eigen::MatrixXd mean = Mp * Eigen::VectorXd::Ones(np);
    const Eigen::MatrixXd Q = orthogonal_complement(mean);
    const Eigen::MatrixXd Sq = Q.transpose() * schur * Q;
    const Eigen::MatrixXd Mq = Q.transpose() * Mp * Q;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (Sq + Sq.transpose()),
                                                                 0.5 * (Mq + Mq.transpose()));
    if (eig.info() != Eigen::Success) {
        throw InternalConsistencyError("estimate_infsup: eigensolve failed");
    }
    return std::sqrt(std::max(0.0, eig.eigenvalues().minCoeff()));
}

std::vector<SweepRow> biot_limit_sweep(const Benchmark& benchmark, const Mesh& mesh,
                                       const TimeScheme& scheme, const std::vector<double>& c0_list,
                                       SolverOptions options)
{
    std::vector<SweepRow> rows;
    if (c0_list.size() < 2) {
        return rows;
    }
    const DofMap dofs = make_dofmap(mesh);
    const SparseMatrix Mu = assemble_vector_mass(mesh, dofs);
    const SparseMatrix M = assemble_scalar_mass(mesh, dofs);

    std::vector<std::vector<FieldState>> runs;
    for (double c0 : c0_list) {
        MaterialParams prm = benchmark.params;
        prm.c0 = c0;
        Benchmark b = make_benchmark(benchmark.name, prm);
        Systems sys(b, mesh, options);
        runs.push_back(run(sys, scheme).trajectory);
    }
    const auto norm = [](const SparseMatrix& m, const Vector& v) { return std::sqrt(std::max(0.0, v.dot(m * v))); };
    for (std::size_t r = 1; r < runs.size(); ++r) {
        SweepRow row;
        row.c0_a = c0_list[r - 1];
        row.c0_b = c0_list[r];
        for (std::size_t n = 0; n < runs[r].size(); ++n) {
            const FieldState& a = runs[r - 1][n];
            const FieldState& b = runs[r][n];
            row.dist_u = std::max(row.dist_u, norm(Mu, a.u - b.u));
            row.dist_eta = std::max(row.dist_eta, norm(M, a.eta - b.eta));
            row.dist_xi = std::max(row.dist_xi, norm(M, a.xi - b.xi));
        }
        rows.push_back(row);
    }
    return rows;
}

} // namespace poro
