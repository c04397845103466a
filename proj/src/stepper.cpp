#include "poro/stepper.hpp"

#include "poro/elements.hpp"
#include "poro/error.hpp"

#include <cmath>
#include <sstream>

namespace poro {

int TimeScheme::n_steps() const
{
    if (!(dt > 0.0)) {
        return 0;
    }
    return static_cast<int>(std::llround(T / dt));
}

void TimeScheme::validate() const
{
    if (theta != 0 && theta != 1) {
        throw InvalidArgument("theta must be 0 or 1");
    }
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw InvalidArgument("dt must be positive");
    }
    if (!(T >= 0.0) || !std::isfinite(T)) {
        throw InvalidArgument("T must be nonnegative");
    }
    const double n = static_cast<double>(n_steps());
    if (std::abs(n * dt - T) > 1e-12 * std::max(1.0, T)) {
        throw InvalidArgument("T is not an integer multiple of dt");
    }
}

double default_stability_constant(const MaterialParams& params)
{
    const DerivedCoeffs k = derive_kappas(params);
    return 0.5 * params.mu_f / (params.mu * params.K * k.kappa1 * k.kappa1);
}

StabilityGate evaluate_gate(const TimeScheme& scheme, double h, const MaterialParams& params,
                            std::optional<double> c_stab)
{
    StabilityGate g;
    g.c_stab = c_stab ? *c_stab : default_stability_constant(params);
    g.h = h;
    g.dt = scheme.dt;
    g.limit = g.c_stab * h * h;
    g.applies = scheme.theta == 0;
    g.satisfied = !g.applies || scheme.dt <= g.limit;
    return g;
}

Systems::Systems(const Benchmark& benchmark, const Mesh& mesh, SolverOptions options)
    : benchmark_(benchmark), mesh_(mesh), dofs_(make_dofmap(mesh)), options_(options)
{
    benchmark_.params.validate();
    coeffs_ = derive_kappas(benchmark_.params);
    A_ = assemble_elasticity(mesh_, dofs_, benchmark_.params.mu);
    B_ = assemble_div(mesh_, dofs_);
    M_ = assemble_scalar_mass(mesh_, dofs_);
    S_ = assemble_scalar_stiffness(mesh_, dofs_, benchmark_.params.mobility());
}

const LoadVectors& Systems::loads(double t)
{
    if (cached_loads_ && (benchmark_.time_independent_data || cached_load_time_ == t)) {
        return *cached_loads_;
    }
    cached_loads_ = assemble_load(mesh_, dofs_, benchmark_.sources, benchmark_.bcs, benchmark_.params, t);
    cached_load_time_ = t;
    return *cached_loads_;
}

Vector Systems::solve_constrained(const std::string& key,
                                  const std::function<SparseMatrix()>& matrix, const Vector& rhs,
                                  const ConstraintSet& constraints)
{
    Cached* entry = nullptr;
    for (auto& [name, cached] : cache_) {
        if (name == key) {
            entry = &cached;
        }
    }
    if (entry == nullptr) {
        cache_.emplace_back(key, Cached{});
        entry = &cache_.back().second;
    }
    if (!entry->reduction) {
        entry->reduction.emplace(matrix(), constraints);
        entry->factorization = factorize(entry->reduction->matrix());
    }
    const Vector reduced_rhs = entry->reduction->reduce_rhs(rhs, constraints);
    const SolveResult res = solve(*entry->factorization, reduced_rhs, options_);
    log_.record(res.report);
    return entry->reduction->expand(res.x, constraints);
}

Vector Systems::solve_mass(const Vector& rhs)
{
    return solve_constrained("mass", [this] { return M_; }, rhs, ConstraintSet{});
}

namespace {

// mu (eps(w), eps(phi_i e_a)) for a closed-form gradient of w.
Vector elliptic_rhs(const Mesh& mesh, const DofMap& dofs, double mu, const VectorField& field, double t)
{
    Vector out = Vector::Zero(dofs.num_u());
    const QuadratureRule rule = triangle_quadrature(kDataTriangleDegree);
    const Tabulation tab = tabulate(BasisKind::P2, rule);
    for (int tri = 0; tri < mesh.num_triangles(); ++tri) {
        const AffineMap map = affine_map(mesh, tri);
        const auto nodes = mesh.p2_nodes_of(tri);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const double w = mu * rule.weights[q] * map.abs_det;
            const Mat2 g = field.gradient(map.map(rule.points[q]), t);
            const Mat2 eps = 0.5 * (g + g.transpose());
            for (int i = 0; i < 6; ++i) {
                const Vec2 grad = map.physical_gradient(tab.at[q].ref_gradients[i]);
                const Vec2 v = eps * grad;
                out[dofs.u_dof(nodes[i], 0)] += w * v.x();
                out[dofs.u_dof(nodes[i], 1)] += w * v.y();
            }
        }
    }
    return out;
}

// (g, psi_k) on P1 for a scalar closure.
Vector scalar_moments(const Mesh& mesh, const std::function<double(const Vec2&)>& g)
{
    Vector out = Vector::Zero(mesh.num_vertices());
    const QuadratureRule rule = triangle_quadrature(kDataTriangleDegree);
    for (int tri = 0; tri < mesh.num_triangles(); ++tri) {
        const AffineMap map = affine_map(mesh, tri);
        const auto& v = mesh.triangles[tri];
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const double val = rule.weights[q] * map.abs_det * g(map.map(rule.points[q]));
            for (int k = 0; k < 3; ++k) {
                out[v[k]] += val * rule.points[q][k];
            }
        }
    }
    return out;
}

void finish_state(FieldState& s, const DerivedCoeffs& k)
{
    s.p = k.kappa1 * s.xi + k.kappa2 * s.eta_theta;
    s.q = k.kappa1 * s.eta - k.kappa3 * s.xi;
}

// Cache key for operators that depend on dt.
std::string keyed(const char* name, double dt)
{
    std::ostringstream os;
    os << name << ':' << std::hexfloat << dt;
    return os.str();
}

template <typename F>
FieldState with_step_context(int step, F&& body)
{
    try {
        return body();
    } catch (const SolverFailure& e) {
        throw SolverFailure("step " + std::to_string(step) + ": " + e.what(), e.report());
    } catch (const SingularMatrix& e) {
        throw SingularMatrix("step " + std::to_string(step) + ": " + e.what(), e.row());
    }
}

} // namespace

FieldState init_state(Systems& sys)
{
    const Benchmark& b = sys.benchmark();
    const Mesh& mesh = sys.mesh();
    const DofMap& dofs = sys.dofs();
    const MaterialParams& prm = sys.params();

    FieldState s;
    s.step = 0;
    s.t = 0.0;

    ConstraintSet cs =
        build_constraints(mesh, dofs, b.bcs, sys.coeffs(), 0.0, ConstraintTarget::Mechanics);
    if (cs.rigid_motion_rows > 0) {
        // Fix the rigid-motion component to that of the nodal interpolant.
        const Vector iu = interpolate_vector(mesh, dofs, b.initial_displacement.value, 0.0);
        for (auto& ac : cs.affine) {
            double r = 0.0;
            for (const auto& [dof, c] : ac.terms) {
                r += c * iu[dof];
            }
            ac.rhs = r;
        }
    }
    try {
        s.u = sys.solve_constrained("projection", [&] { return sys.elasticity(); },
                                    elliptic_rhs(mesh, dofs, prm.mu, b.initial_displacement, 0.0), cs);
    } catch (const SingularMatrix& e) {
        throw UnsupportedConfiguration(std::string("initial projection is singular: ") + e.what());
    } catch (const SingularConstraints& e) {
        throw UnsupportedConfiguration(std::string("initial projection is singular: ") + e.what());
    }

    const Vector p0 = sys.solve_mass(scalar_moments(mesh, [&](const Vec2& x) { return b.initial_pressure(x, 0.0); }));
    const Vector q0 = sys.solve_mass(scalar_moments(mesh, [&](const Vec2& x) {
        return b.initial_displacement.gradient(x, 0.0).trace();
    }));
    s.eta = prm.c0 * p0 + prm.alpha * q0;
    s.xi = prm.alpha * p0 - prm.lambda * q0;
    s.eta_theta = s.eta;
    finish_state(s, sys.coeffs());
    return s;
}

FieldState step_decoupled(const FieldState& state, const TimeScheme& scheme, Systems& sys)
{
    return with_step_context(state.step + 1, [&] {
        const DofMap& dofs = sys.dofs();
        const DerivedCoeffs& k = sys.coeffs();
        const Benchmark& b = sys.benchmark();
        const double dt = scheme.dt;
        const double t1 = (state.step + 1) * dt;
        if (k.kappa3 == 0.0 && b.bcs.all_normals_constrained()) {
            throw UnsupportedConfiguration(
                "decoupled scheme: the Stokes step has a free constant xi mode when c0 = 0 and "
                "every normal displacement is prescribed");
        }
        const LoadVectors& L = sys.loads(t1);

        const int nu = dofs.num_u();
        const int ns = dofs.num_scalar();
        const auto stokes = [&] {
            std::vector<Eigen::Triplet<double>> trips;
            add_block(trips, sys.elasticity(), 0, 0, 1.0);
            const SparseMatrix Bt = sys.divergence().transpose();
            add_block(trips, Bt, 0, nu, -1.0);
            add_block(trips, sys.divergence(), nu, 0, -1.0);
            add_block(trips, sys.scalar_mass(), nu, nu, -k.kappa3);
            SparseMatrix K(dofs.num_stokes(), dofs.num_stokes());
            K.setFromTriplets(trips.begin(), trips.end());
            return K;
        };

        Vector rhs(dofs.num_stokes());
        rhs.head(nu) = L.mech;
        rhs.tail(ns) = -k.kappa1 * (sys.scalar_mass() * state.eta);
        const ConstraintSet cs =
            build_constraints(sys.mesh(), dofs, b.bcs, k, t1, ConstraintTarget::Stokes);
        const Vector x = sys.solve_constrained("stokes", stokes, rhs, cs);

        FieldState next;
        next.step = state.step + 1;
        next.t = t1;
        next.u = x.head(nu);
        next.xi = x.tail(ns);

        const auto flow = [&] {
            return SparseMatrix(sys.scalar_mass() + (dt * k.kappa2) * sys.flow_stiffness());
        };
        const Vector frhs = sys.scalar_mass() * state.eta + dt * L.flow -
                            (dt * k.kappa1) * (sys.flow_stiffness() * next.xi);
        const ConstraintSet fcs =
            build_constraints(sys.mesh(), dofs, b.bcs, k, t1, ConstraintTarget::Flow, &next.xi);
        next.eta = sys.solve_constrained(keyed("flow", dt), flow, frhs, fcs);
        next.eta_theta = state.eta;
        finish_state(next, k);
        return next;
    });
}

FieldState step_coupled(const FieldState& state, const TimeScheme& scheme, Systems& sys)
{
    return with_step_context(state.step + 1, [&] {
        const DofMap& dofs = sys.dofs();
        const DerivedCoeffs& k = sys.coeffs();
        const Benchmark& b = sys.benchmark();
        const double dt = scheme.dt;
        const double t1 = (state.step + 1) * dt;
        const LoadVectors& L = sys.loads(t1);

        const int nu = dofs.num_u();
        const int ns = dofs.num_scalar();
        const int xo = dofs.xi_offset();
        const int eo = dofs.eta_offset();
        const auto monolithic = [&] {
            std::vector<Eigen::Triplet<double>> trips;
            const SparseMatrix Bt = sys.divergence().transpose();
            add_block(trips, sys.elasticity(), 0, 0, 1.0);
            add_block(trips, Bt, 0, xo, -1.0);
            add_block(trips, sys.divergence(), xo, 0, -1.0);
            add_block(trips, sys.scalar_mass(), xo, xo, -k.kappa3);
            add_block(trips, sys.scalar_mass(), xo, eo, k.kappa1);
            add_block(trips, sys.flow_stiffness(), eo, xo, dt * k.kappa1);
            add_block(trips, sys.scalar_mass(), eo, eo, 1.0);
            add_block(trips, sys.flow_stiffness(), eo, eo, dt * k.kappa2);
            SparseMatrix K(dofs.num_monolithic(), dofs.num_monolithic());
            K.setFromTriplets(trips.begin(), trips.end());
            return K;
        };

        Vector rhs = Vector::Zero(dofs.num_monolithic());
        rhs.head(nu) = L.mech;
        rhs.segment(eo, ns) = sys.scalar_mass() * state.eta + dt * L.flow;
        const ConstraintSet cs =
            build_constraints(sys.mesh(), dofs, b.bcs, k, t1, ConstraintTarget::Monolithic);
        const Vector x = sys.solve_constrained(keyed("monolithic", dt), monolithic, rhs, cs);

        FieldState next;
        next.step = state.step + 1;
        next.t = t1;
        next.u = x.head(nu);
        next.xi = x.segment(xo, ns);
        next.eta = x.segment(eo, ns);
        next.eta_theta = next.eta;
        finish_state(next, k);
        return next;
    });
}

FieldState step(const FieldState& state, const TimeScheme& scheme, Systems& systems)
{
    if (scheme.theta == 0) {
        return step_decoupled(state, scheme, systems);
    }
    if (scheme.theta == 1) {
        return step_coupled(state, scheme, systems);
    }
    throw InvalidArgument("theta must be 0 or 1");
}

void check_pq_consistency(const FieldState& s, const DerivedCoeffs& k, double tol)
{
    const Vector dp = s.p - (k.kappa1 * s.xi + k.kappa2 * s.eta_theta);
    const Vector dq = s.q - (k.kappa1 * s.eta - k.kappa3 * s.xi);
    const double scale_p = std::max(1.0, s.p.cwiseAbs().maxCoeff());
    const double scale_q = std::max(1.0, s.q.cwiseAbs().maxCoeff());
    if (dp.size() > 0 && (dp.cwiseAbs().maxCoeff() > tol * scale_p ||
                          dq.cwiseAbs().maxCoeff() > tol * scale_q)) {
        throw InternalConsistencyError("p or q out of sync with (xi, eta) at step " +
                                       std::to_string(s.step));
    }
}

RunResult run(Systems& sys, const TimeScheme& scheme, const RunOptions& options)
{
    scheme.validate();
    RunResult out;
    out.gate = evaluate_gate(scheme, sys.mesh().h, sys.params(), options.c_stab);
    if (!out.gate.satisfied) {
        std::ostringstream msg;
        msg.precision(6);
        msg << "dt = " << scheme.dt << " exceeds the theta = 0 stability gate c_stab h^2 = "
            << out.gate.limit;
        out.warnings.push_back(msg.str());
    }

    FieldState s = init_state(sys);
    check_pq_consistency(s, sys.coeffs());
    if (options.observer) {
        options.observer(s);
    }
    if (options.keep_trajectory) {
        out.trajectory.push_back(s);
    }
    const int n = scheme.n_steps();
    for (int i = 0; i < n; ++i) {
        FieldState next = step(s, scheme, sys);
        check_pq_consistency(next, sys.coeffs());
        for (const Vector* v : {&next.u, &next.xi, &next.eta}) {
            if (!v->allFinite()) {
                throw InternalConsistencyError("non-finite field at step " + std::to_string(next.step));
            }
        }
        s = std::move(next);
        if (options.observer) {
            options.observer(s);
        }
        if (options.keep_trajectory) {
            out.trajectory.push_back(s);
        }
    }
    out.steps = n;
    out.final_state = std::move(s);
    return out;
}

} // namespace poro
