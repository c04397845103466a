#pragma once

#include "poro/assembly.hpp"
#include "poro/model.hpp"
#include "poro/solver.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace poro {

struct TimeScheme {
    int theta = 1; // 0: decoupled, 1: monolithic
    double dt = 0.0;
    double T = 0.0;

    /// T / dt rounded to the nearest integer; validate() checks it is exact.
    int n_steps() const;
    void validate() const;
};

/// Discrete fields at one time level. eta_theta is the eta level entering p
/// (eta of the previous level for theta = 0, the current one for theta = 1).
struct FieldState {
    int step = 0;
    double t = 0.0;
    Vector u;
    Vector xi;
    Vector eta;
    Vector eta_theta;
    Vector p;
    Vector q;
};

struct StabilityGate {
    double c_stab = 0.0;
    double h = 0.0;
    double dt = 0.0;
    double limit = 0.0; // c_stab h^2
    bool applies = false; // the gate only constrains theta = 0
    bool satisfied = true;
};

/// Default stand-in for the mesh-ratio constant of the theta = 0 scheme.
double default_stability_constant(const MaterialParams& params);

StabilityGate evaluate_gate(const TimeScheme& scheme, double h, const MaterialParams& params,
                            std::optional<double> c_stab = std::nullopt);

/// Time-invariant operators of one benchmark on one mesh, with the
/// factorizations reused across steps. Keeps a reference to `mesh`.
class Systems {
public:
    Systems(const Benchmark& benchmark, const Mesh& mesh, SolverOptions options = {});

    const Benchmark& benchmark() const { return benchmark_; }
    const Mesh& mesh() const { return mesh_; }
    const DofMap& dofs() const { return dofs_; }
    const MaterialParams& params() const { return benchmark_.params; }
    const DerivedCoeffs& coeffs() const { return coeffs_; }
    const SolverOptions& solver_options() const { return options_; }

    const SparseMatrix& elasticity() const { return A_; }     // mu (eps, eps)
    const SparseMatrix& divergence() const { return B_; }     // (div v, psi)
    const SparseMatrix& scalar_mass() const { return M_; }
    const SparseMatrix& flow_stiffness() const { return S_; } // (K/mu_f)(grad, grad)

    /// Load vectors at time t; computed once when the data is time independent.
    const LoadVectors& loads(double t);

    SolveLog& log() { return log_; }
    const SolveLog& log() const { return log_; }

    /// Solves `matrix x = rhs` under `constraints`, reusing the reduction and
    /// factorization stored under `key`. `matrix` is called only on the first
    /// use of a key; the constraint pattern must not change afterwards.
    Vector solve_constrained(const std::string& key, const std::function<SparseMatrix()>& matrix,
                             const Vector& rhs, const ConstraintSet& constraints);

    /// Solves M x = rhs on the P1 space.
    Vector solve_mass(const Vector& rhs);

private:
    struct Cached {
        std::optional<ConstraintReduction> reduction;
        std::optional<Factorization> factorization;
    };

    Benchmark benchmark_;
    const Mesh& mesh_;
    DofMap dofs_;
    DerivedCoeffs coeffs_;
    SolverOptions options_;
    SparseMatrix A_, B_, M_, S_;
    std::optional<LoadVectors> cached_loads_;
    double cached_load_time_ = 0.0;
    std::vector<std::pair<std::string, Cached>> cache_;
    SolveLog log_;
};

/// Elliptic projection of u0, L2 projections of p0 and div u0, then eta and xi.
FieldState init_state(Systems& systems);

/// theta = 0: generalized Stokes solve, then the diffusion solve, then p and q.
FieldState step_decoupled(const FieldState& state, const TimeScheme& scheme, Systems& systems);

/// theta = 1: one solve in (u, xi, eta), then p and q.
FieldState step_coupled(const FieldState& state, const TimeScheme& scheme, Systems& systems);

/// Dispatches on scheme.theta.
FieldState step(const FieldState& state, const TimeScheme& scheme, Systems& systems);

/// Throws InternalConsistencyError unless p and q match (xi, eta) to `tol`.
void check_pq_consistency(const FieldState& state, const DerivedCoeffs& k, double tol = 1e-14);

struct RunOptions {
    bool keep_trajectory = true;
    std::optional<double> c_stab;
    std::function<void(const FieldState&)> observer; // called for every state, initial included
};

struct RunResult {
    std::vector<FieldState> trajectory; // empty unless keep_trajectory
    FieldState final_state;
    StabilityGate gate;
    std::vector<std::string> warnings;
    int steps = 0;
};

RunResult run(Systems& systems, const TimeScheme& scheme, const RunOptions& options = {});

} // namespace poro
