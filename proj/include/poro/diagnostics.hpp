#pragma once

#include "poro/assembly.hpp"
#include "poro/stepper.hpp"

#include <optional>
#include <vector>

namespace poro {

// ---- conservation ---------------------------------------------------------

struct ConservedQuantities {
    double C_eta = 0.0;
    double C_xi = 0.0;
    double C_q = 0.0;
    double C_p = 0.0;
    double C_u = 0.0; // boundary flux <u.n, 1>
};

/// Reference values at one time from C_eta and the moment (f, x) + <f1, x>.
ConservedQuantities reference_quantities(double C_eta, double load_moment_x,
                                         const MaterialParams& params, int dim = 2);

/// (eta,1), (xi,1), (q,1), (p,1) and <u.n,1> of a discrete state.
ConservedQuantities measure_quantities(const FieldState& state, const Systems& systems);

/// (f, x) + <f1, x>, i.e. the mechanical load applied to the identity field.
double load_moment_x(const Systems& systems, const Vector& mech_load);

struct ConservationResidual {
    bool eta_applies = false;  // pure flux flow conditions
    bool xi_applies = false;   // additionally pure traction mechanics
    double eta = 0.0;          // |measured - reference| / max(1, |reference|)
    double xi = 0.0;
    double flux = 0.0;
    ConservedQuantities measured;
    ConservedQuantities reference;
};

/// Residuals of one state against given references; inapplicable entries are
/// left at zero and flagged.
ConservationResidual check_conservation(const FieldState& state, const Systems& systems,
                                        const ConservedQuantities& eta_ref,
                                        const ConservedQuantities& xi_ref);

/// Accumulates C_eta(t_n) with the flow loads of each step and checks every
/// pushed state. The xi and u.n identities use time t_{n-1+theta}.
class ConservationTracker {
public:
    ConservationTracker(Systems& systems, const TimeScheme& scheme);
    ConservationResidual push(const FieldState& state);

private:
    Systems& systems_;
    TimeScheme scheme_;
    std::vector<double> c_eta_; // C_eta(t_n) for every pushed level
};

// ---- energy ---------------------------------------------------------------

struct EnergyRecord {
    int ell = 0;
    double J = 0.0;
    double S = 0.0;        // exact dissipation sum
    double S_hat = 0.0;    // theta = 0 inequality form
    double residual = 0.0; // J + S - J0
    double residual_hat = 0.0; // J + S_hat - J0, nonpositive under the mesh gate
};

/// Feeds consecutive states n = 1, 2, ... and emits the record for level
/// ell = n - 1 once state n is known. Pushing the initial state is a no-op.
class EnergyAuditor {
public:
    EnergyAuditor(Systems& systems, const TimeScheme& scheme);
    std::optional<EnergyRecord> push(const FieldState& state);
    double J0() const { return J0_; }

private:
    double energy(const FieldState& s, const Vector& mech_load) const;

    Systems& systems_;
    TimeScheme scheme_;
    std::optional<FieldState> prev_;
    double J0_ = 0.0;
    double S_ = 0.0;
    double S_hat_ = 0.0;
};

std::vector<EnergyRecord> energy_audit(Systems& systems, const TimeScheme& scheme,
                                       const std::vector<FieldState>& trajectory);

// ---- errors ---------------------------------------------------------------

struct StepErrors {
    double u_L2 = 0.0;
    double u_H1 = 0.0; // full H1 norm
    double p_L2 = 0.0;
    double p_H1 = 0.0;
};

/// Errors of one state against closed forms by degree-6 quadrature.
StepErrors step_errors(const Mesh& mesh, const DofMap& dofs, const FieldState& state,
                       const VectorField& exact_u, const ScalarField& exact_p);

struct ErrorReport {
    double u_LinfL2 = 0.0;
    double u_L2H1 = 0.0;
    double p_LinfL2 = 0.0;
    double p_L2H1 = 0.0;
    std::vector<StepErrors> per_step;
};

/// L-infinity in time over all levels, L2 in time as sqrt(sum_{n>=1} dt e_n^2).
class ErrorAccumulator {
public:
    ErrorAccumulator(const Systems& systems, const TimeScheme& scheme);
    StepErrors push(const FieldState& state);
    const ErrorReport& report() const { return report_; }

private:
    const Systems& systems_;
    TimeScheme scheme_;
    VectorField exact_u_;
    ScalarField exact_p_;
    double sum_u_ = 0.0;
    double sum_p_ = 0.0;
    ErrorReport report_;
};

ErrorReport error_norms(const Systems& systems, const TimeScheme& scheme,
                        const std::vector<FieldState>& trajectory);

/// log2 rates between consecutive entries; empty where the mesh ratio is not 2
/// or an error is not positive. The first entry is always empty.
std::vector<std::optional<double>> convergence_rates(const std::vector<double>& h,
                                                     const std::vector<double>& errors);

// ---- locking indicator ----------------------------------------------------

/// Neighbour differences below this fraction of max |p| on the line are flat.
inline constexpr double kLockingFlatTolerance = 1e-6;

struct LockingIndicator {
    double line_x = 0.5;
    int samples = 0;
    int extrema = 0;
    double undershoot = 0.0;
    double min_value = 0.0;
    double max_value = 0.0;
};

/// Strict interior extrema of the vertex values of `p` on the vertical line
/// x = line_x, ordered by height, and the relative negative undershoot.
/// Differences below rel_tol times the largest magnitude count as flat.
LockingIndicator locking_scan(const Mesh& mesh, const Vector& p, double reference_scale,
                              double line_x = 0.5, double rel_tol = kLockingFlatTolerance);

/// Reference scale: largest pressure Dirichlet datum at t, or the largest
/// magnitude of p on the line when there is none.
LockingIndicator locking_scan(const Systems& systems, const FieldState& state,
                              double line_x = 0.5, double rel_tol = kLockingFlatTolerance);

// ---- inf-sup --------------------------------------------------------------

enum class PressureSpace { ContinuousP1, DiscontinuousP1 };

inline constexpr int kInfSupDofBudget = 2000;

/// Discrete inf-sup constant of (div v, phi) / ||grad v|| over P2 vectors
/// orthogonal to the rigid motions and mean-zero pressures. Throws
/// InvalidArgument when the problem exceeds kInfSupDofBudget unknowns.
double estimate_infsup(const Mesh& mesh, PressureSpace space = PressureSpace::ContinuousP1);

// ---- Biot limit -----------------------------------------------------------

struct SweepRow {
    double c0_a = 0.0;
    double c0_b = 0.0;
    double dist_u = 0.0;   // max_n ||u_a - u_b||
    double dist_eta = 0.0;
    double dist_xi = 0.0;
};

/// Runs the benchmark once per c0 and reports L-infinity(L2) distances of
/// consecutive runs.
std::vector<SweepRow> biot_limit_sweep(const Benchmark& benchmark, const Mesh& mesh,
                                       const TimeScheme& scheme, const std::vector<double>& c0_list,
                                       SolverOptions options = {});

} // namespace poro
