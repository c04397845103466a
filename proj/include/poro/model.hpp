#pragma once

#include "poro/mesh.hpp"

#include <Eigen/Core>

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <utility>

namespace poro {

using Mat2 = Eigen::Matrix2d;

struct MaterialParams {
    double lambda = 1.0; // first Lame constant
    double mu = 1.0;     // shear modulus
    double alpha = 1.0;  // Biot-Willis constant
    double c0 = 1.0;     // constrained specific storage
    double K = 1.0;      // scalar permeability
    double mu_f = 1.0;   // solvent viscosity
    double rho_f = 0.0;  // fluid density
    Vec2 g = Vec2::Zero();

    double mobility() const { return K / mu_f; }
    Vec2 rho_g() const { return rho_f * g; }

    /// Throws InvalidArgument when a physical invariant is violated.
    void validate() const;
};

/// Coefficients of the (eta, xi) reformulation.
struct DerivedCoeffs {
    double kappa1 = 0.0;
    double kappa2 = 0.0;
    double kappa3 = 0.0;
};

DerivedCoeffs derive_kappas(const MaterialParams& params);

/// Lame constants from Young's modulus and Poisson ratio; returns (lambda, mu).
std::pair<double, double> lame_from_young_poisson(double E, double nu);

struct PressureDilatation {
    double p;
    double q;
};

struct PseudoPressures {
    double xi;
    double eta;
};

/// p = k1 xi + k2 eta, q = k1 eta - k3 xi.
PressureDilatation pq_from_xieta(double xi, double eta, const DerivedCoeffs& k);

/// eta = c0 p + alpha q, xi = alpha p - lambda q.
PseudoPressures xieta_from_pq(double p, double q, const MaterialParams& params);

using ScalarFn = std::function<double(const Vec2& x, double t)>;
using VectorFn = std::function<Vec2(const Vec2& x, double t)>;
using BoundaryScalarFn = std::function<double(const Vec2& x, const Vec2& n, double t)>;
using BoundaryVectorFn = std::function<Vec2(const Vec2& x, const Vec2& n, double t)>;

struct ScalarField {
    ScalarFn value;
    VectorFn gradient;
};

struct VectorField {
    VectorFn value;
    std::function<Mat2(const Vec2& x, double t)> gradient; // (i,j) = d u_i / d x_j
};

enum class FlowCondition { Flux, Pressure };

/// Conditions on one rectangle side. A displacement component without a
/// Dirichlet closure is traction-driven.
struct SideCondition {
    std::array<std::optional<ScalarFn>, 2> displacement;
    BoundaryVectorFn traction;   // total-stress traction f1; empty means zero
    FlowCondition flow = FlowCondition::Flux;
    ScalarFn pressure;           // p_D for FlowCondition::Pressure
    BoundaryScalarFn flux;       // phi_1 for FlowCondition::Flux; empty means zero
};

struct BoundaryConditionSpec {
    std::array<SideCondition, 4> sides;

    SideCondition& operator[](Side s) { return sides[side_index(s)]; }
    const SideCondition& operator[](Side s) const { return sides[side_index(s)]; }

    bool pure_traction() const;
    bool pure_flux() const;
    bool has_pressure_dirichlet() const;
    /// True when every side constrains its normal displacement component.
    bool all_normals_constrained() const;
};

struct SourceFunctions {
    VectorFn f;   // body force; empty means zero
    ScalarFn phi; // mass source; empty means zero
};

struct Benchmark {
    std::string name;
    Rect domain;
    double T = 0.0;
    double default_dt = 0.0;
    int default_cells = 8;
    MaterialParams params;
    BoundaryConditionSpec bcs;
    SourceFunctions sources;
    VectorField initial_displacement;
    ScalarFn initial_pressure;
    std::optional<VectorField> exact_u;
    std::optional<ScalarField> exact_p;
    bool time_independent_data = false;
};

// Defaults for the manufactured-solution test: every coefficient 1, no gravity.
MaterialParams test1_default_params();
MaterialParams barry_mercer_default_params();
MaterialParams locking_default_params();

/// Smooth manufactured solution u = t/2 (x1^2, x2^2), p = sin(x1 + x2) e^t with
/// mixed displacement Dirichlet/traction and pressure Dirichlet data.
Benchmark benchmark_test1(const MaterialParams& params = test1_default_params());

/// Barry-Mercer: no sources, pressure pulse sin t on the middle of the bottom side.
Benchmark benchmark_barry_mercer(const MaterialParams& params = barry_mercer_default_params());

/// Cantilever-like load: clamped left side, unit downward traction on top, no flow.
Benchmark benchmark_locking(const MaterialParams& params = locking_default_params());

/// Exact solution lies in the discrete spaces (u quadratic, p linear, both linear in t).
Benchmark benchmark_polynomial(const MaterialParams& params = test1_default_params());

/// The polynomial data with traction on every side and flux on every side:
/// the configuration in which the mean-value identities all apply.
Benchmark benchmark_traction_flux(const MaterialParams& params = test1_default_params());

/// Named lookup: test1, barry_mercer, locking, polynomial, traction_flux.
Benchmark make_benchmark(const std::string& name, const MaterialParams& params);
MaterialParams default_params(const std::string& name);
bool is_benchmark_name(const std::string& name);

/// p2(x1, t) for Barry-Mercer: sin t on [0.2, 0.8), zero elsewhere.
double barry_mercer_bottom_pressure(double x1, double t);

} // namespace poro
