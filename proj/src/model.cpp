#include "poro/model.hpp"

#include "poro/error.hpp"

#include <cmath>

namespace poro {

void MaterialParams::validate() const
{
    if (!(mu > 0.0)) {
        throw InvalidArgument("material: mu must be > 0");
    }
    if (!(lambda >= 0.0)) {
        throw InvalidArgument("material: lambda must be >= 0");
    }
    if (!(alpha > 0.0)) {
        throw InvalidArgument("material: alpha must be > 0");
    }
    if (!(c0 >= 0.0)) {
        throw InvalidArgument("material: c0 must be >= 0");
    }
    if (!(K > 0.0)) {
        throw InvalidArgument("material: K must be > 0");
    }
    if (!(mu_f > 0.0)) {
        throw InvalidArgument("material: mu_f must be > 0");
    }
}

DerivedCoeffs derive_kappas(const MaterialParams& params)
{
    const double denom = params.alpha * params.alpha + params.lambda * params.c0;
    if (!(denom > 0.0)) {
        throw DegenerateParameters("derive_kappas: alpha^2 + lambda*c0 must be positive");
    }
    return {params.alpha / denom, params.lambda / denom, params.c0 / denom};
}

std::pair<double, double> lame_from_young_poisson(double E, double nu)
{
    if (!(E > 0.0)) {
        throw InvalidArgument("lame_from_young_poisson: E must be > 0");
    }
    if (nu >= 0.5) {
        throw InvalidArgument("lame_from_young_poisson: nu >= 0.5 is the incompressible limit");
    }
    if (nu <= -1.0) {
        throw InvalidArgument("lame_from_young_poisson: nu must be > -1");
    }
    const double lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    const double mu = E / (2.0 * (1.0 + nu));
    return {lambda, mu};
}

PressureDilatation pq_from_xieta(double xi, double eta, const DerivedCoeffs& k)
{
    return {k.kappa1 * xi + k.kappa2 * eta, k.kappa1 * eta - k.kappa3 * xi};
}

PseudoPressures xieta_from_pq(double p, double q, const MaterialParams& params)
{
    return {params.alpha * p - params.lambda * q, params.c0 * p + params.alpha * q};
}

bool BoundaryConditionSpec::pure_traction() const
{
    for (const auto& s : sides) {
        if (s.displacement[0] || s.displacement[1]) {
            return false;
        }
    }
    return true;
}

bool BoundaryConditionSpec::pure_flux() const
{
    for (const auto& s : sides) {
        if (s.flow == FlowCondition::Pressure) {
            return false;
        }
    }
    return true;
}

bool BoundaryConditionSpec::has_pressure_dirichlet() const
{
    return !pure_flux();
}

bool BoundaryConditionSpec::all_normals_constrained() const
{
    // Gamma1/Gamma3 have normal component 0, Gamma2/Gamma4 component 1.
    for (Side s : kAllSides) {
        const int normal_comp = (s == Side::Gamma1 || s == Side::Gamma3) ? 0 : 1;
        if (!(*this)[s].displacement[normal_comp]) {
            return false;
        }
    }
    return true;
}

MaterialParams test1_default_params()
{
    MaterialParams p;
    p.lambda = 1.0;
    p.mu = 1.0;
    p.alpha = 1.0;
    p.c0 = 1.0;
    p.K = 1.0;
    p.mu_f = 1.0;
    p.rho_f = 0.0;
    return p;
}

MaterialParams barry_mercer_default_params()
{
    MaterialParams p = test1_default_params();
    p.c0 = 0.0;
    return p;
}

MaterialParams locking_default_params()
{
    MaterialParams p;
    const auto [lambda, mu] = lame_from_young_poisson(1e5, 0.4);
    p.lambda = lambda;
    p.mu = mu;
    p.alpha = 1.0;
    p.c0 = 0.0;
    p.K = 1e-6;
    p.mu_f = 1.0;
    p.rho_f = 0.0;
    return p;
}

namespace {

ScalarFn zero_scalar()
{
    return [](const Vec2&, double) { return 0.0; };
}

VectorField zero_vector_field()
{
    return {[](const Vec2&, double) { return Vec2(0.0, 0.0); },
            [](const Vec2&, double) { return Mat2(Mat2::Zero()); }};
}

// u = t/2 (x1^2, x2^2): the displacement shared by test1 and the polynomial case.
VectorField quadratic_displacement()
{
    return {[](const Vec2& x, double t) { return Vec2(0.5 * t * x.x() * x.x(), 0.5 * t * x.y() * x.y()); },
            [](const Vec2& x, double t) {
                Mat2 g;
                g << t * x.x(), 0.0, 0.0, t * x.y();
                return g;
            }};
}

// Componentwise Dirichlet on u (u1 on Gamma1/3, u2 on Gamma2/4) and pressure
// Dirichlet on all sides; the traction closure covers the free components.
BoundaryConditionSpec mixed_conditions(const VectorField& u, const ScalarFn& p,
                                       const BoundaryVectorFn& traction)
{
    BoundaryConditionSpec bcs;
    auto comp = [u](int c) -> ScalarFn {
        return [u, c](const Vec2& x, double t) { return u.value(x, t)[c]; };
    };
    for (Side s : kAllSides) {
        auto& sc = bcs[s];
        const int c = (s == Side::Gamma1 || s == Side::Gamma3) ? 0 : 1;
        sc.displacement[c] = comp(c);
        sc.traction = traction;
        sc.flow = FlowCondition::Pressure;
        sc.pressure = p;
    }
    return bcs;
}

} // namespace

Benchmark benchmark_test1(const MaterialParams& params)
{
    params.validate();
    const MaterialParams mp = params;
    Benchmark b;
    b.name = "test1";
    b.T = 0.001;
    b.default_dt = 1e-5;
    b.default_cells = 8;
    b.params = mp;
    b.time_independent_data = false;

    const VectorField u = quadratic_displacement();
    ScalarField p;
    p.value = [](const Vec2& x, double t) { return std::sin(x.x() + x.y()) * std::exp(t); };
    p.gradient = [](const Vec2& x, double t) {
        const double c = std::cos(x.x() + x.y()) * std::exp(t);
        return Vec2(c, c);
    };
    b.exact_u = u;
    b.exact_p = p;

    b.sources.f = [mp](const Vec2& x, double t) {
        const double v = -(mp.lambda + mp.mu) * t + mp.alpha * std::cos(x.x() + x.y()) * std::exp(t);
        return Vec2(v, v);
    };
    b.sources.phi = [mp](const Vec2& x, double t) {
        return (mp.c0 + 2.0 * mp.mobility()) * std::sin(x.x() + x.y()) * std::exp(t) +
               mp.alpha * (x.x() + x.y());
    };
    const BoundaryVectorFn traction = [mp](const Vec2& x, const Vec2& n, double t) {
        const Vec2 shear(mp.mu * x.x() * n.x() * t, mp.mu * x.y() * n.y() * t);
        const double normal = mp.lambda * (x.x() + x.y()) * t - mp.alpha * std::sin(x.x() + x.y()) * std::exp(t);
        return Vec2(shear + normal * n);
    };
    b.bcs = mixed_conditions(u, p.value, traction);

    b.initial_displacement = zero_vector_field();
    b.initial_pressure = [](const Vec2& x, double) { return std::sin(x.x() + x.y()); };
    return b;
}

double barry_mercer_bottom_pressure(double x1, double t)
{
    return (x1 >= 0.2 && x1 < 0.8) ? std::sin(t) : 0.0;
}

Benchmark benchmark_barry_mercer(const MaterialParams& params)
{
    params.validate();
    const MaterialParams mp = params;
    Benchmark b;
    b.name = "barry_mercer";
    b.T = 1.0;
    b.default_dt = 0.01;
    b.default_cells = 32;
    b.params = mp;
    b.time_independent_data = false;

    for (Side s : kAllSides) {
        auto& sc = b.bcs[s];
        const int c = (s == Side::Gamma1 || s == Side::Gamma3) ? 0 : 1;
        sc.displacement[c] = zero_scalar();
        sc.flow = FlowCondition::Pressure;
        if (s == Side::Gamma2) {
            sc.pressure = [](const Vec2& x, double t) { return barry_mercer_bottom_pressure(x.x(), t); };
        } else {
            sc.pressure = zero_scalar();
        }
        const ScalarFn pd = sc.pressure;
        // f1 = (0, alpha p) evaluated with the boundary pressure data.
        sc.traction = [mp, pd](const Vec2& x, const Vec2&, double t) {
            return Vec2(0.0, mp.alpha * pd(x, t));
        };
    }
    b.initial_displacement = zero_vector_field();
    b.initial_pressure = zero_scalar();
    return b;
}

Benchmark benchmark_locking(const MaterialParams& params)
{
    params.validate();
    Benchmark b;
    b.name = "locking";
    b.T = 0.001;
    b.default_dt = 1e-4;
    b.default_cells = 20;
    b.params = params;
    b.time_independent_data = true;

    for (Side s : kAllSides) {
        auto& sc = b.bcs[s];
        sc.flow = FlowCondition::Flux;
        sc.flux = [](const Vec2&, const Vec2&, double) { return 0.0; };
        if (s == Side::Gamma3) {
            sc.displacement[0] = zero_scalar();
            sc.displacement[1] = zero_scalar();
        }
        const double load = (s == Side::Gamma4) ? -1.0 : 0.0;
        sc.traction = [load](const Vec2&, const Vec2&, double) { return Vec2(0.0, load); };
    }
    b.initial_displacement = zero_vector_field();
    b.initial_pressure = zero_scalar();
    return b;
}

Benchmark benchmark_polynomial(const MaterialParams& params)
{
    params.validate();
    const MaterialParams mp = params;
    Benchmark b;
    b.name = "polynomial";
    b.T = 0.01;
    b.default_dt = 1e-3;
    b.default_cells = 4;
    b.params = mp;
    b.time_independent_data = false;

    const VectorField u = quadratic_displacement();
    ScalarField p;
    p.value = [](const Vec2& x, double t) { return (1.0 + t) * (x.x() + x.y()); };
    p.gradient = [](const Vec2&, double t) { return Vec2(1.0 + t, 1.0 + t); };
    b.exact_u = u;
    b.exact_p = p;

    b.sources.f = [mp](const Vec2&, double t) {
        const double v = -(mp.lambda + mp.mu) * t + mp.alpha * (1.0 + t);
        return Vec2(v, v);
    };
    b.sources.phi = [mp](const Vec2& x, double) {
        return (mp.c0 + mp.alpha) * (x.x() + x.y());
    };
    const BoundaryVectorFn traction = [mp](const Vec2& x, const Vec2& n, double t) {
        const Vec2 shear(mp.mu * x.x() * n.x() * t, mp.mu * x.y() * n.y() * t);
        const double normal = (mp.lambda * t - mp.alpha * (1.0 + t)) * (x.x() + x.y());
        return Vec2(shear + normal * n);
    };
    b.bcs = mixed_conditions(u, p.value, traction);

    b.initial_displacement = zero_vector_field();
    b.initial_pressure = [](const Vec2& x, double) { return x.x() + x.y(); };
    return b;
}

Benchmark benchmark_traction_flux(const MaterialParams& params)
{
    Benchmark b = benchmark_polynomial(params);
    const MaterialParams mp = b.params;
    b.name = "traction_flux";
    for (Side s : kAllSides) {
        SideCondition sc;
        sc.traction = b.bcs[s].traction;
        sc.flow = FlowCondition::Flux;
        sc.flux = [mp](const Vec2&, const Vec2& n, double t) {
            const Vec2 grad_p(1.0 + t, 1.0 + t);
            return mp.mobility() * (grad_p - mp.rho_g()).dot(n);
        };
        b.bcs[s] = sc;
    }
    // Displacement is fixed only up to rigid motions, so no exact fields.
    b.exact_u.reset();
    b.exact_p.reset();
    return b;
}

bool is_benchmark_name(const std::string& name)
{
    return name == "test1" || name == "barry_mercer" || name == "locking" || name == "polynomial" ||
           name == "traction_flux";
}

MaterialParams default_params(const std::string& name)
{
    if (name == "test1" || name == "polynomial" || name == "traction_flux") {
        return test1_default_params();
    }
    if (name == "barry_mercer") {
        return barry_mercer_default_params();
    }
    if (name == "locking") {
        return locking_default_params();
    }
    throw InvalidArgument("unknown benchmark '" + name + "'");
}

Benchmark make_benchmark(const std::string& name, const MaterialParams& params)
{
    if (name == "test1") {
        return benchmark_test1(params);
    }
    if (name == "barry_mercer") {
        return benchmark_barry_mercer(params);
    }
    if (name == "locking") {
        return benchmark_locking(params);
    }
    if (name == "polynomial") {
        return benchmark_polynomial(params);
    }
    if (name == "traction_flux") {
        return benchmark_traction_flux(params);
    }
    throw InvalidArgument("unknown benchmark '" + name + "'");
}

} // namespace poro
