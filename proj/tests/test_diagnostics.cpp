#include "poro/diagnostics.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>

using namespace poro;

namespace {

TimeScheme scheme(int theta, double dt, double T) {
    TimeScheme s;
    s.theta = theta;
    s.dt = dt;
    s.T = T;
    return s;
}

} // namespace

TEST(Rates, SyntheticSecondOrder) {
    std::vector<double> h{0.4, 0.2, 0.1, 0.05}, e;
    for (double x : h) e.push_back(3.7 * x * x);
    auto r = convergence_rates(h, e);
    ASSERT_EQ(r.size(), 4u);
    EXPECT_FALSE(r[0].has_value());
    for (int i = 1; i < 4; ++i) {
        ASSERT_TRUE(r[i].has_value());
        EXPECT_NEAR(*r[i], 2.0, 5e-4);
    }
}

TEST(Rates, UndefinedWhereRatioIsNotTwo) {
    auto r = convergence_rates({0.4, 0.2, 0.15, 0.075}, {1.0, 0.25, 0.1, 0.0});
    EXPECT_FALSE(r[0]);
    EXPECT_TRUE(r[1]);
    EXPECT_FALSE(r[2]); // ratio 4/3
    EXPECT_FALSE(r[3]); // zero error
    EXPECT_TRUE(convergence_rates({0.1}, {1.0})[0] == std::nullopt);
}

TEST(Locking, ConstantPressureIsFlat) {
    Mesh mesh = build_rect_mesh(6, 6);
    auto ind = locking_scan(mesh, Vector::Constant(mesh.num_vertices(), 2.5), 1.0);
    EXPECT_EQ(ind.extrema, 0);
    EXPECT_EQ(ind.undershoot, 0.0);
    EXPECT_EQ(ind.samples, 7);
}

TEST(Locking, CheckerboardHitsEveryInteriorVertex) {
    Mesh mesh = build_rect_mesh(6, 8);
    Vector p(mesh.num_vertices());
    for (int j = 0; j <= mesh.ny; ++j)
        for (int i = 0; i <= mesh.nx; ++i) p[mesh.vertex_at(i, j)] = (i + j) % 2 ? 1.0 : -1.0;
    auto ind = locking_scan(mesh, p, 2.0);
    EXPECT_EQ(ind.extrema, mesh.ny - 1);
    EXPECT_DOUBLE_EQ(ind.undershoot, 0.5);
    EXPECT_EQ(ind.min_value, -1.0);
    EXPECT_EQ(ind.max_value, 1.0);
}

TEST(Locking, SmoothProfileAndRoundoff) {
    Mesh mesh = build_rect_mesh(4, 10);
    Vector p(mesh.num_vertices());
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        double y = mesh.vertices[v].y();
        // One interior maximum plus noise far below the flat tolerance.
        p[v] = std::sin(M_PI * y) + 1e-12 * ((v % 3) - 1);
    }
    EXPECT_EQ(locking_scan(mesh, p, 1.0).extrema, 1);
    // A line that misses every vertex column is rejected.
    EXPECT_THROW(locking_scan(mesh, p, 1.0, 0.3), InvalidArgument);
}

TEST(InfSup, TaylorHoodIsMeshIndependent) {
    std::vector<double> beta;
    for (int n : {2, 4, 8}) beta.push_back(estimate_infsup(build_rect_mesh(n, n)));
    EXPECT_GT(beta[0], 0.0);
    for (int i = 1; i < 3; ++i) {
        EXPECT_LT(beta[i], beta[i - 1] * 1.10);
        EXPECT_GT(beta[i], 0.9 * beta[i - 1]);
    }
}

TEST(InfSup, DiscontinuousPressuresCollapse) {
    double b2 = estimate_infsup(build_rect_mesh(2, 2), PressureSpace::DiscontinuousP1);
    double b4 = estimate_infsup(build_rect_mesh(4, 4), PressureSpace::DiscontinuousP1);
    double b8 = estimate_infsup(build_rect_mesh(8, 8), PressureSpace::DiscontinuousP1);
    EXPECT_LT(b4, 0.6 * b2);
    EXPECT_LT(b8, 0.6 * b4);
    EXPECT_LT(b8, 0.1 * estimate_infsup(build_rect_mesh(8, 8)));
}

TEST(InfSup, BudgetIsEnforced) {
    EXPECT_THROW(estimate_infsup(build_rect_mesh(24, 24)), InvalidArgument);
}

TEST(Conservation, ReferenceRelations) {
    MaterialParams p;
    p.mu = 2.0;
    p.lambda = 3.0;
    p.alpha = 0.7;
    p.c0 = 0.0;
    auto k = derive_kappas(p);
    auto ref = reference_quantities(1.5, 0.4, p);
    EXPECT_DOUBLE_EQ(ref.C_eta, 1.5);
    EXPECT_NEAR(ref.C_xi, (p.mu * k.kappa1 * 1.5 - 0.4) / 2.0, 1e-15);
    EXPECT_NEAR(ref.C_q, k.kappa1 * 1.5, 1e-15);
    EXPECT_NEAR(ref.C_p, k.kappa1 * ref.C_xi + k.kappa2 * 1.5, 1e-15);
    EXPECT_DOUBLE_EQ(ref.C_u, ref.C_q);

    p.c0 = 0.3;
    k = derive_kappas(p);
    ref = reference_quantities(1.5, 0.4, p);
    EXPECT_NEAR(ref.C_xi, (p.mu * k.kappa1 * 1.5 - 0.4) / (2.0 + p.mu * k.kappa3), 1e-15);
    EXPECT_NEAR(ref.C_q, k.kappa1 * 1.5 - k.kappa3 * ref.C_xi, 1e-15);
}

class ConservationRun : public ::testing::TestWithParam<int> {};

TEST_P(ConservationRun, TractionFluxIdentitiesHold) {
    Mesh mesh = build_rect_mesh(4, 4);
    Benchmark b = benchmark_traction_flux();
    Systems sys(b, mesh);
    TimeScheme sc = scheme(GetParam(), 1e-3, 5e-3);
    ConservationTracker tracker(sys, sc);
    int checked = 0;
    RunOptions opt{false, 1e6, [&](const FieldState& s) {
                       auto res = tracker.push(s);
                       if (s.step == 0) return;
                       ++checked;
                       EXPECT_TRUE(res.eta_applies);
                       EXPECT_TRUE(res.xi_applies);
                       EXPECT_LE(res.eta, 1e-10);
                       EXPECT_LE(res.xi, 1e-10);
                       EXPECT_LE(res.flux, 1e-10);
                   }};
    run(sys, sc, opt);
    EXPECT_EQ(checked, 5);
}

INSTANTIATE_TEST_SUITE_P(Theta, ConservationRun, ::testing::Values(0, 1));

TEST(Conservation, InapplicableIdentitiesAreSkipped) {
    Mesh mesh = build_rect_mesh(4, 4);
    Systems lock(benchmark_locking(), mesh);
    TimeScheme sc = scheme(1, 1e-4, 2e-4);
    ConservationTracker t(lock, sc);
    auto r = run(lock, sc);
    for (const auto& s : r.trajectory) {
        auto res = t.push(s);
        EXPECT_TRUE(res.eta_applies);
        EXPECT_FALSE(res.xi_applies);
        EXPECT_EQ(res.xi, 0.0);
        EXPECT_LE(res.eta, 1e-12);
    }

    Systems t1(benchmark_test1(), mesh);
    ConservationTracker tt(t1, sc);
    auto res = tt.push(init_state(t1));
    EXPECT_FALSE(res.eta_applies);
    EXPECT_FALSE(res.xi_applies);
}

TEST(Energy, ZeroDataHasZeroEnergy) {
    Mesh mesh = build_rect_mesh(4, 4);
    Benchmark b = benchmark_locking();
    for (Side s : kAllSides) b.bcs[s].traction = nullptr;
    Systems sys(b, mesh);
    TimeScheme sc = scheme(1, 1e-3, 4e-3);
    auto r = run(sys, sc);
    auto recs = energy_audit(sys, sc, r.trajectory);
    ASSERT_EQ(recs.size(), 4u);
    for (const auto& e : recs) {
        EXPECT_EQ(e.J, 0.0);
        EXPECT_EQ(e.S, 0.0);
        EXPECT_EQ(e.residual, 0.0);
    }
}

TEST(Energy, CoupledIdentityIsExact) {
    Mesh mesh = build_rect_mesh(8, 8);
    Systems sys(benchmark_locking(), mesh);
    TimeScheme sc = scheme(1, 1e-4, 1e-3);
    auto r = run(sys, sc);
    EnergyAuditor aud(sys, sc);
    std::vector<EnergyRecord> recs;
    for (const auto& s : r.trajectory)
        if (auto e = aud.push(s)) recs.push_back(*e);
    ASSERT_EQ(recs.size(), 10u);
    const double J0 = aud.J0();
    EXPECT_LT(J0, 0.0); // the load does positive work
    for (std::size_t i = 0; i < recs.size(); ++i) {
        EXPECT_EQ(recs[i].ell, static_cast<int>(i));
        EXPECT_LE(std::abs(recs[i].residual), 1e-8 * std::max(1.0, std::abs(J0)));
        EXPECT_GE(recs[i].S, 0.0);
    }
    EXPECT_EQ(recs[0].S, 0.0);
    // Dissipation accumulates.
    for (std::size_t i = 1; i < recs.size(); ++i) EXPECT_GE(recs[i].S, recs[i - 1].S);
}

// The inequality needs dt <= mu_f beta^2 / (2 mu K kappa1^2 c), where c bounds
// ||grad xi||^2 / ||xi||^2 on P1. Both constants are computed here, with a safety
// factor of 2 for beta, which is estimated on a slightly different space.
TEST(Energy, DecoupledInequalityUnderComputedGate) {
    Mesh mesh = build_rect_mesh(8, 8);
    Systems sys(benchmark_locking(), mesh);
    const auto& prm = sys.params();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ge(
        Eigen::MatrixXd(assemble_scalar_stiffness(mesh, sys.dofs(), 1.0)),
        Eigen::MatrixXd(sys.scalar_mass()), Eigen::EigenvaluesOnly);
    const double c_inv = ge.eigenvalues().maxCoeff();
    const double beta = estimate_infsup(mesh);
    const double k1 = sys.coeffs().kappa1;
    const double dt_max = prm.mu_f * beta * beta / (2.0 * prm.mu * prm.K * k1 * k1 * c_inv);
    const double dt = 0.5 * dt_max;
    EXPECT_LT(dt, default_stability_constant(prm) * mesh.h * mesh.h);

    TimeScheme sc = scheme(0, dt, 10 * dt);
    auto r = run(sys, sc);
    EXPECT_TRUE(r.gate.satisfied);
    EnergyAuditor aud(sys, sc);
    std::vector<EnergyRecord> recs;
    for (const auto& s : r.trajectory)
        if (auto e = aud.push(s)) recs.push_back(*e);
    ASSERT_EQ(recs.size(), 10u);
    const double J0 = aud.J0();
    for (const auto& e : recs) {
        EXPECT_LE(e.residual_hat, 1e-8 * std::abs(J0));
        EXPECT_LE(std::abs(e.residual), 1e-8 * std::max(1.0, std::abs(J0)));
    }
}

TEST(Errors, InterpolatedPolynomialHasNoError) {
    Mesh mesh = build_rect_mesh(4, 4);
    Benchmark b = benchmark_polynomial();
    DofMap dofs = make_dofmap(mesh);
    FieldState s;
    s.t = 0.37;
    s.u = interpolate_vector(mesh, dofs, b.exact_u->value, s.t);
    s.p = interpolate_scalar(mesh, b.exact_p->value, s.t);
    auto e = step_errors(mesh, dofs, s, *b.exact_u, *b.exact_p);
    EXPECT_LE(e.u_L2, 1e-10);
    EXPECT_LE(e.u_H1, 1e-10);
    EXPECT_LE(e.p_L2, 1e-10);
    EXPECT_LE(e.p_H1, 1e-10);

    // A known offset: p + 1 has L2 error 1 and H1 error 1 on the unit square.
    s.p.array() += 1.0;
    e = step_errors(mesh, dofs, s, *b.exact_u, *b.exact_p);
    EXPECT_NEAR(e.p_L2, 1.0, 1e-12);
    EXPECT_NEAR(e.p_H1, 1.0, 1e-12);
}

TEST(Errors, TimeNormsAssembleFromSteps) {
    Mesh mesh = build_rect_mesh(4, 4);
    Systems sys(benchmark_test1(), mesh);
    TimeScheme sc = scheme(1, 1e-4, 5e-4);
    auto r = run(sys, sc);
    auto rep = error_norms(sys, sc, r.trajectory);
    ASSERT_EQ(rep.per_step.size(), 6u);
    double linf = 0.0, l2 = 0.0;
    for (std::size_t n = 0; n < rep.per_step.size(); ++n) {
        linf = std::max(linf, rep.per_step[n].p_L2);
        if (n >= 1) l2 += sc.dt * rep.per_step[n].p_H1 * rep.per_step[n].p_H1;
    }
    EXPECT_DOUBLE_EQ(rep.p_LinfL2, linf);
    EXPECT_NEAR(rep.p_L2H1, std::sqrt(l2), 1e-15);
    EXPECT_GT(rep.p_LinfL2, 0.0);
}

TEST(Errors, MissingExactSolutionIsRejected) {
    Mesh mesh = build_rect_mesh(2, 2);
    Systems sys(benchmark_locking(), mesh);
    EXPECT_THROW(ErrorAccumulator(sys, scheme(1, 1e-4, 1e-4)), Error);
}

TEST(Sweep, OneEntryAndDuplicates) {
    Mesh mesh = build_rect_mesh(4, 4);
    Benchmark b = benchmark_locking();
    TimeScheme sc = scheme(1, 1e-4, 3e-4);
    EXPECT_TRUE(biot_limit_sweep(b, mesh, sc, {1e-3}).empty());
    auto rows = biot_limit_sweep(b, mesh, sc, {1e-3, 1e-3});
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].dist_u, 0.0);
    EXPECT_EQ(rows[0].dist_eta, 0.0);
    EXPECT_EQ(rows[0].dist_xi, 0.0);
}

TEST(Sweep, DistancesShrinkBelowTheStorageTransition) {
    // lambda c0 << alpha^2 is the regime where c0 -> 0 is a limit.
    Mesh mesh = build_rect_mesh(4, 4);
    Benchmark b = benchmark_locking();
    TimeScheme sc = scheme(1, 1e-4, 3e-4);
    auto rows = biot_limit_sweep(b, mesh, sc, {1e-8, 1e-10, 1e-12});
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].c0_a, 1e-8);
    EXPECT_EQ(rows[0].c0_b, 1e-10);
    EXPECT_LT(rows[1].dist_u, rows[0].dist_u);
    EXPECT_LT(rows[1].dist_eta, rows[0].dist_eta);
    EXPECT_LT(rows[1].dist_xi, rows[0].dist_xi);
}
