#pragma once

#include "poro/elements.hpp"
#include "poro/mesh.hpp"
#include "poro/model.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <utility>
#include <vector>

namespace poro {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Degrees of freedom for Taylor-Hood displacement (P2, two components per
/// node, interleaved) and the P1 scalars xi and eta. In the monolithic layout
/// the blocks are u, xi, eta in that order.
struct DofMap {
    int num_p2_nodes = 0;
    int num_vertices = 0;

    int num_u() const { return 2 * num_p2_nodes; }
    int num_scalar() const { return num_vertices; }
    int u_dof(int node, int comp) const { return 2 * node + comp; }
    int xi_offset() const { return num_u(); }
    int eta_offset() const { return num_u() + num_vertices; }
    int num_stokes() const { return num_u() + num_vertices; }
    int num_monolithic() const { return num_u() + 2 * num_vertices; }
};

DofMap make_dofmap(const Mesh& mesh);

/// mu (eps(u), eps(v)) over the P2 vector space.
SparseMatrix assemble_elasticity(const Mesh& mesh, const DofMap& dofs, double mu);

/// B[k, (node,comp)] = (div v, psi_k): P1 rows, P2 vector columns.
SparseMatrix assemble_div(const Mesh& mesh, const DofMap& dofs);

SparseMatrix assemble_scalar_mass(const Mesh& mesh, const DofMap& dofs);

/// coef (grad psi_i, grad psi_j) on P1.
SparseMatrix assemble_scalar_stiffness(const Mesh& mesh, const DofMap& dofs, double coef);

/// (u, v) over the P2 vector space.
SparseMatrix assemble_vector_mass(const Mesh& mesh, const DofMap& dofs);

struct LoadVectors {
    Vector mech; // (f, v) + <f1, v>
    Vector flow; // (phi, psi) + <phi1, psi> + (K/mu_f)(rho_f g, grad psi)
};

LoadVectors assemble_load(const Mesh& mesh, const DofMap& dofs, const SourceFunctions& sources,
                          const BoundaryConditionSpec& bcs, const MaterialParams& params,
                          double t);

/// P2 nodal interpolant of a vector field.
Vector interpolate_vector(const Mesh& mesh, const DofMap& dofs, const VectorFn& field, double t);

/// P1 nodal interpolant of a scalar field.
Vector interpolate_scalar(const Mesh& mesh, const ScalarFn& field, double t);

/// P2 coefficients of the rigid motions (1,0), (0,1) and (-x2, x1).
std::vector<Vector> rigid_motion_basis(const Mesh& mesh, const DofMap& dofs);

struct DirichletConstraint {
    int dof = -1;
    double value = 0.0;
};

/// sum_i terms[i].second * x[terms[i].first] = rhs. The multiplier enters the
/// equations listed in `reaction`; an empty reaction means the transpose of
/// `terms` (symmetric saddle point).
struct AffineConstraint {
    std::vector<std::pair<int, double>> terms;
    double rhs = 0.0;
    std::vector<std::pair<int, double>> reaction;
};

struct ConstraintSet {
    std::vector<DirichletConstraint> dirichlet;
    std::vector<AffineConstraint> affine;
    int rigid_motion_rows = 0;
    int pressure_rows = 0;
};

/// Which assembled system the constraints index into.
enum class ConstraintTarget {
    Mechanics,  // u only
    Stokes,     // (u, xi)
    Flow,       // eta only; pressure data eliminated with a known xi
    Monolithic, // (u, xi, eta)
};

/// Builds the constraints at time t. For ConstraintTarget::Flow, pressure
/// Dirichlet vertices get eta = (p_D - kappa1 xi_known) / kappa2; for
/// Monolithic they get the row kappa1 xi + kappa2 eta = p_D with its
/// multiplier acting on the eta equation only. Rigid-motion rows are added
/// when no displacement component is Dirichlet anywhere.
ConstraintSet build_constraints(const Mesh& mesh, const DofMap& dofs,
                                const BoundaryConditionSpec& bcs, const DerivedCoeffs& coeffs,
                                double t, ConstraintTarget target,
                                const Vector* xi_known = nullptr);

/// Eliminates single-dof constraints and appends affine rows as Lagrange
/// multipliers. The reduced matrix depends only on the constraint pattern, so
/// one reduction serves every time step; values enter through reduce_rhs and
/// expand.
class ConstraintReduction {
public:
    ConstraintReduction(const SparseMatrix& system, const ConstraintSet& pattern);

    const SparseMatrix& matrix() const { return reduced_; }
    int full_size() const { return full_size_; }
    int num_free() const { return static_cast<int>(free_dofs_.size()); }
    int num_multipliers() const { return num_affine_; }

    Vector reduce_rhs(const Vector& rhs, const ConstraintSet& values) const;
    Vector expand(const Vector& reduced, const ConstraintSet& values) const;

private:
    void check_pattern(const ConstraintSet& values) const;

    int full_size_ = 0;
    int num_affine_ = 0;
    std::vector<int> free_dofs_;
    std::vector<int> reduced_index_; // -1 for eliminated dofs
    std::vector<int> dirichlet_dofs_;
    SparseMatrix coupling_;      // free rows x eliminated dofs (full column index)
    SparseMatrix affine_fixed_;  // affine rows x eliminated dofs
    SparseMatrix reduced_;
};

struct ReducedSystem {
    ConstraintReduction reduction;
    Vector rhs;
};

ReducedSystem apply_constraints(const SparseMatrix& system, const Vector& rhs,
                                const ConstraintSet& constraints);

/// Copies `block` into `target` at (row0, col0) scaled by `scale`.
void add_block(std::vector<Eigen::Triplet<double>>& target, const SparseMatrix& block, int row0,
               int col0, double scale);

} // namespace poro
