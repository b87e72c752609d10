#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <functional>
#include <vector>

#include "lgrom/grid.hpp"

namespace lgrom {

using SparseMat = Eigen::SparseMatrix<double>;

/// Per-element 2x2 SPD diffusion tensors (row-major [a11,a12,a21,a22] per element).
struct TensorField {
  Eigen::Matrix<double, Eigen::Dynamic, 4> values;
  static TensorField isotropic(const Eigen::VectorXd& kappa);
};

/// mu-independent operator pieces with scalar coefficient functions, so that
/// the assembled operator is sum_q coeff_q(mu) * piece_q.
struct AffineOperatorFamily {
  std::vector<SparseMat> pieces;
  std::vector<std::function<double(const Eigen::VectorXd&)>> coeffs;

  int num_terms() const { return static_cast<int>(pieces.size()); }
  Eigen::VectorXd weights(const Eigen::VectorXd& mu) const;
  SparseMat evaluate(const Eigen::VectorXd& mu) const;
};

/// Affine family of load vectors: sum_p coeff_p(mu) * vec_p.
struct AffineLoadFamily {
  std::vector<Eigen::VectorXd> pieces;
  std::vector<std::function<double(const Eigen::VectorXd&)>> coeffs;

  int num_terms() const { return static_cast<int>(pieces.size()); }
  Eigen::VectorXd weights(const Eigen::VectorXd& mu) const;
  Eigen::VectorXd evaluate(const Eigen::VectorXd& mu) const;
};

// P1 stiffness with per-element scalar or tensor coefficient.
SparseMat assemble_stiffness(const FineGrid& grid, const Eigen::VectorXd& kappa);
SparseMat assemble_stiffness(const FineGrid& grid, const TensorField& kappa);
// No positivity/SPD check: for sign-indefinite affine pieces (e.g. EIM basis
// fields) whose weighted sum is the physical operator.
SparseMat assemble_stiffness_unchecked(const FineGrid& grid, const TensorField& kappa);
// Stiffness restricted to a neighborhood patch (rows/cols over patch-local
// node numbering given by `nodes`, elements restricted to `elems`).
SparseMat assemble_local_stiffness(const FineGrid& grid, const Eigen::VectorXd& kappa,
                                   const std::vector<int>& elems, const std::vector<int>& nodes);
SparseMat assemble_local_mass(const FineGrid& grid, const Eigen::VectorXd& weight,
                              const std::vector<int>& elems, const std::vector<int>& nodes);

SparseMat assemble_state_mass(const FineGrid& grid);              // M3, N_h x N_h
SparseMat assemble_control_mass(const FineGrid& grid);            // M1, diagonal N_e x N_e
SparseMat assemble_coupling(const FineGrid& grid);                // M2, N_h x N_e

// Load vector (phi_k, field): nodal P1 field (size N_h) or per-element P0
// field (size N_e), disambiguated by length.
Eigen::VectorXd assemble_load(const FineGrid& grid, const Eigen::VectorXd& field);

// 1D P1 mass matrix on the domain boundary, over all N_h dofs (nonzero only
// in boundary rows/columns).
SparseMat assemble_boundary_mass(const FineGrid& grid);

/// Problem blocks shared by the distributed and Neumann control settings.
/// For distributed control the control space is P0 per element and the
/// coupling is M2; for boundary control it is the P1 trace with the boundary
/// mass as both control mass and coupling.
struct KktBlocks {
  SparseMat control_mass;        // M1 (or boundary mass)
  SparseMat coupling;            // N_h x n_ctrl, (psi_k, control basis j)
  SparseMat state_mass;          // M3
  AffineOperatorFamily stiffness;
  AffineLoadFamily target_load;  // \bar{\hat U}(mu) = sum_p u_p(mu) (M3 \hat u_p)
  double beta = 1.0;

  // Dirichlet data; empty means natural (Neumann) boundary handling.
  bool has_dirichlet = false;
  Eigen::VectorXd dirichlet_values;  // full N_h, nonzero only on boundary nodes
  AffineLoadFamily source_load;      // fixed source f(x) for the Neumann case

  int n_state() const { return static_cast<int>(state_mass.rows()); }
  int n_control() const { return static_cast<int>(control_mass.rows()); }
};

/// Outcome of eliminating Dirichlet dofs: blocks restricted to interior
/// state/adjoint dofs, plus the affine lift family d^q = -K^q_{ib} g folded
/// into the state-equation right side and the target-side correction
/// -M3_{ib} g for the adjoint equation.
struct ConstrainedKkt {
  std::vector<int> interior;          // interior node ids (sorted)
  std::vector<int> full_to_interior;  // -1 for boundary nodes
  KktBlocks blocks;                   // all state-indexed blocks restricted to interior
  AffineLoadFamily lift;              // d(mu), interior-sized, affine in mu
  Eigen::VectorXd adjoint_correction; // -M3_{ib} g, interior-sized
  Eigen::VectorXd boundary_values;    // g restricted to boundary nodes (full layout kept)
};

ConstrainedKkt apply_dirichlet(const KktBlocks& blocks, const FineGrid& grid,
                               const Eigen::VectorXd& g);

SparseMat affine_evaluate(const AffineOperatorFamily& family, const Eigen::VectorXd& mu);

}  // namespace lgrom
