#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <memory>
#include <vector>

#include "lgrom/assembly.hpp"
#include "lgrom/grid.hpp"

namespace lgrom {

/// Harmonic extensions of nodal delta data on the boundary of one
/// neighborhood patch. Columns of snapshots are patch-local nodal vectors.
struct SnapshotSpace {
  int neighborhood = -1;
  std::vector<int> nodes;          // patch-local -> fine node ids
  std::vector<int> boundary_rows;  // rows (patch-local) of the patch boundary nodes
  Eigen::MatrixXd snapshots;       // |nodes| x l_i
};

struct LocalSpectralBasis {
  Eigen::VectorXd eigenvalues;  // ascending, size M_i
  Eigen::MatrixXd basis;        // |nodes| x M_i, patch-local fine-nodal vectors
};

/// Pasted partition-of-unity multiscale basis over all neighborhoods.
struct MultiscaleSpace {
  SparseMat R;  // N_h x M, column = chi_i * rho^{(i)}_l
  std::vector<std::pair<int, int>> column_origin;  // (neighborhood, eigenindex)
  std::vector<Eigen::VectorXd> eigenvalues;        // per neighborhood
  int M() const { return static_cast<int>(R.cols()); }
};

SnapshotSpace harmonic_snapshots(const FineGrid& grid, const CoarseGrid& coarse,
                                 const Eigen::VectorXd& kappa, int neighborhood);

/// kappa-weighted stiffness vs. kappa_tilde-weighted mass generalized
/// eigenproblem on the snapshot-projected pair; keeps the M_i smallest modes.
LocalSpectralBasis local_spectral_basis(const FineGrid& grid, const CoarseGrid& coarse,
                                        const SnapshotSpace& snap, const Eigen::VectorXd& kappa,
                                        const Eigen::VectorXd& kappa_tilde, int M_i);

/// Per-element weight kappa * sum_i H^2 |grad chi_i|^2 evaluated at centroids.
Eigen::VectorXd modified_mass_weight(const FineGrid& grid, const CoarseGrid& coarse,
                                     const Eigen::VectorXd& kappa);

MultiscaleSpace multiscale_space(const FineGrid& grid, const CoarseGrid& coarse,
                                 const PartitionOfUnity& pou,
                                 const std::vector<LocalSpectralBasis>& locals,
                                 const std::vector<SnapshotSpace>& snaps,
                                 double drop_tol = 1e-10);

/// Convenience driver: snapshots + spectral bases + pasting with L modes per
/// neighborhood.
MultiscaleSpace build_multiscale_space(const FineGrid& grid, const CoarseGrid& coarse,
                                       const Eigen::VectorXd& kappa, int L);

/// Restrict basis columns to a state-dof subset (Dirichlet interior set),
/// dropping columns that become zero or near-dependent.
SparseMat restrict_basis(const SparseMat& R, const std::vector<int>& keep_rows,
                         double drop_tol = 1e-10);

/// KKT blocks congruence-projected onto the multiscale space. The control
/// block is kept at full resolution. All pieces are mu-independent.
struct LocalReducedKkt {
  SparseMat R;                          // n_state x M restriction used
  std::vector<Eigen::MatrixXd> K_pieces;  // R^T K^q R
  std::vector<std::function<double(const Eigen::VectorXd&)>> K_coeffs;
  Eigen::MatrixXd M3;                   // R^T M3 R
  SparseMat C;                          // R^T coupling, M x n_ctrl
  Eigen::MatrixXd schur;                // C Mc^{-1} C^T (control block eliminated exactly)
  SparseMat control_mass;
  std::shared_ptr<Eigen::SimplicialLDLT<SparseMat>> control_solver;
  std::vector<Eigen::VectorXd> target_pieces;  // R^T target loads
  std::vector<std::function<double(const Eigen::VectorXd&)>> target_coeffs;
  std::vector<Eigen::VectorXd> staterhs_pieces;  // R^T (lift d^q or source)
  std::vector<std::function<double(const Eigen::VectorXd&)>> staterhs_coeffs;
  Eigen::VectorXd adjoint_correction;  // R^T correction (may be empty)
  double beta = 0.0;

  int M() const { return static_cast<int>(M3.rows()); }
  int n_ctrl() const { return static_cast<int>(C.cols()); }
  int reduced_dim() const { return n_ctrl() + 2 * M(); }

  Eigen::MatrixXd stiffness_at(const Eigen::VectorXd& mu) const;
  Eigen::VectorXd target_at(const Eigen::VectorXd& mu) const;
  Eigen::VectorXd staterhs_at(const Eigen::VectorXd& mu) const;
};

struct LocalSolution {
  Eigen::VectorXd state;    // M reduced coefficients
  Eigen::VectorXd control;  // full control coefficients (not reduced locally)
  Eigen::VectorXd adjoint;  // M reduced coefficients
};

LocalReducedKkt project_kkt_local(const KktBlocks& blocks, const AffineLoadFamily& state_rhs,
                                  const Eigen::VectorXd& adjoint_correction, const SparseMat& R);
LocalReducedKkt project_kkt_local(const ConstrainedKkt& sys, const SparseMat& R_interior);

LocalSolution solve_local_kkt(const LocalReducedKkt& sys, const Eigen::VectorXd& mu);

/// Downscale reduced state/adjoint coefficients to fine-dof vectors.
Eigen::VectorXd downscale_local(const LocalReducedKkt& sys, const Eigen::VectorXd& coeffs);

}  // namespace lgrom
