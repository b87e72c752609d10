#pragma once

#include <memory>

#include "lgrom/gmsfem.hpp"

namespace lgrom {

/// Orthonormal reduced bases over the local (GMsFEM) dof set. The
/// state/adjoint space is enriched with both state and adjoint snapshots so
/// the two spaces coincide; the control space keeps one vector per sample.
struct ReducedSpaces {
  Eigen::MatrixXd Z1;  // M x dim_state, columns orthonormal in the state L2 product
  Eigen::MatrixXd Z2;  // n_ctrl x dim_ctrl, columns orthonormal in the control L2 product
  int samples = 0;     // N: number of enrichment rounds accepted

  int dim_state() const { return static_cast<int>(Z1.cols()); }
  int dim_ctrl() const { return static_cast<int>(Z2.cols()); }
};

/// mu-independent projections of the local reduced KKT onto the RB spaces.
struct ReducedModel {
  std::shared_ptr<const LocalReducedKkt> local;
  Eigen::MatrixXd Z1, Z2;
  std::vector<Eigen::MatrixXd> K_pieces;  // Z1^T K_l^q Z1
  Eigen::MatrixXd M3g, M1g, Cg;           // Cg = Z1^T C_l Z2
  std::vector<Eigen::VectorXd> target_pieces;   // Z1^T t_p
  Eigen::VectorXd adjoint_correction;           // Z1^T corr
  std::vector<Eigen::VectorXd> staterhs_pieces; // Z1^T d_q
  double beta = 0.0;

  int N() const { return static_cast<int>(Z2.cols()); }
  int system_size() const { return static_cast<int>(Z2.cols() + 2 * Z1.cols()); }
  Eigen::MatrixXd assemble(const Eigen::VectorXd& mu) const;
  Eigen::VectorXd rhs(const Eigen::VectorXd& mu) const;
};

struct ReducedSolution {
  Eigen::VectorXd control;  // N coefficients
  Eigen::VectorXd state;    // 2N coefficients
  Eigen::VectorXd adjoint;  // 2N coefficients
};

/// Gram-Schmidt against a dense SPD inner-product matrix; near-dependent
/// vectors (residual below drop_tol relative) are discarded.
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& vectors, const Eigen::MatrixXd& ip,
                               double drop_tol = 1e-10);

LocalSolution collect_snapshot(const LocalReducedKkt& local, const Eigen::VectorXd& mu);

/// Append a snapshot triple; state space gains u and lambda, control space
/// gains f (projected onto the control basis Z2 via L2 Gram-Schmidt).
void enrich_spaces(ReducedSpaces& spaces, const LocalSolution& snapshot,
                   const LocalReducedKkt& local, double drop_tol = 1e-10);

ReducedModel project_reduced(std::shared_ptr<const LocalReducedKkt> local,
                             const ReducedSpaces& spaces);

ReducedSolution online_solve(const ReducedModel& model, const Eigen::VectorXd& mu);

/// Local-coordinate fields (state/adjoint over the multiscale dofs, control
/// over the full control dofs).
struct DownscaledSolution {
  Eigen::VectorXd state_local;
  Eigen::VectorXd adjoint_local;
  Eigen::VectorXd control;
};
DownscaledSolution downscale(const ReducedModel& model, const ReducedSolution& sol);

/// Fine-dof state/adjoint vectors (composition R^l * Z1 * coefficients).
Eigen::VectorXd downscale_state_fine(const ReducedModel& model, const Eigen::VectorXd& coeffs);

}  // namespace lgrom
