#pragma once

#include <Eigen/SparseCore>

#include "lgrom/assembly.hpp"

namespace lgrom {

/// Assembled saddle-point optimality system at a fixed parameter, with
/// unknown ordering [control; state; adjoint]. For Dirichlet problems the
/// state/adjoint dofs are the interior ones; for Neumann control they span
/// the full node set and the control lives on the boundary trace.
struct FullKkt {
  SparseMat matrix;
  Eigen::VectorXd rhs;
  int n_ctrl = 0;
  int n_state = 0;
  double beta = 0.0;
};

struct OptimalTriple {
  Eigen::VectorXd state;
  Eigen::VectorXd control;
  Eigen::VectorXd adjoint;
  double cost = 0.0;
};

FullKkt build_kkt(const KktBlocks& blocks, const Eigen::VectorXd& mu);
FullKkt build_kkt(const ConstrainedKkt& sys, const Eigen::VectorXd& mu);

OptimalTriple solve_kkt(const FullKkt& sys);

/// J = 1/2 (u - uhat)^T M3 (u - uhat) + beta f^T M1 f.
double cost(const Eigen::VectorXd& u, const Eigen::VectorXd& f, const Eigen::VectorXd& uhat,
            double beta, const SparseMat& state_mass, const SparseMat& control_mass);

/// Relative residual norms of the gradient, adjoint, and state equations.
Eigen::Vector3d kkt_residual(const FullKkt& sys, const OptimalTriple& triple);

}  // namespace lgrom
