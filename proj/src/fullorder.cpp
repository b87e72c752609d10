#include "lgrom/fullorder.hpp"

#include <Eigen/SparseLU>
#include <stdexcept>

namespace lgrom {

namespace {

FullKkt assemble_kkt(const KktBlocks& blocks, const Eigen::VectorXd& mu,
                     const Eigen::VectorXd& state_rhs, const Eigen::VectorXd& adjoint_rhs_extra) {
  if (blocks.beta <= 0.0) throw std::invalid_argument("build_kkt: beta must be positive");
  const int nc = blocks.n_control();
  const int ns = blocks.n_state();
  const int n = nc + 2 * ns;

  const SparseMat K = blocks.stiffness.evaluate(mu);

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(blocks.control_mass.nonZeros() + 2 * blocks.coupling.nonZeros() +
               blocks.state_mass.nonZeros() + 2 * K.nonZeros());
  auto add_block = [&](const SparseMat& A, int r0, int c0, double scale, bool transpose) {
    for (int k = 0; k < A.outerSize(); ++k)
      for (SparseMat::InnerIterator it(A, k); it; ++it) {
        const int r = transpose ? static_cast<int>(it.col()) : static_cast<int>(it.row());
        const int c = transpose ? static_cast<int>(it.row()) : static_cast<int>(it.col());
        trip.emplace_back(r0 + r, c0 + c, scale * it.value());
      }
  };
  add_block(blocks.control_mass, 0, 0, 2.0 * blocks.beta, false);
  add_block(blocks.coupling, 0, nc + ns, -1.0, true);   // -C^T
  add_block(blocks.state_mass, nc, nc, 1.0, false);
  add_block(K, nc, nc + ns, 1.0, true);                 // K^T
  add_block(blocks.coupling, nc + ns, 0, -1.0, false);  // -C
  add_block(K, nc + ns, nc, 1.0, false);

  FullKkt sys;
  sys.matrix.resize(n, n);
  sys.matrix.setFromTriplets(trip.begin(), trip.end());
  sys.rhs = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd target = blocks.target_load.evaluate(mu);
  if (target.size()) sys.rhs.segment(nc, ns) = target;
  if (adjoint_rhs_extra.size()) sys.rhs.segment(nc, ns) += adjoint_rhs_extra;
  if (state_rhs.size()) sys.rhs.segment(nc + ns, ns) = state_rhs;
  sys.n_ctrl = nc;
  sys.n_state = ns;
  sys.beta = blocks.beta;
  return sys;
}

}  // namespace

FullKkt build_kkt(const KktBlocks& blocks, const Eigen::VectorXd& mu) {
  Eigen::VectorXd src = blocks.source_load.evaluate(mu);
  return assemble_kkt(blocks, mu, src, Eigen::VectorXd());
}

FullKkt build_kkt(const ConstrainedKkt& sys, const Eigen::VectorXd& mu) {
  return assemble_kkt(sys.blocks, mu, sys.lift.evaluate(mu), sys.adjoint_correction);
}

OptimalTriple solve_kkt(const FullKkt& sys) {
  Eigen::SparseLU<SparseMat> lu;
  lu.compute(sys.matrix);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("solve_kkt: sparse factorization failed (singular or ill-conditioned system)");
  const Eigen::VectorXd x = lu.solve(sys.rhs);
  if (lu.info() != Eigen::Success) throw std::runtime_error("solve_kkt: solve failed");
  OptimalTriple t;
  t.control = x.head(sys.n_ctrl);
  t.state = x.segment(sys.n_ctrl, sys.n_state);
  t.adjoint = x.tail(sys.n_state);
  return t;
}

double cost(const Eigen::VectorXd& u, const Eigen::VectorXd& f, const Eigen::VectorXd& uhat,
            double beta, const SparseMat& state_mass, const SparseMat& control_mass) {
  const Eigen::VectorXd diff = u - uhat;
  return 0.5 * diff.dot(state_mass * diff) + beta * f.dot(control_mass * f);
}

Eigen::Vector3d kkt_residual(const FullKkt& sys, const OptimalTriple& triple) {
  Eigen::VectorXd x(sys.n_ctrl + 2 * sys.n_state);
  x << triple.control, triple.state, triple.adjoint;
  const Eigen::VectorXd r = sys.matrix * x - sys.rhs;
  const double scale = std::max(1.0, sys.rhs.norm());
  Eigen::Vector3d out;
  out(0) = r.head(sys.n_ctrl).norm() / scale;
  out(1) = r.segment(sys.n_ctrl, sys.n_state).norm() / scale;
  out(2) = r.tail(sys.n_state).norm() / scale;
  return out;
}

}  // namespace lgrom
