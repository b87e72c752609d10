#include "lgrom/rb.hpp"

#include <Eigen/Dense>
#include <stdexcept>

namespace lgrom {

namespace {

// One Gram-Schmidt pass (run twice) of v against the columns of Z in the
// inner product <a,b> = a^T ip_apply(b).
template <typename IpApply>
bool gs_append(Eigen::MatrixXd& Z, Eigen::VectorXd v, IpApply&& ip, double drop_tol) {
  const double orig = std::sqrt(v.dot(ip(v)));
  if (orig == 0.0) return false;
  for (int pass = 0; pass < 2; ++pass)
    for (int j = 0; j < Z.cols(); ++j) {
      const Eigen::VectorXd zj = Z.col(j);
      v -= zj.dot(ip(v)) * zj;
    }
  const double nrm = std::sqrt(std::max(0.0, v.dot(ip(v))));
  if (nrm <= drop_tol * orig) return false;
  Z.conservativeResize(Eigen::NoChange, Z.cols() + 1);
  Z.col(Z.cols() - 1) = v / nrm;
  return true;
}

}  // namespace

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& vectors, const Eigen::MatrixXd& ip,
                               double drop_tol) {
  if (vectors.cols() == 0 || vectors.norm() == 0.0)
    throw std::invalid_argument("orthonormalize: empty or all-zero input");
  Eigen::MatrixXd Z(vectors.rows(), 0);
  for (int j = 0; j < vectors.cols(); ++j)
    gs_append(Z, vectors.col(j), [&](const Eigen::VectorXd& x) { return (ip * x).eval(); }, drop_tol);
  return Z;
}

LocalSolution collect_snapshot(const LocalReducedKkt& local, const Eigen::VectorXd& mu) {
  return solve_local_kkt(local, mu);
}

void enrich_spaces(ReducedSpaces& spaces, const LocalSolution& snapshot,
                   const LocalReducedKkt& local, double drop_tol) {
  if (spaces.Z1.rows() == 0) {
    spaces.Z1.resize(local.M(), 0);
    spaces.Z2.resize(local.n_ctrl(), 0);
  }
  auto state_ip = [&](const Eigen::VectorXd& x) { return (local.M3 * x).eval(); };
  auto ctrl_ip = [&](const Eigen::VectorXd& x) { return (local.control_mass * x).eval(); };
  gs_append(spaces.Z1, snapshot.state, state_ip, drop_tol);
  gs_append(spaces.Z1, snapshot.adjoint, state_ip, drop_tol);
  gs_append(spaces.Z2, snapshot.control, ctrl_ip, drop_tol);
  spaces.samples += 1;
}

ReducedModel project_reduced(std::shared_ptr<const LocalReducedKkt> local_ptr,
                             const ReducedSpaces& spaces) {
  if (spaces.dim_state() == 0 || spaces.dim_ctrl() == 0)
    throw std::invalid_argument("project_reduced: empty reduced spaces");
  const LocalReducedKkt& local = *local_ptr;
  ReducedModel m;
  m.local = std::move(local_ptr);
  m.Z1 = spaces.Z1;
  m.Z2 = spaces.Z2;
  m.beta = local.beta;
  for (const auto& Kq : local.K_pieces) m.K_pieces.emplace_back(m.Z1.transpose() * Kq * m.Z1);
  m.M3g = m.Z1.transpose() * local.M3 * m.Z1;
  m.M1g = m.Z2.transpose() * local.control_mass * m.Z2;
  m.Cg = m.Z1.transpose() * (local.C * m.Z2);
  for (const auto& t : local.target_pieces) m.target_pieces.push_back(m.Z1.transpose() * t);
  if (local.adjoint_correction.size())
    m.adjoint_correction = m.Z1.transpose() * local.adjoint_correction;
  for (const auto& d : local.staterhs_pieces) m.staterhs_pieces.push_back(m.Z1.transpose() * d);
  return m;
}

Eigen::MatrixXd ReducedModel::assemble(const Eigen::VectorXd& mu) const {
  const int nc = static_cast<int>(Z2.cols());
  const int ns = static_cast<int>(Z1.cols());
  Eigen::MatrixXd K = local->K_coeffs[0](mu) * K_pieces[0];
  for (size_t q = 1; q < K_pieces.size(); ++q) K += local->K_coeffs[q](mu) * K_pieces[q];
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nc + 2 * ns, nc + 2 * ns);
  A.topLeftCorner(nc, nc) = 2.0 * beta * M1g;
  A.block(0, nc + ns, nc, ns) = -Cg.transpose();
  A.block(nc, nc, ns, ns) = M3g;
  A.block(nc, nc + ns, ns, ns) = K.transpose();
  A.block(nc + ns, 0, ns, nc) = -Cg;
  A.block(nc + ns, nc, ns, ns) = K;
  return A;
}

Eigen::VectorXd ReducedModel::rhs(const Eigen::VectorXd& mu) const {
  const int nc = static_cast<int>(Z2.cols());
  const int ns = static_cast<int>(Z1.cols());
  Eigen::VectorXd r = Eigen::VectorXd::Zero(nc + 2 * ns);
  for (size_t p = 0; p < target_pieces.size(); ++p)
    r.segment(nc, ns) += local->target_coeffs[p](mu) * target_pieces[p];
  if (adjoint_correction.size()) r.segment(nc, ns) += adjoint_correction;
  for (size_t p = 0; p < staterhs_pieces.size(); ++p)
    r.tail(ns) += local->staterhs_coeffs[p](mu) * staterhs_pieces[p];
  return r;
}

ReducedSolution online_solve(const ReducedModel& model, const Eigen::VectorXd& mu) {
  const Eigen::MatrixXd A = model.assemble(mu);
  const Eigen::VectorXd b = model.rhs(mu);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  const Eigen::VectorXd x = lu.solve(b);
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff() * x.cwiseAbs().maxCoeff());
  if (!x.allFinite() || (A * x - b).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw std::runtime_error("online_solve: degenerate reduced system");
  const int nc = static_cast<int>(model.Z2.cols());
  const int ns = static_cast<int>(model.Z1.cols());
  ReducedSolution sol;
  sol.control = x.head(nc);
  sol.state = x.segment(nc, ns);
  sol.adjoint = x.tail(ns);
  return sol;
}

DownscaledSolution downscale(const ReducedModel& model, const ReducedSolution& sol) {
  DownscaledSolution d;
  d.state_local = model.Z1 * sol.state;
  d.adjoint_local = model.Z1 * sol.adjoint;
  d.control = model.Z2 * sol.control;
  return d;
}

Eigen::VectorXd downscale_state_fine(const ReducedModel& model, const Eigen::VectorXd& coeffs) {
  return model.local->R * (model.Z1 * coeffs);
}

}  // namespace lgrom
