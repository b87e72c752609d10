#include "lgrom/gmsfem.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lgrom {

SnapshotSpace harmonic_snapshots(const FineGrid& grid, const CoarseGrid& coarse,
                                 const Eigen::VectorXd& kappa, int neighborhood) {
  if ((kappa.array() <= 0.0).any())
    throw std::invalid_argument("harmonic_snapshots: coefficient must be positive");
  const auto nn = neighborhood_nodes(grid, coarse, neighborhood);
  const auto& elems = coarse.neighborhoods[neighborhood];
  const SparseMat A = assemble_local_stiffness(grid, kappa, elems, nn.all);

  const int n = static_cast<int>(nn.all.size());
  std::vector<int> local_of(grid.num_nodes(), -1);
  for (int k = 0; k < n; ++k) local_of[nn.all[k]] = k;
  std::vector<bool> on_bd(n, false);
  SnapshotSpace out;
  out.neighborhood = neighborhood;
  out.nodes = nn.all;
  for (int b : nn.boundary) {
    on_bd[local_of[b]] = true;
    out.boundary_rows.push_back(local_of[b]);
  }
  std::vector<int> interior;
  for (int k = 0; k < n; ++k)
    if (!on_bd[k]) interior.push_back(k);
  const int ni = static_cast<int>(interior.size());
  const int nb = static_cast<int>(out.boundary_rows.size());
  std::vector<int> to_int(n, -1);
  for (int k = 0; k < ni; ++k) to_int[interior[k]] = k;

  // Split A into interior-interior and interior-boundary parts.
  std::vector<Eigen::Triplet<double>> tii;
  Eigen::MatrixXd Aib = Eigen::MatrixXd::Zero(ni, nb);
  std::vector<int> to_bd(n, -1);
  for (int k = 0; k < nb; ++k) to_bd[out.boundary_rows[k]] = k;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseMat::InnerIterator it(A, k); it; ++it) {
      const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
      if (!on_bd[r] && !on_bd[c]) tii.emplace_back(to_int[r], to_int[c], it.value());
      else if (!on_bd[r] && on_bd[c]) Aib(to_int[r], to_bd[c]) += it.value();
    }
  SparseMat Aii(ni, ni);
  Aii.setFromTriplets(tii.begin(), tii.end());
  Eigen::SimplicialLDLT<SparseMat> solver(Aii);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("harmonic_snapshots: singular local system");

  out.snapshots = Eigen::MatrixXd::Zero(n, nb);
  const Eigen::MatrixXd Zint = solver.solve(-Aib);
  for (int j = 0; j < nb; ++j) {
    out.snapshots(out.boundary_rows[j], j) = 1.0;
    for (int k = 0; k < ni; ++k) out.snapshots(interior[k], j) = Zint(k, j);
  }
  return out;
}

Eigen::VectorXd modified_mass_weight(const FineGrid& grid, const CoarseGrid& coarse,
                                     const Eigen::VectorXd& kappa) {
  const double Hx = 1.0 / coarse.ncx;
  const double Hy = 1.0 / coarse.ncy;
  const double H2 = Hx * Hy;
  Eigen::VectorXd w(grid.num_elements());
  for (int e = 0; e < grid.num_elements(); ++e) {
    const Eigen::Vector2d c = grid.centroid(e);
    double acc = 0.0;
    for (int J = 0; J <= coarse.ncy; ++J) {
      const double ty = 1.0 - std::abs(c(1) - J * Hy) / Hy;
      if (ty <= 0.0) continue;
      for (int I = 0; I <= coarse.ncx; ++I) {
        const double tx = 1.0 - std::abs(c(0) - I * Hx) / Hx;
        if (tx <= 0.0) continue;
        acc += H2 * ((ty * ty) / (Hx * Hx) + (tx * tx) / (Hy * Hy));
      }
    }
    w(e) = kappa(e) * acc;
  }
  return w;
}

LocalSpectralBasis local_spectral_basis(const FineGrid& grid, const CoarseGrid& coarse,
                                        const SnapshotSpace& snap, const Eigen::VectorXd& kappa,
                                        const Eigen::VectorXd& kappa_tilde, int M_i) {
  const int l_i = static_cast<int>(snap.snapshots.cols());
  if (M_i > l_i) throw std::invalid_argument("local_spectral_basis: M_i exceeds snapshot count");
  const auto& elems = coarse.neighborhoods[snap.neighborhood];
  const SparseMat A = assemble_local_stiffness(grid, kappa, elems, snap.nodes);
  const SparseMat S = assemble_local_mass(grid, kappa_tilde, elems, snap.nodes);
  const Eigen::MatrixXd Alr = snap.snapshots.transpose() * A * snap.snapshots;
  const Eigen::MatrixXd Slr = snap.snapshots.transpose() * S * snap.snapshots;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(Alr, Slr);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("local_spectral_basis: eigensolver failed");
  LocalSpectralBasis out;
  out.eigenvalues = eig.eigenvalues().head(M_i);
  out.basis = snap.snapshots * eig.eigenvectors().leftCols(M_i);
  return out;
}

namespace {

// Modified Gram-Schmidt dependence filter over candidate columns; keeps the
// original (unorthogonalized) columns of the survivors.
std::vector<int> independent_columns(const Eigen::MatrixXd& cols, double drop_tol) {
  std::vector<int> keep;
  std::vector<Eigen::VectorXd> basis;
  for (int j = 0; j < cols.cols(); ++j) {
    Eigen::VectorXd v = cols.col(j);
    const double orig = v.norm();
    if (orig == 0.0) continue;
    for (const auto& b : basis) v -= b.dot(v) * b;
    for (const auto& b : basis) v -= b.dot(v) * b;  // re-orthogonalize
    if (v.norm() > drop_tol * orig) {
      basis.push_back(v / v.norm());
      keep.push_back(j);
    }
  }
  return keep;
}

}  // namespace

MultiscaleSpace multiscale_space(const FineGrid& grid, const CoarseGrid& coarse,
                                 const PartitionOfUnity& pou,
                                 const std::vector<LocalSpectralBasis>& locals,
                                 const std::vector<SnapshotSpace>& snaps, double drop_tol) {
  int total = 0;
  for (const auto& l : locals) total += static_cast<int>(l.basis.cols());
  if (total == 0) throw std::invalid_argument("multiscale_space: empty basis");

  Eigen::MatrixXd cols = Eigen::MatrixXd::Zero(grid.num_nodes(), total);
  std::vector<std::pair<int, int>> origin;
  int j = 0;
  for (size_t i = 0; i < locals.size(); ++i) {
    const auto& chi = pou.chi[snaps[i].neighborhood];
    for (int l = 0; l < locals[i].basis.cols(); ++l, ++j) {
      for (size_t k = 0; k < snaps[i].nodes.size(); ++k) {
        const int node = snaps[i].nodes[k];
        cols(node, j) = chi(node) * locals[i].basis(k, l);
      }
      origin.emplace_back(snaps[i].neighborhood, l);
    }
  }
  const auto keep = independent_columns(cols, drop_tol);

  MultiscaleSpace out;
  std::vector<Eigen::Triplet<double>> trip;
  for (size_t c = 0; c < keep.size(); ++c) {
    out.column_origin.push_back(origin[keep[c]]);
    for (int r = 0; r < cols.rows(); ++r)
      if (cols(r, keep[c]) != 0.0) trip.emplace_back(r, static_cast<int>(c), cols(r, keep[c]));
  }
  out.R.resize(grid.num_nodes(), static_cast<int>(keep.size()));
  out.R.setFromTriplets(trip.begin(), trip.end());
  out.eigenvalues.resize(locals.size());
  for (size_t i = 0; i < locals.size(); ++i) out.eigenvalues[i] = locals[i].eigenvalues;
  return out;
}

MultiscaleSpace build_multiscale_space(const FineGrid& grid, const CoarseGrid& coarse,
                                       const Eigen::VectorXd& kappa, int L) {
  const auto pou = partition_of_unity(coarse, grid);
  const Eigen::VectorXd ktilde = modified_mass_weight(grid, coarse, kappa);
  std::vector<SnapshotSpace> snaps(coarse.num_nodes());
  std::vector<LocalSpectralBasis> locals(coarse.num_nodes());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < coarse.num_nodes(); ++i) {
    snaps[i] = harmonic_snapshots(grid, coarse, kappa, i);
    const int Mi = std::min<int>(L, static_cast<int>(snaps[i].snapshots.cols()));
    locals[i] = local_spectral_basis(grid, coarse, snaps[i], kappa, ktilde, Mi);
  }
  return multiscale_space(grid, coarse, pou, locals, snaps);
}

SparseMat restrict_basis(const SparseMat& R, const std::vector<int>& keep_rows, double drop_tol) {
  std::vector<int> map(R.rows(), -1);
  for (size_t k = 0; k < keep_rows.size(); ++k) map[keep_rows[k]] = static_cast<int>(k);
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(keep_rows.size(), R.cols());
  for (int k = 0; k < R.outerSize(); ++k)
    for (SparseMat::InnerIterator it(R, k); it; ++it) {
      const int r = map[it.row()];
      if (r >= 0) dense(r, it.col()) = it.value();
    }
  const auto keep = independent_columns(dense, drop_tol);
  std::vector<Eigen::Triplet<double>> trip;
  for (size_t c = 0; c < keep.size(); ++c)
    for (int r = 0; r < dense.rows(); ++r)
      if (dense(r, keep[c]) != 0.0) trip.emplace_back(r, static_cast<int>(c), dense(r, keep[c]));
  SparseMat out(keep_rows.size(), keep.size());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

Eigen::MatrixXd LocalReducedKkt::stiffness_at(const Eigen::VectorXd& mu) const {
  Eigen::MatrixXd K = K_coeffs[0](mu) * K_pieces[0];
  for (size_t q = 1; q < K_pieces.size(); ++q) K += K_coeffs[q](mu) * K_pieces[q];
  return K;
}

Eigen::VectorXd LocalReducedKkt::target_at(const Eigen::VectorXd& mu) const {
  Eigen::VectorXd t = Eigen::VectorXd::Zero(M());
  for (size_t p = 0; p < target_pieces.size(); ++p) t += target_coeffs[p](mu) * target_pieces[p];
  if (adjoint_correction.size()) t += adjoint_correction;
  return t;
}

Eigen::VectorXd LocalReducedKkt::staterhs_at(const Eigen::VectorXd& mu) const {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(M());
  for (size_t p = 0; p < staterhs_pieces.size(); ++p) d += staterhs_coeffs[p](mu) * staterhs_pieces[p];
  return d;
}

LocalReducedKkt project_kkt_local(const KktBlocks& blocks, const AffineLoadFamily& state_rhs,
                                  const Eigen::VectorXd& adjoint_correction, const SparseMat& R) {
  LocalReducedKkt out;
  out.R = R;
  out.beta = blocks.beta;
  for (int q = 0; q < blocks.stiffness.num_terms(); ++q) {
    out.K_pieces.emplace_back(R.transpose() * blocks.stiffness.pieces[q] * R);
    out.K_coeffs.push_back(blocks.stiffness.coeffs[q]);
  }
  out.M3 = R.transpose() * blocks.state_mass * R;
  out.C = (R.transpose() * blocks.coupling).pruned();
  out.control_mass = blocks.control_mass;
  out.control_solver = std::make_shared<Eigen::SimplicialLDLT<SparseMat>>(blocks.control_mass);
  if (out.control_solver->info() != Eigen::Success)
    throw std::runtime_error("project_kkt_local: control mass factorization failed");
  const Eigen::MatrixXd Cd(out.C);
  out.schur = Cd * out.control_solver->solve(Cd.transpose());
  for (int p = 0; p < blocks.target_load.num_terms(); ++p) {
    out.target_pieces.push_back(R.transpose() * blocks.target_load.pieces[p]);
    out.target_coeffs.push_back(blocks.target_load.coeffs[p]);
  }
  for (int p = 0; p < state_rhs.num_terms(); ++p) {
    out.staterhs_pieces.push_back(R.transpose() * state_rhs.pieces[p]);
    out.staterhs_coeffs.push_back(state_rhs.coeffs[p]);
  }
  if (adjoint_correction.size()) out.adjoint_correction = R.transpose() * adjoint_correction;
  return out;
}

LocalReducedKkt project_kkt_local(const ConstrainedKkt& sys, const SparseMat& R_interior) {
  return project_kkt_local(sys.blocks, sys.lift, sys.adjoint_correction, R_interior);
}

LocalSolution solve_local_kkt(const LocalReducedKkt& sys, const Eigen::VectorXd& mu) {
  // Eliminate the control exactly: F = (2 beta)^{-1} Mc^{-1} C^T lambda, then
  // solve the dense 2M x 2M state/adjoint system.
  const int M = sys.M();
  const Eigen::MatrixXd K = sys.stiffness_at(mu);
  Eigen::MatrixXd A(2 * M, 2 * M);
  A.topLeftCorner(M, M) = sys.M3;
  A.topRightCorner(M, M) = K.transpose();
  A.bottomLeftCorner(M, M) = K;
  A.bottomRightCorner(M, M) = -sys.schur / (2.0 * sys.beta);
  Eigen::VectorXd rhs(2 * M);
  rhs.head(M) = sys.target_at(mu);
  rhs.tail(M) = sys.staterhs_at(mu);
  const Eigen::VectorXd x = A.partialPivLu().solve(rhs);
  LocalSolution sol;
  sol.state = x.head(M);
  sol.adjoint = x.tail(M);
  sol.control = sys.control_solver->solve(sys.C.transpose() * sol.adjoint) / (2.0 * sys.beta);
  return sol;
}

Eigen::VectorXd downscale_local(const LocalReducedKkt& sys, const Eigen::VectorXd& coeffs) {
  return sys.R * coeffs;
}

}  // namespace lgrom
