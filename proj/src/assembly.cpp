#include "lgrom/assembly.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace lgrom {

namespace {

// Constant P1 gradients on a triangle: grad psi_k = (b_k, c_k) / (2A).
struct ElementGeometry {
  double area;
  double b[3];
  double c[3];
};

ElementGeometry element_geometry(const FineGrid& g, int e) {
  const auto& t = g.elements[e];
  const double x0 = g.nodes(t[0], 0), y0 = g.nodes(t[0], 1);
  const double x1 = g.nodes(t[1], 0), y1 = g.nodes(t[1], 1);
  const double x2 = g.nodes(t[2], 0), y2 = g.nodes(t[2], 1);
  ElementGeometry eg;
  eg.area = 0.5 * ((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0));
  eg.b[0] = y1 - y2; eg.b[1] = y2 - y0; eg.b[2] = y0 - y1;
  eg.c[0] = x2 - x1; eg.c[1] = x0 - x2; eg.c[2] = x1 - x0;
  return eg;
}

using Triplets = std::vector<Eigen::Triplet<double>>;

void add_element_stiffness(Triplets& trip, const FineGrid& g, int e,
                           double a11, double a12, double a22,
                           const std::vector<int>* local_index) {
  const auto eg = element_geometry(g, e);
  const auto& t = g.elements[e];
  const double s = 1.0 / (4.0 * eg.area);
  for (int r = 0; r < 3; ++r) {
    for (int cidx = 0; cidx < 3; ++cidx) {
      const double gx_r = eg.b[r], gy_r = eg.c[r];
      const double gx_c = eg.b[cidx], gy_c = eg.c[cidx];
      const double v = s * (a11 * gx_r * gx_c + a12 * (gx_r * gy_c + gy_r * gx_c) + a22 * gy_r * gy_c);
      const int i = local_index ? (*local_index)[t[r]] : t[r];
      const int j = local_index ? (*local_index)[t[cidx]] : t[cidx];
      trip.emplace_back(i, j, v);
    }
  }
}

}  // namespace

TensorField TensorField::isotropic(const Eigen::VectorXd& kappa) {
  TensorField tf;
  tf.values.resize(kappa.size(), 4);
  tf.values.col(0) = kappa;
  tf.values.col(1).setZero();
  tf.values.col(2).setZero();
  tf.values.col(3) = kappa;
  return tf;
}

Eigen::VectorXd AffineOperatorFamily::weights(const Eigen::VectorXd& mu) const {
  Eigen::VectorXd w(num_terms());
  for (int q = 0; q < num_terms(); ++q) w(q) = coeffs[q](mu);
  return w;
}

SparseMat AffineOperatorFamily::evaluate(const Eigen::VectorXd& mu) const {
  if (pieces.empty()) throw std::invalid_argument("AffineOperatorFamily: empty family");
  SparseMat out = coeffs[0](mu) * pieces[0];
  for (int q = 1; q < num_terms(); ++q) out += coeffs[q](mu) * pieces[q];
  return out;
}

Eigen::VectorXd AffineLoadFamily::weights(const Eigen::VectorXd& mu) const {
  Eigen::VectorXd w(num_terms());
  for (int p = 0; p < num_terms(); ++p) w(p) = coeffs[p](mu);
  return w;
}

Eigen::VectorXd AffineLoadFamily::evaluate(const Eigen::VectorXd& mu) const {
  if (pieces.empty()) return Eigen::VectorXd();
  Eigen::VectorXd out = coeffs[0](mu) * pieces[0];
  for (int p = 1; p < num_terms(); ++p) out += coeffs[p](mu) * pieces[p];
  return out;
}

SparseMat assemble_stiffness(const FineGrid& grid, const Eigen::VectorXd& kappa) {
  if (kappa.size() != grid.num_elements())
    throw std::invalid_argument("assemble_stiffness: coefficient length must equal element count");
  if ((kappa.array() <= 0.0).any())
    throw std::invalid_argument("assemble_stiffness: coefficient must be positive");
  Triplets trip;
  trip.reserve(9 * grid.num_elements());
  for (int e = 0; e < grid.num_elements(); ++e)
    add_element_stiffness(trip, grid, e, kappa(e), 0.0, kappa(e), nullptr);
  SparseMat K(grid.num_nodes(), grid.num_nodes());
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

SparseMat assemble_stiffness(const FineGrid& grid, const TensorField& kappa) {
  if (kappa.values.rows() != grid.num_elements())
    throw std::invalid_argument("assemble_stiffness: tensor field length must equal element count");
  Triplets trip;
  trip.reserve(9 * grid.num_elements());
  for (int e = 0; e < grid.num_elements(); ++e) {
    const double a11 = kappa.values(e, 0);
    const double a12 = 0.5 * (kappa.values(e, 1) + kappa.values(e, 2));
    const double a22 = kappa.values(e, 3);
    if (a11 <= 0.0 || a22 <= 0.0 || a11 * a22 - a12 * a12 <= 0.0)
      throw std::invalid_argument("assemble_stiffness: tensor coefficient must be SPD");
    add_element_stiffness(trip, grid, e, a11, a12, a22, nullptr);
  }
  SparseMat K(grid.num_nodes(), grid.num_nodes());
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

SparseMat assemble_stiffness_unchecked(const FineGrid& grid, const TensorField& kappa) {
  if (kappa.values.rows() != grid.num_elements())
    throw std::invalid_argument("assemble_stiffness: tensor field length must equal element count");
  Triplets trip;
  trip.reserve(9 * grid.num_elements());
  for (int e = 0; e < grid.num_elements(); ++e) {
    const double a11 = kappa.values(e, 0);
    const double a12 = 0.5 * (kappa.values(e, 1) + kappa.values(e, 2));
    const double a22 = kappa.values(e, 3);
    add_element_stiffness(trip, grid, e, a11, a12, a22, nullptr);
  }
  SparseMat K(grid.num_nodes(), grid.num_nodes());
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

SparseMat assemble_local_stiffness(const FineGrid& grid, const Eigen::VectorXd& kappa,
                                   const std::vector<int>& elems, const std::vector<int>& nodes) {
  std::vector<int> local_index(grid.num_nodes(), -1);
  for (int k = 0; k < static_cast<int>(nodes.size()); ++k) local_index[nodes[k]] = k;
  Triplets trip;
  trip.reserve(9 * elems.size());
  for (int e : elems)
    add_element_stiffness(trip, grid, e, kappa(e), 0.0, kappa(e), &local_index);
  SparseMat K(nodes.size(), nodes.size());
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

SparseMat assemble_local_mass(const FineGrid& grid, const Eigen::VectorXd& weight,
                              const std::vector<int>& elems, const std::vector<int>& nodes) {
  std::vector<int> local_index(grid.num_nodes(), -1);
  for (int k = 0; k < static_cast<int>(nodes.size()); ++k) local_index[nodes[k]] = k;
  Triplets trip;
  trip.reserve(9 * elems.size());
  for (int e : elems) {
    const double A = grid.element_area(e) * weight(e);
    const auto& t = grid.elements[e];
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        trip.emplace_back(local_index[t[r]], local_index[t[c]], (r == c ? A / 6.0 : A / 12.0));
  }
  SparseMat M(nodes.size(), nodes.size());
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

SparseMat assemble_state_mass(const FineGrid& grid) {
  Triplets trip;
  trip.reserve(9 * grid.num_elements());
  for (int e = 0; e < grid.num_elements(); ++e) {
    const double A = grid.element_area(e);
    const auto& t = grid.elements[e];
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        trip.emplace_back(t[r], t[c], (r == c ? A / 6.0 : A / 12.0));
  }
  SparseMat M(grid.num_nodes(), grid.num_nodes());
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

SparseMat assemble_control_mass(const FineGrid& grid) {
  Triplets trip;
  trip.reserve(grid.num_elements());
  for (int e = 0; e < grid.num_elements(); ++e)
    trip.emplace_back(e, e, grid.element_area(e));
  SparseMat M(grid.num_elements(), grid.num_elements());
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

SparseMat assemble_coupling(const FineGrid& grid) {
  // (M2)_{k,j} = int_{T_j} psi_k = area(T_j)/3 for each vertex k of T_j.
  Triplets trip;
  trip.reserve(3 * grid.num_elements());
  for (int e = 0; e < grid.num_elements(); ++e) {
    const double A = grid.element_area(e);
    for (int r = 0; r < 3; ++r) trip.emplace_back(grid.elements[e][r], e, A / 3.0);
  }
  SparseMat M(grid.num_nodes(), grid.num_elements());
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

Eigen::VectorXd assemble_load(const FineGrid& grid, const Eigen::VectorXd& field) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(grid.num_nodes());
  if (field.size() == grid.num_nodes()) {
    // exact P1 x P1 product: M3 * field, accumulated element-wise
    for (int e = 0; e < grid.num_elements(); ++e) {
      const double A = grid.element_area(e);
      const auto& t = grid.elements[e];
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
          out(t[r]) += (r == c ? A / 6.0 : A / 12.0) * field(t[c]);
    }
  } else if (field.size() == grid.num_elements()) {
    for (int e = 0; e < grid.num_elements(); ++e) {
      const double A = grid.element_area(e);
      for (int r = 0; r < 3; ++r) out(grid.elements[e][r]) += field(e) * A / 3.0;
    }
  } else {
    throw std::invalid_argument("assemble_load: field length matches neither nodes nor elements");
  }
  return out;
}

SparseMat assemble_boundary_mass(const FineGrid& grid) {
  Triplets trip;
  auto add_edge = [&](int n0, int n1, double len) {
    trip.emplace_back(n0, n0, len / 3.0);
    trip.emplace_back(n1, n1, len / 3.0);
    trip.emplace_back(n0, n1, len / 6.0);
    trip.emplace_back(n1, n0, len / 6.0);
  };
  const double hx = grid.hx(), hy = grid.hy();
  for (int i = 0; i < grid.nx; ++i) {
    add_edge(grid.node_id(i, 0), grid.node_id(i + 1, 0), hx);
    add_edge(grid.node_id(i, grid.ny), grid.node_id(i + 1, grid.ny), hx);
  }
  for (int j = 0; j < grid.ny; ++j) {
    add_edge(grid.node_id(0, j), grid.node_id(0, j + 1), hy);
    add_edge(grid.node_id(grid.nx, j), grid.node_id(grid.nx, j + 1), hy);
  }
  SparseMat M(grid.num_nodes(), grid.num_nodes());
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

ConstrainedKkt apply_dirichlet(const KktBlocks& blocks, const FineGrid& grid,
                               const Eigen::VectorXd& g) {
  if (g.size() != grid.num_nodes())
    throw std::invalid_argument("apply_dirichlet: boundary data must be given on the full node set");
  ConstrainedKkt out;
  out.full_to_interior.assign(grid.num_nodes(), -1);
  for (int n = 0; n < grid.num_nodes(); ++n) {
    if (!grid.is_boundary[n]) {
      out.full_to_interior[n] = static_cast<int>(out.interior.size());
      out.interior.push_back(n);
    }
  }
  const int ni = static_cast<int>(out.interior.size());

  Eigen::VectorXd gb = Eigen::VectorXd::Zero(grid.num_nodes());
  for (int n : grid.boundary_nodes) gb(n) = g(n);
  out.boundary_values = gb;

  auto restrict_rows = [&](const SparseMat& A) {
    Triplets trip;
    for (int k = 0; k < A.outerSize(); ++k)
      for (SparseMat::InnerIterator it(A, k); it; ++it) {
        const int ri = out.full_to_interior[it.row()];
        if (ri >= 0) trip.emplace_back(ri, static_cast<int>(it.col()), it.value());
      }
    SparseMat R(ni, A.cols());
    R.setFromTriplets(trip.begin(), trip.end());
    return R;
  };
  auto restrict_both = [&](const SparseMat& A) {
    Triplets trip;
    for (int k = 0; k < A.outerSize(); ++k)
      for (SparseMat::InnerIterator it(A, k); it; ++it) {
        const int ri = out.full_to_interior[it.row()];
        const int ci = out.full_to_interior[it.col()];
        if (ri >= 0 && ci >= 0) trip.emplace_back(ri, ci, it.value());
      }
    SparseMat R(ni, ni);
    R.setFromTriplets(trip.begin(), trip.end());
    return R;
  };
  auto restrict_vec = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd r(ni);
    for (int k = 0; k < ni; ++k) r(k) = v(out.interior[k]);
    return r;
  };

  out.blocks.control_mass = blocks.control_mass;
  out.blocks.coupling = restrict_rows(blocks.coupling);
  out.blocks.state_mass = restrict_both(blocks.state_mass);
  out.blocks.beta = blocks.beta;
  out.blocks.has_dirichlet = false;
  for (int q = 0; q < blocks.stiffness.num_terms(); ++q) {
    out.blocks.stiffness.pieces.push_back(restrict_both(blocks.stiffness.pieces[q]));
    out.blocks.stiffness.coeffs.push_back(blocks.stiffness.coeffs[q]);
    // d^q = -K^q_{ib} g
    out.lift.pieces.push_back(restrict_vec(-(blocks.stiffness.pieces[q] * gb)));
    out.lift.coeffs.push_back(blocks.stiffness.coeffs[q]);
  }
  for (int p = 0; p < blocks.target_load.num_terms(); ++p) {
    out.blocks.target_load.pieces.push_back(restrict_vec(blocks.target_load.pieces[p]));
    out.blocks.target_load.coeffs.push_back(blocks.target_load.coeffs[p]);
  }
  out.adjoint_correction = restrict_vec(-(blocks.state_mass * gb));
  return out;
}

SparseMat affine_evaluate(const AffineOperatorFamily& family, const Eigen::VectorXd& mu) {
  return family.evaluate(mu);
}

}  // namespace lgrom
