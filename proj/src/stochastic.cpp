#include "lgrom/stochastic.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <random>
#include <stdexcept>

namespace lgrom {

ParamDomain ParamDomain::beta(int m, double a, double b) {
  if (m < 1 || a <= 0.0 || b <= 0.0)
    throw std::invalid_argument("ParamDomain::beta: invalid parameters");
  ParamDomain d;
  d.marginals.assign(m, {Marginal::Kind::Beta, a, b});
  return d;
}

ParamDomain ParamDomain::uniform(int m, double lo, double hi) {
  if (m < 1 || !(lo < hi)) throw std::invalid_argument("ParamDomain::uniform: invalid parameters");
  ParamDomain d;
  d.marginals.assign(m, {Marginal::Kind::Uniform, lo, hi});
  return d;
}

std::vector<Eigen::VectorXd> sample_parameters(const ParamDomain& domain, int n,
                                               unsigned int seed) {
  if (n < 1) throw std::invalid_argument("sample_parameters: n must be positive");
  if (domain.dim() < 1) throw std::invalid_argument("sample_parameters: empty domain");
  for (const auto& m : domain.marginals) {
    if (m.kind == Marginal::Kind::Beta && (m.p1 <= 0.0 || m.p2 <= 0.0))
      throw std::invalid_argument("sample_parameters: Beta shapes must be positive");
    if (m.kind == Marginal::Kind::Uniform && !(m.p1 < m.p2))
      throw std::invalid_argument("sample_parameters: empty Uniform support");
  }
  std::mt19937 rng(seed);
  std::vector<Eigen::VectorXd> out(n, Eigen::VectorXd(domain.dim()));
  for (int k = 0; k < n; ++k)
    for (int c = 0; c < domain.dim(); ++c) {
      const Marginal& m = domain.marginals[c];
      if (m.kind == Marginal::Kind::Uniform) {
        std::uniform_real_distribution<double> u(m.p1, m.p2);
        out[k](c) = u(rng);
      } else {
        // Beta(a,b) as a ratio of gamma variates
        std::gamma_distribution<double> ga(m.p1, 1.0), gb(m.p2, 1.0);
        const double x = ga(rng), y = gb(rng);
        out[k](c) = (x + y > 0.0) ? x / (x + y) : 0.5;
      }
    }
  return out;
}

KlField kl_expand(int m_points, int n_terms, double sigma) {
  if (m_points < 1 || n_terms < 1 || n_terms > m_points)
    throw std::invalid_argument("kl_expand: need 1 <= n_terms <= m_points");
  KlField kl;
  kl.sigma = sigma;
  kl.points.resize(m_points);
  for (int i = 0; i < m_points; ++i) kl.points(i) = (i + 0.5) / m_points;

  const double w = 1.0 / m_points;
  Eigen::MatrixXd A(m_points, m_points);
  for (int i = 0; i < m_points; ++i)
    for (int j = 0; j < m_points; ++j)
      A(i, j) = w * std::exp(-std::abs(kl.points(i) - kl.points(j)));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
  if (eig.info() != Eigen::Success) throw std::runtime_error("kl_expand: eigensolver failed");

  kl.lambda.resize(n_terms);
  kl.phi.resize(m_points, n_terms);
  for (int n = 0; n < n_terms; ++n) {
    const int src = m_points - 1 - n;  // descending order
    kl.lambda(n) = eig.eigenvalues()(src);
    // ||v||_2 = 1  ->  discrete L2 normalization w * sum phi^2 = 1
    kl.phi.col(n) = eig.eigenvectors().col(src) * std::sqrt(static_cast<double>(m_points));
  }
  return kl;
}

Eigen::VectorXd realize_boundary(const KlField& kl, const Eigen::VectorXd& xi) {
  if (xi.size() != kl.n_terms()) throw std::invalid_argument("realize_boundary: xi dimension");
  return kl.sigma * (kl.phi * kl.lambda.cwiseSqrt().cwiseProduct(xi));
}

Eigen::VectorXd realize_boundary(const KlField& kl, const Eigen::VectorXd& xi,
                                 const Eigen::VectorXd& x) {
  if (xi.size() != kl.n_terms()) throw std::invalid_argument("realize_boundary: xi dimension");
  const int m = static_cast<int>(kl.points.size());
  const double w = 1.0 / m;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(x.size());
  for (int n = 0; n < kl.n_terms(); ++n) {
    // Nystrom extension of the discrete eigenfunction
    Eigen::VectorXd phi_x(x.size());
    for (int i = 0; i < x.size(); ++i) {
      double acc = 0.0;
      for (int j = 0; j < m; ++j)
        acc += std::exp(-std::abs(x(i) - kl.points(j))) * kl.phi(j, n);
      phi_x(i) = w * acc / kl.lambda(n);
    }
    s += kl.sigma * std::sqrt(kl.lambda(n)) * xi(n) * phi_x;
  }
  return s;
}

namespace {

Eigen::VectorXd harmonic_extension(const FineGrid& grid, const Eigen::VectorXd& g) {
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(grid.num_elements());
  const SparseMat A = assemble_stiffness(grid, ones);

  std::vector<int> interior;
  std::vector<int> full_to_int(grid.num_nodes(), -1);
  for (int k = 0; k < grid.num_nodes(); ++k)
    if (!grid.is_boundary[k]) {
      full_to_int[k] = static_cast<int>(interior.size());
      interior.push_back(k);
    }

  const int ni = static_cast<int>(interior.size());
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ni);
  for (int col = 0; col < A.outerSize(); ++col)
    for (SparseMat::InnerIterator it(A, col); it; ++it) {
      const int r = static_cast<int>(it.row());
      if (grid.is_boundary[r]) continue;
      if (grid.is_boundary[col])
        rhs(full_to_int[r]) -= it.value() * g(col);
      else
        trips.emplace_back(full_to_int[r], full_to_int[col], it.value());
    }
  SparseMat Aii(ni, ni);
  Aii.setFromTriplets(trips.begin(), trips.end());

  Eigen::SimplicialLDLT<SparseMat> solver(Aii);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("stochastic_map: Laplace factorization failed");
  const Eigen::VectorXd xi = solver.solve(rhs);

  Eigen::VectorXd x = g;
  for (int k = 0; k < ni; ++k) x(interior[k]) = xi(k);
  return x;
}

}  // namespace

DomainMap stochastic_map(const FineGrid& grid, const Eigen::VectorXd& s_bottom) {
  if (s_bottom.size() != grid.nx + 1)
    throw std::invalid_argument("stochastic_map: s_bottom must hold nx+1 nodal values");

  Eigen::VectorXd g1 = Eigen::VectorXd::Zero(grid.num_nodes());
  Eigen::VectorXd g2 = Eigen::VectorXd::Zero(grid.num_nodes());
  const double s0 = s_bottom(0), s1 = s_bottom(grid.nx);
  for (int id : grid.boundary_nodes) {
    const double xi1 = grid.nodes(id, 0), xi2 = grid.nodes(id, 1);
    g1(id) = xi1;  // identity x1 data on every segment
    if (xi2 == 0.0)
      g2(id) = s_bottom(static_cast<int>(std::lround(xi1 * grid.nx)));
    else if (xi2 == 1.0)
      g2(id) = 1.0;
    else if (xi1 == 0.0)
      g2(id) = s0 + xi2 * (1.0 - s0);  // arclength-uniform side data
    else
      g2(id) = s1 + xi2 * (1.0 - s1);
  }

  DomainMap map;
  map.x1 = harmonic_extension(grid, g1);
  map.x2 = harmonic_extension(grid, g2);

  const int ne = grid.num_elements();
  map.jacobian.resize(ne, 4);
  map.det.resize(ne);
  map.valid = true;
  for (int e = 0; e < ne; ++e) {
    const auto& nd = grid.elements[e];
    Eigen::Matrix2d Bref, Bphys;
    Bref.col(0) = (grid.nodes.row(nd[1]) - grid.nodes.row(nd[0])).transpose();
    Bref.col(1) = (grid.nodes.row(nd[2]) - grid.nodes.row(nd[0])).transpose();
    Bphys(0, 0) = map.x1(nd[1]) - map.x1(nd[0]);
    Bphys(0, 1) = map.x1(nd[2]) - map.x1(nd[0]);
    Bphys(1, 0) = map.x2(nd[1]) - map.x2(nd[0]);
    Bphys(1, 1) = map.x2(nd[2]) - map.x2(nd[0]);
    const Eigen::Matrix2d J = Bphys * Bref.inverse();
    map.jacobian(e, 0) = J(0, 0);
    map.jacobian(e, 1) = J(0, 1);
    map.jacobian(e, 2) = J(1, 0);
    map.jacobian(e, 3) = J(1, 1);
    map.det(e) = J.determinant();
    if (map.det(e) <= 0.0 && map.valid) {
      map.valid = false;
      map.bad_element = e;
    }
  }
  return map;
}

TensorField transform_coefficients(const FineGrid& grid, const DomainMap& map,
                                   const std::function<double(double, double)>& kappa) {
  if (!map.valid)
    throw std::runtime_error("transform_coefficients: folded map (element " +
                             std::to_string(map.bad_element) + " has nonpositive Jacobian)");
  TensorField field;
  field.values.resize(grid.num_elements(), 4);
  for (int e = 0; e < grid.num_elements(); ++e) {
    Eigen::Matrix2d J;
    J << map.jacobian(e, 0), map.jacobian(e, 1), map.jacobian(e, 2), map.jacobian(e, 3);
    const auto& nd = grid.elements[e];
    const double xc1 = (map.x1(nd[0]) + map.x1(nd[1]) + map.x1(nd[2])) / 3.0;
    const double xc2 = (map.x2(nd[0]) + map.x2(nd[1]) + map.x2(nd[2])) / 3.0;
    const double k = kappa(xc1, xc2);
    if (k <= 0.0) throw std::runtime_error("transform_coefficients: nonpositive kappa");
    const Eigen::Matrix2d Jinv = J.inverse();
    const Eigen::Matrix2d T = k * map.det(e) * (Jinv * Jinv.transpose());
    field.values(e, 0) = T(0, 0);
    field.values(e, 1) = T(0, 1);
    field.values(e, 2) = T(1, 0);
    field.values(e, 3) = T(1, 1);
  }
  return field;
}

EimSurrogate eim_build(const Eigen::MatrixXd& training_fields, double tol, int cap) {
  if (training_fields.cols() < 1)
    throw std::invalid_argument("eim_build: need at least one training sample");
  if (tol <= 0.0 || cap < 1) throw std::invalid_argument("eim_build: invalid tol or cap");

  const int np = static_cast<int>(training_fields.rows());
  const int ns = static_cast<int>(training_fields.cols());

  EimSurrogate eim;
  eim.tol = tol;
  eim.basis.resize(np, 0);
  eim.interp.resize(0, 0);

  while (true) {
    // interpolation residual of every training field in the current basis
    double worst = 0.0;
    int jworst = 0;
    Eigen::VectorXd rworst;
    for (int j = 0; j < ns; ++j) {
      Eigen::VectorXd r = training_fields.col(j);
      if (eim.Q() > 0) {
        Eigen::VectorXd vals(eim.Q());
        for (int k = 0; k < eim.Q(); ++k) vals(k) = r(eim.magic_points[k]);
        const Eigen::VectorXd c =
            eim.interp.triangularView<Eigen::Lower>().solve(vals);
        r -= eim.basis * c;
      }
      const double nrm = r.cwiseAbs().maxCoeff();
      if (nrm > worst) {
        worst = nrm;
        jworst = j;
        rworst = r;
      }
    }
    eim.residual_history.push_back(worst);
    if (worst <= tol) {
      eim.converged = true;
      break;
    }
    if (eim.Q() >= cap) {
      eim.converged = false;
      break;
    }

    int imax = 0;
    rworst.cwiseAbs().maxCoeff(&imax);
    eim.magic_points.push_back(imax);
    eim.basis.conservativeResize(Eigen::NoChange, eim.Q());
    eim.basis.col(eim.Q() - 1) = rworst / rworst(imax);

    const int Q = eim.Q();
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(Q, Q);
    for (int i = 0; i < Q; ++i)
      for (int k = 0; k <= i; ++k) B(i, k) = eim.basis(eim.magic_points[i], k);
    eim.interp = B;
  }
  return eim;
}

Eigen::VectorXd eim_coefficients(const EimSurrogate& eim, const Eigen::VectorXd& field) {
  return eim_coefficients(eim, [&](int i) { return field(i); });
}

Eigen::VectorXd eim_coefficients(const EimSurrogate& eim,
                                 const std::function<double(int)>& field_at) {
  Eigen::VectorXd vals(eim.Q());
  for (int k = 0; k < eim.Q(); ++k) vals(k) = field_at(eim.magic_points[k]);
  if (eim.Q() == 0) return vals;
  return eim.interp.triangularView<Eigen::Lower>().solve(vals);
}

Eigen::VectorXd eim_interpolant(const EimSurrogate& eim, const Eigen::VectorXd& coeffs) {
  if (coeffs.size() != eim.Q()) throw std::invalid_argument("eim_interpolant: coefficient count");
  if (eim.Q() == 0) return Eigen::VectorXd::Zero(eim.basis.rows());
  return eim.basis * coeffs;
}

Moments moments(const std::vector<Eigen::VectorXd>& samples) {
  if (samples.size() < 2) throw std::invalid_argument("moments: need at least two samples");
  const auto n = static_cast<double>(samples.size());
  Moments m;
  m.mean = Eigen::VectorXd::Zero(samples[0].size());
  for (const auto& s : samples) m.mean += s;
  m.mean /= n;
  m.variance = Eigen::VectorXd::Zero(samples[0].size());
  for (const auto& s : samples) m.variance += (s - m.mean).cwiseAbs2();
  m.variance /= (n - 1.0);
  m.stddev = m.variance.cwiseSqrt();
  return m;
}

namespace {

double weighted_norm(const Eigen::VectorXd& v, const SparseMat& W) {
  return std::sqrt(std::max(0.0, v.dot(W * v)));
}

}  // namespace

ErrorMetrics error_metrics(const std::vector<Eigen::VectorXd>& u_ref,
                           const std::vector<Eigen::VectorXd>& f_ref,
                           const std::vector<Eigen::VectorXd>& lam_ref,
                           const std::vector<Eigen::VectorXd>& u_red,
                           const std::vector<Eigen::VectorXd>& f_red,
                           const std::vector<Eigen::VectorXd>& lam_red,
                           const SparseMat& state_mass, const SparseMat& control_mass,
                           const std::vector<SparseMat>& stiffness_per_sample) {
  const size_t n = u_ref.size();
  if (f_ref.size() != n || lam_ref.size() != n || u_red.size() != n || f_red.size() != n ||
      lam_red.size() != n)
    throw std::invalid_argument("error_metrics: sample list lengths differ");
  if (!stiffness_per_sample.empty() && stiffness_per_sample.size() != n)
    throw std::invalid_argument("error_metrics: stiffness list length");
  if (n == 0) throw std::invalid_argument("error_metrics: empty sample lists");

  ErrorMetrics out;
  int cu = 0, cf = 0, cl = 0, chu = 0, chl = 0;
  auto accumulate = [&](double& sum, int& count, const Eigen::VectorXd& ref,
                        const Eigen::VectorXd& red, const SparseMat& W) {
    const double nrm = weighted_norm(ref, W);
    if (nrm == 0.0) {
      out.excluded += 1;
      return;
    }
    sum += weighted_norm(ref - red, W) / nrm;
    count += 1;
  };
  for (size_t i = 0; i < n; ++i) {
    accumulate(out.e2_u, cu, u_ref[i], u_red[i], state_mass);
    accumulate(out.e2_f, cf, f_ref[i], f_red[i], control_mass);
    accumulate(out.e2_lambda, cl, lam_ref[i], lam_red[i], state_mass);
    if (!stiffness_per_sample.empty()) {
      accumulate(out.eH_u, chu, u_ref[i], u_red[i], stiffness_per_sample[i]);
      accumulate(out.eH_lambda, chl, lam_ref[i], lam_red[i], stiffness_per_sample[i]);
    }
  }
  if (cu) out.e2_u /= cu;
  if (cf) out.e2_f /= cf;
  if (cl) out.e2_lambda /= cl;
  if (chu) out.eH_u /= chu;
  if (chl) out.eH_lambda /= chl;
  return out;
}

}  // namespace lgrom
