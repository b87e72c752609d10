#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "lgrom/assembly.hpp"
#include "lgrom/grid.hpp"

namespace lgrom {

/// Product parameter domain: each coordinate is Beta(a,b) on [0,1] or
/// Uniform(a,b).
struct Marginal {
  enum class Kind { Beta, Uniform };
  Kind kind = Kind::Uniform;
  double p1 = 0.0;
  double p2 = 1.0;
};

struct ParamDomain {
  std::vector<Marginal> marginals;

  int dim() const { return static_cast<int>(marginals.size()); }
  static ParamDomain beta(int m, double a, double b);
  static ParamDomain uniform(int m, double lo, double hi);
};

std::vector<Eigen::VectorXd> sample_parameters(const ParamDomain& domain, int n,
                                               unsigned int seed);

/// Nystrom (midpoint-rule) Karhunen-Loeve expansion of the exponential
/// covariance exp(-|x-z|) on [0,1].
struct KlField {
  Eigen::VectorXd points;  // quadrature midpoints
  Eigen::VectorXd lambda;  // descending, n_terms entries
  Eigen::MatrixXd phi;     // m x n_terms, normalized in the discrete L2 product
  double sigma = 0.0;

  int n_terms() const { return static_cast<int>(lambda.size()); }
};

KlField kl_expand(int m_points, int n_terms, double sigma);

/// Truncated expansion s = sigma * sum_n sqrt(lambda_n) phi_n xi_n, evaluated
/// at the quadrature points or, via the Nystrom extension, at arbitrary
/// abscissae x in [0,1].
Eigen::VectorXd realize_boundary(const KlField& kl, const Eigen::VectorXd& xi);
Eigen::VectorXd realize_boundary(const KlField& kl, const Eigen::VectorXd& xi,
                                 const Eigen::VectorXd& x);

/// Harmonic coordinates mapping the reference square E onto the physical
/// domain with rough bottom boundary x2 = s(x1).
struct DomainMap {
  Eigen::VectorXd x1, x2;   // fine-nodal physical coordinates
  Eigen::MatrixXd jacobian; // N_e x 4: [dx1/dxi1, dx1/dxi2, dx2/dxi1, dx2/dxi2]
  Eigen::VectorXd det;      // N_e Jacobian determinants
  bool valid = false;
  int bad_element = -1;     // first element with nonpositive determinant
};

/// s_bottom holds s at the nx+1 bottom-edge fine nodes. Two Laplace solves on
/// E with Dirichlet data: x1 is the identity on every segment; x2 is s on the
/// bottom, 1 on the top, and arclength-uniform (linear) on the sides.
DomainMap stochastic_map(const FineGrid& grid, const Eigen::VectorXd& s_bottom);

/// Pullback diffusion tensor kappa * |det J| * J^{-1} J^{-T} per element,
/// with the physical kappa evaluated at the mapped element centroid.
/// Throws on an invalid (folded) map.
TensorField transform_coefficients(const FineGrid& grid, const DomainMap& map,
                                   const std::function<double(double, double)>& kappa);

/// Empirical interpolation surrogate over a fixed spatial grid.
struct EimSurrogate {
  std::vector<int> magic_points;
  Eigen::MatrixXd basis;              // n_points x Q
  Eigen::MatrixXd interp;             // Q x Q lower-triangular collocation matrix
  std::vector<double> residual_history;  // sup-norm residual before each enrichment
  double tol = 0.0;
  bool converged = false;

  int Q() const { return static_cast<int>(magic_points.size()); }
};

/// Greedy magic-point construction from training fields (columns). Stops at
/// the tolerance or the basis cap; `converged` is false if the cap was hit
/// with the residual still above tol.
EimSurrogate eim_build(const Eigen::MatrixXd& training_fields, double tol, int cap = 50);

/// Affine coefficients for one field: triangular solve against the field's
/// values at the magic points.
Eigen::VectorXd eim_coefficients(const EimSurrogate& eim, const Eigen::VectorXd& field);
Eigen::VectorXd eim_coefficients(const EimSurrogate& eim,
                                 const std::function<double(int)>& field_at);

/// Interpolant field basis * coeffs.
Eigen::VectorXd eim_interpolant(const EimSurrogate& eim, const Eigen::VectorXd& coeffs);

struct Moments {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;  // unbiased
  Eigen::VectorXd stddev;
};

Moments moments(const std::vector<Eigen::VectorXd>& samples);

/// Sample-averaged relative errors: L2 in the given mass products, energy in
/// the per-sample stiffness. Samples whose reference norm vanishes are
/// excluded and counted.
struct ErrorMetrics {
  double e2_u = 0.0;
  double e2_f = 0.0;
  double e2_lambda = 0.0;
  double eH_u = 0.0;
  double eH_lambda = 0.0;
  int excluded = 0;
};

ErrorMetrics error_metrics(const std::vector<Eigen::VectorXd>& u_ref,
                           const std::vector<Eigen::VectorXd>& f_ref,
                           const std::vector<Eigen::VectorXd>& lam_ref,
                           const std::vector<Eigen::VectorXd>& u_red,
                           const std::vector<Eigen::VectorXd>& f_red,
                           const std::vector<Eigen::VectorXd>& lam_red,
                           const SparseMat& state_mass, const SparseMat& control_mass,
                           const std::vector<SparseMat>& stiffness_per_sample);

}  // namespace lgrom
