#include "lgrom/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <stdexcept>

#include "lgrom/gmsfem.hpp"

namespace lgrom {

namespace {

double wall_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

Eigen::VectorXd nodal_eval(const FineGrid& grid,
                           const std::function<double(double, double)>& f) {
  Eigen::VectorXd v(grid.num_nodes());
  for (int k = 0; k < grid.num_nodes(); ++k) v(k) = f(grid.nodes(k, 0), grid.nodes(k, 1));
  return v;
}

Eigen::VectorXd element_eval(const FineGrid& grid,
                             const std::function<double(double, double)>& f) {
  Eigen::VectorXd v(grid.num_elements());
  for (int e = 0; e < grid.num_elements(); ++e) {
    const Eigen::Vector2d c = grid.centroid(e);
    v(e) = f(c(0), c(1));
  }
  return v;
}

Eigen::VectorXd restrict_vec(const Eigen::VectorXd& v, const std::vector<int>& keep) {
  Eigen::VectorXd r(keep.size());
  for (size_t k = 0; k < keep.size(); ++k) r(static_cast<int>(k)) = v(keep[k]);
  return r;
}

SparseMat restrict_square(const SparseMat& A, const std::vector<int>& f2i, int ni) {
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseMat::InnerIterator it(A, k); it; ++it) {
      const int ri = f2i[it.row()];
      const int ci = f2i[it.col()];
      if (ri >= 0 && ci >= 0) trip.emplace_back(ri, ci, it.value());
    }
  SparseMat R(ni, ni);
  R.setFromTriplets(trip.begin(), trip.end());
  return R;
}

SparseMat select_columns(const SparseMat& A, const std::vector<int>& cols) {
  std::vector<int> col_map(A.cols(), -1);
  for (size_t k = 0; k < cols.size(); ++k) col_map[cols[k]] = static_cast<int>(k);
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseMat::InnerIterator it(A, k); it; ++it) {
      const int cj = col_map[it.col()];
      if (cj >= 0) trip.emplace_back(static_cast<int>(it.row()), cj, it.value());
    }
  SparseMat R(A.rows(), static_cast<long>(cols.size()));
  R.setFromTriplets(trip.begin(), trip.end());
  return R;
}

TensorField unflatten_tensor(const Eigen::VectorXd& flat, int ne) {
  TensorField tf;
  tf.values.resize(ne, 4);
  for (int e = 0; e < ne; ++e)
    for (int c = 0; c < 4; ++c) tf.values(e, c) = flat(4 * e + c);
  return tf;
}

Eigen::VectorXd flatten_tensor(const TensorField& tf) {
  const int ne = static_cast<int>(tf.values.rows());
  Eigen::VectorXd flat(4 * ne);
  for (int e = 0; e < ne; ++e)
    for (int c = 0; c < 4; ++c) flat(4 * e + c) = tf.values(e, c);
  return flat;
}

// Per-mu EIM coefficients with a one-entry cache so the q scalar coefficient
// functions share a single field evaluation.
struct EimCoeffCache {
  EimSurrogate eim;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> field;
  mutable Eigen::VectorXd mu_cache;
  mutable Eigen::VectorXd c_cache;

  double coeff(int q, const Eigen::VectorXd& mu) const {
    if (mu_cache.size() != mu.size() || mu_cache != mu) {
      c_cache = eim_coefficients(eim, field(mu));
      mu_cache = mu;
    }
    return c_cache(q);
  }
};

std::ofstream open_csv(const std::string& path) {
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << std::setprecision(12);
  return out;
}

}  // namespace

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["tag"] = tag;
  j["nx"] = nx;
  j["ny"] = ny;
  j["ncx"] = ncx;
  j["ncy"] = ncy;
  j["L"] = L;
  j["n_max"] = n_max;
  j["eps_tol"] = eps_tol;
  j["beta"] = beta;
  j["beta_list"] = beta_list;
  j["n_train"] = n_train;
  j["n_test"] = n_test;
  j["seed"] = seed;
  j["output_dir"] = output_dir;
  j["sigma"] = sigma;
  j["kl_terms"] = kl_terms;
  j["kl_points"] = kl_points;
  j["map_on"] = map_on;
  j["eim_on"] = eim_on;
  j["eim_tol"] = eim_tol;
  j["eim_cap"] = eim_cap;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.tag = j.value("tag", c.tag);
  c.nx = j.value("nx", c.nx);
  c.ny = j.value("ny", c.ny);
  c.ncx = j.value("ncx", c.ncx);
  c.ncy = j.value("ncy", c.ncy);
  c.L = j.value("L", c.L);
  c.n_max = j.value("n_max", c.n_max);
  c.eps_tol = j.value("eps_tol", c.eps_tol);
  c.beta = j.value("beta", c.beta);
  c.beta_list = j.value("beta_list", c.beta_list);
  c.n_train = j.value("n_train", c.n_train);
  c.n_test = j.value("n_test", c.n_test);
  c.seed = j.value("seed", c.seed);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.sigma = j.value("sigma", c.sigma);
  c.kl_terms = j.value("kl_terms", c.kl_terms);
  c.kl_points = j.value("kl_points", c.kl_points);
  c.map_on = j.value("map_on", c.map_on);
  c.eim_on = j.value("eim_on", c.eim_on);
  c.eim_tol = j.value("eim_tol", c.eim_tol);
  c.eim_cap = j.value("eim_cap", c.eim_cap);
  if (c.tag != "distributed-deterministic" && c.tag != "random-domain" &&
      c.tag != "neumann-boundary")
    throw std::invalid_argument("ExperimentConfig: unknown tag " + c.tag);
  if (c.nx < 1 || c.ny < 1 || c.ncx < 1 || c.ncy < 1 || c.L < 1 || c.n_max < 1 ||
      c.n_train < 1 || c.n_test < 1 || c.beta <= 0.0 || c.eps_tol <= 0.0)
    throw std::invalid_argument("ExperimentConfig: counts must be positive");
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

void ExperimentConfig::to_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config: " + path);
  out << to_json().dump(2) << '\n';
}

Eigen::VectorXd high_contrast_field(const FineGrid& grid, unsigned int seed, double contrast) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  struct Channel {
    bool horizontal;
    double pos, half_width, lo, hi;
  };
  std::vector<Channel> channels;
  for (int c = 0; c < 3; ++c) {
    Channel ch;
    ch.horizontal = (unit(rng) < 0.5);
    ch.pos = 0.1 + 0.8 * unit(rng);
    ch.half_width = 0.01 + 0.02 * unit(rng);
    ch.lo = 0.3 * unit(rng);
    ch.hi = 1.0 - 0.3 * unit(rng);
    channels.push_back(ch);
  }
  struct Inclusion {
    double cx, cy, r;
  };
  std::vector<Inclusion> inclusions;
  for (int c = 0; c < 6; ++c)
    inclusions.push_back({0.1 + 0.8 * unit(rng), 0.1 + 0.8 * unit(rng), 0.03 + 0.05 * unit(rng)});

  Eigen::VectorXd field = Eigen::VectorXd::Ones(grid.num_elements());
  for (int e = 0; e < grid.num_elements(); ++e) {
    const Eigen::Vector2d c = grid.centroid(e);
    bool high = false;
    for (const auto& ch : channels) {
      const double across = ch.horizontal ? c(1) : c(0);
      const double along = ch.horizontal ? c(0) : c(1);
      if (std::abs(across - ch.pos) <= ch.half_width && along >= ch.lo && along <= ch.hi)
        high = true;
    }
    for (const auto& inc : inclusions)
      if ((c(0) - inc.cx) * (c(0) - inc.cx) + (c(1) - inc.cy) * (c(1) - inc.cy) <= inc.r * inc.r)
        high = true;
    if (high) field(e) = contrast;
  }
  return field;
}

namespace {

Problem build_distributed(const ExperimentConfig& cfg) {
  Problem p;
  p.grid = build_fine_grid(cfg.nx, cfg.ny);
  p.coarse = build_coarse_grid(p.grid, cfg.ncx, cfg.ncy);
  p.domain = ParamDomain::beta(1, 1.0, 1.0);
  p.is_dirichlet = true;
  p.affine = true;

  const Eigen::VectorXd kappa1 = high_contrast_field(p.grid, cfg.seed + 101);
  const Eigen::VectorXd kappa2 = high_contrast_field(p.grid, cfg.seed + 202);

  auto Q1 = [](const Eigen::VectorXd& mu) {
    return mu(0) * mu(0) + (mu(0) + 0.5) * (mu(0) + 0.5);
  };
  auto Q2 = [](const Eigen::VectorXd& mu) {
    const double t = 1.0 + std::exp(mu(0)) * std::cos(mu(0) / 3.0);
    return t * t;
  };

  p.blocks.control_mass = assemble_control_mass(p.grid);
  p.blocks.coupling = assemble_coupling(p.grid);
  p.blocks.state_mass = assemble_state_mass(p.grid);
  p.blocks.beta = cfg.beta;
  p.blocks.stiffness.pieces = {assemble_stiffness(p.grid, kappa1),
                               assemble_stiffness(p.grid, kappa2)};
  p.blocks.stiffness.coeffs = {Q1, Q2};

  const std::vector<std::function<double(double, double)>> targets = {
      [](double x1, double x2) { return x1 * x2 * (x1 + 1.0) * (x2 - 1.0); },
      [](double x1, double x2) { return x1 * x1 * x2 * (x1 - 1.0) * (x2 + 1.0); },
      [](double x1, double x2) { return x1 * x2 * x2 * x2 * (x1 - 1.0) * (x2 - 1.0); },
      [](double x1, double x2) { return std::exp(x1 / 3.0) * x2 * x2; }};
  const std::vector<std::function<double(const Eigen::VectorXd&)>> target_w = {
      [](const Eigen::VectorXd& mu) { return mu(0); },
      [](const Eigen::VectorXd& mu) { return std::cos(mu(0)); },
      [](const Eigen::VectorXd& mu) { return mu(0) * mu(0); },
      [](const Eigen::VectorXd& mu) { return std::sin(mu(0)); }};
  std::vector<Eigen::VectorXd> target_nodal;
  for (size_t k = 0; k < targets.size(); ++k) {
    target_nodal.push_back(nodal_eval(p.grid, targets[k]));
    p.blocks.target_load.pieces.push_back(assemble_load(p.grid, target_nodal.back()));
    p.blocks.target_load.coeffs.push_back(target_w[k]);
  }
  p.blocks.has_dirichlet = true;
  p.blocks.dirichlet_values = Eigen::VectorXd::Zero(p.grid.num_nodes());

  p.constrained = apply_dirichlet(p.blocks, p.grid, p.blocks.dirichlet_values);

  Eigen::VectorXd mu_bar(1);
  mu_bar << 0.5;
  p.gmsfem_kappa = Q1(mu_bar) * kappa1 + Q2(mu_bar) * kappa2;

  auto con = std::make_shared<const ConstrainedKkt>(p.constrained);
  p.stiffness_exact = [con](const Eigen::VectorXd& mu) {
    return con->blocks.stiffness.evaluate(mu);
  };
  p.reference = [con](const Eigen::VectorXd& mu) { return build_kkt(*con, mu); };
  const std::vector<int> interior = p.constrained.interior;
  p.uhat = [target_nodal, target_w, interior](const Eigen::VectorXd& mu) {
    Eigen::VectorXd full = target_w[0](mu) * target_nodal[0];
    for (size_t k = 1; k < target_nodal.size(); ++k) full += target_w[k](mu) * target_nodal[k];
    return restrict_vec(full, interior);
  };
  return p;
}

Problem build_random_domain(const ExperimentConfig& cfg) {
  if (!cfg.eim_on)
    throw std::invalid_argument("random-domain experiment requires the EIM surrogate");
  Problem p;
  p.grid = build_fine_grid(cfg.nx, cfg.ny);
  p.coarse = build_coarse_grid(p.grid, cfg.ncx, cfg.ncy);
  p.domain = ParamDomain::uniform(cfg.kl_terms, -1.0, 1.0);
  p.is_dirichlet = true;
  p.affine = false;

  const KlField kl = kl_expand(cfg.kl_points, cfg.kl_terms, cfg.sigma);
  auto kappa_phys = [](double x1, double x2) { return std::abs(x1 * x2) + 1.0; };

  Eigen::VectorXd x_bottom(p.grid.nx + 1);
  for (int i = 0; i <= p.grid.nx; ++i) x_bottom(i) = p.grid.nodes(p.grid.node_id(i, 0), 0);

  const FineGrid& grid = p.grid;
  auto exact_tensor = [grid, kl, kappa_phys, x_bottom](const Eigen::VectorXd& mu) {
    const Eigen::VectorXd s = realize_boundary(kl, mu, x_bottom);
    const DomainMap map = stochastic_map(grid, s);
    return transform_coefficients(grid, map, kappa_phys);
  };

  // EIM training over the flattened pullback tensor components
  const auto train = sample_parameters(p.domain, cfg.n_train, cfg.seed + 7);
  Eigen::MatrixXd fields(4 * p.grid.num_elements(), train.size());
  for (size_t k = 0; k < train.size(); ++k) fields.col(static_cast<int>(k)) = flatten_tensor(exact_tensor(train[k]));
  const EimSurrogate eim = eim_build(fields, cfg.eim_tol, cfg.eim_cap);
  p.eim_warning = !eim.converged;
  p.eim_residual_history = eim.residual_history;

  auto cache = std::make_shared<EimCoeffCache>();
  cache->eim = eim;
  cache->field = [exact_tensor](const Eigen::VectorXd& mu) {
    return flatten_tensor(exact_tensor(mu));
  };

  p.blocks.control_mass = assemble_control_mass(p.grid);
  p.blocks.coupling = assemble_coupling(p.grid);
  p.blocks.state_mass = assemble_state_mass(p.grid);
  p.blocks.beta = cfg.beta;
  for (int q = 0; q < eim.Q(); ++q) {
    const TensorField tf = unflatten_tensor(eim.basis.col(q), p.grid.num_elements());
    p.blocks.stiffness.pieces.push_back(assemble_stiffness_unchecked(p.grid, tf));
    p.blocks.stiffness.coeffs.push_back(
        [cache, q](const Eigen::VectorXd& mu) { return cache->coeff(q, mu); });
  }

  // target evaluated at the reference coordinates (results reported on E)
  const Eigen::VectorXd uhat_nodal = nodal_eval(p.grid, [](double x1, double x2) {
    return x1 * x2 * (x1 - 1.0) * (x2 - x1 / 2.0 - 1.0) + 1.0;
  });
  p.blocks.target_load.pieces.push_back(assemble_load(p.grid, uhat_nodal));
  p.blocks.target_load.coeffs.push_back([](const Eigen::VectorXd&) { return 1.0; });
  p.blocks.has_dirichlet = true;
  p.blocks.dirichlet_values = Eigen::VectorXd::Zero(p.grid.num_nodes());

  p.constrained = apply_dirichlet(p.blocks, p.grid, p.blocks.dirichlet_values);

  p.gmsfem_kappa = element_eval(p.grid, kappa_phys);

  const std::vector<int> interior = p.constrained.interior;
  const std::vector<int> f2i = p.constrained.full_to_interior;
  const int ni = static_cast<int>(interior.size());
  KktBlocks base = p.blocks;
  base.stiffness = AffineOperatorFamily{};
  p.stiffness_exact = [grid, exact_tensor, f2i, ni](const Eigen::VectorXd& mu) {
    return restrict_square(assemble_stiffness(grid, exact_tensor(mu)), f2i, ni);
  };
  p.reference = [grid, base, exact_tensor](const Eigen::VectorXd& mu) {
    KktBlocks b = base;
    b.stiffness.pieces = {assemble_stiffness(grid, exact_tensor(mu))};
    b.stiffness.coeffs = {[](const Eigen::VectorXd&) { return 1.0; }};
    const ConstrainedKkt con = apply_dirichlet(b, grid, b.dirichlet_values);
    return build_kkt(con, mu);
  };
  p.uhat = [uhat_nodal, interior](const Eigen::VectorXd&) {
    return restrict_vec(uhat_nodal, interior);
  };
  return p;
}

Problem build_neumann(const ExperimentConfig& cfg) {
  Problem p;
  p.grid = build_fine_grid(cfg.nx, cfg.ny);
  p.coarse = build_coarse_grid(p.grid, cfg.ncx, cfg.ncy);
  p.domain = ParamDomain::beta(2, 1.0, 1.0);
  p.is_dirichlet = false;
  p.affine = false;

  const FineGrid& grid = p.grid;
  auto kappa_field = [grid](const Eigen::VectorXd& mu) {
    return element_eval(grid, [mu](double x1, double x2) {
      return std::exp(-(x1 - mu(0)) * (x1 - mu(0)) / 4.0 - (x2 - mu(1)) * (x2 - mu(1)) / 4.0);
    });
  };

  const SparseMat bd_mass = assemble_boundary_mass(p.grid);
  p.blocks.coupling = select_columns(bd_mass, p.grid.boundary_nodes);
  {
    std::vector<int> f2b(p.grid.num_nodes(), -1);
    for (size_t k = 0; k < p.grid.boundary_nodes.size(); ++k)
      f2b[p.grid.boundary_nodes[k]] = static_cast<int>(k);
    p.blocks.control_mass =
        restrict_square(bd_mass, f2b, static_cast<int>(p.grid.boundary_nodes.size()));
  }
  p.blocks.state_mass = assemble_state_mass(p.grid);
  p.blocks.beta = cfg.beta;

  if (cfg.eim_on) {
    const auto train = sample_parameters(p.domain, cfg.n_train, cfg.seed + 7);
    Eigen::MatrixXd fields(p.grid.num_elements(), train.size());
    for (size_t k = 0; k < train.size(); ++k) fields.col(static_cast<int>(k)) = kappa_field(train[k]);
    const EimSurrogate eim = eim_build(fields, cfg.eim_tol, cfg.eim_cap);
    p.eim_warning = !eim.converged;
    p.eim_residual_history = eim.residual_history;
    auto cache = std::make_shared<EimCoeffCache>();
    cache->eim = eim;
    cache->field = kappa_field;
    for (int q = 0; q < eim.Q(); ++q) {
      p.blocks.stiffness.pieces.push_back(
          assemble_stiffness_unchecked(grid, TensorField::isotropic(eim.basis.col(q))));
      p.blocks.stiffness.coeffs.push_back(
          [cache, q](const Eigen::VectorXd& mu) { return cache->coeff(q, mu); });
    }
  } else {
    throw std::invalid_argument("neumann-boundary experiment requires the EIM surrogate");
  }

  // target (x1-mu1)^2 + (x2-mu2)^2 has an exact 4-term affine decomposition
  const std::vector<std::function<double(double, double)>> tshapes = {
      [](double x1, double x2) { return x1 * x1 + x2 * x2; },
      [](double x1, double) { return x1; },
      [](double, double x2) { return x2; },
      [](double, double) { return 1.0; }};
  const std::vector<std::function<double(const Eigen::VectorXd&)>> tweights = {
      [](const Eigen::VectorXd&) { return 1.0; },
      [](const Eigen::VectorXd& mu) { return -2.0 * mu(0); },
      [](const Eigen::VectorXd& mu) { return -2.0 * mu(1); },
      [](const Eigen::VectorXd& mu) { return mu(0) * mu(0) + mu(1) * mu(1); }};
  std::vector<Eigen::VectorXd> tnodal;
  for (size_t k = 0; k < tshapes.size(); ++k) {
    tnodal.push_back(nodal_eval(p.grid, tshapes[k]));
    p.blocks.target_load.pieces.push_back(assemble_load(p.grid, tnodal.back()));
    p.blocks.target_load.coeffs.push_back(tweights[k]);
  }

  const Eigen::VectorXd source_nodal = nodal_eval(p.grid, [](double x1, double x2) {
    const double t = x1 / 6.0 + std::sin(M_PI * x2) + 1.0;
    return 0.5 * std::sin(M_PI * x1) * std::cos(2.0 * M_PI * x2) + x1 * x2 + t * t;
  });
  p.blocks.source_load.pieces.push_back(assemble_load(p.grid, source_nodal));
  p.blocks.source_load.coeffs.push_back([](const Eigen::VectorXd&) { return 1.0; });
  p.blocks.has_dirichlet = false;

  Eigen::VectorXd mu_bar(2);
  mu_bar << 0.5, 0.5;
  p.gmsfem_kappa = kappa_field(mu_bar);

  KktBlocks base = p.blocks;
  base.stiffness = AffineOperatorFamily{};
  p.stiffness_exact = [grid, kappa_field](const Eigen::VectorXd& mu) {
    return assemble_stiffness(grid, kappa_field(mu));
  };
  p.reference = [grid, base, kappa_field](const Eigen::VectorXd& mu) {
    KktBlocks b = base;
    b.stiffness.pieces = {assemble_stiffness(grid, kappa_field(mu))};
    b.stiffness.coeffs = {[](const Eigen::VectorXd&) { return 1.0; }};
    return build_kkt(b, mu);
  };
  p.uhat = [tnodal, tweights](const Eigen::VectorXd& mu) {
    Eigen::VectorXd full = tweights[0](mu) * tnodal[0];
    for (size_t k = 1; k < tnodal.size(); ++k) full += tweights[k](mu) * tnodal[k];
    return full;
  };
  return p;
}

}  // namespace

Problem build_problem(const ExperimentConfig& cfg) {
  if (cfg.tag == "distributed-deterministic") return build_distributed(cfg);
  if (cfg.tag == "random-domain") return build_random_domain(cfg);
  if (cfg.tag == "neumann-boundary") return build_neumann(cfg);
  throw std::invalid_argument("build_problem: unknown tag " + cfg.tag);
}

OfflineArtifacts run_offline(const Problem& problem, const ExperimentConfig& cfg) {
  OfflineArtifacts art;
  const double t0 = wall_seconds();
  art.ms = build_multiscale_space(problem.grid, problem.coarse, problem.gmsfem_kappa, cfg.L);
  SparseMat R = art.ms.R;
  if (problem.is_dirichlet) R = restrict_basis(R, problem.constrained.interior);
  auto local = std::make_shared<const LocalReducedKkt>(
      problem.is_dirichlet
          ? project_kkt_local(problem.constrained, R)
          : project_kkt_local(problem.blocks, problem.blocks.source_load, Eigen::VectorXd(), R));
  art.local = local;
  art.snapshot_seconds = wall_seconds() - t0;

  const double t1 = wall_seconds();
  const auto train = sample_parameters(problem.domain, cfg.n_train, cfg.seed);
  GreedyOptions opt;
  opt.tol = cfg.eps_tol;
  opt.n_max = cfg.n_max;
  art.greedy = greedy_train(local, train, opt);
  art.greedy_seconds = wall_seconds() - t1;
  return art;
}

std::vector<std::string> persist_offline(const Problem& problem, const OfflineArtifacts& art,
                                         const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  std::vector<std::string> paths;

  BundleInfo info;
  info.N = art.greedy.spaces.samples;
  info.M = art.local->M();
  info.L = cfg.L;
  info.Q_a = static_cast<int>(art.local->K_pieces.size());
  info.Q_u = static_cast<int>(art.local->target_pieces.size());
  info.greedy_tol = cfg.eps_tol;
  info.drop_tol = 1e-10;
  info.affine = problem.affine;
  info.training_samples = art.greedy.selected;
  const std::string bundle_dir = cfg.output_dir + "/bundle";
  save_bundle(bundle_dir, art.greedy.model, info);
  paths.push_back(bundle_dir + "/manifest.json");

  dump_selection_log(art.greedy.log, cfg.output_dir + "/selection_log.csv");
  paths.push_back(cfg.output_dir + "/selection_log.csv");
  dump_eigenvalues(art.ms, cfg.output_dir + "/eigenvalues.csv");
  paths.push_back(cfg.output_dir + "/eigenvalues.csv");
  cfg.to_file(cfg.output_dir + "/config.json");
  paths.push_back(cfg.output_dir + "/config.json");
  return paths;
}

void reattach_coefficients(LoadedBundle& bundle, const Problem& problem) {
  const KktBlocks& b = problem.is_dirichlet ? problem.constrained.blocks : problem.blocks;
  std::vector<CoeffFn> staterhs;
  if (problem.is_dirichlet)
    staterhs = problem.constrained.lift.coeffs;
  else
    staterhs = problem.blocks.source_load.coeffs;
  attach_coefficients(bundle, b.stiffness.coeffs, b.target_load.coeffs, std::move(staterhs));
}

OnlineResult run_online(const Problem& problem, const ReducedModel& model,
                        const std::vector<Eigen::VectorXd>& test) {
  std::vector<Eigen::VectorXd> u_ref, f_ref, l_ref, u_red, f_red, l_red;
  std::vector<SparseMat> K_list;
  OnlineResult out;
  double jsum = 0.0, fnorm = 0.0;
  for (const auto& mu : test) {
    const OptimalTriple ref = solve_kkt(problem.reference(mu));
    const ReducedSolution sol = online_solve(model, mu);
    u_ref.push_back(ref.state);
    f_ref.push_back(ref.control);
    l_ref.push_back(ref.adjoint);
    u_red.push_back(downscale_state_fine(model, sol.state));
    l_red.push_back(downscale_state_fine(model, sol.adjoint));
    f_red.push_back(model.Z2 * sol.control);
    K_list.push_back(problem.stiffness_exact(mu));

    jsum += cost(u_red.back(), f_red.back(), problem.uhat(mu), model.beta,
                 problem.state_mass(), problem.control_mass());
    fnorm += std::sqrt(f_red.back().dot(problem.control_mass() * f_red.back()));
  }
  out.errors = error_metrics(u_ref, f_ref, l_ref, u_red, f_red, l_red, problem.state_mass(),
                             problem.control_mass(), K_list);
  out.j_min_mean = jsum / static_cast<double>(test.size());
  out.control_norm_mean = fnorm / static_cast<double>(test.size());
  if (test.size() >= 2) {
    out.state_moments = moments(u_red);
    out.control_moments = moments(f_red);
  }
  return out;
}

TimingSummary timing_harness(const Problem& problem, const ReducedModel& model,
                             const std::vector<Eigen::VectorXd>& samples) {
  TimingSummary t;
  t.reduced_size = model.system_size();
  {
    const FullKkt probe = problem.reference(samples.front());
    t.fine_size = probe.matrix.rows();
  }

  // fine path: one pass (each solve is itself far above timer resolution)
  {
    const double t0 = wall_seconds();
    for (const auto& mu : samples) (void)solve_kkt(problem.reference(mu));
    t.fine_mean_seconds = (wall_seconds() - t0) / static_cast<double>(samples.size());
  }
  // reduced path: median of 5 batch passes
  {
    std::vector<double> batch(5);
    for (int rep = 0; rep < 5; ++rep) {
      const double t0 = wall_seconds();
      for (const auto& mu : samples) (void)online_solve(model, mu);
      batch[rep] = wall_seconds() - t0;
    }
    std::nth_element(batch.begin(), batch.begin() + 2, batch.end());
    t.online_mean_seconds = batch[2] / static_cast<double>(samples.size());
  }
  t.speedup = t.fine_mean_seconds / t.online_mean_seconds;
  return t;
}

namespace {

Eigen::VectorXd embed_state(const Problem& problem, const Eigen::VectorXd& v) {
  if (!problem.is_dirichlet) return v;
  Eigen::VectorXd full = problem.constrained.boundary_values;
  for (size_t k = 0; k < problem.constrained.interior.size(); ++k)
    full(problem.constrained.interior[k]) = v(static_cast<int>(k));
  return full;
}

void write_error_table(const OnlineResult& online, const std::string& path) {
  auto out = open_csv(path);
  out << "metric,value\n";
  out << "e2_u," << online.errors.e2_u << '\n';
  out << "e2_f," << online.errors.e2_f << '\n';
  out << "e2_lambda," << online.errors.e2_lambda << '\n';
  out << "eH_u," << online.errors.eH_u << '\n';
  out << "eH_lambda," << online.errors.eH_lambda << '\n';
  out << "j_min," << online.j_min_mean << '\n';
  out << "control_norm," << online.control_norm_mean << '\n';
  out << "excluded," << online.errors.excluded << '\n';
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg) {
  RunReport report;
  const Problem problem = build_problem(cfg);
  const OfflineArtifacts art = run_offline(problem, cfg);
  report.artifacts = persist_offline(problem, art, cfg);
  report.selection_log = art.greedy.log;

  const auto test = sample_parameters(problem.domain, cfg.n_test, cfg.seed + 1);
  report.online = run_online(problem, art.greedy.model, test);

  write_error_table(report.online, cfg.output_dir + "/errors.csv");
  report.artifacts.push_back(cfg.output_dir + "/errors.csv");
  if (report.online.state_moments.mean.size() > 0) {
    dump_field(problem.grid, embed_state(problem, report.online.state_moments.mean),
               cfg.output_dir + "/state_mean.csv");
    report.artifacts.push_back(cfg.output_dir + "/state_mean.csv");
    Eigen::VectorXd var = report.online.state_moments.variance;
    Eigen::VectorXd var_full = embed_state(problem, var);
    if (problem.is_dirichlet)
      for (int b : problem.grid.boundary_nodes) var_full(b) = 0.0;
    dump_field(problem.grid, var_full, cfg.output_dir + "/state_variance.csv");
    report.artifacts.push_back(cfg.output_dir + "/state_variance.csv");
  }
  return report;
}

RunReport run_study(const ExperimentConfig& cfg, const std::string& which) {
  RunReport report;
  if (which == "beta") {
    std::vector<double> betas = cfg.beta_list;
    if (betas.empty()) betas = {1e-2, 2e-4, 0.5e-5};
    auto out = open_csv(cfg.output_dir + "/beta_study.csv");
    out << "beta,e2_u,e2_f,j_min,control_norm\n";
    for (double b : betas) {
      ExperimentConfig c = cfg;
      c.beta = b;
      const Problem problem = build_problem(c);
      const OfflineArtifacts art = run_offline(problem, c);
      const auto test = sample_parameters(problem.domain, c.n_test, c.seed + 1);
      const OnlineResult online = run_online(problem, art.greedy.model, test);
      out << b << ',' << online.errors.e2_u << ',' << online.errors.e2_f << ','
          << online.j_min_mean << ',' << online.control_norm_mean << '\n';
      report.online = online;
    }
    report.artifacts.push_back(cfg.output_dir + "/beta_study.csv");
  } else if (which == "H") {
    auto out = open_csv(cfg.output_dir + "/h_study.csv");
    out << "ncx,e2_u,e2_f,j_min\n";
    std::vector<int> sizes;
    for (int n : {5, 6, 8, 10, 12})
      if (cfg.nx % n == 0 && cfg.ny % n == 0) sizes.push_back(n);
    for (int n : sizes) {
      ExperimentConfig c = cfg;
      c.ncx = c.ncy = n;
      const Problem problem = build_problem(c);
      const OfflineArtifacts art = run_offline(problem, c);
      const auto test = sample_parameters(problem.domain, c.n_test, c.seed + 1);
      const OnlineResult online = run_online(problem, art.greedy.model, test);
      out << n << ',' << online.errors.e2_u << ',' << online.errors.e2_f << ','
          << online.j_min_mean << '\n';
      report.online = online;
    }
    report.artifacts.push_back(cfg.output_dir + "/h_study.csv");
  } else if (which == "N") {
    auto out = open_csv(cfg.output_dir + "/n_study.csv");
    out << "N,e2_u,e2_f,e2_lambda\n";
    const Problem problem = build_problem(cfg);
    for (int n = 2; n <= cfg.n_max; ++n) {
      ExperimentConfig c = cfg;
      c.n_max = n;
      const OfflineArtifacts art = run_offline(problem, c);
      const auto test = sample_parameters(problem.domain, c.n_test, c.seed + 1);
      const OnlineResult online = run_online(problem, art.greedy.model, test);
      out << n << ',' << online.errors.e2_u << ',' << online.errors.e2_f << ','
          << online.errors.e2_lambda << '\n';
      report.online = online;
    }
    report.artifacts.push_back(cfg.output_dir + "/n_study.csv");
  } else if (which == "L") {
    auto out = open_csv(cfg.output_dir + "/l_study.csv");
    out << "L,e2_u,e2_f,e2_lambda\n";
    for (int L : {2, 3, 4, 5, 6}) {
      ExperimentConfig c = cfg;
      c.L = L;
      const Problem problem = build_problem(c);
      const OfflineArtifacts art = run_offline(problem, c);
      const auto test = sample_parameters(problem.domain, c.n_test, c.seed + 1);
      const OnlineResult online = run_online(problem, art.greedy.model, test);
      out << L << ',' << online.errors.e2_u << ',' << online.errors.e2_f << ','
          << online.errors.e2_lambda << '\n';
      report.online = online;
    }
    report.artifacts.push_back(cfg.output_dir + "/l_study.csv");
  } else {
    throw std::invalid_argument("run_study: unknown study " + which);
  }
  return report;
}

}  // namespace lgrom
