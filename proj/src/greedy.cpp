#include "lgrom/greedy.hpp"

#include <cmath>
#include <stdexcept>

namespace lgrom {

StateInnerProduct StateInnerProduct::build(const LocalReducedKkt& local,
                                           const Eigen::VectorXd& mu_ref) {
  StateInnerProduct ip;
  ip.X = local.stiffness_at(mu_ref) + local.M3;
  ip.solver.compute(ip.X);
  if (ip.solver.info() != Eigen::Success)
    throw std::runtime_error("StateInnerProduct: factorization failed");
  return ip;
}

namespace {

// Residual term columns over the local state dofs for the state equation
// (W1) and the adjoint equation (W2); gradient-equation terms (W3) live on
// the control dofs.
struct ResidualTerms {
  Eigen::MatrixXd W1, W2, W3;
};

ResidualTerms residual_terms(const ReducedModel& model) {
  const LocalReducedKkt& loc = *model.local;
  const int M = loc.M();
  const int nc = loc.n_ctrl();
  const int ds = static_cast<int>(model.Z1.cols());
  const int dc = static_cast<int>(model.Z2.cols());
  const int Qa = static_cast<int>(loc.K_pieces.size());

  ResidualTerms t;
  t.W1.resize(M, Qa * ds + dc + static_cast<int>(loc.staterhs_pieces.size()));
  int col = 0;
  for (int q = 0; q < Qa; ++q, col += ds)
    t.W1.middleCols(col, ds) = -(loc.K_pieces[q] * model.Z1);
  t.W1.middleCols(col, dc) = Eigen::MatrixXd(loc.C * model.Z2);
  col += dc;
  for (const auto& d : loc.staterhs_pieces) t.W1.col(col++) = d;

  const bool corr = loc.adjoint_correction.size() > 0;
  t.W2.resize(M, Qa * ds + ds + static_cast<int>(loc.target_pieces.size()) + (corr ? 1 : 0));
  col = 0;
  for (int q = 0; q < Qa; ++q, col += ds)
    t.W2.middleCols(col, ds) = -(loc.K_pieces[q].transpose() * model.Z1);
  t.W2.middleCols(col, ds) = -(loc.M3 * model.Z1);
  col += ds;
  for (const auto& tp : loc.target_pieces) t.W2.col(col++) = tp;
  if (corr) t.W2.col(col++) = loc.adjoint_correction;

  t.W3.resize(nc, ds + dc);
  t.W3.leftCols(ds) = Eigen::MatrixXd(loc.C.transpose()) * model.Z1;
  t.W3.rightCols(dc) = -2.0 * loc.beta * (loc.control_mass * model.Z2);
  return t;
}

struct Thetas {
  Eigen::VectorXd t1, t2, t3;
};

Thetas thetas(const ReducedModel& model, const Eigen::VectorXd& mu, const ReducedSolution& sol) {
  const LocalReducedKkt& loc = *model.local;
  const int ds = static_cast<int>(model.Z1.cols());
  const int dc = static_cast<int>(model.Z2.cols());
  const int Qa = static_cast<int>(loc.K_pieces.size());

  Thetas th;
  th.t1.resize(Qa * ds + dc + static_cast<int>(loc.staterhs_pieces.size()));
  int k = 0;
  for (int q = 0; q < Qa; ++q, k += ds) th.t1.segment(k, ds) = loc.K_coeffs[q](mu) * sol.state;
  th.t1.segment(k, dc) = sol.control;
  k += dc;
  for (size_t p = 0; p < loc.staterhs_pieces.size(); ++p) th.t1(k++) = loc.staterhs_coeffs[p](mu);

  const bool corr = loc.adjoint_correction.size() > 0;
  th.t2.resize(Qa * ds + ds + static_cast<int>(loc.target_pieces.size()) + (corr ? 1 : 0));
  k = 0;
  for (int q = 0; q < Qa; ++q, k += ds) th.t2.segment(k, ds) = loc.K_coeffs[q](mu) * sol.adjoint;
  th.t2.segment(k, ds) = sol.state;
  k += ds;
  for (size_t p = 0; p < loc.target_pieces.size(); ++p) th.t2(k++) = loc.target_coeffs[p](mu);
  if (corr) th.t2(k++) = 1.0;

  th.t3.resize(ds + dc);
  th.t3.head(ds) = sol.adjoint;
  th.t3.tail(dc) = sol.control;
  return th;
}

}  // namespace

ResidualGramians riesz_representations(const ReducedModel& model, const StateInnerProduct& ip) {
  const auto terms = residual_terms(model);
  ResidualGramians g;
  g.G1 = terms.W1.transpose() * ip.solver.solve(terms.W1);
  g.G2 = terms.W2.transpose() * ip.solver.solve(terms.W2);
  g.G3 = terms.W3.transpose() * model.local->control_solver->solve(terms.W3);
  g.Qa = static_cast<int>(model.local->K_pieces.size());
  g.n_staterhs = static_cast<int>(model.local->staterhs_pieces.size());
  g.n_target = static_cast<int>(model.local->target_pieces.size());
  g.has_correction = model.local->adjoint_correction.size() > 0;
  return g;
}

EstimatorReport estimator(const ReducedModel& model, const ResidualGramians& gram,
                          const Eigen::VectorXd& mu, const ReducedSolution& sol) {
  const auto th = thetas(model, mu, sol);
  EstimatorReport r;
  r.r1 = std::sqrt(std::max(0.0, th.t1.dot(gram.G1 * th.t1)));
  r.r2 = std::sqrt(std::max(0.0, th.t2.dot(gram.G2 * th.t2)));
  r.r3 = std::sqrt(std::max(0.0, th.t3.dot(gram.G3 * th.t3)));
  r.delta = std::sqrt(r.r1 * r.r1 + r.r2 * r.r2 + r.r3 * r.r3);
  return r;
}

EstimatorReport estimator_direct(const ReducedModel& model, const StateInnerProduct& ip,
                                 const Eigen::VectorXd& mu, const ReducedSolution& sol) {
  const LocalReducedKkt& loc = *model.local;
  const Eigen::VectorXd u = model.Z1 * sol.state;
  const Eigen::VectorXd lam = model.Z1 * sol.adjoint;
  const Eigen::VectorXd f = model.Z2 * sol.control;
  const Eigen::MatrixXd K = loc.stiffness_at(mu);

  const Eigen::VectorXd r1 = loc.C * f + loc.staterhs_at(mu) - K * u;
  const Eigen::VectorXd r2 = loc.target_at(mu) - loc.M3 * u - K.transpose() * lam;
  const Eigen::VectorXd r3 =
      loc.C.transpose() * lam - 2.0 * loc.beta * (loc.control_mass * f);

  EstimatorReport r;
  r.r1 = std::sqrt(std::max(0.0, r1.dot(ip.solver.solve(r1))));
  r.r2 = std::sqrt(std::max(0.0, r2.dot(ip.solver.solve(r2))));
  r.r3 = std::sqrt(std::max(0.0, r3.dot(loc.control_solver->solve(r3))));
  r.delta = std::sqrt(r.r1 * r.r1 + r.r2 * r.r2 + r.r3 * r.r3);
  return r;
}

GreedyResult greedy_train(std::shared_ptr<const LocalReducedKkt> local,
                          const std::vector<Eigen::VectorXd>& train, const GreedyOptions& opt) {
  if (train.empty()) throw std::invalid_argument("greedy_train: empty training set");
  if (opt.tol <= 0.0 || opt.n_max < 1) throw std::invalid_argument("greedy_train: invalid options");

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(train[0].size());
  for (const auto& mu : train) mean += mu;
  mean /= static_cast<double>(train.size());

  const StateInnerProduct ip = StateInnerProduct::build(*local, mean);

  GreedyResult res;
  std::vector<Eigen::VectorXd> pool = train;
  // remove the initial sample if it happens to be a member of the pool
  auto remove_sample = [&](const Eigen::VectorXd& mu) {
    for (size_t k = 0; k < pool.size(); ++k)
      if (pool[k] == mu) {
        pool.erase(pool.begin() + k);
        return;
      }
  };

  res.selected.push_back(mean);
  res.snapshots.push_back(collect_snapshot(*local, mean));
  enrich_spaces(res.spaces, res.snapshots.back(), *local, opt.drop_tol);
  remove_sample(mean);

  int N = 1;
  while (true) {
    res.model = project_reduced(local, res.spaces);
    const ResidualGramians gram = riesz_representations(res.model, ip);

    double eps = 0.0;
    int argmax = -1;
    EstimatorReport worst;
    for (size_t k = 0; k < pool.size(); ++k) {
      const auto sol = online_solve(res.model, pool[k]);
      const EstimatorReport rep = estimator(res.model, gram, pool[k], sol);
      if (rep.delta > eps) {
        eps = rep.delta;
        argmax = static_cast<int>(k);
        worst = rep;
      }
    }
    res.log.push_back({N, res.selected.back(), eps, worst.r1, worst.r2, worst.r3});

    if (eps <= opt.tol || N >= opt.n_max || argmax < 0) break;

    const Eigen::VectorXd mu_next = pool[argmax];
    pool.erase(pool.begin() + argmax);
    res.selected.push_back(mu_next);
    res.snapshots.push_back(collect_snapshot(*local, mu_next));
    enrich_spaces(res.spaces, res.snapshots.back(), *local, opt.drop_tol);
    N += 1;
  }
  return res;
}

}  // namespace lgrom
