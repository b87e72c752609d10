#pragma once

#include <Eigen/Dense>

#include "lgrom/rb.hpp"

namespace lgrom {

/// Cached inner products of the Riesz representations of every residual
/// term, enabling the mu-by-mu estimator evaluation without touching the
/// local dof set online.
struct ResidualGramians {
  Eigen::MatrixXd G1;  // state-equation residual terms
  Eigen::MatrixXd G2;  // adjoint-equation residual terms
  Eigen::MatrixXd G3;  // gradient-equation residual terms
  int Qa = 0;
  int n_staterhs = 0;
  int n_target = 0;
  bool has_correction = false;
};

struct EstimatorReport {
  double delta = 0.0;
  double r1 = 0.0;  // dual-norm components (not squared)
  double r2 = 0.0;
  double r3 = 0.0;
};

/// mu-independent inner product on the local state space (stiffness at a
/// reference parameter plus mass), with its factorization.
struct StateInnerProduct {
  Eigen::MatrixXd X;
  Eigen::LDLT<Eigen::MatrixXd> solver;
  static StateInnerProduct build(const LocalReducedKkt& local, const Eigen::VectorXd& mu_ref);
};

ResidualGramians riesz_representations(const ReducedModel& model, const StateInnerProduct& ip);

EstimatorReport estimator(const ReducedModel& model, const ResidualGramians& gram,
                          const Eigen::VectorXd& mu, const ReducedSolution& sol);

/// Direct (dense) evaluation of the same estimator without the Gramian
/// shortcut; test oracle for the offline-online split.
EstimatorReport estimator_direct(const ReducedModel& model, const StateInnerProduct& ip,
                                 const Eigen::VectorXd& mu, const ReducedSolution& sol);

struct GreedyLogEntry {
  int iteration = 0;
  Eigen::VectorXd sample;
  double eps = 0.0;       // max estimator over the remaining training set
  double r1 = 0.0;        // estimator components at the maximizer
  double r2 = 0.0;
  double r3 = 0.0;
};

struct GreedyResult {
  ReducedModel model;
  ReducedSpaces spaces;
  std::vector<Eigen::VectorXd> selected;       // S_N in selection order
  std::vector<LocalSolution> snapshots;        // local solves at the selected samples
  std::vector<GreedyLogEntry> log;
};

struct GreedyOptions {
  double tol = 1e-5;
  int n_max = 8;
  double drop_tol = 1e-10;
};

/// Greedy sample selection: start from the training-set mean, then repeatedly
/// add the argmax of the residual estimator until the tolerance or sample cap
/// is reached. Selected samples are removed from the training pool.
GreedyResult greedy_train(std::shared_ptr<const LocalReducedKkt> local,
                          const std::vector<Eigen::VectorXd>& train, const GreedyOptions& opt);

}  // namespace lgrom
