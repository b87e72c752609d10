#pragma once

#include <string>

#include "lgrom/greedy.hpp"
#include "lgrom/grid.hpp"

namespace lgrom {

/// "node,<id>,<x1>,<x2>" then "tri,<id>,<n1>,<n2>,<n3>" lines.
void dump_grid(const FineGrid& grid, const std::string& path);

/// Header "rows cols nnz", then one "i j value" line per stored entry.
void dump_matrix(const SparseMat& A, const std::string& path);
SparseMat load_matrix(const std::string& path);

/// "id,value" lines.
void dump_solution(const Eigen::VectorXd& v, const std::string& path);
Eigen::VectorXd load_solution(const std::string& path);

/// "i,ell,lambda" lines: neighborhood index, local mode index, eigenvalue.
void dump_eigenvalues(const MultiscaleSpace& space, const std::string& path);

/// "iter,mu_1..mu_m,eps_N,delta_r1,delta_r2,delta_r3" per greedy round.
void dump_selection_log(const std::vector<GreedyLogEntry>& log, const std::string& path);

/// Nodal field on a structured grid as "i,j,value" rows.
void dump_field(const FineGrid& grid, const Eigen::VectorXd& nodal, const std::string& path);

/// Offline artifact bundle: a directory holding the reduced-model matrices
/// plus a JSON manifest (dimensions, tolerances, training samples, affine
/// flag). Loading restores an online-solvable model.
struct BundleInfo {
  int N = 0;        // reduced (RB) sample count
  int M = 0;        // multiscale space dimension
  int L = 0;        // local modes per neighborhood
  int Q_a = 0;
  int Q_u = 0;
  double greedy_tol = 0.0;
  double drop_tol = 0.0;
  bool affine = true;
  std::vector<Eigen::VectorXd> training_samples;
};

void save_bundle(const std::string& dir, const ReducedModel& model, const BundleInfo& info);

/// Loaded bundles carry the matrix data; the scalar coefficient functions are
/// not serializable and must be reattached from the experiment config before
/// online solves.
struct LoadedBundle {
  ReducedModel model;
  BundleInfo info;
  std::shared_ptr<LocalReducedKkt> local;  // backing store shared with model.local
};
LoadedBundle load_bundle(const std::string& dir);

using CoeffFn = std::function<double(const Eigen::VectorXd&)>;
void attach_coefficients(LoadedBundle& bundle, std::vector<CoeffFn> stiffness,
                         std::vector<CoeffFn> target, std::vector<CoeffFn> staterhs);

}  // namespace lgrom
