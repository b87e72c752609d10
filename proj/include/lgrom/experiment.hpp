#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "lgrom/fullorder.hpp"
#include "lgrom/io.hpp"
#include "lgrom/stochastic.hpp"

namespace lgrom {

/// Declarative description of one experiment run. Serialized as JSON; the
/// schema round-trips.
struct ExperimentConfig {
  std::string tag = "distributed-deterministic";  // | random-domain | neumann-boundary
  int nx = 60, ny = 60;
  int ncx = 6, ncy = 6;
  int L = 5;
  int n_max = 8;
  double eps_tol = 1e-5;
  double beta = 1e-4;
  std::vector<double> beta_list;
  int n_train = 100;
  int n_test = 100;
  unsigned int seed = 0;
  std::string output_dir = "out";
  // stochastic settings
  double sigma = 0.1;
  int kl_terms = 5;
  int kl_points = 200;
  bool map_on = true;
  bool eim_on = true;
  double eim_tol = 1e-6;
  int eim_cap = 50;

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig from_file(const std::string& path);
  void to_file(const std::string& path) const;
};

/// Assembled problem: blocks, parameter domain, the scalar field driving the
/// local spectral basis, and exact (non-surrogate) per-sample builders for
/// reference solves.
struct Problem {
  FineGrid grid;
  CoarseGrid coarse;
  ParamDomain domain;
  bool is_dirichlet = false;
  KktBlocks blocks;            // full-node blocks (Neumann control case)
  ConstrainedKkt constrained;  // interior blocks (Dirichlet cases)
  Eigen::VectorXd gmsfem_kappa;  // per-element scalar at the parameter mean
  bool affine = true;
  bool eim_warning = false;
  std::vector<double> eim_residual_history;

  std::function<SparseMat(const Eigen::VectorXd&)> stiffness_exact;  // state-dof stiffness
  std::function<FullKkt(const Eigen::VectorXd&)> reference;          // exact full-order system
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> uhat;       // nodal target, state dofs

  int n_state() const {
    return is_dirichlet ? static_cast<int>(constrained.interior.size()) : blocks.n_state();
  }
  const SparseMat& state_mass() const {
    return is_dirichlet ? constrained.blocks.state_mass : blocks.state_mass;
  }
  const SparseMat& control_mass() const {
    return is_dirichlet ? constrained.blocks.control_mass : blocks.control_mass;
  }
};

/// Procedural high-contrast coefficient: background 1 with channels and
/// inclusions at the given contrast, deterministic in the seed.
Eigen::VectorXd high_contrast_field(const FineGrid& grid, unsigned int seed,
                                    double contrast = 1e4);

Problem build_problem(const ExperimentConfig& cfg);

struct OfflineArtifacts {
  MultiscaleSpace ms;
  std::shared_ptr<const LocalReducedKkt> local;
  GreedyResult greedy;
  double snapshot_seconds = 0.0;
  double greedy_seconds = 0.0;
};

OfflineArtifacts run_offline(const Problem& problem, const ExperimentConfig& cfg);

/// Persist the bundle plus selection log and spectral eigenvalues under
/// cfg.output_dir; returns the paths written.
std::vector<std::string> persist_offline(const Problem& problem, const OfflineArtifacts& art,
                                         const ExperimentConfig& cfg);

/// Rebuild the scalar coefficient functions of a loaded bundle from the
/// problem definition (functions are not serializable).
void reattach_coefficients(LoadedBundle& bundle, const Problem& problem);

struct OnlineResult {
  ErrorMetrics errors;
  double j_min_mean = 0.0;
  double control_norm_mean = 0.0;
  Moments state_moments;    // over downscaled fine-dof states
  Moments control_moments;  // over reduced controls
};

OnlineResult run_online(const Problem& problem, const ReducedModel& model,
                        const std::vector<Eigen::VectorXd>& test);

struct TimingSummary {
  double fine_mean_seconds = 0.0;
  double online_mean_seconds = 0.0;
  double speedup = 0.0;
  long fine_size = 0;
  long reduced_size = 0;
};

/// Median-of-5 batch wall-clock per sample for the fine KKT path and the
/// online reduced path.
TimingSummary timing_harness(const Problem& problem, const ReducedModel& model,
                             const std::vector<Eigen::VectorXd>& samples);

struct RunReport {
  std::vector<std::string> artifacts;
  OnlineResult online;
  TimingSummary timing;
  std::vector<GreedyLogEntry> selection_log;
};

RunReport run_experiment(const ExperimentConfig& cfg);

/// Parameter sweeps emitting CSV tables: "beta", "H", "N", or "L".
RunReport run_study(const ExperimentConfig& cfg, const std::string& which);

}  // namespace lgrom
