#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "lgrom/experiment.hpp"

using namespace lgrom;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig tiny_config(const std::string& out) {
  ExperimentConfig cfg;
  cfg.tag = "distributed-deterministic";
  cfg.nx = cfg.ny = 16;
  cfg.ncx = cfg.ncy = 4;
  cfg.L = 4;
  cfg.n_max = 4;
  cfg.eps_tol = 1e-12;
  cfg.beta = 1e-2;
  cfg.n_train = 10;
  cfg.n_test = 4;
  cfg.seed = 3;
  cfg.output_dir = out;
  return cfg;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("matrix and vector round trips") {
  TempDir tmp("lgrom_io_rt");
  std::mt19937 rng(2);
  std::normal_distribution<double> gauss;

  std::vector<Eigen::Triplet<double>> trips;
  for (int k = 0; k < 40; ++k)
    trips.emplace_back(rng() % 13, rng() % 9, gauss(rng));
  SparseMat A(13, 9);
  A.setFromTriplets(trips.begin(), trips.end());
  dump_matrix(A, tmp.str() + "/a.mtx");
  const SparseMat B = load_matrix(tmp.str() + "/a.mtx");
  CHECK(B.rows() == 13);
  CHECK(B.cols() == 9);
  CHECK((Eigen::MatrixXd(A) - Eigen::MatrixXd(B)).cwiseAbs().maxCoeff() == 0.0);

  const Eigen::VectorXd v = Eigen::VectorXd::NullaryExpr(17, [&]() { return gauss(rng); });
  dump_solution(v, tmp.str() + "/v.vec");
  const Eigen::VectorXd w = load_solution(tmp.str() + "/v.vec");
  CHECK((v - w).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("grid and field dump formats") {
  TempDir tmp("lgrom_io_fmt");
  const FineGrid g = build_fine_grid(3, 3);
  dump_grid(g, tmp.str() + "/grid.csv");
  std::ifstream in(tmp.str() + "/grid.csv");
  std::string line;
  int nodes = 0, tris = 0;
  while (std::getline(in, line)) {
    if (line.rfind("node,", 0) == 0) ++nodes;
    if (line.rfind("tri,", 0) == 0) ++tris;
  }
  CHECK(nodes == g.num_nodes());
  CHECK(tris == g.num_elements());

  dump_field(g, Eigen::VectorXd::LinSpaced(g.num_nodes(), 0.0, 1.0), tmp.str() + "/f.csv");
  std::ifstream fin(tmp.str() + "/f.csv");
  int rows = 0;
  bool first_ok = false;
  while (std::getline(fin, line)) {
    if (rows == 0) first_ok = line.rfind("0,0,", 0) == 0;
    ++rows;
  }
  CHECK(rows == g.num_nodes());
  CHECK(first_ok);

  CHECK_THROWS_AS(dump_field(g, Eigen::VectorXd::Zero(3), tmp.str() + "/bad.csv"),
                  std::invalid_argument);
}

TEST_CASE("config schema round trip") {
  ExperimentConfig cfg = tiny_config("somewhere");
  cfg.beta_list = {1e-2, 2e-4};
  cfg.sigma = 0.07;
  cfg.eim_on = false;

  const nlohmann::json j = cfg.to_json();
  const ExperimentConfig back = ExperimentConfig::from_json(j);
  CHECK(back.to_json() == j);  // parse -> serialize -> parse fixed point
  CHECK(back.tag == cfg.tag);
  CHECK(back.nx == cfg.nx);
  CHECK(back.beta_list == cfg.beta_list);
  CHECK(back.sigma == cfg.sigma);
  CHECK(back.eim_on == cfg.eim_on);

  TempDir tmp("lgrom_cfg_rt");
  cfg.to_file(tmp.str() + "/c.json");
  const ExperimentConfig filed = ExperimentConfig::from_file(tmp.str() + "/c.json");
  CHECK(filed.to_json() == j);

  nlohmann::json bad = j;
  bad["tag"] = "unknown-experiment";
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad), std::invalid_argument);
  nlohmann::json neg = j;
  neg["n_train"] = 0;
  CHECK_THROWS_AS(ExperimentConfig::from_json(neg), std::invalid_argument);
}

TEST_CASE("high contrast field") {
  const FineGrid g = build_fine_grid(30, 30);
  const Eigen::VectorXd a = high_contrast_field(g, 11);
  const Eigen::VectorXd b = high_contrast_field(g, 11);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.minCoeff() == 1.0);
  CHECK(a.maxCoeff() == 1e4);
  const Eigen::VectorXd c = high_contrast_field(g, 12);
  CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);  // seed changes the pattern
}

TEST_CASE("bundle save load and reattach") {
  TempDir tmp("lgrom_bundle");
  ExperimentConfig cfg = tiny_config(tmp.str());
  const Problem problem = build_problem(cfg);
  const OfflineArtifacts art = run_offline(problem, cfg);
  persist_offline(problem, art, cfg);

  LoadedBundle bundle = load_bundle(tmp.str() + "/bundle");
  CHECK(bundle.info.N == art.greedy.spaces.samples);
  CHECK(bundle.info.affine);
  reattach_coefficients(bundle, problem);

  Eigen::VectorXd mu(1);
  mu << 0.42;
  const ReducedSolution a = online_solve(art.greedy.model, mu);
  const ReducedSolution b = online_solve(bundle.model, mu);
  CHECK((a.state - b.state).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((a.control - b.control).cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::VectorXd fa = downscale_state_fine(art.greedy.model, a.state);
  const Eigen::VectorXd fb = downscale_state_fine(bundle.model, b.state);
  CHECK((fa - fb).cwiseAbs().maxCoeff() < 1e-12);

  // manifest records the affine branch for the affine scenario
  nlohmann::json manifest;
  std::ifstream(tmp.str() + "/bundle/manifest.json") >> manifest;
  CHECK(manifest.at("affine").get<bool>());
  CHECK(manifest.at("N").get<int>() == art.greedy.spaces.samples);
}

TEST_CASE("experiment rerun determinism") {
  TempDir ta("lgrom_run_a"), tb("lgrom_run_b");
  ExperimentConfig ca = tiny_config(ta.str());
  ExperimentConfig cb = tiny_config(tb.str());
  const RunReport ra = run_experiment(ca);
  const RunReport rb = run_experiment(cb);

  CHECK(slurp(ta.str() + "/bundle/manifest.json") == slurp(tb.str() + "/bundle/manifest.json"));
  CHECK(slurp(ta.str() + "/selection_log.csv") == slurp(tb.str() + "/selection_log.csv"));
  CHECK(slurp(ta.str() + "/errors.csv") == slurp(tb.str() + "/errors.csv"));
  CHECK(ra.online.errors.e2_u == rb.online.errors.e2_u);

  // one record per test sample went into the statistics, and the error table exists
  CHECK(ra.online.state_moments.mean.size() > 0);
  CHECK(fs::exists(ta.str() + "/state_mean.csv"));
  CHECK(fs::exists(ta.str() + "/state_variance.csv"));
  CHECK(fs::exists(ta.str() + "/eigenvalues.csv"));
  CHECK(fs::exists(ta.str() + "/config.json"));

  // the reduced model earns its keep even on this tiny setup
  CHECK(ra.online.errors.e2_u < 0.1);
}
