#include "lgrom/io.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

namespace lgrom {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << std::setprecision(17);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

void dump_dense(const Eigen::MatrixXd& A, const std::string& path) {
  dump_matrix(A.sparseView(0.0, 0.0), path);
}

Eigen::MatrixXd load_dense(const std::string& path) {
  return Eigen::MatrixXd(load_matrix(path));
}

}  // namespace

void dump_grid(const FineGrid& grid, const std::string& path) {
  auto out = open_out(path);
  for (int k = 0; k < grid.num_nodes(); ++k)
    out << "node," << k << ',' << grid.nodes(k, 0) << ',' << grid.nodes(k, 1) << '\n';
  for (int e = 0; e < grid.num_elements(); ++e)
    out << "tri," << e << ',' << grid.elements[e][0] << ',' << grid.elements[e][1] << ','
        << grid.elements[e][2] << '\n';
}

void dump_matrix(const SparseMat& A, const std::string& path) {
  auto out = open_out(path);
  out << A.rows() << ' ' << A.cols() << ' ' << A.nonZeros() << '\n';
  for (int col = 0; col < A.outerSize(); ++col)
    for (SparseMat::InnerIterator it(A, col); it; ++it)
      out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

SparseMat load_matrix(const std::string& path) {
  auto in = open_in(path);
  long rows = 0, cols = 0, nnz = 0;
  if (!(in >> rows >> cols >> nnz)) throw std::runtime_error("bad matrix header in " + path);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(nnz);
  long i = 0, j = 0;
  double v = 0.0;
  for (long k = 0; k < nnz; ++k) {
    if (!(in >> i >> j >> v)) throw std::runtime_error("truncated matrix file " + path);
    trips.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
  }
  SparseMat A(rows, cols);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

void dump_solution(const Eigen::VectorXd& v, const std::string& path) {
  auto out = open_out(path);
  for (int k = 0; k < v.size(); ++k) out << k << ',' << v(k) << '\n';
}

Eigen::VectorXd load_solution(const std::string& path) {
  auto in = open_in(path);
  std::vector<double> vals;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("bad solution line in " + path);
    vals.push_back(std::stod(line.substr(comma + 1)));
  }
  return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<long>(vals.size()));
}

void dump_eigenvalues(const MultiscaleSpace& space, const std::string& path) {
  auto out = open_out(path);
  for (size_t i = 0; i < space.eigenvalues.size(); ++i)
    for (int l = 0; l < space.eigenvalues[i].size(); ++l)
      out << i << ',' << l << ',' << space.eigenvalues[i](l) << '\n';
}

void dump_selection_log(const std::vector<GreedyLogEntry>& log, const std::string& path) {
  auto out = open_out(path);
  for (const auto& e : log) {
    out << e.iteration;
    for (int c = 0; c < e.sample.size(); ++c) out << ',' << e.sample(c);
    out << ',' << e.eps << ',' << e.r1 << ',' << e.r2 << ',' << e.r3 << '\n';
  }
}

void dump_field(const FineGrid& grid, const Eigen::VectorXd& nodal, const std::string& path) {
  if (nodal.size() != grid.num_nodes())
    throw std::invalid_argument("dump_field: nodal vector size mismatch");
  auto out = open_out(path);
  for (int j = 0; j <= grid.ny; ++j)
    for (int i = 0; i <= grid.nx; ++i)
      out << i << ',' << j << ',' << nodal(grid.node_id(i, j)) << '\n';
}

void save_bundle(const std::string& dir, const ReducedModel& model, const BundleInfo& info) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const LocalReducedKkt& loc = *model.local;

  nlohmann::json manifest;
  manifest["N"] = info.N;
  manifest["M"] = info.M;
  manifest["L"] = info.L;
  manifest["Q_a"] = info.Q_a;
  manifest["Q_u"] = info.Q_u;
  manifest["greedy_tol"] = info.greedy_tol;
  manifest["drop_tol"] = info.drop_tol;
  manifest["affine"] = info.affine;
  manifest["beta"] = model.beta;
  manifest["dim_state"] = model.Z1.cols();
  manifest["dim_ctrl"] = model.Z2.cols();
  manifest["n_target_pieces"] = model.target_pieces.size();
  manifest["n_staterhs_pieces"] = model.staterhs_pieces.size();
  manifest["has_correction"] = model.adjoint_correction.size() > 0;
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& mu : info.training_samples) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < mu.size(); ++c) row.push_back(mu(c));
    samples.push_back(row);
  }
  manifest["training_samples"] = samples;
  {
    auto out = open_out(dir + "/manifest.json");
    out << manifest.dump(2) << '\n';
  }

  dump_dense(model.Z1, dir + "/Z1.mtx");
  dump_dense(model.Z2, dir + "/Z2.mtx");
  dump_dense(model.M3g, dir + "/M3g.mtx");
  dump_dense(model.M1g, dir + "/M1g.mtx");
  dump_dense(model.Cg, dir + "/Cg.mtx");
  for (size_t q = 0; q < model.K_pieces.size(); ++q)
    dump_dense(model.K_pieces[q], dir + "/Kg" + std::to_string(q) + ".mtx");
  for (size_t p = 0; p < model.target_pieces.size(); ++p)
    dump_solution(model.target_pieces[p], dir + "/target" + std::to_string(p) + ".vec");
  for (size_t p = 0; p < model.staterhs_pieces.size(); ++p)
    dump_solution(model.staterhs_pieces[p], dir + "/staterhs" + std::to_string(p) + ".vec");
  if (model.adjoint_correction.size())
    dump_solution(model.adjoint_correction, dir + "/correction.vec");
  dump_matrix(loc.R, dir + "/R.mtx");
}

LoadedBundle load_bundle(const std::string& dir) {
  nlohmann::json manifest;
  {
    auto in = open_in(dir + "/manifest.json");
    in >> manifest;
  }

  LoadedBundle b;
  b.info.N = manifest.at("N").get<int>();
  b.info.M = manifest.at("M").get<int>();
  b.info.L = manifest.at("L").get<int>();
  b.info.Q_a = manifest.at("Q_a").get<int>();
  b.info.Q_u = manifest.at("Q_u").get<int>();
  b.info.greedy_tol = manifest.at("greedy_tol").get<double>();
  b.info.drop_tol = manifest.at("drop_tol").get<double>();
  b.info.affine = manifest.at("affine").get<bool>();
  for (const auto& row : manifest.at("training_samples")) {
    Eigen::VectorXd mu(row.size());
    for (size_t c = 0; c < row.size(); ++c) mu(static_cast<int>(c)) = row[c].get<double>();
    b.info.training_samples.push_back(mu);
  }

  b.local = std::make_shared<LocalReducedKkt>();
  b.local->R = load_matrix(dir + "/R.mtx");
  b.local->beta = manifest.at("beta").get<double>();

  b.model.local = b.local;
  b.model.beta = b.local->beta;
  b.model.Z1 = load_dense(dir + "/Z1.mtx");
  b.model.Z2 = load_dense(dir + "/Z2.mtx");
  b.model.M3g = load_dense(dir + "/M3g.mtx");
  b.model.M1g = load_dense(dir + "/M1g.mtx");
  b.model.Cg = load_dense(dir + "/Cg.mtx");
  const int Qa = b.info.Q_a;
  for (int q = 0; q < Qa; ++q)
    b.model.K_pieces.push_back(load_dense(dir + "/Kg" + std::to_string(q) + ".mtx"));
  const int nt = manifest.at("n_target_pieces").get<int>();
  for (int p = 0; p < nt; ++p)
    b.model.target_pieces.push_back(load_solution(dir + "/target" + std::to_string(p) + ".vec"));
  const int nd = manifest.at("n_staterhs_pieces").get<int>();
  for (int p = 0; p < nd; ++p)
    b.model.staterhs_pieces.push_back(
        load_solution(dir + "/staterhs" + std::to_string(p) + ".vec"));
  if (manifest.at("has_correction").get<bool>())
    b.model.adjoint_correction = load_solution(dir + "/correction.vec");

  return b;
}

void attach_coefficients(LoadedBundle& bundle, std::vector<CoeffFn> stiffness,
                         std::vector<CoeffFn> target, std::vector<CoeffFn> staterhs) {
  if (stiffness.size() != bundle.model.K_pieces.size())
    throw std::invalid_argument("attach_coefficients: stiffness coefficient count");
  if (target.size() != bundle.model.target_pieces.size())
    throw std::invalid_argument("attach_coefficients: target coefficient count");
  if (staterhs.size() != bundle.model.staterhs_pieces.size())
    throw std::invalid_argument("attach_coefficients: state-rhs coefficient count");
  bundle.local->K_coeffs = std::move(stiffness);
  bundle.local->target_coeffs = std::move(target);
  bundle.local->staterhs_coeffs = std::move(staterhs);
}

}  // namespace lgrom
