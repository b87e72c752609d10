#include "lgrom/grid.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace lgrom {

double FineGrid::element_area(int e) const {
  const auto& t = elements[e];
  const auto a = nodes.row(t[0]);
  const auto b = nodes.row(t[1]);
  const auto c = nodes.row(t[2]);
  return 0.5 * ((b(0) - a(0)) * (c(1) - a(1)) - (c(0) - a(0)) * (b(1) - a(1)));
}

Eigen::Vector2d FineGrid::centroid(int e) const {
  const auto& t = elements[e];
  return (nodes.row(t[0]) + nodes.row(t[1]) + nodes.row(t[2])).transpose() / 3.0;
}

FineGrid build_fine_grid(int nx, int ny) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("build_fine_grid: cell counts must be >= 1");
  FineGrid g;
  g.nx = nx;
  g.ny = ny;
  const int nn = (nx + 1) * (ny + 1);
  g.nodes.resize(nn, 2);
  g.is_boundary.assign(nn, false);
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      const int id = g.node_id(i, j);
      g.nodes(id, 0) = static_cast<double>(i) / nx;
      g.nodes(id, 1) = static_cast<double>(j) / ny;
      if (i == 0 || i == nx || j == 0 || j == ny) {
        g.is_boundary[id] = true;
        g.boundary_nodes.push_back(id);
      }
    }
  }
  g.elements.reserve(2 * nx * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int a = g.node_id(i, j);
      const int b = g.node_id(i + 1, j);
      const int c = g.node_id(i, j + 1);
      const int d = g.node_id(i + 1, j + 1);
      g.elements.push_back({a, b, d});
      g.elements.push_back({a, d, c});
    }
  }
  return g;
}

CoarseGrid build_coarse_grid(const FineGrid& fine, int ncx, int ncy) {
  if (ncx < 1 || ncy < 1) throw std::invalid_argument("build_coarse_grid: cell counts must be >= 1");
  if (fine.nx % ncx != 0 || fine.ny % ncy != 0)
    throw std::invalid_argument("build_coarse_grid: fine grid is not a refinement of the requested coarse grid");
  CoarseGrid c;
  c.ncx = ncx;
  c.ncy = ncy;
  c.rx = fine.nx / ncx;
  c.ry = fine.ny / ncy;
  c.neighborhoods.assign(c.num_nodes(), {});

  // Fine cell (i,j) lies in coarse cell (i/rx, j/ry); its two triangles get
  // attached to every coarse node of the coarse cells sharing that vertex.
  for (int J = 0; J <= ncy; ++J) {
    for (int I = 0; I <= ncx; ++I) {
      auto& omega = c.neighborhoods[c.coarse_node_id(I, J)];
      for (int CJ = J - 1; CJ <= J; ++CJ) {
        for (int CI = I - 1; CI <= I; ++CI) {
          if (CI < 0 || CI >= ncx || CJ < 0 || CJ >= ncy) continue;
          for (int fj = CJ * c.ry; fj < (CJ + 1) * c.ry; ++fj) {
            for (int fi = CI * c.rx; fi < (CI + 1) * c.rx; ++fi) {
              const int cell = fj * fine.nx + fi;
              omega.push_back(2 * cell);
              omega.push_back(2 * cell + 1);
            }
          }
        }
      }
      std::sort(omega.begin(), omega.end());
    }
  }
  return c;
}

PartitionOfUnity partition_of_unity(const CoarseGrid& coarse, const FineGrid& fine) {
  PartitionOfUnity pou;
  pou.chi.resize(coarse.num_nodes());
  const double Hx = 1.0 / coarse.ncx;
  const double Hy = 1.0 / coarse.ncy;
  for (int J = 0; J <= coarse.ncy; ++J) {
    for (int I = 0; I <= coarse.ncx; ++I) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(fine.num_nodes());
      for (int n = 0; n < fine.num_nodes(); ++n) {
        const double tx = 1.0 - std::abs(fine.nodes(n, 0) - I * Hx) / Hx;
        const double ty = 1.0 - std::abs(fine.nodes(n, 1) - J * Hy) / Hy;
        if (tx > 0.0 && ty > 0.0) v(n) = tx * ty;
      }
      pou.chi[coarse.coarse_node_id(I, J)] = std::move(v);
    }
  }
  return pou;
}

NeighborhoodNodes neighborhood_nodes(const FineGrid& fine, const CoarseGrid& coarse, int i) {
  std::set<int> all;
  for (int e : coarse.neighborhoods[i])
    for (int n : fine.elements[e]) all.insert(n);

  // Patch boundary in index space: omega_i is the axis-aligned rectangle of
  // coarse cells around coarse node i, clipped to the domain.
  const int I = i % (coarse.ncx + 1);
  const int J = i / (coarse.ncx + 1);
  const int i0 = std::max(I - 1, 0) * coarse.rx;
  const int i1 = std::min(I + 1, coarse.ncx) * coarse.rx;
  const int j0 = std::max(J - 1, 0) * coarse.ry;
  const int j1 = std::min(J + 1, coarse.ncy) * coarse.ry;

  NeighborhoodNodes out;
  out.all.assign(all.begin(), all.end());
  for (int n : out.all) {
    const int fi = n % (fine.nx + 1);
    const int fj = n / (fine.nx + 1);
    if (fi == i0 || fi == i1 || fj == j0 || fj == j1) out.boundary.push_back(n);
  }
  return out;
}

}  // namespace lgrom
