#pragma once

#include <Eigen/Core>
#include <array>
#include <vector>

namespace lgrom {

/// Structured triangulation of the unit square. Each square cell is split
/// into two right triangles along its (lower-left, upper-right) diagonal.
/// Nodes are ordered lexicographically with x1 running fastest.
struct FineGrid {
  int nx = 0;
  int ny = 0;
  Eigen::Matrix<double, Eigen::Dynamic, 2> nodes;   // N_h x 2 coordinates
  std::vector<std::array<int, 3>> elements;         // N_e node-index triples
  std::vector<int> boundary_nodes;                  // sorted node ids on the boundary
  std::vector<bool> is_boundary;                    // per-node flag

  int num_nodes() const { return static_cast<int>(nodes.rows()); }
  int num_elements() const { return static_cast<int>(elements.size()); }
  int node_id(int i, int j) const { return j * (nx + 1) + i; }
  double hx() const { return 1.0 / nx; }
  double hy() const { return 1.0 / ny; }
  double element_area(int e) const;
  /// Centroid of element e.
  Eigen::Vector2d centroid(int e) const;
};

/// Coarse mesh over the same unit square; the fine grid must be a nested
/// refinement. A neighborhood omega_i collects all fine elements contained
/// in coarse cells touching coarse node i.
struct CoarseGrid {
  int ncx = 0;
  int ncy = 0;
  int rx = 0;  // nesting factor per axis: nx = ncx * rx
  int ry = 0;
  std::vector<std::vector<int>> neighborhoods;  // per coarse node: fine element ids

  int num_nodes() const { return (ncx + 1) * (ncy + 1); }
  int coarse_node_id(int I, int J) const { return J * (ncx + 1) + I; }
  double H() const { return 1.0 / ncx; }
};

/// Coarse bilinear hat functions evaluated at fine nodes. chi[i] is a
/// full-length fine-nodal vector supported on omega_i.
struct PartitionOfUnity {
  std::vector<Eigen::VectorXd> chi;
};

FineGrid build_fine_grid(int nx, int ny);
CoarseGrid build_coarse_grid(const FineGrid& fine, int ncx, int ncy);
PartitionOfUnity partition_of_unity(const CoarseGrid& coarse, const FineGrid& fine);

/// Fine nodes lying in the closure of omega_i, and those on its boundary
/// (the boundary of the neighborhood patch, not of the domain).
struct NeighborhoodNodes {
  std::vector<int> all;       // fine node ids in omega_i, sorted
  std::vector<int> boundary;  // subset on the patch boundary, sorted
};
NeighborhoodNodes neighborhood_nodes(const FineGrid& fine, const CoarseGrid& coarse, int i);

}  // namespace lgrom
