#include <doctest.h>

#include "lgrom/grid.hpp"

using namespace lgrom;

TEST_CASE("fine grid counts") {
  const FineGrid tiny = build_fine_grid(1, 1);
  CHECK(tiny.num_nodes() == 4);
  CHECK(tiny.num_elements() == 2);

  const FineGrid paper = build_fine_grid(120, 120);
  CHECK(paper.num_nodes() == 14641);
  CHECK(paper.num_elements() == 28800);

  const FineGrid paper2 = build_fine_grid(100, 100);
  CHECK(paper2.num_nodes() == 10201);

  CHECK_THROWS_AS(build_fine_grid(0, 4), std::invalid_argument);
}

TEST_CASE("fine grid geometry") {
  const FineGrid g = build_fine_grid(4, 4);
  double total = 0.0;
  for (int e = 0; e < g.num_elements(); ++e) {
    CHECK(g.element_area(e) > 0.0);
    total += g.element_area(e);
  }
  CHECK(total == doctest::Approx(1.0));
  // lexicographic ordering, x1 fastest
  CHECK(g.node_id(1, 0) == 1);
  CHECK(g.node_id(0, 1) == 5);
  CHECK(g.nodes(g.node_id(2, 3), 0) == doctest::Approx(0.5));
  CHECK(g.nodes(g.node_id(2, 3), 1) == doctest::Approx(0.75));
  CHECK(static_cast<int>(g.boundary_nodes.size()) == 16);
}

TEST_CASE("coarse grid nesting") {
  const FineGrid f = build_fine_grid(10, 10);
  const CoarseGrid c = build_coarse_grid(f, 5, 5);
  CHECK(c.num_nodes() == 36);
  CHECK(c.rx == 2);

  CHECK_THROWS_AS(build_coarse_grid(f, 3, 3), std::invalid_argument);

  const FineGrid f2 = build_fine_grid(120, 120);
  const CoarseGrid c2 = build_coarse_grid(f2, 10, 10);
  // interior neighborhood spans 4 coarse cells of 12x12 fine cells, 2 triangles each
  CHECK(static_cast<int>(c2.neighborhoods[c2.coarse_node_id(5, 5)].size()) == 4 * 2 * 12 * 12);
  // corner neighborhood spans a single coarse cell
  CHECK(static_cast<int>(c2.neighborhoods[c2.coarse_node_id(0, 0)].size()) == 2 * 12 * 12);
}

TEST_CASE("partition of unity") {
  const FineGrid f = build_fine_grid(16, 16);
  const CoarseGrid c = build_coarse_grid(f, 4, 4);
  const PartitionOfUnity pou = partition_of_unity(c, f);
  REQUIRE(static_cast<int>(pou.chi.size()) == c.num_nodes());

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(f.num_nodes());
  for (const auto& chi : pou.chi) sum += chi;
  CHECK((sum.array() - 1.0).abs().maxCoeff() < 1e-14);

  // nodal delta property at coarse nodes
  for (int J = 0; J <= 4; ++J)
    for (int I = 0; I <= 4; ++I) {
      const int fine_id = f.node_id(I * c.rx, J * c.ry);
      for (int J2 = 0; J2 <= 4; ++J2)
        for (int I2 = 0; I2 <= 4; ++I2) {
          const double expect = (I == I2 && J == J2) ? 1.0 : 0.0;
          CHECK(pou.chi[c.coarse_node_id(I2, J2)](fine_id) == doctest::Approx(expect));
        }
    }

  // midpoint of a coarse edge adjacent to the node carries value 0.5
  const int mid = f.node_id(c.rx + c.rx / 2, c.ry);  // halfway between coarse nodes (1,1),(2,1)
  CHECK(pou.chi[c.coarse_node_id(1, 1)](mid) == doctest::Approx(0.5));
  CHECK(pou.chi[c.coarse_node_id(2, 1)](mid) == doctest::Approx(0.5));
}

TEST_CASE("neighborhood nodes") {
  const FineGrid f = build_fine_grid(10, 10);
  const CoarseGrid c = build_coarse_grid(f, 5, 5);
  const NeighborhoodNodes nn = neighborhood_nodes(f, c, c.coarse_node_id(2, 2));
  // interior patch spans fine index range [2,6]x[2,6] -> 25 nodes, 16 on its boundary
  CHECK(static_cast<int>(nn.all.size()) == 25);
  CHECK(static_cast<int>(nn.boundary.size()) == 16);
}
