#include "admmrate/error.hpp"
#include "admmrate/random.hpp"
#include "admmrate/topology.hpp"

#include <doctest.h>

using namespace admmrate;

TEST_SUITE("topology") {
  TEST_CASE("component structure bookkeeping") {
    // Three overlapping clusters on five agents.
    const ComponentStructure cs(5, 1, {{1, 2, 3}, {3, 4}, {4, 5, 1}});
    CHECK(cs.n_components() == 3);
    CHECK(cs.total_size() == 8);
    CHECK(cs.block_offset(1) == 3);
    CHECK(cs.row_agent() == std::vector<int>{0, 1, 2, 2, 3, 3, 4, 0});
    CHECK(cs.memberships(0) == std::vector<int>{0, 2});
    CHECK(cs.memberships(2) == std::vector<int>{0, 1});
    CHECK_FALSE(cs.is_edge_clustering());
    CHECK(validate(cs).ok());
  }

  TEST_CASE("construction rejects malformed components") {
    CHECK_THROWS_AS(ComponentStructure(3, 1, {{1}}), InvalidTopology);
    CHECK_THROWS_AS(ComponentStructure(3, 1, {{1, 4}}), InvalidTopology);
    CHECK_THROWS_AS(ComponentStructure(3, 1, {{1, 1}}), InvalidTopology);
    CHECK_THROWS_AS(ComponentStructure(3, 0, {{1, 2}}), InvalidTopology);
    CHECK_THROWS_AS(from_edges({{1, 1}}, 2), InvalidTopology);
    CHECK_THROWS_AS(from_edges({{1, 2}, {2, 1}}, 2), InvalidTopology);
    CHECK_THROWS_AS(ring(2), InvalidTopology);
    CHECK_THROWS_AS(centralized(1), InvalidTopology);
  }

  TEST_CASE("validation reports coverage and connectivity") {
    const ComponentStructure uncovered(4, 1, {{1, 2}, {2, 3}});
    auto r = validate(uncovered);
    CHECK_FALSE(r.covered);
    CHECK(r.uncovered_agents == std::vector<int>{4});

    const ComponentStructure split(4, 1, {{1, 2}, {3, 4}});
    r = validate(split);
    CHECK(r.covered);
    CHECK_FALSE(r.connected);
    CHECK(r.graph_pieces == 2);
    CHECK(r.summary().find("DISCONNECTED") != std::string::npos);
  }

  TEST_CASE("ring selection matrix matches the displayed layout") {
    const auto cs = ring(4);
    const DenseMatrix S = selection_matrix(cs);
    DenseMatrix expected(8, 4);
    expected << 1, 0, 0, 0,  //
        0, 1, 0, 0,          //
        0, 1, 0, 0,          //
        0, 0, 1, 0,          //
        0, 0, 1, 0,          //
        0, 0, 0, 1,          //
        0, 0, 0, 1,          //
        1, 0, 0, 0;
    CHECK(S == expected);
    CHECK(cs.is_edge_clustering());
  }

  TEST_CASE("mixing matrices of a centralized network") {
    const auto mm = mixing_matrices(centralized(3, 2));
    CHECK(mm.S.isApprox(DenseMatrix::Identity(3, 3)));
    CHECK(mm.M.isApprox(DenseMatrix::Identity(6, 6)));
    CHECK(mm.Pi.isApprox(DenseMatrix::Constant(3, 3, 1.0 / 3.0)));
    CHECK((mm.P * mm.P - mm.P).norm() < 1e-15);
  }

  TEST_CASE("selection-matrix identities on random structures") {
    Rng rng(101);
    int checked = 0;
    for (int trial = 0; trial < 60; ++trial) {
      const int N = 3 + trial % 10;
      const int L = 1 + static_cast<int>(rng.uniform() * N);
      std::vector<std::vector<int>> comps;
      for (int l = 0; l < L; ++l) {
        std::vector<int> members;
        for (int n = 1; n <= N; ++n) {
          if (rng.uniform() < 0.4) members.push_back(n);
        }
        if (members.size() >= 2) comps.push_back(members);
      }
      if (comps.empty()) continue;
      const ComponentStructure cs(N, 1, comps);
      const auto mm = mixing_matrices(cs);
      const Vector ones_n = Vector::Ones(N);
      CHECK(mm.S * ones_n == Vector::Ones(cs.total_size()));
      CHECK((mm.S * ones_n - block_average(cs, mm.S * ones_n)).cwiseAbs().maxCoeff() == 0.0);
      CHECK((block_average(cs, mm.S * ones_n) - mm.Pi * mm.S * ones_n).norm() <= 1e-15 * N);
      if (!validate(cs).ok()) continue;
      ++checked;
      CHECK(linalg::rank(mm.S) == N);
      DenseMatrix both(cs.total_size(), N + cs.total_size());
      both << mm.S, mm.Pi;
      const int intersection = linalg::rank(mm.S) + linalg::rank(mm.Pi) - linalg::rank(both);
      CHECK(intersection == 1);
    }
    CHECK(checked > 5);
  }

  TEST_CASE("random geometric graphs are reproducible and connected") {
    const auto a = random_geometric_graph(15, 0.5, 7);
    const auto b = random_geometric_graph(15, 0.5, 7);
    CHECK(a.edges == b.edges);
    CHECK(a.seed == b.seed);
    CHECK(is_connected(a.edges, 15));
    for (auto [i, j] : a.edges) {
      const double dx = a.points[i - 1][0] - a.points[j - 1][0];
      const double dy = a.points[i - 1][1] - a.points[j - 1][1];
      CHECK(std::hypot(dx, dy) <= 0.5);
    }
    const auto full = random_geometric_graph(6, std::sqrt(2.0), 1);
    CHECK(full.edges.size() == 15);
    CHECK(full.attempts == 1);
  }

  TEST_CASE("geometric graph errors") {
    CHECK_THROWS_AS(random_geometric_graph(10, 0.0, 1), InvalidTopology);
    CHECK_THROWS_AS(random_geometric_graph(10, 1.5, 1), InvalidTopology);
    CHECK_THROWS_AS(random_geometric_graph(30, 0.01, 1, 3), NotConnected);
  }

  TEST_CASE("JSON round trips") {
    const ComponentStructure cs(4, 2, {{1, 2, 3}, {3, 4}});
    const auto back = component_structure_from_json(to_json(cs));
    CHECK(back.components() == cs.components());
    CHECK(back.dim() == 2);
    CHECK_THROWS_AS(component_structure_from_json(nlohmann::json{{"n_agents", 2}}),
                    InvalidTopology);

    const auto g = random_geometric_graph(8, 0.8, 3);
    const auto g2 = geometric_graph_from_json(to_json(g));
    CHECK(g2.edges == g.edges);
    CHECK(g2.points == g.points);
    CHECK(g2.seed == g.seed);
  }
}
