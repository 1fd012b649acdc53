#pragma once

#include "admmrate/objectives.hpp"
#include "admmrate/random.hpp"
#include "admmrate/topology.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace admmrate::testing {

/// Random validated structure: clusters of random sizes laid over a shuffled
/// chain so that coverage and connectivity hold by construction.
inline ComponentStructure random_clusters(Rng& rng, int n_agents, int dim) {
  std::vector<int> order(n_agents);
  std::iota(order.begin(), order.end(), 1);
  for (int i = n_agents - 1; i > 0; --i) {
    std::swap(order[i], order[static_cast<int>(rng.uniform() * (i + 1))]);
  }
  std::vector<std::vector<int>> comps;
  int start = 0;
  while (start < n_agents - 1) {
    const int size = 2 + static_cast<int>(rng.uniform() * 3);
    const int end = std::min(n_agents, start + size);
    comps.emplace_back(order.begin() + start, order.begin() + end);
    start = end - 1;  // consecutive clusters share one agent
  }
  // A few extra random clusters.
  const int extra = static_cast<int>(rng.uniform() * 3);
  for (int e = 0; e < extra; ++e) {
    std::vector<int> members;
    for (int n = 1; n <= n_agents; ++n) {
      if (rng.uniform() < 0.35) members.push_back(n);
    }
    if (members.size() >= 2) comps.push_back(members);
  }
  return ComponentStructure(n_agents, dim, comps);
}

/// Random connected simple graph turned into edge clusters.
inline ComponentStructure random_edges(Rng& rng, int n_agents, int dim) {
  EdgeList edges;
  for (int n = 2; n <= n_agents; ++n) {
    edges.emplace_back(1 + static_cast<int>(rng.uniform() * (n - 1)), n);
  }
  for (int a = 1; a <= n_agents; ++a) {
    for (int b = a + 1; b <= n_agents; ++b) {
      const bool present = std::any_of(edges.begin(), edges.end(), [&](const Edge& e) {
        return std::minmax(e.first, e.second) == std::minmax(a, b);
      });
      if (!present && rng.uniform() < 0.2) edges.emplace_back(a, b);
    }
  }
  return from_edges(edges, n_agents, dim);
}

/// Three clusters on five agents: {1,2}, {4,5}, {2,3,4}.
inline ComponentStructure three_cluster_example(int dim = 1) {
  return ComponentStructure(5, dim, {{1, 2}, {4, 5}, {2, 3, 4}});
}

inline DenseMatrix random_spd(Rng& rng, int dim, double lo, double hi) {
  DenseMatrix b(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) b(i, j) = rng.gaussian(0.0, 1.0);
  }
  Eigen::HouseholderQR<DenseMatrix> qr(b);
  const DenseMatrix q = qr.householderQ();
  Vector w(dim);
  for (int i = 0; i < dim; ++i) w[i] = rng.uniform(lo, hi);
  const DenseMatrix a = q * w.asDiagonal() * q.transpose();
  return 0.5 * (a + a.transpose());
}

/// Quadratics with random positive definite Hessians and random linear terms.
inline ProblemInstance random_quadratics(Rng& rng, int n_agents, int dim) {
  std::vector<Objective> fs;
  for (int n = 0; n < n_agents; ++n) {
    Vector c(dim);
    for (int i = 0; i < dim; ++i) c[i] = rng.gaussian(0.0, 5.0);
    fs.push_back(Objective::quadratic(random_spd(rng, dim, 0.5, 30.0), c));
  }
  return ProblemInstance(fs, dim);
}

inline ProblemInstance random_exponentials(Rng& rng, int n_agents) {
  return sample_experiment_objectives(ExperimentObjectiveKind::Exponential, n_agents,
                                      static_cast<std::uint64_t>(rng.uniform() * 1e9));
}

inline ProblemInstance equal_curvature(int n_agents, double sigma2, int dim = 1) {
  std::vector<Objective> fs;
  for (int n = 0; n < n_agents; ++n) {
    fs.push_back(Objective::quadratic(sigma2 * DenseMatrix::Identity(dim, dim),
                                      Vector::Constant(dim, -sigma2 * (n + 1.0))));
  }
  return ProblemInstance(fs, dim);
}

}  // namespace admmrate::testing
