#pragma once

#include "admmrate/linalg.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace admmrate {

/// Undirected edge between two agents, 1-based.
using Edge = std::pair<int, int>;
using EdgeList = std::vector<Edge>;

/// Agents {1..N} and the collection of components A_1..A_L over which the
/// consensus constraint is split.
///
/// Agent indices are 1-based in the public interface. Each component keeps
/// the member order it was constructed with; that order fixes the row order
/// of the corresponding block of the selection matrix.
class ComponentStructure {
 public:
  /// Throws InvalidTopology if a component has fewer than two members,
  /// repeats an agent, or references an agent outside [1, n_agents].
  ComponentStructure(int n_agents, int dim, std::vector<std::vector<int>> components);

  int n_agents() const { return n_agents_; }
  int dim() const { return dim_; }
  int n_components() const { return static_cast<int>(components_.size()); }
  /// T = sum of component sizes.
  int total_size() const { return static_cast<int>(row_agent_.size()); }

  const std::vector<std::vector<int>>& components() const { return components_; }
  int component_size(int l) const { return static_cast<int>(components_[l].size()); }
  /// First row of component l (0-based) in the stacked T-dimensional space.
  int block_offset(int l) const { return block_offset_[l]; }
  /// 0-based agent owning each of the T rows.
  const std::vector<int>& row_agent() const { return row_agent_; }
  /// sigma(n): 0-based indices of the components containing 0-based agent n.
  const std::vector<int>& memberships(int agent) const { return memberships_[agent]; }

  /// True when every component is a pair and no pair repeats, i.e. the
  /// structure was obtained by turning the edges of a simple graph into
  /// components.
  bool is_edge_clustering() const;

 private:
  int n_agents_;
  int dim_;
  std::vector<std::vector<int>> components_;
  std::vector<int> block_offset_;
  std::vector<int> row_agent_;
  std::vector<std::vector<int>> memberships_;
};

struct ValidationReport {
  bool covered = false;    ///< every agent belongs to some component
  bool connected = false;  ///< the component graph is connected
  std::vector<int> uncovered_agents;  ///< 1-based
  int graph_pieces = 0;  ///< connected pieces of the component graph

  bool ok() const { return covered && connected; }
  std::string summary() const;
};

ValidationReport validate(const ComponentStructure& cs);

/// Edges {l, m} (0-based) of the component graph: A_l and A_m intersect.
std::vector<std::pair<int, int>> component_graph_edges(const ComponentStructure& cs);

/// The T x N selection matrix S.
DenseMatrix selection_matrix(const ComponentStructure& cs);

struct MixingMatrices {
  DenseMatrix S;   ///< T x N
  DenseMatrix M;   ///< TK x NK, S kron I_K
  DenseMatrix Pi;  ///< T x T block-diagonal averaging projector
  DenseMatrix P;   ///< TK x TK, Pi kron I_K
};

MixingMatrices mixing_matrices(const ComponentStructure& cs);

/// P v without forming P: each component block of the TK vector is replaced
/// by its mean (sum, then divide), so constant blocks are reproduced exactly.
Vector block_average(const ComponentStructure& cs, const Vector& v);

/// Single component holding every agent.
ComponentStructure centralized(int n_agents, int dim = 1);

/// Ring: A_l = (l, l+1) for l < N and A_N = (N, 1), in that row order.
ComponentStructure ring(int n_agents, int dim = 1);

/// One two-agent component per edge, members in ascending order.
/// Throws InvalidTopology on self loops or repeated edges.
ComponentStructure from_edges(const EdgeList& edges, int n_agents, int dim = 1);

struct GeometricGraph {
  std::uint64_t seed = 0;  ///< seed that produced this (connected) sample
  double radius = 0.0;
  std::vector<std::array<double, 2>> points;
  EdgeList edges;
  int attempts = 0;  ///< samples drawn, including the successful one
};

/// Points uniform on the unit square; an edge joins points at Euclidean
/// distance <= radius. Resamples with seed+1, seed+2, ... until the graph is
/// connected; throws NotConnected after `max_retries` failed resamples.
GeometricGraph random_geometric_graph(int n_agents, double radius, std::uint64_t seed,
                                      int max_retries = 100);

bool is_connected(const EdgeList& edges, int n_agents);

nlohmann::json to_json(const ComponentStructure& cs);
ComponentStructure component_structure_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GeometricGraph& g);
GeometricGraph geometric_graph_from_json(const nlohmann::json& j);

}  // namespace admmrate
