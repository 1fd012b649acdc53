#include "admmrate/topology.hpp"

#include "admmrate/error.hpp"
#include "admmrate/random.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

namespace admmrate {

ComponentStructure::ComponentStructure(int n_agents, int dim,
                                       std::vector<std::vector<int>> components)
    : n_agents_(n_agents), dim_(dim), components_(std::move(components)) {
  if (n_agents_ < 1) throw InvalidTopology("n_agents must be positive");
  if (dim_ < 1) throw InvalidTopology("dim must be positive");
  if (components_.empty()) throw InvalidTopology("at least one component is required");

  memberships_.assign(n_agents_, {});
  int offset = 0;
  for (std::size_t l = 0; l < components_.size(); ++l) {
    const auto& members = components_[l];
    if (members.size() < 2) {
      throw InvalidTopology("component " + std::to_string(l + 1) +
                            " has fewer than two agents");
    }
    std::set<int> seen;
    for (int agent : members) {
      if (agent < 1 || agent > n_agents_) {
        throw InvalidTopology("component " + std::to_string(l + 1) +
                              " references agent " + std::to_string(agent) +
                              " outside [1, " + std::to_string(n_agents_) + "]");
      }
      if (!seen.insert(agent).second) {
        throw InvalidTopology("component " + std::to_string(l + 1) + " repeats agent " +
                              std::to_string(agent));
      }
      row_agent_.push_back(agent - 1);
      memberships_[agent - 1].push_back(static_cast<int>(l));
    }
    block_offset_.push_back(offset);
    offset += static_cast<int>(members.size());
  }
}

bool ComponentStructure::is_edge_clustering() const {
  std::set<std::pair<int, int>> pairs;
  for (const auto& c : components_) {
    if (c.size() != 2) return false;
    if (!pairs.insert(std::minmax(c[0], c[1])).second) return false;
  }
  return true;
}

std::string ValidationReport::summary() const {
  std::ostringstream out;
  out << "coverage: " << (covered ? "ok" : "FAILED");
  if (!uncovered_agents.empty()) {
    out << " (uncovered agents:";
    for (int a : uncovered_agents) out << ' ' << a;
    out << ')';
  }
  out << "; component graph: " << (connected ? "connected" : "DISCONNECTED") << " ("
      << graph_pieces << (graph_pieces == 1 ? " piece)" : " pieces)");
  return out.str();
}

std::vector<std::pair<int, int>> component_graph_edges(const ComponentStructure& cs) {
  std::set<std::pair<int, int>> edges;
  for (int n = 0; n < cs.n_agents(); ++n) {
    const auto& sigma = cs.memberships(n);
    for (std::size_t i = 0; i < sigma.size(); ++i) {
      for (std::size_t j = i + 1; j < sigma.size(); ++j) {
        edges.insert(std::minmax(sigma[i], sigma[j]));
      }
    }
  }
  return {edges.begin(), edges.end()};
}

ValidationReport validate(const ComponentStructure& cs) {
  ValidationReport report;
  for (int n = 0; n < cs.n_agents(); ++n) {
    if (cs.memberships(n).empty()) report.uncovered_agents.push_back(n + 1);
  }
  report.covered = report.uncovered_agents.empty();

  const int L = cs.n_components();
  std::vector<std::vector<int>> adjacency(L);
  for (auto [l, m] : component_graph_edges(cs)) {
    adjacency[l].push_back(m);
    adjacency[m].push_back(l);
  }
  std::vector<bool> seen(L, false);
  for (int start = 0; start < L; ++start) {
    if (seen[start]) continue;
    ++report.graph_pieces;
    std::queue<int> frontier;
    frontier.push(start);
    seen[start] = true;
    while (!frontier.empty()) {
      const int l = frontier.front();
      frontier.pop();
      for (int m : adjacency[l]) {
        if (!seen[m]) {
          seen[m] = true;
          frontier.push(m);
        }
      }
    }
  }
  report.connected = report.graph_pieces == 1;
  return report;
}

DenseMatrix selection_matrix(const ComponentStructure& cs) {
  DenseMatrix S = DenseMatrix::Zero(cs.total_size(), cs.n_agents());
  const auto& rows = cs.row_agent();
  for (std::size_t i = 0; i < rows.size(); ++i) S(i, rows[i]) = 1.0;
  return S;
}

MixingMatrices mixing_matrices(const ComponentStructure& cs) {
  MixingMatrices mm;
  mm.S = selection_matrix(cs);
  const DenseMatrix eye_k = DenseMatrix::Identity(cs.dim(), cs.dim());
  mm.M = linalg::kron(mm.S, eye_k);
  mm.Pi = DenseMatrix::Zero(cs.total_size(), cs.total_size());
  for (int l = 0; l < cs.n_components(); ++l) {
    const int size = cs.component_size(l);
    mm.Pi.block(cs.block_offset(l), cs.block_offset(l), size, size).setConstant(1.0 / size);
  }
  mm.P = linalg::kron(mm.Pi, eye_k);
  return mm;
}

Vector block_average(const ComponentStructure& cs, const Vector& v) {
  const int K = cs.dim();
  if (v.size() != static_cast<Eigen::Index>(cs.total_size()) * K) {
    throw std::invalid_argument("block_average: vector has the wrong size");
  }
  Vector out(v.size());
  for (int l = 0; l < cs.n_components(); ++l) {
    const int size = cs.component_size(l);
    const int first = cs.block_offset(l) * K;
    Vector sum = Vector::Zero(K);
    for (int i = 0; i < size; ++i) sum += v.segment(first + i * K, K);
    sum /= size;
    for (int i = 0; i < size; ++i) out.segment(first + i * K, K) = sum;
  }
  return out;
}

ComponentStructure centralized(int n_agents, int dim) {
  if (n_agents < 2) throw InvalidTopology("centralized network needs at least two agents");
  std::vector<int> all(n_agents);
  for (int n = 0; n < n_agents; ++n) all[n] = n + 1;
  return ComponentStructure(n_agents, dim, {all});
}

ComponentStructure ring(int n_agents, int dim) {
  if (n_agents < 3) throw InvalidTopology("ring needs at least three agents");
  std::vector<std::vector<int>> components;
  for (int l = 1; l < n_agents; ++l) components.push_back({l, l + 1});
  components.push_back({n_agents, 1});
  return ComponentStructure(n_agents, dim, std::move(components));
}

ComponentStructure from_edges(const EdgeList& edges, int n_agents, int dim) {
  std::set<std::pair<int, int>> seen;
  std::vector<std::vector<int>> components;
  for (auto [a, b] : edges) {
    if (a == b) throw InvalidTopology("self loop at agent " + std::to_string(a));
    const auto e = std::minmax(a, b);
    if (!seen.insert(e).second) {
      throw InvalidTopology("repeated edge {" + std::to_string(e.first) + ", " +
                            std::to_string(e.second) + "}");
    }
    components.push_back({e.first, e.second});
  }
  return ComponentStructure(n_agents, dim, std::move(components));
}

bool is_connected(const EdgeList& edges, int n_agents) {
  if (n_agents <= 1) return true;
  std::vector<std::vector<int>> adjacency(n_agents);
  for (auto [a, b] : edges) {
    adjacency[a - 1].push_back(b - 1);
    adjacency[b - 1].push_back(a - 1);
  }
  std::vector<bool> seen(n_agents, false);
  std::vector<int> stack{0};
  seen[0] = true;
  int reached = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : adjacency[v]) {
      if (!seen[w]) {
        seen[w] = true;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  return reached == n_agents;
}

namespace {

GeometricGraph sample_geometric_graph(int n_agents, double radius, std::uint64_t seed) {
  GeometricGraph g;
  g.seed = seed;
  g.radius = radius;
  Rng rng(seed);
  g.points.resize(n_agents);
  for (auto& p : g.points) {
    p[0] = rng.uniform();
    p[1] = rng.uniform();
  }
  for (int i = 0; i < n_agents; ++i) {
    for (int j = i + 1; j < n_agents; ++j) {
      const double dx = g.points[i][0] - g.points[j][0];
      const double dy = g.points[i][1] - g.points[j][1];
      if (std::hypot(dx, dy) <= radius) g.edges.emplace_back(i + 1, j + 1);
    }
  }
  return g;
}

}  // namespace

GeometricGraph random_geometric_graph(int n_agents, double radius, std::uint64_t seed,
                                      int max_retries) {
  if (n_agents < 2) throw InvalidTopology("random geometric graph needs at least two agents");
  if (!(radius > 0.0) || radius > std::sqrt(2.0)) {
    throw InvalidTopology("radius must lie in (0, sqrt(2)]");
  }
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    GeometricGraph g = sample_geometric_graph(n_agents, radius, seed + attempt);
    if (is_connected(g.edges, n_agents)) {
      g.attempts = attempt + 1;
      return g;
    }
  }
  throw NotConnected("no connected geometric graph with N=" + std::to_string(n_agents) +
                     ", radius=" + std::to_string(radius) + " for seeds " +
                     std::to_string(seed) + ".." + std::to_string(seed + max_retries));
}

nlohmann::json to_json(const ComponentStructure& cs) {
  return {{"n_agents", cs.n_agents()}, {"dim", cs.dim()}, {"components", cs.components()}};
}

ComponentStructure component_structure_from_json(const nlohmann::json& j) {
  try {
    return ComponentStructure(j.at("n_agents").get<int>(), j.value("dim", 1),
                              j.at("components").get<std::vector<std::vector<int>>>());
  } catch (const nlohmann::json::exception& e) {
    throw InvalidTopology(std::string("malformed topology JSON: ") + e.what());
  }
}

nlohmann::json to_json(const GeometricGraph& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (auto [a, b] : g.edges) edges.push_back({a, b});
  return {{"seed", g.seed}, {"radius", g.radius}, {"points", g.points}, {"edges", edges}};
}

GeometricGraph geometric_graph_from_json(const nlohmann::json& j) {
  try {
    GeometricGraph g;
    g.seed = j.at("seed").get<std::uint64_t>();
    g.radius = j.at("radius").get<double>();
    g.points = j.at("points").get<std::vector<std::array<double, 2>>>();
    for (const auto& e : j.at("edges")) g.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    g.attempts = 1;
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidTopology(std::string("malformed geometric graph JSON: ") + e.what());
  }
}

}  // namespace admmrate
