#include "qwalk/graph.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "qwalk/error.hpp"

namespace qwalk {

namespace {

void require_permutation(std::span<const int> perm, int n) {
  if (static_cast<int>(perm.size()) != n) {
    throw InvalidArgument("permutation has " + std::to_string(perm.size()) + " entries, expected " +
                          std::to_string(n));
  }
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (int v : perm) {
    if (v < 0 || v >= n || seen[static_cast<std::size_t>(v)]) {
      throw InvalidArgument("not a permutation of [0, " + std::to_string(n) + ")");
    }
    seen[static_cast<std::size_t>(v)] = true;
  }
}

}  // namespace

Graph::Graph(int n, std::vector<std::uint8_t> adjacency, int init, int target)
    : n_(n), adjacency_(std::move(adjacency)), init_(init), target_(target) {
  if (n_ < 3) throw InvalidArgument("graphs need at least 3 vertices, got " + std::to_string(n_));
  if (adjacency_.size() != static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_)) {
    throw InvalidArgument("adjacency size does not match n*n");
  }
  if (init_ < 0 || init_ >= n_ || target_ < 0 || target_ >= n_ || init_ == target_) {
    throw InvalidArgument("initial and target vertices must be distinct and in range");
  }
  for (int i = 0; i < n_; ++i) {
    if (adjacent(i, i)) throw InvalidArgument("self-loop at vertex " + std::to_string(i + 1));
    for (int j = 0; j < n_; ++j) {
      const auto a = adjacency_[static_cast<std::size_t>(i * n_ + j)];
      if (a > 1) throw InvalidArgument("adjacency entries must be 0 or 1");
      if (a != adjacency_[static_cast<std::size_t>(j * n_ + i)]) {
        throw InvalidArgument("adjacency is not symmetric at (" + std::to_string(i + 1) + ", " +
                              std::to_string(j + 1) + ")");
      }
    }
  }
  if (!is_connected(n_, adjacency_)) throw InvalidArgument("graph is not connected");
}

Graph Graph::from_edges(int n, std::span<const std::pair<int, int>> edges, int init, int target) {
  if (n < 0) throw InvalidArgument("negative vertex count");
  std::vector<std::uint8_t> adj(static_cast<std::size_t>(n * n), 0);
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n) throw InvalidArgument("edge endpoint out of range");
    adj[static_cast<std::size_t>(u * n + v)] = 1;
    adj[static_cast<std::size_t>(v * n + u)] = 1;
  }
  return Graph(n, std::move(adj), init, target);
}

int Graph::degree(int v) const {
  int d = 0;
  for (int u = 0; u < n_; ++u) d += adjacent(v, u) ? 1 : 0;
  return d;
}

int Graph::edge_count() const {
  return static_cast<int>(std::count(adjacency_.begin(), adjacency_.end(), 1)) / 2;
}

std::vector<std::pair<int, int>> Graph::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int u = 0; u < n_; ++u)
    for (int v = u + 1; v < n_; ++v)
      if (adjacent(u, v)) out.emplace_back(u, v);
  return out;
}

Eigen::MatrixXd Graph::adjacency_matrix() const {
  Eigen::MatrixXd a(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) a(i, j) = adjacent(i, j) ? 1.0 : 0.0;
  return a;
}

bool is_connected(int n, std::span<const std::uint8_t> adjacency) {
  if (n <= 0) return false;
  std::vector<int> stack{0};
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  seen[0] = true;
  int reached = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v = 0; v < n; ++v) {
      if (adjacency[static_cast<std::size_t>(u * n + v)] && !seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = true;
        ++reached;
        stack.push_back(v);
      }
    }
  }
  return reached == n;
}

Graph line_graph(std::span<const int> labeling) {
  const int n = static_cast<int>(labeling.size());
  if (n < 3) throw InvalidArgument("line graphs need at least 3 vertices");
  require_permutation(labeling, n);
  std::vector<std::pair<int, int>> edges;
  for (int k = 0; k + 1 < n; ++k) edges.emplace_back(labeling[k], labeling[k + 1]);
  return Graph::from_edges(n, edges);
}

std::vector<Graph> enumerate_line_graphs(int n) {
  if (n < 3 || n > 12) throw InvalidArgument("line graph enumeration supports 3 <= n <= 12");
  std::vector<int> labeling(static_cast<std::size_t>(n));
  std::iota(labeling.begin(), labeling.end(), 0);
  std::vector<Graph> out;
  do {
    if (labeling.front() < labeling.back()) out.push_back(line_graph(labeling));
  } while (std::next_permutation(labeling.begin(), labeling.end()));
  return out;
}

Graph random_graph_with_edges(int n, int m, Rng& rng) {
  const int pairs = n * (n - 1) / 2;
  if (n < 3) throw InvalidArgument("random graphs need at least 3 vertices");
  if (m < n - 1 || m > pairs) throw InvalidArgument("edge count cannot give a connected graph");
  std::vector<std::pair<int, int>> all;
  all.reserve(static_cast<std::size_t>(pairs));
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) all.emplace_back(u, v);

  std::vector<std::uint8_t> adj(static_cast<std::size_t>(n * n));
  for (;;) {
    // Partial Fisher-Yates: the first m slots are a uniform m-subset.
    for (int k = 0; k < m; ++k) {
      const auto j = static_cast<std::size_t>(k) +
                     static_cast<std::size_t>(uniform_below(rng, static_cast<std::uint64_t>(pairs - k)));
      std::swap(all[static_cast<std::size_t>(k)], all[j]);
    }
    std::fill(adj.begin(), adj.end(), 0);
    for (int k = 0; k < m; ++k) {
      auto [u, v] = all[static_cast<std::size_t>(k)];
      adj[static_cast<std::size_t>(u * n + v)] = 1;
      adj[static_cast<std::size_t>(v * n + u)] = 1;
    }
    if (is_connected(n, adj)) return Graph(n, adj);
  }
}

Graph random_graph(int n, std::uint64_t seed) {
  if (n < 3) throw InvalidArgument("random graphs need at least 3 vertices");
  Rng rng(seed);
  const int m = static_cast<int>(uniform_int(rng, n - 1, n * (n - 1) / 2));
  return random_graph_with_edges(n, m, rng);
}

Eigen::MatrixXd ClassicalSystem::generator() const {
  return transition - Eigen::MatrixXd::Identity(transition.rows(), transition.cols());
}

ClassicalSystem classical_variant(const Graph& g) {
  const int n = g.size();
  ClassicalSystem sys;
  sys.init = g.init();
  sys.target = g.target();
  sys.transition = Eigen::MatrixXd::Zero(n, n);
  for (int u = 0; u < n; ++u) {
    if (u == g.target()) {
      sys.transition(u, u) = 1.0;
      continue;
    }
    const int d = g.degree(u);
    if (d == 0) throw InvalidArgument("vertex " + std::to_string(u + 1) + " is isolated");
    for (int v = 0; v < n; ++v)
      if (g.adjacent(v, u)) sys.transition(v, u) = 1.0 / d;
  }
  return sys;
}

QuantumSystem quantum_variant(const Graph& g, double decay_rate) {
  const int n = g.size();
  QuantumSystem sys;
  sys.hamiltonian = Eigen::MatrixXd::Zero(n + 1, n + 1);
  sys.hamiltonian.topLeftCorner(n, n) = g.adjacency_matrix();
  sys.decay_rate = decay_rate;
  sys.init = g.init();
  sys.target = g.target();
  sys.sink = n;
  return sys;
}

Graph permute_free_vertices(const Graph& g, std::span<const int> perm) {
  const int n = g.size();
  require_permutation(perm, n);
  if (perm[static_cast<std::size_t>(g.init())] != g.init() ||
      perm[static_cast<std::size_t>(g.target())] != g.target()) {
    throw InvalidArgument("permutation must fix the initial and target vertices");
  }
  std::vector<std::uint8_t> adj(static_cast<std::size_t>(n * n), 0);
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      adj[static_cast<std::size_t>(perm[static_cast<std::size_t>(u)] * n +
                                   perm[static_cast<std::size_t>(v)])] = g.adjacent(u, v) ? 1 : 0;
  return Graph(n, std::move(adj), g.init(), g.target());
}

}  // namespace qwalk
