#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qwalk/rng.hpp"

namespace qwalk {

// Undirected connected simple graph with a designated initial and target vertex.
//
// Vertices are 0-based in the library API. The conventional labeling puts the
// walker's start at vertex 0 and the target at vertex 1 (labels 1 and 2 in files
// and on the command line).
class Graph {
 public:
  // adjacency is row-major n*n with entries in {0, 1}. Throws InvalidArgument unless
  // the matrix is symmetric, zero-diagonal and connected, n >= 3, and init != target.
  Graph(int n, std::vector<std::uint8_t> adjacency, int init = 0, int target = 1);

  static Graph from_edges(int n, std::span<const std::pair<int, int>> edges, int init = 0,
                          int target = 1);

  int size() const { return n_; }
  int init() const { return init_; }
  int target() const { return target_; }

  bool adjacent(int u, int v) const { return adjacency_[static_cast<std::size_t>(u * n_ + v)] != 0; }
  int degree(int v) const;
  int edge_count() const;
  // Edges as (u, v) with u < v, in row-major order.
  std::vector<std::pair<int, int>> edges() const;

  std::span<const std::uint8_t> adjacency() const { return adjacency_; }
  Eigen::MatrixXd adjacency_matrix() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  int n_;
  std::vector<std::uint8_t> adjacency_;
  int init_;
  int target_;
};

bool is_connected(int n, std::span<const std::uint8_t> adjacency);

// Path graph visiting the vertices in the order given by labeling, a permutation of
// [0, n). init = 0, target = 1 regardless of where they sit on the path.
Graph line_graph(std::span<const int> labeling);

// One path graph per equivalence class under reversal of the labeling: n!/2 graphs,
// in lexicographic order of the canonical labeling (first element < last).
std::vector<Graph> enumerate_line_graphs(int n);

// Draws m uniformly from [n-1, n(n-1)/2], then a uniform m-edge set, resampling the
// edge set (same m) until the graph is connected.
Graph random_graph(int n, std::uint64_t seed);

// Uniform over connected graphs with exactly m edges (rejection sampling).
Graph random_graph_with_edges(int n, int m, Rng& rng);

// Classical walk on G^c: column-stochastic transition matrix where the target column
// is replaced by the target unit vector, so the walker cannot leave the target.
struct ClassicalSystem {
  Eigen::MatrixXd transition;
  int init = 0;
  int target = 1;

  int size() const { return static_cast<int>(transition.rows()); }
  Eigen::MatrixXd generator() const;
};

// Quantum walk on G^q: the adjacency matrix padded with an isolated sink vertex at
// index n. The jump operator |sink><target| is implicit in (target, sink, decay_rate).
struct QuantumSystem {
  Eigen::MatrixXd hamiltonian;
  double decay_rate = 1.0;
  int init = 0;
  int target = 1;
  int sink = 0;

  int dimension() const { return static_cast<int>(hamiltonian.rows()); }
};

ClassicalSystem classical_variant(const Graph& g);
QuantumSystem quantum_variant(const Graph& g, double decay_rate = 1.0);

// Relabels vertex v as perm[v]. perm must fix init and target.
Graph permute_free_vertices(const Graph& g, std::span<const int> perm);

}  // namespace qwalk
