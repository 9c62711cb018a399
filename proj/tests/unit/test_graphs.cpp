#include "doctest.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "qwalk/error.hpp"
#include "qwalk/graph.hpp"

using namespace qwalk;

namespace {

// All path labelings of [0, n), deduplicated by reversal through an explicit set.
std::set<std::vector<int>> brute_force_line_classes(int n) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::set<std::vector<int>> classes;
  do {
    std::vector<int> rev(perm.rbegin(), perm.rend());
    classes.insert(std::min(perm, rev));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return classes;
}

void check_graph_invariants(const Graph& g) {
  for (int i = 0; i < g.size(); ++i) {
    CHECK_FALSE(g.adjacent(i, i));
    for (int j = 0; j < g.size(); ++j) CHECK(g.adjacent(i, j) == g.adjacent(j, i));
  }
  CHECK(is_connected(g.size(), g.adjacency()));
}

}  // namespace

TEST_CASE("line_graph builds the path in labeling order") {
  const Graph blue = line_graph(std::vector{0, 2, 1});  // 1-3-2
  CHECK(blue.adjacent(0, 2));
  CHECK(blue.adjacent(2, 1));
  CHECK_FALSE(blue.adjacent(0, 1));
  CHECK(blue.init() == 0);
  CHECK(blue.target() == 1);
  CHECK(blue.degree(0) == 1);
  CHECK(blue.degree(1) == 1);

  const Graph adjacent_ends = line_graph(std::vector{2, 0, 1});  // 3-1-2
  CHECK(adjacent_ends.adjacent(0, 1));

  const Graph identity = line_graph(std::vector{0, 1, 2, 3});
  CHECK(identity.edges() == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {2, 3}});
}

TEST_CASE("line_graph rejects invalid labelings") {
  CHECK_THROWS_AS(line_graph(std::vector{0, 0, 1}), InvalidArgument);
  CHECK_THROWS_AS(line_graph(std::vector{0, 1, 3}), InvalidArgument);
  CHECK_THROWS_AS(line_graph(std::vector{0, 1}), InvalidArgument);
}

TEST_CASE("Graph validates its invariants") {
  CHECK_THROWS_AS(Graph(3, {0, 1, 0, 0, 0, 1, 0, 1, 0}), InvalidArgument);  // asymmetric
  CHECK_THROWS_AS(Graph(3, {1, 1, 0, 1, 0, 1, 0, 1, 0}), InvalidArgument);  // self-loop
  CHECK_THROWS_AS(Graph(4, {0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0}), InvalidArgument);
  CHECK_THROWS_AS(Graph(3, {0, 1, 1, 1, 0, 1, 1, 1, 0}, 1, 1), InvalidArgument);
  CHECK_THROWS_AS(Graph(2, {0, 1, 1, 0}), InvalidArgument);
}

TEST_CASE("enumerate_line_graphs counts n!/2 distinct graphs") {
  CHECK(enumerate_line_graphs(3).size() == 3);
  CHECK(enumerate_line_graphs(7).size() == 2520);

  const auto four = enumerate_line_graphs(4);
  CHECK(four.size() == brute_force_line_classes(4).size());
  CHECK(four.size() == 12);

  for (int n = 3; n <= 6; ++n) {
    const auto graphs = enumerate_line_graphs(n);
    std::set<std::vector<std::uint8_t>> distinct;
    for (const auto& g : graphs) {
      distinct.insert(std::vector<std::uint8_t>(g.adjacency().begin(), g.adjacency().end()));
      check_graph_invariants(g);
    }
    CHECK(distinct.size() == graphs.size());
    CHECK(graphs.size() == brute_force_line_classes(n).size());
  }
  CHECK_THROWS_AS(enumerate_line_graphs(2), InvalidArgument);
  CHECK_THROWS_AS(enumerate_line_graphs(13), InvalidArgument);
}

TEST_CASE("random_graph respects the edge range and is deterministic") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Graph g3 = random_graph(3, seed);
    CHECK(g3.edge_count() >= 2);
    CHECK(g3.edge_count() <= 3);
    const Graph g15 = random_graph(15, seed);
    CHECK(g15.edge_count() >= 14);
    CHECK(g15.edge_count() <= 105);
    check_graph_invariants(g15);
  }
  CHECK(random_graph(12, 99) == random_graph(12, 99));
  CHECK_THROWS_AS(random_graph(2, 0), InvalidArgument);
}

TEST_CASE("random_graph_with_edges is uniform over connected graphs") {
  // n = 5, m = 4: the connected graphs are exactly the 5^3 = 125 labeled spanning trees.
  constexpr int kDraws = 10000;
  Rng rng(2024);
  std::map<std::vector<std::uint8_t>, int> counts;
  for (int i = 0; i < kDraws; ++i) {
    const Graph g = random_graph_with_edges(5, 4, rng);
    counts[std::vector<std::uint8_t>(g.adjacency().begin(), g.adjacency().end())]++;
  }
  CHECK(counts.size() == 125);
  const double p = 1.0 / 125.0;
  const double expected = kDraws * p;
  const double sd = std::sqrt(kDraws * p * (1.0 - p));
  for (const auto& [adj, c] : counts) CHECK(std::abs(c - expected) < 4.0 * sd);
}

TEST_CASE("classical_variant builds an absorbing column-stochastic matrix") {
  const auto sys = classical_variant(line_graph(std::vector{0, 2, 1}));
  Eigen::MatrixXd expected(3, 3);
  // columns: vertex 1 -> e_3; vertex 2 absorbing; vertex 3 splits to 1 and 2
  expected << 0.0, 0.0, 0.5,
              0.0, 1.0, 0.5,
              1.0, 0.0, 0.0;
  CHECK((sys.transition - expected).cwiseAbs().maxCoeff() == 0.0);

  std::vector<std::pair<int, int>> k3_edges{{0, 1}, {0, 2}, {1, 2}};
  const auto k3 = classical_variant(Graph::from_edges(3, k3_edges));
  Eigen::MatrixXd k3_expected(3, 3);
  k3_expected << 0.0, 0.0, 0.5,
                 0.5, 1.0, 0.5,
                 0.5, 0.0, 0.0;
  CHECK((k3.transition - k3_expected).cwiseAbs().maxCoeff() == 0.0);

  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Graph g = random_graph(9, seed);
    const auto s = classical_variant(g);
    for (int c = 0; c < g.size(); ++c) CHECK(std::abs(s.transition.col(c).sum() - 1.0) < 1e-12);
    CHECK(s.transition(g.target(), g.target()) == 1.0);
    CHECK(s.transition.col(g.target()).sum() == 1.0);
    CHECK(s.transition.minCoeff() >= 0.0);
    CHECK(s.transition.maxCoeff() <= 1.0);
    CHECK(s.generator().colwise().sum().cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("quantum_variant pads with a decoupled sink") {
  const Graph g = line_graph(std::vector{0, 2, 1});
  const auto sys = quantum_variant(g);
  CHECK(sys.dimension() == 4);
  CHECK(sys.sink == 3);
  CHECK(sys.decay_rate == 1.0);
  CHECK(sys.hamiltonian.row(3).cwiseAbs().sum() == 0.0);
  CHECK(sys.hamiltonian.col(3).cwiseAbs().sum() == 0.0);
  CHECK((sys.hamiltonian.topLeftCorner(3, 3) - g.adjacency_matrix()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((sys.hamiltonian - sys.hamiltonian.transpose()).cwiseAbs().maxCoeff() == 0.0);

  CHECK(quantum_variant(random_graph(5, 3)).dimension() == 6);
}

TEST_CASE("permute_free_vertices relabels everything except the endpoints") {
  const Graph path = line_graph(std::vector{0, 2, 3, 1});  // 1-3-4-2
  CHECK(permute_free_vertices(path, std::vector{0, 1, 2, 3}) == path);
  const Graph swapped = permute_free_vertices(path, std::vector{0, 1, 3, 2});
  CHECK(swapped == line_graph(std::vector{0, 3, 2, 1}));  // 1-4-3-2
  CHECK_THROWS_AS(permute_free_vertices(path, std::vector{1, 0, 2, 3}), InvalidArgument);
  CHECK_THROWS_AS(permute_free_vertices(path, std::vector{0, 1, 2, 2}), InvalidArgument);
}
