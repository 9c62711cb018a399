#pragma once

// Independent reference computations used by the unit and acceptance suites. Nothing
// here shares code paths with the library implementation it checks.

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "qwalk/graph.hpp"

namespace qwalk::oracle {

// Every connected labeled graph on n vertices (init 0, target 1), by brute force over
// all edge subsets.
inline std::vector<Graph> all_connected_graphs(int n) {
  std::vector<std::pair<int, int>> pairs;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) pairs.emplace_back(u, v);
  std::vector<Graph> out;
  const std::uint32_t subsets = 1u << pairs.size();
  for (std::uint32_t mask = 0; mask < subsets; ++mask) {
    std::vector<std::uint8_t> adj(static_cast<std::size_t>(n * n), 0);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      if (mask & (1u << k)) {
        adj[static_cast<std::size_t>(pairs[k].first * n + pairs[k].second)] = 1;
        adj[static_cast<std::size_t>(pairs[k].second * n + pairs[k].first)] = 1;
      }
    }
    if (is_connected(n, adj)) out.emplace_back(n, adj);
  }
  return out;
}

// Explicit Euler on dp/dt = (T - I) p with the transition matrix rebuilt from the
// adjacency lists, Richardson-extrapolated from steps h and h/2 to second order.
inline Eigen::VectorXd ctrw_euler(const Graph& g, double t, double h) {
  const int n = g.size();
  auto run = [&](double step) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    p(g.init()) = 1.0;
    const long steps = static_cast<long>(std::llround(t / step));
    for (long s = 0; s < steps; ++s) {
      Eigen::VectorXd flow = -p;
      flow(g.target()) += p(g.target());  // absorbing: no outflow from the target
      for (int u = 0; u < n; ++u) {
        if (u == g.target()) continue;
        const double share = p(u) / g.degree(u);
        for (int v = 0; v < n; ++v)
          if (g.adjacent(u, v)) flow(v) += share;
      }
      p += step * flow;
    }
    return p;
  };
  return 2.0 * run(h / 2.0) - run(h);
}

// Vectorized Liouvillian (column-stacking) of the GKSL equation with H = A padded by a
// sink and L = |sink><target|.
inline Eigen::MatrixXcd liouvillian(const Graph& g, double gamma) {
  using C = std::complex<double>;
  const int n = g.size();
  const int d = n + 1;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(d, d);
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) h(u, v) = g.adjacent(u, v) ? 1.0 : 0.0;
  Eigen::MatrixXcd l = Eigen::MatrixXcd::Zero(d, d);
  l(n, g.target()) = 1.0;
  const Eigen::MatrixXcd ldl = l.adjoint() * l;
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(d, d);

  auto kron = [d](const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd k(d * d, d * d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) k.block(i * d, j * d, d, d) = a(i, j) * b;
    return k;
  };
  const C i_unit(0.0, 1.0);
  Eigen::MatrixXcd super = -i_unit * (kron(id, h) - kron(h.transpose(), id));
  super += gamma * (kron(l.conjugate(), l) - 0.5 * kron(id, ldl) - 0.5 * kron(ldl.transpose(), id));
  return super;
}

// rho(t) = unvec(exp(L t) vec(|init><init|)).
inline Eigen::MatrixXcd gksl_exact(const Graph& g, double gamma, double t) {
  const int d = g.size() + 1;
  const Eigen::MatrixXcd super = liouvillian(g, gamma);
  Eigen::VectorXcd rho0 = Eigen::VectorXcd::Zero(d * d);
  rho0(g.init() * d + g.init()) = 1.0;
  const Eigen::MatrixXcd prop = (super * t).exp();
  const Eigen::VectorXcd v = prop * rho0;
  Eigen::MatrixXcd rho(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) rho(i, j) = v(j * d + i);
  return rho;
}

// Counts, for every edge (i, j), the edges sharing an endpoint with it, straight from
// the edge list.
inline Eigen::MatrixXd neighbor_edge_counts(const Graph& g) {
  const auto edges = g.edges();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g.size(), g.size());
  for (auto [u, v] : edges) {
    int count = 0;
    for (auto [a, b] : edges) {
      if (a == u && b == v) continue;
      if (a == u || a == v || b == u || b == v) ++count;
    }
    out(u, v) = count;
    out(v, u) = count;
  }
  return out;
}

}  // namespace qwalk::oracle
