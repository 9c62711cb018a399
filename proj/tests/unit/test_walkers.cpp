#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "qwalk/error.hpp"
#include "qwalk/expm.hpp"
#include "qwalk/walkers.hpp"

using namespace qwalk;

namespace {

Graph blue_path() { return line_graph(std::vector{0, 2, 1}); }  // 1-3-2

Graph complete_graph(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) edges.emplace_back(u, v);
  return Graph::from_edges(n, edges);
}

WalkConfig full_horizon() {
  WalkConfig cfg;
  cfg.stop_at_decision = false;
  return cfg;
}

}  // namespace

TEST_CASE("expm matches known closed forms") {
  Eigen::MatrixXd rot(2, 2);
  rot << 0.0, -1.0, 1.0, 0.0;
  for (double theta : {0.001, 0.3, 2.0, 40.0}) {
    const Eigen::MatrixXd e = expm(rot * theta);
    CHECK(e(0, 0) == doctest::Approx(std::cos(theta)).epsilon(1e-12));
    CHECK(e(1, 0) == doctest::Approx(std::sin(theta)).epsilon(1e-12));
  }
  CHECK((expm(Eigen::MatrixXd::Zero(3, 3)) - Eigen::MatrixXd::Identity(3, 3)).norm() == 0.0);

  // Against Eigen's independent implementation on random matrices across norm regimes.
  Rng rng(5);
  for (double scale : {0.005, 0.1, 0.8, 2.0, 9.0}) {
    Eigen::MatrixXd a(6, 6);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) a(i, j) = uniform_real(rng, -1.0, 1.0) * scale / 6.0;
    const Eigen::MatrixXd ref = a.exp();
    CHECK((expm(a) - ref).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("thresholds use the natural logarithm") {
  CHECK(detection_threshold(3) == doctest::Approx(0.9102392266268373));
  CHECK(detection_threshold(10) == doctest::Approx(0.4342944819032518));
  CHECK_THROWS_AS(detection_threshold(2), InvalidArgument);
}

TEST_CASE("ctrw_probabilities") {
  const auto sys = classical_variant(blue_path());
  const Eigen::VectorXd p0 = ctrw_probabilities(sys, 0.0);
  CHECK(p0(0) == 1.0);
  CHECK(p0.sum() == 1.0);

  // Reference values from an independent scipy.linalg.expm evaluation.
  struct Row {
    double t;
    double p[3];
  };
  const Row golden[] = {{0.5, {0.64483535, 0.04554169, 0.30962296}},
                        {1.0, {0.46374582, 0.13694252, 0.39931166}},
                        {2.0, {0.29478509, 0.33485668, 0.37035823}},
                        {5.0, {0.11569888, 0.72095589, 0.16334523}}};
  double prev_target = 0.0;
  for (const auto& row : golden) {
    const Eigen::VectorXd p = ctrw_probabilities(sys, row.t);
    for (int v = 0; v < 3; ++v) CHECK(std::abs(p(v) - row.p[v]) < 1e-8);
    CHECK(std::abs(p.sum() - 1.0) < 1e-9);
    CHECK(p(1) >= prev_target);
    prev_target = p(1);

    const Eigen::VectorXd euler = oracle::ctrw_euler(blue_path(), row.t, 1e-4);
    CHECK((p - euler).cwiseAbs().maxCoeff() < 1e-5);
  }
  CHECK_THROWS_AS(ctrw_probabilities(sys, -1.0), InvalidArgument);
}

TEST_CASE("ctqw_density basics") {
  const Graph g = blue_path();
  const std::vector<double> grid{0.0, 0.5, 1.0, 3.0, 7.5};

  const auto rho = ctqw_density(quantum_variant(g), grid, 0.01);
  REQUIRE(rho.size() == grid.size());
  CHECK(std::abs(rho[0](0, 0) - 1.0) < 1e-15);
  CHECK(rho[0].cwiseAbs().sum() == doctest::Approx(1.0));
  for (const auto& r : rho) {
    CHECK(std::abs(r.trace().real() - 1.0) < 1e-6);
    CHECK((r - r.adjoint()).cwiseAbs().maxCoeff() < 1e-8);
  }

  // Coherent dynamics never populates the sink.
  const auto coherent = ctqw_density(quantum_variant(g, 0.0), grid, 0.01);
  for (const auto& r : coherent) CHECK(std::abs(r(3, 3)) == 0.0);

  CHECK_THROWS_AS(ctqw_density(quantum_variant(g), std::vector{0.5, 1.0}, 0.01), InvalidArgument);
  CHECK_THROWS_AS(ctqw_density(quantum_variant(g), std::vector{0.0, 1.0, 0.5}, 0.01), InvalidArgument);
}

TEST_CASE("RK4 GKSL agrees with the vectorized Liouvillian exponential") {
  const std::vector<double> grid{0.0, 0.37, 1.0, 2.5, 5.0};
  for (int n = 3; n <= 4; ++n) {
    for (const Graph& g : oracle::all_connected_graphs(n)) {
      const auto rho = ctqw_density(quantum_variant(g), grid, 0.01);
      for (std::size_t k = 0; k < grid.size(); ++k) {
        const Eigen::MatrixXcd exact = oracle::gksl_exact(g, 1.0, grid[k]);
        CHECK((rho[k] - exact).cwiseAbs().maxCoeff() < 1e-5);
      }
    }
  }
}

TEST_CASE("integrator failure surfaces as IntegratorError") {
  const Graph k8 = complete_graph(8);
  const std::vector<double> grid{0.0, 500.0};
  CHECK_THROWS_AS(ctqw_density(quantum_variant(k8), grid, 0.9), IntegratorError);
}

TEST_CASE("hitting_time") {
  Trace zero{{0.0, 1.0, 2.0}, {0.0, 0.0, 0.0}};
  CHECK_FALSE(hitting_time(zero, 0.5, 2.0).has_value());

  Trace ramp{{0.0, 1.0, 2.0}, {0.0, 0.5, 1.0}};
  CHECK(*hitting_time(ramp, 0.75, 2.0) == doctest::Approx(1.5));
  CHECK_FALSE(hitting_time(ramp, 0.75, 1.0).has_value());

  // A grid value equal to the threshold does not count; interpolation lands on it.
  Trace tie{{0.0, 1.0, 2.0}, {0.0, 0.75, 1.0}};
  CHECK(*hitting_time(tie, 0.75, 2.0) == doctest::Approx(1.0));

  Trace immediate{{0.0, 1.0}, {0.9, 1.0}};
  CHECK(*hitting_time(immediate, 0.5, 1.0) == 0.0);
}

TEST_CASE("label_graph reproduces the three-vertex line experiment") {
  const WalkConfig cfg = full_horizon();

  // Golden hitting times from an independent scipy computation (exact propagators on
  // the same dt = 0.01 grid, same interpolation rule).
  const auto blue = label_graph(blue_path(), cfg);
  CHECK(blue.label == Label::kQuantum);
  CHECK(blue.threshold == doctest::Approx(0.9102392266));
  CHECK(*blue.classical_hit_time == doctest::Approx(8.8729739967).epsilon(1e-7));
  CHECK(*blue.quantum_hit_time == doctest::Approx(7.2414656514).epsilon(1e-7));

  const auto green = label_graph(line_graph(std::vector{2, 0, 1}), cfg);
  CHECK(green.label == Label::kClassical);
  CHECK(*green.classical_hit_time == doctest::Approx(7.6897082684).epsilon(1e-7));
  CHECK(*green.quantum_hit_time == doctest::Approx(10.1690601622).epsilon(1e-7));

  const auto gray = label_graph(line_graph(std::vector{0, 1, 2}), cfg);
  CHECK(gray.label == Label::kClassical);
  CHECK(*gray.classical_hit_time == doctest::Approx(2.4106100772).epsilon(1e-7));
  CHECK_FALSE(gray.quantum_hit_time.has_value());
  CHECK_FALSE(gray.indeterminate);

  // K_3: the antisymmetric combination of the two free vertices is dark, so the
  // quantum walker never reaches the threshold.
  const auto k3 = label_graph(complete_graph(3), cfg);
  CHECK(k3.label == Label::kClassical);
  CHECK(*k3.classical_hit_time == doctest::Approx(4.821217111538302).epsilon(1e-7));
  CHECK_FALSE(k3.quantum_hit_time.has_value());
}

TEST_CASE("label_graph early stop gives the same labels") {
  for (const Graph& g : oracle::all_connected_graphs(4)) {
    const auto full = label_graph(g, full_horizon());
    const auto fast = label_graph(g, WalkConfig{});
    CHECK(full.label == fast.label);
    CHECK(*full.classical_hit_time == *fast.classical_hit_time);
    if (fast.quantum_hit_time) CHECK(*fast.quantum_hit_time == *full.quantum_hit_time);
  }
}

TEST_CASE("label_graph outcome invariants") {
  SUBCASE("indeterminate when nobody arrives before the cap") {
    WalkConfig cfg;
    cfg.t_max_cap = 0.5;
    const auto out = label_graph(line_graph(std::vector{0, 2, 3, 4, 1}), cfg);
    CHECK(out.indeterminate);
    CHECK(out.label == Label::kClassical);
  }
  SUBCASE("traces are monotone and consistent with the hit times") {
    WalkConfig cfg = full_horizon();
    cfg.record_traces = true;
    cfg.record_stride = 1;
    const auto out = label_graph(blue_path(), cfg);
    REQUIRE(out.classical_trace);
    REQUIRE(out.quantum_trace);
    for (const Trace* tr : {&*out.classical_trace, &*out.quantum_trace}) {
      for (std::size_t k = 1; k < tr->p.size(); ++k) CHECK(tr->p[k] >= tr->p[k - 1] - 1e-9);
    }
    CHECK(*hitting_time(*out.classical_trace, out.threshold, 1e9) == *out.classical_hit_time);
    CHECK(*hitting_time(*out.quantum_trace, out.threshold, 1e9) == *out.quantum_hit_time);
  }
  SUBCASE("decide_label") {
    CHECK(decide_label(2.0, 1.0) == Label::kQuantum);
    CHECK(decide_label(1.0, 1.0) == Label::kClassical);
    CHECK(decide_label(std::nullopt, 5.0) == Label::kQuantum);
    CHECK(decide_label(1.0, std::nullopt) == Label::kClassical);
    CHECK(decide_label(std::nullopt, std::nullopt) == Label::kClassical);
  }
  SUBCASE("RK4 classical stepping agrees with the exponential") {
    WalkConfig cfg = full_horizon();
    cfg.classical_method = ClassicalMethod::kRungeKutta;
    const auto rk = label_graph(blue_path(), cfg);
    CHECK(*rk.classical_hit_time == doctest::Approx(8.8729739967).epsilon(1e-7));
  }
  SUBCASE("halving dt barely moves the quantum hitting time") {
    WalkConfig cfg = full_horizon();
    cfg.convergence_check = true;
    const auto out = label_graph(blue_path(), cfg);
    REQUIRE(out.convergence_delta);
    CHECK(*out.convergence_delta < 1e-4);
  }
  SUBCASE("config validation") {
    WalkConfig bad;
    bad.dt = 0.0;
    CHECK_THROWS_AS(label_graph(blue_path(), bad), InvalidArgument);
    bad = WalkConfig{};
    bad.gamma = 0.0;
    CHECK_THROWS_AS(label_graph(blue_path(), bad), InvalidArgument);
  }
}

TEST_CASE("hitting times are invariant under free-vertex relabeling") {
  const Graph g = random_graph(7, 17);
  const std::vector<int> perm{0, 1, 5, 2, 6, 4, 3};
  const Graph h = permute_free_vertices(g, perm);
  const auto a = label_graph(g, full_horizon());
  const auto b = label_graph(h, full_horizon());
  CHECK(a.label == b.label);
  CHECK(std::abs(*a.classical_hit_time - *b.classical_hit_time) < 1e-4);
  CHECK(a.quantum_hit_time.has_value() == b.quantum_hit_time.has_value());
  if (a.quantum_hit_time) CHECK(std::abs(*a.quantum_hit_time - *b.quantum_hit_time) < 1e-4);
}

TEST_CASE("trace_walks samples both curves on a common grid") {
  WalkConfig cfg;
  cfg.record_stride = 50;
  const auto tr = trace_walks(blue_path(), cfg, 12.0);
  REQUIRE(tr.t.size() == 25);
  CHECK(tr.t.front() == 0.0);
  CHECK(tr.t.back() == doctest::Approx(12.0));
  CHECK(tr.p_classical.front() == 0.0);
  CHECK(tr.p_quantum.front() == 0.0);
  CHECK(tr.p_quantum.back() > 0.91);
}
