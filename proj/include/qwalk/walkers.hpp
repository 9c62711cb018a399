#pragma once

#include <complex>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qwalk/graph.hpp"

namespace qwalk {

enum class ClassicalMethod { kMatrixExponential, kRungeKutta };

struct WalkConfig {
  double gamma = 1.0;
  std::optional<double> p_threshold_override;
  // Simulation horizon; defaults to 10 n^3.
  std::optional<double> t_max_cap;
  double dt = 0.01;
  // Steps between stored trace points when traces are recorded.
  int record_stride = 10;
  bool record_traces = false;
  // Stop the quantum integration once the classical walker has crossed the threshold:
  // a later quantum crossing cannot change the label.
  bool stop_at_decision = true;
  ClassicalMethod classical_method = ClassicalMethod::kMatrixExponential;
  // Re-run the quantum walk at dt/2 and report the change in its hitting time.
  bool convergence_check = false;

  void validate() const;
};

// 1 / ln(n).
double detection_threshold(int n);
double effective_threshold(const WalkConfig& cfg, int n);
double effective_horizon(const WalkConfig& cfg, int n);

struct Trace {
  std::vector<double> t;
  std::vector<double> p;
};

enum class Label : int { kClassical = 0, kQuantum = 1 };

struct WalkOutcome {
  std::optional<double> classical_hit_time;
  std::optional<double> quantum_hit_time;
  Label label = Label::kClassical;
  bool indeterminate = false;
  double threshold = 0.0;
  std::optional<Trace> classical_trace;
  std::optional<Trace> quantum_trace;
  // |t_q(dt) - t_q(dt/2)|, only when convergence_check is set and both crossed.
  std::optional<double> convergence_delta;
};

// Label rule: quantum iff the quantum walker crossed and did so strictly earlier.
Label decide_label(std::optional<double> classical_hit, std::optional<double> quantum_hit);

// p(t) = exp((T - I) t) p(0) with p(0) the unit vector at the initial vertex.
Eigen::VectorXd ctrw_probabilities(const ClassicalSystem& sys, double t);

// Density matrix of the GKSL walk integrated with classical RK4.
//
// The state is held as real and imaginary parts (rho = X + iY). Since the Hamiltonian
// is real symmetric and rho Hermitian, the commutator needs only H*X and H*Y.
class LindbladRk4 {
 public:
  explicit LindbladRk4(const QuantumSystem& sys);

  void step(double h);
  double time() const { return time_; }
  double sink_population() const { return re_(sink_, sink_); }
  double trace() const { return re_.trace(); }
  Eigen::MatrixXcd density() const;
  // Throws IntegratorError when |tr rho - 1| exceeds the tolerance.
  void check_trace(double tolerance = 1e-6) const;

 private:
  void derivative(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, Eigen::MatrixXd& dx,
                  Eigen::MatrixXd& dy) const;

  Eigen::MatrixXd h_;
  double gamma_;
  int target_;
  int sink_;
  double time_ = 0.0;
  Eigen::MatrixXd re_, im_;
  // RK4 scratch.
  Eigen::MatrixXd k1x_, k1y_, k2x_, k2y_, k3x_, k3y_, k4x_, k4y_, tx_, ty_;
  mutable Eigen::MatrixXd hx_, hy_;
};

// rho(t) for each requested time. t_grid must start at 0 and be nondecreasing; the
// integrator takes steps of dt and shortens the last step to land on each grid time.
std::vector<Eigen::MatrixXcd> ctqw_density(const QuantumSystem& sys, std::span<const double> t_grid,
                                           double dt);

// Streams (t, p) samples and reports the first time p exceeds the threshold, linearly
// interpolated between the bracketing samples.
class ThresholdCrossing {
 public:
  explicit ThresholdCrossing(double threshold) : threshold_(threshold) {}

  // Returns true once the crossing has been found.
  bool push(double t, double p);
  std::optional<double> time() const { return time_; }

 private:
  double threshold_;
  std::optional<double> time_;
  bool has_prev_ = false;
  double prev_t_ = 0.0;
  double prev_p_ = 0.0;
};

std::optional<double> hitting_time(const Trace& trace, double p_threshold, double t_max);

WalkOutcome label_graph(const Graph& g, const WalkConfig& cfg);

// Both detection curves sampled every record_stride steps on [0, t_end], ignoring the
// threshold. Used for plotting and trace dumps.
struct WalkTraces {
  std::vector<double> t;
  std::vector<double> p_classical;
  std::vector<double> p_quantum;
};
WalkTraces trace_walks(const Graph& g, const WalkConfig& cfg, double t_end);

}  // namespace qwalk
