#include "qwalk/walkers.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "qwalk/error.hpp"
#include "qwalk/expm.hpp"

namespace qwalk {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void WalkConfig::validate() const {
  if (!(gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (t_max_cap && !(*t_max_cap > 0.0)) throw InvalidArgument("t_max cap must be positive");
  if (record_stride < 1) throw InvalidArgument("record stride must be at least 1");
  if (p_threshold_override && !(*p_threshold_override > 0.0 && *p_threshold_override < 1.0)) {
    throw InvalidArgument("threshold override must lie in (0, 1)");
  }
}

double detection_threshold(int n) {
  if (n < 3) throw InvalidArgument("detection threshold needs n >= 3");
  return 1.0 / std::log(static_cast<double>(n));
}

double effective_threshold(const WalkConfig& cfg, int n) {
  return cfg.p_threshold_override ? *cfg.p_threshold_override : detection_threshold(n);
}

double effective_horizon(const WalkConfig& cfg, int n) {
  const double nn = static_cast<double>(n);
  return cfg.t_max_cap ? *cfg.t_max_cap : 10.0 * nn * nn * nn;
}

Label decide_label(std::optional<double> classical_hit, std::optional<double> quantum_hit) {
  if (quantum_hit && (!classical_hit || *quantum_hit < *classical_hit)) return Label::kQuantum;
  return Label::kClassical;
}

VectorXd ctrw_probabilities(const ClassicalSystem& sys, double t) {
  if (t < 0.0) throw InvalidArgument("time must be nonnegative");
  VectorXd p0 = VectorXd::Zero(sys.size());
  p0(sys.init) = 1.0;
  return expm(sys.generator() * t) * p0;
}

// ---------------------------------------------------------------------------
// GKSL right-hand side. With rho = X + iY and real symmetric H:
//   -i[H, rho] = (HY + (HY)^T) + i((HX)^T - HX)
// and for L = |s><t|:
//   L rho L^dag = rho_tt |s><s|,   {L^dag L, rho} = row t of rho + column t of rho.

LindbladRk4::LindbladRk4(const QuantumSystem& sys)
    : h_(sys.hamiltonian), gamma_(sys.decay_rate), target_(sys.target), sink_(sys.sink) {
  const auto d = sys.dimension();
  re_ = MatrixXd::Zero(d, d);
  im_ = MatrixXd::Zero(d, d);
  re_(sys.init, sys.init) = 1.0;
  for (auto* m : {&k1x_, &k1y_, &k2x_, &k2y_, &k3x_, &k3y_, &k4x_, &k4y_, &tx_, &ty_, &hx_, &hy_}) {
    m->resize(d, d);
  }
}

void LindbladRk4::derivative(const MatrixXd& x, const MatrixXd& y, MatrixXd& dx, MatrixXd& dy) const {
  hx_.noalias() = h_ * x;
  hy_.noalias() = h_ * y;
  dx = hy_ + hy_.transpose();
  dy = hx_.transpose() - hx_;

  const int t = target_;
  const double half = 0.5 * gamma_;
  dx.row(t) -= half * x.row(t);
  dx.col(t) -= half * x.col(t);
  dy.row(t) -= half * y.row(t);
  dy.col(t) -= half * y.col(t);
  dx(sink_, sink_) += gamma_ * x(t, t);
}

void LindbladRk4::step(double h) {
  derivative(re_, im_, k1x_, k1y_);
  tx_ = re_ + (0.5 * h) * k1x_;
  ty_ = im_ + (0.5 * h) * k1y_;
  derivative(tx_, ty_, k2x_, k2y_);
  tx_ = re_ + (0.5 * h) * k2x_;
  ty_ = im_ + (0.5 * h) * k2y_;
  derivative(tx_, ty_, k3x_, k3y_);
  tx_ = re_ + h * k3x_;
  ty_ = im_ + h * k3y_;
  derivative(tx_, ty_, k4x_, k4y_);
  re_ += (h / 6.0) * (k1x_ + 2.0 * k2x_ + 2.0 * k3x_ + k4x_);
  im_ += (h / 6.0) * (k1y_ + 2.0 * k2y_ + 2.0 * k3y_ + k4y_);
  time_ += h;
}

Eigen::MatrixXcd LindbladRk4::density() const {
  Eigen::MatrixXcd rho(re_.rows(), re_.cols());
  rho.real() = re_;
  rho.imag() = im_;
  return rho;
}

void LindbladRk4::check_trace(double tolerance) const {
  const double drift = std::abs(trace() - 1.0);
  if (!(drift <= tolerance)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "trace drifted by %.3e at t = %.6f; reduce dt", drift, time_);
    throw IntegratorError(buf);
  }
}

std::vector<Eigen::MatrixXcd> ctqw_density(const QuantumSystem& sys, std::span<const double> t_grid,
                                           double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (t_grid.empty() || t_grid.front() != 0.0) throw InvalidArgument("time grid must start at 0");
  LindbladRk4 integrator(sys);
  std::vector<Eigen::MatrixXcd> out;
  out.reserve(t_grid.size());
  double prev = 0.0;
  for (double target_time : t_grid) {
    if (target_time < prev) throw InvalidArgument("time grid must be nondecreasing");
    prev = target_time;
    // Steps are counted from the current grid time so rounding does not accumulate.
    const double start = integrator.time();
    const double span = target_time - start;
    const auto full_steps = static_cast<long>(std::floor(span / dt + 1e-9));
    for (long k = 0; k < full_steps; ++k) {
      integrator.step(dt);
      integrator.check_trace();
    }
    const double rest = target_time - (start + static_cast<double>(full_steps) * dt);
    if (rest > 1e-12) {
      integrator.step(rest);
      integrator.check_trace();
    }
    out.push_back(integrator.density());
  }
  return out;
}

// ---------------------------------------------------------------------------

bool ThresholdCrossing::push(double t, double p) {
  if (time_) return true;
  if (p > threshold_) {
    if (!has_prev_) {
      time_ = t;
    } else {
      const double frac = (threshold_ - prev_p_) / (p - prev_p_);
      time_ = prev_t_ + frac * (t - prev_t_);
    }
    return true;
  }
  has_prev_ = true;
  prev_t_ = t;
  prev_p_ = p;
  return false;
}

std::optional<double> hitting_time(const Trace& trace, double p_threshold, double t_max) {
  ThresholdCrossing crossing(p_threshold);
  for (std::size_t k = 0; k < trace.t.size() && trace.t[k] <= t_max; ++k) {
    if (crossing.push(trace.t[k], trace.p[k])) break;
  }
  return crossing.time();
}

namespace {

// Steps on the grid t_k = k dt; the grid time is k * dt rather than a running sum.
class ClassicalStepper {
 public:
  ClassicalStepper(const ClassicalSystem& sys, double dt, ClassicalMethod method)
      : generator_(sys.generator()), dt_(dt), method_(method), target_(sys.target) {
    p_ = VectorXd::Zero(sys.size());
    p_(sys.init) = 1.0;
    if (method_ == ClassicalMethod::kMatrixExponential) propagator_ = expm(generator_ * dt);
  }

  void step() {
    if (method_ == ClassicalMethod::kMatrixExponential) {
      p_ = propagator_ * p_;
      return;
    }
    const VectorXd k1 = generator_ * p_;
    const VectorXd k2 = generator_ * (p_ + 0.5 * dt_ * k1);
    const VectorXd k3 = generator_ * (p_ + 0.5 * dt_ * k2);
    const VectorXd k4 = generator_ * (p_ + dt_ * k3);
    p_ += (dt_ / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  double detection() const { return p_(target_); }

 private:
  MatrixXd generator_;
  MatrixXd propagator_;
  double dt_;
  ClassicalMethod method_;
  int target_;
  VectorXd p_;
};

long steps_to(double t, double dt) { return static_cast<long>(std::floor(t / dt + 1e-9)); }

struct Crossing {
  std::optional<double> time;
  Trace trace;
};

Crossing run_classical(const Graph& g, const WalkConfig& cfg, double threshold, double cap) {
  ClassicalStepper stepper(classical_variant(g), cfg.dt, cfg.classical_method);
  ThresholdCrossing crossing(threshold);
  Crossing out;
  const long last = steps_to(cap, cfg.dt);
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    const double p = stepper.detection();
    if (cfg.record_traces && k % cfg.record_stride == 0) {
      out.trace.t.push_back(t);
      out.trace.p.push_back(p);
    }
    if (crossing.push(t, p) || k >= last) break;
    stepper.step();
  }
  out.time = crossing.time();
  return out;
}

Crossing run_quantum(const Graph& g, const WalkConfig& cfg, double dt, double threshold,
                     double horizon) {
  LindbladRk4 integrator(quantum_variant(g, cfg.gamma));
  ThresholdCrossing crossing(threshold);
  Crossing out;
  const long last = steps_to(horizon, dt) + (std::fmod(horizon, dt) > 1e-9 ? 1 : 0);
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double p = integrator.sink_population();
    if (cfg.record_traces && k % cfg.record_stride == 0) {
      out.trace.t.push_back(t);
      out.trace.p.push_back(p);
    }
    if (crossing.push(t, p) || k >= last) break;
    integrator.step(dt);
    integrator.check_trace();
  }
  out.time = crossing.time();
  return out;
}

}  // namespace

WalkOutcome label_graph(const Graph& g, const WalkConfig& cfg) {
  cfg.validate();
  const double threshold = effective_threshold(cfg, g.size());
  const double cap = effective_horizon(cfg, g.size());

  WalkOutcome out;
  out.threshold = threshold;

  Crossing classical = run_classical(g, cfg, threshold, cap);
  out.classical_hit_time = classical.time;

  double quantum_horizon = cap;
  if (cfg.stop_at_decision && classical.time) quantum_horizon = *classical.time;
  Crossing quantum = run_quantum(g, cfg, cfg.dt, threshold, quantum_horizon);
  out.quantum_hit_time = quantum.time;

  out.label = decide_label(out.classical_hit_time, out.quantum_hit_time);
  out.indeterminate = !out.classical_hit_time && !out.quantum_hit_time;

  if (cfg.record_traces) {
    out.classical_trace = std::move(classical.trace);
    out.quantum_trace = std::move(quantum.trace);
  }
  if (cfg.convergence_check) {
    WalkConfig fine = cfg;
    fine.record_traces = false;
    const Crossing refined = run_quantum(g, fine, cfg.dt / 2.0, threshold, quantum_horizon);
    if (refined.time && out.quantum_hit_time) {
      out.convergence_delta = std::abs(*refined.time - *out.quantum_hit_time);
    }
  }
  return out;
}

WalkTraces trace_walks(const Graph& g, const WalkConfig& cfg, double t_end) {
  cfg.validate();
  if (!(t_end >= 0.0)) throw InvalidArgument("trace end time must be nonnegative");
  ClassicalStepper classical(classical_variant(g), cfg.dt, cfg.classical_method);
  LindbladRk4 quantum(quantum_variant(g, cfg.gamma));
  WalkTraces out;
  const long last = steps_to(t_end, cfg.dt);
  for (long k = 0;; ++k) {
    if (k % cfg.record_stride == 0 || k == last) {
      out.t.push_back(static_cast<double>(k) * cfg.dt);
      out.p_classical.push_back(classical.detection());
      out.p_quantum.push_back(quantum.sink_population());
    }
    if (k >= last) break;
    classical.step();
    quantum.step(cfg.dt);
    quantum.check_trace();
  }
  return out;
}

}  // namespace qwalk
