#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dcgd/delay.hpp"
#include "dcgd/network.hpp"
#include "dcgd/objectives.hpp"
#include "dcgd/rng.hpp"

namespace dcgd {

// Diminishing schedule alpha(t) = 1 / (2 (L + eta sqrt(t))).
struct StepSizePolicy {
  double lipschitz = 1.0;
  double eta = 0.01;

  double at(long t) const {
    return 1.0 / (2.0 * (lipschitz + eta * std::sqrt(static_cast<double>(t))));
  }
};

class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(long t)
      : std::runtime_error("non-finite iterate at iteration " + std::to_string(t)),
        iteration(t) {}
  long iteration;
};

// Entrywise clamp onto { ||x||_inf <= radius }; each node can apply it to its
// own row independently.
template <class Derived>
auto project_box(const Eigen::MatrixBase<Derived>& v, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("project_box: radius must be positive");
  return v.derived().cwiseMax(-radius).cwiseMin(radius).eval();
}

// x holds one row per node. y is the per-node running average of the iterates
// produced from iteration 1 onward; it is meaningful once t >= 2.
struct SolverState {
  long t = 0;
  Eigen::MatrixXd x;
  Eigen::MatrixXd y;
  double radius = 1.0;
  StaleBuffer stale;
};

inline Eigen::VectorXd consensus_average(const Eigen::MatrixXd& y) {
  return y.colwise().mean().transpose();
}

struct StepDiagnostics {
  int max_delay = 0;
  std::vector<int> delays;
};

namespace detail {

inline void evaluate_gradients(Eigen::MatrixXd& out, const Problem& problem,
                               const Eigen::MatrixXd& x, long t, std::uint64_t seed,
                               bool parallel) {
  const int m = problem.nodes();
  auto eval_range = [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      RngStream rng(stream_key(seed, "noise", static_cast<std::uint64_t>(i),
                               static_cast<std::uint64_t>(t)));
      out.row(i) = problem.locals[i].stochastic_gradient(x.row(i).transpose(), rng).transpose();
    }
  };
  const unsigned hw = std::thread::hardware_concurrency();
  const int workers = parallel ? static_cast<int>(std::min<unsigned>(hw ? hw : 2,
                                                                     static_cast<unsigned>(m)))
                               : 1;
  if (workers <= 1) {
    eval_range(0, m);
    return;
  }
  // rows are disjoint and every node draws from its own keyed stream, so the
  // result is identical to the sequential pass
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    const int lo = m * w / workers;
    const int hi = m * (w + 1) / workers;
    pool.emplace_back(eval_range, lo, hi);
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

// One iteration: buffer fresh stochastic gradients at the current iterates,
// sample per-node delays, take the mixed delayed-gradient update, project
// onto the box, and fold the result into the running average.
inline void step(SolverState& state, const MixingMatrix& mixing, const Problem& problem,
                 const DelayModel& delay, const StepSizePolicy& policy, std::uint64_t seed,
                 bool parallel_gradients = false, StepDiagnostics* diag = nullptr) {
  const int m = problem.nodes();
  const long t = state.t;

  Eigen::MatrixXd gradients(m, state.x.cols());
  detail::evaluate_gradients(gradients, problem, state.x, t, seed, parallel_gradients);
  state.stale.push(t, gradients, state.x);

  Eigen::MatrixXd stale_gradients(m, state.x.cols());
  int max_tau = 0;
  if (diag) diag->delays.assign(static_cast<std::size_t>(m), 0);
  for (int i = 0; i < m; ++i) {
    const int tau = delay.sample(i, t, seed);
    max_tau = std::max(max_tau, tau);
    if (diag) diag->delays[static_cast<std::size_t>(i)] = tau;
    stale_gradients.row(i) = state.stale.gradient_at(i, t - tau);
  }
  if (diag) diag->max_delay = max_tau;

  Eigen::MatrixXd next = mixing.weights * state.x - policy.at(t) * stale_gradients;
  if (!next.allFinite()) throw DivergenceError(t);
  next = project_box(next, state.radius);

  if (t >= 1) {
    if (t == 1)
      state.y = next;
    else
      state.y += (next - state.y) / static_cast<double>(t);
  }
  state.x = std::move(next);
  ++state.t;
}

struct RunOptions {
  long iterations = 1000;  // T: trace records 1..T
  std::uint64_t seed = 0;
  bool parallel_gradients = false;
  int history_depth = 0;  // 0: derived as max delay + 1
  double reference_value = 0.0;
  bool record_node_delays = false;
  Eigen::MatrixXd initial;  // empty: all zeros
};

// Per-iteration record of a run. Row t stores the step size used at t, the
// objective gap and disagreement of the running average after the update at
// t, and the disagreement of the iterate x(t) entering that update.
struct RunTrace {
  std::vector<long> t;
  std::vector<double> alpha;
  std::vector<double> objective_gap;       // f(z(t)) - reference
  std::vector<double> disagreement_y_sq;   // sum_i ||y_i(t) - z(t)||^2
  std::vector<double> disagreement_x;      // ||(I-J) x(t)||_F
  std::vector<int> max_delay;
  std::vector<std::vector<int>> node_delays;  // optional per-node realizations

  Eigen::MatrixXd final_x;  // x(T+1)
  Eigen::MatrixXd final_y;  // y(T)
  Eigen::VectorXd final_z;  // consensus average of y(T)
  double reference_value = 0.0;
  long stale_regime_start = 0;  // iterations past ceil(8 m B^2) leave the
                                // startup regime of the stale-gap bound

  std::size_t size() const { return t.size(); }
};

using StepObserver = std::function<void(long t, const SolverState&)>;

inline RunTrace run(const Problem& problem, const MixingMatrix& mixing, const DelayModel& delay,
                    const StepSizePolicy& policy, const RunOptions& opts,
                    const StepObserver& on_step = {}) {
  const int m = problem.nodes();
  const Eigen::Index n = problem.dim();
  if (opts.iterations < 1) throw std::invalid_argument("run: iterations must be >= 1");
  if (mixing.size() != m) throw std::invalid_argument("run: mixing size does not match node count");

  const int required_depth = delay.max_delay() + 1;
  const int depth = opts.history_depth > 0 ? opts.history_depth : required_depth;
  if (depth < required_depth)
    throw std::invalid_argument("run: history depth " + std::to_string(depth) +
                                " cannot cover delays up to " +
                                std::to_string(delay.max_delay()));

  SolverState state{0, Eigen::MatrixXd::Zero(m, n), Eigen::MatrixXd::Zero(m, n), problem.radius,
                    StaleBuffer(m, n, depth)};
  if (opts.initial.size() != 0) {
    if (opts.initial.rows() != m || opts.initial.cols() != n)
      throw std::invalid_argument("run: initial iterate has wrong shape");
    if (!opts.initial.allFinite() || opts.initial.cwiseAbs().maxCoeff() > problem.radius)
      throw std::invalid_argument("run: initial iterate must be finite and inside the box");
    state.x = opts.initial;
  }

  const long T = opts.iterations;
  RunTrace trace;
  trace.reference_value = opts.reference_value;
  trace.stale_regime_start =
      static_cast<long>(std::ceil(8.0 * m * delay.second_moment()));
  trace.t.reserve(static_cast<std::size_t>(T));

  StepDiagnostics diag;

  step(state, mixing, problem, delay, policy, opts.seed, opts.parallel_gradients, &diag);
  if (on_step) on_step(0, state);

  auto deviation_norm = [&](const Eigen::MatrixXd& v) {
    return (v.rowwise() - v.colwise().mean()).norm();
  };

  for (long t = 1; t <= T; ++t) {
    const double dx = deviation_norm(state.x);
    step(state, mixing, problem, delay, policy, opts.seed, opts.parallel_gradients, &diag);
    if (on_step) on_step(t, state);

    const Eigen::VectorXd z = consensus_average(state.y);
    const double fz = problem.total_value(z);
    const double dy_sq = (state.y.rowwise() - z.transpose()).squaredNorm();

    trace.t.push_back(t);
    trace.alpha.push_back(policy.at(t));
    trace.objective_gap.push_back(fz - opts.reference_value);
    trace.disagreement_y_sq.push_back(dy_sq);
    trace.disagreement_x.push_back(dx);
    trace.max_delay.push_back(diag.max_delay);
    if (opts.record_node_delays) trace.node_delays.push_back(diag.delays);
  }

  trace.final_x = state.x;
  trace.final_y = state.y;
  trace.final_z = consensus_average(state.y);
  return trace;
}

struct ReferenceOptions {
  double tolerance = 1e-10;  // on the gradient-map norm
  long max_iterations = 200000;
};

struct ReferenceSolution {
  Eigen::VectorXd x;
  double value = 0.0;
  long iterations = 0;
  double gradient_map_norm = 0.0;
  bool converged = false;
};

// Accelerated projected gradient on the summed objective over the box, with
// constant step 1/L_total and momentum restart on objective increase. Stops
// when the gradient-map norm falls under the tolerance.
inline ReferenceSolution centralized_reference(const Problem& problem, ReferenceOptions opts = {}) {
  const Eigen::Index n = problem.dim();
  const double R = problem.radius;
  const double L = problem.total_lipschitz();

  ReferenceSolution out;
  out.x = Eigen::VectorXd::Zero(n);
  if (L <= 0.0) {
    // gradient is identically zero for this objective family
    out.value = problem.total_value(out.x);
    out.converged = true;
    return out;
  }

  Eigen::VectorXd xk = out.x;
  Eigen::VectorXd yk = xk;
  double theta = 1.0;
  double f_prev = problem.total_value(xk);
  Eigen::VectorXd best_x = xk;
  double best_f = f_prev;
  double gm_norm = std::numeric_limits<double>::infinity();

  long it = 0;
  for (; it < opts.max_iterations; ++it) {
    const Eigen::VectorXd xn = project_box(yk - problem.total_gradient(yk) / L, R);
    const Eigen::VectorXd pg = project_box(xn - problem.total_gradient(xn) / L, R);
    gm_norm = (xn - pg).norm() * L;
    const double fxn = problem.total_value(xn);
    if (fxn < best_f) {
      best_f = fxn;
      best_x = xn;
    }
    if (gm_norm <= opts.tolerance) {
      xk = xn;
      out.converged = true;
      ++it;
      break;
    }
    double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
    if (fxn > f_prev) {  // restart momentum
      yk = xn;
      theta_next = 1.0;
    } else {
      yk = xn + ((theta - 1.0) / theta_next) * (xn - xk);
    }
    theta = theta_next;
    xk = xn;
    f_prev = fxn;
  }

  out.x = out.converged ? xk : best_x;
  out.value = problem.total_value(out.x);
  out.iterations = it;
  out.gradient_map_norm = gm_norm;
  return out;
}

}  // namespace dcgd
