#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dcgd/analysis.hpp"
#include "dcgd/network.hpp"
#include "dcgd/objectives.hpp"
#include "dcgd/rng.hpp"
#include "dcgd/solver.hpp"

namespace dcgd {

// Per-node gradient computation time: uniform on [lo, hi] scaled by an
// optional per-node factor (for straggler experiments).
struct ComputeTimeModel {
  double lo = 1e-3;
  double hi = 0.5;
  std::vector<double> node_scale;  // empty: all ones

  double draw(int node, long k, std::uint64_t seed) const {
    if (!(lo > 0.0 && hi >= lo))
      throw std::invalid_argument("compute time: need 0 < lo <= hi");
    RngStream rng(stream_key(seed, "compute", static_cast<std::uint64_t>(node),
                             static_cast<std::uint64_t>(k)));
    const double scale =
        node_scale.empty() ? 1.0 : node_scale.at(static_cast<std::size_t>(node));
    return scale * rng.next_uniform(lo, hi);
  }
};

struct TimedTrace {
  std::vector<double> wall_clock;
  std::vector<long> iteration;
  std::vector<double> objective_gap;       // f(z) - reference, from the running average
  std::vector<double> disagreement_y_sq;
  std::vector<int> max_delay;              // asynchronous trace only

  // first wall-clock time at which the gap reaches the threshold; inf if never
  double time_to_gap(double threshold) const {
    for (std::size_t i = 0; i < wall_clock.size(); ++i)
      if (objective_gap[i] <= threshold) return wall_clock[i];
    return std::numeric_limits<double>::infinity();
  }
};

struct TimingOptions {
  double comm_interval = 0.01;  // spacing of the asynchronous communication ticks
  double budget = 10.0;         // total virtual time simulated
  StepSizePolicy policy;
  std::uint64_t seed = 0;
  double reference_value = 0.0;
};

struct TimingComparison {
  TimedTrace synchronous;
  TimedTrace asynchronous;
};

namespace detail {

// Running average over every produced iterate; one entry per tick keeps the
// comparison traces aligned with the tick grid.
struct AverageTracker {
  long count = 0;
  Eigen::MatrixXd y;

  void absorb(const Eigen::MatrixXd& x_next) {
    ++count;
    if (count == 1)
      y = x_next;
    else
      y += (x_next - y) / static_cast<double>(count);
  }
};

inline void record(TimedTrace& trace, double clock, long iter, const Problem& problem,
                   const AverageTracker& avg, double reference) {
  const Eigen::VectorXd z = consensus_average(avg.y);
  trace.wall_clock.push_back(clock);
  trace.iteration.push_back(iter);
  trace.objective_gap.push_back(problem.total_value(z) - reference);
  trace.disagreement_y_sq.push_back((avg.y.rowwise() - z.transpose()).squaredNorm());
}

}  // namespace detail

// Wall-clock comparison of the same iteration run two ways on exact
// gradients: a synchronous schedule that waits for the slowest node every
// iteration, and an asynchronous one that updates at fixed communication
// ticks with whatever gradient each node finished last (inducing delays).
inline TimingComparison async_timing_run(const Problem& problem, const MixingMatrix& mixing,
                                         const ComputeTimeModel& compute,
                                         const TimingOptions& opts) {
  const int m = problem.nodes();
  const Eigen::Index n = problem.dim();
  if (mixing.size() != m)
    throw std::invalid_argument("async_timing_run: mixing size does not match node count");
  if (!(opts.comm_interval > 0.0) || !(opts.budget > 0.0))
    throw std::invalid_argument("async_timing_run: comm_interval and budget must be positive");

  TimingComparison out;

  // synchronous: iteration k costs max over nodes of that iteration's draws
  {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(m, n);
    detail::AverageTracker avg;
    double clock = 0.0;
    for (long t = 0;; ++t) {
      double dur = 0.0;
      for (int i = 0; i < m; ++i) dur = std::max(dur, compute.draw(i, t, opts.seed));
      if (clock + dur > opts.budget) break;
      clock += dur;
      Eigen::MatrixXd grads(m, n);
      for (int i = 0; i < m; ++i)
        grads.row(i) = problem.locals[i].gradient(x.row(i).transpose()).transpose();
      x = project_box(mixing.weights * x - opts.policy.at(t) * grads, problem.radius);
      avg.absorb(x);
      detail::record(out.synchronous, clock, t, problem, avg, opts.reference_value);
    }
  }

  // asynchronous: updates at tick times (t+1) * comm_interval; each node
  // contributes the most recently completed gradient, evaluated at the
  // iterate the node held when that computation started. Gradients are
  // evaluated eagerly at computation start, and since iterates change only at
  // ticks, every start inside the current interval sees the current iterate.
  {
    const long ticks = static_cast<long>(opts.budget / opts.comm_interval);
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(m, n);

    struct NodeState {
      Eigen::VectorXd ready_g;
      long ready_idx = 0;  // iterate index the ready gradient was evaluated at
      Eigen::VectorXd inflight_g;
      long inflight_idx = 0;
      double done_at = 0.0;
      long draws = 0;
    };
    std::vector<NodeState> nodes(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      auto& s = nodes[static_cast<std::size_t>(i)];
      s.ready_g = problem.locals[i].gradient(x.row(i).transpose());
      s.ready_idx = 0;
      s.inflight_g = s.ready_g;
      s.inflight_idx = 0;
      s.done_at = compute.draw(i, s.draws++, opts.seed);
    }

    detail::AverageTracker avg;
    for (long t = 0; t < ticks; ++t) {
      const double now = (static_cast<double>(t) + 1.0) * opts.comm_interval;
      Eigen::MatrixXd grads(m, n);
      int max_delay = 0;
      for (int i = 0; i < m; ++i) {
        auto& s = nodes[static_cast<std::size_t>(i)];
        while (s.done_at <= now) {
          s.ready_g = s.inflight_g;
          s.ready_idx = s.inflight_idx;
          s.inflight_idx = t;
          s.inflight_g = problem.locals[i].gradient(x.row(i).transpose());
          s.done_at += compute.draw(i, s.draws++, opts.seed);
        }
        grads.row(i) = s.ready_g.transpose();
        max_delay = std::max(max_delay, static_cast<int>(t - s.ready_idx));
      }
      x = project_box(mixing.weights * x - opts.policy.at(t) * grads, problem.radius);
      avg.absorb(x);
      detail::record(out.asynchronous, now, t, problem, avg, opts.reference_value);
      out.asynchronous.max_delay.push_back(max_delay);
    }
  }

  return out;
}

}  // namespace dcgd
