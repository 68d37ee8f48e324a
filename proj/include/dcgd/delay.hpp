#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dcgd/rng.hpp"

namespace dcgd {

enum class DelayKind { None, Fixed, Uniform, TruncatedGeometric };

// Per-node gradient staleness tau_i(t). Every kind has bounded support, so
// the second moment is a finite closed-form (or finite-sum) expression.
class DelayModel {
 public:
  static DelayModel none() { return DelayModel(DelayKind::None, 0, 0.0); }

  static DelayModel fixed(int tau) {
    if (tau < 0) throw std::invalid_argument("delay: fixed tau must be nonnegative");
    return DelayModel(DelayKind::Fixed, tau, 0.0);
  }

  // draws uniformly from {1, ..., bound}
  static DelayModel uniform(int bound) {
    if (bound < 1) throw std::invalid_argument("delay: uniform bound must be >= 1");
    return DelayModel(DelayKind::Uniform, bound, 0.0);
  }

  // geometric with success probability p, truncated to {0, ..., bound}
  static DelayModel truncated_geometric(double p, int bound) {
    if (!(p > 0.0 && p < 1.0))
      throw std::invalid_argument("delay: geometric p must be in (0,1)");
    if (bound < 0) throw std::invalid_argument("delay: geometric bound must be >= 0");
    return DelayModel(DelayKind::TruncatedGeometric, bound, p);
  }

  DelayKind kind() const { return kind_; }
  int max_delay() const { return bound_; }

  // Sampled delay is clamped to t so the referenced iterate always exists;
  // before t reaches the support bound the first gradients simply come from
  // the initial iterate.
  int sample(int node, long t, std::uint64_t master_seed) const {
    if (t < 0) throw std::invalid_argument("delay: t must be nonnegative");
    const long cap = t;
    switch (kind_) {
      case DelayKind::None:
        return 0;
      case DelayKind::Fixed:
        return static_cast<int>(std::min<long>(bound_, cap));
      case DelayKind::Uniform: {
        RngStream rng(stream_key(master_seed, "delay", static_cast<std::uint64_t>(node),
                                 static_cast<std::uint64_t>(t)));
        const long draw = rng.next_int(1, bound_);
        return static_cast<int>(std::min(draw, cap));
      }
      case DelayKind::TruncatedGeometric: {
        RngStream rng(stream_key(master_seed, "delay", static_cast<std::uint64_t>(node),
                                 static_cast<std::uint64_t>(t)));
        const double u = rng.next_double();
        // inversion over the truncated pmf p(1-p)^k / Z, k = 0..bound
        const double z = 1.0 - std::pow(1.0 - p_, static_cast<double>(bound_ + 1));
        double cdf = 0.0;
        double pk = p_;
        for (int k = 0; k <= bound_; ++k) {
          cdf += pk / z;
          if (u < cdf) return static_cast<int>(std::min<long>(k, cap));
          pk *= (1.0 - p_);
        }
        return static_cast<int>(std::min<long>(bound_, cap));
      }
    }
    return 0;
  }

  // exact E[tau^2] of the untruncated-in-time distribution (the B^2 of the
  // second-moment assumption)
  double second_moment() const {
    switch (kind_) {
      case DelayKind::None:
        return 0.0;
      case DelayKind::Fixed:
        return static_cast<double>(bound_) * bound_;
      case DelayKind::Uniform:
        // mean of k^2 over {1..B} = (B+1)(2B+1)/6
        return (bound_ + 1.0) * (2.0 * bound_ + 1.0) / 6.0;
      case DelayKind::TruncatedGeometric: {
        const double z = 1.0 - std::pow(1.0 - p_, static_cast<double>(bound_ + 1));
        double total = 0.0;
        double pk = p_;
        for (int k = 0; k <= bound_; ++k) {
          total += static_cast<double>(k) * k * pk / z;
          pk *= (1.0 - p_);
        }
        return total;
      }
    }
    return 0.0;
  }

 private:
  DelayModel(DelayKind kind, int bound, double p) : kind_(kind), bound_(bound), p_(p) {}

  DelayKind kind_;
  int bound_;
  double p_;
};

// Ring buffer of the last `depth` iterations' stochastic gradients (and the
// iterates they were evaluated at), one m-by-n matrix per slot. Serving a
// stale gradient replays exactly what was recorded when that iteration ran;
// noise is never redrawn.
class StaleBuffer {
 public:
  StaleBuffer(int nodes, Eigen::Index dim, int depth)
      : depth_(depth), slots_(static_cast<std::size_t>(depth)) {
    if (depth < 1) throw std::invalid_argument("stale buffer: depth must be >= 1");
    for (auto& s : slots_) {
      s.t = -1;
      s.gradients.resize(nodes, dim);
      s.iterates.resize(nodes, dim);
    }
  }

  int depth() const { return depth_; }

  void push(long t, const Eigen::MatrixXd& gradients, const Eigen::MatrixXd& iterates) {
    Slot& s = slots_[static_cast<std::size_t>(t % depth_)];
    s.t = t;
    s.gradients = gradients;
    s.iterates = iterates;
  }

  Eigen::RowVectorXd gradient_at(int node, long s) const { return slot(s).gradients.row(node); }
  Eigen::RowVectorXd iterate_at(int node, long s) const { return slot(s).iterates.row(node); }

 private:
  struct Slot {
    long t;
    Eigen::MatrixXd gradients;
    Eigen::MatrixXd iterates;
  };

  const Slot& slot(long s) const {
    const Slot& out = slots_[static_cast<std::size_t>(s % depth_)];
    if (out.t != s)
      throw std::logic_error("stale buffer underrun: requested iteration " + std::to_string(s) +
                             " is no longer buffered (depth " + std::to_string(depth_) + ")");
    return out;
  }

  int depth_;
  std::vector<Slot> slots_;
};

}  // namespace dcgd
