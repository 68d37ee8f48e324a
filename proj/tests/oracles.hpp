// Independent reference implementations used only by the tests. These stay
// deliberately naive (explicit loops, no shared code with the library's
// solver path) so they can serve as oracles.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "dcgd/objectives.hpp"

namespace oracles {

// central finite differences with step h*(1 + ||x||)
inline Eigen::VectorXd finite_difference_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                                  const Eigen::VectorXd& x, double h = 1e-6) {
  const double step = h * (1.0 + x.norm());
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd hi = x, lo = x;
    hi[i] += step;
    lo[i] -= step;
    g[i] = (f(hi) - f(lo)) / (2.0 * step);
  }
  return g;
}

inline double clamp1(double v, double radius) {
  return v > radius ? radius : (v < -radius ? -radius : v);
}

// projected gradient descent on a single objective, the m = 1 reduction of
// the decentralized update
inline std::vector<Eigen::VectorXd> projected_gradient_descent(
    const dcgd::LocalObjective& f, const Eigen::VectorXd& x0, double radius,
    const std::function<double(long)>& step_size, long iterations) {
  std::vector<Eigen::VectorXd> iterates;
  iterates.push_back(x0);
  Eigen::VectorXd x = x0;
  for (long t = 0; t < iterations; ++t) {
    const Eigen::VectorXd g = f.gradient(x);
    Eigen::VectorXd next = x - step_size(t) * g;
    for (Eigen::Index i = 0; i < next.size(); ++i) next[i] = clamp1(next[i], radius);
    iterates.push_back(next);
    x = next;
  }
  return iterates;
}

// straight-line transcription of the per-node update rule, exact gradients,
// no delays
inline std::vector<Eigen::MatrixXd> plain_iteration(const std::vector<dcgd::LocalObjective>& fs,
                                                    const Eigen::MatrixXd& W, double radius,
                                                    const std::function<double(long)>& step_size,
                                                    long iterations) {
  const int m = static_cast<int>(fs.size());
  const Eigen::Index n = fs.front().dim();
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(m, n);
  std::vector<Eigen::MatrixXd> iterates;
  iterates.push_back(x);
  for (long t = 0; t < iterations; ++t) {
    Eigen::MatrixXd next(m, n);
    for (int i = 0; i < m; ++i) {
      Eigen::VectorXd mixed = Eigen::VectorXd::Zero(n);
      for (int j = 0; j < m; ++j) mixed += W(i, j) * x.row(j).transpose();
      const Eigen::VectorXd g = fs[static_cast<std::size_t>(i)].gradient(x.row(i).transpose());
      for (Eigen::Index c = 0; c < n; ++c)
        next(i, c) = clamp1(mixed[c] - step_size(t) * g[c], radius);
    }
    x = next;
    iterates.push_back(x);
  }
  return iterates;
}

// disagreement by explicit double loop
inline double naive_disagreement_sum_sq(const Eigen::MatrixXd& v) {
  const int m = static_cast<int>(v.rows());
  double total = 0.0;
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    double mean = 0.0;
    for (int i = 0; i < m; ++i) mean += v(i, c);
    mean /= m;
    for (int i = 0; i < m; ++i) total += (v(i, c) - mean) * (v(i, c) - mean);
  }
  return total;
}

}  // namespace oracles
