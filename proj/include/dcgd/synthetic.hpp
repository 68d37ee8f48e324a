#pragma once

#include <cstdint>
#include <stdexcept>

#include <Eigen/Dense>

#include "dcgd/objectives.hpp"
#include "dcgd/rng.hpp"

namespace dcgd {

// Synthetic regression/classification data: per node a Gaussian matrix with
// unit-norm columns, targets from a common planted signal with small
// measurement noise. Logistic targets are the signs of the noisy responses.
struct SyntheticSpec {
  ObjectiveKind kind = ObjectiveKind::LeastSquares;
  int nodes = 25;
  int dim = 10;
  int rows_per_node = 5;
  double data_noise_std = 1e-3;
  double huber_delta = 0.05;
  double mu = 0.0;        // Tikhonov weight, identity variant
  double sigma = 0.0;     // gradient noise level
};

inline Problem make_synthetic_problem(const SyntheticSpec& spec, double radius,
                                      std::uint64_t seed) {
  if (spec.nodes < 1 || spec.dim < 1 || spec.rows_per_node < 1)
    throw std::invalid_argument("synthetic: nodes, dim and rows_per_node must be >= 1");
  if (spec.kind == ObjectiveKind::TikhonovGradient)
    throw std::invalid_argument("synthetic: gradient-regularized problems come from the "
                                "tomography generator");

  Problem p;
  p.radius = radius;

  Eigen::VectorXd x_hat(spec.dim);
  {
    RngStream rng(stream_key(seed, "data.signal"));
    for (int i = 0; i < spec.dim; ++i) x_hat[i] = rng.next_double();
  }
  p.x_hint = x_hat;

  p.locals.reserve(static_cast<std::size_t>(spec.nodes));
  for (int node = 0; node < spec.nodes; ++node) {
    Eigen::MatrixXd A(spec.rows_per_node, spec.dim);
    {
      RngStream rng(stream_key(seed, "data.matrix", static_cast<std::uint64_t>(node)));
      for (int r = 0; r < spec.rows_per_node; ++r)
        for (int c = 0; c < spec.dim; ++c) A(r, c) = rng.next_gaussian();
    }
    for (int c = 0; c < spec.dim; ++c) {
      const double norm = A.col(c).norm();
      if (norm > 0.0) A.col(c) /= norm;
    }

    Eigen::VectorXd noise(spec.rows_per_node);
    {
      RngStream rng(stream_key(seed, "data.noise", static_cast<std::uint64_t>(node)));
      rng.fill_gaussian(noise);
    }
    Eigen::VectorXd b = A * x_hat + spec.data_noise_std * noise;

    switch (spec.kind) {
      case ObjectiveKind::LeastSquares:
        p.locals.push_back(LocalObjective::least_squares(std::move(A), std::move(b), spec.sigma));
        break;
      case ObjectiveKind::Huber:
        p.locals.push_back(
            LocalObjective::huber(std::move(A), std::move(b), spec.huber_delta, spec.sigma));
        break;
      case ObjectiveKind::Logistic: {
        for (Eigen::Index j = 0; j < b.size(); ++j) b[j] = b[j] >= 0.0 ? 1.0 : -1.0;
        p.locals.push_back(LocalObjective::logistic(std::move(A), std::move(b), spec.sigma));
        break;
      }
      case ObjectiveKind::TikhonovIdentity:
        p.locals.push_back(
            LocalObjective::tikhonov(std::move(A), std::move(b), spec.mu, spec.sigma));
        break;
      default:
        throw std::invalid_argument("synthetic: unsupported objective kind");
    }
  }
  return p;
}

}  // namespace dcgd
