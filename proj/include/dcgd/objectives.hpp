#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "dcgd/rng.hpp"

namespace dcgd {

enum class ObjectiveKind {
  LeastSquares,      // (1/2)||Ax - b||^2
  Huber,             // sum of per-row Huber penalties with threshold delta
  Logistic,          // sum_j log(1 + exp(a_j'x)) - b01_j a_j'x, labels in {-1,+1}
  TikhonovIdentity,  // (1/2)(||Ax - b||^2 + mu ||x||^2)
  TikhonovGradient,  // (1/2)(||Ax - b||^2 + mu ||Dx||^2)
};

inline const char* to_string(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::LeastSquares: return "least-squares";
    case ObjectiveKind::Huber: return "huber";
    case ObjectiveKind::Logistic: return "logistic";
    case ObjectiveKind::TikhonovIdentity: return "tikhonov-identity";
    case ObjectiveKind::TikhonovGradient: return "tikhonov-gradient";
  }
  return "?";
}

namespace detail {

// Largest eigenvalue of a symmetric PSD operator by power iteration with a
// Rayleigh-quotient stopping rule. The result is inflated by 1e-7 relative so
// downstream smoothness constants stay on the upper side of the true value.
template <class Apply>
double psd_operator_norm(Eigen::Index n, Apply&& apply, double rel_tol = 1e-8,
                         int max_iter = 100000) {
  if (n == 0) return 0.0;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] += 1e-3 * std::sin(static_cast<double>(i) + 1.0);
  v.normalize();
  double value = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = apply(v);
    const double rq = v.dot(w);
    const double norm = w.norm();
    if (norm <= 1e-300) return 0.0;
    v = w / norm;
    if (it > 0 && std::abs(rq - value) <= rel_tol * std::max(std::abs(rq), 1e-300)) {
      value = rq;
      break;
    }
    value = rq;
  }
  return value * (1.0 + 1e-7);
}

inline double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace detail

// One node's private convex objective with exact and noisy gradient oracles.
// Immutable after construction; the stochastic oracle draws from an explicit
// stream so concurrent per-node evaluation stays deterministic.
class LocalObjective {
 public:
  static LocalObjective least_squares(Eigen::MatrixXd A, Eigen::VectorXd b, double sigma = 0.0) {
    return LocalObjective(ObjectiveKind::LeastSquares, std::move(A), std::move(b), 0.0, 0.0, {},
                          sigma);
  }

  static LocalObjective huber(Eigen::MatrixXd A, Eigen::VectorXd b, double delta,
                              double sigma = 0.0) {
    if (!(delta > 0.0)) throw std::invalid_argument("huber: delta must be positive");
    return LocalObjective(ObjectiveKind::Huber, std::move(A), std::move(b), delta, 0.0, {}, sigma);
  }

  static LocalObjective logistic(Eigen::MatrixXd A, Eigen::VectorXd labels, double sigma = 0.0) {
    for (Eigen::Index j = 0; j < labels.size(); ++j)
      if (labels[j] != 1.0 && labels[j] != -1.0)
        throw std::invalid_argument("logistic: labels must be -1 or +1");
    return LocalObjective(ObjectiveKind::Logistic, std::move(A), std::move(labels), 0.0, 0.0, {},
                          sigma);
  }

  static LocalObjective tikhonov(Eigen::MatrixXd A, Eigen::VectorXd b, double mu,
                                 double sigma = 0.0) {
    if (mu < 0.0) throw std::invalid_argument("tikhonov: mu must be nonnegative");
    return LocalObjective(ObjectiveKind::TikhonovIdentity, std::move(A), std::move(b), 0.0, mu, {},
                          sigma);
  }

  static LocalObjective tikhonov(Eigen::MatrixXd A, Eigen::VectorXd b, double mu,
                                 Eigen::SparseMatrix<double> D, double sigma = 0.0) {
    if (mu < 0.0) throw std::invalid_argument("tikhonov: mu must be nonnegative");
    if (D.cols() != A.cols())
      throw std::invalid_argument("tikhonov: regularization operator has wrong column count");
    return LocalObjective(ObjectiveKind::TikhonovGradient, std::move(A), std::move(b), 0.0, mu,
                          std::move(D), sigma);
  }

  ObjectiveKind kind() const { return kind_; }
  Eigen::Index dim() const { return A_.cols(); }
  Eigen::Index rows() const { return A_.rows(); }
  const Eigen::MatrixXd& data_matrix() const { return A_; }
  const Eigen::VectorXd& targets() const { return b_; }
  double huber_delta() const { return delta_; }
  double tikhonov_weight() const { return mu_; }
  const Eigen::SparseMatrix<double>& regularizer() const { return D_; }
  double noise_level() const { return sigma_; }
  double lipschitz() const { return lipschitz_; }

  double value(const Eigen::VectorXd& x) const {
    check_dim(x);
    switch (kind_) {
      case ObjectiveKind::LeastSquares:
        return 0.5 * (A_ * x - b_).squaredNorm();
      case ObjectiveKind::Huber: {
        const Eigen::VectorXd r = A_ * x - b_;
        double total = 0.0;
        for (Eigen::Index j = 0; j < r.size(); ++j) {
          const double a = std::abs(r[j]);
          total += a <= delta_ ? 0.5 * a * a : delta_ * (a - 0.5 * delta_);
        }
        return total;
      }
      case ObjectiveKind::Logistic: {
        const Eigen::VectorXd z = A_ * x;
        double total = 0.0;
        for (Eigen::Index j = 0; j < z.size(); ++j)
          total += detail::softplus(z[j]) - label01(j) * z[j];
        return total;
      }
      case ObjectiveKind::TikhonovIdentity:
        return 0.5 * ((A_ * x - b_).squaredNorm() + mu_ * x.squaredNorm());
      case ObjectiveKind::TikhonovGradient:
        return 0.5 * ((A_ * x - b_).squaredNorm() + mu_ * (D_ * x).squaredNorm());
    }
    return 0.0;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const {
    check_dim(x);
    switch (kind_) {
      case ObjectiveKind::LeastSquares:
        return A_.transpose() * (A_ * x - b_);
      case ObjectiveKind::Huber: {
        Eigen::VectorXd r = A_ * x - b_;
        for (Eigen::Index j = 0; j < r.size(); ++j) {
          // at |r| = delta both branch derivatives coincide at delta*sign(r)
          if (std::abs(r[j]) > delta_) r[j] = r[j] > 0.0 ? delta_ : -delta_;
        }
        return A_.transpose() * r;
      }
      case ObjectiveKind::Logistic: {
        Eigen::VectorXd z = A_ * x;
        for (Eigen::Index j = 0; j < z.size(); ++j)
          z[j] = detail::sigmoid(z[j]) - label01(j);
        return A_.transpose() * z;
      }
      case ObjectiveKind::TikhonovIdentity:
        return A_.transpose() * (A_ * x - b_) + mu_ * x;
      case ObjectiveKind::TikhonovGradient:
        return A_.transpose() * (A_ * x - b_) + mu_ * (D_.transpose() * (D_ * x));
    }
    return Eigen::VectorXd();
  }

  // gradient(x) + eps with eps ~ N(0, sigma^2 I), drawn from the given
  // stream. The realized noise can be captured for tests.
  Eigen::VectorXd stochastic_gradient(const Eigen::VectorXd& x, RngStream& rng,
                                      Eigen::VectorXd* noise_out = nullptr) const {
    Eigen::VectorXd g = gradient(x);
    if (sigma_ > 0.0) {
      Eigen::VectorXd eps(g.size());
      rng.fill_gaussian(eps);
      eps *= sigma_;
      g += eps;
      if (noise_out) *noise_out = std::move(eps);
    } else if (noise_out) {
      *noise_out = Eigen::VectorXd::Zero(g.size());
    }
    return g;
  }

  // Finite upper bound on sup { ||grad f(x)|| : ||x||_inf <= radius }.
  double gradient_bound(double radius) const {
    if (!(radius > 0.0)) throw std::invalid_argument("gradient_bound: radius must be positive");
    const double box_norm = std::sqrt(static_cast<double>(dim())) * radius;  // sup ||x||_2
    switch (kind_) {
      case ObjectiveKind::Logistic: {
        double total = 0.0;  // |sigmoid - label01| <= 1 per row
        for (Eigen::Index j = 0; j < A_.rows(); ++j) total += A_.row(j).norm();
        return total;
      }
      case ObjectiveKind::Huber: {
        double row_total = 0.0;  // clipped residuals never exceed delta
        for (Eigen::Index j = 0; j < A_.rows(); ++j) row_total += A_.row(j).norm();
        return std::min(delta_ * row_total, quadratic_gradient_bound(box_norm));
      }
      default:
        return quadratic_gradient_bound(box_norm);
    }
  }

 private:
  LocalObjective(ObjectiveKind kind, Eigen::MatrixXd A, Eigen::VectorXd b, double delta, double mu,
                 Eigen::SparseMatrix<double> D, double sigma)
      : kind_(kind),
        A_(std::move(A)),
        b_(std::move(b)),
        delta_(delta),
        mu_(mu),
        D_(std::move(D)),
        sigma_(sigma) {
    if (A_.rows() != b_.size())
      throw std::invalid_argument("objective: row count of A must match length of b");
    if (sigma_ < 0.0) throw std::invalid_argument("objective: sigma must be nonnegative");
    gram_norm_ = detail::psd_operator_norm(
        A_.cols(), [this](const Eigen::VectorXd& v) -> Eigen::VectorXd {
          return A_.transpose() * (A_ * v);
        });
    if (kind_ == ObjectiveKind::TikhonovGradient)
      reg_norm_ = detail::psd_operator_norm(
          D_.cols(), [this](const Eigen::VectorXd& v) -> Eigen::VectorXd {
            return D_.transpose() * (D_ * v);
          });
    else if (kind_ == ObjectiveKind::TikhonovIdentity)
      reg_norm_ = 1.0;
    lipschitz_ = compute_lipschitz();
  }

  // ||A'A||, /4 for logistic curvature, + mu * ||reg'reg|| for Tikhonov.
  double compute_lipschitz() const {
    switch (kind_) {
      case ObjectiveKind::LeastSquares:
      case ObjectiveKind::Huber:
        return gram_norm_;
      case ObjectiveKind::Logistic:
        return gram_norm_ / 4.0;
      case ObjectiveKind::TikhonovIdentity:
      case ObjectiveKind::TikhonovGradient:
        return gram_norm_ + mu_ * reg_norm_;
    }
    return 0.0;
  }

  double quadratic_gradient_bound(double box_norm) const {
    const double op = std::sqrt(gram_norm_);  // ||A||_2
    return op * (op * box_norm + b_.norm()) + mu_ * reg_norm_ * box_norm;
  }

  double label01(Eigen::Index j) const { return 0.5 * (b_[j] + 1.0); }

  void check_dim(const Eigen::VectorXd& x) const {
    if (x.size() != A_.cols()) throw std::invalid_argument("objective: x has wrong dimension");
  }

  ObjectiveKind kind_;
  Eigen::MatrixXd A_;
  Eigen::VectorXd b_;
  double delta_ = 0.0;
  double mu_ = 0.0;
  Eigen::SparseMatrix<double> D_;
  double sigma_ = 0.0;
  double gram_norm_ = 0.0;  // ||A'A||_2
  double reg_norm_ = 0.0;   // ||reg'reg||_2
  double lipschitz_ = 0.0;
};

// A full decentralized problem: one objective per node plus the box radius of
// the common feasible set X = { ||x||_inf <= radius }.
struct Problem {
  std::vector<LocalObjective> locals;
  double radius = 1.0;
  Eigen::VectorXd x_hint;  // generating signal for synthetic data, empty otherwise

  int nodes() const { return static_cast<int>(locals.size()); }
  Eigen::Index dim() const { return locals.empty() ? 0 : locals.front().dim(); }

  double total_value(const Eigen::VectorXd& x) const {
    double total = 0.0;
    for (const auto& f : locals) total += f.value(x);
    return total;
  }

  Eigen::VectorXd total_gradient(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim());
    for (const auto& f : locals) g += f.gradient(x);
    return g;
  }

  double max_lipschitz() const {
    double L = 0.0;
    for (const auto& f : locals) L = std::max(L, f.lipschitz());
    return L;
  }

  double total_lipschitz() const {
    double L = 0.0;
    for (const auto& f : locals) L += f.lipschitz();
    return L;
  }

  double max_gradient_bound() const {
    double G = 0.0;
    for (const auto& f : locals) G = std::max(G, f.gradient_bound(radius));
    return G;
  }
};

// Constants entering the convergence bounds. gradient_bound covers both the
// exact gradients and (via the sigma*sqrt(n) margin) the expected norm of the
// noisy ones.
struct BoundParameters {
  double gradient_bound = 0.0;  // G
  double lipschitz = 0.0;       // max over nodes
  double noise_level = 0.0;     // sigma
  double delay_rms = 0.0;       // B, sqrt of the delay second-moment bound
  double radius = 0.0;
};

inline BoundParameters make_bound_parameters(const Problem& p, double delay_rms) {
  double sigma = 0.0;
  for (const auto& f : p.locals) sigma = std::max(sigma, f.noise_level());
  BoundParameters bp;
  bp.lipschitz = p.max_lipschitz();
  bp.gradient_bound =
      p.max_gradient_bound() + sigma * std::sqrt(static_cast<double>(p.dim()));
  bp.noise_level = sigma;
  bp.delay_rms = delay_rms;
  bp.radius = p.radius;
  return bp;
}

}  // namespace dcgd
