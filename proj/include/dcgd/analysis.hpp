#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace dcgd {

struct DisagreementMetrics {
  double frobenius = 0.0;  // ||(I-J) v||_F
  double sum_sq = 0.0;     // sum_i ||v_i - mean||^2 = frobenius^2
};

inline DisagreementMetrics disagreement_metrics(const Eigen::MatrixXd& v) {
  if (v.rows() < 1) throw std::invalid_argument("disagreement_metrics: empty matrix");
  const Eigen::RowVectorXd mean = v.colwise().mean();
  const double sq = (v.rowwise() - mean).squaredNorm();
  return DisagreementMetrics{std::sqrt(sq), sq};
}

// Weighted geometric sum sum_{s=0}^{t-1} lambda^{t-1-s} / (c1 + c2 sqrt(s))
// together with its closed-form majorant sqrt(pi) lambda^-2 / (c2 sqrt(t)
// log(1/lambda)). With c1 = 0 the s = 0 summand is undefined; it is dropped
// and flagged.
struct GeometricStepSum {
  double exact = 0.0;
  double bound = 0.0;
  bool zero_start_dropped = false;
};

inline double geometric_step_sum_bound(double c2, double lambda, long t) {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw std::invalid_argument("geometric_step_sum: lambda must be in (0,1)");
  if (!(c2 > 0.0)) throw std::invalid_argument("geometric_step_sum: c2 must be positive");
  if (t < 1) throw std::invalid_argument("geometric_step_sum: t must be >= 1");
  return std::sqrt(M_PI) / (lambda * lambda * c2 * std::sqrt(static_cast<double>(t)) *
                            std::log(1.0 / lambda));
}

inline GeometricStepSum geometric_step_sum(double c1, double c2, double lambda, long t) {
  if (c1 < 0.0) throw std::invalid_argument("geometric_step_sum: c1 must be nonnegative");
  GeometricStepSum out;
  out.bound = geometric_step_sum_bound(c2, lambda, t);
  double total = 0.0;
  long s0 = 0;
  if (c1 == 0.0) {
    out.zero_start_dropped = true;
    s0 = 1;
  }
  for (long s = s0; s < t; ++s)
    total += std::pow(lambda, static_cast<double>(t - 1 - s)) /
             (c1 + c2 * std::sqrt(static_cast<double>(s)));
  out.exact = total;
  return out;
}

// exact values for every t in 1..t_max via the recurrence
// S(t+1) = lambda S(t) + alpha(t); out[t-1] = S(t)
inline std::vector<double> geometric_step_sum_series(double c1, double c2, double lambda,
                                                     long t_max) {
  if (!(lambda >= 0.0 && lambda < 1.0))
    throw std::invalid_argument("geometric_step_sum_series: lambda must be in [0,1)");
  if (t_max < 1) throw std::invalid_argument("geometric_step_sum_series: t_max must be >= 1");
  std::vector<double> out(static_cast<std::size_t>(t_max));
  double s_val = 0.0;
  for (long t = 0; t < t_max; ++t) {
    const double alpha =
        (t == 0 && c1 == 0.0) ? 0.0 : 1.0 / (c1 + c2 * std::sqrt(static_cast<double>(t)));
    s_val = lambda * s_val + alpha;
    out[static_cast<std::size_t>(t)] = s_val;
  }
  return out;
}

// Everything needed to evaluate the convergence bounds numerically.
struct BoundInputs {
  int m = 1;
  int n = 1;
  double radius = 1.0;
  double lambda = 0.5;      // ||W - J||
  double gradient_bound = 0.0;
  double lipschitz = 0.0;   // max over nodes
  double eta = 0.01;
  double delay_rms = 0.0;   // B
  double sigma = 0.0;
};

// Derived constants of the rate estimates:
//   increment_coeff  bounds sqrt(t) E||x(t+1) - x(t)||
//   diameter         of the product box, 2 sqrt(mn) R
//   sqrt_coeff       coefficient of 1/sqrt(T) in the running-average gap bound
class ConvergenceBounds {
 public:
  explicit ConvergenceBounds(const BoundInputs& in) : in_(in) {
    if (!(in.lambda > 0.0 && in.lambda < 1.0))
      throw std::invalid_argument("bounds: lambda must be in (0,1)");
    if (!(in.eta > 0.0)) throw std::invalid_argument("bounds: eta must be positive");
    const double sm = std::sqrt(static_cast<double>(in.m));
    const double log_inv = std::log(1.0 / in.lambda);
    increment_coeff_ =
        sm * in.gradient_bound / in.eta *
        (std::sqrt(M_PI) / (in.lambda * in.lambda * log_inv) + 0.5);
    diameter_ = 2.0 * std::sqrt(static_cast<double>(in.m) * in.n) * in.radius;
    sqrt_coeff_ = in.eta * diameter_ * diameter_ +
                  4.0 * std::sqrt(2.0 * in.m * in.lipschitz) * diameter_ * increment_coeff_ *
                      in.delay_rms +
                  4.0 * in.m * in.sigma * in.sigma / in.eta;
  }

  const BoundInputs& inputs() const { return in_; }
  double increment_coeff() const { return increment_coeff_; }
  double diameter() const { return diameter_; }
  double sqrt_coeff() const { return sqrt_coeff_; }

  // sqrt(m) G sum_{s<t} alpha(s) lambda^{t-1-s} with alpha(s) = 1/(2L + 2 eta sqrt(s))
  double disagreement_exact(long t) const {
    const auto s = geometric_step_sum(2.0 * in_.lipschitz, 2.0 * in_.eta, in_.lambda, t);
    return std::sqrt(static_cast<double>(in_.m)) * in_.gradient_bound * s.exact;
  }

  // exact envelope for all t in 1..t_max
  std::vector<double> disagreement_exact_series(long t_max) const {
    auto s = geometric_step_sum_series(2.0 * in_.lipschitz, 2.0 * in_.eta, in_.lambda, t_max);
    const double scale = std::sqrt(static_cast<double>(in_.m)) * in_.gradient_bound;
    for (auto& v : s) v *= scale;
    return s;
  }

  // sqrt(pi m) G lambda^-2 / (eta sqrt(t) log(1/lambda))
  double disagreement_closed(long t) const {
    return std::sqrt(static_cast<double>(in_.m)) * in_.gradient_bound *
           geometric_step_sum_bound(2.0 * in_.eta, in_.lambda, t);
  }

  // running-average disagreement: twice the closed form at T
  double average_disagreement(long T) const { return 2.0 * disagreement_closed(T); }

  // E||x(t) - x(t - tau(t))||  <=  C (sqrt(2m) B / sqrt(t) + 4 m B^2 / t)
  double stale_iterate_gap(long t) const {
    if (t < 1) throw std::invalid_argument("bounds: t must be >= 1");
    const double st = std::sqrt(static_cast<double>(t));
    return increment_coeff_ * (std::sqrt(2.0 * in_.m) * in_.delay_rms / st +
                               4.0 * in_.m * in_.delay_rms * in_.delay_rms / t);
  }

  // running-average objective gap: L D^2 / T + K / sqrt(T)
  double average_gap(long T) const {
    if (T < 1) throw std::invalid_argument("bounds: T must be >= 1");
    return in_.lipschitz * diameter_ * diameter_ / static_cast<double>(T) +
           sqrt_coeff_ / std::sqrt(static_cast<double>(T));
  }

  // consensus-average objective gap:
  // (L D^2 + 2 sqrt(m) L C^2) / T + (K + 2 sqrt(m) C G) / sqrt(T)
  double consensus_gap(long T) const {
    if (T < 1) throw std::invalid_argument("bounds: T must be >= 1");
    const double sm = std::sqrt(static_cast<double>(in_.m));
    return (in_.lipschitz * diameter_ * diameter_ +
            2.0 * sm * in_.lipschitz * increment_coeff_ * increment_coeff_) /
               static_cast<double>(T) +
           (sqrt_coeff_ + 2.0 * sm * increment_coeff_ * in_.gradient_bound) /
               std::sqrt(static_cast<double>(T));
  }

  // past this iteration the 1/sqrt(t) term of the stale-iterate gap dominates
  long stale_regime_start() const {
    return static_cast<long>(std::ceil(8.0 * in_.m * in_.delay_rms * in_.delay_rms));
  }

 private:
  BoundInputs in_;
  double increment_coeff_;
  double diameter_;
  double sqrt_coeff_;
};

// Grid search for the eta minimizing the 1/sqrt(T) coefficient of the
// consensus-gap bound, K(eta) + 2 sqrt(m) C(eta) G.
inline double minimize_sqrt_coefficient_eta(BoundInputs in, double eta_lo = 1e-4,
                                            double eta_hi = 1e2, int grid = 241) {
  if (!(eta_lo > 0.0 && eta_hi > eta_lo) || grid < 2)
    throw std::invalid_argument("minimize_sqrt_coefficient_eta: bad search range");
  double best_eta = eta_lo;
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid; ++i) {
    const double f = static_cast<double>(i) / (grid - 1);
    in.eta = eta_lo * std::pow(eta_hi / eta_lo, f);
    const ConvergenceBounds b(in);
    const double val = b.sqrt_coeff() +
                       2.0 * std::sqrt(static_cast<double>(in.m)) * b.increment_coeff() *
                           in.gradient_bound;
    if (val < best_val) {
      best_val = val;
      best_eta = in.eta;
    }
  }
  return best_eta;
}

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;  // of log(value) against log(t)
  int points = 0;
};

// Least-squares line through (log t, log value) restricted to t in
// [t_lo, t_hi]. Needs at least 10 points and positive values.
inline LogLogFit fit_loglog_rate(std::span<const long> t, std::span<const double> value,
                                 double t_lo, double t_hi) {
  if (t.size() != value.size()) throw std::invalid_argument("fit_loglog_rate: length mismatch");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int k = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double ti = static_cast<double>(t[i]);
    if (ti < t_lo || ti > t_hi) continue;
    if (!(value[i] > 0.0))
      throw std::invalid_argument("fit_loglog_rate: nonpositive value inside window");
    const double lx = std::log(ti);
    const double ly = std::log(value[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++k;
  }
  if (k < 10) throw std::invalid_argument("fit_loglog_rate: fewer than 10 points in window");
  LogLogFit fit;
  const double denom = k * sxx - sx * sx;
  fit.slope = (k * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / k;
  fit.points = k;
  return fit;
}

}  // namespace dcgd
