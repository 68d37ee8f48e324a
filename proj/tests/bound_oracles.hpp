// Second, independent transcription of the convergence-bound formulas. The
// constant-heavy expressions are easy to mistype, so the analysis module is
// cross-checked against these term-by-term rewrites.
#pragma once

#include <cmath>

namespace bound_oracles {

struct Inputs {
  int m;
  int n;
  double radius;
  double lambda;
  double G;
  double L;
  double eta;
  double B;
  double sigma;
};

inline double increment_coeff(const Inputs& in) {
  const double log_term = -std::log(in.lambda);
  const double bracket = std::sqrt(M_PI) / (in.lambda * in.lambda * log_term) + 1.0 / 2.0;
  return std::sqrt(static_cast<double>(in.m)) * in.G * bracket / in.eta;
}

inline double diameter(const Inputs& in) {
  return 2.0 * std::sqrt(static_cast<double>(in.m)) * std::sqrt(static_cast<double>(in.n)) *
         in.radius;
}

inline double sqrt_coeff(const Inputs& in) {
  const double D = diameter(in);
  const double C = increment_coeff(in);
  double k = in.eta * D * D;
  k += 4.0 * std::sqrt(2.0 * in.m * in.L) * D * C * in.B;
  k += 4.0 * in.m * in.sigma * in.sigma / in.eta;
  return k;
}

inline double geometric_sum_bound(double c2, double lambda, long t) {
  return std::sqrt(M_PI) /
         (c2 * std::sqrt(static_cast<double>(t)) * lambda * lambda * std::log(1.0 / lambda));
}

inline double disagreement_closed(const Inputs& in, long t) {
  return std::sqrt(M_PI * in.m) * in.G /
         (in.lambda * in.lambda * in.eta * std::sqrt(static_cast<double>(t)) *
          std::log(1.0 / in.lambda)) *
         (in.lambda * in.lambda) * (1.0 / (in.lambda * in.lambda));
}

inline double average_disagreement(const Inputs& in, long T) {
  return 2.0 * std::sqrt(M_PI * in.m) * in.G /
         (in.eta * std::sqrt(static_cast<double>(T)) * std::log(1.0 / in.lambda)) /
         (in.lambda * in.lambda);
}

inline double stale_iterate_gap(const Inputs& in, long t) {
  const double C = increment_coeff(in);
  const double first = std::sqrt(2.0 * in.m) * in.B / std::sqrt(static_cast<double>(t));
  const double second = 4.0 * in.m * in.B * in.B / static_cast<double>(t);
  return C * (first + second);
}

inline double average_gap(const Inputs& in, long T) {
  const double D = diameter(in);
  return in.L * D * D / static_cast<double>(T) + sqrt_coeff(in) / std::sqrt(static_cast<double>(T));
}

inline double consensus_gap(const Inputs& in, long T) {
  const double D = diameter(in);
  const double C = increment_coeff(in);
  const double one_over_T = (in.L * D * D + 2.0 * std::sqrt(static_cast<double>(in.m)) * in.L * C * C) /
                            static_cast<double>(T);
  const double one_over_sqrtT =
      (sqrt_coeff(in) + 2.0 * std::sqrt(static_cast<double>(in.m)) * C * in.G) /
      std::sqrt(static_cast<double>(T));
  return one_over_T + one_over_sqrtT;
}

}  // namespace bound_oracles
