#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "rankmctp/errors.hpp"

namespace rankmctp {

struct QuantileConfig {
  int mc_size = 100000;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  int threads = 0;  // 0 = hardware concurrency

  void validate() const {
    if (mc_size < 1000) throw validation_error("BAD_CONFIG", "mc_size < 1000");
    if (!(alpha > 0 && alpha < 1)) throw validation_error("BAD_ALPHA", "alpha not in (0,1)");
  }
};

// Monte-Carlo sample of max_l |Y_l| for Y ~ N(0, R); sorted ascending.
// Draw order is fixed by (seed, mc_size) alone, independent of thread count.
std::vector<double> max_abs_normal_sample(const Eigen::MatrixXd& r,
                                          const QuantileConfig& cfg);

struct EquicoordinateQuantile {
  double z = 0;                  // critical value
  std::vector<double> maxima;    // the sorted MC sample, reusable for p-values
  double alpha = 0;
};

// Two-sided equicoordinate (1-alpha)-quantile of N(0, R).
EquicoordinateQuantile equicoordinate_quantile(const Eigen::MatrixXd& r,
                                               const QuantileConfig& cfg);

// Critical value from a sorted sample of maxima: the smallest sample value z
// with #{m >= z} <= floor(alpha * n). Chosen so that the p-value rule
// #{m >= |t|}/n <= alpha agrees with |t| >= z.
double critical_from_maxima(const std::vector<double>& sorted_maxima, double alpha);

// P-value #{m >= |t|}/n from a sorted sample, clamped to keep the decision
// |t| >= z and p <= alpha consistent.
double pvalue_from_maxima(const std::vector<double>& sorted_maxima, double z,
                          double alpha, double t);

// Tail probability P(chi^2_f / f > q) for fractional f > 0.
double chi_square_scaled_pvalue(double q, double f);

// Regularized upper incomplete gamma Q(a, x), absolute accuracy ~1e-14.
double reg_gamma_q(double a, double x);

// Symmetric PSD square root with negative eigenvalues clipped at zero.
Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m);

}  // namespace rankmctp
