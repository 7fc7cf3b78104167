#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rankmctp/bootstrap.hpp"

namespace rankmctp {

// One ratio of contrasts theta = c'p / d'p with a null margin (default 1).
struct RatioPair {
  Eigen::VectorXd c;
  Eigen::VectorXd d;
  std::string label;
  double margin = 1.0;
};

struct RatioSpec {
  std::vector<RatioPair> pairs;
};

// Fieller case for one ratio row.
enum class FiellerCase {
  Finite,           // A > 0: bounded interval [lo, hi]
  Exterior,         // A <= 0, discriminant > 0: complement of (lo, hi)
  WholeLine,        // A <= 0, discriminant <= 0: no information
  DegeneratePoint,  // c == d: theta is identically 1
};

std::string to_string(FiellerCase c);

struct RatioInterval {
  std::string label;
  double theta_hat = 0;
  double lower = 0, upper = 0;   // meaning depends on fieller_case
  FiellerCase fieller_case = FiellerCase::Finite;
  double a_coef = 0, b_coef = 0, c_coef = 0;
  bool denominator_near_zero = false;  // |sqrt(N) d'p̂| / sqrt(d'V̂d) < 2
  double margin = 1.0;
  // One-sided p-value for H1: theta < margin; NaN for degenerate rows.
  double p_one_sided = 1.0;
};

struct RatioResult {
  std::vector<RatioInterval> intervals;
  double quantile = 0;  // bootstrap equicoordinate c^eps(alpha)
  double alpha = 0;
  int replicates = 0;
};

// Studentized linear-form statistics sqrt(N)(theta_l d_l - c_l)'p̂ / sqrt(...)
// evaluated at the supplied theta values. Throws DEGENERATE_VARIANCE when a
// quadratic form falls below eps.
Eigen::VectorXd ratio_statistics(const Eigen::VectorXd& p_hat,
                                 const Eigen::MatrixXd& v_hat,
                                 const RatioSpec& spec,
                                 const std::vector<double>& theta, int n_total,
                                 double eps_var = 1e-12);

// Fieller interval for a single ratio row at a given critical value z:
// the theta-set where the studentized statistic stays within [-z, z].
RatioInterval fieller_interval(const Eigen::VectorXd& p_hat,
                               const Eigen::MatrixXd& v_hat,
                               const RatioPair& pair, double z, int n_total);

// Simultaneous Fieller intervals with a wild-bootstrap equicoordinate
// quantile; replicate linear forms are evaluated at the plug-in theta_hat.
RatioResult fieller_scis(const Dataset& data, const RatioSpec& spec,
                         const BootstrapConfig& cfg);

// TSV: rows come in consecutive numerator/denominator pairs, each row ad
// tab-separated coefficients, optionally preceded by a label column.
RatioSpec load_ratio_tsv(const std::string& path, int ad);

}  // namespace rankmctp
