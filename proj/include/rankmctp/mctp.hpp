#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rankmctp/contrasts.hpp"
#include "rankmctp/covariance.hpp"
#include "rankmctp/dataset.hpp"
#include "rankmctp/distributions.hpp"

namespace rankmctp {

struct ContrastResult {
  std::string label;
  double estimate = 0;
  double statistic = 0;
  double lower = 0, upper = 0;
  double p_adjusted = 1;
  bool reject = false;
};

struct McTpResult {
  std::vector<ContrastResult> contrasts;
  double max_abs_statistic = 0;
  double quantile = 0;     // z or the bootstrap c^eps(alpha)
  double alpha = 0;
  bool global_reject = false;
  double global_p = 1;
  Eigen::MatrixXd r_hat;
  std::string method;      // "asymptotic" or "bootstrap"
};

// Per-contrast statistics T_l = sqrt(N) c_l' p̂ / sqrt(v_ll) and the
// estimated correlation matrix of T. Throws degenerate_error
// ("DEGENERATE_VARIANCE") naming the first contrast with v_ll below eps.
struct ContrastStatistics {
  Eigen::VectorXd estimates;  // c_l' p̂
  Eigen::VectorXd t;
  Eigen::VectorXd v_diag;     // v_ll
  Eigen::MatrixXd r_hat;
};

ContrastStatistics contrast_statistics(const EffectVector& p,
                                       const Eigen::MatrixXd& v_hat,
                                       const ContrastFamily& c, int n_total,
                                       double eps_var = 1e-12);

// Full asymptotic MCTP: statistics, equicoordinate quantile, SCIs,
// adjusted p-values and the global max test, all from one MC sample.
McTpResult mctp_infer(const Dataset& data, const ContrastFamily& c,
                      const QuantileConfig& qcfg);

}  // namespace rankmctp
