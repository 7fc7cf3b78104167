#pragma once

#include "rankmctp/contrasts.hpp"
#include "rankmctp/covariance.hpp"
#include "rankmctp/dataset.hpp"

namespace rankmctp {

struct AtsResult {
  double q = 0;       // statistic
  double f = 0;       // estimated degrees of freedom
  double p = 1;       // approximate p-value
  std::string method = "ats";
  bool reject = false;
  double critical = 0;  // bootstrap only
};

// ANOVA-type statistic with a scaled chi-square approximation for the
// global hypothesis encoded by the contrast family.
AtsResult ats_infer(const Dataset& data, const ContrastFamily& c,
                    double alpha = 0.05);

// Statistic pieces reused by the bootstrap path.
struct AtsPieces {
  double q = 0;
  double f = 0;
  Eigen::MatrixXd m;  // projection matrix
};
AtsPieces ats_statistic(const Eigen::VectorXd& p, const Eigen::MatrixXd& v,
                        const ContrastFamily& c, int n_total);

}  // namespace rankmctp
