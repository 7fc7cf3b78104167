#include "rankmctp/mctp.hpp"

#include <cmath>

namespace rankmctp {

ContrastStatistics contrast_statistics(const EffectVector& p,
                                       const Eigen::MatrixXd& v_hat,
                                       const ContrastFamily& c, int n_total,
                                       double eps_var) {
  if (c.c.cols() != p.p.size())
    throw validation_error("DIMENSION_MISMATCH", "contrast does not match effects");
  ContrastStatistics out;
  out.estimates = c.c * p.p;
  const Eigen::MatrixXd cvc = c.c * v_hat * c.c.transpose();
  const int q = static_cast<int>(c.c.rows());
  out.v_diag = cvc.diagonal();
  for (int l = 0; l < q; ++l)
    if (!(out.v_diag(l) > eps_var))
      throw degenerate_error("DEGENERATE_VARIANCE",
                             "zero variance for contrast '" + c.labels[l] + "'");
  out.t = std::sqrt(static_cast<double>(n_total)) *
          out.estimates.cwiseQuotient(out.v_diag.cwiseSqrt());
  out.r_hat = cvc.array() /
              (out.v_diag.cwiseSqrt() * out.v_diag.cwiseSqrt().transpose()).array();
  // Clip rounding spill and pin the diagonal.
  out.r_hat = out.r_hat.cwiseMax(-1.0).cwiseMin(1.0);
  out.r_hat.diagonal().setOnes();
  out.r_hat = 0.5 * (out.r_hat + out.r_hat.transpose());
  return out;
}

McTpResult mctp_infer(const Dataset& data, const ContrastFamily& c,
                      const QuantileConfig& qcfg) {
  const auto w = pairwise_effects(data);
  const auto p = relative_effects(w, data.design());
  const auto cov = estimate_covariance(data, w);
  const int n_total = data.design().total();
  const auto stats = contrast_statistics(p, cov.v, c, n_total);

  const auto quant = equicoordinate_quantile(stats.r_hat, qcfg);

  McTpResult res;
  res.method = "asymptotic";
  res.alpha = qcfg.alpha;
  res.quantile = quant.z;
  res.r_hat = stats.r_hat;
  const int q = static_cast<int>(c.c.rows());
  const double sqrt_n = std::sqrt(static_cast<double>(n_total));
  for (int l = 0; l < q; ++l) {
    ContrastResult cr;
    cr.label = c.labels[l];
    cr.estimate = stats.estimates(l);
    cr.statistic = stats.t(l);
    const double half = quant.z * std::sqrt(stats.v_diag(l)) / sqrt_n;
    cr.lower = cr.estimate - half;
    cr.upper = cr.estimate + half;
    cr.reject = std::abs(cr.statistic) >= quant.z;
    cr.p_adjusted =
        pvalue_from_maxima(quant.maxima, quant.z, qcfg.alpha, cr.statistic);
    res.contrasts.push_back(cr);
    res.max_abs_statistic = std::max(res.max_abs_statistic, std::abs(stats.t(l)));
  }
  res.global_reject = res.max_abs_statistic >= quant.z;
  res.global_p = pvalue_from_maxima(quant.maxima, quant.z, qcfg.alpha,
                                    res.max_abs_statistic);
  return res;
}

}  // namespace rankmctp
