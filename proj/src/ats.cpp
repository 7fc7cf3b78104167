#include "rankmctp/ats.hpp"

#include "rankmctp/distributions.hpp"
#include "rankmctp/effects.hpp"

namespace rankmctp {

AtsPieces ats_statistic(const Eigen::VectorXd& p, const Eigen::MatrixXd& v,
                        const ContrastFamily& c, int n_total) {
  AtsPieces out;
  out.m = projection(c);
  const Eigen::MatrixXd mv = out.m * v;
  const double tr = mv.trace();
  if (!(tr > 1e-12))
    throw degenerate_error("DEGENERATE_TRACE",
                           "tr(M V) is not positive; statistic undefined");
  out.q = n_total / tr * p.dot(out.m * p);
  out.f = tr * tr / (mv * mv).trace();
  return out;
}

AtsResult ats_infer(const Dataset& data, const ContrastFamily& c, double alpha) {
  const auto w = pairwise_effects(data);
  const auto p = relative_effects(w, data.design());
  const auto cov = estimate_covariance(data, w);
  const auto pieces = ats_statistic(p.p, cov.v, c, data.design().total());
  AtsResult res;
  res.q = pieces.q;
  res.f = pieces.f;
  res.p = chi_square_scaled_pvalue(pieces.q, pieces.f);
  res.reject = res.p <= alpha;
  res.method = "ats";
  return res;
}

}  // namespace rankmctp
