#include "rankmctp/effects.hpp"

#include <vector>

namespace rankmctp {

PairwiseEffects pairwise_effects(const Dataset& data) {
  const auto& dz = data.design();
  const int ad = dz.cells();
  Eigen::MatrixXd w(ad, ad);
  std::vector<double> pooled;
  for (int i = 0; i < dz.a; ++i) {
    for (int j = 0; j < dz.d; ++j) {
      const int ij = dz.cell_index(i, j);
      const Eigen::VectorXd xi = data.cell(i, j);
      for (int r = 0; r < dz.a; ++r) {
        for (int s = 0; s < dz.d; ++s) {
          const int rs = dz.cell_index(r, s);
          const Eigen::VectorXd xr = data.cell(r, s);
          const int ni = dz.n[i];
          const int nr = dz.n[r];
          pooled.assign(xi.data(), xi.data() + ni);
          pooled.insert(pooled.end(), xr.data(), xr.data() + nr);
          const auto ranks = midranks(pooled);
          // Keep the numerator an exact multiple of 1/2 before the single
          // division so the value equals the counting definition bitwise.
          double rank_sum = 0;
          for (int k = 0; k < ni; ++k) rank_sum += ranks[k];
          w(rs, ij) = (rank_sum - 0.5 * ni * (ni + 1)) /
                      (static_cast<double>(ni) * nr);
        }
      }
    }
  }
  return {std::move(w)};
}

EffectVector relative_effects(const PairwiseEffects& w, const Design& design) {
  const int ad = design.cells();
  if (w.w.rows() != ad || w.w.cols() != ad)
    throw validation_error("DIMENSION_MISMATCH",
                           "pairwise effects do not match the design");
  return {w.w.colwise().mean().transpose()};
}

}  // namespace rankmctp
