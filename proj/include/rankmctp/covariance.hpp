#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rankmctp/dataset.hpp"
#include "rankmctp/effects.hpp"

namespace rankmctp {

// Centered residuals D(r)[k](s, pq) = F̂_pq(X_rsk) - ŵ_pq,rs.
// Stored per group r as a (n_r) x (d * ad) matrix; column index s*ad + pq.
struct ResidualTable {
  std::vector<Eigen::MatrixXd> d;
  int a = 0, d_levels = 0;

  double at(int r, int k, int s, int pq) const {
    return d[r](k, s * a * d_levels + pq);
  }
};

// τ̂ products, indexed by (r; s, j; pq, p'q'). Symmetric in the pairs
// (s, pq) <-> (j, p'q').
class TauTable {
public:
  TauTable(int a, int d);
  double& at(int r, int s, int j, int pq, int pq2) {
    return tau_[r][((s * d_ + j) * ad_ + pq) * ad_ + pq2];
  }
  double at(int r, int s, int j, int pq, int pq2) const {
    return tau_[r][((s * d_ + j) * ad_ + pq) * ad_ + pq2];
  }
  int groups() const { return static_cast<int>(tau_.size()); }
  int d_levels() const { return d_; }

private:
  int d_, ad_;
  std::vector<std::vector<double>> tau_;
};

struct CovarianceEstimate {
  Eigen::MatrixXd sigma;  // (ad*ad) square; row index = rs*ad + pq
  Eigen::MatrixXd v;      // ad square, symmetrized
};

// Per-subject projection vectors phi(r)[k](ij): the contribution of subject
// (r,k) to the effect-vector deviation, scaled so that
// sqrt(N)(p̂ - p) ≈ sqrt(N) Σ_r (1/n_r) Σ_k phi_rk. Shared by the covariance
// reduction and the wild-bootstrap engine.
std::vector<Eigen::MatrixXd> influence_vectors(const Design& design,
                                               const ResidualTable& D);

ResidualTable d_residuals(const Dataset& data, const PairwiseEffects& w);

TauTable tau_hat(const ResidualTable& D, const Design& design);

// Assemble the blockwise covariance of sqrt(N)(ŵ - w) from τ̂ values.
// Entry dispatch is exhaustive over the four index-coincidence flags
// (r==i, r==p', p==i, p==p'); each entry is produced by exactly one of the
// sixteen flag patterns, the all-false pattern giving zero.
Eigen::MatrixXd sigma_hat(const TauTable& tau, const Design& design);

// Single Σ̂ entry for block pair ((r,s),(i,j)) and offsets ((p,q),(p',q')).
double sigma_entry(const TauTable& tau, const Design& design, int r, int s,
                   int i, int j, int p, int q, int p2, int q2);

// V̂ = E Σ̂ E' with E = I_ad (x) (1/ad) 1'_ad, symmetrized.
Eigen::MatrixXd v_hat(const Eigen::MatrixXd& sigma, const Design& design);

// Full pipeline: residuals -> τ̂ -> Σ̂ -> V̂.
CovarianceEstimate estimate_covariance(const Dataset& data,
                                       const PairwiseEffects& w);

// Clip negative eigenvalues at zero (for sampling paths that need PSD).
Eigen::MatrixXd clip_psd(const Eigen::MatrixXd& m);

}  // namespace rankmctp
