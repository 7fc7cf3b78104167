#pragma once

#include <Eigen/Dense>

#include "rankmctp/dataset.hpp"

namespace rankmctp {

// Matrix of pairwise relative effects. w(rs, ij) estimates the probability
// that a draw from cell rs lies below an independent draw from cell ij
// (ties counted half), with flat cell indices rs = r*d+s, ij = i*d+j.
struct PairwiseEffects {
  Eigen::MatrixXd w;
};

// Relative treatment effects p(ij) = mean over rs of w(rs, ij).
struct EffectVector {
  Eigen::VectorXd p;
};

// Estimate every pairwise effect from two-cell pooled midranks.
PairwiseEffects pairwise_effects(const Dataset& data);

// Reduce pairwise effects to the effect vector: p = E * w with
// E = I_ad (x) (1/ad) 1'_ad.
EffectVector relative_effects(const PairwiseEffects& w, const Design& design);

}  // namespace rankmctp
