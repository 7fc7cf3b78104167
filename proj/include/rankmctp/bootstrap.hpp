#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "rankmctp/ats.hpp"
#include "rankmctp/covariance.hpp"
#include "rankmctp/mctp.hpp"

namespace rankmctp {

struct BootstrapConfig {
  int replicates = 1000;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  int threads = 0;
  // When true, replicates studentize with the original V̂ instead of the
  // per-replicate re-estimate.
  bool fixed_variance = false;

  void validate() const {
    if (replicates < 100) throw validation_error("BAD_CONFIG", "need at least 100 replicates");
    if (!(alpha > 0 && alpha < 1)) throw validation_error("BAD_ALPHA", "alpha not in (0,1)");
  }
};

// One wild replicate: effect-vector perturbation and its covariance
// re-estimate, both built from subject-shared sign flips.
struct WildReplicate {
  Eigen::VectorXd p_eps;
  Eigen::MatrixXd v_eps;
};

// Replicate engine. Precomputes per-subject influence vectors once; each
// replicate draws one Rademacher sign per subject (shared across repeated
// measures) in fixed (group, subject) order.
class WildEngine {
public:
  WildEngine(const Dataset& data, const PairwiseEffects& w);

  WildReplicate replicate(std::uint64_t replicate_seed,
                          bool fixed_variance = false) const;

  const Eigen::VectorXd& p_hat() const { return p_hat_; }
  const Eigen::MatrixXd& v_hat() const { return v_hat_; }
  const Design& design() const { return design_; }
  int n_total() const { return n_total_; }

  // Deterministic parallel map over replicates: out[b] = f(replicate(seed, b)).
  std::vector<double> map_replicates(
      const BootstrapConfig& cfg,
      const std::function<double(const WildReplicate&)>& f) const;

private:
  Design design_;
  int n_total_;
  std::vector<Eigen::MatrixXd> phi_;   // per group: n_i x ad influence rows
  std::vector<Eigen::MatrixXd> gram_;  // per group: Σ_k phi phi'
  Eigen::VectorXd p_hat_;
  Eigen::MatrixXd v_hat_;
};

// Wild-bootstrap MCTP: same statistics as the asymptotic procedure but the
// critical value is the conditional equicoordinate quantile of the
// studentized replicate statistics.
McTpResult boot_mctp(const Dataset& data, const ContrastFamily& c,
                     const BootstrapConfig& cfg);

// Wild-bootstrap ANOVA-type test.
AtsResult boot_ats(const Dataset& data, const ContrastFamily& c,
                   const BootstrapConfig& cfg);

}  // namespace rankmctp
